"""Numba sweep kernel for 1D power-Hamiltonian problems.

Mirrors the generic residual in discretize.py exactly:
second-order term -a_op(x) u'' by central differences, Lax-Friedrichs flux
for H(p, x) = a_h(x) (1 + p^2)^(m/2) + v_h(x), per-node viscosity from the
analytic |dH/dp| at the one-sided gradients and their midpoint.
"""

import numba
import numpy as np

SIGMA_SAFETY = 1.1


@numba.njit(cache=True, fastmath=False)
def sweep_1d_power(u, a_op, a_h, v_h, m, f, zero_order, h, lam_f,
                   tol, max_iters, pseudo_dt, log_every, sigma_override,
                   hist_iters, hist_res):
    """Run the pseudo-time iteration in place on ``u``.

    Returns (iterations, status, n_history); status < 0 flags a NaN abort.
    """
    n = u.shape[0]
    ni = n - 2
    res = np.empty(ni)
    half_m = 0.5 * m
    n_rec = 0
    it = 0
    sup = np.inf
    for it in range(1, max_iters + 1):
        sup = 0.0
        sig_max = 1e-14
        for j in range(ni):
            k = j + 1
            dm = (u[k] - u[k - 1]) / h
            dp = (u[k + 1] - u[k]) / h
            mid = 0.5 * (dm + dp)
            if sigma_override > 0.0:
                s = sigma_override
            else:
                s = 1e-14
                for t in (dm, dp, mid):
                    g = a_h[j] * m * abs(t) * (1.0 + t * t) ** (half_m - 1.0)
                    if g > s:
                        s = g
                s *= SIGMA_SAFETY
            if s > sig_max:
                sig_max = s
            hess = (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (h * h)
            hval = a_h[j] * (1.0 + mid * mid) ** half_m + v_h[j]
            r = (zero_order * u[k] - a_op[j] * hess + hval
                 - 0.5 * s * (dp - dm) - f[k])
            res[j] = r
            ar = abs(r)
            if ar > sup:
                sup = ar
        if not np.isfinite(sup):
            return it, -1, n_rec
        if it % log_every == 0 or it == 1:
            hist_iters[n_rec] = it
            hist_res[n_rec] = sup
            n_rec += 1
        if sup <= tol:
            return it, 0, n_rec
        dt = pseudo_dt * h * h / (2.0 * lam_f + h * sig_max + h * h * zero_order)
        for j in range(ni):
            u[j + 1] -= dt * res[j]
    return max_iters, 1, n_rec
