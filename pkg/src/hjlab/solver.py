"""Pseudo-time iteration driving the discrete residual to zero.

The update is explicit: u <- u - dt * residual(u), with dt chosen from

    dt = pseudo_dt * h^2 / (2 d Lam_F + h sigma_max d + h^2 zero_order)

where Lam_F bounds the second-order coefficient and sigma_max is the
largest Lax-Friedrichs viscosity in the current sweep.  Fixed points of
the update are exactly the solutions of the discrete scheme; the explicit
form tolerates the kinks of F (inf of linear maps) and of the flux.

Boundary nodes are set to the Dirichlet data at initialization and their
residual stays identically zero, so the update never moves them.

For 1D problems with a power-growth Hamiltonian and a (weighted) trace
operator the sweep runs in a numba kernel; everything else takes the
generic vectorized path.  Both paths implement the same formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretize import DiscreteProblem, discrete_residual, interior_operator_value
from .grid import Grid, GridFunction
from .hamiltonians import PowerHamiltonian
from .operators import NegativeTrace, WeightedTrace
from .report import CheckReport

__all__ = [
    "SolveParams",
    "SolveOutcome",
    "NanAbortError",
    "solve_dirichlet",
    "comparison_check",
    "boundary_interpolant",
]


class NanAbortError(RuntimeError):
    """Raised when an iterate stops being finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite values in the iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolveParams:
    tol: float = 1e-8
    max_iters: int = 200_000
    pseudo_dt: float = 0.9
    damping: float = 0.5
    log_every: int = 1000

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.pseudo_dt <= 1:
            raise ValueError("pseudo_dt must lie in (0, 1]")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iters < 1 or self.log_every < 1:
            raise ValueError("max_iters and log_every must be >= 1")


@dataclass(frozen=True)
class SolveOutcome:
    u: GridFunction
    converged: bool
    final_residual: float
    iters: int
    residual_history: list = field(default_factory=list)

    def history_to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,residual\n")
            for it, r in self.residual_history:
                fh.write(f"{it},{'%.17g' % r}\n")


def boundary_interpolant(grid: Grid, g: GridFunction) -> GridFunction:
    """Multilinear fill of the boundary data: linear in 1D, a transfinite
    (Coons) blend of the four edges in 2D."""
    gv = g.values
    if grid.dim == 1:
        t = np.linspace(0.0, 1.0, grid.shape[0])
        return GridFunction(grid, gv[0] + (gv[-1] - gv[0]) * t)
    nx, ny = grid.shape
    s = np.linspace(0.0, 1.0, nx)[:, None]
    t = np.linspace(0.0, 1.0, ny)[None, :]
    vals = ((1 - s) * gv[0, :][None, :] + s * gv[-1, :][None, :]
            + (1 - t) * gv[:, 0][:, None] + t * gv[:, -1][:, None]
            - ((1 - s) * (1 - t) * gv[0, 0] + s * (1 - t) * gv[-1, 0]
               + (1 - s) * t * gv[0, -1] + s * t * gv[-1, -1]))
    return GridFunction(grid, vals)


def _cfl_dt(p: DiscreteProblem, sigma_max: float, pseudo_dt: float) -> float:
    h = min(p.grid.spacing)
    d = p.grid.dim
    lam = p.op.second_order_bound
    return pseudo_dt * h * h / (2.0 * d * lam + h * sigma_max * d + h * h * p.zero_order)


def _fast_path_fields(p: DiscreteProblem):
    """Extract plain arrays for the numba kernel, or None if not applicable."""
    if p.grid.dim != 1 or not isinstance(p.ham, PowerHamiltonian):
        return None
    x = p.grid.axis_nodes(0)[1:-1][:, None]
    if isinstance(p.op, NegativeTrace):
        a_op = np.ones(x.shape[0])
    elif isinstance(p.op, WeightedTrace):
        a_op = p.op.matrices_at(x)[:, 0, 0].copy()
    else:
        return None
    a_h = p.ham._a(x)
    v_h = p.ham._v(x)
    a_h = np.broadcast_to(a_h, (x.shape[0],)).astype(float).copy()
    v_h = np.broadcast_to(v_h, (x.shape[0],)).astype(float).copy()
    sig_override = -1.0 if p.sigma_override is None else float(p.sigma_override)
    return a_op, a_h, v_h, float(p.ham.m), sig_override


_KERNEL = None


def _get_kernel():
    global _KERNEL
    if _KERNEL is None:
        from ._kernels import sweep_1d_power

        _KERNEL = sweep_1d_power
    return _KERNEL


def solve_dirichlet(p: DiscreteProblem, params: SolveParams | None = None,
                    u0: GridFunction | None = None) -> SolveOutcome:
    """Iterate to a solution of the discrete Dirichlet problem.

    Nonconvergence within ``max_iters`` is reported through the outcome
    (converged=False), not raised; a non-finite iterate raises NanAbortError.
    The final residual is re-evaluated independently of the iteration loop.
    """
    params = params or SolveParams()
    if u0 is None:
        u0 = boundary_interpolant(p.grid, p.g)
    elif u0.grid != p.grid:
        raise ValueError("u0 must live on the problem grid")
    u = np.array(u0.values)
    bmask = p.grid.boundary_mask()
    u[bmask] = p.g.values[bmask]

    history: list[tuple[int, float]] = []
    fast = _fast_path_fields(p)
    if fast is not None:
        a_op, a_h, v_h, m, sig_override = fast
        kernel = _get_kernel()
        n_hist = params.max_iters // params.log_every + 2
        hist_iters = np.empty(n_hist, dtype=np.int64)
        hist_res = np.empty(n_hist, dtype=np.float64)
        iters, status, n_rec = kernel(
            u, a_op, a_h, v_h, m, p.f.values, float(p.zero_order),
            p.grid.spacing[0], float(p.op.second_order_bound),
            params.tol * (1.0 - 1e-6), params.max_iters, params.pseudo_dt,
            params.log_every, sig_override, hist_iters, hist_res,
        )
        if status < 0:
            raise NanAbortError(iters)
        history = list(zip(hist_iters[:n_rec].tolist(), hist_res[:n_rec].tolist()))
    else:
        iters = 0
        for it in range(1, params.max_iters + 1):
            gf = GridFunction(p.grid, u) if np.all(np.isfinite(u)) else None
            if gf is None:
                raise NanAbortError(it - 1)
            inner, sigma = interior_operator_value(p, gf, return_sigma=True)
            if p.grid.dim == 1:
                res_int = inner - p.f.values[1:-1]
            else:
                shape = (p.grid.shape[0] - 2, p.grid.shape[1] - 2)
                res_int = (inner.reshape(shape) - p.f.values[1:-1, 1:-1])
            sup = float(np.max(np.abs(res_int))) if res_int.size else 0.0
            iters = it
            if it % params.log_every == 0 or it == 1:
                history.append((it, sup))
            if not np.isfinite(sup):
                raise NanAbortError(it)
            if sup <= params.tol * (1.0 - 1e-6):
                break
            dt = _cfl_dt(p, float(np.max(sigma)), params.pseudo_dt)
            if p.grid.dim == 1:
                u[1:-1] -= dt * res_int
            else:
                u[1:-1, 1:-1] -= dt * res_int

    result = GridFunction(p.grid, u)
    final = discrete_residual(p, result).sup_norm()
    history.append((iters, final))
    return SolveOutcome(
        u=result,
        converged=final <= params.tol,
        final_residual=final,
        iters=int(iters),
        residual_history=history,
    )


def comparison_check(p: DiscreteProblem, u: GridFunction, v: GridFunction,
                     premise_tol: float = 1e-9) -> CheckReport:
    """Discrete comparison sanity check: a subsolution u (residual <= 0) must
    stay below a supersolution v (residual >= 0) when u <= v on the boundary
    and the zero-order coefficient is positive.

    A violated premise is reported in the note, never raised.
    """
    ru = discrete_residual(p, u).values
    rv = discrete_residual(p, v).values
    bmask = p.grid.boundary_mask()
    problems = []
    if p.zero_order <= 0:
        problems.append("zero_order must be positive")
    if np.max(ru[~bmask]) > premise_tol:
        problems.append("u is not a discrete subsolution")
    if np.min(rv[~bmask]) < -premise_tol:
        problems.append("v is not a discrete supersolution")
    if np.max((u.values - v.values)[bmask]) > premise_tol:
        problems.append("u > v somewhere on the boundary")
    if problems:
        return CheckReport(
            name="comparison", passed=False, worst_margin=np.inf, tolerance=premise_tol,
            witness=None, n_samples=u.grid.n_nodes, seed=0,
            note="premise_violated: " + "; ".join(problems),
        )
    diff = u.values - v.values
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[idx])
    return CheckReport(
        name="comparison", passed=worst <= premise_tol, worst_margin=worst,
        tolerance=premise_tol, witness=tuple(int(i) for i in idx),
        n_samples=u.grid.n_nodes, seed=0,
    )
