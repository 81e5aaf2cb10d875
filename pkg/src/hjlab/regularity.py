"""Holder/Lipschitz modulus measurement and the explicit regularity constants.

The dimensional constant here is configurable: the estimates are meaningful
only up to a constant depending on the dimension, so ``c_dim`` is exposed
(default 10 * d) and every derived quantity is reported as a function of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction
from .hamiltonians import Hamiltonian, gamma_exponent
from .operators import EllipticOperator
from .report import CheckReport
from .symmat import SymMat

__all__ = [
    "StructuralConstants",
    "ModulusReport",
    "theoretical_K",
    "theoretical_L",
    "holder_seminorm",
    "estimate_exponent",
    "barrier_phi",
    "barrier_supersolution_check",
]

_PAIR_NODE_CAP = 5000
_PAIR_SEED = 12345


@dataclass(frozen=True)
class StructuralConstants:
    m: float
    c1: float
    c2: float
    c3: float
    c_f: float
    c_dim: float
    f_norm: float = 0.0

    def __post_init__(self):
        if min(self.m, self.c1, self.c2, self.c3, self.c_f, self.c_dim) <= 0:
            raise ValueError("structural constants must be strictly positive")
        if self.f_norm < 0:
            raise ValueError("f_norm must be nonnegative")

    @staticmethod
    def from_problem(ham: Hamiltonian, op: EllipticOperator, dim: int,
                     f_norm: float = 0.0, c_dim: float | None = None) -> "StructuralConstants":
        return StructuralConstants(m=ham.m, c1=ham.c1, c2=ham.c2, c3=ham.c3,
                                   c_f=op.c_f, c_dim=c_dim if c_dim is not None else 10.0 * dim,
                                   f_norm=f_norm)

    def absorb_source(self) -> "StructuralConstants":
        """Fold the source bound into the Hamiltonian constants (homogeneous
        reduction): c1 += f_norm, c3 += f_norm, f_norm = 0."""
        return StructuralConstants(m=self.m, c1=self.c1 + self.f_norm,
                                   c2=self.c2, c3=self.c3 + self.f_norm,
                                   c_f=self.c_f, c_dim=self.c_dim, f_norm=0.0)

    def to_dict(self) -> dict:
        return {"m": self.m, "c1": self.c1, "c2": self.c2, "c3": self.c3,
                "c_f": self.c_f, "c_dim": self.c_dim, "f_norm": self.f_norm}


def theoretical_K(sc: StructuralConstants) -> float:
    """Explicit Holder constant of the superquadratic barrier argument."""
    if sc.m <= 2:
        raise ValueError("K requires m > 2")
    gamma = gamma_exponent(sc.m)
    gm = sc.c2 * gamma ** sc.m
    term1 = 4.0 ** (sc.m / (sc.m - 1.0)) * (sc.c_f * sc.c_dim / gm) ** (1.0 / (sc.m - 1.0))
    term2 = 4.0 * ((sc.f_norm + sc.c1) / gm) ** (1.0 / sc.m)
    return 2.0 ** (1.0 / (sc.m - 1.0)) * (term1 + term2)


def theoretical_L(sc: StructuralConstants) -> tuple[float, dict]:
    """Explicit Lipschitz constant: the maximum of three branches.

    The first branch involves the Holder exponent of the superquadratic
    regime and is skipped (recorded as None) for m <= 2.  Returns
    (L, branches).
    """
    if sc.m <= 1:
        raise ValueError("L requires m > 1")
    branches: dict = {}
    if sc.m > 2:
        gamma = gamma_exponent(sc.m)
        gm = sc.c2 * gamma ** sc.m
        branches["holder"] = 2.0 ** (1.0 / (sc.m - 1.0)) * (
            (sc.c_f * sc.c_dim / gm) ** (1.0 / (sc.m - 1.0))
            + (sc.c1 / gm) ** (1.0 / sc.m)
        )
    else:
        branches["holder"] = None
    branches["doubling"] = 2.0 * (3.0 ** sc.m * sc.c_f * sc.c_dim * sc.c3 / sc.c2) ** (1.0 / (sc.m - 1.0))
    branches["source"] = (sc.c1 / sc.c3) ** (1.0 / sc.m)
    val = max(v for v in branches.values() if v is not None)
    return val, branches


@dataclass(frozen=True)
class ModulusReport:
    gamma_hat: float  # NaN when the field is flat and the fit is undefined
    seminorm: float
    gamma_used: float
    lipschitz_estimate: float
    pair_count: int
    margin: float
    scales: list
    omegas: list

    def to_dict(self) -> dict:
        gh = self.gamma_hat
        return {
            "gamma_hat": None if np.isnan(gh) else float(gh),
            "seminorm": self.seminorm,
            "gamma_used": self.gamma_used,
            "lipschitz_estimate": self.lipschitz_estimate,
            "pair_count": self.pair_count,
            "margin": self.margin,
            "scales": list(self.scales),
            "omegas": list(self.omegas),
        }


def _subdomain_points(u: GridFunction, margin: float):
    if margin <= 0:
        raise ValueError("margin must be positive")
    pts = u.grid.nodes()
    vals = u.values.ravel()
    lo = np.asarray(u.grid.lower) + margin
    hi = np.asarray(u.grid.upper) - margin
    keep = np.all((pts >= lo - 1e-12) & (pts <= hi + 1e-12), axis=1)
    pts, vals = pts[keep], vals[keep]
    if pts.shape[0] < 2:
        raise ValueError("subdomain is empty after shrinking by the margin")
    if pts.shape[0] > _PAIR_NODE_CAP:
        rng = np.random.default_rng(_PAIR_SEED)
        sel = rng.choice(pts.shape[0], size=_PAIR_NODE_CAP, replace=False)
        sel.sort()
        pts, vals = pts[sel], vals[sel]
    return pts, vals


def _pair_arrays(pts: np.ndarray, vals: np.ndarray):
    iu, ju = np.triu_indices(pts.shape[0], k=1)
    dist = np.linalg.norm(pts[iu] - pts[ju], axis=1)
    dv = np.abs(vals[iu] - vals[ju])
    return dist, dv


def holder_seminorm(u: GridFunction, margin: float, gamma: float) -> float:
    """Max over node pairs of |u(x) - u(y)| / |x - y|^gamma on the interior
    subdomain obtained by shrinking the box by ``margin`` on every side.

    Node count is capped at 5000 by seeded uniform subsampling.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    pts, vals = _subdomain_points(u, margin)
    dist, dv = _pair_arrays(pts, vals)
    return float(np.max(dv / dist ** gamma))


def estimate_exponent(u: GridFunction, margin: float) -> ModulusReport:
    """Fit the growth exponent of the modulus of continuity.

    For dyadic separations r_k = 2^k h the oscillation
    omega(r_k) = max |u(x) - u(y)| over pairs with |x - y| in
    [r_k, r_k (1 + h)] is computed; gamma_hat is the least-squares slope of
    log omega against log r.  A flat field yields gamma_hat = NaN.
    """
    pts, vals = _subdomain_points(u, margin)
    dist, dv = _pair_arrays(pts, vals)
    h = min(u.grid.spacing)
    # Scales approaching the subdomain diameter are excluded: there the
    # oscillation saturates geometrically (extremal pairs no longer fit in
    # the subdomain) and would bias the fitted slope.
    max_dist = float(np.max(dist)) / 4.0
    scales, omegas = [], []
    k = 0
    while True:
        r = (2.0 ** k) * h
        if r > max_dist:
            break
        in_band = (dist >= r * (1 - 1e-12)) & (dist <= r * (1.0 + h) + 1e-12)
        if np.any(in_band):
            scales.append(r)
            omegas.append(float(np.max(dv[in_band])))
        k += 1
    if len(scales) < 4:
        raise ValueError("fewer than 4 dyadic separation scales available")
    scales_a = np.array(scales)
    omegas_a = np.array(omegas)
    lip = float(np.max(omegas_a / scales_a))
    if np.max(omegas_a) <= 0.0:
        gamma_hat = float("nan")
        seminorm = 0.0
    else:
        ok = omegas_a > 0
        slope = np.polyfit(np.log(scales_a[ok]), np.log(omegas_a[ok]), 1)[0]
        gamma_hat = float(np.clip(slope, 0.0, 1.05))
        seminorm = float(np.max(dv / dist ** min(gamma_hat, 1.0)))
    return ModulusReport(gamma_hat=gamma_hat, seminorm=seminorm,
                         gamma_used=min(gamma_hat, 1.0) if not np.isnan(gamma_hat) else 1.0,
                         lipschitz_estimate=lip, pair_count=int(dist.size),
                         margin=margin, scales=scales, omegas=omegas)


def barrier_phi(center: np.ndarray, K: float, gamma: float, y: np.ndarray):
    """Value, gradient and Hessian of the barrier K (1/4 - r^2)^(-1) r^gamma,
    r = |y - center|, valid for 0 < r < 1/2."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = y - center
    r = float(np.linalg.norm(z))
    if r == 0.0:
        raise ValueError("barrier is singular at the center")
    if r >= 0.5:
        raise ValueError("barrier pole: need |y - center| < 1/2")
    q = 0.25 - r * r
    value = K * r ** gamma / q

    # radial profile g(r) = r^gamma / q and its derivatives
    g1 = gamma * r ** (gamma - 1.0) / q + 2.0 * r ** (gamma + 1.0) / q ** 2
    g2 = (gamma * (gamma - 1.0) * r ** (gamma - 2.0) / q
          + (4.0 * gamma + 2.0) * r ** gamma / q ** 2
          + 8.0 * r ** (gamma + 2.0) / q ** 3)
    grad = K * g1 * z / r
    rhat = z / r
    outer = np.outer(rhat, rhat)
    hess = K * (g2 * outer + (g1 / r) * (np.eye(len(z)) - outer))
    return value, grad, SymMat(hess)


def barrier_supersolution_check(op: EllipticOperator, ham: Hamiltonian,
                                sc: StructuralConstants, n_samples: int,
                                seed: int, K: float | None = None) -> CheckReport:
    """Certify the barrier as a strict supersolution.

    Checks the scalar inequality -c_f c_dim K + c2 gamma^m K^m / 4^m > f_norm + c1
    (with K from theoretical_K unless overridden) and the pointwise statement
    F(D^2 phi) + H(D phi, y) > f_norm at sampled points 0.01 < |y| < 0.49.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if sc.m <= 2:
        raise ValueError("the barrier construction requires m > 2")
    if K is None:
        K = theoretical_K(sc)
    gamma = gamma_exponent(sc.m)
    scalar_lhs = -sc.c_f * sc.c_dim * K + sc.c2 * gamma ** sc.m / 4.0 ** sc.m * K ** sc.m
    scalar_margin = (sc.f_norm + sc.c1) - scalar_lhs  # > 0 means violation

    rng = np.random.default_rng(seed)
    d = op.dim
    radii = np.exp(rng.uniform(np.log(0.01), np.log(0.49), size=n_samples))
    dirs = rng.normal(size=(n_samples, d))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    ys = radii[:, None] * dirs
    center = np.zeros(d)
    worst = scalar_margin
    witness = ("scalar_inequality", None)
    for y in ys:
        _, grad, hess = barrier_phi(center, K, gamma, y)
        point_val = op(hess) + float(ham.eval(grad[None, :], y[None, :])[0])
        margin = sc.f_norm - point_val  # > 0 means not a strict supersolution
        if margin > worst:
            worst = margin
            witness = ("pointwise", y)
    return CheckReport(
        name="barrier_supersolution", passed=worst <= 0.0, worst_margin=float(worst),
        tolerance=0.0, witness=witness, n_samples=n_samples, seed=seed,
        note=f"K={K}, gamma={gamma}, scalar_margin={scalar_margin}",
    )
