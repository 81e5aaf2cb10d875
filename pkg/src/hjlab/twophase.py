"""Two-phase free boundary construction via regularization and continuation.

The target problem prescribes

    -Tr(A(x) D^2 u) + H(Du, x) = lambda_+ where u > 0, lambda_- where u < 0,

with Dirichlet data g.  It is approached through the regularized family

    eps*u - Tr(A D^2 u) + H(Du, x) = lambda_+ h_eps(u) + lambda_- (1 - h_eps(u)),

where h_eps is a clamped and mollified phase indicator, solved by a damped
Picard iteration at each eps and continued along a decreasing eps schedule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import ndimage

from .discretize import DiscreteProblem, discrete_residual, interior_operator_value
from .grid import Grid, GridFunction
from .hamiltonians import Hamiltonian
from .operators import WeightedTrace
from .report import CheckReport
from .solver import SolveOutcome, SolveParams, boundary_interpolant, solve_dirichlet

__all__ = [
    "TwoPhaseProblem",
    "PhaseDecomposition",
    "FixedPointOutcome",
    "OuterNonConvergenceError",
    "clamp_indicator",
    "mollify",
    "two_phase_rhs",
    "fixed_point_solve",
    "epsilon_continuation",
    "extract_phases",
    "residual_band_check",
    "default_eps_schedule",
]


def default_eps_schedule(start: float = 0.2, stop: float = 1e-3,
                         ratio: float = 0.5) -> tuple:
    """Geometric schedule start, start*ratio, ... down to the last value >= stop."""
    out = []
    e = start
    while e >= stop:
        out.append(e)
        e *= ratio
    return tuple(out)


class OuterNonConvergenceError(RuntimeError):
    def __init__(self, eps: float, outer_iters: int, trace=None):
        super().__init__(
            f"outer fixed-point iteration did not converge at eps={eps} "
            f"after {outer_iters} iterations"
        )
        self.eps = eps
        self.outer_iters = outer_iters
        self.trace = trace


def clamp_indicator(v: GridFunction, eps: float) -> GridFunction:
    """Piecewise-linear ramp (v + eps)/(2 eps) clamped to [0, 1]."""
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    return GridFunction(v.grid, np.clip((v.values + eps) / (2.0 * eps), 0.0, 1.0))


def _bump_kernel(grid: Grid, eps: float) -> np.ndarray:
    """Truncated exponential bump exp(-1/(1 - |z/eps|^2)) sampled at node offsets."""
    radii = [int(np.floor(eps / h)) for h in grid.spacing]
    axes = [np.arange(-r, r + 1) * h for r, h in zip(radii, grid.spacing)]
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = sum(m * m for m in mesh) / (eps * eps)
    with np.errstate(divide="ignore", over="ignore"):
        k = np.where(r2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0)
    return k


def mollify(gv: GridFunction, eps: float) -> GridFunction:
    """Discrete convolution with the normalized bump kernel of radius eps.

    Weights are renormalized node by node over the part of the kernel that
    falls on the grid, so constants are preserved exactly and the output
    stays within the input range.  If eps is below the grid spacing the
    input is returned unchanged with a warning.
    """
    grid = gv.grid
    if eps < max(grid.spacing):
        warnings.warn("mollification radius below grid spacing; returning input unchanged",
                      stacklevel=2)
        return gv
    k = _bump_kernel(grid, eps)
    num = ndimage.convolve(gv.values, k, mode="constant", cval=0.0)
    den = ndimage.convolve(np.ones_like(gv.values), k, mode="constant", cval=0.0)
    return GridFunction(grid, num / den)


def two_phase_rhs(h: GridFunction, lambda_plus: float, lambda_minus: float) -> GridFunction:
    """Pointwise lambda_+ h + lambda_- (1 - h); ranges over [lambda_-, lambda_+]."""
    hv = h.values
    if np.any(hv < -1e-12) or np.any(hv > 1 + 1e-12):
        raise ValueError("phase field values must lie in [0, 1]")
    return GridFunction(h.grid, lambda_plus * hv + lambda_minus * (1.0 - hv))


@dataclass(frozen=True)
class TwoPhaseProblem:
    grid: Grid
    A: WeightedTrace
    ham: Hamiltonian
    lambda_plus: float
    lambda_minus: float
    g: GridFunction
    eps_schedule: tuple = field(default_factory=default_eps_schedule)
    theta: float = 0.5
    tol_fp: float = 1e-6
    max_outer: int = 50
    solver: SolveParams = field(default_factory=SolveParams)

    def __post_init__(self):
        if not 0 < self.lambda_minus <= self.lambda_plus:
            raise ValueError("need 0 < lambda_minus <= lambda_plus")
        if self.ham.m <= 2:
            raise ValueError("two-phase construction requires a superquadratic Hamiltonian (m > 2)")
        if not 0 < self.theta <= 1:
            raise ValueError("damping theta must lie in (0, 1]")
        if any(not 0 < e < 0.25 for e in self.eps_schedule):
            raise ValueError("eps values must lie in (0, 1/4)")
        if any(b > a for a, b in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise ValueError("eps schedule must be decreasing")
        gb = self.g.values[self.grid.boundary_mask()]
        if not 0.0 < float(np.min(gb)) < 2.0 * self.lambda_minus:
            warnings.warn(
                "boundary data violates 0 < min g < 2*lambda_-; the existence "
                "theory behind the construction does not apply",
                stacklevel=2,
            )
        self._check_boundary_nondegeneracy()

    def _check_boundary_nondegeneracy(self):
        # nu^T A nu on boundary nodes, nu the outward axis normal of each face
        pts = self.grid.nodes()
        bmask = self.grid.boundary_mask().ravel()
        mats = self.A.matrices_at(pts[bmask])
        worst = np.inf
        lo = np.asarray(self.grid.lower)
        hi = np.asarray(self.grid.upper)
        bpts = pts[bmask]
        for a in range(self.grid.dim):
            on_lo = np.isclose(bpts[:, a], lo[a])
            on_hi = np.isclose(bpts[:, a], hi[a])
            face = on_lo | on_hi
            if np.any(face):
                worst = min(worst, float(np.min(mats[face][:, a, a])))
        if worst <= 0:
            warnings.warn("boundary nondegeneracy nu^T A nu > 0 fails on sampled "
                          "boundary nodes", stacklevel=2)

    def regularized_rhs(self, v: GridFunction, eps: float) -> GridFunction:
        return two_phase_rhs(mollify(clamp_indicator(v, eps), eps),
                             self.lambda_plus, self.lambda_minus)

    def inner_problem(self, rhs: GridFunction, eps: float) -> DiscreteProblem:
        return DiscreteProblem(grid=self.grid, op=self.A, ham=self.ham,
                               f=rhs, g=self.g, zero_order=eps)


@dataclass(frozen=True)
class FixedPointOutcome:
    u: GridFunction
    converged: bool
    outer_iters: int
    fp_residual: float
    inner_iters_total: int
    final_inner: SolveOutcome


@dataclass(frozen=True)
class PhaseDecomposition:
    positive_mask: np.ndarray
    negative_mask: np.ndarray
    zero_mask: np.ndarray
    free_boundary_cells: list
    zero_threshold: float


def fixed_point_solve(p: TwoPhaseProblem, eps: float,
                      v0: GridFunction | None = None) -> FixedPointOutcome:
    """Damped Picard iteration on the regularized map v -> u_eps^v.

    Convergence is declared when sup|Tv - v| <= tol_fp, or immediately when
    the regularized right-hand sides of v and Tv coincide (then Tv is an
    exact fixed point; this makes the lambda_+ = lambda_- case finish in a
    single outer iteration).
    """
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    v = v0 if v0 is not None else boundary_interpolant(p.grid, p.g)
    warm = v
    inner_total = 0
    outcome = None
    scale = max(abs(p.lambda_plus), abs(p.lambda_minus))
    for k in range(1, p.max_outer + 1):
        rhs_v = p.regularized_rhs(v, eps)
        outcome = solve_dirichlet(p.inner_problem(rhs_v, eps), p.solver, u0=warm)
        inner_total += outcome.iters
        u = outcome.u
        warm = u
        delta = float(np.max(np.abs(u.values - v.values)))
        rhs_u = p.regularized_rhs(u, eps)
        rhs_gap = float(np.max(np.abs(rhs_u.values - rhs_v.values)))
        if outcome.converged and (delta <= p.tol_fp or rhs_gap <= 1e-14 * scale):
            return FixedPointOutcome(u=u, converged=True, outer_iters=k,
                                     fp_residual=delta, inner_iters_total=inner_total,
                                     final_inner=outcome)
        v = GridFunction(p.grid, (1.0 - p.theta) * v.values + p.theta * u.values)
    return FixedPointOutcome(u=outcome.u, converged=False, outer_iters=p.max_outer,
                             fp_residual=delta, inner_iters_total=inner_total,
                             final_inner=outcome)


def epsilon_continuation(p: TwoPhaseProblem):
    """Solve the fixed point along the eps schedule, warm-starting each stage.

    Returns (u_star, trace); trace holds one record per eps with iteration
    counts and the sup-distance to the previous stage's solution.
    """
    v = None
    prev_u = None
    trace = []
    for eps in p.eps_schedule:
        out = fixed_point_solve(p, eps, v0=v)
        delta_prev = (float(np.max(np.abs(out.u.values - prev_u.values)))
                      if prev_u is not None else None)
        trace.append({
            "eps": eps,
            "converged": out.converged,
            "outer_iters": out.outer_iters,
            "fp_residual": out.fp_residual,
            "inner_iters_total": out.inner_iters_total,
            "inner_final_residual": out.final_inner.final_residual,
            "inner_converged": out.final_inner.converged,
            "delta_to_previous": delta_prev,
        })
        if not out.converged:
            raise OuterNonConvergenceError(eps, out.outer_iters, trace)
        prev_u = out.u
        v = out.u
    return prev_u, trace


def extract_phases(u: GridFunction, delta: float | None = None,
                   solver_tol: float = 1e-8) -> PhaseDecomposition:
    """Sign masks with a numerical zero band of half-width delta, and the grid
    cells crossed by the boundary of either phase."""
    if delta is None:
        delta = max(1e-4, 10.0 * solver_tol)
    if delta <= 0:
        raise ValueError("delta must be positive")
    vals = u.values
    pos = vals > delta
    neg = vals < -delta
    zero = ~(pos | neg)
    cells = []
    grid = u.grid
    for idx in product(*(range(n) for n in grid.n_cells)):
        corners = [tuple(np.add(idx, off)) for off in product((0, 1), repeat=grid.dim)]
        p_any = any(pos[c] for c in corners)
        n_any = any(neg[c] for c in corners)
        if (p_any and not all(pos[c] for c in corners)) or \
           (n_any and not all(neg[c] for c in corners)):
            cells.append(idx)
    return PhaseDecomposition(positive_mask=pos, negative_mask=neg, zero_mask=zero,
                              free_boundary_cells=cells, zero_threshold=float(delta))


def residual_band_check(p: TwoPhaseProblem, u: GridFunction,
                        delta: float | None = None,
                        band_tol: float | None = None) -> CheckReport:
    """Check the PDE value -Tr(A D^2 u) + H(Du, x) against the phase bands.

    At every interior node the value must lie in
    [lambda_- - band_tol, lambda_+ + band_tol]; inside the positive phase it
    must sit within band_tol of lambda_+, inside the negative phase within
    band_tol of lambda_-.
    """
    if band_tol is None:
        band_tol = 10.0 * np.sqrt(min(p.grid.spacing)) * (1.0 + u.sup_norm())
    phases = extract_phases(u, delta)
    dp = p.inner_problem(GridFunction.constant(p.grid, 0.0), 0.0)
    q = interior_operator_value(dp, u)
    interior = ~p.grid.boundary_mask()
    pos = phases.positive_mask[interior]
    neg = phases.negative_mask[interior]
    lam_p, lam_m = p.lambda_plus, p.lambda_minus

    viol = np.maximum(lam_m - q, q - lam_p)
    viol = np.maximum(viol, np.where(pos, np.abs(q - lam_p), -np.inf))
    viol = np.maximum(viol, np.where(neg, np.abs(q - lam_m), -np.inf))
    idx = int(np.argmax(viol))
    worst = float(viol[idx])
    witness = p.grid.interior_nodes()[idx]
    return CheckReport(
        name="two_phase_residual_band", passed=bool(worst <= band_tol),
        worst_margin=worst, tolerance=float(band_tol), witness=witness,
        n_samples=int(q.size), seed=0,
        note=f"band [{lam_m}, {lam_p}], zero band delta={phases.zero_threshold}",
    )
