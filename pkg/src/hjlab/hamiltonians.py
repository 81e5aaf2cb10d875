"""Superlinear Hamiltonians H(p, x) and samplers for their structural bounds.

The bounds checked here, with declared constants (m, c1, c2, c3):

    growth:        -c1 + c2 |p|^m  <=  H(p,x)  <=  c3 (1 + |p|^m)
    x-continuity:  |H(p,x) - H(p,y)|  <=  (c3 |p|^m + c1) |x - y|
    p-continuity:  |H(p,x) - H(q,x)|  <=  c3 (|p| + |q| + 1)^(m-1) |p - q|

All samplers draw |p| log-uniformly up to 50 (violations of growth bounds
show up at large |p|) and are deterministic given (n_samples, seed).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .report import CheckReport, make_report

__all__ = [
    "Hamiltonian",
    "PowerHamiltonian",
    "CustomHamiltonian",
    "h_eval",
    "verify_growth",
    "verify_x_continuity",
    "verify_p_continuity",
    "gamma_exponent",
]

INEQ_TOL = 1e-9
_P_MAX = 50.0
_P_MIN = 1e-3  # lower edge of the log-uniform |p| range; exact zeros added separately


def _as_field(value) -> Callable[[np.ndarray], np.ndarray]:
    if callable(value):
        return value
    c = float(value)
    return lambda x: np.full(np.asarray(x).shape[:-1], c)


class Hamiltonian:
    """Base class. ``eval`` is vectorized over leading axes of p and x."""

    dim: int
    m: float
    c1: float
    c2: float
    c3: float

    def eval(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_p(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Gradient in p; finite-difference fallback, overridden where analytic."""
        p = np.asarray(p, dtype=float)
        out = np.empty_like(p)
        delta = 1e-6 * (1.0 + np.abs(p))
        for a in range(p.shape[-1]):
            dp = np.zeros_like(p)
            dp[..., a] = delta[..., a]
            out[..., a] = (self.eval(p + dp, x) - self.eval(p - dp, x)) / (2.0 * delta[..., a])
        return out

    def __call__(self, p, x) -> float:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(self.eval(p[None, :], x[None, :])[0])


class PowerHamiltonian(Hamiltonian):
    """H(p, x) = a(x) (1 + |p|^2)^(m/2) + V(x).

    ``a`` and ``V`` are constants or callables on point arrays.  Bound and
    Lipschitz declarations (a in [c_star, c_upper], V in [0, c_upper]) feed
    the default structural constants:

        c1 = c_upper
        c2 = c_star
        c3 = 2^(m/2) c_upper + c_upper + lip_a + lip_v

    sufficient for all three bounds above.  When a and V are callables the
    declared bounds are spot-checked by sampling over ``domain``.
    """

    def __init__(self, a, V, m: float, dim: int = 1, *,
                 c_star: float | None = None, c_upper: float | None = None,
                 lip_a: float = 0.0, lip_v: float = 0.0,
                 c1: float | None = None, c2: float | None = None, c3: float | None = None,
                 domain: tuple | None = None, check_samples: int = 512):
        if m <= 1:
            raise ValueError("growth exponent m must exceed 1")
        self.m = float(m)
        self.dim = int(dim)
        self._a = _as_field(a)
        self._v = _as_field(V)
        if c_star is None or c_upper is None:
            if callable(a) or callable(V):
                raise ValueError("callable coefficients need declared c_star/c_upper")
            a0, v0 = float(a), float(V)
            c_star = a0 if c_star is None else c_star
            c_upper = max(a0, v0) if c_upper is None else c_upper
        if not 0 < c_star <= c_upper:
            raise ValueError("need 0 < c_star <= c_upper")
        self.c_star, self.c_upper = float(c_star), float(c_upper)
        self.lip_a, self.lip_v = float(lip_a), float(lip_v)
        self.c1 = float(c1) if c1 is not None else self.c_upper
        self.c2 = float(c2) if c2 is not None else self.c_star
        self.c3 = (float(c3) if c3 is not None
                   else 2.0 ** (self.m / 2.0) * self.c_upper + self.c_upper
                   + self.lip_a + self.lip_v)
        if min(self.c1, self.c2, self.c3) <= 0:
            raise ValueError("structural constants must be positive")
        if domain is not None and (callable(a) or callable(V)):
            self._spot_check_bounds(domain, check_samples)

    def _spot_check_bounds(self, domain, n):
        lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in domain)
        rng = np.random.default_rng(0)
        xs = rng.uniform(lo, hi, size=(n, len(lo)))
        av, vv = self._a(xs), self._v(xs)
        if np.any(av < self.c_star - 1e-12) or np.any(av > self.c_upper + 1e-12):
            raise ValueError("sampled a(x) leaves the declared [c_star, c_upper] range")
        if np.any(vv < -1e-12) or np.any(vv > self.c_upper + 1e-12):
            raise ValueError("sampled V(x) leaves the declared [0, c_upper] range")

    def eval(self, p, x):
        p = np.asarray(p, dtype=float)
        sq = 1.0 + np.sum(p * p, axis=-1)
        return self._a(x) * sq ** (self.m / 2.0) + self._v(x)

    def grad_p(self, p, x):
        p = np.asarray(p, dtype=float)
        sq = 1.0 + np.sum(p * p, axis=-1)
        coef = self._a(x) * self.m * sq ** (self.m / 2.0 - 1.0)
        return coef[..., None] * p


class CustomHamiltonian(Hamiltonian):
    """Arbitrary H with declared exponent and structural constants."""

    def __init__(self, func, m: float, c1: float, c2: float, c3: float, dim: int = 1,
                 grad=None):
        if m <= 1:
            raise ValueError("growth exponent m must exceed 1")
        if min(c1, c2, c3) <= 0:
            raise ValueError("structural constants must be positive")
        self.func = func
        self.m = float(m)
        self.c1, self.c2, self.c3 = float(c1), float(c2), float(c3)
        self.dim = int(dim)
        self._grad = grad

    def eval(self, p, x):
        return np.asarray(self.func(np.asarray(p, dtype=float), np.asarray(x, dtype=float)),
                          dtype=float)

    def grad_p(self, p, x):
        if self._grad is not None:
            return np.asarray(self._grad(p, x), dtype=float)
        return super().grad_p(p, x)


def h_eval(ham: Hamiltonian, p, x) -> float:
    return ham(p, x)


def gamma_exponent(m: float) -> float:
    """Holder exponent (m - 2)/(m - 1) of the superquadratic regime."""
    if m <= 2:
        raise ValueError("the Holder exponent requires m > 2")
    return (m - 2.0) / (m - 1.0)


def _default_domain(dim: int) -> tuple[np.ndarray, np.ndarray]:
    return -np.ones(dim), np.ones(dim)


def _sample_p(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """Directions uniform on the sphere, magnitudes log-uniform in (1e-3, 50],
    with the first sample pinned at p = 0."""
    mag = np.exp(rng.uniform(np.log(_P_MIN), np.log(_P_MAX), size=n))
    mag[0] = 0.0
    direc = rng.normal(size=(n, dim))
    direc /= np.maximum(np.linalg.norm(direc, axis=-1, keepdims=True), 1e-300)
    return mag[:, None] * direc


def _sample_x(rng, n, domain, dim):
    lo, hi = domain if domain is not None else _default_domain(dim)
    return rng.uniform(np.atleast_1d(lo), np.atleast_1d(hi), size=(n, dim))


def verify_growth(ham: Hamiltonian, n_samples: int, seed: int,
                  domain: tuple | None = None) -> CheckReport:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = _sample_p(rng, n_samples, ham.dim)
    x = _sample_x(rng, n_samples, domain, ham.dim)
    h = ham.eval(p, x)
    pm = np.linalg.norm(p, axis=-1) ** ham.m
    lower_viol = (-ham.c1 + ham.c2 * pm) - h
    upper_viol = h - ham.c3 * (1.0 + pm)
    margins = np.maximum(lower_viol, upper_viol)
    return make_report("a3_growth", margins, list(zip(p, x)), INEQ_TOL, n_samples, seed)


def verify_x_continuity(ham: Hamiltonian, n_samples: int, seed: int,
                        domain: tuple | None = None) -> CheckReport:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = _sample_p(rng, n_samples, ham.dim)
    x = _sample_x(rng, n_samples, domain, ham.dim)
    y = _sample_x(rng, n_samples, domain, ham.dim)
    lhs = np.abs(ham.eval(p, x) - ham.eval(p, y))
    pm = np.linalg.norm(p, axis=-1) ** ham.m
    rhs = (ham.c3 * pm + ham.c1) * np.linalg.norm(x - y, axis=-1)
    return make_report("a3_x_continuity", lhs - rhs, list(zip(p, x, y)),
                       INEQ_TOL, n_samples, seed)


def verify_p_continuity(ham: Hamiltonian, n_samples: int, seed: int,
                        domain: tuple | None = None) -> CheckReport:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = _sample_p(rng, n_samples, ham.dim)
    q = _sample_p(rng, n_samples, ham.dim)
    x = _sample_x(rng, n_samples, domain, ham.dim)
    lhs = np.abs(ham.eval(p, x) - ham.eval(q, x))
    np_, nq = np.linalg.norm(p, axis=-1), np.linalg.norm(q, axis=-1)
    rhs = ham.c3 * (np_ + nq + 1.0) ** (ham.m - 1.0) * np.linalg.norm(p - q, axis=-1)
    return make_report("a3_p_continuity", lhs - rhs, list(zip(p, q, x)),
                       INEQ_TOL, n_samples, seed)
