"""Degenerate elliptic operators F(M) on symmetric matrices.

All built-ins are monotone non-increasing (F(M) <= F(N) for M >= N),
positively 1-homogeneous, and carry a declared Lipschitz constant ``c_f``
valid for the one-sided bound

    F(M) - F(N) <= c_f * |(N - M)_+|

with |.| the spectral norm.  The sign convention follows the non-increasing
ellipticity throughout; in particular the Pucci built-ins are the negatives
of the usual extremal operators.
"""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np

from .report import CheckReport, EquivalenceReport, make_report
from .symmat import (
    SymMat,
    eigvals_batch,
    positive_part_norm_batch,
    spectral_norm_batch,
)

__all__ = [
    "EllipticOperator",
    "NegativeTrace",
    "Bellman",
    "PucciMinus",
    "PucciPlus",
    "WeightedTrace",
    "CustomOperator",
    "operator_eval",
    "check_a1",
    "check_homogeneity",
    "check_lemma_equivalence",
]

A1_TOL = 1e-10


class EllipticOperator:
    """Base class; subclasses define ``bulk_eval`` on (n, d, d) stacks."""

    dim: int
    c_f: float
    #: bound on the effective second-order coefficient, used by the CFL rule
    second_order_bound: float

    def bulk_eval(self, ms: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, m: SymMat) -> float:
        if m.dim != self.dim:
            raise ValueError(f"operator dim {self.dim} != matrix dim {m.dim}")
        return float(self.bulk_eval(m.entries[None, :, :])[0])


class NegativeTrace(EllipticOperator):
    """F(M) = -Tr(M); satisfies the one-sided bound with c_f = d."""

    def __init__(self, dim: int, c_f: float | None = None):
        self.dim = dim
        self.c_f = float(c_f) if c_f is not None else float(dim)
        self.second_order_bound = 1.0

    def bulk_eval(self, ms):
        return -np.trace(ms, axis1=-2, axis2=-1)


class Bellman(EllipticOperator):
    """F(M) = min over the family of -Tr(A_alpha M).

    Every coefficient matrix should be PSD with spectral norm <= c_f / d;
    violations are allowed (so they can be caught by the verifiers) but
    trigger a warning at construction.
    """

    def __init__(self, matrices: Sequence, c_f: float):
        mats = [SymMat(a).entries for a in matrices]
        if not mats:
            raise ValueError("Bellman family must be nonempty")
        self.dim = mats[0].shape[0]
        if any(a.shape[0] != self.dim for a in mats):
            raise ValueError("all coefficient matrices must share one dimension")
        self.matrices = np.stack(mats)
        self.c_f = float(c_f)
        lams = eigvals_batch(self.matrices)
        if np.any(lams[:, -1] < -1e-12) or np.any(lams[:, 0] > self.c_f / self.dim + 1e-12):
            warnings.warn(
                "Bellman coefficient matrix outside 0 <= A <= (c_f/d) I; "
                "declared c_f will not certify the one-sided bound",
                stacklevel=2,
            )
        self.second_order_bound = float(np.max(np.abs(lams)))

    def bulk_eval(self, ms):
        traces = np.einsum("aij,...ij->...a", self.matrices, ms)
        return -np.max(traces, axis=-1)  # min of -t == -max of t


class _Pucci(EllipticOperator):
    def __init__(self, lam: float, big_lam: float, dim: int):
        if not 0 < lam <= big_lam:
            raise ValueError("Pucci parameters require 0 < lam <= Lam")
        self.lam = float(lam)
        self.big_lam = float(big_lam)
        self.dim = dim
        self.c_f = dim * self.big_lam
        self.second_order_bound = self.big_lam


class PucciMinus(_Pucci):
    """Negated maximal Pucci operator: -(Lam * sum(e_i+) - lam * sum(e_i-))."""

    def bulk_eval(self, ms):
        e = eigvals_batch(ms)
        pos = np.clip(e, 0.0, None).sum(axis=-1)
        neg = np.clip(-e, 0.0, None).sum(axis=-1)
        return -(self.big_lam * pos - self.lam * neg)


class PucciPlus(_Pucci):
    """Negated minimal Pucci operator: -(lam * sum(e_i+) - Lam * sum(e_i-))."""

    def bulk_eval(self, ms):
        e = eigvals_batch(ms)
        pos = np.clip(e, 0.0, None).sum(axis=-1)
        neg = np.clip(-e, 0.0, None).sum(axis=-1)
        return -(self.lam * pos - self.big_lam * neg)


class WeightedTrace(EllipticOperator):
    """F(M; x) = -Tr(A(x) M) for a PSD matrix field A.

    ``A`` may be a constant matrix or a callable mapping points (n, d_x)
    to matrices (n, d, d).  The x-dependent form is evaluated through
    ``bulk_eval_at``; plain ``bulk_eval`` requires a constant field.
    """

    def __init__(self, A, dim: int, c_f: float | None = None,
                 second_order_bound: float | None = None):
        self.dim = dim
        if callable(A):
            self.A = A
            self.constant_matrix = None
            if second_order_bound is None:
                raise ValueError("x-dependent WeightedTrace needs an explicit second_order_bound")
            self.second_order_bound = float(second_order_bound)
        else:
            self.constant_matrix = SymMat(A).entries
            if self.constant_matrix.shape[0] != dim:
                raise ValueError("matrix dimension mismatch")
            self.A = None
            self.second_order_bound = float(spectral_norm_batch(self.constant_matrix[None])[0])
        self.c_f = float(c_f) if c_f is not None else dim * self.second_order_bound

    def bulk_eval(self, ms):
        if self.constant_matrix is None:
            raise ValueError("x-dependent WeightedTrace: use bulk_eval_at(ms, xs)")
        return -np.einsum("ij,...ij->...", self.constant_matrix, ms)

    def bulk_eval_at(self, ms, xs):
        if self.constant_matrix is not None:
            return self.bulk_eval(ms)
        a = self.A(np.asarray(xs, dtype=float))
        return -np.einsum("...ij,...ij->...", a, ms)

    def matrices_at(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.constant_matrix is not None:
            return np.broadcast_to(self.constant_matrix, xs.shape[:-1] + (self.dim, self.dim))
        return self.A(xs)


class CustomOperator(EllipticOperator):
    """Wrap an arbitrary F: SymMat -> real with declared constants.

    Used mainly for adversarial fixtures in the verifier tests.
    """

    def __init__(self, func: Callable[[SymMat], float], dim: int, c_f: float,
                 second_order_bound: float | None = None):
        self.func = func
        self.dim = dim
        self.c_f = float(c_f)
        self.second_order_bound = float(second_order_bound if second_order_bound is not None else c_f)

    def bulk_eval(self, ms):
        ms = np.asarray(ms, dtype=float)
        flat = ms.reshape(-1, self.dim, self.dim)
        out = np.array([self.func(SymMat(f)) for f in flat])
        return out.reshape(ms.shape[:-2])


def operator_eval(op: EllipticOperator, m: SymMat) -> float:
    return op(m)


def _sample_symmetric(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.uniform(-1.0, 1.0, size=(n, d, d))
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def _sample_psd(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.uniform(-1.0, 1.0, size=(n, d, d))
    return np.einsum("nik,njk->nij", g, g)


def check_a1(op: EllipticOperator, n_samples: int, seed: int) -> CheckReport:
    """Sampled test of F(M) - F(N) <= c_f |(N - M)_+|."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = _sample_symmetric(rng, n_samples, op.dim)
    n = _sample_symmetric(rng, n_samples, op.dim)
    margins = op.bulk_eval(m) - op.bulk_eval(n) - op.c_f * positive_part_norm_batch(n - m)
    return make_report("a1_one_sided_bound", margins, list(zip(m, n)),
                       A1_TOL, n_samples, seed)


def check_homogeneity(op: EllipticOperator, n_samples: int, seed: int) -> CheckReport:
    """Sampled test of positive 1-homogeneity, F(sM) = s F(M) for s >= 0."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = _sample_symmetric(rng, n_samples, op.dim)
    s = rng.uniform(0.0, 10.0, size=n_samples)
    s[0] = 0.0  # always exercise F(0) = 0
    f_m = op.bulk_eval(m)
    f_sm = op.bulk_eval(s[:, None, None] * m)
    margins = np.abs(f_sm - s * f_m) / (1.0 + np.abs(s * f_m)) - A1_TOL
    return make_report("a2_homogeneity", margins, list(zip(m, s)), 0.0, n_samples, seed,
                       note="margin is normalized deviation minus tolerance")


def check_lemma_equivalence(op: EllipticOperator, n_samples: int, seed: int) -> EquivalenceReport:
    """Check that the one-sided bound agrees with (Lipschitz and monotone).

    The three statements are sampled independently on matched sample sets;
    the report passes when the aggregate verdicts satisfy
    a1 <=> (lipschitz and monotone).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    a1 = check_a1(op, n_samples, seed)

    rng = np.random.default_rng(seed)
    m = _sample_symmetric(rng, n_samples, op.dim)
    n = _sample_symmetric(rng, n_samples, op.dim)
    lip_margins = np.abs(op.bulk_eval(m) - op.bulk_eval(n)) - op.c_f * spectral_norm_batch(n - m)
    lip = make_report("lipschitz", lip_margins, list(zip(m, n)), A1_TOL, n_samples, seed)

    # Monotonicity pairs with M >= N by construction: N = M - PSD.
    psd = _sample_psd(rng, n_samples, op.dim)
    n_mono = m - psd
    mono_margins = op.bulk_eval(m) - op.bulk_eval(n_mono)
    mono = make_report("monotone_nonincreasing", mono_margins,
                       list(zip(m, n_mono)), A1_TOL, n_samples, seed)

    passed = a1.passed == (lip.passed and mono.passed)
    return EquivalenceReport(passed=passed, a1=a1, lipschitz=lip, monotone=mono)
