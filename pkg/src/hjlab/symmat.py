"""Small dense symmetric matrices and their spectral calculus.

Everything here works in dimension 1, 2 or 3.  Dimensions 1 and 2 use
closed-form eigendecompositions; dimension 3 runs cyclic Jacobi rotations.
The matrices involved are Hessians, so d stays tiny and the closed forms
beat a general LAPACK call both in speed and in determinism guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SymMat", "sym_eigen", "positive_part", "spectral_norm"]

_MAX_DIM = 3


@dataclass(frozen=True)
class SymMat:
    """A d x d real symmetric matrix, d in {1, 2, 3}.

    Construction symmetrizes the input by averaging with its transpose,
    so ``entries[i, j] == entries[j, i]`` holds exactly.
    """

    entries: np.ndarray = field()

    def __init__(self, entries) -> None:
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not 1 <= a.shape[0] <= _MAX_DIM:
            raise ValueError(f"dimension must be in 1..{_MAX_DIM}, got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        sym = 0.5 * (a + a.T)
        sym.flags.writeable = False
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @staticmethod
    def zero(dim: int) -> "SymMat":
        return SymMat(np.zeros((dim, dim)))

    @staticmethod
    def identity(dim: int) -> "SymMat":
        return SymMat(np.eye(dim))

    @staticmethod
    def diag(*values: float) -> "SymMat":
        return SymMat(np.diag(np.asarray(values, dtype=float)))

    def __add__(self, other: "SymMat") -> "SymMat":
        return SymMat(self.entries + other.entries)

    def __sub__(self, other: "SymMat") -> "SymMat":
        return SymMat(self.entries - other.entries)

    def __neg__(self) -> "SymMat":
        return SymMat(-self.entries)

    def __mul__(self, s: float) -> "SymMat":
        return SymMat(self.entries * s)

    __rmul__ = __mul__

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def __repr__(self) -> str:  # pragma: no cover
        return f"SymMat({self.entries.tolist()})"


def _eigen_1x1(m: np.ndarray):
    return np.array([m[0, 0]]), np.eye(1)


def _eigen_2x2(m: np.ndarray):
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    half_tr = 0.5 * (a + c)
    disc = np.hypot(0.5 * (a - c), b)
    lam = np.array([half_tr + disc, half_tr - disc])
    if disc == 0.0:
        return lam, np.eye(2)
    # Eigenvector for the larger eigenvalue; the other is its rotation.
    if abs(a - lam[0]) >= abs(c - lam[0]):
        v0 = np.array([b, lam[0] - a])
    else:
        v0 = np.array([lam[0] - c, b])
    n = np.hypot(v0[0], v0[1])
    if n == 0.0:
        return lam, np.eye(2)
    v0 = v0 / n
    vecs = np.column_stack([v0, [-v0[1], v0[0]]])
    return lam, vecs


def _eigen_3x3_jacobi(m: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50):
    a = m.copy()
    v = np.eye(3)
    scale = np.max(np.abs(a)) or 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off <= tol * scale:
            break
        for p in range(2):
            for q in range(p + 1, 3):
                if abs(a[p, q]) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(3)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a = 0.5 * (a + a.T)
                v = v @ rot
    lam = np.diag(a).copy()
    order = np.argsort(-lam)
    return lam[order], v[:, order]


def sym_eigen(m: SymMat) -> list[tuple[float, np.ndarray]]:
    """Full eigendecomposition, eigenvalues sorted descending.

    Returns ``[(lambda_i, v_i)]`` with unit eigenvectors such that
    ``sum(lambda_i * outer(v_i, v_i))`` reconstructs ``m``.
    """
    e = m.entries
    if m.dim == 1:
        lam, vecs = _eigen_1x1(e)
    elif m.dim == 2:
        lam, vecs = _eigen_2x2(e)
    else:
        lam, vecs = _eigen_3x3_jacobi(e)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    vecs = vecs[:, order]
    return [(float(lam[i]), vecs[:, i].copy()) for i in range(m.dim)]


def positive_part(m: SymMat) -> SymMat:
    """Projection onto the positive eigenspaces: sum of lambda_i v_i v_i^T over lambda_i > 0."""
    acc = np.zeros_like(m.entries)
    for lam, vec in sym_eigen(m):
        if lam > 0.0:
            acc += lam * np.outer(vec, vec)
    return SymMat(acc)


def spectral_norm(m: SymMat) -> float:
    """Largest absolute eigenvalue."""
    return max(abs(lam) for lam, _ in sym_eigen(m))


# ---------------------------------------------------------------------------
# Batched helpers used by the samplers and by the grid residual.  Shapes are
# (n, d, d) -> (n, d).  Dimensions 1 and 2 are closed-form and vectorized;
# dimension 3 falls back to a per-matrix Jacobi loop.
# ---------------------------------------------------------------------------


def eigvals_batch(ms: np.ndarray) -> np.ndarray:
    """Eigenvalues of a batch of symmetric matrices, sorted descending per row."""
    ms = np.asarray(ms, dtype=float)
    d = ms.shape[-1]
    if d == 1:
        return ms[..., 0, :].copy()
    if d == 2:
        a = ms[..., 0, 0]
        b = 0.5 * (ms[..., 0, 1] + ms[..., 1, 0])
        c = ms[..., 1, 1]
        half_tr = 0.5 * (a + c)
        disc = np.hypot(0.5 * (a - c), b)
        return np.stack([half_tr + disc, half_tr - disc], axis=-1)
    flat = ms.reshape(-1, d, d)
    out = np.empty((flat.shape[0], d))
    for i in range(flat.shape[0]):
        out[i], _ = _eigen_3x3_jacobi(0.5 * (flat[i] + flat[i].T))
    return out.reshape(ms.shape[:-2] + (d,))


def positive_part_norm_batch(ms: np.ndarray) -> np.ndarray:
    """Spectral norm of the positive part: the largest eigenvalue clipped at 0."""
    lam = eigvals_batch(ms)
    return np.clip(lam[..., 0], 0.0, None)


def spectral_norm_batch(ms: np.ndarray) -> np.ndarray:
    lam = eigvals_batch(ms)
    return np.max(np.abs(lam), axis=-1)
