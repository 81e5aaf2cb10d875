import numpy as np
import pytest

from hjlab.symmat import (
    SymMat,
    eigvals_batch,
    positive_part,
    positive_part_norm_batch,
    spectral_norm,
    spectral_norm_batch,
    sym_eigen,
)


def test_construction_symmetrizes():
    m = SymMat([[1.0, 2.0], [0.0, 3.0]])
    assert m.entries[0, 1] == m.entries[1, 0] == 1.0


def test_rejects_unsupported_dimension():
    with pytest.raises(ValueError):
        SymMat(np.eye(4))


def test_algebra():
    a = SymMat.diag(1.0, 2.0)
    b = SymMat.identity(2)
    assert np.allclose((a + b).entries, np.diag([2.0, 3.0]))
    assert np.allclose((a - b).entries, np.diag([0.0, 1.0]))
    assert np.allclose((a * 2.0).entries, np.diag([2.0, 4.0]))
    assert np.allclose((2.0 * a).entries, np.diag([2.0, 4.0]))
    assert (-a).trace() == -3.0
    assert SymMat.zero(3).trace() == 0.0


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_eigen_matches_numpy(dim):
    rng = np.random.default_rng(7)
    for _ in range(50):
        g = rng.normal(size=(dim, dim))
        m = SymMat(g + g.T)
        pairs = sym_eigen(m)
        vals = np.array([v for v, _ in pairs])
        ref = np.sort(np.linalg.eigvalsh(m.entries))[::-1]
        assert np.allclose(vals, ref, atol=1e-10)
        for lam, vec in pairs:
            assert np.allclose(m.entries @ vec, lam * vec, atol=1e-8)
            assert np.isclose(np.linalg.norm(vec), 1.0)


def test_eigen_descending_order():
    pairs = sym_eigen(SymMat.diag(-1.0, 5.0, 2.0))
    vals = [v for v, _ in pairs]
    assert vals == sorted(vals, reverse=True)


def test_positive_part():
    m = SymMat.diag(3.0, -2.0)
    p = positive_part(m)
    assert np.allclose(p.entries, np.diag([3.0, 0.0]))
    # idempotent and PSD
    assert np.allclose(positive_part(p).entries, p.entries)
    assert np.min(np.linalg.eigvalsh(p.entries)) >= -1e-12


def test_spectral_norm():
    assert spectral_norm(SymMat.diag(-4.0, 3.0)) == pytest.approx(4.0)
    assert spectral_norm(SymMat.zero(2)) == 0.0


def test_batched_helpers_match_scalar():
    rng = np.random.default_rng(11)
    g = rng.normal(size=(40, 3, 3))
    ms = 0.5 * (g + np.swapaxes(g, -1, -2))
    ev = eigvals_batch(ms)
    sn = spectral_norm_batch(ms)
    pp = positive_part_norm_batch(ms)
    for i in range(ms.shape[0]):
        ref = np.sort(np.linalg.eigvalsh(ms[i]))[::-1]
        assert np.allclose(np.sort(ev[i])[::-1], ref, atol=1e-9)
        assert np.isclose(sn[i], np.max(np.abs(ref)), atol=1e-9)
        assert np.isclose(pp[i], np.max(np.clip(ref, 0.0, None)), atol=1e-9)
