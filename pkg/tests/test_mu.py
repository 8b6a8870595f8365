import math

import numpy as np
import pytest

from dmkit.exceptions import DimensionError
from dmkit.multiloop import mu_diag, mu_quick, mu_upper


def brute_force_mu(M: np.ndarray, n: int = 4000) -> float:
    """max over theta of rho(M diag(1, e^{j theta})), exact for 2x2 matrices."""
    best = 0.0
    for t in np.linspace(-math.pi, math.pi, n):
        q = np.array([1.0, np.exp(1j * t)])
        best = max(best, float(np.max(np.abs(np.linalg.eigvals(M * q[None, :])))))
    return best


def test_scalar():
    r = mu_diag([[3 + 4j]])
    assert r.upper == r.lower == 5.0
    assert r.delta_worst[0, 0] == pytest.approx(1 / (3 + 4j))


def test_diagonal_matrix():
    r = mu_diag(np.diag([2.0, -3j]))
    assert r.upper == pytest.approx(3.0, rel=1e-6)
    assert r.lower == pytest.approx(3.0, rel=1e-6)


def test_rank_one_matrix():
    u = np.array([1.0, 2.0j])
    v = np.array([3.0, 1.0 - 1.0j])
    M = np.outer(u, v.conj())
    expected = float(np.sum(np.abs(u) * np.abs(v)))
    r = mu_diag(M)
    assert r.upper == pytest.approx(expected, rel=1e-5)
    assert r.lower == pytest.approx(expected, rel=1e-5)


def test_random_matrices_against_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(20):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ref = brute_force_mu(M)
        r = mu_diag(M, seed=3)
        assert r.lower <= r.upper
        assert r.upper == pytest.approx(ref, rel=5e-3)
        assert r.lower == pytest.approx(ref, rel=5e-3)


def test_worst_delta_makes_return_difference_singular():
    rng = np.random.default_rng(5)
    for n in (2, 3):
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        r = mu_diag(M, seed=1)
        D = r.delta_worst
        assert np.allclose(D, np.diag(np.diag(D)))
        assert abs(np.linalg.det(np.eye(n) - M @ D)) < 1e-6
        assert np.linalg.norm(D, 2) == pytest.approx(1.0 / r.lower, rel=1e-9)
        assert r.gap <= 0.005


@pytest.mark.parametrize("c", [4.0, 0.25])
def test_bounds_scale_with_the_matrix(c):
    rng = np.random.default_rng(2)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a, b = mu_diag(M, seed=9), mu_diag(c * M, seed=9)
    assert b.upper == pytest.approx(c * a.upper, rel=1e-9)
    assert b.lower == pytest.approx(c * a.lower, rel=1e-9)


def test_upper_bound_never_exceeds_the_norm():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    upper, d = mu_upper(M)
    assert upper <= np.linalg.norm(M, 2) * (1 + 1e-12)
    assert d[0] == 1.0


def test_quick_bounds_bracket_the_full_ones():
    rng = np.random.default_rng(8)
    for _ in range(5):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        up, lo, _ = mu_quick(M)
        full = mu_diag(M)
        assert lo <= full.upper * (1 + 1e-9)
        assert up >= full.lower * (1 - 1e-9)


def test_zero_matrix():
    r = mu_diag(np.zeros((2, 2)))
    assert r.upper == 0.0 and r.lower == 0.0


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.zeros((0, 0)), [[1.0, np.nan], [0.0, 1.0]]])
def test_bad_input(bad):
    with pytest.raises(DimensionError):
        mu_diag(bad)
