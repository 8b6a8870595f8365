"""
Structured singular value bounds for diagonal complex uncertainty.

  upper  inf over positive diagonal D of sigma_max(D M D^-1). The search
         starts from the Osborne balancing of |M| and runs over log(D)
         with the first entry pinned to 1.
  lower  max over unitary diagonal Q of the spectral radius of M Q, found
         by a Nelder-Mead search over the phases of Q, not by power
         iteration. The search starts from the phases of the scaled
         singular vectors and from seeded random phases. Delta = Q / lambda
         makes I - M Delta singular with ||Delta|| = 1 / lower.

M is divided by a power of two before either search, so the bounds scale
exactly with M for power-of-two factors.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from dmkit import config
from dmkit.exceptions import DimensionError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MuResult:
    upper: float
    lower: float
    delta_worst: np.ndarray
    frequency: float | None = None
    converged: bool = True
    scaling: np.ndarray | None = None

    @property
    def gap(self) -> float:
        return 0.0 if self.upper == 0 else (self.upper - self.lower) / self.upper


# ---------------------------------------------------------------------------
# Upper bound
# ---------------------------------------------------------------------------

def _scaled_norm(M: np.ndarray, x: np.ndarray) -> float:
    d = np.exp(np.concatenate([[0.0], x]))
    return float(np.linalg.norm((d[:, None] * M) / d[None, :], 2))


def _balanced_start(M: np.ndarray) -> np.ndarray:
    A = np.abs(M)
    if not np.all(A.sum(axis=0) + A.sum(axis=1) > 0):
        return np.zeros(M.shape[0] - 1)
    _, (scale, _) = scipy.linalg.matrix_balance(A, permute=False, separate=True)
    x = -np.log(scale)
    return x[1:] - x[0]


def mu_upper(M: np.ndarray, tol: float = config.MU_TOL,
             max_iter: int = config.MU_MAX_ITER) -> tuple[float, np.ndarray]:
    """Upper bound and the diagonal of the scaling D that achieves it."""
    n = M.shape[0]
    if n == 1:
        return float(abs(M[0, 0])), np.ones(1)
    x0 = _balanced_start(M)
    best_x = min((x0, np.zeros(n - 1)), key=lambda x: _scaled_norm(M, x))
    best = _scaled_norm(M, best_x)
    if best == 0.0:
        return 0.0, np.ones(n)
    for _ in range(max_iter):
        res = scipy.optimize.minimize(
            lambda x: _scaled_norm(M, x), best_x, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": tol * best * 1e-2, "maxiter": 200 * n})
        x = res.x
        # coordinate-wise polish
        for i in range(n - 1):
            def along(t, i=i, x=x):
                y = x.copy()
                y[i] = t
                return _scaled_norm(M, y)
            r = scipy.optimize.minimize_scalar(
                along, bounds=(x[i] - 2.0, x[i] + 2.0), method="bounded",
                options={"xatol": 1e-10})
            if r.fun < _scaled_norm(M, x):
                x = x.copy()
                x[i] = r.x
        value = _scaled_norm(M, x)
        improved = best - value
        if value < best:
            best, best_x = value, x
        if improved <= tol * best:
            break
    return best, np.exp(np.concatenate([[0.0], best_x]))


# ---------------------------------------------------------------------------
# Lower bound
# ---------------------------------------------------------------------------

def _spectral(M: np.ndarray, theta: np.ndarray) -> tuple[float, complex]:
    q = np.exp(1j * np.concatenate([[0.0], theta]))
    ev = np.linalg.eigvals(M * q[None, :])
    i = int(np.argmax(np.abs(ev)))
    return float(abs(ev[i])), complex(ev[i])


def _singular_vector_phases(M: np.ndarray, d: np.ndarray) -> np.ndarray:
    U, _, Vh = np.linalg.svd((d[:, None] * M) / d[None, :])
    u, v = U[:, 0], Vh[0].conj()
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.angle(v / u)
    ph = np.where(np.isfinite(ph), ph, 0.0)
    return ph[1:] - ph[0]


def mu_lower(M: np.ndarray, starts: list[np.ndarray], tol: float = config.MU_TOL,
             max_iter: int = config.MU_MAX_ITER) -> tuple[float, np.ndarray, bool]:
    """Lower bound, the destabilizing diagonal Delta and a convergence flag.

    Each start is refined by Nelder-Mead on the n - 1 free phases (the first
    is pinned to 0); the flag is False if the best run hit max_iter.
    """
    n = M.shape[0]
    best, best_theta, converged = -1.0, np.zeros(n - 1), True
    for theta0 in starts:
        res = scipy.optimize.minimize(
            lambda t: -_spectral(M, t)[0], theta0, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": tol * 1e-3,
                     "maxiter": max_iter * n})
        if -res.fun > best:
            best, best_theta, converged = -res.fun, res.x, bool(res.success)
    rho, lam = _spectral(M, best_theta)
    if rho == 0.0:
        return 0.0, np.zeros((n, n), dtype=complex), converged
    q = np.exp(1j * np.concatenate([[0.0], best_theta]))
    return rho, np.diag(q / lam), converged


# ---------------------------------------------------------------------------
# Both bounds
# ---------------------------------------------------------------------------

def _power_of_two(M: np.ndarray) -> float:
    peak = float(np.max(np.abs(M)))
    return 2.0 ** math.floor(math.log2(peak)) if peak > 0 else 1.0


def mu_diag(M0, tol: float = config.MU_TOL, restarts: int = config.MU_RESTARTS,
            seed: int | None = None, max_iter: int = config.MU_MAX_ITER,
            frequency: float | None = None) -> MuResult:
    """Upper and lower bounds of mu for a diagonal complex Delta."""
    M0 = np.atleast_2d(np.asarray(M0, dtype=complex))
    if M0.ndim != 2 or M0.shape[0] != M0.shape[1] or M0.shape[0] == 0:
        raise DimensionError(f"mu needs a nonempty square matrix, got {M0.shape}")
    if not np.all(np.isfinite(M0)):
        raise DimensionError("mu needs a finite matrix")
    n = M0.shape[0]
    if n == 1:
        m = complex(M0[0, 0])
        delta = np.array([[1.0 / m if m != 0 else 0.0]], dtype=complex)
        return MuResult(abs(m), abs(m), delta, frequency, True, np.ones(1))

    s = _power_of_two(M0)
    M = M0 / s
    upper, d = mu_upper(M, tol, max_iter)
    rng = config.make_rng(seed)
    starts = [_singular_vector_phases(M, d), np.zeros(n - 1)]
    starts += [rng.uniform(-math.pi, math.pi, n - 1) for _ in range(restarts)]
    lower, delta, converged = mu_lower(M, starts, tol, max_iter)
    upper = max(upper, lower)
    if not converged:
        log.warning("mu lower-bound search stagnated (bound %.6g still valid)", lower * s)
    return MuResult(upper * s, lower * s, delta / s, frequency, converged, d)


def mu_quick(M0, tol: float = 1e-3) -> tuple[float, float, np.ndarray]:
    """Cheap bounds for frequency sweeps: (upper, lower, delta)."""
    M0 = np.atleast_2d(np.asarray(M0, dtype=complex))
    n = M0.shape[0]
    if n == 1:
        m = complex(M0[0, 0])
        return abs(m), abs(m), np.array([[1.0 / m if m != 0 else 0.0]], dtype=complex)
    s = _power_of_two(M0)
    M = M0 / s
    upper, d = mu_upper(M, tol, max_iter=3)
    theta = _singular_vector_phases(M, d)
    rho, lam = _spectral(M, theta)
    if rho == 0.0:
        return upper * s, 0.0, np.zeros((n, n), dtype=complex)
    q = np.exp(1j * np.concatenate([[0.0], theta]))
    return max(upper, rho) * s, rho * s, np.diag(q / lam) / s
