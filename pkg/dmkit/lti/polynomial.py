"""
Real polynomials in s, stored with descending powers.

Root finding goes through the companion matrix so that every spectral
computation in the package runs on the same eigen-solver.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from dmkit.exceptions import EmptyRootsError, ModelInputError, NumericalFailureError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Polynomial:
    """Real coefficients, descending powers of s. Leading zeros are dropped."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coeffs))
        if arr.size == 0:
            raise ModelInputError("polynomial needs at least one coefficient")
        if np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise ModelInputError("polynomial coefficients must be real")
            arr = arr.real
        arr = arr.astype(float)
        if not np.all(np.isfinite(arr)):
            raise ModelInputError("polynomial coefficients must be finite")
        nz = np.flatnonzero(arr)
        arr = arr[nz[0]:] if nz.size else arr[-1:]
        object.__setattr__(self, "coeffs", tuple(float(c) for c in arr))

    # -- constructors -------------------------------------------------------

    @classmethod
    def of(cls, coeffs: Iterable[float] | float) -> Polynomial:
        if isinstance(coeffs, Polynomial):
            return coeffs
        return cls(tuple(np.atleast_1d(np.asarray(coeffs)).tolist()))

    @classmethod
    def constant(cls, value: float) -> Polynomial:
        return cls((float(value),))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], gain: float = 1.0) -> Polynomial:
        c = np.poly(np.asarray(list(roots), dtype=complex)) * gain
        return cls(tuple(np.real_if_close(c, tol=1e6).real.tolist()))

    # -- properties ---------------------------------------------------------

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return self.coeffs[0]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    # -- evaluation / algebra ----------------------------------------------

    def __call__(self, s):
        return np.polyval(self.array, s)

    def __add__(self, other: Polynomial | float) -> Polynomial:
        return Polynomial.of(np.polyadd(self.array, Polynomial.of(other).array))

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial.of(-self.array)

    def __sub__(self, other: Polynomial | float) -> Polynomial:
        return self + (-Polynomial.of(other))

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        if isinstance(other, (int, float, np.floating)):
            return Polynomial.of(self.array * float(other))
        return Polynomial.of(np.polymul(self.array, Polynomial.of(other).array))

    __rmul__ = __mul__

    def monic(self) -> Polynomial:
        return Polynomial.of(self.array / self.leading)

    def trimmed(self, rtol: float = 1e-12) -> Polynomial:
        """Drop leading coefficients that are negligible against the largest one."""
        arr = self.array
        scale = np.max(np.abs(arr)) if arr.size else 0.0
        if scale == 0.0:
            return Polynomial.constant(0.0)
        keep = np.flatnonzero(np.abs(arr) > rtol * scale)
        return Polynomial.of(arr[keep[0]:])

    def chopped(self, rtol: float = 1e-12) -> Polynomial:
        """Zero the non-leading coefficients that are negligible against the largest one."""
        arr = self.array.copy()
        tiny = np.abs(arr) <= rtol * np.max(np.abs(arr))
        tiny[0] = False
        arr[tiny] = 0.0
        return Polynomial.of(arr)

    def roots(self) -> np.ndarray:
        return poly_roots(self)


def poly_roots(p: Polynomial) -> np.ndarray:
    """All deg(p) roots, with multiplicity, as eigenvalues of the companion matrix."""
    if p.degree < 1:
        raise EmptyRootsError(f"degree-0 polynomial {p.coeffs} has no roots")
    arr = p.array
    # exact zero roots come from trailing zero coefficients
    nz = np.flatnonzero(arr)
    n_zero = arr.size - 1 - nz[-1]
    arr = arr[: arr.size - n_zero]
    zeros = np.zeros(n_zero, dtype=complex)
    if arr.size < 2:
        return zeros
    try:
        comp = scipy.linalg.companion(arr)
        r = scipy.linalg.eigvals(comp)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(f"companion eigenvalues failed: {e}") from e
    if not np.all(np.isfinite(r)):
        raise NumericalFailureError("companion eigenvalues did not converge")
    return np.concatenate([r.astype(complex), zeros])
