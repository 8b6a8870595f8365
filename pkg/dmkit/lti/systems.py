"""
Transfer functions and state-space systems, plus their interconnections.

State-space algebra is the exact backbone for MIMO work: series, parallel,
block-diagonal append and feedback all act on (A, B, C, D) directly.
"""
from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from dmkit.exceptions import DimensionError, ModelInputError, WellPosednessError
from dmkit.lti.polynomial import Polynomial

# I + D is treated as singular beyond this condition number
WELL_POSED_COND = 1e12


# ---------------------------------------------------------------------------
# Transfer functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferFunction:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "num", Polynomial.of(self.num))
        object.__setattr__(self, "den", Polynomial.of(self.den))
        if self.den.is_zero():
            raise ModelInputError("transfer function denominator is identically zero")

    @classmethod
    def of(cls, num, den=(1.0,)) -> TransferFunction:
        return cls(Polynomial.of(num), Polynomial.of(den))

    @classmethod
    def constant(cls, value: float) -> TransferFunction:
        return cls(Polynomial.constant(value), Polynomial.constant(1.0))

    # -- properties ---------------------------------------------------------

    def is_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree <= self.den.degree

    def is_static(self) -> bool:
        return self.den.degree == 0 and (self.num.degree == 0)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    @property
    def order(self) -> int:
        return self.den.degree

    def dc_gain(self) -> float:
        return self.num(0.0) / self.den(0.0)

    def feedthrough(self) -> float:
        """Value at s = infinity for a proper function."""
        if self.num.is_zero() or self.num.degree < self.den.degree:
            return 0.0
        return self.num.leading / self.den.leading

    def poles(self) -> np.ndarray:
        if self.den.degree == 0:
            return np.zeros(0, dtype=complex)
        return self.den.roots()

    def zeros(self) -> np.ndarray:
        if self.num.degree == 0:
            return np.zeros(0, dtype=complex)
        return self.num.roots()

    def normalized(self) -> TransferFunction:
        """Same function with a monic denominator."""
        lead = self.den.leading
        return TransferFunction(self.num * (1.0 / lead), self.den * (1.0 / lead))

    def __call__(self, s):
        return self.num(s) / self.den(s)

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: TransferFunction | float) -> TransferFunction:
        other = _as_tf(other)
        if self.den == other.den:
            return TransferFunction(self.num + other.num, self.den)
        return TransferFunction(self.num * other.den + other.num * self.den,
                                self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> TransferFunction:
        return TransferFunction(-self.num, self.den)

    def __sub__(self, other: TransferFunction | float) -> TransferFunction:
        return self + (-_as_tf(other))

    def __rsub__(self, other: float) -> TransferFunction:
        return _as_tf(other) + (-self)

    def __mul__(self, other: TransferFunction | float) -> TransferFunction:
        other = _as_tf(other)
        return TransferFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TransferFunction(num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"


def _as_tf(value) -> TransferFunction:
    if isinstance(value, TransferFunction):
        return value
    return TransferFunction.constant(float(value))


# ---------------------------------------------------------------------------
# State space
# ---------------------------------------------------------------------------

def _frozen(arr, shape: tuple[int, int]) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True).reshape(shape)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateSpace:
    """x' = A x + B u, y = C x + D u. n = 0 is a static gain D."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    n_states: int = field(init=False)
    n_inputs: int = field(init=False)
    n_outputs: int = field(init=False)

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        p, m = D.shape
        A = np.asarray(self.A, dtype=float)
        n = 0 if A.size == 0 else A.shape[0]
        if A.size and A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if B.size != n * m:
            raise DimensionError(f"B must be {n}x{m}, got {B.shape}")
        if C.size != p * n:
            raise DimensionError(f"C must be {p}x{n}, got {C.shape}")
        if m == 0 or p == 0:
            raise DimensionError("a system needs at least one input and one output")
        object.__setattr__(self, "A", _frozen(A, (n, n)))
        object.__setattr__(self, "B", _frozen(B, (n, m)))
        object.__setattr__(self, "C", _frozen(C, (p, n)))
        object.__setattr__(self, "D", _frozen(D, (p, m)))
        object.__setattr__(self, "n_states", n)
        object.__setattr__(self, "n_inputs", m)
        object.__setattr__(self, "n_outputs", p)
        for name in ("A", "B", "C", "D"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ModelInputError(f"state-space matrix {name} has non-finite entries")

    @classmethod
    def static(cls, gain) -> StateSpace:
        D = np.atleast_2d(np.asarray(gain, dtype=float))
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    @classmethod
    def identity(cls, n: int) -> StateSpace:
        return cls.static(np.eye(n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_outputs, self.n_inputs)

    def eval(self, s: complex) -> np.ndarray:
        """G(s) = C (sI - A)^-1 B + D."""
        if self.n_states == 0:
            return self.D.astype(complex)
        x = np.linalg.solve(s * np.eye(self.n_states) - self.A, self.B)
        return self.C @ x + self.D

    def negate(self) -> StateSpace:
        return StateSpace(self.A, self.B, -self.C, -self.D)

    def scale(self, k: float) -> StateSpace:
        return StateSpace(self.A, self.B, k * self.C, k * self.D)

    def select(self, outputs=None, inputs=None) -> StateSpace:
        """Sub-system from the chosen input and output indices."""
        rows = list(range(self.n_outputs)) if outputs is None else list(outputs)
        cols = list(range(self.n_inputs)) if inputs is None else list(inputs)
        return StateSpace(self.A, self.B[:, cols], self.C[rows, :], self.D[np.ix_(rows, cols)])

    def __repr__(self) -> str:
        return (f"StateSpace(n={self.n_states}, inputs={self.n_inputs}, "
                f"outputs={self.n_outputs})")


# ---------------------------------------------------------------------------
# Interconnections
# ---------------------------------------------------------------------------

def series(first: StateSpace, second: StateSpace) -> StateSpace:
    """u -> first -> second -> y, i.e. the product second * first."""
    if first.n_outputs != second.n_inputs:
        raise DimensionError(
            f"series: {first.n_outputs} outputs feed {second.n_inputs} inputs")
    n1, n2 = first.n_states, second.n_states
    A = np.block([
        [first.A, np.zeros((n1, n2))],
        [second.B @ first.C, second.A],
    ])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpace(A, B, C, D)


def parallel(a: StateSpace, b: StateSpace) -> StateSpace:
    if a.shape != b.shape:
        raise DimensionError(f"parallel: shapes {a.shape} and {b.shape} differ")
    A = scipy.linalg.block_diag(a.A, b.A)
    return StateSpace(A, np.vstack([a.B, b.B]), np.hstack([a.C, b.C]), a.D + b.D)


def append(*systems: StateSpace) -> StateSpace:
    """Block-diagonal stacking of independent channels."""
    A = scipy.linalg.block_diag(*[s.A for s in systems])
    B = scipy.linalg.block_diag(*[s.B for s in systems])
    C = scipy.linalg.block_diag(*[s.C for s in systems])
    D = scipy.linalg.block_diag(*[s.D for s in systems])
    n = sum(s.n_states for s in systems)
    m = sum(s.n_inputs for s in systems)
    p = sum(s.n_outputs for s in systems)
    return StateSpace(A.reshape(n, n), B.reshape(n, m), C.reshape(p, n), D.reshape(p, m))


def feedback(G: StateSpace, H: StateSpace | None = None) -> StateSpace:
    """Negative feedback y = G (r - H y); H defaults to the identity."""
    if H is None:
        H = StateSpace.identity(G.n_outputs)
    if H.n_inputs != G.n_outputs or H.n_outputs != G.n_inputs:
        raise DimensionError(f"feedback: G is {G.shape}, H is {H.shape}")
    p = G.n_outputs
    M = np.eye(p) + G.D @ H.D
    if np.linalg.cond(M) > WELL_POSED_COND:
        raise WellPosednessError("feedback loop is ill-posed: I + D_G D_H is singular")
    E = np.linalg.inv(M)
    n1, n2 = G.n_states, H.n_states
    Cy = E @ np.hstack([G.C, -G.D @ H.C])
    Dy = E @ G.D
    Ce = np.hstack([np.zeros((G.n_inputs, n1)), -H.C]) - H.D @ Cy
    De = np.eye(G.n_inputs) - H.D @ Dy
    A = scipy.linalg.block_diag(G.A, H.A).reshape(n1 + n2, n1 + n2)
    A = A + np.vstack([G.B @ Ce, H.B @ Cy])
    B = np.vstack([G.B @ De, H.B @ Dy])
    return StateSpace(A, B, Cy, Dy)
