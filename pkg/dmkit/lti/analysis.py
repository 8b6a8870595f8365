"""
Poles, stability, frequency response and feedback closures of LtiModels.

Frequency conventions:
  omega = +inf   the feedthrough value of a proper model
  omega < 0      G(j*omega), evaluated directly (conjugate of G at -omega
                 for real models)
"""
from __future__ import annotations
import cmath
import logging
import math

import numpy as np
import scipy.linalg

from dmkit import config
from dmkit.exceptions import (AlgebraicLoopError, DimensionError, ImproperModelError,
                              ModelInputError, NominalInstabilityError,
                              NumericalFailureError, PoleOnAxisError, WellPosednessError)
from dmkit.lti.model import LtiModel, as_model
from dmkit.lti.realization import tf_to_ss
from dmkit.lti.systems import StateSpace, TransferFunction, append, feedback, series

log = logging.getLogger(__name__)

POLE_RTOL = 1e-13
_CHUNK = 2048
# sample frequencies for telling an algebraic loop from a mere ill-posed one
_TEST_FREQS = (0.37, 1.9, 7.3, 41.0)


# ---------------------------------------------------------------------------
# Poles / stability
# ---------------------------------------------------------------------------

def poles(m) -> np.ndarray:
    m = as_model(m)
    if m.is_tf:
        return m.representation.poles()
    A = m.ss.A
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        ev = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(f"eigenvalue computation failed: {e}") from e
    if not np.all(np.isfinite(ev)):
        raise NumericalFailureError("eigenvalue computation did not converge")
    return ev.astype(complex)


def is_stable(m, tol: float | None = None) -> bool:
    tol = config.STABILITY_TOL if tol is None else tol
    p = poles(m)
    return bool(np.all(p.real < -tol))


# ---------------------------------------------------------------------------
# Frequency response
# ---------------------------------------------------------------------------

def _tf_response(tf: TransferFunction, w: np.ndarray, on_pole: str) -> np.ndarray:
    out = np.empty(w.shape, dtype=complex)
    finite = np.isfinite(w)
    if np.any(~finite):
        if not tf.is_proper():
            raise ImproperModelError("response at infinite frequency needs a proper model")
        out[~finite] = tf.feedthrough()
    s = 1j * w[finite]
    num = tf.num(s)
    den = tf.den(s)
    bound = POLE_RTOL * np.polyval(np.abs(tf.den.array), np.abs(s))
    hit = np.abs(den) <= bound
    if np.any(hit):
        if on_pole == "raise":
            raise PoleOnAxisError(float(w[finite][np.argmax(hit)]))
        den = np.where(hit, np.nan, den)
    out[finite] = num / den
    return out


def _ss_point(ss: StateSpace, omega: float) -> np.ndarray:
    if math.isinf(omega) or ss.n_states == 0:
        return ss.D.astype(complex)
    M = 1j * omega * np.eye(ss.n_states) - ss.A
    try:
        if np.linalg.cond(M) > 1.0 / POLE_RTOL:
            raise np.linalg.LinAlgError
        x = np.linalg.solve(M, ss.B)
    except np.linalg.LinAlgError:
        raise PoleOnAxisError(omega) from None
    return ss.C @ x + ss.D


def _ss_response(ss: StateSpace, w: np.ndarray, on_pole: str) -> np.ndarray:
    k = w.size
    p, m = ss.shape
    out = np.empty((k, p, m), dtype=complex)
    if ss.n_states == 0:
        out[:] = ss.D
        return out
    n = ss.n_states
    eye = np.eye(n)
    for start in range(0, k, _CHUNK):
        chunk = w[start:start + _CHUNK]
        finite = np.isfinite(chunk)
        block = np.empty((chunk.size, p, m), dtype=complex)
        block[~finite] = ss.D
        s = 1j * chunk[finite]
        try:
            M = s[:, None, None] * eye - ss.A
            X = np.linalg.solve(M, np.broadcast_to(ss.B, (s.size, n, m)))
            block[finite] = ss.C @ X + ss.D
        except np.linalg.LinAlgError:
            idx = np.flatnonzero(finite)
            for i in idx:
                try:
                    block[i] = _ss_point(ss, float(chunk[i]))
                except PoleOnAxisError:
                    if on_pole == "raise":
                        raise
                    block[i] = np.nan
        out[start:start + chunk.size] = block
    return out


def freq_response(m, omegas, on_pole: str = "raise") -> np.ndarray:
    """G(j*omega) for every omega, shape (k, p, m).

    on_pole="nan" marks samples that hit a pole with NaN instead of raising.
    """
    m = as_model(m)
    w = np.asarray(omegas, dtype=float).ravel()
    rep = m.representation
    if m.is_tf:
        return _tf_response(rep, w, on_pole).reshape(-1, 1, 1)
    if m.is_tfm:
        p, q = m.shape
        out = np.empty((w.size, p, q), dtype=complex)
        for i in range(p):
            for j in range(q):
                out[:, i, j] = _tf_response(rep[i][j], w, on_pole)
        return out
    return _ss_response(m.ss, w, on_pole)


def eval_freq(m, omega: float) -> np.ndarray:
    """G(j*omega) as a p x m complex matrix (1 x 1 for SISO)."""
    m = as_model(m)
    if not m.is_tf and not m.is_tfm:
        return _ss_point(m.ss, float(omega))
    return freq_response(m, [omega])[0]


def eval_siso(m, omega: float) -> complex:
    return complex(eval_freq(m, omega)[0, 0])


# ---------------------------------------------------------------------------
# Closures
# ---------------------------------------------------------------------------

def _loop(L) -> LtiModel:
    L = as_model(L).as_negative_feedback()
    if not L.is_square:
        raise DimensionError(f"a loop must be square, got {L.shape}")
    return L


def _singular_return_difference(L: LtiModel) -> None:
    """Raise the right error for a singular I + L(inf)."""
    n = L.shape[0]
    dets = [abs(np.linalg.det(np.eye(n) + eval_freq(L, w))) for w in _TEST_FREQS]
    if max(dets) < 1e-10:
        raise AlgebraicLoopError("det(I + L) is identically zero")
    raise WellPosednessError("I + L(inf) is singular: the closed loop is not well-posed")


def _siso_denominator(num, den):
    """den + num of the closed loop, checked for well-posedness."""
    sden = (den + num).trimmed()
    if sden.is_zero():
        raise AlgebraicLoopError("1 + L is identically zero")
    if sden.degree < den.degree:
        raise WellPosednessError("1 + L(inf) = 0: the closed loop is not well-posed")
    return sden


def sensitivity_pair(L) -> tuple[LtiModel, LtiModel]:
    """S = (I + L)^-1 and T = I - S."""
    L = _loop(L)
    if L.is_tf:
        tf = L.representation
        sden = _siso_denominator(tf.num, tf.den)
        return (LtiModel(TransferFunction(tf.den, sden)),
                LtiModel(TransferFunction(tf.num, sden)))
    G = L.ss
    n = G.n_outputs
    R = np.eye(n) + G.D
    if np.linalg.cond(R) > 1e12:
        _singular_return_difference(L)
    E = np.linalg.inv(R)
    A = G.A - G.B @ E @ G.C
    B = G.B @ E
    S = StateSpace(A, B, -E @ G.C, E)
    T = StateSpace(A, B, E @ G.C, np.eye(n) - E)
    return LtiModel(S), LtiModel(T)


def closed_loop(L) -> LtiModel:
    """(I + L)^-1 L under unit negative feedback."""
    L = _loop(L)
    if L.is_tf:
        tf = L.representation
        return LtiModel(TransferFunction(tf.num, _siso_denominator(tf.num, tf.den)))
    try:
        return LtiModel(feedback(L.ss))
    except WellPosednessError:
        _singular_return_difference(L)


def require_nominal_stability(L, tol: float | None = None) -> LtiModel:
    """Closed loop of L, raising NominalInstabilityError unless it is stable."""
    cl = closed_loop(L)
    if not is_stable(cl, tol):
        worst = max(poles(cl), key=lambda p: p.real)
        raise NominalInstabilityError(
            f"nominal closed loop is unstable (pole at {worst.real:.6g}{worst.imag:+.6g}j)")
    return cl


# ---------------------------------------------------------------------------
# Perturbation closures
# ---------------------------------------------------------------------------

def realize_complex_gain(value: complex, omega: float, rtol: float = 1e-12) -> TransferFunction:
    """Stable first-order system with constant gain |value| and value at j*omega.

    Real values give a static gain. Otherwise value = +-c*e^{j*phi} with
    phi in (0, pi) and the system is +-c*(s - beta)/(s + beta),
    beta = omega*tan(phi/2).
    """
    value = complex(value)
    if abs(value.imag) <= rtol * abs(value):
        return TransferFunction.constant(value.real)
    if omega <= 0 or math.isinf(omega):
        raise ModelInputError(
            f"complex value {value} cannot be matched at omega = {omega}")
    c, theta = abs(value), cmath.phase(value)
    if theta > 0:
        sign, phi = 1.0, theta
    else:
        sign, phi = -1.0, theta + math.pi
    beta = omega * math.tan(phi / 2.0)
    k = sign * c
    return TransferFunction.of([k, -k * beta], [1.0, beta])


def _as_perturbation(f, omega: float | None) -> TransferFunction:
    if isinstance(f, TransferFunction):
        return f
    if isinstance(f, LtiModel):
        return f.siso_tf()
    f = complex(f)
    if f.imag == 0.0:
        return TransferFunction.constant(f.real)
    if omega is None:
        raise ModelInputError("a complex perturbation needs the frequency it acts at")
    return realize_complex_gain(f, omega)


def scalar_close(L, f, omega: float | None = None) -> LtiModel:
    """Closed loop under negative feedback with loop F*L, F = diag(f).

    *f* is a scalar, a TransferFunction, or one of those per channel.
    Complex scalars are realized at *omega* with realize_complex_gain.
    """
    L = _loop(L)
    n = L.shape[0]
    fs = list(f) if isinstance(f, (list, tuple, np.ndarray)) else [f] * n
    if len(fs) != n:
        raise DimensionError(f"{len(fs)} perturbations for a loop with {n} channels")
    parts = [_as_perturbation(fi, omega) for fi in fs]
    if L.is_tf:
        tf, pf = L.representation, parts[0]
        num = pf.num * tf.num
        den = _siso_denominator(num, pf.den * tf.den)
        return LtiModel(TransferFunction(num, den))
    F = append(*[tf_to_ss(p) for p in parts])
    try:
        return LtiModel(feedback(series(L.ss, F)))
    except WellPosednessError:
        raise WellPosednessError(
            "perturbed loop is ill-posed: I + F L(inf) is singular") from None
