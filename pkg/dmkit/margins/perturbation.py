"""
Destabilizing perturbations at the disk-margin boundary.

worst_perturbation_lti turns the critical complex delta0 into a stable
all-pass delta_hat with delta_hat(j*omega0) = delta0 and maps it through
f = (2 + (1 - sigma) delta) / (2 - (1 + sigma) delta). verify_destabilizing
closes a loop with a perturbation and checks for a pole at j*omega0.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dmkit import config
from dmkit.exceptions import (DimensionError, ModelInputError, PerturbationConstructionError,
                              WellPosednessError, AlgebraicLoopError)
from dmkit.lti import (LtiModel, TransferFunction, as_model, is_stable, poles,
                       realize_complex_gain, scalar_close)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationLti:
    delta_hat: TransferFunction
    f_hat: TransferFunction
    beta: float | None
    omega: float
    sigma: float

    @property
    def is_static(self) -> bool:
        return self.beta is None


def _map_to_f(delta: TransferFunction, sigma: float) -> TransferFunction:
    num = delta.den * 2.0 + delta.num * (1.0 - sigma)
    den = (delta.den * 2.0 - delta.num * (1.0 + sigma)).trimmed()
    if den.is_zero() or den.degree < delta.den.degree:
        raise PerturbationConstructionError(
            "delta_hat reaches 2/(1 + sigma): the gain/phase perturbation is improper")
    return TransferFunction(num, den).normalized()


def worst_perturbation_lti(delta0: complex, omega0: float, sigma: float = 0.0) -> PerturbationLti:
    """Stable first-order (or static) perturbation matching delta0 at j*omega0."""
    delta0 = complex(delta0)
    if delta0 == 0:
        raise ModelInputError("delta0 must be nonzero")
    if omega0 < 0 or math.isnan(omega0):
        raise ModelInputError(f"omega0 must be >= 0, got {omega0}")
    delta_hat = realize_complex_gain(delta0, omega0)
    beta = None if delta_hat.is_static() else delta_hat.den.coeffs[-1]
    f_hat = _map_to_f(delta_hat, sigma)
    if f_hat.order > 0 and not is_stable(LtiModel(f_hat)):
        raise PerturbationConstructionError(
            f"f_hat has an unstable pole at {f_hat.poles()[0].real:.6g}")
    log.debug("worst-case perturbation: delta_hat=%r f_hat=%r", delta_hat, f_hat)
    return PerturbationLti(delta_hat, f_hat, beta, omega0, sigma)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

class Verdict(str, Enum):
    DESTABILIZING     = "destabilizing"
    NOT_DESTABILIZING = "not-destabilizing"
    ILL_POSED         = "ill-posed"


@dataclass(frozen=True)
class VerificationReport:
    verdict: Verdict
    omega: float
    nearest_pole: complex | None
    distance: float | None
    tolerance: float
    closed_loop_stable: bool
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return self.verdict is not Verdict.NOT_DESTABILIZING


def _perturbation(f, omega: float):
    if isinstance(f, PerturbationLti):
        return f.f_hat
    if isinstance(f, (TransferFunction, LtiModel)):
        return f
    f = complex(f)
    if f.imag != 0 and (omega <= 0 or math.isinf(omega)):
        raise ModelInputError(f"complex perturbation {f} cannot act at omega = {omega}")
    return realize_complex_gain(f, omega)


def check_closure(closure, omega: float, rtol: float = config.VERIFY_RTOL) -> VerificationReport:
    """Classify an already-built closure by its pole nearest j*omega.

    *closure* is a zero-argument callable returning the closed-loop model,
    so ill-posed closures surface as a verdict instead of an exception.
    """
    tol = rtol * max(1.0, omega) if math.isfinite(omega) else math.inf
    try:
        cl = closure()
    except (WellPosednessError, AlgebraicLoopError) as e:
        return VerificationReport(Verdict.ILL_POSED, omega, None, None, tol, False, (str(e),))
    p = poles(cl)
    stable = bool(np.all(p.real < -config.STABILITY_TOL))
    if p.size == 0:
        return VerificationReport(Verdict.NOT_DESTABILIZING, omega, None, None, tol, stable,
                                  ("closed loop has no poles",))
    if math.isinf(omega):
        near = p[int(np.argmax(np.abs(p)))]
        return VerificationReport(Verdict.NOT_DESTABILIZING, omega, complex(near), math.inf,
                                  tol, stable, ("closure at infinite frequency is well-posed",))
    dist = np.abs(p - 1j * omega)
    i = int(np.argmin(dist))
    near, d = complex(p[i]), float(dist[i])
    verdict = Verdict.DESTABILIZING if d <= tol else Verdict.NOT_DESTABILIZING
    notes = () if verdict is Verdict.DESTABILIZING else (
        ("nominal-stable: no imaginary-axis pole",) if stable else
        (f"closed loop is unstable but no pole lies near j{omega:.6g}",))
    return VerificationReport(verdict, omega, near, d, tol, stable, notes)


def verify_destabilizing(L, f, omega0: float,
                         rtol: float = config.VERIFY_RTOL) -> VerificationReport:
    """Close L with f (negative feedback, loop f*L) and look for a pole at j*omega0."""
    L = as_model(L).as_negative_feedback()
    if not L.is_siso:
        raise DimensionError(f"verification needs a SISO loop, got {L.shape}")
    pert = _perturbation(f, omega0)
    report = check_closure(lambda: scalar_close(L, pert), omega0, rtol)
    log.info("verification at %.6g rad/s: %s", omega0, report.verdict.value)
    return report
