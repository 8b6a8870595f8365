"""
dmkit exception hierarchy.

Every error carries the process exit code the CLI reports for it:
  1  malformed or unsupported input
  2  the nominal loop (or a model that must be stable) is not
  3  a numerical routine failed
"""
from __future__ import annotations


class DmkitError(Exception):
    """Base class for every error raised by dmkit."""

    exit_code: int = 3


# ---------------------------------------------------------------------------
# Exit 1: input errors
# ---------------------------------------------------------------------------

class ModelInputError(DmkitError):
    exit_code = 1


class EmptyRootsError(ModelInputError):
    """Root finding asked of a constant polynomial."""


class ImproperModelError(ModelInputError):
    """Numerator degree exceeds denominator degree."""


class DimensionError(ModelInputError):
    """Matrix or channel dimensions do not line up."""


class ChannelIndexError(ModelInputError):
    """A loop channel index is out of range."""


class UnsupportedGeometryError(ModelInputError):
    """A disk geometry outside the case an operation handles."""


class ModelFileError(ModelInputError):
    """A model file is unreadable or does not follow the schema."""


# ---------------------------------------------------------------------------
# Exit 2: domain errors
# ---------------------------------------------------------------------------

class DomainError(DmkitError):
    exit_code = 2


class NominalInstabilityError(DomainError):
    """The nominal closed loop has a pole in the closed right half-plane."""


class UnstableModelError(DomainError):
    """A model that must be stable (for a norm, say) is not."""


class PoleOnAxisError(DomainError):
    """A frequency response was requested exactly at a pole."""

    def __init__(self, omega: float):
        super().__init__(f"j*{omega:g} is a pole of the model")
        self.omega = omega


class AlgebraicLoopError(DomainError):
    """det(I + L) vanishes identically."""


class WellPosednessError(DomainError):
    """A feedback closure has no causal solution (singular I + D)."""


class PerturbationConstructionError(DomainError):
    """A destabilizing perturbation could not be realized as a stable system."""


# ---------------------------------------------------------------------------
# Exit 3: numerical failures
# ---------------------------------------------------------------------------

class NumericalFailureError(DmkitError):
    exit_code = 3


class ConvergenceError(NumericalFailureError):
    """An iterative routine ran out of iterations."""
