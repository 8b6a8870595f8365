"""
LtiModel: the single model type every analysis accepts.

A model wraps a SISO transfer function, a matrix of transfer functions or a
state-space system, together with the feedback sign of the loop it
describes. Positive-feedback descriptions are normalized once, at
ingestion, so margin code only ever sees negative feedback.
"""
from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from dmkit.exceptions import DimensionError
from dmkit.lti.realization import ss_to_tf, tf_to_ss, tfm_to_ss
from dmkit.lti.systems import StateSpace, TransferFunction

TransferMatrix = tuple[tuple[TransferFunction, ...], ...]
Representation = Union[TransferFunction, TransferMatrix, StateSpace]


class FeedbackSign(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


@dataclass(frozen=True, eq=False)
class LtiModel:
    representation: Representation
    feedback_sign: FeedbackSign = FeedbackSign.NEGATIVE

    def __post_init__(self):
        rep = self.representation
        if isinstance(rep, (list, tuple)):
            rows = tuple(tuple(r) for r in rep)
            if not rows or not rows[0]:
                raise DimensionError("transfer matrix must be nonempty")
            if any(len(r) != len(rows[0]) for r in rows):
                raise DimensionError("transfer matrix must be rectangular")
            if not all(isinstance(tf, TransferFunction) for r in rows for tf in r):
                raise DimensionError("transfer matrix entries must be TransferFunction")
            object.__setattr__(self, "representation", rows)
        elif not isinstance(rep, (TransferFunction, StateSpace)):
            raise TypeError(f"unsupported representation {type(rep).__name__}")
        object.__setattr__(self, "feedback_sign", FeedbackSign(self.feedback_sign))

    # -- constructors -------------------------------------------------------

    @classmethod
    def ingest(cls, representation: Representation,
               feedback_sign: FeedbackSign | str = FeedbackSign.NEGATIVE) -> LtiModel:
        """Model of the equivalent negative-feedback loop."""
        return cls(representation, feedback_sign).as_negative_feedback()

    @classmethod
    def from_tf(cls, num, den=(1.0,)) -> LtiModel:
        return cls(TransferFunction.of(num, den))

    @classmethod
    def from_ss(cls, A, B, C, D) -> LtiModel:
        return cls(StateSpace(A, B, C, D))

    @classmethod
    def static(cls, gain) -> LtiModel:
        gain = np.atleast_2d(np.asarray(gain, dtype=float))
        if gain.shape == (1, 1):
            return cls(TransferFunction.constant(gain[0, 0]))
        return cls(StateSpace.static(gain))

    # -- views --------------------------------------------------------------

    @property
    def is_tf(self) -> bool:
        return isinstance(self.representation, TransferFunction)

    @property
    def is_tfm(self) -> bool:
        return isinstance(self.representation, tuple)

    @cached_property
    def ss(self) -> StateSpace:
        """State-space realization (minimal for transfer matrices)."""
        rep = self.representation
        if isinstance(rep, StateSpace):
            return rep
        if isinstance(rep, TransferFunction):
            return tf_to_ss(rep)
        return tfm_to_ss(rep)

    @property
    def shape(self) -> tuple[int, int]:
        rep = self.representation
        if isinstance(rep, TransferFunction):
            return (1, 1)
        if isinstance(rep, tuple):
            return (len(rep), len(rep[0]))
        return rep.shape

    @property
    def is_siso(self) -> bool:
        return self.shape == (1, 1)

    @property
    def is_square(self) -> bool:
        p, m = self.shape
        return p == m

    def siso_tf(self) -> TransferFunction:
        if not self.is_siso:
            raise DimensionError(f"expected a SISO model, got {self.shape}")
        rep = self.representation
        if isinstance(rep, TransferFunction):
            return rep
        if isinstance(rep, tuple):
            return rep[0][0]
        return ss_to_tf(rep)

    # -- transformations ----------------------------------------------------

    def negated(self) -> LtiModel:
        rep = self.representation
        if isinstance(rep, TransferFunction):
            new = -rep
        elif isinstance(rep, tuple):
            new = tuple(tuple(-tf for tf in r) for r in rep)
        else:
            new = rep.negate()
        return LtiModel(new, self.feedback_sign)

    def as_negative_feedback(self) -> LtiModel:
        if self.feedback_sign is FeedbackSign.NEGATIVE:
            return self
        return LtiModel(self.negated().representation, FeedbackSign.NEGATIVE)

    def __repr__(self) -> str:
        return f"LtiModel({self.representation!r}, {self.feedback_sign.value})"


def as_model(value: LtiModel | TransferFunction | StateSpace | Sequence) -> LtiModel:
    """Accept bare representations wherever a model is expected."""
    if isinstance(value, LtiModel):
        return value
    return LtiModel(value)
