"""
Loops seen at perturbation points of a plant/controller interconnection.

With a controller K (normalized to negative feedback, u = -K y):
  input    L = K P                  (m channels, plant inputs)
  output   L = P K                  (p channels, plant outputs)
  io       L = [[0, K], [-P, 0]]    (m + p channels, inputs first)
Without a controller the plant model is taken to be the loop itself.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from dmkit.exceptions import ChannelIndexError, DimensionError, ModelInputError
from dmkit.lti import (LtiModel, StateSpace, TransferFunction, append, as_model, feedback,
                       minimal_realization, series, ss_to_tf)
from dmkit.margins import classical_margins, disk_margin

log = logging.getLogger(__name__)


class Points(str, Enum):
    INPUT  = "input"
    OUTPUT = "output"
    IO     = "io"


@dataclass(frozen=True)
class ChannelList:
    """Explicit channels of the loop (io ordering when a controller is given)."""

    channels: tuple[int, ...]

    def __post_init__(self):
        chans = tuple(int(c) for c in self.channels)
        if not chans:
            raise ModelInputError("channel list is empty")
        if len(set(chans)) != len(chans):
            raise ModelInputError(f"channel list has duplicates: {chans}")
        object.__setattr__(self, "channels", chans)

    @classmethod
    def parse(cls, text: str) -> ChannelList:
        try:
            return cls(tuple(int(t) for t in text.split(",") if t.strip()))
        except ValueError as e:
            raise ModelInputError(f"bad channel list {text!r}") from e

    def check(self, n: int) -> None:
        bad = [c for c in self.channels if not 0 <= c < n]
        if bad:
            raise ChannelIndexError(f"channels {bad} out of range for a {n}-channel loop")


PointSpec = Union[Points, ChannelList]


def as_points(value) -> PointSpec:
    if isinstance(value, (Points, ChannelList)):
        return value
    text = str(value).strip().lower()
    if text in ("input-output", "input_output"):
        text = "io"
    try:
        return Points(text)
    except ValueError:
        return ChannelList.parse(text)


def _check_pair(P: LtiModel, K: LtiModel) -> None:
    p, m = P.shape
    if K.shape != (m, p):
        raise DimensionError(f"controller must be {m}x{p} for a {p}x{m} plant, got {K.shape}")


def loop_at_points(P, K=None, points: PointSpec = Points.INPUT) -> LtiModel:
    """Negative-feedback loop at the perturbation points (all channels)."""
    P = as_model(P).as_negative_feedback()
    points = as_points(points)
    if K is None:
        if not P.is_square:
            raise DimensionError(f"a loop must be square, got {P.shape}")
        return P
    K = as_model(K).as_negative_feedback()
    _check_pair(P, K)
    if P.is_siso and P.is_tf and K.is_tf and points in (Points.INPUT, Points.OUTPUT):
        return LtiModel(K.representation * P.representation)
    if points is Points.INPUT:
        return LtiModel(series(P.ss, K.ss))
    if points is Points.OUTPUT:
        return LtiModel(series(K.ss, P.ss))
    p, m = P.shape
    blocks = append(P.ss.negate(), K.ss)
    order = list(range(p, p + m)) + list(range(p))
    return LtiModel(blocks.select(outputs=order))


def broken_loop(L, channel: int) -> LtiModel:
    """SISO loop at *channel* with every other channel closed."""
    L = as_model(L).as_negative_feedback()
    n = L.shape[0]
    if not 0 <= channel < n:
        raise ChannelIndexError(f"channel {channel} out of range for a {n}-channel loop")
    if n == 1:
        return L
    closer = np.eye(n)
    closer[channel, channel] = 0.0
    cl = feedback(L.ss, StateSpace.static(closer))
    sub = minimal_realization(cl.select([channel], [channel]))
    tf = ss_to_tf(sub)
    # rounding leaves poles such as s + 1e-15 where the closure has an integrator
    return LtiModel(TransferFunction(tf.num.chopped(), tf.den.chopped()))


def loop_at_a_time(P, K=None, channel: int = 0, location: Points | str = Points.INPUT,
                   sigma: float = 0.0):
    """(ClassicalMargins, DiskMarginResult) of one broken channel."""
    location = as_points(location)
    if location not in (Points.INPUT, Points.OUTPUT):
        raise ModelInputError("loop-at-a-time margins are taken at the inputs or the outputs")
    Li = broken_loop(loop_at_points(P, K, location), channel)
    log.debug("loop-at-a-time %s channel %d: %r", location.value, channel, Li)
    return classical_margins(Li), disk_margin(Li, sigma)
