"""
H-infinity norm and frequency grids.

hinf_norm brackets the peak gain between a verified attained gain (lo) and
a level with no Hamiltonian imaginary-axis eigenvalues (hi), then bisects.
At each trial level the imaginary eigenvalues give the frequencies where
the gain crosses the level; the gain is evaluated between them so lo is
always a gain the system actually reaches. The final peak is polished with
a bounded scalar search.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from dmkit import config
from dmkit.exceptions import ConvergenceError, ImproperModelError, ModelInputError, UnstableModelError
from dmkit.helpers import geometric_mid
from dmkit.lti import LtiModel, StateSpace, as_model, freq_response, is_stable, poles

log = logging.getLogger(__name__)

MAX_BISECTIONS = 200
MAX_GROWTH     = 60
IMAG_TOL       = 1e-8     # |Re(lambda)| below this (relative) counts as imaginary
TIE_RTOL       = 1e-12    # gains this close count as equal when picking a frequency
_INIT_POINTS   = 200


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeakGain:
    value: float
    frequency: float


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing frequencies in rad/s; may end with +inf."""

    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ModelInputError("frequency grid is empty")
        if any(math.isnan(p) or p < 0 for p in pts):
            raise ModelInputError("frequency grid points must be >= 0")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ModelInputError("frequency grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def logspace(cls, lo: float, hi: float, n: int,
                 include_zero: bool = False, include_inf: bool = False) -> FrequencyGrid:
        if n < 2:
            raise ModelInputError("a grid needs at least two points")
        if not (0 < lo < hi < math.inf):
            raise ModelInputError(f"grid window must satisfy 0 < lo < hi, got {lo}, {hi}")
        pts = list(np.logspace(math.log10(lo), math.log10(hi), n))
        pts[0], pts[-1] = lo, hi
        if include_zero:
            pts.insert(0, 0.0)
        if include_inf:
            pts.append(math.inf)
        return cls(tuple(pts))

    @classmethod
    def parse(cls, text: str, model: LtiModel | None = None) -> FrequencyGrid:
        """'N' (default grid of the model) or 'lo:hi:N' (explicit log grid)."""
        parts = text.strip().split(":")
        try:
            if len(parts) == 1:
                n = int(parts[0])
                if model is None:
                    lo, hi = config.DEFAULT_WINDOW
                    return cls.logspace(lo, hi, n)
                return default_grid(model, n, include_sentinels=False)
            if len(parts) == 3:
                return cls.logspace(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as e:
            raise ModelInputError(f"bad grid spec {text!r}: {e}") from e
        raise ModelInputError(f"bad grid spec {text!r}: expected N or lo:hi:N")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @property
    def finite(self) -> np.ndarray:
        a = self.array
        return a[np.isfinite(a)]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

def _feature_magnitudes(m: LtiModel) -> np.ndarray:
    mags = [np.abs(poles(m))]
    if m.is_tf and m.representation.num.degree > 0:
        mags.append(np.abs(m.representation.zeros()))
    elif m.is_tfm:
        for row in m.representation:
            for tf in row:
                mags.append(np.abs(tf.poles()))
                if tf.num.degree > 0:
                    mags.append(np.abs(tf.zeros()))
    mags = np.concatenate(mags) if mags else np.zeros(0)
    return mags[(mags > 0) & np.isfinite(mags)]


def default_grid(m, n: int = config.DEFAULT_GRID_POINTS,
                 include_sentinels: bool = True) -> FrequencyGrid:
    """n log-spaced points two decades beyond the pole/zero magnitudes of m."""
    m = as_model(m)
    mags = _feature_magnitudes(m)
    if mags.size:
        lo = mags.min() / 10 ** config.GRID_DECADES
        hi = mags.max() * 10 ** config.GRID_DECADES
    else:
        lo, hi = config.DEFAULT_WINDOW
    return FrequencyGrid.logspace(lo, hi, n, include_zero=include_sentinels,
                                  include_inf=include_sentinels)


def sigma_max(m, omegas, on_pole: str = "raise") -> np.ndarray:
    """Largest singular value of G(j*omega) for each omega."""
    G = freq_response(m, omegas, on_pole=on_pole)
    if G.shape[1:] == (1, 1):
        return np.abs(G[:, 0, 0])
    out = np.full(G.shape[0], np.nan)
    ok = np.all(np.isfinite(G), axis=(1, 2))
    if np.any(ok):
        out[ok] = np.linalg.svd(G[ok], compute_uv=False)[:, 0]
    return out


def _pick_peak(freqs: np.ndarray, gains: np.ndarray) -> tuple[float, float]:
    """Largest gain; among near-ties the lowest frequency."""
    order = np.argsort(freqs, kind="stable")
    freqs, gains = freqs[order], gains[order]
    best = np.nanmax(gains)
    idx = int(np.flatnonzero(gains >= best * (1.0 - TIE_RTOL))[0])
    return float(gains[idx]), float(freqs[idx])


def grid_peak(m, grid: FrequencyGrid) -> PeakGain:
    value, freq = _pick_peak(grid.array, sigma_max(m, grid.array))
    return PeakGain(value, freq)


# ---------------------------------------------------------------------------
# H-infinity norm
# ---------------------------------------------------------------------------

def _crossing_frequencies(ss: StateSpace, gamma: float) -> np.ndarray:
    """Frequencies where gamma is a singular value of G(j*omega)."""
    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    p, m = D.shape
    R = D.T @ D - gamma ** 2 * np.eye(m)
    S = D @ D.T - gamma ** 2 * np.eye(p)
    Ri = np.linalg.inv(R)
    Si = np.linalg.inv(S)
    H = np.block([
        [A - B @ Ri @ D.T @ C, -gamma * B @ Ri @ B.T],
        [gamma * C.T @ Si @ C, -A.T + C.T @ D @ Ri @ B.T],
    ])
    ev = scipy.linalg.eigvals(H)
    imag = np.abs(ev.real) <= IMAG_TOL * (1.0 + np.abs(ev))
    return np.unique(np.abs(ev[imag].imag))


def _trial_frequencies(crossings: np.ndarray) -> np.ndarray:
    pts = np.unique(np.concatenate([[0.0], crossings]))
    mids = [geometric_mid(a, b) for a, b in zip(pts, pts[1:])]
    return np.unique(np.concatenate([pts, mids]))


def _polish(m: LtiModel, value: float, freq: float) -> tuple[float, float]:
    if freq <= 0 or math.isinf(freq):
        return value, freq

    def neg_gain(x: float) -> float:
        g = sigma_max(m, [math.exp(x)], on_pole="nan")[0]
        return -g if np.isfinite(g) else 0.0

    x0 = math.log(freq)
    res = scipy.optimize.minimize_scalar(
        neg_gain, bounds=(x0 - 0.1, x0 + 0.1), method="bounded",
        options={"xatol": 1e-12})
    if -res.fun > value:
        return float(-res.fun), float(math.exp(res.x))
    return value, freq


def hinf_norm(m, tol: float = config.HINF_TOL) -> PeakGain:
    """Peak gain over frequency of a stable proper model, with its frequency."""
    m = as_model(m)
    if m.is_tf and not m.representation.is_proper():
        raise ImproperModelError("H-infinity norm needs a proper model")
    if not is_stable(m):
        raise UnstableModelError("H-infinity norm is only defined here for stable models")
    ss = m.ss
    if ss.n_states == 0:
        return PeakGain(float(np.linalg.norm(ss.D, 2)), 0.0)
    if not np.any(ss.C) and not np.any(ss.D):
        return PeakGain(0.0, 0.0)

    # coarse grid plus the pole frequencies, 0 and infinity
    p = poles(m)
    extra = np.concatenate([np.abs(p), np.abs(p.imag)])
    grid = np.unique(np.concatenate([
        default_grid(m, _INIT_POINTS).array, extra[extra > 0]]))
    lo, w_lo = _pick_peak(grid, sigma_max(m, grid, on_pole="nan"))
    if lo == 0.0:
        return PeakGain(0.0, 0.0)

    hi = 10.0 * lo
    for _ in range(MAX_GROWTH):
        if _crossing_frequencies(ss, hi).size == 0:
            break
        hi *= 10.0
    else:
        raise ConvergenceError("could not find an upper bound for the peak gain")

    for it in range(MAX_BISECTIONS):
        if hi - lo <= 2.0 * tol * lo:
            break
        gamma = 0.5 * (lo + hi)
        crossings = _crossing_frequencies(ss, gamma)
        if crossings.size == 0:
            hi = gamma
            continue
        trial = _trial_frequencies(crossings)
        value, freq = _pick_peak(trial, sigma_max(m, trial, on_pole="nan"))
        if value > lo * (1.0 + TIE_RTOL):
            lo, w_lo = value, freq
        if value < gamma:
            hi = gamma
        log.debug("bisection %d: lo=%.12g hi=%.12g", it, lo, hi)
    else:
        raise ConvergenceError("H-infinity bisection did not converge")

    value, freq = _polish(m, lo, w_lo)
    log.debug("peak gain %.12g at %.6g rad/s", value, freq)
    return PeakGain(value, freq)
