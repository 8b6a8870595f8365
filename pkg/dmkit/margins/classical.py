"""
Classical gain-only and phase-only margins of a SISO loop.

Candidate gains come from phase crossovers (L(jw) real and negative, plus
w = 0 and the ill-posed w = inf case); candidate phases from gain
crossovers (|L(jw)| = 1). Stability is constant between consecutive
candidates, so each gap is classified once by a closed-loop pole check.
"""
from __future__ import annotations
import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from dmkit import config
from dmkit.exceptions import DimensionError, DmkitError, NumericalFailureError
from dmkit.lti import (LtiModel, Polynomial, TransferFunction, as_model, is_stable, poly_roots,
                       require_nominal_stability, scalar_close)
from dmkit.specnorm import default_grid

log = logging.getLogger(__name__)

SCAN_POINTS = 4000
ROOT_CHECK  = 1e-8


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainMargins:
    g_lower: float
    g_upper: float
    freq_lower: float | None
    freq_upper: float | None
    phase_crossover_freqs: tuple[float, ...]
    stable_intervals: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PhaseMargin:
    phi_upper: float
    freq: float | None
    gain_crossover_freqs: tuple[float, ...]


@dataclass(frozen=True)
class ClassicalMargins:
    g_lower: float
    g_upper: float
    gain_crossover_freqs: tuple[float, ...]
    phase_crossover_freqs: tuple[float, ...]
    phi_upper: float
    critical_gain_freq: float | None
    critical_phase_freq: float | None
    critical_lower_gain_freq: float | None = None
    stable_intervals: tuple[tuple[float, float], ...] = ()
    diagnostics: tuple[str, ...] = field(default=())


# ---------------------------------------------------------------------------
# Crossover search
# ---------------------------------------------------------------------------

def _siso_loop(L) -> tuple[LtiModel, TransferFunction]:
    L = as_model(L).as_negative_feedback()
    if not L.is_siso:
        raise DimensionError(f"classical margins need a SISO loop, got {L.shape}")
    return L, L.siso_tf()


def _on_axis(p: Polynomial) -> np.ndarray:
    """Coefficients of p(j*w) as a polynomial in w."""
    return (1j) ** np.arange(p.degree, -1, -1) * p.array


def _crossing_estimates(tf: TransferFunction) -> list[float]:
    """Root magnitudes of |N(jw)|^2 - |D(jw)|^2 and Im N(jw) conj(D(jw)).

    Every gain and phase crossover is a real root of one of the two.
    """
    num, den = _on_axis(tf.num), _on_axis(tf.den)
    mag = np.polysub(np.real(np.polymul(num, num.conj())), np.real(np.polymul(den, den.conj())))
    imag = np.polysub(np.polymul(num.imag, den.real), np.polymul(num.real, den.imag))
    out: list[float] = []
    for coeffs in (mag, imag):
        poly = Polynomial.of(coeffs).trimmed()
        if poly.degree < 1:
            continue
        try:
            r = poly_roots(poly)
        except NumericalFailureError as e:
            log.debug("crossing polynomial roots failed: %s", e)
            continue
        w = np.abs(r[np.isfinite(r)])
        out.extend(float(x) for x in w if x > 0)
    return out


def _scan_grid(L: LtiModel, tf: TransferFunction) -> np.ndarray:
    grid = default_grid(L, SCAN_POINTS, include_sentinels=False).array
    res = [abs(p.imag) for p in tf.poles()] + [abs(z.imag) for z in tf.zeros()]
    marks = [r for r in res if r > 0] + _crossing_estimates(tf)
    extra = [w * k for w in marks for k in (0.999, 1.001)]
    return np.unique(np.concatenate([grid, extra]))


def _roots_of(fn, grid: np.ndarray, values: np.ndarray) -> list[float]:
    """Sign changes of *values* over *grid*, refined with brentq on *fn*."""
    roots: list[float] = []
    ok = np.isfinite(values)
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if not (ok[i] and ok[i + 1]):
            continue
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            try:
                r = scipy.optimize.brentq(fn, grid[i], grid[i + 1],
                                          xtol=1e-300, rtol=config.CROSSOVER_RTOL)
            except (ValueError, RuntimeError) as e:
                raise NumericalFailureError(f"crossover refinement failed: {e}") from e
            roots.append(float(r))
    return roots


def phase_crossovers(L) -> list[float]:
    """Frequencies w > 0 where L(jw) is real and negative."""
    L, tf = _siso_loop(L)
    grid = _scan_grid(L, tf)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = tf(1j * grid)
    imag = np.where(np.isfinite(vals), vals.imag, np.nan)
    roots = _roots_of(lambda w: tf(1j * w).imag, grid, imag)
    out = []
    for w in roots:
        v = tf(1j * w)
        if np.isfinite(v) and abs(v.imag) <= ROOT_CHECK * abs(v) and v.real < 0:
            out.append(w)
    return sorted(set(out))


def gain_crossovers(L) -> list[float]:
    """Frequencies w > 0 where |L(jw)| = 1."""
    L, tf = _siso_loop(L)
    grid = _scan_grid(L, tf)
    with np.errstate(divide="ignore", invalid="ignore"):
        logmag = np.log(np.abs(tf(1j * grid)))
    roots = _roots_of(lambda w: math.log(abs(tf(1j * w))), grid, logmag)
    out = [w for w in roots if abs(abs(tf(1j * w)) - 1.0) <= ROOT_CHECK]
    return sorted(set(out))


# ---------------------------------------------------------------------------
# Gain margins
# ---------------------------------------------------------------------------

def _stable_with_gain(L: LtiModel, g: float) -> bool:
    try:
        return is_stable(scalar_close(L, g))
    except DmkitError as e:  # an ill-posed closure is not stable
        log.debug("closure with gain %g failed: %s", g, e)
        return False


def _merge(intervals: list[tuple[float, float, bool]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for lo, hi, stable in intervals:
        if not stable:
            continue
        if merged and merged[-1][1] == lo:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    return [(a, b) for a, b in merged]


def gain_margins(L) -> GainMargins:
    L, tf = _siso_loop(L)
    require_nominal_stability(L)
    freqs = phase_crossovers(L)
    cands: dict[float, float] = {}

    def add(g: float, w: float) -> None:
        if g > 0 and math.isfinite(g) and (g not in cands or w < cands[g]):
            cands[g] = w

    for w in freqs:
        add(-1.0 / tf(1j * w).real, w)
    dc = tf.den(0.0)
    if dc != 0 and tf(0.0).real < 0:
        add(-1.0 / tf(0.0).real, 0.0)
    d_inf = tf.feedthrough()
    if d_inf < 0:
        add(-1.0 / d_inf, math.inf)

    gains = sorted(cands)
    edges = [0.0] + gains + [math.inf]
    spans = []
    for lo, hi in zip(edges, edges[1:]):
        if lo == 0:
            trial = 1.0 if math.isinf(hi) else hi / 2
        else:
            trial = 2 * lo if math.isinf(hi) else math.sqrt(lo * hi)
        spans.append((lo, hi, _stable_with_gain(L, trial)))
    intervals = _merge(spans)
    home = next((iv for iv in intervals if iv[0] < 1.0 < iv[1]), None)
    if home is None:
        raise NumericalFailureError("nominal gain is not inside a stable interval")
    g_lower, g_upper = home
    log.debug("gain candidates %s, stable intervals %s", gains, intervals)
    return GainMargins(
        g_lower=g_lower, g_upper=g_upper,
        freq_lower=cands.get(g_lower), freq_upper=cands.get(g_upper),
        phase_crossover_freqs=tuple(freqs), stable_intervals=tuple(intervals))


# ---------------------------------------------------------------------------
# Phase margin
# ---------------------------------------------------------------------------

def _complex_roots(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=complex), "f")
    if coeffs.size < 2:
        return np.zeros(0, dtype=complex)
    return scipy.linalg.eigvals(scipy.linalg.companion(coeffs))


def rotated_loop_poles(L, phi: float) -> np.ndarray:
    """Closed-loop poles with the loop rotated to e^{-j*phi} L."""
    _, tf = _siso_loop(L)
    num = np.polymul([cmath.exp(-1j * phi)], tf.num.array)
    return _complex_roots(np.polyadd(tf.den.array.astype(complex), num))


def _stable_with_phase(L, phi: float) -> bool:
    _, tf = _siso_loop(L)
    lead = tf.den.leading + (cmath.exp(-1j * phi) * tf.num.leading
                             if tf.num.degree == tf.den.degree else 0.0)
    if abs(lead) <= 1e-12 * abs(tf.den.leading):
        return False
    r = rotated_loop_poles(L, phi)
    return bool(np.all(r.real < -config.STABILITY_TOL))


def phase_margin(L) -> PhaseMargin:
    L, tf = _siso_loop(L)
    require_nominal_stability(L)
    freqs = gain_crossovers(L)
    cands: dict[float, float] = {}
    for w in freqs:
        cands.setdefault(abs(cmath.phase(-tf(1j * w))), w)
    d_inf = tf.feedthrough()
    if abs(abs(d_inf) - 1.0) <= 1e-12:
        cands.setdefault(abs(cmath.phase(-d_inf)), math.inf)

    phis = sorted(p for p in cands if p > 0)
    edges = [0.0] + phis + [math.pi]
    spans = []
    for lo, hi in zip(edges, edges[1:]):
        if hi <= lo:
            continue
        spans.append((lo, hi, _stable_with_phase(L, 0.5 * (lo + hi))))
    intervals = _merge(spans)
    home = next((iv for iv in intervals if iv[0] == 0.0), None)
    if home is None or home[1] >= math.pi:
        return PhaseMargin(math.inf, None, tuple(freqs))
    return PhaseMargin(home[1], cands[home[1]], tuple(freqs))


def classical_margins(L) -> ClassicalMargins:
    gm = gain_margins(L)
    pm = phase_margin(L)
    notes = []
    for lo, hi in gm.stable_intervals:
        if not (lo < 1.0 < hi):
            notes.append(f"closed loop is also stable for gains in ({lo:.6g}, {hi:.6g})")
    return ClassicalMargins(
        g_lower=gm.g_lower, g_upper=gm.g_upper,
        gain_crossover_freqs=pm.gain_crossover_freqs,
        phase_crossover_freqs=gm.phase_crossover_freqs,
        phi_upper=pm.phi_upper,
        critical_gain_freq=gm.freq_upper,
        critical_phase_freq=pm.freq,
        critical_lower_gain_freq=gm.freq_lower,
        stable_intervals=gm.stable_intervals,
        diagnostics=tuple(notes))
