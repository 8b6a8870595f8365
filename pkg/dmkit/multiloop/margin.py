"""
Multi-loop disk margins: simultaneous, independent f_i in D(alpha, sigma)
at every perturbed channel.

The loop at the points is rewritten as M = (I + L)^-1 + (sigma - 1)/2 I
in feedback with Delta = diag(delta_i). The margin is 1 / peak mu(M(jw)),
bracketed by the two mu bounds.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from dmkit import config
from dmkit.exceptions import (AlgebraicLoopError, ModelInputError, UnstableModelError,
                              UnsupportedGeometryError, WellPosednessError)
from dmkit.helpers import sweep_map
from dmkit.lti import (LtiModel, StateSpace, eval_freq, freq_response, is_stable,
                       poles, require_nominal_stability, scalar_close, sensitivity_pair)
from dmkit.margins import (DiskGeometry, DiskSpec, VerificationReport, check_closure,
                           disk_geometry, disk_map, geometry_margins, skewed_sensitivity)
from dmkit.multiloop.loops import ChannelList, Points, PointSpec, as_points, loop_at_points
from dmkit.multiloop.mu import MuResult, mu_diag, mu_quick
from dmkit.specnorm import FrequencyGrid, default_grid, hinf_norm

log = logging.getLogger(__name__)

REFINE_PEAKS = 3


# ---------------------------------------------------------------------------
# M-Delta system
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MDeltaSystem:
    M: LtiModel
    n: int
    sigma: float
    points: str = Points.INPUT.value


def _full_loop(P, K, points: PointSpec) -> LtiModel:
    if isinstance(points, ChannelList):
        return loop_at_points(P, K, Points.IO if K is not None else Points.INPUT)
    return loop_at_points(P, K, points)


def _channel_label(points: PointSpec) -> str:
    if isinstance(points, ChannelList):
        return ",".join(str(c) for c in points.channels)
    return points.value


def build_m(P, K=None, points: PointSpec | str = Points.INPUT, sigma: float = 0.0) -> MDeltaSystem:
    """M = S + (sigma - 1)/2 I at the chosen perturbation points."""
    points = as_points(points)
    L = _full_loop(P, K, points)
    require_nominal_stability(L)
    if L.is_siso and L.is_tf:
        M = skewed_sensitivity(L, sigma)
    else:
        S, _ = sensitivity_pair(L)
        n = L.shape[0]
        s = S.ss
        M = LtiModel(StateSpace(s.A, s.B, s.C, s.D + 0.5 * (sigma - 1.0) * np.eye(n)))
    if isinstance(points, ChannelList):
        points.check(M.shape[0])
        idx = list(points.channels)
        M = LtiModel(M.ss.select(idx, idx))
    if not is_stable(M):
        raise UnstableModelError("M is not stable although the nominal loop is")
    return MDeltaSystem(M, M.shape[0], sigma, _channel_label(points))


# ---------------------------------------------------------------------------
# Margin
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiLoopResult:
    alpha_lower: float
    alpha_upper: float
    omega_crit: float
    delta_worst: tuple[complex, ...]
    f_worst: tuple[complex, ...]
    geometry: DiskGeometry
    guaranteed_gm: tuple[float, float]
    guaranteed_pm: float
    peak_upper: float
    peak_lower: float
    omega_upper: float
    sigma: float
    n_channels: int
    inconclusive: bool = False
    refinements: int = 0
    grid: FrequencyGrid | None = None
    upper_of_omega: tuple[float, ...] = field(default=())
    lower_of_omega: tuple[float, ...] = field(default=())

    @property
    def gap(self) -> float:
        return (self.peak_upper - self.peak_lower) / self.peak_upper


def _finish(sys: MDeltaSystem, upper: float, lower: float, omega_crit: float,
            omega_upper: float, delta: np.ndarray, **extra) -> MultiLoopResult:
    if upper == 0.0:
        raise UnsupportedGeometryError("M vanishes at every frequency: the margin is unbounded")
    alpha_lower = 1.0 / upper
    alpha_upper = 1.0 / lower if lower > 0 else math.inf
    geom = disk_geometry(DiskSpec(alpha_lower, sys.sigma))
    gm, pm = geometry_margins(geom)
    d = tuple(complex(x) for x in np.diag(delta))
    gap = (upper - lower) / upper
    inconclusive = gap > config.INCONCLUSIVE_GAP
    if inconclusive:
        log.warning("mu bounds differ by %.1f%% at the peak: margin is only bracketed", 100 * gap)
    return MultiLoopResult(
        alpha_lower=alpha_lower, alpha_upper=alpha_upper, omega_crit=omega_crit,
        delta_worst=d, f_worst=tuple(disk_map(x, sys.sigma) for x in d),
        geometry=geom, guaranteed_gm=gm, guaranteed_pm=pm,
        peak_upper=upper, peak_lower=lower, omega_upper=omega_upper,
        sigma=sys.sigma, n_channels=sys.n, inconclusive=inconclusive, **extra)


def _refine(M: LtiModel, w: np.ndarray, i: int, value: float) -> float:
    """Frequency of the local upper-bound peak next to grid index i."""
    wi = w[i]
    if wi == 0.0 or math.isinf(wi):
        return wi
    lo = w[i - 1] if i > 0 and w[i - 1] > 0 else wi / 10.0
    hi = w[i + 1] if i + 1 < len(w) and math.isfinite(w[i + 1]) else wi * 10.0

    def neg_upper(x: float) -> float:
        return -mu_quick(eval_freq(M, math.exp(x)))[0]

    res = scipy.optimize.minimize_scalar(
        neg_upper, bounds=(math.log(lo), math.log(hi)), method="bounded",
        options={"xatol": 1e-8})
    return float(math.exp(res.x)) if -res.fun > value else wi


def multiloop_margin(sys: MDeltaSystem, grid: FrequencyGrid | None = None,
                     tol: float = config.MU_TOL, restarts: int = config.MU_RESTARTS,
                     seed: int | None = None) -> MultiLoopResult:
    M = sys.M
    if sys.n == 1:
        peak = hinf_norm(M)
        m = complex(eval_freq(M, peak.frequency)[0, 0])
        return _finish(sys, peak.value, peak.value, peak.frequency, peak.frequency,
                       np.array([[1.0 / m]]))

    if grid is None:
        grid = default_grid(M, config.DEFAULT_GRID_POINTS)
    w = grid.array
    G = freq_response(M, w)
    quick = sweep_map(mu_quick, list(G))
    uppers = np.array([q[0] for q in quick])
    lowers = np.array([q[1] for q in quick])
    log.debug("mu sweep over %d frequencies, peak upper %.6g", len(w), uppers.max())

    fulls: list[MuResult] = []
    for i in np.argsort(uppers)[::-1][:REFINE_PEAKS]:
        wr = _refine(M, w, int(i), float(uppers[i]))
        fulls.append(mu_diag(eval_freq(M, wr), tol, restarts, seed, frequency=wr))

    best_up = max(fulls, key=lambda r: r.upper)
    best_lo = max(fulls, key=lambda r: r.lower)
    upper, omega_upper = best_up.upper, best_up.frequency
    j = int(np.argmax(lowers))
    if lowers[j] > best_lo.lower:
        lower, omega_crit, delta = float(lowers[j]), float(w[j]), quick[j][2]
    else:
        lower, omega_crit, delta = best_lo.lower, best_lo.frequency, best_lo.delta_worst
    return _finish(sys, max(upper, lower), lower, omega_crit, omega_upper, delta,
                   refinements=len(fulls), grid=grid,
                   upper_of_omega=tuple(float(u) for u in uppers),
                   lower_of_omega=tuple(float(x) for x in lowers))


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiLoopVerification:
    stable: bool
    ill_posed: bool
    rightmost_pole: complex | None
    at_frequency: VerificationReport | None = None


def verify_multiloop_destabilizing(P, K, points: PointSpec | str, f_list,
                                   omega: float | None = None,
                                   rtol: float = config.VERIFY_RTOL) -> MultiLoopVerification:
    """Close every perturbed channel with its f_i and report the outcome."""
    points = as_points(points)
    L = _full_loop(P, K, points)
    n = L.shape[0]
    fs = [1.0] * n
    chans = list(points.channels) if isinstance(points, ChannelList) else list(range(n))
    if isinstance(points, ChannelList):
        points.check(n)
    if len(f_list) != len(chans):
        raise ModelInputError(f"{len(f_list)} perturbations for {len(chans)} channels")
    for c, f in zip(chans, f_list):
        fs[c] = f
    try:
        cl = scalar_close(L, fs, omega)
    except (WellPosednessError, AlgebraicLoopError) as e:
        log.info("multi-loop closure is ill-posed: %s", e)
        report = None
        if omega is not None:
            report = check_closure(lambda: scalar_close(L, fs, omega), omega, rtol)
        return MultiLoopVerification(False, True, None, report)
    p = poles(cl)
    right = complex(p[int(np.argmax(p.real))]) if p.size else None
    stable = bool(np.all(p.real < -config.STABILITY_TOL))
    report = check_closure(lambda: cl, omega, rtol) if omega is not None else None
    log.info("multi-loop closure with f=%s: %s", fs, "stable" if stable else "unstable")
    return MultiLoopVerification(stable, False, right, report)
