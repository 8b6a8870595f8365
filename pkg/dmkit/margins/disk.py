"""
Disk margins of SISO loops.

The disk D(alpha, sigma) is the image of |delta| <= alpha under
    f = (2 + (1 - sigma) delta) / (2 - (1 + sigma) delta).
The loop stays stable for every f in D(alpha, sigma) iff
alpha < 1 / ||S + (sigma - 1)/2||_inf, which disk_margin evaluates with
the H-infinity norm.

Responsibilities:
  - disk geometry (intercepts, center, radius, maximum phase)
  - the disk margin with its critical frequency and perturbation
  - guaranteed gain/phase margins and the gain/phase trade-off
  - Nyquist exclusion disks
  - frequency-dependent margins
"""
from __future__ import annotations
import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dmkit.exceptions import DimensionError, ModelInputError, UnsupportedGeometryError
from dmkit.helpers import sweep_map
from dmkit.lti import (LtiModel, TransferFunction, as_model, eval_siso, freq_response,
                       require_nominal_stability, sensitivity_pair)
from dmkit.specnorm import FrequencyGrid, hinf_norm

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# Disk sets
# ---------------------------------------------------------------------------

def disk_map(delta: complex, sigma: float) -> complex:
    """Gain/phase factor f for the normalized perturbation delta; inf past the pole."""
    den = 2.0 - (1.0 + sigma) * delta
    if abs(den) <= BOUNDARY_TOL * max(1.0, abs(delta)):
        return complex(math.inf, 0.0)
    return (2.0 + (1.0 - sigma) * delta) / den


class DiskKind(str, Enum):
    INTERIOR   = "interior-disk"
    HALF_PLANE = "half-plane"
    EXTERIOR   = "exterior-disk"


@dataclass(frozen=True)
class DiskSpec:
    alpha: float
    sigma: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ModelInputError(f"disk size must be positive, got {self.alpha}")
        if not math.isfinite(self.sigma):
            raise ModelInputError("disk skew must be finite")

    def f_of(self, delta: complex) -> complex:
        return disk_map(delta, self.sigma)

    def delta_of(self, f: complex) -> complex:
        return 2.0 * (f - 1.0) / ((1.0 - self.sigma) + (1.0 + self.sigma) * f)

    def contains(self, f: complex) -> bool:
        return abs(self.delta_of(f)) <= self.alpha


@dataclass(frozen=True)
class DiskGeometry:
    gamma_min: float
    gamma_max: float
    center: float
    radius: float
    phi_max: float
    kind: DiskKind

    @property
    def gain_range(self) -> tuple[float, float]:
        """Positive gains guaranteed by the disk: (lower, upper)."""
        lower = self.gamma_min if self.gamma_min > 0 else 0.0
        upper = self.gamma_max if 0 < self.gamma_max else math.inf
        return lower, upper

    @property
    def gamma_m(self) -> float:
        """The weaker of the two gain margins, min(1/gamma_min, gamma_max)."""
        lower, upper = self.gain_range
        inv = math.inf if lower == 0 else 1.0 / lower
        return min(inv, upper)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.copysign(math.inf, num)
    return num / den


def disk_geometry(spec: DiskSpec) -> DiskGeometry:
    a, s = spec.alpha, spec.sigma
    gmin = _ratio(2.0 - a * (1.0 - s), 2.0 + a * (1.0 + s))
    gmax = _ratio(2.0 + a * (1.0 - s), 2.0 - a * (1.0 + s))
    reach = a * abs(1.0 + s)
    if abs(reach - 2.0) <= BOUNDARY_TOL:
        finite = gmin if math.isfinite(gmin) else gmax
        if math.isinf(gmin) or math.isinf(gmax):
            gmin, gmax = (finite, math.inf) if s >= -1 else (-math.inf, finite)
        phi = math.pi / 2 if s >= -1 and finite >= 0 else math.inf
        return DiskGeometry(gmin, gmax, math.inf, math.inf, phi, DiskKind.HALF_PLANE)
    center = 0.5 * (gmin + gmax)
    radius = 0.5 * abs(gmax - gmin)
    if reach < 2.0:
        phi = math.asin(radius / center) if 0 < center and radius <= center else math.inf
        return DiskGeometry(gmin, gmax, center, radius, phi, DiskKind.INTERIOR)
    return DiskGeometry(gmin, gmax, center, radius, math.inf, DiskKind.EXTERIOR)


def disk_from_variation(gamma_min: float, gamma_max: float) -> DiskSpec:
    """The disk whose real-axis intercepts are exactly gamma_min and gamma_max.

    Requires 0 <= gamma_min < 1 < gamma_max; gamma_max = inf gives the
    half-plane disk through gamma_min.
    """
    if not (0.0 <= gamma_min < 1.0 < gamma_max):
        raise ModelInputError(
            f"gain variation needs 0 <= gamma_min < 1 < gamma_max, got [{gamma_min}, {gamma_max}]")
    if math.isinf(gamma_max):
        return DiskSpec(2.0 * (1.0 - gamma_min), gamma_min / (1.0 - gamma_min))
    low, high = 1.0 - gamma_min, gamma_max - 1.0
    alpha = 2.0 * high * low / (gamma_max - gamma_min)
    sigma = (gamma_max * gamma_min - 1.0) / (high * low)
    return DiskSpec(alpha, sigma)


def disk_from_phase(phi: float) -> DiskSpec:
    """The balanced (sigma = 0) disk whose phase margin is phi radians."""
    if not (0.0 < phi < math.pi / 2):
        raise ModelInputError(f"phase variation must lie in (0, pi/2) rad, got {phi}")
    return DiskSpec(2.0 * math.tan(phi / 2.0), 0.0)


def _phase_margin_of(geom: DiskGeometry) -> float:
    """Largest phase on the unit circle still inside the disk set."""
    if geom.kind is DiskKind.HALF_PLANE:
        c = geom.gamma_min if math.isfinite(geom.gamma_min) else -geom.gamma_max
    else:
        total = geom.gamma_min + geom.gamma_max
        if total == 0:
            return math.inf
        c = (1.0 + geom.gamma_min * geom.gamma_max) / total
    if abs(c) > 1.0:
        return math.inf
    return math.acos(c)


# ---------------------------------------------------------------------------
# Disk margin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskMarginResult:
    spec: DiskSpec
    omega_crit: float
    delta0: complex
    f0: complex
    geometry: DiskGeometry
    guaranteed_gm: tuple[float, float]
    guaranteed_pm: float
    peak_gain: float

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    @property
    def gamma_m(self) -> float:
        return self.geometry.gamma_m

    @property
    def f0_is_infinite(self) -> bool:
        return cmath.isinf(self.f0)


def _siso_loop(L) -> LtiModel:
    L = as_model(L).as_negative_feedback()
    if not L.is_siso:
        raise DimensionError(f"disk margins need a SISO loop, got {L.shape}")
    return L


def skewed_sensitivity(L, sigma: float) -> LtiModel:
    """S + (sigma - 1)/2 as a transfer function over the closed-loop denominator."""
    L = _siso_loop(L)
    S, _ = sensitivity_pair(L)
    loop, sden = L.siso_tf(), S.siso_tf().den
    c = 0.5 * (sigma - 1.0)
    num = loop.den * (1.0 + c) + loop.num * c
    return LtiModel(TransferFunction(num, sden))


def geometry_margins(geom: DiskGeometry) -> tuple[tuple[float, float], float]:
    """Guaranteed (gain range, phase margin) of a disk geometry."""
    return geom.gain_range, _phase_margin_of(geom)


def guaranteed_gm_pm(result: DiskMarginResult) -> tuple[tuple[float, float], float]:
    return geometry_margins(result.geometry)


def disk_margin(L, sigma: float = 0.0) -> DiskMarginResult:
    """Largest alpha with the loop stable for every f in D(alpha, sigma)."""
    L = _siso_loop(L)
    require_nominal_stability(L)
    M = skewed_sensitivity(L, sigma)
    peak = hinf_norm(M)
    if peak.value == 0.0:
        raise UnsupportedGeometryError(
            "S + (sigma - 1)/2 vanishes identically: the disk margin is unbounded")
    alpha = 1.0 / peak.value
    delta0 = 1.0 / eval_siso(M, peak.frequency)
    spec = DiskSpec(alpha, sigma)
    geom = disk_geometry(spec)
    log.debug("disk margin %.6g at %.6g rad/s (sigma=%g)", alpha, peak.frequency, sigma)
    return DiskMarginResult(
        spec=spec, omega_crit=peak.frequency, delta0=delta0, f0=spec.f_of(delta0),
        geometry=geom, guaranteed_gm=geom.gain_range,
        guaranteed_pm=_phase_margin_of(geom), peak_gain=peak.value)


def tolerates_variation(L, spec: DiskSpec) -> tuple[bool, DiskMarginResult]:
    """Whether every f in D(spec.alpha, spec.sigma) keeps L stable."""
    res = disk_margin(L, spec.sigma)
    ok = res.alpha >= spec.alpha
    log.info("variation disk alpha=%.6g sigma=%g %s (disk margin %.6g)",
             spec.alpha, spec.sigma, "tolerated" if ok else "not tolerated", res.alpha)
    return ok, res


# ---------------------------------------------------------------------------
# Gain / phase trade-off
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffRange:
    lower: float
    upper: float
    empty: bool = False


def gain_phase_tradeoff(result: DiskMarginResult | DiskGeometry, *,
                        gain: float | None = None, phase: float | None = None) -> TradeoffRange:
    """Admissible phases for a gain, or admissible gains for a phase (radians)."""
    geom = result.geometry if isinstance(result, DiskMarginResult) else result
    if geom.kind is not DiskKind.INTERIOR:
        raise UnsupportedGeometryError(
            f"trade-off needs an interior disk, got {geom.kind.value}")
    if (gain is None) == (phase is None):
        raise ModelInputError("give exactly one of gain or phase")
    total = geom.gamma_min + geom.gamma_max
    prod = geom.gamma_min * geom.gamma_max
    if gain is not None:
        if gain <= 0:
            raise ModelInputError("gain must be positive")
        c = (gain * gain + prod) / (gain * total)
        if c > 1.0:
            return TradeoffRange(0.0, 0.0, empty=True)
        if c < -1.0:
            return TradeoffRange(-math.inf, math.inf)
        phi = math.acos(c)
        return TradeoffRange(-phi, phi)
    b = total * math.cos(phase)
    disc = b * b - 4.0 * prod
    if disc < 0:
        return TradeoffRange(0.0, 0.0, empty=True)
    hi = 0.5 * (b + math.sqrt(disc))
    lo = 0.5 * (b - math.sqrt(disc))
    if hi <= 0:
        return TradeoffRange(0.0, 0.0, empty=True)
    return TradeoffRange(max(lo, 0.0), hi)


def safe_region_curve(spec: DiskSpec, n: int) -> list[tuple[float, float]]:
    """Boundary of D(alpha, sigma) as (gain dB, phase degrees), theta in [0, pi]."""
    if n < 2:
        raise ModelInputError("the curve needs at least two samples")
    out = []
    for theta in np.linspace(0.0, math.pi, n):
        f = spec.f_of(spec.alpha * cmath.exp(1j * theta))
        if cmath.isinf(f):
            out.append((math.inf, math.nan))
        elif f == 0:
            out.append((-math.inf, 0.0))
        else:
            out.append((20.0 * math.log10(abs(f)), math.degrees(cmath.phase(f))))
    return out


# ---------------------------------------------------------------------------
# Nyquist exclusion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExclusionDisk:
    center: float
    radius: float
    left: float
    right: float
    alpha: float
    sigma: float


def nyquist_exclusion(spec: DiskSpec) -> ExclusionDisk:
    """The disk {-1/f : f in D(alpha, sigma)} of the typical case."""
    g = disk_geometry(spec)
    if g.kind is not DiskKind.INTERIOR:
        raise UnsupportedGeometryError(
            f"exclusion region needs an interior disk, got {g.kind.value}")
    if not (0 < g.gamma_min < 1 < g.gamma_max < math.inf):
        raise UnsupportedGeometryError(
            "exclusion region needs 0 < gamma_min < 1 < gamma_max < inf, got "
            f"gamma_min={g.gamma_min:.6g}, gamma_max={g.gamma_max:.6g}")
    left, right = -1.0 / g.gamma_min, -1.0 / g.gamma_max
    return ExclusionDisk(0.5 * (left + right), 0.5 * (right - left), left, right,
                         spec.alpha, spec.sigma)


# ---------------------------------------------------------------------------
# Frequency-dependent margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginTrace:
    grid: FrequencyGrid
    alpha_of_omega: tuple[float, ...]
    gm_of_omega: tuple[tuple[float, float], ...]
    pm_of_omega: tuple[float, ...]
    gamma_m_of_omega: tuple[float, ...] = ()
    flags: tuple[int, ...] = field(default=())

    def minimum(self) -> tuple[float, float]:
        """(alpha, omega) of the smallest unflagged sample."""
        a = np.asarray(self.alpha_of_omega, dtype=float)
        i = int(np.nanargmin(a))
        return float(a[i]), self.grid.points[i]


def _sample(alpha: float, sigma: float) -> tuple[tuple[float, float], float, float]:
    if math.isnan(alpha):
        return (math.nan, math.nan), math.nan, math.nan
    if math.isinf(alpha):
        return (0.0, math.inf), math.inf, math.inf
    geom = disk_geometry(DiskSpec(alpha, sigma))
    return geom.gain_range, _phase_margin_of(geom), geom.gamma_m


def freq_margin_trace(L, sigma: float, grid: FrequencyGrid) -> MarginTrace:
    """alpha_max(w) = 1/|S(jw) + (sigma - 1)/2| on every grid point."""
    L = _siso_loop(L)
    require_nominal_stability(L)
    M = skewed_sensitivity(L, sigma)
    values = freq_response(M, grid.array, on_pole="nan")[:, 0, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = 1.0 / np.abs(values)
    flags = tuple(int(i) for i in np.flatnonzero(~np.isfinite(values)))
    if flags:
        log.warning("trace: %d grid point(s) hit a pole and were flagged", len(flags))
    samples = sweep_map(lambda a: _sample(float(a), sigma), alpha)
    return MarginTrace(
        grid=grid,
        alpha_of_omega=tuple(float(a) for a in alpha),
        gm_of_omega=tuple(s[0] for s in samples),
        pm_of_omega=tuple(s[1] for s in samples),
        gamma_m_of_omega=tuple(s[2] for s in samples),
        flags=flags)
