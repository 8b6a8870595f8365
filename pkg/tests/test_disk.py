import cmath
import math

import numpy as np
import pytest

from dmkit.exceptions import (DimensionError, ModelInputError, NominalInstabilityError,
                              UnsupportedGeometryError)
from dmkit.lti import LtiModel, eval_siso, sensitivity_pair
from dmkit.margins import (DiskKind, DiskSpec, disk_from_phase, disk_from_variation, disk_geometry,
                           disk_map, disk_margin, geometry_margins, guaranteed_gm_pm,
                           freq_margin_trace, gain_phase_tradeoff, nyquist_exclusion,
                           safe_region_curve, skewed_sensitivity, tolerates_variation)
from dmkit.specnorm import FrequencyGrid, hinf_norm


# ---------------------------------------------------------------------------
# Disk sets and geometry
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("sigma", [-1.0, -0.5, 0.0, 0.7, 1.0])
def test_disk_map_fixed_points(sigma):
    assert disk_map(0.0, sigma) == pytest.approx(1.0)
    spec = DiskSpec(0.4, sigma)
    for delta in (0.1, -0.3j, 0.2 + 0.2j):
        assert spec.delta_of(spec.f_of(delta)) == pytest.approx(delta, abs=1e-12)


def test_disk_map_pole_is_infinite():
    assert cmath.isinf(disk_map(2.0, 0.0))
    assert cmath.isinf(disk_map(1.0, 1.0))


def test_symmetric_geometry():
    g = disk_geometry(DiskSpec(0.46, 0.0))
    assert g.kind is DiskKind.INTERIOR
    assert g.gamma_min == pytest.approx(1.54 / 2.46)
    assert g.gamma_max == pytest.approx(2.46 / 1.54)
    # symmetric disks have reciprocal intercepts
    assert g.gamma_min * g.gamma_max == pytest.approx(1.0)
    assert g.center == pytest.approx(0.5 * (g.gamma_min + g.gamma_max))


def test_complementary_sensitivity_disk():
    g = disk_geometry(DiskSpec(0.3, -1.0))
    assert (g.gamma_min, g.gamma_max) == pytest.approx((0.7, 1.3))


def test_half_plane_geometry():
    g = disk_geometry(DiskSpec(2.0, 0.0))
    assert g.kind is DiskKind.HALF_PLANE
    assert g.gamma_min == pytest.approx(0.0)
    assert math.isinf(g.gamma_max)
    assert g.gain_range == (0.0, math.inf)
    assert math.degrees(g.phi_max) == pytest.approx(90.0)


def test_exterior_geometry():
    g = disk_geometry(DiskSpec(3.0, 0.0))
    assert g.kind is DiskKind.EXTERIOR
    assert math.isinf(g.phi_max)


def test_skewed_intercepts():
    g = disk_geometry(DiskSpec(0.75, 0.2))
    assert g.gamma_min == pytest.approx(1.4 / 2.9)
    assert g.gamma_max == pytest.approx(2.6 / 1.1)


def test_phase_margin_of_symmetric_disk():
    (gmin, gmax), pm = geometry_margins(disk_geometry(DiskSpec(0.75, 0.0)))
    assert (gmin, gmax) == pytest.approx((5 / 11, 11 / 5))
    assert pm == pytest.approx(math.acos(2 / (5 / 11 + 11 / 5)))
    assert math.degrees(pm) == pytest.approx(41.1, abs=0.05)


def test_vanishing_disk_has_no_margins():
    (gmin, gmax), pm = geometry_margins(disk_geometry(DiskSpec(1e-3, 0.0)))
    assert gmin == pytest.approx(1.0, abs=2e-3)
    assert gmax == pytest.approx(1.0, abs=2e-3)
    assert 0.0 < pm < 2e-3


def test_disk_spec_validation():
    with pytest.raises(ModelInputError):
        DiskSpec(0.0)
    with pytest.raises(ModelInputError):
        DiskSpec(1.0, math.inf)


def test_contains():
    spec = DiskSpec(0.46, 0.0)
    g = disk_geometry(spec)
    assert spec.contains(1.0)
    assert spec.contains(g.gamma_min * 1.0001)
    assert not spec.contains(g.gamma_max * 1.01)


INTERIOR_DISKS = [(0.3, 0.0), (0.75, 0.2), (0.5, -0.8), (1.2, -0.4), (0.9, 0.9)]


@pytest.mark.parametrize("alpha, sigma", INTERIOR_DISKS)
def test_intercept_spread(alpha, sigma):
    g = disk_geometry(DiskSpec(alpha, sigma))
    spread = 8 * alpha / (4 - alpha ** 2 * (1 + sigma) ** 2)
    assert g.gamma_max - g.gamma_min == pytest.approx(spread, rel=1e-12)
    assert g.radius == pytest.approx(spread / 2, rel=1e-12)


@pytest.mark.parametrize("alpha, sigma", INTERIOR_DISKS)
def test_disk_from_variation_hits_the_intercepts(alpha, sigma):
    g = disk_geometry(DiskSpec(alpha, sigma))
    spec = disk_from_variation(g.gamma_min, g.gamma_max)
    assert spec.alpha == pytest.approx(alpha, rel=1e-9)
    assert spec.sigma == pytest.approx(sigma, abs=1e-9)


def test_balanced_gain_variation():
    spec = disk_from_variation(0.5, 2.0)
    assert spec.alpha == pytest.approx(2 / 3)
    assert spec.sigma == pytest.approx(0.0, abs=1e-15)


def test_unbounded_gain_variation_is_a_half_plane():
    spec = disk_from_variation(0.25, math.inf)
    assert spec.alpha == pytest.approx(1.5)
    assert spec.sigma == pytest.approx(1 / 3)
    g = disk_geometry(spec)
    assert g.kind is DiskKind.HALF_PLANE
    assert g.gamma_min == pytest.approx(0.25)


@pytest.mark.parametrize("gmin, gmax", [(1.2, 2.0), (0.5, 0.9), (-0.1, 2.0), (0.5, 1.0)])
def test_gain_variation_must_straddle_one(gmin, gmax):
    with pytest.raises(ModelInputError):
        disk_from_variation(gmin, gmax)


def test_disk_from_phase():
    spec = disk_from_phase(math.radians(30.0))
    assert spec.sigma == 0.0
    assert spec.alpha == pytest.approx(2 * math.tan(math.radians(15.0)))
    _, pm = geometry_margins(disk_geometry(spec))
    assert math.degrees(pm) == pytest.approx(30.0, rel=1e-9)
    for bad in (0.0, math.pi / 2):
        with pytest.raises(ModelInputError):
            disk_from_phase(bad)


def test_tolerates_variation(example1):
    ok, res = tolerates_variation(example1, disk_from_variation(0.9, 1.1))
    assert ok
    assert res.spec.sigma == pytest.approx(-1.0)
    assert res.alpha == pytest.approx(disk_margin(example1, res.spec.sigma).alpha)
    ok, res = tolerates_variation(example1, disk_from_variation(0.2, 5.0))
    assert not ok
    assert res.alpha == pytest.approx(0.46, abs=0.005)
    assert tolerates_variation(example1, disk_from_phase(math.radians(10.0)))[0]


# ---------------------------------------------------------------------------
# Disk margin
# ---------------------------------------------------------------------------

def test_example1_symmetric_disk_margin(example1):
    res = disk_margin(example1, 0.0)
    assert res.alpha == pytest.approx(0.46, abs=0.005)
    assert res.omega_crit == pytest.approx(1.94, abs=0.02)
    assert res.peak_gain == pytest.approx(2.18, abs=0.01)
    assert res.delta0 == pytest.approx(0.212 - 0.406j, abs=0.005)
    assert res.f0 == pytest.approx(1.128 - 0.483j, abs=0.01)
    (gmin, gmax), pm = res.guaranteed_gm, res.guaranteed_pm
    assert gmin == pytest.approx(0.63, abs=0.01)
    assert gmax == pytest.approx(1.59, abs=0.01)
    assert math.degrees(pm) == pytest.approx(25.8, abs=0.2)
    assert abs(res.delta0) == pytest.approx(res.alpha, rel=1e-9)
    assert guaranteed_gm_pm(res) == (res.guaranteed_gm, res.guaranteed_pm)


def test_disk_margin_is_no_larger_than_classical(example1):
    res = disk_margin(example1, 0.0)
    gmin, gmax = res.guaranteed_gm
    assert gmax < 3.6
    assert math.degrees(res.guaranteed_pm) < 29.1


def test_critical_perturbation_makes_return_difference_vanish(example1, bad_loop):
    for L in (example1, bad_loop):
        for sigma in (-1.0, 0.0, 1.0):
            res = disk_margin(L, sigma)
            value = eval_siso(L, res.omega_crit)
            assert abs(1.0 + res.f0 * value) < 1e-6


@pytest.mark.parametrize("sigma,pick", [(1.0, "S"), (-1.0, "T"), (0.0, "half-difference")])
def test_special_skews_match_sensitivity_norms(example1, bad_loop, sigma, pick):
    for L in (example1, bad_loop):
        S, T = sensitivity_pair(L)
        tf_s, tf_t = S.siso_tf(), T.siso_tf()
        if pick == "S":
            ref = hinf_norm(S).value
        elif pick == "T":
            ref = hinf_norm(T).value
        else:
            half = LtiModel(type(tf_s)(tf_s.num * 0.5 - tf_t.num * 0.5, tf_s.den))
            ref = hinf_norm(half).value
        assert disk_margin(L, sigma).peak_gain == pytest.approx(ref, rel=1e-9)


def test_skewed_sensitivity_definition(example1):
    S, _ = sensitivity_pair(example1)
    for sigma in (-0.4, 0.0, 2.0):
        M = skewed_sensitivity(example1, sigma)
        for w in (0.3, 2.0, 9.0):
            assert eval_siso(M, w) == pytest.approx(eval_siso(S, w) + 0.5 * (sigma - 1), rel=1e-12)


def test_bad_loop_has_a_small_sensitivity_disk(bad_loop):
    assert disk_margin(bad_loop, 1.0).alpha < 0.3


def test_integrator_reaches_the_half_plane(integrator):
    res = disk_margin(integrator, 0.0)
    assert res.alpha == pytest.approx(2.0, rel=1e-9)
    assert res.geometry.kind is DiskKind.HALF_PLANE
    gmin, gmax = res.guaranteed_gm
    assert gmin == pytest.approx(0.0, abs=1e-9)
    assert gmax > 1e9
    assert math.degrees(res.guaranteed_pm) == pytest.approx(90.0)
    assert abs(res.f0) < 1e-9


def test_disk_interior_keeps_loop_stable(example1):
    rng = np.random.default_rng(7)
    tf = example1.siso_tf()
    for sigma in (-1.0, 0.0, 1.0):
        alpha = disk_margin(example1, sigma).alpha
        spec = DiskSpec(alpha, sigma)
        for _ in range(100):
            delta = 0.95 * alpha * math.sqrt(rng.uniform()) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
            f = spec.f_of(delta)
            char = np.polyadd(tf.den.array.astype(complex), f * tf.num.array)
            assert np.all(np.roots(char).real < 0)


def test_random_loops_stay_stable_inside_the_disk():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        den = np.poly(-rng.uniform(0.5, 5.0, size=3))
        # below the Routh limit p1*p2 > p3 + k
        k = rng.uniform(0.05, 0.9) * (den[1] * den[2] - den[3])
        sigma = rng.uniform(-1.0, 1.0)
        spec = DiskSpec(disk_margin(LtiModel.from_tf([k], den), sigma).alpha, sigma)
        for _ in range(25):
            delta = 0.95 * spec.alpha * math.sqrt(rng.uniform()) * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
            f = spec.f_of(delta)
            if not cmath.isfinite(f):
                continue
            char = den.astype(complex)
            char[-1] += f * k
            assert np.all(np.roots(char).real < 0)


def test_disk_margin_needs_siso_stable_loop(satellite_plant):
    with pytest.raises(DimensionError):
        disk_margin(satellite_plant)
    with pytest.raises(NominalInstabilityError):
        disk_margin(LtiModel.from_tf([-2], [1, 1]))


def test_static_loop_vanishing_sensitivity_term():
    # S = 1/(1 + 1) = 0.5 so S - 1/2 is identically zero
    with pytest.raises(UnsupportedGeometryError):
        disk_margin(LtiModel.from_tf([1], [1]), 0.0)


# ---------------------------------------------------------------------------
# Trade-off and safe region
# ---------------------------------------------------------------------------

def test_tradeoff_end_points(example1):
    res = disk_margin(example1, 0.0)
    at_unity = gain_phase_tradeoff(res, gain=1.0)
    assert at_unity.upper == pytest.approx(res.guaranteed_pm, rel=1e-9)
    assert at_unity.lower == pytest.approx(-res.guaranteed_pm, rel=1e-9)
    at_zero = gain_phase_tradeoff(res, phase=0.0)
    assert (at_zero.lower, at_zero.upper) == pytest.approx(res.guaranteed_gm, rel=1e-9)


def test_tradeoff_shrinks_and_empties(example1):
    res = disk_margin(example1, 0.0)
    gmin, gmax = res.guaranteed_gm
    assert gain_phase_tradeoff(res, gain=0.5 * (1 + gmax)).upper < res.guaranteed_pm
    assert gain_phase_tradeoff(res, gain=1.1 * gmax).empty
    assert gain_phase_tradeoff(res, phase=1.1 * res.guaranteed_pm).empty


def test_tradeoff_arguments():
    geom = disk_geometry(DiskSpec(0.5, 0.0))
    with pytest.raises(ModelInputError):
        gain_phase_tradeoff(geom)
    with pytest.raises(ModelInputError):
        gain_phase_tradeoff(geom, gain=1.0, phase=0.1)
    with pytest.raises(UnsupportedGeometryError):
        gain_phase_tradeoff(disk_geometry(DiskSpec(2.5, 0.0)), gain=1.0)


def test_safe_region_curve_end_points():
    spec = DiskSpec(0.46, 0.0)
    g = disk_geometry(spec)
    curve = safe_region_curve(spec, 2001)
    assert len(curve) == 2001
    assert curve[0] == pytest.approx((20 * math.log10(g.gamma_max), 0.0))
    assert curve[-1][0] == pytest.approx(20 * math.log10(g.gamma_min))
    assert max(abs(p) for _, p in curve) == pytest.approx(math.degrees(g.phi_max), rel=1e-3)


# ---------------------------------------------------------------------------
# Nyquist exclusion
# ---------------------------------------------------------------------------

def test_exclusion_disk_of_example1(example1):
    res = disk_margin(example1, 0.0)
    ex = nyquist_exclusion(res.spec)
    g = res.geometry
    assert ex.left == pytest.approx(-1 / g.gamma_min)
    assert ex.right == pytest.approx(-1 / g.gamma_max)
    assert ex.left < -1.0 < ex.right
    w = np.logspace(-3, 3, 20_000)
    values = example1.siso_tf()(1j * w)
    assert np.min(np.abs(values - ex.center)) >= ex.radius * (1 - 1e-6)
    # the Nyquist curve touches the disk at -1/f0
    touch = -1.0 / res.f0
    assert abs(abs(touch - ex.center) - ex.radius) < 1e-6


def test_exclusion_needs_typical_disk():
    with pytest.raises(UnsupportedGeometryError):
        nyquist_exclusion(DiskSpec(2.0, 0.0))
    with pytest.raises(UnsupportedGeometryError):
        nyquist_exclusion(DiskSpec(1.5, -1.0))


# ---------------------------------------------------------------------------
# Frequency-dependent margins
# ---------------------------------------------------------------------------

def test_trace_minimum_matches_disk_margin(example1):
    res = disk_margin(example1, 0.0)
    grid = FrequencyGrid.logspace(0.01, 100, 4000)
    alpha, omega = freq_margin_trace(example1, 0.0, grid).minimum()
    assert alpha == pytest.approx(res.alpha, rel=1e-3)
    assert omega == pytest.approx(res.omega_crit, rel=1e-2)


def test_resonant_loop_trace(example5):
    grid = FrequencyGrid.logspace(0.1, 1000, 400)
    tr = freq_margin_trace(example5, 0.0, grid)
    w = grid.array
    alpha = np.asarray(tr.alpha_of_omega)
    pm = np.degrees(np.asarray(tr.pm_of_omega))
    high = w >= 100
    np.testing.assert_allclose(alpha[high], 2.0, rtol=0.01)
    np.testing.assert_allclose(pm[high], 90.0, rtol=0.01)
    band = (w >= 5) & (w <= 20)
    assert alpha[band].min() < alpha[band][0]
    assert alpha[band].min() < alpha[band][-1]
    assert tr.flags == ()
    assert len(tr.gamma_m_of_omega) == len(grid)
