from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

import pmegreen as pg
from pmegreen.smoothing import DomainError


# -- envelope ---------------------------------------------------------------

def test_envelope_log_growth_closed_form():
    growth = pg.make_growth(form="power_log", params={"k": 2.0, "b": 2.0},
                            r0=math.e)
    # R^2 (log R / (b - 1) + 1); at R = e^2, b = 2 this is 3 e^4
    assert pg.green_ball_envelope(growth, math.e ** 2) == pytest.approx(
        3.0 * math.e ** 4, rel=1e-12)
    for R in (math.e, 10.0, 250.0):
        expected = R * R * (math.log(R) + 1.0)
        assert pg.green_ball_envelope(growth, R) == pytest.approx(
            expected, rel=1e-12)


def test_envelope_power_growth_closed_form():
    growth = pg.make_growth(form="power", params={"k": 4.0}, r0=1.0)
    # R^2 (k - 1)/(k - 2); k = 4 gives (3/2) R^2
    for R in (1.0, 2.0, 30.0):
        assert pg.green_ball_envelope(growth, R) == pytest.approx(
            1.5 * R * R, rel=1e-12)


def test_envelope_numeric_growth_matches_closed_form():
    closed = pg.make_growth(form="power", params={"k": 4.0}, r0=1.0)
    numeric = pg.make_growth(form="numeric",
                             params={"rate": lambda t: t ** 3}, r0=1.0)
    for R in (2.0, 10.0, 100.0):
        assert pg.green_ball_envelope(numeric, R) == pytest.approx(
            pg.green_ball_envelope(closed, R), rel=1e-8)


def test_envelope_domain_guard(growth3):
    with pytest.raises(DomainError):
        pg.green_ball_envelope(growth3, 0.5)


# -- radius-to-scale map ----------------------------------------------------

def quintic_bound(growth3):
    return pg.SmoothingBound(m=2.0, dimension=3, growth=growth3,
                             volume_floor=lambda R: R ** 3,
                             envelope=lambda R: R * R)


def test_data_scale_quintic_example(growth3):
    # volume floor R^3 with envelope R^2 and m = 2 gives theta(R) = R^5
    bound = quintic_bound(growth3)
    assert bound.data_scale(2.0) == pytest.approx(32.0, rel=1e-12)
    assert bound.radius_for_scale(32.0) == pytest.approx(2.0, rel=1e-9)


def test_data_scale_default_envelope_closed_form(euclid3, growth3):
    # euclidean n = 3 with cubic growth: theta(R) = 2 omega_3 R^5
    bound = pg.SmoothingBound.from_profile(euclid3, 2.0, growth3)
    om3 = 4.0 * math.pi / 3.0
    for R in (1.0, 2.0, 7.0):
        assert bound.data_scale(R) == pytest.approx(2.0 * om3 * R ** 5,
                                                    rel=1e-12)


@given(st.floats(min_value=1.0, max_value=100.0))
@settings(max_examples=20, deadline=None)
def test_radius_scale_round_trip(growth3, R):
    bound = quintic_bound(growth3)
    assert bound.radius_for_scale(bound.data_scale(R)) == pytest.approx(
        R, rel=1e-8)


def test_radius_for_scale_domain_guard(growth3):
    bound = quintic_bound(growth3)
    with pytest.raises(DomainError):
        bound.radius_for_scale(0.5)   # theta(r0) = 1 is the floor


def test_smoothing_bound_validation(euclid3, growth3):
    with pytest.raises(ValueError):
        pg.SmoothingBound.from_profile(euclid3, 1.0, growth3)
    bound = pg.SmoothingBound.from_profile(euclid3, 2.0, growth3)
    with pytest.raises(ValueError):
        bound.evaluate_l1(-1.0, 1.0)
    with pytest.raises(ValueError):
        bound.time_threshold(0.0)


# -- two-regime bound -------------------------------------------------------

def test_bound_regimes_and_threshold_tie(euclid3, growth3):
    bound = pg.SmoothingBound.from_profile(euclid3, 2.0, growth3)
    t_star = bound.time_threshold(1.0)
    below = bound.evaluate_l1(0.5 * t_star, 1.0)
    at = bound.evaluate_l1(t_star, 1.0)
    above = bound.evaluate_l1(2.0 * t_star, 1.0)
    assert below.regime == "small-time" and below.r_star is None
    assert at.regime == "large-time"
    assert at.tie_values is not None
    large, small = at.tie_values
    assert at.value == large
    assert above.regime == "large-time"
    assert above.r_star > bound.growth.r0


@pytest.mark.parametrize("case", ["euclid", "log"])
def test_bound_nonincreasing_within_each_regime(euclid3, growth3, case):
    # each branch decays monotonically; at the regime switch the two
    # constants need not match, so only a bounded jump is guaranteed
    if case == "euclid":
        bound = pg.SmoothingBound.from_profile(euclid3, 2.0, growth3)
    else:
        prof = pg.make_profile(form="power_log", dimension=4,
                               params={"lam": 3.0, "sigma": 1.0})
        growth = pg.make_growth(form="power_log",
                                params={"k": 2.0, "b": 2.0}, r0=3.0)
        bound = pg.SmoothingBound.from_profile(prof, 2.0, growth)
    ts = np.geomspace(1e-2, 1e6, 120)
    evals = [bound.evaluate_l1(float(t), 1.0) for t in ts]
    vals = np.array([e.value for e in evals])
    assert np.all(np.isfinite(vals)) and np.all(vals > 0.0)
    for lo, hi, e0, e1 in zip(vals[:-1], vals[1:], evals[:-1], evals[1:]):
        if e0.regime == e1.regime:
            assert hi <= lo * (1.0 + 1e-12)
        else:
            assert hi <= 3.0 * lo


def test_small_time_scalings(euclid3, growth3):
    bound = pg.SmoothingBound.from_profile(euclid3, 2.0, growth3)
    t_star = bound.time_threshold(1.0)
    t0 = 1e-3 * t_star
    # n = 3, m = 2: t exponent -3/5, data exponent 2/5
    v1 = bound.evaluate_l1(t0, 1.0).value
    v2 = bound.evaluate_l1(2.0 * t0, 1.0).value
    assert v2 / v1 == pytest.approx(2.0 ** (-0.6), rel=1e-12)
    # doubling the data size must not cross the regime threshold here
    v3 = bound.evaluate_l1(t0, 2.0).value
    assert v3 / v1 == pytest.approx(2.0 ** 0.4, rel=1e-12)


def test_weighted_data_bound():
    # m = 2, unit weighted norm: threshold at t = 1, value c/2 at t = 4
    ev = pg.smoothing_bound_l1g(2.0, 3, 4.0, 1.0)
    assert ev.regime == "large-time"
    assert ev.value == pytest.approx(0.5, rel=1e-14)
    assert ev.threshold_time == pytest.approx(1.0)
    # scaling the weighted norm by 2^m scales the large-time bound by 2
    base = pg.smoothing_bound_l1g(2.0, 3, 100.0, 1.0)
    scaled = pg.smoothing_bound_l1g(2.0, 3, 100.0, 2.0 ** 2)
    assert scaled.value / base.value == pytest.approx(2.0, rel=1e-13)
    small = pg.smoothing_bound_l1g(2.0, 3, 1e-3, 1.0)
    assert small.regime == "small-time"
    with pytest.raises(ValueError):
        pg.smoothing_bound_l1g(2.0, 3, -1.0, 1.0)
    with pytest.raises(ValueError):
        pg.smoothing_bound_l1g(0.5, 3, 1.0, 1.0)


# -- Lambert branch ---------------------------------------------------------

def test_lambert_anchor_values():
    assert pg.lambert_w0(0.0) == 0.0
    assert pg.lambert_w0(-math.exp(-1.0)) == -1.0
    assert pg.lambert_w0(math.e) == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(DomainError):
        pg.lambert_w0(-0.5)


def test_lambert_matches_scipy():
    xs = np.concatenate([np.geomspace(1e-3, 1e3, 40),
                         np.linspace(-0.36, -0.01, 20)])
    for x in xs:
        ref = float(scipy.special.lambertw(float(x)).real)
        # iteration stops on the residual w e^w - x, so the value error for
        # small |x| is the residual divided by |x|
        assert pg.lambert_w0(float(x)) == pytest.approx(ref, rel=2e-11,
                                                        abs=1e-13)


@given(st.floats(min_value=-1.0, max_value=20.0))
@settings(max_examples=40, deadline=None)
def test_lambert_round_trip(w):
    x = w * math.exp(w)
    got = pg.lambert_w0(x)
    assert got * math.exp(got) == pytest.approx(x, rel=1e-11, abs=1e-12)


# -- preset decay-rate families ---------------------------------------------

def test_power_family_rate_exponents():
    fam = pg.PowerVolumeFamily(dimension=5, k=3.0, delta=1.0, lam=3.0)
    # lam = 3, m = 2: t exponent -3/5, data exponent 2/5
    r1 = pg.family_rate(fam, 2.0, 1.0, 1.0)
    assert r1 == pytest.approx(1.0, rel=1e-14)
    assert pg.family_rate(fam, 2.0, 32.0, 1.0) == pytest.approx(
        32.0 ** (-0.6), rel=1e-13)
    assert pg.family_rate(fam, 2.0, 1.0, 32.0) == pytest.approx(
        32.0 ** 0.4, rel=1e-13)


def test_power_family_rate_forgets_certificate_params():
    a = pg.PowerVolumeFamily(dimension=5, k=3.0, delta=1.0, lam=3.0)
    b = pg.PowerVolumeFamily(dimension=5, k=5.0, delta=7.0, lam=3.0)
    for t in (0.5, 10.0, 1e4):
        assert pg.family_rate(a, 2.0, t, 2.0) == pg.family_rate(b, 2.0, t, 2.0)


def test_power_family_validation():
    with pytest.raises(ValueError):
        pg.PowerVolumeFamily(dimension=5, k=2.0, delta=1.0, lam=3.0)
    with pytest.raises(ValueError):
        pg.PowerVolumeFamily(dimension=5, k=3.0, delta=1.0, lam=6.0)
    with pytest.raises(ValueError):
        pg.LogVolumeFamily(dimension=4, delta=1.0, lam=3.0, sigma=1.0)


def test_log_family_power_resolution_exact():
    # sigma = -1/(m-1) collapses the implicit equation to a pure power law
    m = 2.0
    fam = pg.LogVolumeFamily(dimension=4, delta=2.0, lam=3.0, sigma=-1.0)
    a = 3.0 + 2.0 / (m - 1.0)
    for t, norm in ((100.0, 1.0), (1e4, 0.5), (50.0, 3.0)):
        s = t ** (1.0 / (m - 1.0)) * norm
        resolved = s ** (1.0 / a)
        manual = (t ** (-1.0 / (m - 1.0)) * resolved ** (2.0 / (m - 1.0)) *
                  math.log(resolved) ** (1.0 / (m - 1.0)))
        assert pg.family_rate(fam, m, t, norm) == pytest.approx(
            manual, rel=1e-14)
    with pytest.raises(DomainError):
        pg.family_rate(fam, m, 0.5, 1.0)   # resolved scale below 1


def test_log_family_tracks_generic_bound():
    # the closed-form family rate and the generic envelope bound agree up to
    # a bounded constant across both regimes
    prof = pg.make_profile(form="power_log", dimension=4,
                           params={"lam": 3.0, "sigma": 1.0})
    growth = pg.make_growth(form="power_log", params={"k": 2.0, "b": 2.0},
                            r0=3.0)
    bound = pg.SmoothingBound.from_profile(prof, 2.0, growth)
    fam = pg.LogVolumeFamily(dimension=4, delta=2.0, lam=3.0, sigma=1.0)
    ratios = []
    for t in np.geomspace(10.0, 1e6, 25):
        generic = bound.evaluate_l1(float(t), 1.0).value
        closed = pg.family_rate(fam, 2.0, float(t), 1.0)
        assert math.isfinite(generic) and math.isfinite(closed)
        ratios.append(generic / closed)
    ratios = np.asarray(ratios)
    assert np.all(ratios > 0.0)
    assert np.max(ratios) / np.min(ratios) < 3.0


def test_family_rate_validation():
    fam = pg.PowerVolumeFamily(dimension=5, k=3.0, delta=1.0, lam=3.0)
    with pytest.raises(ValueError):
        pg.family_rate(fam, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        pg.family_rate(fam, 2.0, -1.0, 1.0)
    with pytest.raises(TypeError):
        pg.family_rate(object(), 2.0, 1.0, 1.0)
