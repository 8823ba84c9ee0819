"""Velocity extraction: analytic optimum, arrival bisection, cone fitting.

Frozen numeric values in this file were computed once with the exact count
table and are regression-pinned; synthetic-model tests check that each fit
recovers its own model class to near machine precision.
"""

import math

import numpy as np
import pytest

from lrcone.lrbound import BoundEvaluator, Couplings, DpCountSource
from lrcone.velocity import (
    ArrivalTime,
    analytic_velocity,
    arrival_time,
    extract_velocity,
    fit_lightcone,
    geodesic_bracket_time,
    optimize_kappa,
    velocity_report_to_json_dict,
)

HALF = Couplings(g=0.5, J=0.5)


@pytest.fixture(scope="module")
def evaluator():
    return BoundEvaluator(HALF, source=DpCountSource(n_max=128))


@pytest.fixture(scope="module")
def small_window_report(evaluator):
    return extract_velocity(
        HALF, d_values=[4, 6, 8, 10, 12], epsilon=1e-6, evaluator=evaluator
    )


# ---------------------------------------------------------------------------
# Analytic route.
# ---------------------------------------------------------------------------


def test_kappa_optimum_is_one_and_objective_is_e():
    opt = optimize_kappa(HALF)
    assert abs(opt.kappa_star - 1.0) <= 1e-9
    assert abs(opt.objective_min - math.e) <= 1e-9
    assert opt.is_interior


@pytest.mark.parametrize(
    "g,J,expected",
    [
        (0.5, 0.5, math.e),  # c = sqrt(0.5): v = sqrt(2) e sqrt(0.5) = e
        (1.0, 1.0, 2.0 * math.e),  # c = sqrt(2): v = 2 e
        (2.0, 2.0, 4.0 * math.e),
    ],
)
def test_analytic_velocity_closed_forms(g, J, expected):
    cpl = Couplings(g=g, J=J)
    opt = optimize_kappa(cpl)
    assert opt.v_lr == pytest.approx(expected, rel=1e-12)
    assert analytic_velocity(cpl) == pytest.approx(opt.v_lr, rel=1e-12)


def test_objective_unimodal_on_grid():
    grid = np.arange(0.1, 5.0, 0.01)
    values = np.exp(grid) / grid
    k_min = int(np.argmin(values))
    assert 0 < k_min < len(grid) - 1
    assert abs(grid[k_min] - 1.0) <= 0.01 + 1e-12
    diffs = np.diff(values)
    assert np.all(diffs[:k_min] < 0) and np.all(diffs[k_min:] > 0)


# ---------------------------------------------------------------------------
# Arrival times.
# ---------------------------------------------------------------------------


def test_geodesic_time_brackets_the_threshold(evaluator):
    for d, eps in [(3, 1e-6), (8, 1e-8), (12, 1e-4)]:
        t_hi = geodesic_bracket_time(d, eps, HALF)
        assert evaluator.evaluate(t_hi, d).value >= eps


def test_arrival_time_regression_value():
    # Headline couplings, eps = 1e-8, d = 12, series rel_tol 1e-12.
    ev = BoundEvaluator(HALF, source=DpCountSource(n_max=128), rel_tol=1e-12)
    a = arrival_time(12, 1e-8, ev)
    assert a.time == pytest.approx(5.904347112225421, rel=1e-9)


@pytest.mark.parametrize("d,eps", [(3, 1e-6), (6, 1e-8), (10, 1e-6)])
def test_arrival_residual_within_tolerance(evaluator, d, eps):
    a = arrival_time(d, eps, evaluator)
    assert abs(a.bound_value - eps) <= 1e-6 * eps


def test_arrival_time_increases_with_distance(evaluator):
    times = [arrival_time(d, 1e-6, evaluator).time for d in (4, 6, 8, 10)]
    assert all(b > a for a, b in zip(times, times[1:]))


def test_arrival_time_deterministic(evaluator):
    a1 = arrival_time(5, 1e-7, evaluator)
    a2 = arrival_time(5, 1e-7, evaluator)
    assert a1 == a2


def test_arrival_time_scales_exactly_with_coupling_product(evaluator):
    # B depends on (g, J, t) only via t sqrt(g J): quadrupling g and J
    # divides every arrival time by 4.
    strong_ev = BoundEvaluator(Couplings(g=2.0, J=2.0), source=evaluator.source)
    weak = arrival_time(6, 1e-6, evaluator)
    strong = arrival_time(6, 1e-6, strong_ev)
    assert weak.time == pytest.approx(4.0 * strong.time, rel=1e-12)


def test_arrival_time_validation(evaluator):
    with pytest.raises(ValueError, match="d must be"):
        arrival_time(0, 1e-6, evaluator)
    with pytest.raises(ValueError, match="epsilon"):
        arrival_time(3, 0.0, evaluator)
    with pytest.raises(ValueError, match="time_rel_tol"):
        arrival_time(3, 1e-6, evaluator, time_rel_tol=0.0)


# ---------------------------------------------------------------------------
# Fitting synthetic data: each mode recovers its own model class.
# ---------------------------------------------------------------------------


def _synthetic_arrivals(v, d0, ds):
    return [
        ArrivalTime(d=d, time=(d - d0) / v, epsilon=1e-8, bound_value=1e-8, evaluations=1)
        for d in ds
    ]


def test_fit_recovers_exact_front_line():
    fit = fit_lightcone(arrivals=_synthetic_arrivals(3.0, 2.0, range(4, 21, 2)))
    assert fit.velocity == pytest.approx(3.0, rel=1e-12)
    assert fit.front_offset == pytest.approx(2.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-10)
    assert math.isnan(fit.decay_length) and math.isnan(fit.amplitude)


def test_fit_recovers_exact_exponential_profile():
    # B = 2 A exp((v t - d) / xi) with (A, xi, v) = (1, 2, 3).
    A, xi, v = 1.0, 2.0, 3.0
    profile = [
        (t, d, 2.0 * A * math.exp((v * t - d) / xi))
        for t in (1.0, 2.0, 3.0, 4.0, 5.0)
        for d in (4, 6, 8, 10, 12, 14)
    ]
    fit = fit_lightcone(profile=profile, prefactor=2.0)
    assert fit.velocity == pytest.approx(v, rel=1e-8)
    assert fit.decay_length == pytest.approx(xi, rel=1e-8)
    assert fit.amplitude == pytest.approx(A, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-10)
    assert math.isnan(fit.front_offset)


def test_fit_combined_single_time_profile():
    v, d0, xi, A = 3.0, 2.0, 2.0, 1.0
    arrivals = _synthetic_arrivals(v, d0, range(4, 13, 2))
    t_ref = 4.0
    profile = [(t_ref, d, 2.0 * A * math.exp((v * t_ref - d) / xi)) for d in (4, 6, 8, 10, 12)]
    fit = fit_lightcone(arrivals=arrivals, profile=profile, prefactor=2.0)
    assert fit.velocity == pytest.approx(v, rel=1e-10)  # from arrivals
    assert fit.decay_length == pytest.approx(xi, rel=1e-10)
    assert fit.amplitude == pytest.approx(A, rel=1e-8)


def test_fit_validation_errors():
    with pytest.raises(ValueError, match="arrivals, profile"):
        fit_lightcone()
    with pytest.raises(ValueError, match="at least 4 arrival"):
        fit_lightcone(arrivals=_synthetic_arrivals(3.0, 2.0, [4, 8, 16]))
    with pytest.raises(ValueError, match="ratio"):
        fit_lightcone(arrivals=_synthetic_arrivals(3.0, 2.0, [10, 11, 12, 13]))
    with pytest.raises(ValueError, match="at least 4 profile"):
        fit_lightcone(profile=[(1.0, 4, 0.5), (1.0, 6, 0.2), (2.0, 4, 0.9)])
    with pytest.raises(ValueError, match="must be > 0"):
        fit_lightcone(profile=[(1.0, 4, 0.5), (1.0, 6, -0.2), (2.0, 4, 0.9), (2.0, 6, 0.4)])
    with pytest.raises(ValueError, match="distinct distances"):
        fit_lightcone(profile=[(1.0, 4, 0.5), (2.0, 4, 0.8), (3.0, 4, 0.9), (4.0, 4, 0.95)])
    with pytest.raises(ValueError, match="single-time profile"):
        fit_lightcone(profile=[(1.0, 4, 0.5), (1.0, 6, 0.2), (1.0, 8, 0.1), (1.0, 10, 0.05)])
    with pytest.raises(ValueError, match="decay"):
        fit_lightcone(profile=[(1.0, 4, 0.1), (1.0, 6, 0.2), (2.0, 8, 0.4), (2.0, 10, 0.8)])


# ---------------------------------------------------------------------------
# End-to-end extraction on the exact series (small window).
# ---------------------------------------------------------------------------


def test_small_window_velocity_regression(small_window_report):
    assert small_window_report.fit.velocity == pytest.approx(1.295112401870532, rel=1e-6)
    assert small_window_report.fit.r_squared > 0.99
    assert all(math.isfinite(s) for s in small_window_report.subwindow_slopes)


def test_fitted_velocity_between_coupling_speed_and_analytic(small_window_report):
    # The numeric cone cannot outrun the certified envelope, and the series
    # spreads at least at the coupling speed scale for the default setup.
    assert small_window_report.fit.velocity <= small_window_report.analytic.v_lr
    assert small_window_report.fit.velocity >= HALF.coupling_speed
    assert 0.0 < small_window_report.velocity_ratio < 1.0


def test_threshold_dependence_documented(evaluator):
    # At this small window the fitted slope still drifts with the threshold;
    # values are regression-pinned measurements of that drift.
    v_by_eps = {
        eps: extract_velocity(
            HALF, d_values=[4, 6, 8, 10, 12], epsilon=eps, evaluator=evaluator
        ).fit.velocity
        for eps in (1e-5, 1e-7)
    }
    assert v_by_eps[1e-5] == pytest.approx(1.235447, rel=1e-5)
    assert v_by_eps[1e-7] == pytest.approx(1.368111, rel=1e-5)


def test_profile_augmented_report(evaluator):
    report = extract_velocity(
        HALF,
        d_values=[4, 6, 8, 10, 12],
        epsilon=1e-6,
        evaluator=evaluator,
        include_profile=True,
    )
    assert report.fit.decay_length == pytest.approx(0.37939769991424843, rel=1e-6)
    assert report.fit.amplitude == pytest.approx(0.0025683628500472277, rel=1e-6)
    assert report.fit.n_profile == 5


def test_report_json_shape(small_window_report):
    doc = velocity_report_to_json_dict(small_window_report)
    assert doc["schema_version"] == 1
    assert doc["couplings"]["g"] == 0.5
    assert [d for d, _ in doc["arrivals"]] == [4, 6, 8, 10, 12]
    assert doc["fit"]["v"] == small_window_report.fit.velocity
    assert doc["kappa"]["kappa_star"] == pytest.approx(1.0, abs=1e-9)
    assert doc["kappa"]["v_lr"] == pytest.approx(math.e, rel=1e-12)
    assert doc["ratio_v_over_c"] == pytest.approx(
        small_window_report.fit.velocity / HALF.coupling_speed, rel=1e-12
    )


def test_extract_velocity_validation(evaluator):
    with pytest.raises(ValueError, match="at least 4"):
        extract_velocity(HALF, d_values=[4, 8, 12], epsilon=1e-6, evaluator=evaluator)
    other = BoundEvaluator(Couplings(g=1.0, J=1.0))
    with pytest.raises(ValueError, match="couplings differ"):
        extract_velocity(HALF, d_values=[4, 6, 8, 10], epsilon=1e-6, evaluator=other)


@pytest.mark.slow
def test_headline_window_threshold_drift():
    # Measured drift of the fitted velocity between eps = 1e-6 and 1e-10 over
    # d in [10, 40]: about 2.5 percent, so the asymptotic threshold
    # independence (1e-3 level) is not yet reached in this window.
    ev = BoundEvaluator(HALF, source=DpCountSource(n_max=256))
    velocities = {
        eps: extract_velocity(
            HALF, d_values=range(10, 41, 2), epsilon=eps, evaluator=ev
        ).fit.velocity
        for eps in (1e-6, 1e-10)
    }
    assert velocities[1e-6] == pytest.approx(1.18559709, rel=1e-5)
    assert velocities[1e-10] == pytest.approx(1.21565172, rel=1e-5)
    drift = abs(velocities[1e-10] - velocities[1e-6]) / velocities[1e-6]
    assert 1e-3 < drift < 0.1
