"""Velocity extraction from the bound series, analytic and numeric routes.

Analytic route: the dominating exponential for the series gives a cone
d / t = step * sqrt(8 g J) * exp(kappa) / (2 kappa) for every kappa > 0;
minimising exp(kappa) / kappa (optimum kappa = 1, value e) yields the
certified velocity step * e * sqrt(2 g J).

Numeric route: for each separation d, bisect for the arrival time t*(d)
where B(t, d) first reaches a threshold epsilon, then fit the front
d = velocity * t* + offset by least squares.  Optionally the profile
log B = log A + (velocity * t - d) / decay_length is fitted on (t, d)
samples for the decay length and amplitude of the envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .lrbound import BoundEvaluator, Couplings


class ThresholdUnreachableError(RuntimeError):
    """Bracket expansion failed to enclose the requested threshold."""


# ---------------------------------------------------------------------------
# Analytic route.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KappaOptimum:
    kappa_star: float
    objective_min: float  # exp(kappa) / kappa at the optimum
    v_lr: float  # step_factor * coupling_speed * objective_min

    @property
    def is_interior(self) -> bool:
        return math.isfinite(self.kappa_star) and self.kappa_star > 0


def optimize_kappa(couplings: Couplings, *, bounds: tuple[float, float] = (1e-6, 60.0)) -> KappaOptimum:
    """Minimise exp(kappa)/kappa; Newton-polish the scipy optimum.

    The objective is smooth and strictly convex on (0, inf) with a unique
    interior minimum, so a bounded scalar minimisation followed by a few
    Newton steps on the stationarity condition pins kappa to full precision.
    """
    res = minimize_scalar(
        lambda k: math.exp(k) / k,
        bounds=bounds,
        method="bounded",
        options={"xatol": 1e-12},
    )
    kappa = float(res.x)
    # d/dk [e^k / k] = e^k (k - 1) / k^2 ; second derivative e^k (k^2 - 2k + 2) / k^3
    for _ in range(4):
        step = (kappa - 1.0) * kappa / (kappa * kappa - 2.0 * kappa + 2.0)
        kappa -= step
        kappa = min(max(kappa, bounds[0]), bounds[1])
    objective = math.exp(kappa) / kappa
    return KappaOptimum(
        kappa_star=kappa,
        objective_min=objective,
        v_lr=couplings.step_factor * couplings.coupling_speed * objective,
    )


def analytic_velocity(couplings: Couplings) -> float:
    """Certified cone velocity step * e * sqrt(2 g J) (kappa = 1 optimum)."""
    return couplings.step_factor * math.e * couplings.coupling_speed


# ---------------------------------------------------------------------------
# Numeric route: arrival times.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArrivalTime:
    d: int
    time: float
    epsilon: float
    bound_value: float
    evaluations: int


def geodesic_bracket_time(d: int, epsilon: float, couplings: Couplings) -> float:
    """Time where the geodesic term alone reaches epsilon; upper-brackets t*.

    The length-2d geodesic is unique, so its term
    prefactor (step t)^(2d) (g J)^d / (2d)! is a lower bound on B(t, d);
    where it equals epsilon the full series is already >= epsilon.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    log_t = (math.lgamma(2 * d + 1) + math.log(epsilon / couplings.prefactor)) / (2 * d)
    return math.exp(log_t) / (couplings.step_factor * math.sqrt(couplings.g * couplings.J))


def arrival_time(
    d: int,
    epsilon: float,
    evaluator: BoundEvaluator,
    *,
    time_rel_tol: float = 1e-10,
    max_expansions: int = 80,
) -> ArrivalTime:
    """Bisect for the first time B(t, d) reaches epsilon.

    The initial bracket is [0, geodesic_bracket_time]; the upper end is
    expanded geometrically in the (numerically unlikely) case the evaluated
    bound still sits below epsilon there.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if time_rel_tol <= 0:
        raise ValueError(f"time_rel_tol must be > 0, got {time_rel_tol}")

    couplings = evaluator.couplings
    t_hi = geodesic_bracket_time(d, epsilon, couplings)
    evaluations = 1
    value_hi = evaluator.evaluate(t_hi, d).value
    expansions = 0
    while value_hi < epsilon:
        expansions += 1
        if expansions > max_expansions:
            raise ThresholdUnreachableError(
                f"no time with B(t, {d}) >= {epsilon} found up to t = {t_hi}"
            )
        t_hi *= 1.5
        value_hi = evaluator.evaluate(t_hi, d).value
        evaluations += 1

    t_lo = 0.0
    while t_hi - t_lo > time_rel_tol * t_hi:
        mid = 0.5 * (t_lo + t_hi)
        evaluations += 1
        if evaluator.evaluate(mid, d).value >= epsilon:
            t_hi = mid
        else:
            t_lo = mid
    t_star = 0.5 * (t_lo + t_hi)
    final = evaluator.evaluate(t_star, d)
    return ArrivalTime(
        d=d,
        time=t_star,
        epsilon=epsilon,
        bound_value=final.value,
        evaluations=evaluations + 1,
    )


# ---------------------------------------------------------------------------
# Front and profile fits.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LightConeFit:
    """Least-squares description of the numerically observed cone.

    residual_rms is the root-mean-square deviation of the fitted model from
    the data that determined the velocity (arrival distances when arrivals
    are present, log bound values otherwise).
    """

    velocity: float
    front_offset: float  # d0 in d = velocity * t + d0 (nan in profile-only fits)
    r_squared: float
    residual_rms: float
    decay_length: float  # nan without profile samples
    amplitude: float  # nan without profile samples
    n_arrivals: int
    n_profile: int


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    rms = math.sqrt(ss_res / len(x))
    return float(slope), float(intercept), r_squared, rms


def fit_lightcone(
    arrivals: Sequence[ArrivalTime] | None = None,
    profile: Sequence[tuple[float, int, float]] | None = None,
    *,
    prefactor: float = 2.0,
    min_points: int = 4,
    min_distance_ratio: float = 2.0,
) -> LightConeFit:
    """Fit the cone from arrival times, bound-profile samples, or both.

    Arrivals give d = velocity * t + offset directly.  Profile samples
    (t, d, bound_value) give log(bound / prefactor) = log A + (v t - d) / xi;
    with at least two distinct times the profile identifies its own velocity,
    with a single time the arrival-fit velocity is required to separate the
    amplitude from the time shift.
    """
    if arrivals is None and profile is None:
        raise ValueError("need arrivals, profile samples, or both")

    velocity = front_offset = r_squared = residual_rms = math.nan
    decay_length = amplitude = math.nan
    n_arrivals = n_profile = 0

    if arrivals is not None:
        n_arrivals = len(arrivals)
        if n_arrivals < min_points:
            raise ValueError(f"need at least {min_points} arrival points, got {n_arrivals}")
        ds = np.array([a.d for a in arrivals], dtype=float)
        ts = np.array([a.time for a in arrivals], dtype=float)
        if ds.min() <= 0 or ds.max() / ds.min() < min_distance_ratio:
            raise ValueError(
                f"arrival distances must span a ratio >= {min_distance_ratio}, "
                f"got [{ds.min():g}, {ds.max():g}]"
            )
        velocity, front_offset, r_squared, residual_rms = _line_fit(ts, ds)

    if profile is not None:
        n_profile = len(profile)
        if n_profile < min_points:
            raise ValueError(f"need at least {min_points} profile points, got {n_profile}")
        ts_p = np.array([p[0] for p in profile], dtype=float)
        ds_p = np.array([p[1] for p in profile], dtype=float)
        values = np.array([p[2] for p in profile], dtype=float)
        if np.any(values <= 0):
            raise ValueError("profile bound values must be > 0 to fit the envelope")
        log_b = np.log(values / prefactor)
        distinct_t = len(np.unique(ts_p))
        if len(np.unique(ds_p)) < 2:
            raise ValueError("profile needs at least 2 distinct distances")
        if distinct_t >= 2:
            design = np.column_stack([np.ones_like(log_b), ts_p, ds_p])
            coeffs, _, rank, _ = np.linalg.lstsq(design, log_b, rcond=None)
            if rank < 3:
                raise ValueError("profile design matrix is rank deficient")
            c0, c_t, c_d = (float(c) for c in coeffs)
            if c_d >= 0:
                raise ValueError("profile does not decay with distance; no cone to fit")
            decay_length = -1.0 / c_d
            amplitude = math.exp(c0)
            profile_velocity = -c_t / c_d
            if math.isnan(velocity):
                velocity = profile_velocity
                predicted = design @ np.array([c0, c_t, c_d])
                ss_res = float(np.sum((log_b - predicted) ** 2))
                ss_tot = float(np.sum((log_b - np.mean(log_b)) ** 2))
                r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
                residual_rms = math.sqrt(ss_res / n_profile)
        else:
            if math.isnan(velocity):
                raise ValueError(
                    "single-time profile cannot identify a velocity; "
                    "provide arrivals as well"
                )
            slope, intercept, _, _ = _line_fit(ds_p, log_b)
            if slope >= 0:
                raise ValueError("profile does not decay with distance; no cone to fit")
            decay_length = -1.0 / slope
            # log B = [log A + v t_ref / xi] - d / xi at the single time.
            amplitude = math.exp(intercept + velocity * float(ts_p[0]) * slope)

    return LightConeFit(
        velocity=velocity,
        front_offset=front_offset,
        r_squared=r_squared,
        residual_rms=residual_rms,
        decay_length=decay_length,
        amplitude=amplitude,
        n_arrivals=n_arrivals,
        n_profile=n_profile,
    )


# ---------------------------------------------------------------------------
# End-to-end extraction.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VelocityReport:
    couplings: Couplings
    epsilon: float
    d_values: tuple[int, ...]
    arrivals: tuple[ArrivalTime, ...]
    fit: LightConeFit
    analytic: KappaOptimum
    velocity_ratio: float  # fitted / analytic
    subwindow_slopes: tuple[float, float]  # leading-half and trailing-half fits


def extract_velocity(
    couplings: Couplings,
    *,
    d_values: Sequence[int],
    epsilon: float,
    evaluator: BoundEvaluator | None = None,
    time_rel_tol: float = 1e-10,
    include_profile: bool = False,
) -> VelocityReport:
    """Arrival times over a distance window, front fit, analytic comparison.

    The subwindow slopes (first half versus second half of the distance
    window) expose any residual drift of the fitted velocity with distance.
    """
    d_values = tuple(int(d) for d in d_values)
    if len(d_values) < 4:
        raise ValueError(f"need at least 4 distances, got {len(d_values)}")
    if evaluator is None:
        evaluator = BoundEvaluator(couplings)
    elif evaluator.couplings != couplings:
        raise ValueError("evaluator couplings differ from the requested couplings")

    arrivals = tuple(
        arrival_time(d, epsilon, evaluator, time_rel_tol=time_rel_tol) for d in d_values
    )
    profile = None
    if include_profile:
        t_ref = arrivals[-1].time
        profile = [
            (t_ref, d, evaluator.evaluate(t_ref, d).value) for d in d_values
        ]
    fit = fit_lightcone(arrivals=arrivals, profile=profile, prefactor=couplings.prefactor)
    analytic = optimize_kappa(couplings)

    half = len(arrivals) // 2
    ts = np.array([a.time for a in arrivals])
    ds = np.array([a.d for a in arrivals], dtype=float)
    lead = _line_fit(ts[: len(arrivals) - half], ds[: len(arrivals) - half])[0]
    trail = _line_fit(ts[half:], ds[half:])[0]

    return VelocityReport(
        couplings=couplings,
        epsilon=epsilon,
        d_values=d_values,
        arrivals=arrivals,
        fit=fit,
        analytic=analytic,
        velocity_ratio=fit.velocity / analytic.v_lr,
        subwindow_slopes=(lead, trail),
    )


def velocity_report_to_json_dict(report: VelocityReport) -> dict:
    return {
        "schema_version": 1,
        "couplings": {
            "g": report.couplings.g,
            "J": report.couplings.J,
            "origin_norm": report.couplings.origin_norm,
            "probe_norm": report.couplings.probe_norm,
            "step_factor": report.couplings.step_factor,
        },
        "epsilon": report.epsilon,
        "d_values": list(report.d_values),
        "arrivals": [[a.d, a.time] for a in report.arrivals],
        "arrival_bounds": [a.bound_value for a in report.arrivals],
        "fit": {
            "v": report.fit.velocity,
            "xi": report.fit.decay_length,
            "A": report.fit.amplitude,
            "residual_rms": report.fit.residual_rms,
            "front_offset": report.fit.front_offset,
            "r_squared": report.fit.r_squared,
        },
        "kappa": {
            "kappa_star": report.analytic.kappa_star,
            "objective_min": report.analytic.objective_min,
            "v_lr": report.analytic.v_lr,
        },
        "ratio_v_over_c": report.fit.velocity / report.couplings.coupling_speed,
        "ratio_v_over_v_lr": report.velocity_ratio,
        "subwindow_slopes": list(report.subwindow_slopes),
    }
