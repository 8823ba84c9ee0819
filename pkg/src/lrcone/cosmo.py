"""Dimension-dependent velocity and the shrinking-dimension horizon toy model.

On a D-dimensional hypercubic lattice the decorated graph alternates between
link vertices (degree 2(D-1)) and plaquette vertices (degree 4).  Two
conventions for the number b_D of two-step walk continuations are carried as
first-class citizens:

* ``axis_pairs``: b_D = 4 D (D - 1), four choices per ordered pair of
  distinct axes (the headline convention for D-dimensional outputs);
* ``degrees``:    b_D = 8 (D - 1), the product of the two alternating vertex
  degrees, which matches the branching measured on the built lattice.

They coincide at D = 2 (b = 8) and at D = 1 (b = 0, no plaquettes) and
differ by a factor sqrt(D / 2) in velocity at large D; outputs report both
rather than hiding the discrepancy.

The toy model shrinks the dimension linearly in time, D(t) = D_in (1 - alpha
t), and the horizon is the time integral of the dimension-dependent velocity,
producing parabolic light-cone sides in the linear-velocity regime.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

from scipy.integrate import quad

from .lrbound import Couplings

PLAQUETTE_THRESHOLD = 2.0  # below two dimensions there are no square faces

MODES = ("strict", "toy")


class BranchingConvention(enum.Enum):
    AXIS_PAIRS = "axis_pairs"
    DEGREES = "degrees"


def branching_factor(D: int, convention: BranchingConvention) -> int:
    """Two-step continuation count b_D for integer dimension D >= 1."""
    if isinstance(D, bool) or not isinstance(D, int):
        raise TypeError(f"D must be an integer for branching_factor, got {D!r}")
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if convention is BranchingConvention.AXIS_PAIRS:
        return 4 * D * (D - 1)
    if convention is BranchingConvention.DEGREES:
        return 8 * (D - 1)
    raise ValueError(f"unknown convention {convention!r}")


def _branching_real(D: float, convention: BranchingConvention) -> float:
    if convention is BranchingConvention.AXIS_PAIRS:
        return 4.0 * D * (D - 1.0)
    if convention is BranchingConvention.DEGREES:
        return 8.0 * (D - 1.0)
    raise ValueError(f"unknown convention {convention!r}")


def convention_ratio(D: float) -> float:
    """Velocity ratio axis_pairs / degrees = sqrt(D / 2), exact for D >= 2."""
    if D < 2:
        raise ValueError(f"conventions only both apply for D >= 2, got {D}")
    return math.sqrt(D / 2.0)


def v_lr_dimension(
    D: float,
    couplings: Couplings,
    convention: BranchingConvention = BranchingConvention.AXIS_PAIRS,
    *,
    mode: str = "strict",
) -> float:
    """Velocity step_factor * (e / 2) * sqrt(b_D g J) for real dimension D.

    Reduces exactly to the 2D analytic velocity at D = 2 for either
    convention.  ``strict`` mode rejects D below the plaquette threshold;
    ``toy`` mode clamps the velocity to zero there (no faces, no dynamics)
    but still rejects D < 1.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not math.isfinite(D):
        raise ValueError(f"D must be finite, got {D}")
    if D < 1.0:
        raise ValueError(f"D must be >= 1, got {D}")
    if D < PLAQUETTE_THRESHOLD:
        if mode == "strict":
            raise ValueError(
                f"D = {D} is below the plaquette threshold {PLAQUETTE_THRESHOLD} "
                "(use toy mode to clamp the velocity to zero)"
            )
        return 0.0
    b = _branching_real(D, convention)
    return couplings.step_factor * (math.e / 2.0) * math.sqrt(b * couplings.g * couplings.J)


@dataclass(frozen=True)
class HorizonModel:
    """Linearly shrinking dimension D(t) = D_in (1 - alpha t).

    alpha = 0 is allowed (constant dimension, linear light cone).  ``toy``
    mode integrates through the D = 2 crossing with zero velocity below it;
    ``strict`` mode refuses intervals that reach below the threshold.  Both
    modes reject times where D(t) < 1.
    """

    D_in: float
    alpha: float
    couplings: Couplings
    convention: BranchingConvention = BranchingConvention.AXIS_PAIRS
    mode: str = "toy"

    def __post_init__(self) -> None:
        if not (self.D_in >= 1.0 and math.isfinite(self.D_in)):
            raise ValueError(f"D_in must be finite and >= 1, got {self.D_in}")
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.convention, BranchingConvention):
            raise ValueError(f"convention must be a BranchingConvention, got {self.convention!r}")

    def dimension(self, t: float) -> float:
        return self.D_in * (1.0 - self.alpha * t)

    def time_at_dimension(self, D_target: float) -> float:
        """Time when D(t) first reaches D_target (inf if it never does)."""
        if self.alpha == 0.0 or self.D_in <= D_target:
            return 0.0 if self.D_in <= D_target else math.inf
        return (1.0 - D_target / self.D_in) / self.alpha

    def velocity(self, t: float) -> float:
        return v_lr_dimension(
            self.dimension(t), self.couplings, self.convention, mode=self.mode
        )


def horizon_distance(
    model: HorizonModel,
    t_i: float,
    t_f: float,
    *,
    quad_rel_tol: float = 1e-11,
) -> float:
    """Integral of the dimension-dependent velocity over [t_i, t_f].

    In toy mode the integrand vanishes identically once D(t) drops below the
    plaquette threshold, so the integration is cut there exactly instead of
    asking the quadrature to straddle the kink.
    """
    if t_f < t_i:
        raise ValueError(f"need t_i <= t_f, got t_i = {t_i}, t_f = {t_f}")
    d_end = model.dimension(t_f)
    if d_end < 1.0:
        raise ValueError(
            f"D(t_f) = {d_end} < 1; the model rejects queries past the D = 1 "
            f"crossing at t = {model.time_at_dimension(1.0)}"
        )
    if model.mode == "strict" and d_end < PLAQUETTE_THRESHOLD:
        raise ValueError(
            f"D(t_f) = {d_end} < {PLAQUETTE_THRESHOLD} in strict mode; the "
            f"threshold crossing is at t = {model.time_at_dimension(PLAQUETTE_THRESHOLD)}"
        )
    if t_f == t_i:
        return 0.0

    # Clip to the region where the velocity is nonzero.
    t_stop = min(t_f, model.time_at_dimension(PLAQUETTE_THRESHOLD))
    if t_stop <= t_i:
        return 0.0
    value, _ = quad(
        model.velocity, t_i, t_stop, epsabs=0.0, epsrel=quad_rel_tol, limit=200
    )
    return value


def lightcone_boundary(
    model: HorizonModel,
    t_start: float,
    t_end: float,
    steps: int,
    *,
    quad_rel_tol: float = 1e-11,
) -> list[tuple[float, float]]:
    """Horizon radius r(t_k) on a uniform grid of `steps` samples.

    r is accumulated panel by panel, so monotonicity holds by construction
    and each sample equals horizon_distance(model, t_start, t_k) to
    quadrature accuracy.
    """
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    if t_end < t_start:
        raise ValueError(f"need t_start <= t_end, got {t_start}, {t_end}")
    # Validates the whole interval up front (monotone D: endpoint suffices).
    horizon_distance(model, t_start, t_end, quad_rel_tol=quad_rel_tol)

    times = [t_start + (t_end - t_start) * k / (steps - 1) for k in range(steps)]
    samples = [(times[0], 0.0)]
    total = 0.0
    for t_prev, t_next in zip(times, times[1:]):
        total += horizon_distance(model, t_prev, t_next, quad_rel_tol=quad_rel_tol)
        samples.append((t_next, total))
    return samples


def model_to_json_dict(model: HorizonModel) -> dict:
    return {
        "D_in": model.D_in,
        "alpha": model.alpha,
        "couplings": {
            "g": model.couplings.g,
            "J": model.couplings.J,
            "origin_norm": model.couplings.origin_norm,
            "probe_norm": model.couplings.probe_norm,
            "step_factor": model.couplings.step_factor,
        },
        "convention": model.convention.value,
        "mode": model.mode,
    }


def write_lightcone_csv(
    path: str,
    model: HorizonModel,
    t_start: float,
    t_end: float,
    steps: int,
    *,
    config_echo: dict | None = None,
    quad_rel_tol: float = 1e-11,
) -> list[tuple[float, float, float]]:
    """CSV of (t, r_axis_pairs, r_degrees) with the model echoed in the header.

    Both conventions are sampled on the same grid regardless of the model's
    own convention field, so the discrepancy is visible in every file.
    """
    per_convention = {
        conv: lightcone_boundary(
            replace(model, convention=conv), t_start, t_end, steps, quad_rel_tol=quad_rel_tol
        )
        for conv in (BranchingConvention.AXIS_PAIRS, BranchingConvention.DEGREES)
    }
    rows = [
        (t, r_axis, r_deg)
        for (t, r_axis), (_, r_deg) in zip(
            per_convention[BranchingConvention.AXIS_PAIRS],
            per_convention[BranchingConvention.DEGREES],
        )
    ]
    header = dict(config_echo) if config_echo is not None else {}
    header["model"] = model_to_json_dict(model)
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "r_axis_pairs", "r_degrees"])
        for t, r_axis, r_deg in rows:
            writer.writerow([repr(t), repr(r_axis), repr(r_deg)])
    return rows


def dimension_scan(
    d_values: Sequence[float],
    couplings: Couplings,
    *,
    mode: str = "strict",
) -> list[tuple[float, float, float]]:
    """Rows of (D, v_axis_pairs, v_degrees) for a dimension sweep."""
    return [
        (
            float(D),
            v_lr_dimension(D, couplings, BranchingConvention.AXIS_PAIRS, mode=mode),
            v_lr_dimension(D, couplings, BranchingConvention.DEGREES, mode=mode),
        )
        for D in d_values
    ]
