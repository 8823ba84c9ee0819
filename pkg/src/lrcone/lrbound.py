"""Commutator-norm bound series assembled from exact walk counts.

For a pair of link observables separated by d grid steps (canonical
perpendicular family, graph distance 2 d on the decorated graph), the bound is

    B(t, d) = 2 |P| |Q| * sum over n >= 0 of (step * t)^n / n! * a_n,
    a_n     = walks(n, d) * (g J)^(n/2),

where walks(n, d) is the exact count from `pathcount` and step is the
per-step weight factor (sqrt(2) by default).  Terms are evaluated in log
space so that huge integer counts and large n never overflow, and the series
is truncated under a rigorous tail bound derived from the crude exponential
dominating count 2 * sqrt(8)^n * exp(kappa (n - 2 d + 4)):

    tail(N) <= 4 |P| |Q| exp(kappa (4 - 2 d)) * x^(N+1) / (N+1)! * 1 / (1 - x / (N+2)),
    x       = step * t * sqrt(8 g J) * exp(kappa),

valid for every kappa > 0 whenever x < N + 2.  The evaluator minimises the
tail over a fixed kappa grid and stops once five consecutive terms and the
best tail are both below rel_tol times the running partial sum.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pathcount import AxisWalkCounts, axis_walk_counts, count_walks_closed_form

DEFAULT_STEP_FACTOR = math.sqrt(2.0)

# Geometric grid spanning small-kappa (loose prefactor, slow decay) through
# kappa ~ 2 (tight decay, huge prefactor); 1.0 is the analytic optimum for
# the asymptotic cone and is included exactly.
DEFAULT_KAPPA_GRID: tuple[float, ...] = tuple(
    sorted(set(float(k) for k in np.geomspace(1e-3, 2.0, 24)) | {1.0})
)


class ConvergenceError(RuntimeError):
    """The truncated series could not be certified within the term budget."""


@dataclass(frozen=True)
class Couplings:
    """Model couplings and observable norms entering the bound prefactor.

    g multiplies the charging-energy term, J the plaquette term; the bound
    depends on them only through the product g J.  step_factor is the
    per-step weight (0 < step_factor <= 2).
    """

    g: float
    J: float
    origin_norm: float = 1.0
    probe_norm: float = 1.0
    step_factor: float = DEFAULT_STEP_FACTOR

    def __post_init__(self) -> None:
        if not (self.g > 0 and math.isfinite(self.g)):
            raise ValueError(f"g must be finite and > 0, got {self.g}")
        if not (self.J > 0 and math.isfinite(self.J)):
            raise ValueError(f"J must be finite and > 0, got {self.J}")
        if not (self.origin_norm > 0 and math.isfinite(self.origin_norm)):
            raise ValueError(f"origin_norm must be finite and > 0, got {self.origin_norm}")
        if not (self.probe_norm > 0 and math.isfinite(self.probe_norm)):
            raise ValueError(f"probe_norm must be finite and > 0, got {self.probe_norm}")
        if not (0.0 < self.step_factor <= 2.0):
            raise ValueError(f"step_factor must lie in (0, 2], got {self.step_factor}")

    @property
    def coupling_speed(self) -> float:
        """Natural velocity scale sqrt(2 g J) of the quadratic theory."""
        return math.sqrt(2.0 * self.g * self.J)

    @property
    def prefactor(self) -> float:
        """Overall factor 2 |P| |Q| multiplying the series."""
        return 2.0 * self.origin_norm * self.probe_norm


def log_series_term(n: int, count: int, t: float, couplings: Couplings) -> float:
    """log of (step t)^n count (gJ)^(n/2) / n!; -inf when the term vanishes."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count == 0:
        return -math.inf
    if t == 0.0:
        return 0.0 if n == 0 else -math.inf
    return (
        n * math.log(couplings.step_factor * t)
        + math.log(count)
        + 0.5 * n * math.log(couplings.g * couplings.J)
        - math.lgamma(n + 1)
    )


def tail_bound(n_truncate: int, t: float, d: int, couplings: Couplings, kappa: float) -> float:
    """Rigorous bound on the series remainder beyond n_truncate.

    Requires kappa > 0; returns inf when x >= n_truncate + 2 (the geometric
    comparison fails there, so the formula certifies nothing).
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if n_truncate < 0 or d < 0:
        raise ValueError(f"n_truncate and d must be >= 0, got {n_truncate}, {d}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    x = couplings.step_factor * t * math.sqrt(8.0 * couplings.g * couplings.J) * math.exp(kappa)
    if x >= n_truncate + 2:
        return math.inf
    if x == 0.0:
        return 0.0
    log_tail = (
        math.log(2.0 * couplings.prefactor)
        + kappa * (4.0 - 2.0 * d)
        + (n_truncate + 1) * math.log(x)
        - math.lgamma(n_truncate + 2)
        - math.log1p(-x / (n_truncate + 2))
    )
    if log_tail > 700.0:
        return math.inf
    return math.exp(log_tail)


@dataclass(frozen=True)
class TailEstimate:
    value: float
    kappa: float


def best_tail_bound(
    n_truncate: int,
    t: float,
    d: int,
    couplings: Couplings,
    kappa_grid: Sequence[float] = DEFAULT_KAPPA_GRID,
) -> TailEstimate:
    """Minimum of the tail bound over the kappa grid."""
    best = TailEstimate(value=math.inf, kappa=float(kappa_grid[0]))
    for kappa in kappa_grid:
        val = tail_bound(n_truncate, t, d, couplings, kappa)
        if val < best.value:
            best = TailEstimate(value=val, kappa=float(kappa))
    return best


# ---------------------------------------------------------------------------
# Count sources: exact dynamic program (canonical) and closed form (audit).
# ---------------------------------------------------------------------------


class DpCountSource:
    """Walk counts from the exact dynamic program, grown on demand.

    Counts for the canonical pair family are cached in an AxisWalkCounts
    table; requests beyond the table double it (d coverage always tracks
    n_max // 2, the reachability limit).
    """

    def __init__(self, n_max: int = 64, *, hard_n_limit: int = 8192) -> None:
        if n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {n_max}")
        self.hard_n_limit = hard_n_limit
        self._table = axis_walk_counts(n_max, n_max // 2)

    @property
    def n_max(self) -> int:
        return self._table.n_max

    @property
    def table(self) -> AxisWalkCounts:
        return self._table

    def ensure(self, n: int, d: int) -> None:
        needed = max(n, 2 * d)
        if needed <= self._table.n_max:
            return
        target = max(needed, 2 * self._table.n_max, 64)
        if target > self.hard_n_limit:
            if needed > self.hard_n_limit:
                raise ConvergenceError(
                    f"count table would need n_max = {needed} > hard limit "
                    f"{self.hard_n_limit}"
                )
            target = self.hard_n_limit
        self._table = axis_walk_counts(target, target // 2)

    def count(self, n: int, d: int) -> int:
        if 2 * d > self._table.n_max and n <= self._table.n_max:
            return 0  # target unreachable within any stored walk length
        return self._table.count(n, d)


class ClosedFormCountSource:
    """Literal closed-form counts; see the pathcount fidelity report before use."""

    def ensure(self, n: int, d: int) -> None:  # noqa: ARG002 - no storage to grow
        return

    def count(self, n: int, d: int) -> int:
        return count_walks_closed_form(n, d)


# ---------------------------------------------------------------------------
# Series evaluation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundSeriesResult:
    """One evaluation of B(t, d) with its truncation certificate."""

    t: float
    d: int
    value: float
    n_truncate: int
    tail: float
    tail_kappa: float
    terms: tuple[float, ...] = field(repr=False)

    @property
    def rigorous_upper(self) -> float:
        return self.value + self.tail


def evaluate_bound(
    t: float,
    d: int,
    couplings: Couplings,
    *,
    source=None,
    rel_tol: float = 1e-10,
    consecutive_small: int = 5,
    kappa_grid: Sequence[float] = DEFAULT_KAPPA_GRID,
    n_limit: int = 5000,
) -> BoundSeriesResult:
    """Evaluate the bound series at one (t, d) with certified truncation.

    Stops at the first n where the last `consecutive_small` terms are each
    <= rel_tol times the running partial sum and the kappa-minimised tail is
    too; raises ConvergenceError if that never happens by n_limit.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be > 0, got {rel_tol}")
    if source is None:
        source = DpCountSource()

    terms: list[float] = []
    streak = 0
    for n in range(n_limit + 1):
        source.ensure(n, d)
        log_term = log_series_term(n, source.count(n, d), t, couplings)
        term = 0.0 if log_term == -math.inf else math.exp(log_term)
        terms.append(term)
        partial = math.fsum(terms)
        streak = streak + 1 if term <= rel_tol * partial else 0
        if streak >= consecutive_small:
            # tail_bound carries the full 4 |P| |Q| prefactor, so compare it
            # against the prefactored partial sum.
            tail = best_tail_bound(n, t, d, couplings, kappa_grid)
            if tail.value <= rel_tol * couplings.prefactor * partial:
                return BoundSeriesResult(
                    t=t,
                    d=d,
                    value=couplings.prefactor * partial,
                    n_truncate=n,
                    tail=tail.value,
                    tail_kappa=tail.kappa,
                    terms=tuple(terms),
                )
    raise ConvergenceError(
        f"series for t = {t}, d = {d} not certified by n = {n_limit} "
        f"(rel_tol = {rel_tol})"
    )


class BoundEvaluator:
    """Reusable evaluator sharing one count table across many (t, d) calls."""

    def __init__(
        self,
        couplings: Couplings,
        *,
        source=None,
        rel_tol: float = 1e-10,
        consecutive_small: int = 5,
        kappa_grid: Sequence[float] = DEFAULT_KAPPA_GRID,
        n_limit: int = 5000,
    ) -> None:
        self.couplings = couplings
        self.source = source if source is not None else DpCountSource()
        self.rel_tol = rel_tol
        self.consecutive_small = consecutive_small
        self.kappa_grid = tuple(kappa_grid)
        self.n_limit = n_limit

    def evaluate(self, t: float, d: int) -> BoundSeriesResult:
        return evaluate_bound(
            t,
            d,
            self.couplings,
            source=self.source,
            rel_tol=self.rel_tol,
            consecutive_small=self.consecutive_small,
            kappa_grid=self.kappa_grid,
            n_limit=self.n_limit,
        )


def write_bound_grid_csv(
    path: str,
    results: Sequence[BoundSeriesResult],
    config_echo: dict,
) -> None:
    """CSV of (t, d, bound, n_truncate, tail) with a JSON config header line."""
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(config_echo, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "d", "bound", "n_truncate", "tail"])
        for r in results:
            writer.writerow([repr(r.t), r.d, repr(r.value), r.n_truncate, repr(r.tail)])
