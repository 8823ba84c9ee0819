"""Exact walk counts on the decorated graph.

A walk of length n is any sequence of n unit steps on G'; revisits are
allowed.  Counts are computed by iterating the neighbor-sum recurrence

    counts(n + 1, v) = sum over u adjacent to v of counts(n, u)

with exact Python integers (numpy object arrays keep the arithmetic exact
while the loops run at C speed).  Two independent count sources exist:

* the dynamic program above (canonical — every downstream consumer uses it);
* a closed-form binomial expression for same-orientation link pairs separated
  by d grid steps perpendicular to the link axis (the canonical pair family,
  whose G' distance is exactly 2 d).

The closed form is evaluated literally and compared entry-by-entry against
the dynamic program; every discrepancy is collected into a machine-readable
fidelity report, and the dynamic program remains the source of truth.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import DecoratedLattice, LatticeSpec

DEFAULT_MAX_STORED_ENTRIES = 5_000_000

_TWO_STEP_CHOICES = 8  # from a link: 2 plaquettes; from a plaquette: 4 links


class ExtentGuardError(ValueError):
    """Walk length too large for the lattice to emulate the infinite graph."""


def check_extent_guard(lattice: DecoratedLattice, origin: int, n_max: int) -> None:
    """Require that no walk of length <= n_max from `origin` can feel the boundary.

    Periodic: exact wrap-free counting needs n_max < L.  Open: every axis must
    keep a doubled-coordinate margin of at least n_max on both sides of the
    origin.  Violations raise ExtentGuardError naming the failing pair.
    """
    spec = lattice.spec
    if spec.boundary == "periodic":
        if n_max >= spec.extent:
            raise ExtentGuardError(
                f"n_max = {n_max} needs extent L > n_max, got L = {spec.extent} (periodic)"
            )
        return
    span = 2 * spec.extent - 2
    coord = lattice.vertex_coord(origin)
    for axis, c in enumerate(coord):
        if c - n_max < 0 or c + n_max > span:
            raise ExtentGuardError(
                f"n_max = {n_max} walks from origin {coord} can reach the open "
                f"boundary along axis {axis} (extent L = {spec.extent})"
            )


@dataclass(frozen=True)
class PathCountTable:
    """Exact walk counts from one origin, layer by layer.

    Either every layer is retained (`layers[n][q]`, full store) or only the
    requested target vertices are (`target_counts[q][n]`).  `layer_totals[n]`
    is the total number of length-n walks from the origin regardless of
    endpoint.
    """

    lattice_spec: LatticeSpec
    origin: int
    n_max: int
    layers: tuple[tuple[int, ...], ...] | None
    target_counts: dict[int, tuple[int, ...]] | None
    layer_totals: tuple[int, ...]

    def count(self, n: int, vertex_id: int) -> int:
        if not (0 <= n <= self.n_max):
            raise ValueError(f"n = {n} outside the computed range [0, {self.n_max}]")
        if self.layers is not None:
            return self.layers[n][vertex_id]
        assert self.target_counts is not None
        try:
            return self.target_counts[vertex_id][n]
        except KeyError:
            raise KeyError(
                f"vertex {vertex_id} was not among the retained targets"
            ) from None


def count_walks_dp(
    lattice: DecoratedLattice,
    origin: int,
    n_max: int,
    *,
    targets: Sequence[int] | None = None,
    max_stored_entries: int = DEFAULT_MAX_STORED_ENTRIES,
) -> PathCountTable:
    """Iterate the neighbor-sum recurrence from a link-vertex origin.

    With `targets` given, only those vertices' counts are retained (the full
    layer still drives the recurrence); otherwise all layers are stored,
    subject to `max_stored_entries`.
    """
    if not lattice.is_link(origin):
        raise ValueError(f"origin {origin} is not a link-vertex id")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    check_extent_guard(lattice, origin, n_max)

    n_vertices = lattice.n_vertices
    if targets is None and (n_max + 1) * n_vertices > max_stored_entries:
        raise ValueError(
            f"storing {(n_max + 1) * n_vertices} entries exceeds the cap of "
            f"{max_stored_entries}; pass targets= to retain selected vertices only"
        )

    max_degree = max((lattice.degree(v) for v in range(n_vertices)), default=0)
    # Sentinel column n_vertices points at a permanently-zero slot so that the
    # gather-and-sum below needs no per-vertex degree bookkeeping.
    nbr = np.full((n_vertices, max(max_degree, 1)), n_vertices, dtype=np.int64)
    for v in range(n_vertices):
        for slot, w in enumerate(lattice.neighbors[v]):
            nbr[v, slot] = w

    vec = np.zeros(n_vertices + 1, dtype=object)
    vec[origin] = 1

    store_all = targets is None
    layers: list[tuple[int, ...]] = []
    per_target: dict[int, list[int]] = {}
    if store_all:
        layers.append(tuple(int(x) for x in vec[:n_vertices]))
    else:
        for q in targets:
            if not (0 <= q < n_vertices):
                raise ValueError(f"target {q} out of range [0, {n_vertices})")
            per_target[int(q)] = [int(vec[q])]
    totals = [1]

    for _ in range(n_max):
        new = vec[nbr].sum(axis=1)
        vec = np.concatenate([new, np.zeros(1, dtype=object)])
        totals.append(int(new.sum()))
        if store_all:
            layers.append(tuple(int(x) for x in new))
        else:
            for q, acc in per_target.items():
                acc.append(int(new[q]))

    return PathCountTable(
        lattice_spec=lattice.spec,
        origin=origin,
        n_max=n_max,
        layers=tuple(layers) if store_all else None,
        target_counts={q: tuple(acc) for q, acc in per_target.items()}
        if not store_all
        else None,
        layer_totals=tuple(totals),
    )


# ---------------------------------------------------------------------------
# Canonical pair family: same-orientation links, perpendicular separation.
# ---------------------------------------------------------------------------


def centered_axis_link(lattice: DecoratedLattice) -> int:
    """Id of the axis-0 link at the lattice center (the canonical origin P)."""
    c = lattice.spec.extent // 2
    coord = [2 * c] * lattice.spec.dimension
    coord[0] += 1
    return lattice.vertex_id(tuple(coord))


def perpendicular_target(lattice: DecoratedLattice, d: int) -> int:
    """Id of the link d grid steps from the canonical origin along axis 1.

    The target has the same orientation as the origin, so the pair sits at
    graph distance exactly 2 d on G'.
    """
    if lattice.spec.dimension < 2:
        raise ValueError("perpendicular targets need dimension >= 2")
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")
    origin = lattice.vertex_coord(centered_axis_link(lattice))
    coord = list(origin)
    coord[1] += 2 * d
    if lattice.spec.boundary == "periodic":
        coord[1] %= 2 * lattice.spec.extent
    return lattice.vertex_id(tuple(coord))


@dataclass(frozen=True)
class AxisWalkCounts:
    """Walk counts from the canonical origin to every canonical target.

    counts[d][n] is the number of length-n walks from P to the link d grid
    steps away perpendicular to P's axis (d = 0 is P itself).  Produced by the
    same neighbor-sum recurrence as count_walks_dp, run on a relative grid so
    that large tables never materialise a DecoratedLattice; the two paths are
    bit-identical where they overlap.
    """

    n_max: int
    d_max: int
    counts: tuple[tuple[int, ...], ...]
    layer_totals: tuple[int, ...] | None

    def count(self, n: int, d: int) -> int:
        if not (0 <= n <= self.n_max):
            raise ValueError(f"n = {n} outside the computed range [0, {self.n_max}]")
        if not (0 <= d <= self.d_max):
            raise ValueError(f"d = {d} outside the computed range [0, {self.d_max}]")
        return self.counts[d][n]


def axis_walk_counts(
    n_max: int, d_max: int, *, compute_totals: bool = False
) -> AxisWalkCounts:
    """Exact counts for the canonical pair family on the (implicit) infinite plane.

    Works on doubled offsets from the origin link; a walk of length n never
    leaves the stored window, so the result equals the infinite-plane count
    (the extent guard holds by construction).
    """
    if n_max < 0 or d_max < 0:
        raise ValueError("n_max and d_max must be >= 0")

    size = 2 * n_max + 3
    mid = size // 2
    layer = np.zeros((size, size), dtype=object)
    layer[mid, mid] = 1

    # Absolute parity of the origin is (odd, even); grid sites (both-even
    # absolute coordinates) are not vertices of G', so offsets with odd
    # delta-x and even delta-y must stay zero.
    di = np.arange(size)[:, None] - mid
    dj = np.arange(size)[None, :] - mid
    holes = ((di % 2) == 1) & ((dj % 2) == 0)

    # Targets beyond the window (2 d > n_max) are unreachable in n_max steps,
    # so their whole series is zero without indexing the grid.
    targets = [
        (mid, mid + 2 * d) if 2 * d <= n_max else None for d in range(d_max + 1)
    ]
    series: list[list[int]] = [
        [int(layer[t[0], t[1]]) if t is not None else 0] for t in targets
    ]
    totals = [1] if compute_totals else None

    for _ in range(n_max):
        new = np.zeros((size, size), dtype=object)
        new[1:, :] += layer[:-1, :]
        new[:-1, :] += layer[1:, :]
        new[:, 1:] += layer[:, :-1]
        new[:, :-1] += layer[:, 1:]
        new[holes] = 0
        layer = new
        for d, t in enumerate(targets):
            series[d].append(int(layer[t[0], t[1]]) if t is not None else 0)
        if totals is not None:
            totals.append(int(layer.sum()))

    return AxisWalkCounts(
        n_max=n_max,
        d_max=d_max,
        counts=tuple(tuple(acc) for acc in series),
        layer_totals=tuple(totals) if totals is not None else None,
    )


# ---------------------------------------------------------------------------
# Closed form and crude exponential bound.
# ---------------------------------------------------------------------------


def _comb_or_zero(m: int, doubled_lower: int) -> int:
    """C(m, doubled_lower / 2), zero for half-integer or out-of-range lower index."""
    if doubled_lower % 2:
        return 0
    k = doubled_lower // 2
    if m < 0 or k < 0 or k > m:
        return 0
    return math.comb(m, k)


def count_walks_closed_form(n: int, d: int) -> int:
    """Literal binomial-sum expression for the canonical pair count.

    sum over k = 1 .. ceil((n - d)/2 - 1) of
        C(n-2k, (n-2k-d)/2) * C(n-2k, (n-2k)/2) * C(n, 2k) * 4^(2k)

    with every binomial whose lower index is half-integer or out of range read
    as zero, and an empty summation range read as zero.  Compare against the
    dynamic program before trusting any value.
    """
    if n < 0 or d < 0:
        raise ValueError(f"n and d must be >= 0, got n = {n}, d = {d}")
    k_max = (n - d - 1) // 2  # ceil((n - d)/2 - 1) for integers
    total = 0
    for k in range(1, k_max + 1):
        m = n - 2 * k
        term = (
            _comb_or_zero(m, m - d)
            * _comb_or_zero(m, m)
            * math.comb(n, 2 * k)
            * 16**k
        )
        total += term
    return total


def gross_upper_bound(n: int, d: int, kappa: float) -> float:
    """Crude exponential dominating bound 2 * sqrt(8)^n * exp(kappa*(n - 2d + 4)).

    Valid for every kappa > 0.  Returns inf when the value exceeds float range
    (still a true upper bound).
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if n < 0 or d < 0:
        raise ValueError(f"n and d must be >= 0, got n = {n}, d = {d}")
    log_value = math.log(2.0) + 0.5 * n * math.log(8.0) + kappa * (n - 2 * d + 4)
    if log_value > 700.0:
        return math.inf
    return math.exp(log_value)


# ---------------------------------------------------------------------------
# Fidelity comparison: closed form versus dynamic program.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountComparison:
    n: int
    d: int
    dp: int
    closed_form: int

    @property
    def match(self) -> bool:
        return self.dp == self.closed_form


def compare_closed_form(
    dp_count: Callable[[int, int], int],
    n_values: Iterable[int],
    d_values: Iterable[int],
) -> list[CountComparison]:
    """Entry-by-entry comparison over a grid of (n, d)."""
    out = []
    for d in d_values:
        for n in n_values:
            out.append(
                CountComparison(
                    n=n, d=d, dp=dp_count(n, d), closed_form=count_walks_closed_form(n, d)
                )
            )
    return out


def fidelity_report(comparisons: Sequence[CountComparison], context: dict | None = None) -> dict:
    """Machine-readable mismatch report; the dynamic program stays canonical."""
    mismatches = [c for c in comparisons if not c.match]
    return {
        "schema_version": 1,
        "pair_family": "same-orientation links, d grid steps perpendicular to the link axis",
        "canonical_source": "dp",
        "entries_compared": len(comparisons),
        "mismatch_count": len(mismatches),
        "mismatches": [
            {"n": c.n, "d": c.d, "dp": c.dp, "closed_form": c.closed_form}
            for c in mismatches
        ],
        "context": context or {},
    }


def write_fidelity_report(path: str, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_count_csv(path: str, comparisons: Sequence[CountComparison], config_echo: dict) -> None:
    """CSV of (n, d, dp_count, closed_form, match_flag) with a JSON config header line."""
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(config_echo, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "d", "dp_count", "closed_form", "match_flag"])
        for c in comparisons:
            writer.writerow([c.n, c.d, c.dp, c.closed_form, int(c.match)])
