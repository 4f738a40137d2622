"""Power-trace integration, energy grids, and normalized aggregation.

Measured GPU power samples are integrated with the trapezoidal rule into
total energy ``E_tot`` (Joules); a benchmark run of ``n_req`` identical
requests then yields per-token energy ``e_tok = E_tot / (n_req * n_out)``
and efficiency ``e_eff = 1 / e_tok`` (tokens per Joule).  Observations are
collected into immutable grids keyed by ``(n_in, n_out)``; grids can be
min–max normalized and averaged cell-wise to compare efficiency shapes
across models on a common [0, 1] scale.

File formats (UTF-8, LF line endings):

* power trace CSV, header ``timestamp_s,power_w``;
* grid CSV, header ``n_in,n_out,n_req,e_tot_j`` — derived columns are
  never persisted and are recomputed on load;
* heatmap CSV matrix — first row is the ``n_out`` axis, first column the
  ``n_in`` axis.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._util import atomic_write_text
from .errors import DegenerateRangeError, ValidationError

__all__ = [
    "PowerTrace",
    "EnergyObservation",
    "EnergyGrid",
    "NormalizedGrid",
    "SpreadResult",
    "integrate_power",
    "build_grid",
    "normalize_min_max",
    "aggregate_normalized",
    "efficiency_spread",
    "read_power_trace_csv",
    "read_grid_csv",
    "write_grid_csv",
    "write_heatmap_csv",
]

# Sampling intervals coarser than this (seconds) trigger an accuracy warning:
# the trapezoidal rule's error grows with the square of the sample spacing.
COARSE_INTERVAL_S = 1.0


@dataclass(frozen=True)
class PowerTrace:
    """Timestamped power samples.

    Attributes:
        samples: Ordered ``(timestamp_s, power_w)`` pairs.  Timestamps are
            seconds (sub-second resolution supported) and must be strictly
            increasing; power is non-negative Watts.  At least two samples
            are required so the trace is integrable.
    """

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        samples = tuple((float(t), float(p)) for t, p in self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise ValidationError(f"a power trace needs at least 2 samples, got {len(samples)}")
        for (t0, p0), (t1, _) in zip(samples, samples[1:]):
            if not t1 > t0:
                raise ValidationError(
                    f"timestamps must be strictly increasing; {t1} follows {t0}"
                )
        for t, p in samples:
            if not math.isfinite(t):
                raise ValidationError(f"non-finite timestamp {t!r}")
            if not (math.isfinite(p) and p >= 0):
                raise ValidationError(f"power must be finite and >= 0 W, got {p!r}")
        intervals = [t1 - t0 for (t0, _), (t1, _) in zip(samples, samples[1:])]
        if statistics.median(intervals) > COARSE_INTERVAL_S:
            warnings.warn(
                f"median sampling interval {statistics.median(intervals):.3g} s exceeds "
                f"{COARSE_INTERVAL_S:g} s; trapezoidal integration error grows with spacing",
                stacklevel=2,
            )

    @property
    def span(self) -> tuple[float, float]:
        """First and last timestamps."""
        return self.samples[0][0], self.samples[-1][0]


def _interpolate_power(trace: PowerTrace, t: float) -> float:
    times = [s[0] for s in trace.samples]
    idx = bisect_right(times, t) - 1
    if idx >= 0 and times[idx] == t:
        return trace.samples[idx][1]
    t0, p0 = trace.samples[idx]
    t1, p1 = trace.samples[idx + 1]
    return p0 + (p1 - p0) * (t - t0) / (t1 - t0)


def integrate_power(trace: PowerTrace, window: tuple[float, float] | None = None) -> float:
    """Trapezoidal energy integral of a power trace, in Joules.

    Uses the actual spacing of each consecutive sample pair, so irregular
    timestamps are handled exactly.  When ``window = (t_start, t_end)`` is
    given it must lie within the trace span; power at the window edges is
    obtained by linear interpolation, consistent with the trapezoidal
    rule's piecewise-linear view of the signal.
    """
    lo, hi = trace.span
    if window is None:
        points = list(trace.samples)
    else:
        t_start, t_end = float(window[0]), float(window[1])
        if not t_start < t_end:
            raise ValidationError(
                f"window must satisfy t_start < t_end, got [{t_start}, {t_end}]"
            )
        if t_start < lo or t_end > hi:
            raise ValidationError(
                f"window [{t_start}, {t_end}] exceeds trace span [{lo}, {hi}]"
            )
        points = [(t_start, _interpolate_power(trace, t_start))]
        points += [(t, p) for t, p in trace.samples if t_start < t < t_end]
        points.append((t_end, _interpolate_power(trace, t_end)))
    if len(points) < 2:
        raise ValidationError("fewer than 2 samples in the integration window")
    return sum(
        (p0 + p1) / 2.0 * (t1 - t0) for (t0, p0), (t1, p1) in zip(points, points[1:])
    )


@dataclass(frozen=True)
class EnergyObservation:
    """One measured grid cell.

    Attributes:
        n_in: Input tokens per request.
        n_out: Output tokens per request (>= 1).
        e_tot: Total energy of the measured run, Joules (> 0).  The run
            executes ``n_req`` identical requests, so per-token quantities
            divide by ``n_req * n_out``.
        n_req: Number of identical requests in the run (informational
            workload size; >= 1).
    """

    n_in: int
    n_out: int
    e_tot: float
    n_req: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.n_in, int) or isinstance(self.n_in, bool) or self.n_in < 0:
            raise ValidationError(f"n_in must be a non-negative integer, got {self.n_in!r}")
        if not isinstance(self.n_out, int) or isinstance(self.n_out, bool) or self.n_out < 1:
            raise ValidationError(f"n_out must be a positive integer, got {self.n_out!r}")
        if not isinstance(self.n_req, int) or isinstance(self.n_req, bool) or self.n_req < 1:
            raise ValidationError(f"n_req must be a positive integer, got {self.n_req!r}")
        object.__setattr__(self, "e_tot", float(self.e_tot))
        if not 0 < self.e_tot < float("inf"):
            raise ValidationError(f"e_tot must be finite and positive, got {self.e_tot!r}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.n_in, self.n_out)

    @property
    def e_tok(self) -> float:
        """Energy per generated token, Joules/token."""
        return self.e_tot / (self.n_req * self.n_out)

    @property
    def e_eff(self) -> float:
        """Energy efficiency, tokens/Joule (reciprocal of ``e_tok``)."""
        return 1.0 / self.e_tok


@dataclass(frozen=True)
class EnergyGrid:
    """Immutable set of observations keyed by ``(n_in, n_out)``."""

    observations: tuple[EnergyObservation, ...]
    model_name: str = ""

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.observations, key=lambda o: o.key))
        object.__setattr__(self, "observations", ordered)
        seen: set[tuple[int, int]] = set()
        for obs in ordered:
            if obs.key in seen:
                raise ValidationError(f"duplicate grid cell {obs.key}")
            seen.add(obs.key)

    @cached_property
    def _by_key(self) -> dict[tuple[int, int], EnergyObservation]:
        return {obs.key: obs for obs in self.observations}

    @property
    def n_in_axis(self) -> tuple[int, ...]:
        """Sorted distinct input lengths."""
        return tuple(sorted({obs.n_in for obs in self.observations}))

    @property
    def n_out_axis(self) -> tuple[int, ...]:
        """Sorted distinct output lengths."""
        return tuple(sorted({obs.n_out for obs in self.observations}))

    def get(self, n_in: int, n_out: int) -> EnergyObservation | None:
        return self._by_key.get((n_in, n_out))

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)


def build_grid(
    records: Iterable[tuple[int, int, int, float]],
    model_name: str = "",
) -> EnergyGrid:
    """Build an :class:`EnergyGrid` from ``(n_in, n_out, n_req, e_tot)`` records.

    Per-token energy and efficiency are derived, never stored.  An empty
    record list yields a valid empty grid.
    """
    observations = []
    for record in records:
        try:
            n_in, n_out, n_req, e_tot = record
        except (TypeError, ValueError) as exc:
            raise ValidationError(
                f"each record must be (n_in, n_out, n_req, e_tot), got {record!r}"
            ) from exc
        observations.append(EnergyObservation(n_in=n_in, n_out=n_out, n_req=n_req, e_tot=e_tot))
    return EnergyGrid(observations=tuple(observations), model_name=model_name)


@dataclass(frozen=True)
class NormalizedGrid:
    """Per-cell values on a common [0, 1] scale, with their axes."""

    n_in_axis: tuple[int, ...]
    n_out_axis: tuple[int, ...]
    values: tuple[tuple[tuple[int, int], float], ...]
    model_name: str = ""

    def as_dict(self) -> dict[tuple[int, int], float]:
        return dict(self.values)

    def renormalize(self) -> "NormalizedGrid":
        """Apply min–max normalization to the held values (idempotent when
        they already span exactly [0, 1])."""
        rescaled = _minmax({key: value for key, value in self.values})
        return NormalizedGrid(
            n_in_axis=self.n_in_axis,
            n_out_axis=self.n_out_axis,
            values=tuple(sorted(rescaled.items())),
            model_name=self.model_name,
        )


def _minmax(values: Mapping[tuple[int, int], float]) -> dict[tuple[int, int], float]:
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        raise DegenerateRangeError(
            f"all {len(values)} values equal {lo!r}; min-max normalization is undefined"
        )
    return {key: (value - lo) / (hi - lo) for key, value in values.items()}


def normalize_min_max(grid: EnergyGrid) -> NormalizedGrid:
    """Min–max normalize a grid's efficiency values onto [0, 1].

    The minimum cell maps to exactly 0 and the maximum to exactly 1.
    Raises :class:`DegenerateRangeError` when all efficiencies are equal.
    """
    if len(grid) == 0:
        raise ValidationError("cannot normalize an empty grid")
    normalized = _minmax({obs.key: obs.e_eff for obs in grid})
    return NormalizedGrid(
        n_in_axis=grid.n_in_axis,
        n_out_axis=grid.n_out_axis,
        values=tuple(sorted(normalized.items())),
        model_name=grid.model_name,
    )


def aggregate_normalized(grids: Sequence[EnergyGrid]) -> NormalizedGrid:
    """Cell-wise mean of each grid's min–max-normalized efficiency.

    All grids must share identical axes and cell keys so the mean is taken
    over the same configuration in every grid.
    """
    if not grids:
        raise ValidationError("need at least one grid to aggregate")
    first = grids[0]
    first_keys = {obs.key for obs in first}
    for other in grids[1:]:
        if other.n_in_axis != first.n_in_axis or other.n_out_axis != first.n_out_axis:
            raise ValidationError(
                f"axis mismatch: {other.model_name or 'grid'} has axes "
                f"{other.n_in_axis}x{other.n_out_axis}, expected "
                f"{first.n_in_axis}x{first.n_out_axis}"
            )
        if {obs.key for obs in other} != first_keys:
            raise ValidationError("axis mismatch: grids cover different cell sets")
    per_grid = [normalize_min_max(grid).as_dict() for grid in grids]
    averaged = {
        key: sum(values[key] for values in per_grid) / len(per_grid) for key in first_keys
    }
    names = [g.model_name for g in grids if g.model_name]
    return NormalizedGrid(
        n_in_axis=first.n_in_axis,
        n_out_axis=first.n_out_axis,
        values=tuple(sorted(averaged.items())),
        model_name=", ".join(names),
    )


@dataclass(frozen=True)
class SpreadResult:
    """Ratio between the most and least efficient cells of a grid."""

    ratio: float
    max_cell: tuple[int, int]
    min_cell: tuple[int, int]
    max_e_eff: float
    min_e_eff: float


def efficiency_spread(grid: EnergyGrid) -> SpreadResult:
    """Max/min efficiency ratio with the cells attaining it.

    Ties break toward the lexicographically smallest ``(n_in, n_out)``.
    """
    if len(grid) == 0:
        raise ValidationError("cannot compute the spread of an empty grid")
    best = worst = grid.observations[0]
    for obs in grid.observations[1:]:
        if obs.e_eff > best.e_eff:
            best = obs
        if obs.e_eff < worst.e_eff:
            worst = obs
    return SpreadResult(
        ratio=best.e_eff / worst.e_eff,
        max_cell=best.key,
        min_cell=worst.key,
        max_e_eff=best.e_eff,
        min_e_eff=worst.e_eff,
    )


# ---------------------------------------------------------------------------
# File formats


def read_power_trace_csv(path: str | Path) -> PowerTrace:
    """Read a power trace CSV (header ``timestamp_s,power_w``)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read trace file {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or rows[0] != ["timestamp_s", "power_w"]:
        raise ValidationError(
            f"trace file {path} must start with header 'timestamp_s,power_w'"
        )
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            samples.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return PowerTrace(samples=tuple(samples))


def read_grid_csv(path: str | Path, model_name: str = "") -> EnergyGrid:
    """Read a grid CSV (header ``n_in,n_out,n_req,e_tot_j``)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read grid file {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows or rows[0] != ["n_in", "n_out", "n_req", "e_tot_j"]:
        raise ValidationError(
            f"grid file {path} must start with header 'n_in,n_out,n_req,e_tot_j'"
        )
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        try:
            records.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return build_grid(records, model_name=model_name or Path(path).stem)


def write_grid_csv(grid: EnergyGrid, path: str | Path) -> None:
    """Write a grid CSV atomically; rows sorted by cell key.

    Energies are written with shortest round-trip float formatting so a
    read-back reproduces the grid bit-for-bit.
    """
    lines = ["n_in,n_out,n_req,e_tot_j"]
    for obs in grid.observations:
        lines.append(f"{obs.n_in},{obs.n_out},{obs.n_req},{obs.e_tot!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_heatmap_csv(
    path: str | Path,
    n_in_axis: Sequence[int],
    n_out_axis: Sequence[int],
    values: Mapping[tuple[int, int], float],
) -> None:
    """Write a heatmap matrix CSV atomically.

    First row is the ``n_out`` axis, first column the ``n_in`` axis; cells
    missing from ``values`` are left empty.
    """
    lines = ["," + ",".join(str(o) for o in n_out_axis)]
    for n_in in n_in_axis:
        cells = []
        for n_out in n_out_axis:
            value = values.get((n_in, n_out))
            cells.append("" if value is None else repr(float(value)))
        lines.append(f"{n_in}," + ",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
