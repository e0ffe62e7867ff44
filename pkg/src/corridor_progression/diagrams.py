"""Cyclic time-space diagrams, platoon progression diagrams and speed heat maps.

All three are built on a time-in-cycle axis (seconds after local midnight
modulo the cycle length) or an hour-of-day axis, against corridor milepost.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .corridor import SECONDS_PER_DAY, CorridorModel, PlanEntry

QUEUE_THRESHOLD_MPH = 35.0


@dataclass(frozen=True)
class GridSpec:
    delta_t: float  # s
    delta_x: float  # ft
    period: float  # cycle length (PPD) or day span (heat map), s
    length_ft: float

    def __post_init__(self):
        if not (self.delta_t > 0 and self.delta_x > 0 and self.period > 0 and self.length_ft > 0):
            raise ValueError("grid bin widths, period and length must be positive")

    @property
    def n_x(self) -> int:
        return int(math.floor(self.length_ft / self.delta_x))

    @property
    def n_t(self) -> int:
        return int(math.ceil(self.period / self.delta_t - 1e-9))

    @property
    def shape(self):
        return (self.n_t, self.n_x)

    def x_bin(self, x) -> int:
        # the partial tail segment beyond n_x * delta_x folds into the last bin
        return min(max(int(math.floor(x / self.delta_x)), 0), self.n_x - 1)

    def t_bin(self, tau) -> int:
        return min(int(math.floor(tau / self.delta_t)), self.n_t - 1)


@dataclass(eq=False)
class PixelGrid:
    spec: GridSpec
    kind: str  # "ppd" or "heatmap"
    counts: np.ndarray  # journeys (ppd) or waypoint observations (heat map)
    totals: np.ndarray | None = None  # heat map: exact per-cell speed sums (Fraction), mph

    @property
    def sums(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.totals], dtype=float).reshape(self.counts.shape)

    def mean_exact(self, t_bin: int, x_bin: int):
        """Exact rational mean speed of one cell, None where there is no data."""
        n = int(self.counts[t_bin, x_bin])
        return None if n == 0 else self.totals[t_bin, x_bin] / n

    @property
    def mean(self) -> np.ndarray:
        """Correctly rounded mean speed per cell, NaN where there is no data (heat map only)."""
        out = np.full(self.counts.shape, np.nan)
        for tb, xb in zip(*np.nonzero(self.counts)):
            out[tb, xb] = float(self.totals[tb, xb] / int(self.counts[tb, xb]))
        return out

    def __add__(self, other: "PixelGrid") -> "PixelGrid":
        if other.spec != self.spec or other.kind != self.kind:
            raise ValueError("cannot merge grids with different specs")
        totals = None if self.totals is None else self.totals + other.totals
        return PixelGrid(self.spec, self.kind, self.counts + other.counts, totals)


@dataclass(frozen=True, eq=False)
class CyclicTrajectory:
    journey_id: str
    cycle_length: float
    pieces: tuple  # arrays of shape (k, 2): (tau s, milepost ft)


def cyclic_time(t, cycle_length: float):
    """Time in cycle with midnight as the reference point; result in [0, C)."""
    if not np.all(np.asarray(cycle_length) > 0):
        raise ValueError("cycle length must be positive")
    if np.ndim(t) or np.ndim(cycle_length):
        tau = np.mod(np.asarray(t, dtype=float), cycle_length)
        return np.where(tau >= cycle_length, 0.0, tau)
    tau = float(t) % cycle_length
    return 0.0 if tau >= cycle_length else tau


def journey_tod(matched, model: CorridorModel) -> np.ndarray:
    """Seconds after the local midnight preceding the journey's first sample."""
    t0 = matched.times[0]
    return model.time_of_day(t0) + (matched.times - t0)


def _in_window(tod, entry: PlanEntry):
    return (tod >= entry.start) & (tod < entry.end)


def build_cyclic_tsd(matched, entry: PlanEntry, model: CorridorModel, cycle_length: float | None = None) -> list:
    """Wrap every journey onto one cycle, splitting pieces at each wrap.

    Samples outside the plan window are dropped. ``cycle_length`` overrides
    the plan's C (used to demonstrate the effect of a wrong cycle length).
    """
    c = entry.cycle_length_s if cycle_length is None else float(cycle_length)
    out = []
    for m in matched:
        tod = journey_tod(m, model)
        keep = _in_window(tod, entry)
        if not keep.any():
            continue
        tod, x = tod[keep], m.mileposts[keep]
        cycle_idx = np.floor(tod / c)
        tau = cyclic_time(tod, c)
        cuts = np.flatnonzero(np.diff(cycle_idx) != 0) + 1
        pieces = tuple(
            np.column_stack([tau[a:b], x[a:b]])
            for a, b in zip(np.r_[0, cuts], np.r_[cuts, len(tod)])
        )
        out.append(CyclicTrajectory(m.journey_id, c, pieces))
    return out


def ppd_spec(entry: PlanEntry, model: CorridorModel, delta_t: float = 1.0, delta_x: float = 100.0) -> GridSpec:
    return GridSpec(delta_t, delta_x, entry.cycle_length_s, model.length_ft)


def _first_tick_at_or_after(lo, t_first, tps):
    k = max(math.ceil((lo - t_first) * tps), 0)
    while k > 0 and t_first + (k - 1) / tps >= lo:
        k -= 1
    while t_first + k / tps < lo:
        k += 1
    return t_first + k / tps


def journey_pixels(tod, x, spec: GridSpec, ticks_per_s: int = 100) -> set:
    """Distinct (t_bin, x_bin) cells the interpolated cyclic path occupies.

    The path is linear in (time, milepost) between samples and is observed on
    the clock t_first + k / ticks_per_s over [t_first, t_last). Cell changes
    are found analytically (milepost bin edges, time bin edges and cycle
    seams), so the cost is proportional to the number of cells crossed, not
    the number of clock ticks.
    """
    cells: set = set()
    n = len(tod)
    if n < 2:
        return cells
    c = spec.period
    t_first = float(tod[0])
    edges_t = [j * spec.delta_t for j in range(spec.n_t)]
    for i in range(n - 1):
        ta, tb = float(tod[i]), float(tod[i + 1])
        if tb <= ta:
            continue
        xa, xb = float(x[i]), float(x[i + 1])
        events = [ta, tb]
        if xb != xa:
            lo_x, hi_x = min(xa, xb), max(xa, xb)
            j0 = max(int(math.floor(lo_x / spec.delta_x)) + 1, 1)
            j1 = min(int(math.ceil(hi_x / spec.delta_x)) - 1, spec.n_x - 1)
            for j in range(j0, j1 + 1):
                b = j * spec.delta_x
                if lo_x < b < hi_x:
                    events.append(ta + (b - xa) * (tb - ta) / (xb - xa))
        for cyc in range(int(math.floor(ta / c)), int(math.floor(tb / c)) + 1):
            base = cyc * c
            for e in edges_t:
                te = base + e
                if ta < te < tb:
                    events.append(te)
        events.sort()
        for lo, hi in zip(events, events[1:]):
            if hi <= lo:
                continue
            if _first_tick_at_or_after(lo, t_first, ticks_per_s) >= hi:
                continue
            tm = 0.5 * (lo + hi)
            xm = xa + (xb - xa) * (tm - ta) / (tb - ta)
            cells.add((spec.t_bin(cyclic_time(tm, c)), spec.x_bin(xm)))
    return cells


def rasterize_into_ppd(matched, entry: PlanEntry, model: CorridorModel, spec: GridSpec | None = None,
                       ticks_per_s: int = 100) -> PixelGrid:
    """Count distinct journeys per (time-in-cycle, milepost) pixel."""
    spec = spec or ppd_spec(entry, model)
    grid = np.zeros(spec.shape, dtype=np.int64)
    for m in matched:
        tod = journey_tod(m, model)
        keep = _in_window(tod, entry)
        if keep.sum() < 2:
            continue
        for tb, xb in journey_pixels(tod[keep], m.mileposts[keep], spec, ticks_per_s):
            grid[tb, xb] += 1
    return PixelGrid(spec, "ppd", grid)


def heatmap_spec(model: CorridorModel, delta_t: float = 3600.0, delta_x: float = 100.0) -> GridSpec:
    return GridSpec(delta_t, delta_x, SECONDS_PER_DAY, model.length_ft)


def build_speed_heatmap(matched, model: CorridorModel, spec: GridSpec | None = None) -> PixelGrid:
    """Mean reported waypoint speed per (hour, milepost bin); raw waypoints only.

    Cell totals are kept as exact rationals so sum(mean * n) over cells equals
    the sum of all contributing speeds with no rounding.
    """
    spec = spec or heatmap_spec(model)
    counts = np.zeros(spec.shape, dtype=np.int64)
    totals = np.full(spec.shape, Fraction(0), dtype=object)
    for m in matched:
        for ts, x, v in zip(m.times, m.mileposts, m.speeds_mph):
            tb = spec.t_bin(model.time_of_day(ts))
            xb = spec.x_bin(x)
            counts[tb, xb] += 1
            totals[tb, xb] += Fraction(float(v))
    return PixelGrid(spec, "heatmap", counts, totals)


def classify_queued(mean_mph, threshold_mph: float = QUEUE_THRESHOLD_MPH):
    """True if queued (mean strictly below threshold), False if not, None for no data."""
    if mean_mph is None or (isinstance(mean_mph, float) and math.isnan(mean_mph)):
        return None
    return bool(mean_mph < threshold_mph)


def stop_dispersion(matched, model: CorridorModel, cycle_length: float, stop_speed_mph: float = 5.0) -> float:
    """Spread of stopped samples in time-in-cycle, 0 (aligned) to 1 (uniform).

    Stopped samples are grouped by nearest intersection; each group's circular
    variance of tau is weighted by its size. A correct cycle length lines
    stops up on the red interval, a wrong one smears them around the cycle.
    """
    stops = [i.milepost_ft for i in model.intersections]
    groups: dict = {}
    for m in matched:
        tod = journey_tod(m, model)
        sel = m.speeds_mph <= stop_speed_mph
        if not sel.any():
            continue
        theta = 2.0 * np.pi * cyclic_time(tod[sel], cycle_length) / cycle_length
        xs = m.mileposts[sel]
        if stops:
            key = np.argmin(np.abs(xs[:, None] - np.asarray(stops)[None, :]), axis=1)
        else:
            key = np.floor(xs / 100.0).astype(int)
        for k, th in zip(key, theta):
            groups.setdefault(int(k), []).append(th)
    total = sum(len(v) for v in groups.values())
    if total == 0:
        return float("nan")
    acc = 0.0
    for th in groups.values():
        th = np.asarray(th)
        r = math.hypot(np.cos(th).mean(), np.sin(th).mean())
        acc += len(th) * (1.0 - r)
    return acc / total


def write_tsd_csv(trajectories, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["journey_id", "piece", "tau_s", "milepost_ft"])
    for tr in trajectories:
        for k, piece in enumerate(tr.pieces):
            for tau, x in piece:
                w.writerow([tr.journey_id, k, f"{tau:.3f}", f"{x:.3f}"])


def write_grid_csv(grid: PixelGrid, stream, threshold_mph: float = QUEUE_THRESHOLD_MPH) -> None:
    w = csv.writer(stream, lineterminator="\n")
    rows, cols = np.nonzero(grid.counts)
    if grid.kind == "ppd":
        w.writerow(["t_bin", "x_bin", "journeys"])
        for r, c in zip(rows, cols):
            w.writerow([r, c, int(grid.counts[r, c])])
        return
    w.writerow(["t_bin", "x_bin", "mean_speed_mph", "n", "queued"])
    mean = grid.mean
    for r, c in zip(rows, cols):
        w.writerow([r, c, f"{mean[r, c]:.6f}", int(grid.counts[r, c]), int(classify_queued(mean[r, c], threshold_mph))])
