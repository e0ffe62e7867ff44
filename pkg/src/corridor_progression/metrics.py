"""Per-journey progression measures and their corridor-level aggregation.

Per journey: travel time, net corridor distance, free-flow time at the
posted limit, travel rate (s/mi), travel time index, delay and SOFT, a
0-100 smoothness score built from the power spectrum of the speed profile.

Aggregates are computed per O-D path and combined over a path set: delay is
the sum over paths of the per-path mean delay; the other measures are the
count-weighted mean of the per-path means (which is the pooled mean). Path
totals are kept as exact rationals so that identity holds bit for bit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import DegenerateInputError
from .corridor import FT_PER_MILE, FTPS_PER_MPH, CorridorModel, plan_for
from .matching import AMBIGUOUS, MatchedJourney

logger = logging.getLogger(__name__)

METRIC_FIELDS = ("delay_s", "travel_rate_s_per_mi", "tti", "soft")


@dataclass(frozen=True, eq=False)
class SpeedSeries:
    interval_s: float
    values: np.ndarray  # ft/s on a uniform grid

    def __post_init__(self):
        if len(self.values) < 2:
            raise DegenerateInputError("speed series needs at least 2 samples")

    def __len__(self):
        return len(self.values)

    def scaled(self, factor: float) -> "SpeedSeries":
        return SpeedSeries(self.interval_s, self.values * factor)


@dataclass(frozen=True, eq=False)
class Spectrum:
    coefficients: np.ndarray

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


def trip_travel_time_and_distance(matched: MatchedJourney):
    """Observed travel time (s) and net corridor distance (ft)."""
    if len(matched) < 2:
        raise DegenerateInputError(f"journey {matched.journey_id} has fewer than 2 samples")
    t = float(matched.times[-1] - matched.times[0])
    if t <= 0:
        raise DegenerateInputError(f"journey {matched.journey_id} has zero duration")
    return t, abs(float(matched.mileposts[-1] - matched.mileposts[0]))


def free_flow_time(distance_ft: float, speed_limit_mph) -> float:
    if isinstance(speed_limit_mph, CorridorModel):
        speed_limit_mph = speed_limit_mph.speed_limit_mph
    return distance_ft / (speed_limit_mph * FTPS_PER_MPH)


def travel_rate(travel_time_s: float, distance_ft: float) -> float:
    """Seconds per mile."""
    if distance_ft <= 0:
        raise DegenerateInputError("travel rate needs a positive distance")
    return travel_time_s / (distance_ft / FT_PER_MILE)


def travel_time_index(travel_time_s: float, free_flow_s: float) -> float:
    if free_flow_s <= 0:
        raise DegenerateInputError("travel time index needs a positive free-flow time")
    return travel_time_s / free_flow_s


def delay(travel_time_s: float, free_flow_s: float) -> float:
    # negative values (faster than the limit) are kept as-is
    if free_flow_s <= 0:
        raise DegenerateInputError("delay needs a positive free-flow time")
    return travel_time_s - free_flow_s


def resample_speed(matched: MatchedJourney, interval_s: float = 3.0) -> SpeedSeries:
    """Reported speed linearly interpolated onto t0 + n * interval."""
    span = float(matched.times[-1] - matched.times[0])
    if span < 2 * interval_s:
        raise DegenerateInputError(
            f"journey {matched.journey_id} spans {span:.1f} s, need at least {2 * interval_s:.1f} s"
        )
    n = int(math.floor(span / interval_s)) + 1
    grid = np.arange(n) * interval_s
    values = np.interp(grid, matched.times - matched.times[0], matched.speeds_mph * FTPS_PER_MPH)
    return SpeedSeries(interval_s, values)


def dft(series) -> Spectrum:
    values = series.values if isinstance(series, SpeedSeries) else np.asarray(series, dtype=float)
    if len(values) < 2:
        raise DegenerateInputError("transform needs at least 2 samples")
    return Spectrum(np.fft.fft(values))


def soft(series) -> float:
    """Smoothness score in [0, 100]; 100 for a constant speed profile.

    100 * (1 - sqrt(sum_{k>=1} (P_k / P_0)^2)) with P_k the spectral powers,
    clamped at 0 because strongly oscillating profiles drive it negative.
    """
    p = dft(series).powers
    if p[0] <= 0:
        raise DegenerateInputError("SOFT is undefined for an all-zero speed profile")
    raw = 100.0 * (1.0 - math.sqrt(float(np.sum((p[1:] / p[0]) ** 2))))
    return min(max(raw, 0.0), 100.0)


@dataclass(frozen=True)
class TripMetrics:
    journey_id: str
    origin: str
    destination: str
    direction: str
    start: float  # epoch s of the first sample
    start_tod: float
    travel_time_s: float
    distance_ft: float
    free_flow_s: float
    travel_rate_s_per_mi: float
    tti: float
    delay_s: float
    soft: float | None

    @property
    def path(self):
        return (self.origin, self.destination)


def trip_metrics(matched: MatchedJourney, model: CorridorModel, interval_s: float = 3.0) -> TripMetrics:
    t, dist = trip_travel_time_and_distance(matched)
    tf = free_flow_time(dist, model)
    try:
        score = soft(resample_speed(matched, interval_s))
    except DegenerateInputError:
        score = None
    return TripMetrics(
        matched.journey_id, matched.origin, matched.destination, matched.direction,
        float(matched.times[0]), model.time_of_day(matched.times[0]),
        t, dist, tf, travel_rate(t, dist), travel_time_index(t, tf), delay(t, tf), score,
    )


def compute_trips(matched, model: CorridorModel, interval_s: float = 3.0) -> list:
    """TripMetrics for every journey where the measures are defined."""
    out = []
    for m in matched:
        try:
            out.append(trip_metrics(m, model, interval_s))
        except DegenerateInputError as exc:
            logger.debug("skipping %s: %s", m.journey_id, exc)
    return out


# --------------------------------------------------------------------------
# aggregation over O-D paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathStats:
    n: int
    total: Fraction  # exact sum of the per-trip values

    @property
    def mean(self) -> Fraction:
        return self.total / self.n


def path_stats(trips, field: str, paths=None) -> dict:
    """Per-path count and exact total of one metric; None values are skipped."""
    acc: dict = {}
    for tr in trips:
        if paths is not None and tr.path not in paths:
            continue
        v = getattr(tr, field)
        if v is None:
            continue
        n, tot = acc.get(tr.path, (0, Fraction(0)))
        acc[tr.path] = (n + 1, tot + Fraction(v))
    return {p: PathStats(n, tot) for p, (n, tot) in sorted(acc.items())}


def composite_total_delay(delays_by_path: dict, paths=None) -> float:
    """Sum over paths of the mean delay on each path.

    ``delays_by_path`` maps path -> list of delays (or PathStats). Paths in
    ``paths`` with no observations are skipped with a warning.
    """
    keys = list(delays_by_path) if paths is None else list(paths)
    total = Fraction(0)
    used = 0
    for p in keys:
        obs = delays_by_path.get(p)
        if isinstance(obs, PathStats):
            stats = obs
        elif obs:
            stats = PathStats(len(obs), sum((Fraction(d) for d in obs), Fraction(0)))
        else:
            logger.warning("path %s has no observations; excluded from composite delay", p)
            continue
        total += stats.mean
        used += 1
    if used == 0:
        raise DegenerateInputError("no path in the set has observations")
    return float(total)


def weighted_average(means, counts) -> float:
    """Count-weighted mean of per-path means."""
    means, counts = list(means), list(counts)
    n = sum(counts)
    if not means or n <= 0:
        raise DegenerateInputError("weighted average over an empty path set")
    num = sum((Fraction(m) * c for m, c in zip(means, counts)), Fraction(0))
    return float(num / n)


def aggregate(trips, paths=None) -> dict:
    """Composite delay, weighted rate/TTI/SOFT and journey count for a path set."""
    trips = [t for t in trips if paths is None or t.path in paths]
    out = {"journeys": len({t.journey_id for t in trips})}
    for field in METRIC_FIELDS:
        stats = path_stats(trips, field)
        if not stats:
            out[field] = None
        elif field == "delay_s":
            out[field] = composite_total_delay(stats)
        else:
            out[field] = weighted_average([s.mean for s in stats.values()], [s.n for s in stats.values()])
    return out


def metrics_by_plan_and_direction(trips, model: CorridorModel, end_to_end=None) -> list:
    """Figure-style table: one row per (plan, direction), all vs end-to-end paths.

    Trips belong to the plan containing their first sample; journeys with an
    unknown endpoint or ambiguous direction are left out.
    """
    e2e = frozenset(model.end_to_end if end_to_end is None else end_to_end)
    buckets: dict = {}
    for tr in trips:
        if tr.direction == AMBIGUOUS or tr.origin == "unknown" or tr.destination == "unknown":
            continue
        entry = plan_for(tr.start_tod, model.timing_plan)
        if entry is None:
            continue
        buckets.setdefault((entry.name, tr.direction), []).append(tr)
    rows = []
    for entry in model.timing_plan:
        for direction in model.direction_labels:
            group = buckets.get((entry.name, direction), [])
            rows.append({
                "plan": entry.name,
                "direction": direction,
                "all": aggregate(group),
                "e2e": aggregate(group, e2e),
            })
    return rows


def write_metrics_csv(rows, stream) -> None:
    header = ["plan", "direction"]
    for zset in ("all", "e2e"):
        header += [f"{f}_{zset}" for f in (*METRIC_FIELDS, "journeys")]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        line = [r["plan"], r["direction"]]
        for zset in ("all", "e2e"):
            agg = r[zset]
            line += ["" if agg[f] is None else f"{agg[f]:.6f}" for f in METRIC_FIELDS]
            line.append(agg["journeys"])
        w.writerow(line)


def write_trips_csv(trips, stream) -> None:
    fields = list(TripMetrics.__dataclass_fields__)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(fields)
    for t in trips:
        w.writerow(["" if getattr(t, f) is None else getattr(t, f) for f in fields])
