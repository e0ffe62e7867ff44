"""Map matching onto the corridor, O-D classification and path selection."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import CorridorError
from .corridor import CorridorModel, locate_geofence
from .ingest import Journey

UNKNOWN = "unknown"
AMBIGUOUS = "ambiguous"
MIN_DISPLACEMENT_FT = 500.0


@dataclass(frozen=True, eq=False)
class MatchedJourney:
    journey_id: str
    times: np.ndarray  # epoch s
    mileposts: np.ndarray  # ft
    speeds_mph: np.ndarray
    direction: str
    origin: str = UNKNOWN
    destination: str = UNKNOWN
    first_point: tuple = (0.0, 0.0)
    last_point: tuple = (0.0, 0.0)

    def __len__(self):
        return len(self.times)

    @property
    def path(self) -> tuple:
        return (self.origin, self.destination)

    @property
    def has_known_path(self) -> bool:
        return self.origin != UNKNOWN and self.destination != UNKNOWN

    def reversed(self) -> "MatchedJourney":
        """Time-mirrored copy: samples run backwards, endpoints swap."""
        t = self.times
        times = (t[-1] + t[0]) - t[::-1]
        return MatchedJourney(
            self.journey_id, times, self.mileposts[::-1].copy(), self.speeds_mph[::-1].copy(),
            self.direction, self.destination, self.origin, self.last_point, self.first_point,
        )


def direction_of(mileposts, model: CorridorModel, min_displacement_ft: float = MIN_DISPLACEMENT_FT) -> str:
    net = float(mileposts[-1] - mileposts[0])
    if abs(net) < min_displacement_ft:
        return AMBIGUOUS
    return model.direction_labels[0] if net > 0 else model.direction_labels[1]


def classify_od(matched: MatchedJourney, fences) -> tuple:
    """(origin, destination) fence labels of the first and last waypoint."""
    o = locate_geofence(matched.first_point, fences) or UNKNOWN
    d = locate_geofence(matched.last_point, fences) or UNKNOWN
    return o, d


def map_match(journey: Journey, model: CorridorModel, min_displacement_ft: float = MIN_DISPLACEMENT_FT) -> MatchedJourney:
    """Snap every waypoint to the corridor and label direction and O-D."""
    wps = journey.waypoints
    lats = np.array([w.lat for w in wps])
    lons = np.array([w.lon for w in wps])
    mileposts, _ = model.project(lats, lons)
    times = np.array([w.timestamp for w in wps])
    speeds = np.array([w.speed_mph for w in wps])
    first, last = (wps[0].lat, wps[0].lon), (wps[-1].lat, wps[-1].lon)
    o = locate_geofence(first, model.geofences) or UNKNOWN
    d = locate_geofence(last, model.geofences) or UNKNOWN
    return MatchedJourney(
        journey.journey_id, times, mileposts, speeds,
        direction_of(mileposts, model, min_displacement_ft), o, d, first, last,
    )


def match_all(journeys, model: CorridorModel, workers: int = 1) -> list:
    """map_match over many journeys; order follows the input."""
    if workers <= 1 or len(journeys) < 256:
        return [map_match(j, model) for j in journeys]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(map_match, journeys, [model] * len(journeys), chunksize=64))


@dataclass
class ODMatrix:
    labels: list
    counts: dict  # (origin, destination) -> journeys
    unknown: int = 0  # journeys with an unknown endpoint

    def count(self, origin, destination) -> int:
        return self.counts.get((origin, destination), 0)

    @property
    def row_totals(self) -> dict:
        return {o: sum(self.count(o, d) for d in self.labels) for o in self.labels}

    @property
    def col_totals(self) -> dict:
        return {d: sum(self.count(o, d) for o in self.labels) for d in self.labels}

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def write_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["origin", *self.labels, "total"])
        rows = self.row_totals
        for o in self.labels:
            w.writerow([o, *(self.count(o, d) for d in self.labels), rows[o]])
        cols = self.col_totals
        w.writerow(["total", *(cols[d] for d in self.labels), self.total])


def build_od_matrix(matched, labels=None) -> ODMatrix:
    counts: dict = {}
    unknown = 0
    seen = set()
    for m in matched:
        if not m.has_known_path:
            unknown += 1
            continue
        counts[m.path] = counts.get(m.path, 0) + 1
        seen.update(m.path)
    if labels is None:
        labels = sorted(seen)
    else:
        labels = list(labels)
        extra = seen - set(labels)
        labels += sorted(extra)
    return ODMatrix(labels, dict(sorted(counts.items())), unknown)


def parse_path_set(text: str):
    """'all', 'end-to-end', or a comma list of ORIGIN:DEST pairs."""
    text = (text or "all").strip()
    if text in ("all", "end-to-end"):
        return text
    pairs = set()
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if item.count(":") != 1:
            raise CorridorError(f"bad O-D pair {item!r}; expected ORIGIN:DEST")
        o, d = (s.strip() for s in item.split(":"))
        pairs.add((o, d))
    return frozenset(pairs)


def resolve_path_set(paths, model: CorridorModel):
    """Expand a path selector to a set of pairs, or None meaning everything."""
    if paths == "all" or paths is None:
        return None
    if paths == "end-to-end":
        if not model.end_to_end:
            raise CorridorError("corridor file defines no end_to_end pairs")
        return frozenset(model.end_to_end)
    pairs = frozenset((str(o), str(d)) for o, d in paths)
    known = set(model.fence_labels)
    for o, d in pairs:
        for lab in (o, d):
            if lab not in known:
                raise CorridorError(f"path set references unknown geofence {lab!r}")
    return pairs


def select_paths(matched, paths, model: CorridorModel) -> list:
    pairs = resolve_path_set(paths, model)
    if pairs is None:
        return list(matched)
    return [m for m in matched if m.path in pairs]


def path_set_name(paths) -> str:
    if paths in (None, "all"):
        return "all"
    if paths == "end-to-end":
        return "e2e"
    return "custom"
