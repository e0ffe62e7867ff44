"""Waypoint CSV reading/writing, journey assembly and cleaning."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

from . import SchemaError
from .corridor import CorridorModel

logger = logging.getLogger(__name__)

COLUMNS = ("journey_id", "timestamp", "lat", "lon", "speed_mph")
REJECT_REASONS = ("too_few_points", "gap")


@dataclass(frozen=True)
class Waypoint:
    journey_id: str
    timestamp: float
    lat: float
    lon: float
    speed_mph: float


@dataclass(frozen=True)
class Journey:
    journey_id: str
    waypoints: tuple

    def __len__(self):
        return len(self.waypoints)

    @property
    def start(self) -> float:
        return self.waypoints[0].timestamp


@dataclass(frozen=True)
class RowError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


def _text_stream(stream):
    if isinstance(stream, io.TextIOBase):
        return stream
    if hasattr(stream, "read") and isinstance(stream.read(0), bytes):
        return io.TextIOWrapper(stream, encoding="utf-8", newline="")
    return stream


def parse_waypoints(stream, diagnostics: list | None = None, column_map: dict | None = None) -> Iterator[Waypoint]:
    """Yield valid waypoints in file order.

    Malformed rows are skipped and appended to ``diagnostics`` as RowError.
    ``column_map`` maps canonical column names to vendor header names.
    """
    if diagnostics is None:
        diagnostics = []
    names = {c: (column_map or {}).get(c, c) for c in COLUMNS}
    try:
        reader = csv.reader(_text_stream(stream))
        header = next(reader, None)
    except (OSError, UnicodeDecodeError) as exc:
        raise SchemaError(f"unreadable waypoint stream: {exc}") from exc
    if header is None:
        return
    header = [h.strip() for h in header]
    missing = [names[c] for c in COLUMNS if names[c] not in header]
    if missing:
        raise SchemaError(f"waypoint header is missing column(s) {missing}; got {header}")
    idx = {c: header.index(names[c]) for c in COLUMNS}
    width = len(header)

    line = 1
    while True:
        try:
            row = next(reader)
        except StopIteration:
            return
        except (csv.Error, UnicodeDecodeError) as exc:
            raise SchemaError(f"unreadable waypoint stream near line {line + 1}: {exc}") from exc
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < width:
            diagnostics.append(RowError(line, f"expected {width} fields, got {len(row)}"))
            continue
        jid = row[idx["journey_id"]].strip()
        if not jid:
            diagnostics.append(RowError(line, "empty journey_id"))
            continue
        values = {}
        bad = None
        for c in COLUMNS[1:]:
            raw = row[idx[c]].strip()
            try:
                v = float(raw)
            except ValueError:
                bad = f"{c}: not a number ({raw!r})"
                break
            if not math.isfinite(v):
                bad = f"{c}: not finite"
                break
            values[c] = v
        if bad is None and values["speed_mph"] < 0:
            bad = "speed_mph: negative"
        if bad is None and not (-90 <= values["lat"] <= 90 and -180 <= values["lon"] <= 180):
            bad = "lat/lon out of range"
        if bad is not None:
            diagnostics.append(RowError(line, bad))
            continue
        yield Waypoint(jid, values["timestamp"], values["lat"], values["lon"], values["speed_mph"])


def write_waypoints(waypoints: Iterable[Waypoint], stream) -> int:
    """Write the canonical CSV schema; floats use repr so they round-trip exactly."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    n = 0
    for w in waypoints:
        writer.writerow((w.journey_id, repr(w.timestamp), repr(w.lat), repr(w.lon), repr(w.speed_mph)))
        n += 1
    return n


def write_journeys(journeys: Iterable[Journey], stream) -> int:
    return write_waypoints((w for j in journeys for w in j.waypoints), stream)


def assemble_journeys(waypoints: Iterable[Waypoint]) -> list:
    """Group by journey id, sort by time, keep the first of duplicate timestamps."""
    groups: dict = {}
    for w in waypoints:
        groups.setdefault(w.journey_id, []).append(w)
    out = []
    for jid in sorted(groups):
        pts = sorted(groups[jid], key=lambda w: w.timestamp)  # stable: file order on ties
        kept = [pts[0]]
        for w in pts[1:]:
            if w.timestamp != kept[-1].timestamp:
                kept.append(w)
        out.append(Journey(jid, tuple(kept)))
    return out


def filter_journeys(journeys: Iterable[Journey], min_points: int = 5, max_gap_s: float = 10.0):
    """Drop journeys with too few points or any gap strictly above ``max_gap_s``.

    Returns (kept, tally) where tally counts rejections per reason.
    """
    kept = []
    tally = Counter({r: 0 for r in REJECT_REASONS})
    for j in journeys:
        if len(j.waypoints) < min_points:
            tally["too_few_points"] += 1
            continue
        ts = [w.timestamp for w in j.waypoints]
        if any(b - a > max_gap_s for a, b in zip(ts, ts[1:])):
            tally["gap"] += 1
            continue
        kept.append(j)
    return kept, dict(tally)


def _qualifying(journey: Journey, model: CorridorModel, fences, max_offset_ft: float) -> list:
    lats = [w.lat for w in journey.waypoints]
    lons = [w.lon for w in journey.waypoints]
    _, offsets = model.project(lats, lons)
    flags = []
    for w, off in zip(journey.waypoints, offsets):
        ok = off <= max_offset_ft or any(f.contains((w.lat, w.lon)) for f in fences)
        flags.append(ok)
    return flags


def clip_to_geofences(journey: Journey, model: CorridorModel, fences=None, max_offset_ft: float = 150.0):
    """First contiguous run of waypoints near the corridor or inside a fence.

    Returns (journey or None, number of qualifying runs). More than one run
    means the journey left and re-entered; only the first traversal is kept.
    """
    fences = model.geofences if fences is None else fences
    flags = _qualifying(journey, model, fences, max_offset_ft)
    runs = []
    start = None
    for i, ok in enumerate(flags + [False]):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            runs.append((start, i))
            start = None
    if not runs:
        return None, 0
    a, b = runs[0]
    if a == 0 and b == len(journey.waypoints):
        return journey, 1
    return Journey(journey.journey_id, journey.waypoints[a:b]), len(runs)


@dataclass
class CleanResult:
    journeys: list
    tally: dict


def clean(waypoints: Iterable[Waypoint], model: CorridorModel, *, min_points: int = 5,
          max_gap_s: float = 10.0, max_offset_ft: float = 150.0) -> CleanResult:
    """Assemble, clip to the corridor, then apply the point-count and gap rules.

    The gap rule runs after clipping so gaps outside the corridor do not
    reject an otherwise valid traversal.
    """
    journeys = assemble_journeys(waypoints)
    clipped = []
    off_corridor = truncated = 0
    for j in journeys:
        c, runs = clip_to_geofences(j, model, max_offset_ft=max_offset_ft)
        if c is None:
            off_corridor += 1
            continue
        if runs > 1:
            truncated += 1
        clipped.append(c)
    kept, rejects = filter_journeys(clipped, min_points=min_points, max_gap_s=max_gap_s)
    tally = {
        "input_journeys": len(journeys),
        "off_corridor": off_corridor,
        "truncated_multi_traversal": truncated,
        **rejects,
        "kept": len(kept),
    }
    logger.info("cleaning: %s", tally)
    return CleanResult(kept, tally)


def read_waypoint_files(paths, diagnostics: list | None = None, column_map: dict | None = None) -> list:
    """Read and concatenate several waypoint CSV files."""
    out = []
    for p in paths:
        local: list = []
        try:
            fh = open(p, "rb")
        except OSError as exc:
            raise SchemaError(f"cannot open {p}: {exc.strerror}") from None
        with fh:
            out.extend(parse_waypoints(fh, local, column_map))
        if diagnostics is not None:
            diagnostics.extend(f"{p}: {d}" for d in local)
    return out
