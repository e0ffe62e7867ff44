"""Corridor geometry, geofences, timing plans and the corridor definition file.

Coordinates enter as (lat, lon) degrees and are projected into a local planar
frame in feet (equirectangular about the corridor centroid). Everything inside
the package works in feet and seconds; speeds cross the API boundary in mph.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone as _utc_tz
from pathlib import Path
from typing import Iterable, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from . import CorridorError

FT_PER_MILE = 5280.0
FTPS_PER_MPH = FT_PER_MILE / 3600.0
EARTH_RADIUS_FT = 6371008.8 / 0.3048
SECONDS_PER_DAY = 86400.0


class LocalFrame:
    """Equirectangular projection about a reference point, in feet."""

    def __init__(self, lat0: float, lon0: float):
        self.lat0 = float(lat0)
        self.lon0 = float(lon0)
        self._ky = EARTH_RADIUS_FT * math.pi / 180.0
        self._kx = self._ky * math.cos(math.radians(self.lat0))

    def to_xy(self, lat, lon):
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        return (lon - self.lon0) * self._kx, (lat - self.lat0) * self._ky

    def to_latlon(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.lat0 + y / self._ky, self.lon0 + x / self._kx


@dataclass(frozen=True)
class Geofence:
    label: str
    polygon: tuple  # ((lat, lon), ...)

    def __post_init__(self):
        poly = tuple((float(a), float(b)) for a, b in self.polygon)
        object.__setattr__(self, "polygon", poly)
        if len(poly) < 3:
            raise CorridorError(f"geofence {self.label!r} needs at least 3 vertices")
        if not _is_simple(poly):
            raise CorridorError(f"geofence {self.label!r} polygon is self-intersecting")

    def contains(self, point) -> bool:
        return _point_in_polygon(point, self.polygon)


@dataclass(frozen=True)
class PlanEntry:
    name: str
    start: float  # seconds after midnight, inclusive
    end: float  # exclusive
    cycle_length_s: float

    def __contains__(self, tod) -> bool:
        return self.start <= tod < self.end


@dataclass(frozen=True)
class TimingPlan:
    entries: tuple = ()

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.start))
        object.__setattr__(self, "entries", entries)
        names = set()
        for e in entries:
            if not e.cycle_length_s > 0:
                raise CorridorError(f"plan {e.name!r}: cycle length must be positive")
            if not 0 <= e.start < e.end <= SECONDS_PER_DAY:
                raise CorridorError(f"plan {e.name!r}: need 0 <= start < end <= 86400")
            if e.name in names:
                raise CorridorError(f"duplicate plan name {e.name!r}")
            names.add(e.name)
        for a, b in zip(entries, entries[1:]):
            if b.start < a.end:
                raise CorridorError(f"plans {a.name!r} and {b.name!r} overlap")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def get(self, name: str) -> PlanEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise CorridorError(f"unknown plan {name!r}; have {[e.name for e in self.entries]}")


def plan_for(tod: float, plan: TimingPlan) -> PlanEntry | None:
    """Entry whose half-open window [start, end) contains ``tod``, else None."""
    starts = [e.start for e in plan.entries]
    i = bisect.bisect_right(starts, tod) - 1
    if i >= 0 and tod in plan.entries[i]:
        return plan.entries[i]
    return None


@dataclass(frozen=True)
class Intersection:
    name: str
    milepost_ft: float


@dataclass(frozen=True, eq=False)
class CorridorModel:
    vertices: tuple  # ((lat, lon), ...)
    speed_limit_mph: float
    intersections: tuple = ()
    direction_labels: tuple = ("EB", "WB")
    geofences: tuple = ()
    timing_plan: TimingPlan = field(default_factory=TimingPlan)
    end_to_end: tuple = ()  # ((origin, destination), ...)
    timezone: str = "UTC"
    name: str = "corridor"

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise CorridorError("corridor needs at least 2 vertices")
        if not all(math.isfinite(c) for v in verts for c in v):
            raise CorridorError("corridor vertices must be finite")
        if not self.speed_limit_mph > 0:
            raise CorridorError("speed_limit_mph must be positive")
        lats, lons = zip(*verts)
        frame = LocalFrame(sum(lats) / len(lats), sum(lons) / len(lons))
        x, y = frame.to_xy(lats, lons)
        xy = np.column_stack([x, y])
        seg = np.diff(xy, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0):
            raise CorridorError("corridor has repeated consecutive vertices")
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "_xy", xy)
        object.__setattr__(self, "_seg", seg)
        object.__setattr__(self, "_seg_len", seg_len)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "length_ft", float(cum[-1]))

        inters = tuple(
            i if isinstance(i, Intersection) else Intersection(str(i[0]), float(i[1]))
            for i in self.intersections
        )
        object.__setattr__(self, "intersections", inters)
        mps = [i.milepost_ft for i in inters]
        if any(b <= a for a, b in zip(mps, mps[1:])):
            raise CorridorError("intersection mileposts must be strictly increasing")
        if mps and (mps[0] < 0 or mps[-1] > self.length_ft):
            raise CorridorError(f"intersection mileposts must lie in [0, {self.length_ft:.1f}]")

        labels = [f.label for f in self.geofences]
        if len(set(labels)) != len(labels):
            raise CorridorError("geofence labels must be unique")
        if len(self.direction_labels) != 2 or len(set(self.direction_labels)) != 2:
            raise CorridorError("direction_labels needs two distinct labels")
        object.__setattr__(self, "direction_labels", tuple(self.direction_labels))
        e2e = tuple((str(o), str(d)) for o, d in self.end_to_end)
        for o, d in e2e:
            for lab in (o, d):
                if lab not in labels:
                    raise CorridorError(f"end_to_end references unknown geofence {lab!r}")
        object.__setattr__(self, "end_to_end", e2e)
        object.__setattr__(self, "_tz", None if self.timezone == "UTC" else ZoneInfo(self.timezone))

    @property
    def speed_limit_ftps(self) -> float:
        return self.speed_limit_mph * FTPS_PER_MPH

    @property
    def fence_labels(self) -> list:
        return [f.label for f in self.geofences]

    def geofence(self, label: str) -> Geofence:
        for f in self.geofences:
            if f.label == label:
                return f
        raise CorridorError(f"unknown geofence {label!r}")

    def project(self, lats, lons):
        """Vectorized linear referencing: arrays of (milepost ft, offset ft)."""
        x, y = self.frame.to_xy(lats, lons)
        p = np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])
        a = self._xy[:-1]
        rel = p[:, None, :] - a[None, :, :]
        t = np.einsum("msk,sk->ms", rel, self._seg) / (self._seg_len**2)[None, :]
        t = np.clip(t, 0.0, 1.0)
        foot = a[None, :, :] + t[:, :, None] * self._seg[None, :, :]
        dist = np.hypot(p[:, None, 0] - foot[:, :, 0], p[:, None, 1] - foot[:, :, 1])
        # argmin returns the first minimum, i.e. the smallest milepost on ties
        k = np.argmin(dist, axis=1)
        rows = np.arange(len(p))
        milepost = self._cum[k] + t[rows, k] * self._seg_len[k]
        return np.clip(milepost, 0.0, self.length_ft), dist[rows, k]

    def _segment_at(self, milepost_ft: float):
        m = min(max(float(milepost_ft), 0.0), self.length_ft)
        k = min(int(np.searchsorted(self._cum, m, side="right")) - 1, len(self._seg_len) - 1)
        return k, m

    def xy_at(self, milepost_ft: float) -> np.ndarray:
        """Local-frame (x, y) ft of the centerline point at a milepost."""
        k, m = self._segment_at(milepost_ft)
        return self._xy[k] + (m - self._cum[k]) / self._seg_len[k] * self._seg[k]

    def tangent_at(self, milepost_ft: float) -> np.ndarray:
        """Unit vector pointing toward increasing milepost."""
        k, _ = self._segment_at(milepost_ft)
        return self._seg[k] / self._seg_len[k]

    def point_at(self, milepost_ft: float):
        """(lat, lon) of the centerline point at a milepost."""
        x, y = self.xy_at(milepost_ft)
        lat, lon = self.frame.to_latlon(x, y)
        return float(lat), float(lon)

    def time_of_day(self, timestamp: float) -> float:
        """Seconds after local midnight for an epoch timestamp."""
        if self._tz is None:
            return float(timestamp) % SECONDS_PER_DAY
        dt = datetime.fromtimestamp(float(timestamp), tz=_utc_tz.utc).astimezone(self._tz)
        return (float(timestamp) + dt.utcoffset().total_seconds()) % SECONDS_PER_DAY


def linear_reference(point, model: CorridorModel):
    """Milepost and perpendicular offset (both ft) of a (lat, lon) point."""
    m, d = model.project([point[0]], [point[1]])
    return float(m[0]), float(d[0])


def locate_geofence(point, fences: Iterable[Geofence]) -> str | None:
    """Label of the first fence (in list order) containing the point."""
    for f in fences:
        if f.contains(point):
            return f.label
    return None


def _on_segment(p, a, b) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    scale = max(abs(b[0] - a[0]), abs(b[1] - a[1]), 1e-300)
    if abs(cross) > 1e-12 * scale:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])) and (
        min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _point_in_polygon(point, polygon: Sequence) -> bool:
    py, px = float(point[0]), float(point[1])
    inside = False
    n = len(polygon)
    for i in range(n):
        ay, ax = polygon[i]
        by, bx = polygon[(i + 1) % n]
        if _on_segment((px, py), (ax, ay), (bx, by)):
            return True
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and _on_segment(q1, p1, p2))
        or (o2 == 0 and _on_segment(q2, p1, p2))
        or (o3 == 0 and _on_segment(p1, q1, q2))
        or (o4 == 0 and _on_segment(p2, q1, q2))
    )


def _is_simple(poly) -> bool:
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return False
    return True


# --------------------------------------------------------------------------
# corridor definition file
# --------------------------------------------------------------------------


def parse_tod(value) -> float:
    """Seconds after midnight from a number or an "HH:MM[:SS]" string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        parts = value.strip().split(":")
        if 2 <= len(parts) <= 3:
            h, m = int(parts[0]), int(parts[1])
            s = float(parts[2]) if len(parts) == 3 else 0.0
            if 0 <= m < 60 and 0 <= s < 60:
                return h * 3600.0 + m * 60.0 + s
    raise ValueError(f"bad time of day {value!r}")


def format_tod(seconds: float) -> str:
    s = int(round(seconds))
    text = f"{s // 3600:02d}:{s % 3600 // 60:02d}"
    return text + (f":{s % 60:02d}" if s % 60 else "")


def _line_index(text: str):
    """JSON path -> 1-based line number of the value at that path."""
    decoder = json.JSONDecoder()
    newlines = [i for i, ch in enumerate(text) if ch == "\n"]
    out = {}

    def line(idx):
        return bisect.bisect_left(newlines, idx) + 1

    def ws(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def scan(i, path):
        i = ws(i)
        out[path] = line(i)
        ch = text[i]
        if ch == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, ws(i) + 1)
                i = ws(i) + 1  # ':'
                i = ws(scan(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = ws(scan(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    scan(0, ())
    return out


class _Diag:
    def __init__(self, lines):
        self.lines = lines
        self.items = []

    def add(self, path, message):
        probe = tuple(path)
        while probe and probe not in self.lines:
            probe = probe[:-1]
        ln = self.lines.get(probe, 1)
        dotted = ".".join(str(p) for p in path) or "<root>"
        self.items.append(f"line {ln}: {dotted}: {message}")


def _latlon_list(value, path, diag, min_len):
    if not isinstance(value, list) or len(value) < min_len:
        diag.add(path, f"expected a list of at least {min_len} [lat, lon] pairs")
        return None
    pts = []
    for k, p in enumerate(value):
        ok = (
            isinstance(p, list)
            and len(p) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
            and all(math.isfinite(c) for c in p)
        )
        if not ok:
            diag.add(path + [k], "expected [lat, lon] with finite numbers")
            return None
        if not (-90 <= p[0] <= 90 and -180 <= p[1] <= 180):
            diag.add(path + [k], "lat/lon out of range")
            return None
        pts.append((float(p[0]), float(p[1])))
    return pts


def corridor_from_dict(doc: dict, lines: dict | None = None) -> CorridorModel:
    diag = _Diag(lines or {})
    if not isinstance(doc, dict):
        raise CorridorError("corridor file must hold a JSON object", ["line 1: <root>: not an object"])
    for key in ("vertices", "intersections", "speed_limit_mph", "geofences", "timing_plan"):
        if key not in doc:
            diag.add([], f"missing required field {key!r}")
    if diag.items:
        raise CorridorError("invalid corridor definition", diag.items)

    verts = _latlon_list(doc["vertices"], ["vertices"], diag, 2)
    limit = doc["speed_limit_mph"]
    if not isinstance(limit, (int, float)) or isinstance(limit, bool) or not limit > 0:
        diag.add(["speed_limit_mph"], "must be a positive number")

    fences = []
    labels = set()
    if not isinstance(doc["geofences"], list):
        diag.add(["geofences"], "expected a list")
    else:
        for k, g in enumerate(doc["geofences"]):
            path = ["geofences", k]
            if not isinstance(g, dict) or "label" not in g or "polygon" not in g:
                diag.add(path, "expected {label, polygon}")
                continue
            label = str(g["label"])
            if label in labels:
                diag.add(path + ["label"], f"duplicate label {label!r}")
            labels.add(label)
            poly = _latlon_list(g["polygon"], path + ["polygon"], diag, 3)
            if poly is None:
                continue
            try:
                fences.append(Geofence(label, tuple(poly)))
            except CorridorError as exc:
                diag.add(path + ["polygon"], str(exc))

    entries = []
    if not isinstance(doc["timing_plan"], list):
        diag.add(["timing_plan"], "expected a list")
    else:
        for k, e in enumerate(doc["timing_plan"]):
            path = ["timing_plan", k]
            try:
                entries.append(
                    PlanEntry(
                        str(e["name"]),
                        parse_tod(e["start"]),
                        parse_tod(e["end"]),
                        float(e["cycle_length_s"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                diag.add(path, f"expected {{name, start, end, cycle_length_s}} ({exc})")
                continue
            ent = entries[-1]
            if not ent.cycle_length_s > 0:
                diag.add(path + ["cycle_length_s"], "must be positive")
            if not 0 <= ent.start < ent.end <= SECONDS_PER_DAY:
                diag.add(path, "need 0 <= start < end <= 24:00")
        ordered = sorted(range(len(entries)), key=lambda i: entries[i].start)
        for a, b in zip(ordered, ordered[1:]):
            if entries[b].start < entries[a].end:
                diag.add(["timing_plan", b], f"overlaps plan {entries[a].name!r}")

    if diag.items:
        raise CorridorError("invalid corridor definition", diag.items)

    # intersections need the geometry for lat/lon placement
    try:
        base = CorridorModel(vertices=tuple(verts), speed_limit_mph=float(limit))
    except CorridorError as exc:
        diag.add(["vertices"], str(exc))
        raise CorridorError("invalid corridor definition", diag.items) from None

    if "length_ft" in doc:
        given = doc["length_ft"]
        if not isinstance(given, (int, float)) or abs(given - base.length_ft) > 1e-6 * base.length_ft:
            diag.add(["length_ft"], f"does not match polyline length {base.length_ft:.3f} ft")

    inters = []
    if not isinstance(doc["intersections"], list):
        diag.add(["intersections"], "expected a list")
    else:
        for k, it in enumerate(doc["intersections"]):
            path = ["intersections", k]
            if not isinstance(it, dict) or "name" not in it:
                diag.add(path, "expected {name, milepost_ft} or {name, lat, lon}")
                continue
            if "milepost_ft" in it:
                mp = it["milepost_ft"]
                if not isinstance(mp, (int, float)) or isinstance(mp, bool):
                    diag.add(path + ["milepost_ft"], "must be a number")
                    continue
                mp = float(mp)
            elif "lat" in it and "lon" in it:
                mp, _ = linear_reference((it["lat"], it["lon"]), base)
            else:
                diag.add(path, "expected milepost_ft or lat/lon")
                continue
            if not 0 <= mp <= base.length_ft:
                diag.add(path, f"milepost {mp:.1f} outside [0, {base.length_ft:.1f}]")
            if inters and mp <= inters[-1][1]:
                diag.add(path, "mileposts must be strictly increasing")
            inters.append((str(it["name"]), mp))

    labels_dir = doc.get("direction_labels", ["EB", "WB"])
    if not (isinstance(labels_dir, list) and len(labels_dir) == 2 and labels_dir[0] != labels_dir[1]):
        diag.add(["direction_labels"], "expected two distinct labels")

    e2e = doc.get("end_to_end", [])
    if not isinstance(e2e, list):
        diag.add(["end_to_end"], "expected a list of [origin, destination] pairs")
        e2e = []
    for k, pair in enumerate(e2e):
        if not (isinstance(pair, list) and len(pair) == 2):
            diag.add(["end_to_end", k], "expected [origin, destination]")
            continue
        for lab in pair:
            if str(lab) not in labels:
                diag.add(["end_to_end", k], f"unknown geofence label {lab!r}")

    tz = doc.get("timezone", "UTC")
    if tz != "UTC":
        try:
            ZoneInfo(tz)
        except Exception:
            diag.add(["timezone"], f"unknown time zone {tz!r}")

    if diag.items:
        raise CorridorError("invalid corridor definition", diag.items)

    return CorridorModel(
        vertices=tuple(verts),
        speed_limit_mph=float(limit),
        intersections=tuple(inters),
        direction_labels=tuple(str(s) for s in labels_dir),
        geofences=tuple(fences),
        timing_plan=TimingPlan(tuple(entries)),
        end_to_end=tuple(tuple(p) for p in e2e),
        timezone=tz,
        name=str(doc.get("name", "corridor")),
    )


def parse_corridor(text: str) -> CorridorModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorridorError("corridor file is not valid JSON", [f"line {exc.lineno}: {exc.msg}"]) from None
    return corridor_from_dict(doc, _line_index(text))


def load_corridor(path) -> CorridorModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorridorError(f"cannot read corridor file {path}: {exc.strerror}") from None
    return parse_corridor(text)


def corridor_to_dict(model: CorridorModel) -> dict:
    return {
        "name": model.name,
        "timezone": model.timezone,
        "vertices": [list(v) for v in model.vertices],
        "length_ft": model.length_ft,
        "speed_limit_mph": model.speed_limit_mph,
        "direction_labels": list(model.direction_labels),
        "intersections": [{"name": i.name, "milepost_ft": i.milepost_ft} for i in model.intersections],
        "geofences": [{"label": f.label, "polygon": [list(p) for p in f.polygon]} for f in model.geofences],
        "timing_plan": [
            {
                "name": e.name,
                "start": format_tod(e.start),
                "end": format_tod(e.end),
                "cycle_length_s": e.cycle_length_s,
            }
            for e in model.timing_plan
        ],
        "end_to_end": [list(p) for p in model.end_to_end],
    }


def dump_corridor(model: CorridorModel, path) -> None:
    Path(path).write_text(json.dumps(corridor_to_dict(model), indent=2) + "\n", encoding="utf-8")
