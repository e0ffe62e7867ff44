"""Synthetic corridor and connected-vehicle trajectory generator with ground truth.

Vehicles run at the speed limit along a fixed-time signalized arterial. At
each stop line a point queue decides whether a vehicle passes, or brakes to a
full stop and leaves at the next green once the queue ahead has discharged.
A seeded subsample of vehicles (the penetration fraction) emits waypoints
every few seconds; the ledger keeps the true O-D, travel time, delay and
number of stops for every vehicle, emitted or not.

Node labels: "1W" is the west end, "<n>E" the east end, "<k>N"/"<k>S" the
side streets at intersection k. The corridor is laid out west to east, so
the first direction label (EB) means increasing milepost.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import SynthError
from .corridor import (
    FTPS_PER_MPH,
    CorridorModel,
    Geofence,
    Intersection,
    LocalFrame,
    PlanEntry,
    TimingPlan,
    dump_corridor,
    parse_tod,
)
from .diagrams import cyclic_time
from .ingest import Waypoint, write_waypoints

LEDGER_COLUMNS = (
    "vehicle_id", "journey_id", "emitted", "origin", "destination", "direction",
    "start", "end", "travel_time_s", "distance_ft", "delay_s", "stops",
)
DEFAULT_ORIGIN = (42.5, -90.68)
FENCE_HALF_WIDTH_FT = 100.0
SIDE_FENCE_NEAR_FT = 60.0
SIDE_FENCE_HALF_LENGTH_FT = 80.0
END_FENCE_DEPTH_FT = 300.0


@dataclass(frozen=True)
class SignalSpec:
    name: str
    milepost_ft: float
    cycle_s: float
    offset_s: float | None = None  # start of green in cycle time
    green_fraction: float = 0.5


@dataclass(frozen=True)
class DemandSpec:
    origin: str
    destination: str
    rate_vph: float


@dataclass(frozen=True)
class VehicleSpec:
    """A single scheduled vehicle, in addition to random demand."""
    origin: str
    destination: str
    depart: float  # seconds after midnight


@dataclass(frozen=True)
class SynthScenario:
    intersections: tuple
    length_ft: float
    speed_limit_mph: float = 45.0
    demand: tuple = ()
    vehicles: tuple = ()
    demand_start: float = 15 * 3600.0
    demand_end: float = 17 * 3600.0
    plan_name: str = "afternoon"
    plan_start: float = 14.5 * 3600.0
    plan_end: float = 18 * 3600.0
    offset_pattern: str = "aligned"
    penetration: float = 0.05
    waypoint_interval_s: float = 3.0
    lateral_noise_ft: float = 0.0
    speed_noise_mph: float = 0.0
    seed: int = 0
    saturation_headway_s: float = 2.0
    decel_ftps2: float = 10.0
    accel_ftps2: float = 7.0
    side_leg_ft: float = 300.0
    bend_deg: float = 0.0
    origin_latlon: tuple = DEFAULT_ORIGIN
    day: str = "2021-10-04"
    name: str = "synthetic"

    def __post_init__(self):
        sigs = tuple(s if isinstance(s, SignalSpec) else SignalSpec(**s) for s in self.intersections)
        object.__setattr__(self, "intersections", sigs)
        object.__setattr__(self, "demand", tuple(
            d if isinstance(d, DemandSpec) else DemandSpec(**d) for d in self.demand))
        object.__setattr__(self, "vehicles", tuple(
            v if isinstance(v, VehicleSpec) else VehicleSpec(v["origin"], v["destination"], parse_tod(v["depart"]))
            for v in self.vehicles))
        if not sigs:
            raise SynthError("scenario needs at least one intersection")
        for s in sigs:
            if not s.cycle_s > 0:
                raise SynthError(f"{s.name}: cycle must be positive")
            if not 0 < s.green_fraction <= 1:
                raise SynthError(f"{s.name}: green fraction must be in (0, 1]")
        for d in self.demand:
            if not d.rate_vph >= 0:
                raise SynthError(f"demand {d.origin}->{d.destination}: rate must be >= 0")
        if not 0 <= self.penetration <= 1:
            raise SynthError("penetration must be in [0, 1]")
        if not self.waypoint_interval_s > 0:
            raise SynthError("waypoint interval must be positive")
        if self.lateral_noise_ft < 0 or self.speed_noise_mph < 0:
            raise SynthError("noise std-devs must be >= 0")
        if not self.demand_start <= self.demand_end:
            raise SynthError("demand window is reversed")
        if self.offset_pattern not in ("aligned", "anti-aligned"):
            raise SynthError(f"unknown offset pattern {self.offset_pattern!r}")

    @property
    def speed_ftps(self) -> float:
        return self.speed_limit_mph * FTPS_PER_MPH

    @property
    def labels(self) -> list:
        n = len(self.intersections)
        side = [f"{k}{s}" for k in range(1, n + 1) for s in ("N", "S")]
        return ["1W", f"{n}E", *side]

    @property
    def end_to_end(self) -> tuple:
        n = len(self.intersections)
        return (("1W", f"{n}E"), (f"{n}E", "1W"))

    def offsets(self) -> list:
        """Green start per intersection; explicit values win over the pattern.

        Aligned offsets give an eastbound vehicle leaving intersection 1 at
        the start of green a green wave; anti-aligned shifts every second
        signal by half a cycle, so the same vehicle meets red.
        """
        v = self.speed_ftps
        m0 = self.intersections[0].milepost_ft
        out = []
        for k, s in enumerate(self.intersections):
            if s.offset_s is not None:
                out.append(float(s.offset_s) % s.cycle_s)
                continue
            off = (s.milepost_ft - m0) / v
            if self.offset_pattern == "anti-aligned":
                off += (k % 2) * s.cycle_s / 2.0
            out.append(off % s.cycle_s)
        return out

    def replace(self, **changes) -> "SynthScenario":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return SynthScenario(**d)


def default_scenario(**changes) -> SynthScenario:
    """Four signals spaced half a cycle of travel apart, two hours of demand."""
    c, mph = 90.0, 45.0
    spacing = mph * FTPS_PER_MPH * c / 2.0
    sigs = tuple(SignalSpec(f"Int{k + 1}", 1000.0 + k * spacing, c) for k in range(4))
    demand = (
        DemandSpec("1W", "4E", 420.0), DemandSpec("4E", "1W", 420.0),
        DemandSpec("1W", "2S", 40.0), DemandSpec("1W", "3N", 40.0),
        DemandSpec("2N", "4E", 40.0), DemandSpec("3S", "4E", 30.0),
        DemandSpec("4E", "3S", 40.0), DemandSpec("4E", "2N", 40.0),
        DemandSpec("3N", "1W", 40.0), DemandSpec("2S", "1W", 30.0),
        DemandSpec("2N", "3S", 20.0), DemandSpec("3N", "2S", 20.0),
    )
    base = dict(intersections=sigs, length_ft=sigs[-1].milepost_ft + 1000.0, speed_limit_mph=mph, demand=demand)
    base.update(changes)
    return SynthScenario(**base)


def scenario_from_dict(doc: dict) -> SynthScenario:
    d = dict(doc)
    if "default" in d:
        base = default_scenario()
        d.pop("default")
        d = {**{f: getattr(base, f) for f in base.__dataclass_fields__}, **d}
    noise = d.pop("noise", None)
    if noise:
        d["lateral_noise_ft"] = float(noise.get("lateral_ft", 0.0))
        d["speed_noise_mph"] = float(noise.get("speed_mph", 0.0))
    plan = d.pop("plan", None)
    if plan:
        d["plan_name"] = plan.get("name", "afternoon")
        d["plan_start"] = parse_tod(plan["start"])
        d["plan_end"] = parse_tod(plan["end"])
    for key in ("demand_start", "demand_end", "plan_start", "plan_end"):
        if key in d:
            d[key] = parse_tod(d[key])
    if "origin_latlon" in d:
        d["origin_latlon"] = tuple(d["origin_latlon"])
    unknown = set(d) - set(SynthScenario.__dataclass_fields__)
    if unknown:
        raise SynthError(f"unknown scenario field(s) {sorted(unknown)}")
    try:
        return SynthScenario(**d)
    except TypeError as exc:
        raise SynthError(f"bad scenario: {exc}") from None


def load_scenario(path) -> SynthScenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SynthError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SynthError(f"scenario {path} is not valid JSON: line {exc.lineno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def scenario_to_dict(sc: SynthScenario) -> dict:
    d = {f: getattr(sc, f) for f in sc.__dataclass_fields__}
    d["intersections"] = [asdict(s) for s in sc.intersections]
    d["demand"] = [asdict(x) for x in sc.demand]
    d["vehicles"] = [asdict(x) for x in sc.vehicles]
    d["origin_latlon"] = list(sc.origin_latlon)
    return d


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------


def _rect(model: CorridorModel, center_m: float, along: tuple, lateral: tuple):
    """Lat/lon polygon of a rectangle aligned with the corridor at a milepost."""
    c = model.xy_at(center_m)
    t = model.tangent_at(center_m)
    n = np.array([-t[1], t[0]])
    corners = [(along[0], lateral[0]), (along[1], lateral[0]), (along[1], lateral[1]), (along[0], lateral[1])]
    pts = []
    for a, b in corners:
        x, y = c + a * t + b * n
        lat, lon = model.frame.to_latlon(x, y)
        pts.append((float(lat), float(lon)))
    return tuple(pts)


def build_corridor(sc: SynthScenario) -> CorridorModel:
    sigs = sc.intersections
    length = float(sc.length_ft)
    mps = [s.milepost_ft for s in sigs]
    decel = sc.speed_ftps ** 2 / (2 * sc.decel_ftps2)
    accel = sc.speed_ftps ** 2 / (2 * sc.accel_ftps2)
    if any(b <= a for a, b in zip(mps, mps[1:])):
        raise SynthError("intersection mileposts must increase")
    if mps[0] < max(decel, END_FENCE_DEPTH_FT + SIDE_FENCE_HALF_LENGTH_FT) or length - mps[-1] < max(
            decel, END_FENCE_DEPTH_FT + SIDE_FENCE_HALF_LENGTH_FT):
        raise SynthError("intersections too close to the corridor ends for braking and end fences")
    if any(b - a < decel + accel for a, b in zip(mps, mps[1:])):
        raise SynthError(f"intersections closer than {decel + accel:.0f} ft cannot hold a stop and restart")

    # west-to-east polyline, optionally bent at mid-length
    half = length / 2.0
    th = math.radians(sc.bend_deg)
    local = [(0.0, 0.0), (half, 0.0), (half + half * math.cos(th), half * math.sin(th))]
    if sc.bend_deg == 0:
        local = [local[0], local[2]]
    f0 = LocalFrame(*sc.origin_latlon)
    verts = [tuple(float(v) for v in f0.to_latlon(x, y)) for x, y in local]
    plan = TimingPlan((PlanEntry(sc.plan_name, sc.plan_start, sc.plan_end, sigs[0].cycle_s),))
    inters = tuple(Intersection(s.name, s.milepost_ft) for s in sigs)
    skeleton = CorridorModel(verts, sc.speed_limit_mph, inters, timing_plan=plan, name=sc.name)
    fences = [
        Geofence("1W", _rect(skeleton, 0.0, (-200.0, END_FENCE_DEPTH_FT), (-FENCE_HALF_WIDTH_FT, FENCE_HALF_WIDTH_FT))),
        Geofence(f"{len(sigs)}E", _rect(skeleton, skeleton.length_ft, (-END_FENCE_DEPTH_FT, 200.0),
                                        (-FENCE_HALF_WIDTH_FT, FENCE_HALF_WIDTH_FT))),
    ]
    far = sc.side_leg_ft + FENCE_HALF_WIDTH_FT
    h = SIDE_FENCE_HALF_LENGTH_FT
    for k, s in enumerate(sigs, start=1):
        fences.append(Geofence(f"{k}N", _rect(skeleton, s.milepost_ft, (-h, h), (SIDE_FENCE_NEAR_FT, far))))
        fences.append(Geofence(f"{k}S", _rect(skeleton, s.milepost_ft, (-h, h), (-far, -SIDE_FENCE_NEAR_FT))))
    return CorridorModel(verts, sc.speed_limit_mph, inters, geofences=tuple(fences), timing_plan=plan,
                         end_to_end=sc.end_to_end, name=sc.name)


@dataclass(frozen=True)
class Route:
    origin: str
    destination: str
    sign: int  # +1 increasing milepost
    entry_m: float
    exit_m: float
    leg_in: float  # side-street length before joining, 0 at the corridor ends
    side_in: int  # +1 north, -1 south, 0 none
    leg_out: float
    side_out: int
    stops: tuple  # (signal index, route distance of the stop line)

    @property
    def corridor_ft(self) -> float:
        return abs(self.exit_m - self.entry_m)

    @property
    def length(self) -> float:
        return self.leg_in + self.corridor_ft + self.leg_out


def _node(label: str, sc: SynthScenario, model: CorridorModel):
    """(milepost, signal index or None, side sign) of a node label."""
    n = len(sc.intersections)
    if label == "1W":
        return 0.0, None, 0
    if label == f"{n}E":
        return model.length_ft, None, 0
    try:
        k = int(label[:-1])
    except ValueError:
        k = -1
    if 1 <= k <= n and label[-1] in "NS":
        return sc.intersections[k - 1].milepost_ft, k - 1, (1 if label[-1] == "N" else -1)
    raise SynthError(f"unknown node {label!r}; have {sc.labels}")


def make_route(origin: str, destination: str, sc: SynthScenario, model: CorridorModel) -> Route:
    m_in, k_in, side_in = _node(origin, sc, model)
    m_out, k_out, side_out = _node(destination, sc, model)
    if abs(m_out - m_in) < 500.0:
        raise SynthError(f"route {origin}->{destination} is too short to have a direction")
    sign = 1 if m_out > m_in else -1
    leg_in = sc.side_leg_ft if side_in else 0.0
    leg_out = sc.side_leg_ft if side_out else 0.0
    stops = []
    order = range(len(sc.intersections)) if sign > 0 else reversed(range(len(sc.intersections)))
    for k in order:
        m = sc.intersections[k].milepost_ft
        ahead = sign * (m - m_in)
        if k == k_in or ahead <= 0 or sign * (m - m_out) > 0:
            continue
        stops.append((k, leg_in + ahead))
    return Route(origin, destination, sign, m_in, m_out, leg_in, side_in, leg_out, side_out, tuple(stops))


def route_xy(route: Route, s: float, model: CorridorModel):
    """Local (x, y) at route distance s and the unit heading there."""
    if s < route.leg_in:
        j = model.xy_at(route.entry_m)
        t = model.tangent_at(route.entry_m)
        n = route.side_in * np.array([-t[1], t[0]])
        return j + n * (route.leg_in - s), -n
    d = s - route.leg_in
    if d <= route.corridor_ft:
        m = route.entry_m + route.sign * d
        return model.xy_at(m), route.sign * model.tangent_at(m)
    j = model.xy_at(route.exit_m)
    t = model.tangent_at(route.exit_m)
    n = route.side_out * np.array([-t[1], t[0]])
    return j + n * (d - route.corridor_ft), n


# --------------------------------------------------------------------------
# kinematics and queues
# --------------------------------------------------------------------------


class Signal:
    def __init__(self, cycle: float, offset: float, green_fraction: float):
        self.cycle = cycle
        self.offset = offset
        self.green = green_fraction * cycle

    def is_green(self, t: float) -> bool:
        return cyclic_time(t - self.offset, self.cycle) < self.green

    def next_green(self, t: float) -> float:
        phase = cyclic_time(t - self.offset, self.cycle)
        return t if phase < self.green else t + (self.cycle - phase)


@dataclass
class Vehicle:
    index: int
    route: Route
    depart: float  # seconds after midnight at route distance 0
    t_ref: float = 0.0  # time the vehicle would pass s_ref at cruise speed
    s_ref: float = 0.0
    stops: list = field(default_factory=list)  # (stop line s, arrival, departure)

    def __post_init__(self):
        self.t_ref = self.depart


def check_capacity(sc: SynthScenario, routes: dict) -> None:
    load: dict = {}
    for d in sc.demand:
        for k, _ in routes[(d.origin, d.destination)].stops:
            key = (k, routes[(d.origin, d.destination)].sign)
            load[key] = load.get(key, 0.0) + d.rate_vph
    for (k, sign), vph in sorted(load.items()):
        s = sc.intersections[k]
        cap = s.green_fraction * 3600.0 / sc.saturation_headway_s
        if vph > cap:
            raise SynthError(
                f"{s.name} {'EB' if sign > 0 else 'WB'}: demand {vph:.0f} veh/h exceeds green capacity {cap:.0f} veh/h"
            )


def run_queues(vehicles: list, sc: SynthScenario, offsets: list) -> None:
    """Point-queue stop decisions at each stop line, in travel order."""
    v = sc.speed_ftps
    b, a_acc, h = sc.decel_ftps2, sc.accel_ftps2, sc.saturation_headway_s
    signals = [Signal(s.cycle_s, off, s.green_fraction) for s, off in zip(sc.intersections, offsets)]
    n = len(signals)
    for sign in (1, -1):
        order = range(n) if sign > 0 else range(n - 1, -1, -1)
        for k in order:
            arrivals = []
            for veh in vehicles:
                if veh.route.sign != sign:
                    continue
                for kk, s_line in veh.route.stops:
                    if kk == k:
                        arrivals.append((veh.t_ref + (s_line - veh.s_ref) / v, veh.index, veh, s_line))
            arrivals.sort(key=lambda r: (r[0], r[1]))
            sig = signals[k]
            clear = -math.inf
            for arr, _, veh, s_line in arrivals:
                if sig.is_green(arr) and arr >= clear:
                    continue
                dep = sig.next_green(max(arr + v / (2 * b), clear))
                clear = dep + h
                veh.stops.append((s_line, arr, dep))
                veh.t_ref = dep + v / (2 * a_acc)
                veh.s_ref = s_line


class Motion:
    """Piecewise constant-acceleration motion along the route."""

    def __init__(self, veh: Vehicle, sc: SynthScenario):
        v, b, a = sc.speed_ftps, sc.decel_ftps2, sc.accel_ftps2
        phases = []  # (t0, s0, v0, acc)
        t, s = veh.depart, 0.0
        for s_line, arr, dep in veh.stops:
            t_ds = arr - v / (2 * b)
            phases.append((t, s, v, 0.0))
            phases.append((t_ds, s_line - v * v / (2 * b), v, -b))
            t_stop = t_ds + v / b
            if dep > t_stop:
                phases.append((t_stop, s_line, 0.0, 0.0))
            phases.append((dep, s_line, 0.0, a))
            t, s = dep + v / a, s_line + v * v / (2 * a)
        phases.append((t, s, v, 0.0))
        self.phases = phases
        self.starts = [p[0] for p in phases]
        self.speed = v
        self.length = veh.route.length
        self.end = self.time_at(self.length)

    def state(self, t: float):
        i = max(int(np.searchsorted(self.starts, t, side="right")) - 1, 0)
        t0, s0, v0, acc = self.phases[i]
        dt = t - t0
        return s0 + v0 * dt + 0.5 * acc * dt * dt, v0 + acc * dt

    def time_at(self, s: float) -> float:
        # last phase starting at or before s; positions never decrease
        i = max(j for j, p in enumerate(self.phases) if p[1] <= s or j == 0)
        t0, s0, v0, acc = self.phases[i]
        ds = s - s0
        if acc == 0.0:
            return t0 + ds / v0
        if v0 == 0.0:
            return t0 + math.sqrt(2 * ds / acc)
        return t0 + (-v0 + math.sqrt(max(v0 * v0 + 2 * acc * ds, 0.0))) / acc


# --------------------------------------------------------------------------
# generation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LedgerRow:
    vehicle_id: str
    journey_id: str
    emitted: bool
    origin: str
    destination: str
    direction: str
    start: float
    end: float
    travel_time_s: float
    distance_ft: float
    delay_s: float
    stops: int


@dataclass(eq=False)
class SynthResult:
    scenario: SynthScenario
    model: CorridorModel
    waypoints: list
    ledger: list

    @property
    def emitted(self) -> list:
        return [r for r in self.ledger if r.emitted]


def _day_epoch(day: str) -> float:
    d = date.fromisoformat(day)
    return datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp()


def _arrivals(sc: SynthScenario) -> list:
    rng = np.random.default_rng([sc.seed, 0])
    out = []
    span = sc.demand_end - sc.demand_start
    for j, d in enumerate(sc.demand):
        if d.rate_vph <= 0 or span <= 0:
            continue
        lam = d.rate_vph / 3600.0
        t = sc.demand_start
        while True:
            t += rng.exponential(1.0 / lam)
            if t >= sc.demand_end:
                break
            out.append((t, j, d.origin, d.destination))
    for j, v in enumerate(sc.vehicles):
        out.append((v.depart, len(sc.demand) + j, v.origin, v.destination))
    out.sort(key=lambda r: (r[0], r[1]))
    return out


def _emit(veh: Vehicle, motion: Motion, sc: SynthScenario, model: CorridorModel, journey_id: str,
          epoch0: float) -> list:
    rng = np.random.default_rng([sc.seed, 2, veh.index])
    t_step = sc.waypoint_interval_s
    t = veh.depart + rng.uniform(0.0, t_step)
    out = []
    while t <= motion.end:
        s, spd = motion.state(t)
        xy, heading = route_xy(veh.route, min(s, veh.route.length), model)
        if sc.lateral_noise_ft > 0:
            xy = xy + np.array([-heading[1], heading[0]]) * rng.normal(0.0, sc.lateral_noise_ft)
        mph = max(spd, 0.0) / FTPS_PER_MPH
        if sc.speed_noise_mph > 0:
            mph = max(mph + rng.normal(0.0, sc.speed_noise_mph), 0.0)
        lat, lon = model.frame.to_latlon(xy[0], xy[1])
        out.append(Waypoint(journey_id, round(epoch0 + t, 3), round(float(lat), 7), round(float(lon), 7),
                            round(mph, 2)))
        t += t_step
    return out


def generate(sc: SynthScenario) -> SynthResult:
    model = build_corridor(sc)
    routes = {}
    pairs = [(d.origin, d.destination) for d in sc.demand] + [(v.origin, v.destination) for v in sc.vehicles]
    for p in pairs:
        if p not in routes:
            routes[p] = make_route(p[0], p[1], sc, model)
    check_capacity(sc, routes)

    vehicles = [Vehicle(i, routes[(o, d)], t) for i, (t, _, o, d) in enumerate(_arrivals(sc))]
    run_queues(vehicles, sc, sc.offsets())

    n = len(vehicles)
    n_cv = int(math.floor(n * sc.penetration + 1e-9))
    pick = np.random.default_rng([sc.seed, 1]).choice(n, size=n_cv, replace=False) if n_cv else []
    chosen = set(int(i) for i in pick)

    epoch0 = _day_epoch(sc.day)
    v = sc.speed_ftps
    ledger, waypoints = [], []
    for veh in vehicles:
        motion = Motion(veh, sc)
        r = veh.route
        emitted = veh.index in chosen
        jid = f"J{veh.index:06d}" if emitted else ""
        travel = motion.end - veh.depart
        ledger.append(LedgerRow(
            f"V{veh.index:06d}", jid, emitted, r.origin, r.destination,
            model.direction_labels[0 if r.sign > 0 else 1],
            epoch0 + veh.depart, epoch0 + motion.end, travel, r.corridor_ft,
            travel - r.corridor_ft / v, len(veh.stops),
        ))
        if emitted:
            waypoints.extend(_emit(veh, motion, sc, model, jid, epoch0))
    return SynthResult(sc, model, waypoints, ledger)


def write_ledger(rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    for r in rows:
        w.writerow([
            r.vehicle_id, r.journey_id, int(r.emitted), r.origin, r.destination, r.direction,
            repr(r.start), repr(r.end), repr(r.travel_time_s), repr(r.distance_ft), repr(r.delay_s), r.stops,
        ])


def read_ledger(stream) -> list:
    rows = []
    for d in csv.DictReader(stream):
        rows.append(LedgerRow(
            d["vehicle_id"], d["journey_id"], d["emitted"] == "1", d["origin"], d["destination"],
            d["direction"], float(d["start"]), float(d["end"]), float(d["travel_time_s"]),
            float(d["distance_ft"]), float(d["delay_s"]), int(d["stops"]),
        ))
    return rows


def write_outputs(result: SynthResult, out_dir) -> dict:
    """waypoints.csv, ledger.csv and corridor.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"waypoints": out / "waypoints.csv", "ledger": out / "ledger.csv", "corridor": out / "corridor.json"}
    with open(paths["waypoints"], "w", newline="", encoding="utf-8") as fh:
        write_waypoints(result.waypoints, fh)
    with open(paths["ledger"], "w", newline="", encoding="utf-8") as fh:
        write_ledger(result.ledger, fh)
    dump_corridor(result.model, paths["corridor"])
    return paths
