import io
import random

import numpy as np
import pytest

from corridor_progression import SchemaError
from corridor_progression.ingest import (
    Journey, Waypoint, assemble_journeys, clean, clip_to_geofences, filter_journeys, parse_waypoints,
    write_waypoints,
)
from conftest import drive, straight_model

HEADER = "journey_id,timestamp,lat,lon,speed_mph\n"


def parse_text(text, diags=None):
    return list(parse_waypoints(io.BytesIO(text.encode()), diags))


def test_parse_well_formed():
    diags = []
    wps = parse_text(HEADER + "a,1,42.5,-90.7,30\na,4,42.5,-90.7,31\nb,2,42.5,-90.7,0\n", diags)
    assert len(wps) == 3 and diags == []
    assert wps[0] == Waypoint("a", 1.0, 42.5, -90.7, 30.0)


def test_parse_bad_rows_are_reported_not_fatal():
    diags = []
    text = HEADER + "a,1,42.5,-90.7,30\na,4,north,-90.7,31\na,7,42.5\nb,2,42.5,-90.7,-3\nb,5,42.5,-90.7,3\n"
    wps = parse_text(text, diags)
    assert [w.timestamp for w in wps] == [1.0, 5.0]
    assert [d.line for d in diags] == [3, 4, 5]


def test_parse_bad_header_is_fatal():
    with pytest.raises(SchemaError):
        parse_text("id,time,lat,lon\n1,2,3,4\n")


def test_parse_column_map():
    text = "trip,ts,latitude,longitude,spd\nx,1,42.5,-90.7,10\n"
    cmap = {"journey_id": "trip", "timestamp": "ts", "lat": "latitude", "lon": "longitude", "speed_mph": "spd"}
    wps = list(parse_waypoints(io.StringIO(text), None, cmap))
    assert wps == [Waypoint("x", 1.0, 42.5, -90.7, 10.0)]


def test_round_trip_100k_rows_bitwise():
    rng = np.random.default_rng(1)
    n = 100_000
    wps = [
        Waypoint(f"j{int(i)}", float(t), float(la), float(lo), float(v))
        for i, t, la, lo, v in zip(
            rng.integers(0, 5000, n), rng.uniform(1.6e9, 1.7e9, n), rng.uniform(-90, 90, n),
            rng.uniform(-180, 180, n), rng.uniform(0, 90, n),
        )
    ]
    buf = io.StringIO()
    write_waypoints(wps, buf)
    back = list(parse_waypoints(io.BytesIO(buf.getvalue().encode())))
    assert back == wps


def test_assemble_sorts_and_dedups():
    wps = [
        Waypoint("b", 3.0, 0, 0, 1), Waypoint("a", 2.0, 0, 0, 1), Waypoint("a", 1.0, 0, 0, 1),
        Waypoint("b", 1.0, 0, 0, 1), Waypoint("a", 2.0, 9, 9, 5),
    ]
    js = assemble_journeys(wps)
    assert [j.journey_id for j in js] == ["a", "b"]
    a = js[0].waypoints
    assert [w.timestamp for w in a] == [1.0, 2.0]
    assert a[1].lat == 0  # first occurrence kept


def _corpus(model, seed=0):
    """100 journeys: 7 too short, 5 with a gap over 10 s, 88 good."""
    rng = random.Random(seed)
    journeys = []
    for k in range(100):
        j = drive(model, f"J{k:03d}", 1633359600.0 + 300 * k, 0.0, model.length_ft)
        wps = list(j.waypoints)
        if k < 7:
            wps = wps[: rng.randint(1, 4)]
        elif k < 12:
            i = rng.randint(2, len(wps) - 3)
            shift = rng.choice([10.5, 11.0, 30.0])
            wps = wps[:i] + [Waypoint(w.journey_id, w.timestamp + shift - 3.0, w.lat, w.lon, w.speed_mph)
                             for w in wps[i:]]
        journeys.append(Journey(j.journey_id, tuple(wps)))
    return journeys


def test_filter_rules():
    m = straight_model()
    j = drive(m, "x", 0.0, 0.0, 1000.0)
    six = Journey("x", j.waypoints[:6])
    assert filter_journeys([six])[1]["too_few_points"] == 0
    assert filter_journeys([Journey("x", j.waypoints[:4])])[1]["too_few_points"] == 1
    gap = Journey("x", j.waypoints[:3] + tuple(
        Waypoint("x", w.timestamp + 8.0, w.lat, w.lon, w.speed_mph) for w in j.waypoints[3:6]))
    assert filter_journeys([gap])[1]["gap"] == 1
    exact = Journey("x", j.waypoints[:3] + tuple(
        Waypoint("x", w.timestamp + 7.0, w.lat, w.lon, w.speed_mph) for w in j.waypoints[3:6]))
    assert filter_journeys([exact])[0] == [exact]


def test_filter_tally_and_identity():
    m = straight_model()
    js = _corpus(m)
    kept, tally = filter_journeys(js)
    assert len(kept) == 88 and tally == {"too_few_points": 7, "gap": 5}
    assert len(kept) + sum(tally.values()) == len(js)
    kept1, _ = filter_journeys(js, min_points=1, max_gap_s=float("inf"))
    assert kept1 == js


def test_filter_order_independent():
    m = straight_model()
    js = _corpus(m, 3)
    wps = [w for j in js for w in j.waypoints]
    shuffled = wps[:]
    random.Random(4).shuffle(shuffled)
    a = filter_journeys(assemble_journeys(wps))
    b = filter_journeys(assemble_journeys(shuffled))
    assert a == b


def test_clip_identity_parking_lot_and_reentry():
    m = straight_model()
    j = drive(m, "x", 0.0, 0.0, m.length_ft)
    assert clip_to_geofences(j, m) == (j, 1)
    lot = drive(m, "p", 0.0, 1000.0, 3000.0, lateral=2000.0)
    assert clip_to_geofences(lot, m) == (None, 0)
    on1 = drive(m, "r", 0.0, 0.0, 1500.0).waypoints
    off = drive(m, "r", 100.0, 1500.0, 2500.0, lateral=900.0).waypoints
    on2 = drive(m, "r", 200.0, 2500.0, 4000.0).waypoints
    clipped, runs = clip_to_geofences(Journey("r", on1 + off + on2), m)
    assert runs == 2 and clipped.waypoints == on1


def test_clean_tally_adds_up():
    m = straight_model()
    js = _corpus(m)
    lot = drive(m, "zz", 0.0, 1000.0, 3000.0, lateral=2000.0)
    wps = [w for j in js + [lot] for w in j.waypoints]
    res = clean(wps, m)
    t = res.tally
    assert t["input_journeys"] == 101 and t["off_corridor"] == 1
    assert t["kept"] == 88 and t["too_few_points"] == 7 and t["gap"] == 5
