import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corridor_progression import CorridorError
from corridor_progression.corridor import (
    CorridorModel, Geofence, LocalFrame, PlanEntry, TimingPlan, corridor_to_dict, linear_reference,
    locate_geofence, parse_corridor, parse_tod, plan_for,
)
from conftest import ORIGIN, weekday_plan, local_to_latlon, straight_model
from oracles import brute_milepost, winding_number


def three_segment_model():
    f = LocalFrame(*ORIGIN)
    pts = [(0.0, 0.0), (1200.0, 0.0), (2000.0, 500.0), (3200.0, 450.0)]
    return CorridorModel(local_to_latlon(f, pts), 45.0)


def test_vertex_projects_to_cumulative_distance():
    m = three_segment_model()
    for k, v in enumerate(m.vertices):
        mp, off = linear_reference(v, m)
        assert mp == pytest.approx(m._cum[k], abs=1e-6)
        assert off == pytest.approx(0.0, abs=1e-6)


def test_midpoint_of_straight_corridor():
    m = straight_model(4000.0)
    lat = (m.vertices[0][0] + m.vertices[1][0]) / 2
    lon = (m.vertices[0][1] + m.vertices[1][1]) / 2
    mp, off = linear_reference((lat, lon), m)
    assert mp == pytest.approx(m.length_ft / 2, abs=1e-6)
    assert off == pytest.approx(0.0, abs=1e-6)


def haversine_ft(a, b):
    r = 6371008.8 / 0.3048
    la1, lo1, la2, lo2 = map(math.radians, (*a, *b))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * r * math.asin(math.sqrt(h))


def test_length_is_sum_of_segments():
    m = three_segment_model()
    great_circle = sum(haversine_ft(a, b) for a, b in zip(m.vertices, m.vertices[1:]))
    # the local planar frame is accurate to well under a foot per mile here
    assert m.length_ft == pytest.approx(great_circle, rel=2e-4)
    assert m.length_ft == pytest.approx(float(np.sum(m._seg_len)), rel=1e-12)


def test_projection_matches_dense_brute_force():
    m = three_segment_model()
    rng = np.random.default_rng(5)
    xy = [tuple(p) for p in m._xy]
    px = rng.uniform(-200, 3400, 500)
    py = rng.uniform(-300, 800, 500)
    lats, lons = m.frame.to_latlon(px, py)
    mp, off = m.project(lats, lons)
    for i in range(500):
        bm, bd = brute_milepost(px[i], py[i], xy)
        # equidistant segments make the milepost ambiguous; the offset never is
        assert off[i] == pytest.approx(bd, abs=1.0)
        if abs(mp[i] - bm) > 1.0:
            # only acceptable when two far-apart candidates are equally near
            cand = m.project(*m.frame.to_latlon(*m.xy_at(bm)))[0][0]
            assert abs(cand - bm) < 1.0
            x, y = m.xy_at(mp[i])
            assert math.hypot(px[i] - x, py[i] - y) == pytest.approx(bd, abs=1.0)


def test_projection_idempotent_and_monotone():
    m = three_segment_model()
    rng = np.random.default_rng(2)
    for mp in rng.uniform(0, m.length_ft, 200):
        lat, lon = m.point_at(mp)
        got, off = linear_reference((lat, lon), m)
        again, _ = linear_reference(m.point_at(got), m)
        assert again == pytest.approx(got, abs=1e-6)
    s = straight_model(6000.0)
    mps = [linear_reference(s.point_at(x), s)[0] for x in np.linspace(0, 6000, 50)]
    assert all(b > a for a, b in zip(mps, mps[1:]))


def test_tie_goes_to_smaller_milepost():
    # U-shaped corridor; the query sits exactly halfway between the two parallel
    # arms (dyadic latitudes keep the two distances bit-identical)
    lo, hi = 42.5, 42.5 + 2 ** -7
    m = CorridorModel(((lo, -90.72), (lo, -90.67), (hi, -90.67), (hi, -90.72)), 45.0)
    p = ((lo + hi) / 2, -90.695)
    mp, off = linear_reference(p, m)
    d1 = m.project([lo], [-90.695])[0][0]
    assert mp == pytest.approx(d1, abs=1e-6)
    assert mp < m.length_ft / 2


def test_plan_lookup_weekday():
    plan = weekday_plan()
    e = plan_for(54000, plan)
    assert e.name == "afternoon" and e.cycle_length_s == 130
    assert plan_for(84600, plan) is None
    assert plan_for(parse_tod("14:30"), plan).name == "afternoon"
    assert plan_for(parse_tod("18:00"), plan).name == "evening"
    assert plan_for(parse_tod("22:00"), plan) is None


def test_plan_rejects_overlap_and_bad_cycle():
    with pytest.raises(CorridorError):
        TimingPlan((PlanEntry("a", 0, 100, 90), PlanEntry("b", 50, 200, 90)))
    with pytest.raises(CorridorError):
        TimingPlan((PlanEntry("a", 0, 100, 0),))
    with pytest.raises(CorridorError):
        TimingPlan((PlanEntry("a", 100, 100, 60),))


def test_geofence_basic_and_boundary():
    sq = ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0))
    g = Geofence("A", sq)
    assert locate_geofence((0.5, 0.5), [g]) == "A"
    assert locate_geofence((2.0, 2.0), [g]) is None
    assert g.contains((0.0, 0.5)) and g.contains((1.0, 1.0))


def test_geofence_list_order_breaks_ties():
    sq = ((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0))
    assert locate_geofence((0.5, 0.5), [Geofence("A", sq), Geofence("B", sq)]) == "A"


def test_self_intersecting_fence_rejected():
    with pytest.raises(CorridorError):
        Geofence("bow", ((0, 0), (1, 1), (1, 0), (0, 1)))
    with pytest.raises(CorridorError):
        Geofence("two", ((0, 0), (1, 1)))


def test_containment_matches_winding_number():
    rng = np.random.default_rng(9)
    # a star-shaped (nonconvex) simple polygon
    ang = np.linspace(0, 2 * np.pi, 14, endpoint=False)
    r = np.where(np.arange(14) % 2 == 0, 1.0, 0.45)
    poly = tuple(zip(42.5 + 0.01 * r * np.sin(ang), -90.7 + 0.01 * r * np.cos(ang)))
    g = Geofence("star", poly)
    pts = np.column_stack([42.5 + rng.uniform(-0.012, 0.012, 1000), -90.7 + rng.uniform(-0.012, 0.012, 1000)])
    for p in pts:
        assert g.contains(tuple(p)) == winding_number(tuple(p), poly)


@settings(max_examples=60, deadline=None)
@given(st.floats(-500, 5500), st.floats(-400, 400))
def test_projection_bounds(x, y):
    m = straight_model(5000.0)
    lat, lon = m.frame.to_latlon(x, y)
    mp, off = linear_reference((float(lat), float(lon)), m)
    assert 0.0 <= mp <= m.length_ft
    assert off >= 0.0


def _doc():
    m = straight_model(5000.0)
    return corridor_to_dict(m)


def test_corridor_file_round_trip():
    m = straight_model(5000.0)
    m2 = parse_corridor(json.dumps(corridor_to_dict(m), indent=2))
    assert m2.length_ft == pytest.approx(m.length_ft)
    assert m2.fence_labels == m.fence_labels
    assert [e.cycle_length_s for e in m2.timing_plan] == [e.cycle_length_s for e in m.timing_plan]
    assert m2.end_to_end == m.end_to_end


def test_corridor_file_line_diagnostics():
    doc = _doc()
    doc["speed_limit_mph"] = -5
    doc["intersections"] = [{"name": "a", "milepost_ft": 4000}, {"name": "b", "milepost_ft": 100}]
    text = json.dumps(doc, indent=2)
    with pytest.raises(CorridorError) as ei:
        parse_corridor(text)
    diags = ei.value.diagnostics
    lines = text.splitlines()
    speed_line = next(i for i, l in enumerate(lines, 1) if '"speed_limit_mph"' in l)
    assert any(d.startswith(f"line {speed_line}: speed_limit_mph") for d in diags)


def test_corridor_file_rejects_invariant_violations():
    for mutate in (
        lambda d: d.pop("timing_plan"),
        lambda d: d.update(vertices=[[42.5, -90.7]]),
        lambda d: d.update(length_ft=d["length_ft"] * 1.01),
        lambda d: d["intersections"].append({"name": "x", "milepost_ft": 1e9}),
        lambda d: d["geofences"].append(dict(d["geofences"][0])),
        lambda d: d["timing_plan"].append({"name": "late", "start": "17:00", "end": "19:00", "cycle_length_s": 90}),
        lambda d: d.update(end_to_end=[["W", "nowhere"]]),
    ):
        doc = _doc()
        mutate(doc)
        with pytest.raises(CorridorError) as ei:
            parse_corridor(json.dumps(doc, indent=2))
        assert ei.value.diagnostics


def test_intersection_by_latlon():
    doc = _doc()
    lat, lon = straight_model(5000.0).point_at(1234.0)
    doc["intersections"] = [{"name": "p", "lat": lat, "lon": lon}]
    m = parse_corridor(json.dumps(doc))
    assert m.intersections[0].milepost_ft == pytest.approx(1234.0, abs=1e-6)


def test_invalid_json_reports_line():
    with pytest.raises(CorridorError) as ei:
        parse_corridor('{\n "vertices": [,\n}')
    assert ei.value.diagnostics[0].startswith("line 2")


def test_time_of_day_zone():
    m = straight_model()
    assert m.time_of_day(1633305600 + 54000.5) == 54000.5
    doc = corridor_to_dict(m)
    doc["timezone"] = "America/Chicago"
    mc = parse_corridor(json.dumps(doc))
    # 2021-10-04 20:00 UTC is 15:00 CDT
    assert mc.time_of_day(1633305600 + 72000) == 54000.0
