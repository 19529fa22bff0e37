import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from junction_atlas import telematics as tm
from junction_atlas.geo import haversine_m
from junction_atlas.osm import Intersection

M_PER_DEG = 6_371_000.0 * math.pi / 180.0

HEADER = "device_id,timestamp,lat,lon,speed_kmh,ha_count,hd_count"


def _inter(iid, lat, lon):
    return Intersection(id=iid, lat=lat, lon=lon, simplified_class="X",
                        signalized=False, leg_count=4, merged_node_ids={iid})


def _rec(lat, lon, speed=30.0, ha=0, hd=0):
    return tm.TelematicsRecord("d1", "2018-01-01T00:00:00Z", lat, lon, speed, ha, hd)


# ------------------------------------------------------------------- ingest

def test_ingest_clean_rows_all_kept():
    rows = [HEADER] + [
        f"dev{i},2018-01-01T10:{i:02d}:00Z,-33.8{i:02d},151.1,{20+i},1,0"
        for i in range(100)
    ]
    records, report = tm.ingest_records("\n".join(rows))
    assert len(records) == 100
    assert report.kept == 100
    assert report.dropped_unparseable == 0


def test_ingest_drops_invalid_latitude():
    text = f"{HEADER}\nd1,2018-01-01T00:00:00Z,95.0,151.0,30.0,0,0\n"
    records, report = tm.ingest_records(text)
    assert records == []
    assert report.dropped_bad_coords == 1


def test_ingest_drops_stationary_row():
    text = f"{HEADER}\nd1,2018-01-01T00:00:00Z,-33.8,151.0,0.0,0,0\n"
    records, report = tm.ingest_records(text)
    assert records == []
    assert report.dropped_stationary == 1
    # zero speed but nonzero counts is kept (vehicle braked to a stop)
    text2 = f"{HEADER}\nd1,2018-01-01T00:00:00Z,-33.8,151.0,0.0,0,2\n"
    records2, _ = tm.ingest_records(text2)
    assert len(records2) == 1


def test_ingest_skips_unparseable_with_warning():
    text = (f"{HEADER}\n"
            "d1,2018-01-01T00:00:00Z,-33.8,151.0,30.0,1,0\n"
            "d2,2018-01-01T00:00:00Z,not_a_number,151.0,30.0,1,0\n")
    records, report = tm.ingest_records(text)
    assert len(records) == 1
    assert report.dropped_unparseable == 1
    assert any("line 3" in w for w in report.warnings)


def test_ingest_majority_unparseable_hard_error():
    bad = [f"d{i},t,xx,yy,zz,1,0" for i in range(6)]
    text = "\n".join([HEADER] + bad + ["d9,2018-01-01T00:00:00Z,-33.8,151.0,30.0,1,0"])
    with pytest.raises(tm.IngestError):
        tm.ingest_records(text)


def test_ingest_rejects_wrong_header():
    with pytest.raises(tm.IngestError):
        tm.ingest_records("a,b,c\n1,2,3\n")


# ------------------------------------------------------------------ matching

def test_match_nearest_within_radius():
    a = _inter(1, 0.0, 0.0)
    b = _inter(2, 0.0, 200.0 / M_PER_DEG)
    rec = _rec(5.0 / M_PER_DEG, 0.0)
    out = tm.match_records([rec], [a, b], radius_m=30.0)
    assert out[1] == [rec] and out[2] == []


def test_match_nothing_within_radius():
    a = _inter(1, 0.0, 0.0)
    rec = _rec(50.0 / M_PER_DEG, 0.0)
    out = tm.match_records([rec], [a], radius_m=30.0)
    assert out[1] == []


def test_match_rejects_bad_radius():
    with pytest.raises(ValueError):
        tm.match_records([], [], radius_m=0.0)


def test_match_equals_brute_force_on_random_fixture():
    rng = np.random.default_rng(0)
    lat0, lon0 = -33.8, 151.1
    inters = []
    for i in range(100):
        inters.append(_inter(
            i + 1,
            lat0 + rng.uniform(0, 1500) / M_PER_DEG,
            lon0 + rng.uniform(0, 1500) / (M_PER_DEG * math.cos(math.radians(lat0))),
        ))
    records = []
    for _ in range(1000):
        records.append(_rec(
            lat0 + rng.uniform(-50, 1550) / M_PER_DEG,
            lon0 + rng.uniform(-50, 1550) / (M_PER_DEG * math.cos(math.radians(lat0))),
        ))
    got = tm.match_records(records, inters, radius_m=30.0)

    # oracle: all-pairs nearest assignment with the same tie rule
    expected = {it.id: [] for it in inters}
    for rec in records:
        best = None
        for it in inters:
            d = haversine_m(rec.lat, rec.lon, it.lat, it.lon)
            if d <= 30.0 and (best is None or (d, it.id) < best):
                best = (d, it.id)
        if best is not None:
            expected[best[1]].append(rec)
    assert got == expected
    assert sum(len(v) for v in got.values()) > 0


# -------------------------------------------------------------------- stats

def test_stats_event_frequency_arithmetic():
    recs = [_rec(0, 0, ha=2), _rec(0, 0, ha=3), _rec(0, 0, ha=1)]
    stats = tm.compute_stats(7, recs)
    assert stats.volume == 3
    assert stats.ha_freq == pytest.approx(6.0 / 90.0)
    assert stats.hd_freq == 0.0
    assert not stats.qualified


def test_stats_all_zero_counts():
    stats = tm.compute_stats(1, [_rec(0, 0) for _ in range(30)])
    assert stats.ha_freq == 0.0 and stats.hd_freq == 0.0
    assert stats.qualified


def test_qualification_boundary_24_25():
    assert not tm.compute_stats(1, [_rec(0, 0)] * 24).qualified
    assert tm.compute_stats(1, [_rec(0, 0)] * 25).qualified


def test_stats_empty_records_flagged():
    stats = tm.compute_stats(1, [])
    assert stats.volume == 0
    assert stats.mean_speed is None and stats.ha_freq is None
    assert not stats.qualified


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=40))
def test_frequency_integer_recovery(counts):
    # freq * window recovers the integer count exactly after rounding (the
    # bare float product can be one ulp off, e.g. (21/150)*150)
    recs = [_rec(0, 0, ha=a, hd=b) for a, b in counts]
    stats = tm.compute_stats(1, recs)
    total_window = 30.0 * len(recs)
    ha_sum = sum(a for a, _ in counts)
    hd_sum = sum(b for _, b in counts)
    assert round(stats.ha_freq * total_window) == ha_sum
    assert round(stats.hd_freq * total_window) == hd_sum
    assert abs(stats.ha_freq * total_window - ha_sum) <= 1e-9 * max(ha_sum, 1)
    assert abs(stats.hd_freq * total_window - hd_sum) <= 1e-9 * max(hd_sum, 1)


# ------------------------------------------------------------------ regions

def _stats(iid, volume=30, speed=30.0, ha=0.02, hd=1e-4):
    return tm.IntersectionStats(iid, volume, speed, ha, hd, volume >= 25)


def test_region_single_member_equals_that_member():
    s = _stats(1, speed=42.0, ha=0.01, hd=2e-4)
    region = tm.region_stats("A", [s])
    assert region.count == 1
    assert region.mean_speed == 42.0
    assert region.mean_ha_freq == 0.01
    assert region.mean_hd_freq == 2e-4


def test_region_excludes_unqualified_members():
    members = [_stats(1, speed=10.0), _stats(2, volume=5, speed=99.0)]
    region = tm.region_stats("B", members)
    assert region.count == 1
    assert region.mean_speed == 10.0


def test_region_empty_flagged():
    region = tm.region_stats("C", [_stats(1, volume=3)])
    assert region.degenerate and region.count == 0


def test_region_weighted_mean_identity():
    rng = np.random.default_rng(1)
    members = [_stats(i, speed=float(rng.uniform(10, 60))) for i in range(40)]
    half_a = tm.region_stats("a", members[:25])
    half_b = tm.region_stats("b", members[25:])
    full = tm.region_stats("all", members)
    recombined = (half_a.mean_speed * half_a.count + half_b.mean_speed * half_b.count) / 40
    assert recombined == pytest.approx(full.mean_speed, rel=1e-12)


def test_region_synthetic_means_within_three_standard_errors():
    rng = np.random.default_rng(2)
    true_speed, sd, n = 35.0, 5.0, 200
    members = [
        _stats(i, speed=float(rng.normal(true_speed, sd))) for i in range(n)
    ]
    region = tm.region_stats("R", members)
    se = sd / math.sqrt(n)
    assert abs(region.mean_speed - true_speed) <= 3 * se


# ----------------------------------------------------------------- outliers

def test_outlier_ratio_gate_and_volume_gate():
    # 40 background members keep the region mean near 1e-4; one heavy hitter
    # qualifies, an equally heavy one fails the 175-observation gate
    members = [_stats(i, volume=200, hd=1.0e-4) for i in range(40)]
    members.append(_stats(100, volume=200, hd=2.0e-3))
    members.append(_stats(101, volume=100, hd=2.0e-3))
    ids, degenerate = tm.find_outliers(members, factor=8.0)
    assert ids == [100]
    assert not degenerate
    mean_hd = sum(m.hd_freq for m in members) / len(members)
    assert 2.0e-3 / mean_hd >= 8.0


def test_outlier_ratio_five_excluded_at_factor_eight():
    members = [_stats(1, volume=200, hd=1e-4), _stats(2, volume=200, hd=1e-4),
               _stats(3, volume=200, hd=4.9e-4)]
    ids, _ = tm.find_outliers(members, factor=8.0)
    assert ids == []


def test_outlier_zero_mean_degenerate():
    members = [_stats(1, volume=200, hd=0.0), _stats(2, volume=200, hd=0.0)]
    with pytest.warns(UserWarning, match="zero"):
        ids, degenerate = tm.find_outliers(members, factor=8.0)
    assert degenerate and ids == []


def test_outlier_planted_set_recovered_exactly():
    rng = np.random.default_rng(3)
    members = []
    planted = []
    base = 1e-4
    for i in range(60):
        hd = base * rng.uniform(0.5, 2.0)
        volume = int(rng.integers(25, 400))
        members.append(_stats(i, volume=volume, hd=hd))
    mean_hd = sum(m.hd_freq for m in members) / len(members)
    for i in (100, 101, 102):
        members.append(_stats(i, volume=300, hd=mean_hd * 30.0))
        planted.append(i)
    ids, _ = tm.find_outliers(members, factor=8.0)
    assert sorted(ids) == planted


def test_outliers_need_two_qualified_members():
    with pytest.raises(ValueError):
        tm.find_outliers([_stats(1)], factor=8.0)


# ---------------------------------------------------------------- generator

def test_generator_zero_rate_profile_all_zero_counts():
    profile = tm.BehaviorProfile(
        ha_rate={"X": 0.0}, hd_rate={"X": 0.0},
        speed_mean={"X": 30.0}, speed_sd={"X": 2.0},
    )
    inters = [_inter(1, -33.8, 151.1)]
    text, truth = tm.generate_synthetic_telematics(inters, {1: "X"}, profile, seed=0)
    records, _ = tm.ingest_records(text)
    assert all(r.ha_count == 0 and r.hd_count == 0 for r in records)
    assert truth[1].ha_freq == 0.0


def test_generator_rate_recovered_within_three_sigma():
    lam = 0.05  # events per second
    profile = tm.BehaviorProfile(
        ha_rate={"X": lam}, hd_rate={"X": 0.0},
        speed_mean={"X": 30.0}, speed_sd={"X": 2.0},
        records_low=300, records_high=300,
    )
    inters = [_inter(1, -33.8, 151.1)]
    _, truth = tm.generate_synthetic_telematics(inters, {1: "X"}, profile, seed=1)
    total_t = 300 * 30.0
    tolerance = 3.0 * math.sqrt(lam / total_t)
    assert abs(truth[1].ha_freq - lam) <= tolerance


def test_generator_deterministic():
    profile = tm.BehaviorProfile.default()
    inters = [_inter(1, -33.8, 151.1), _inter(2, -33.81, 151.12)]
    classes = {1: "X", 2: "T"}
    a, _ = tm.generate_synthetic_telematics(inters, classes, profile, seed=42)
    b, _ = tm.generate_synthetic_telematics(inters, classes, profile, seed=42)
    assert a == b


def test_generator_truth_matches_recomputed_stats():
    profile = tm.BehaviorProfile.default()
    inters = [_inter(1, -33.8, 151.1)]
    text, truth = tm.generate_synthetic_telematics(inters, {1: "X"}, profile, seed=7)
    records, _ = tm.ingest_records(text)
    matched = tm.match_records(records, inters, radius_m=30.0)
    stats = tm.compute_stats(1, matched[1])
    assert stats.volume == truth[1].volume
    assert stats.ha_freq == pytest.approx(truth[1].ha_freq, rel=1e-12)
    assert stats.hd_freq == pytest.approx(truth[1].hd_freq, rel=1e-12)
    assert stats.mean_speed == pytest.approx(truth[1].mean_speed, abs=0.01)
