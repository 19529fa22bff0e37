"""Telematics ingestion, spatial matching, and per-intersection statistics.

Records are 30-second aggregates of one vehicle's driving: position, point
speed, and counts of hard-acceleration / hard-deceleration threshold
exceedances within the window. Frequencies are events per second per
vehicle: total counts divided by total observed seconds.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geo import GridIndex

EXPECTED_COLUMNS = ["device_id", "timestamp", "lat", "lon", "speed_kmh",
                    "ha_count", "hd_count"]

QUALIFIED_MIN_OBSERVATIONS = 25
OUTLIER_MIN_OBSERVATIONS = 175
DEFAULT_WINDOW_S = 30.0


class IngestError(ValueError):
    pass


@dataclass
class TelematicsRecord:
    device_id: str
    timestamp: str
    lat: float
    lon: float
    speed_kmh: float
    ha_count: int
    hd_count: int
    window_s: float = DEFAULT_WINDOW_S


@dataclass
class IngestReport:
    kept: int = 0
    dropped_stationary: int = 0
    dropped_bad_coords: int = 0
    dropped_unparseable: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class IntersectionStats:
    intersection_id: int
    volume: int
    mean_speed: float | None
    ha_freq: float | None
    hd_freq: float | None
    qualified: bool


@dataclass
class RegionStats:
    label: str
    member_ids: list[int]
    count: int
    mean_speed: float | None
    mean_ha_freq: float | None
    mean_hd_freq: float | None
    degenerate: bool = False


def ingest_records(stream) -> tuple[list[TelematicsRecord], IngestReport]:
    """Parse delimited telematics rows; drop stationary and bad-coordinate rows.

    Stationary means zero speed with zero event counts. Rows that fail to
    parse are skipped with a line-numbered warning; if more than half of the
    data rows are unparseable the whole ingest fails.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes) else stream)
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != EXPECTED_COLUMNS:
        raise IngestError(
            f"header must be {','.join(EXPECTED_COLUMNS)}, got {reader.fieldnames}"
        )
    report = IngestReport()
    records: list[TelematicsRecord] = []
    total_rows = 0
    for lineno, row in enumerate(reader, start=2):
        total_rows += 1
        try:
            rec = TelematicsRecord(
                device_id=row["device_id"],
                timestamp=row["timestamp"],
                lat=float(row["lat"]),
                lon=float(row["lon"]),
                speed_kmh=float(row["speed_kmh"]),
                ha_count=int(row["ha_count"]),
                hd_count=int(row["hd_count"]),
            )
            if rec.speed_kmh < 0 or rec.ha_count < 0 or rec.hd_count < 0:
                raise ValueError("negative measurement")
        except (KeyError, TypeError, ValueError) as err:
            report.dropped_unparseable += 1
            report.warnings.append(f"line {lineno}: unparseable row ({err})")
            continue
        if not (-90.0 <= rec.lat <= 90.0 and -180.0 <= rec.lon <= 180.0):
            report.dropped_bad_coords += 1
            continue
        if rec.speed_kmh == 0.0 and rec.ha_count == 0 and rec.hd_count == 0:
            report.dropped_stationary += 1
            continue
        records.append(rec)
    if total_rows and report.dropped_unparseable > 0.5 * total_rows:
        raise IngestError(
            f"{report.dropped_unparseable} of {total_rows} rows unparseable"
        )
    report.kept = len(records)
    return records, report


def match_records(records: list[TelematicsRecord], intersections,
                  radius_m: float = 30.0) -> dict[int, list[TelematicsRecord]]:
    """Assign each record to the nearest intersection within radius_m.

    Uses a uniform grid index; equidistant ties break toward the lower
    intersection id. Unmatched records are left out.
    """
    if radius_m <= 0:
        raise ValueError("radius_m must be positive")
    out: dict[int, list[TelematicsRecord]] = {it.id: [] for it in intersections}
    if not intersections or not records:
        return out
    ordered = sorted(intersections, key=lambda it: it.id)
    lats = np.array([it.lat for it in ordered])
    lons = np.array([it.lon for it in ordered])
    index = GridIndex(lats, lons, radius_m)
    for rec in records:
        hit = index.nearest_within(rec.lat, rec.lon)
        if hit is not None:
            out[ordered[hit[0]].id].append(rec)
    return out


def compute_stats(intersection_id: int, records: list[TelematicsRecord]) -> IntersectionStats:
    """Aggregate one intersection's records into volume, speed, and event rates."""
    volume = len(records)
    if volume == 0:
        return IntersectionStats(intersection_id, 0, None, None, None, False)
    total_window = sum(r.window_s for r in records)
    return IntersectionStats(
        intersection_id=intersection_id,
        volume=volume,
        mean_speed=sum(r.speed_kmh for r in records) / volume,
        ha_freq=sum(r.ha_count for r in records) / total_window,
        hd_freq=sum(r.hd_count for r in records) / total_window,
        qualified=volume >= QUALIFIED_MIN_OBSERVATIONS,
    )


def region_stats(label: str, member_stats: list[IntersectionStats]) -> RegionStats:
    """Mean behavior over the qualified members of one region."""
    qualified = [s for s in member_stats if s.qualified]
    if not qualified:
        return RegionStats(label, [s.intersection_id for s in member_stats], 0,
                           None, None, None, degenerate=True)
    n = len(qualified)
    return RegionStats(
        label=label,
        member_ids=[s.intersection_id for s in qualified],
        count=n,
        mean_speed=sum(s.mean_speed for s in qualified) / n,
        mean_ha_freq=sum(s.ha_freq for s in qualified) / n,
        mean_hd_freq=sum(s.hd_freq for s in qualified) / n,
    )


def find_outliers(member_stats: list[IntersectionStats], factor: float = 8.0,
                  min_volume: int = OUTLIER_MIN_OBSERVATIONS):
    """Members whose HD frequency is at least ``factor`` times the region mean.

    Only well-observed members (volume >= min_volume) are eligible; results
    are sorted by descending ratio. A zero region mean degenerates to
    returning any member with nonzero HD frequency, flagged.
    """
    qualified = [s for s in member_stats if s.qualified]
    if len(qualified) < 2:
        raise ValueError("region needs at least 2 qualified members")
    mean_hd = sum(s.hd_freq for s in qualified) / len(qualified)
    flagged_degenerate = mean_hd == 0.0
    if flagged_degenerate:
        warnings.warn("region mean HD frequency is zero; returning nonzero members")
        hits = [(math.inf, s) for s in qualified
                if s.volume >= min_volume and s.hd_freq > 0]
    else:
        hits = []
        for s in qualified:
            if s.volume < min_volume:
                continue
            ratio = s.hd_freq / mean_hd
            if ratio >= factor:
                hits.append((ratio, s))
    hits.sort(key=lambda t: (-t[0], t[1].intersection_id))
    return [s.intersection_id for _, s in hits], flagged_degenerate


@dataclass
class BehaviorProfile:
    """Per-class event rates and speed distributions for the generator."""

    ha_rate: dict[str, float]       # events per second
    hd_rate: dict[str, float]
    speed_mean: dict[str, float]    # km/h
    speed_sd: dict[str, float]
    records_low: int = 20
    records_high: int = 60

    @staticmethod
    def default() -> "BehaviorProfile":
        return BehaviorProfile(
            ha_rate={"O": 0.030, "T": 0.016, "X": 0.043, "#": 0.024},
            hd_rate={"O": 1.4e-4, "T": 0.7e-4, "X": 1.2e-4, "#": 2.6e-4},
            speed_mean={"O": 25.0, "T": 40.0, "X": 30.0, "#": 20.0},
            speed_sd={"O": 4.0, "T": 8.0, "X": 6.0, "#": 5.0},
        )


def generate_synthetic_telematics(intersections, classes: dict[int, str],
                                  profile: BehaviorProfile, seed: int = 0,
                                  window_s: float = DEFAULT_WINDOW_S):
    """Deterministic synthetic record stream with per-intersection truth.

    Counts are Poisson draws from the profile rates (capped at one event per
    second of window); positions jitter a few meters around each
    intersection. Returns (csv text, truth) where truth maps intersection id
    to the exact stats of the emitted rows.
    """
    rng = np.random.default_rng(seed)
    m_per_deg = 6_371_000.0 * math.pi / 180.0
    rows = [",".join(EXPECTED_COLUMNS)]
    truth: dict[int, IntersectionStats] = {}
    cap = int(window_s)  # 1 Hz detection bounds counts by the window length
    for it in sorted(intersections, key=lambda i: i.id):
        cls = classes[it.id]
        n_rec = int(rng.integers(profile.records_low, profile.records_high + 1))
        sum_speed = sum_ha = sum_hd = 0
        for k in range(n_rec):
            speed = max(1.0, rng.normal(profile.speed_mean[cls], profile.speed_sd[cls]))
            ha = min(cap, int(rng.poisson(profile.ha_rate[cls] * window_s)))
            hd = min(cap, int(rng.poisson(profile.hd_rate[cls] * window_s)))
            dlat = rng.uniform(-8.0, 8.0) / m_per_deg
            dlon = rng.uniform(-8.0, 8.0) / (m_per_deg * math.cos(math.radians(it.lat)))
            minute = k % 60
            hour = 8 + (k // 60) % 12
            rows.append(
                f"dev{int(rng.integers(1000, 9999))},"
                f"2018-05-14T{hour:02d}:{minute:02d}:00Z,"
                f"{it.lat + dlat:.7f},{it.lon + dlon:.7f},"
                f"{speed:.2f},{ha},{hd}"
            )
            sum_speed += speed
            sum_ha += ha
            sum_hd += hd
        truth[it.id] = IntersectionStats(
            intersection_id=it.id,
            volume=n_rec,
            mean_speed=sum_speed / n_rec,
            ha_freq=sum_ha / (n_rec * window_s),
            hd_freq=sum_hd / (n_rec * window_s),
            qualified=n_rec >= QUALIFIED_MIN_OBSERVATIONS,
        )
    return "\n".join(rows) + "\n", truth
