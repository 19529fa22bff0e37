"""Read-only HTTP interface over pipeline artifacts.

Artifacts load once at startup into an immutable snapshot; every endpoint
is a pure view over it, so identical requests return identical bodies and
a strong ETag derived from the artifact content hash. Restart the service
to pick up a new pipeline run.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import telematics
from . import stats as jstats
from .geo import point_in_polygon

VALID_QUERY_KEYS = {"class", "signalized", "min_volume", "qualified",
                    "offset", "limit"}


@dataclass(frozen=True)
class Snapshot:
    records: tuple[dict, ...]     # sorted by id
    by_id: dict
    etag: str
    artifact_dir: Path


def load_snapshot(artifact_dir) -> Snapshot:
    artifact_dir = Path(artifact_dir)
    records_path = artifact_dir / "records.json"
    if not records_path.exists():
        raise FileNotFoundError(str(records_path))
    raw = records_path.read_bytes()
    records = tuple(sorted(json.loads(raw), key=lambda r: r["id"]))
    etag = '"' + hashlib.sha256(raw).hexdigest()[:32] + '"'
    return Snapshot(
        records=records,
        by_id={r["id"]: r for r in records},
        etag=etag,
        artifact_dir=artifact_dir,
    )


class RegionQuery(BaseModel):
    polygon: list[tuple[float, float]] | None = None
    rect: tuple[float, float, float, float] | None = None
    classes: list[str] | None = Field(default=None, alias="class")
    signalized: bool | None = None
    hd_ratio_min: float | None = None

    model_config = {"populate_by_name": True}

    def vertices(self) -> list[tuple[float, float]]:
        if self.rect is not None:
            x0, y0, x1, y1 = self.rect
            if x0 == x1 or y0 == y1:
                raise HTTPException(400, "degenerate rectangle")
            x0, x1 = min(x0, x1), max(x0, x1)
            y0, y1 = min(y0, y1), max(y0, y1)
            return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        if self.polygon is None or len(self.polygon) < 3:
            raise HTTPException(400, "polygon needs at least 3 vertices")
        poly = [tuple(map(float, v)) for v in self.polygon]
        if poly[0] == poly[-1]:
            poly = poly[:-1]
        if len(poly) < 3 or len(set(poly)) < 3:
            raise HTTPException(400, "degenerate polygon")
        return poly


def _stats_obj(r: dict) -> telematics.IntersectionStats:
    return telematics.IntersectionStats(
        intersection_id=r["id"], volume=r["volume"], mean_speed=r["mean_speed"],
        ha_freq=r["ha_freq"], hd_freq=r["hd_freq"], qualified=r["qualified"],
    )


def _region_members(snapshot: Snapshot, query: RegionQuery) -> list[dict]:
    poly = query.vertices()
    members = [r for r in snapshot.records if point_in_polygon(r["x"], r["y"], poly)]
    if query.classes is not None:
        allowed = set(query.classes)
        members = [r for r in members if r["class"] in allowed]
    if query.signalized is not None:
        members = [r for r in members if r["signalized"] == query.signalized]
    if query.hd_ratio_min is not None:
        # ratio relative to the mean HD frequency of the region's qualified
        # members, the same baseline the outlier query uses
        qualified = [r for r in members if r["qualified"] and r["hd_freq"] is not None]
        if qualified:
            mean_hd = sum(r["hd_freq"] for r in qualified) / len(qualified)
            if mean_hd > 0:
                members = [
                    r for r in members
                    if r["hd_freq"] is not None
                    and r["hd_freq"] >= query.hd_ratio_min * mean_hd
                ]
    return members


def _comparison_block(members: list[dict], complement: list[dict]) -> dict:
    out = {}
    m_q = [r for r in members if r["qualified"]]
    c_q = [r for r in complement if r["qualified"]]
    if len(m_q) < 2 or len(c_q) < 2:
        return {"note": "too few qualified intersections for inference"}
    for measure in ("speed", "ha_freq", "hd_freq"):
        key = "mean_speed" if measure == "speed" else measure
        groups = [[r[key] for r in m_q], [r[key] for r in c_q]]
        try:
            anova = jstats.one_way_anova(groups).to_dict()
            pairs = jstats.games_howell(groups, labels=["region", "complement"])
            gh = pairs[0].result.to_dict()
        except ValueError as err:
            out[measure] = {"error": str(err)}
            continue
        out[measure] = {"anova": anova, "games_howell": gh}
    return out


def build_app(artifact_dir, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="junction-atlas", docs_url="/api/docs")
    state: dict = {"snapshot": None, "error": None}
    try:
        state["snapshot"] = load_snapshot(artifact_dir)
    except FileNotFoundError as err:
        state["error"] = str(err)

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=[cors_origin],
            allow_methods=["GET", "POST"], allow_headers=["*"],
        )

    static_dir = Path(artifact_dir) / "ui"
    if static_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    def snapshot() -> Snapshot:
        if state["snapshot"] is None:
            raise HTTPException(
                503, f"artifacts not loaded: missing {state['error']}"
            )
        return state["snapshot"]

    def tagged(payload, request: Request, extra_headers: dict | None = None):
        snap = snapshot()
        headers = {"ETag": snap.etag, **(extra_headers or {})}
        if request.headers.get("if-none-match") == snap.etag:
            return Response(status_code=304, headers=headers)
        return JSONResponse(payload, headers=headers)

    @app.get("/api/embedding")
    def embedding(request: Request, offset: int = 0, limit: int = 1000):
        snap = snapshot()
        if offset < 0 or limit < 0:
            raise HTTPException(400, "offset and limit must be non-negative")
        page = snap.records[offset:offset + limit]
        return tagged(
            list(page), request,
            {"X-Total-Count": str(len(snap.records))},
        )

    @app.get("/api/query")
    def query(request: Request):
        snap = snapshot()
        params = request.query_params
        unknown = set(params.keys()) - VALID_QUERY_KEYS
        if unknown:
            raise HTTPException(
                400,
                f"unknown filter keys {sorted(unknown)}; "
                f"valid keys: {sorted(VALID_QUERY_KEYS)}",
            )
        out = list(snap.records)
        classes = params.getlist("class")
        if classes:
            allowed = set(classes)
            out = [r for r in out if r["class"] in allowed]
        for flag in ("signalized", "qualified"):
            raw_values = set(params.getlist(flag))
            if not raw_values:
                continue
            parsed = {v.lower() in ("1", "true", "yes") for v in raw_values}
            if len(parsed) > 1:
                raise HTTPException(400, f"contradictory {flag} filters")
            want = parsed.pop()
            out = [r for r in out if r[flag] == want]
        if "min_volume" in params:
            try:
                min_volume = int(params["min_volume"])
            except ValueError:
                raise HTTPException(400, "min_volume must be an integer")
            out = [r for r in out if r["volume"] >= min_volume]
        return tagged(out, request)

    @app.get("/api/intersections/{item_id}")
    def intersection(item_id: int, request: Request):
        snap = snapshot()
        record = snap.by_id.get(item_id)
        if record is None:
            raise HTTPException(404, f"unknown intersection id {item_id}")
        return tagged(record, request)

    @app.get("/api/intersections/{item_id}/image")
    def intersection_image(item_id: int):
        snap = snapshot()
        record = snap.by_id.get(item_id)
        if record is None:
            raise HTTPException(404, f"unknown intersection id {item_id}")
        image = record.get("image")
        if not image:
            raise HTTPException(404, f"no image for intersection {item_id}")
        path = snap.artifact_dir / image
        if not path.exists():
            raise HTTPException(404, f"image file {image} missing on disk")
        return FileResponse(path, media_type="image/png")

    @app.post("/api/region/stats")
    def region_stats_endpoint(query: RegionQuery, request: Request):
        snap = snapshot()
        members = _region_members(snap, query)
        in_region = {r["id"] for r in members}
        complement = [r for r in snap.records if r["id"] not in in_region]
        stats = telematics.region_stats(
            "region", [_stats_obj(r) for r in members]
        )
        payload = {
            "region": {
                "count": stats.count,
                "speed": stats.mean_speed,
                "ha_freq": stats.mean_ha_freq,
                "hd_freq": stats.mean_hd_freq,
                # ids entering the statistics (qualified members only)
                "member_ids": sorted(stats.member_ids),
                "total_in_region": len(members),
                "degenerate": stats.degenerate,
            },
            "comparison": _comparison_block(members, complement),
        }
        return tagged(payload, request)

    def _outlier_payload(members, factor: float):
        try:
            ids, degenerate = telematics.find_outliers(members, factor=factor)
        except ValueError as err:
            raise HTTPException(400, str(err))
        return {"factor": factor, "outliers": ids, "degenerate_mean": degenerate}

    @app.post("/api/region/outliers")
    def region_outliers(query: RegionQuery, request: Request, factor: float = 8.0):
        snap = snapshot()
        members = [_stats_obj(r) for r in _region_members(snap, query)]
        return tagged(_outlier_payload(members, factor), request)

    @app.get("/api/region/outliers")
    def all_outliers(request: Request, factor: float = 8.0):
        """Whole-embedding variant; POST a RegionQuery body to restrict it."""
        snap = snapshot()
        members = [_stats_obj(r) for r in snap.records]
        return tagged(_outlier_payload(members, factor), request)

    return app
