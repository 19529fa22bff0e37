"""Pipeline configuration, on-disk artifact formats, and stage runners.

Each stage consumes the previous stage's files and writes its own under the
configured output directory. A single join key, the intersection id,
threads through every artifact; stages report (and never silently drop)
ids that fall out. All artifacts are byte-stable given identical inputs
and seed.
"""
from __future__ import annotations

import contextlib
import dataclasses
import json
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import autoencoder as ae
from . import imaging, osm, synth, telematics, tsne
from . import stats as jstats
from .geo import point_in_polygon

log = logging.getLogger(__name__)

CODES_MAGIC = b"JACD"
CODES_VERSION = 1

ENV_PREFIX = "JA_"


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    osm_path: str = ""
    image_dir: str = ""
    telematics_path: str = ""
    regions_path: str = ""
    output_dir: str = "out"
    ae_config: str = "desk"           # "canonical" | "desk"
    alpha: float = 0.1
    beta: float = 0.05
    train_steps: int = 150
    batch_size: int = 32
    learning_rate: float = 1e-3
    keep_r: float | None = None       # None: derived from ae_config
    fade_r: float | None = None
    perplexity: float = 30.0
    tsne_iterations: int = 1000
    tsne_mode: str = "auto"
    tsne_theta: float = 0.5
    merge_threshold_m: float = 30.0
    match_radius_m: float = 30.0
    scene_count: int = 200
    seed: int = 0
    jobs: int = 1
    verbose: bool = False

    def __post_init__(self):
        if self.ae_config not in ae.CONFIGS or self.ae_config == "tiny":
            raise ValueError(f"ae_config must be canonical or desk, got {self.ae_config!r}")
        side = self.image_side
        if self.keep_r is None:
            self.keep_r = 52.0 * side / 256.0
        if self.fade_r is None:
            self.fade_r = 128.0 * side / 256.0
        if not (0 < self.keep_r < self.fade_r <= side / 2):
            raise ValueError(f"invalid fade radii {self.keep_r}/{self.fade_r} for side {side}")
        for name in ("merge_threshold_m", "match_radius_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def image_side(self) -> int:
        return 256 if self.ae_config == "canonical" else 64

    def network(self) -> ae.NetworkConfig:
        return ae.CONFIGS[self.ae_config](alpha=self.alpha, beta=self.beta)

    @property
    def out(self) -> Path:
        return Path(self.output_dir)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name: str, raw: str):
    field = _FIELD_TYPES.get(name)
    if field is None:
        raise PipelineError(f"unknown config key {name!r}")
    text = raw.strip()
    if field.type in ("float", "float | None"):
        return float(text)
    if field.type == "int":
        return int(text)
    if field.type == "bool":
        return text.lower() in ("1", "true", "yes", "on")
    return text


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from an optional key=value file, JA_* environment
    variables, and explicit overrides, in that order of precedence."""
    values: dict = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise PipelineError(f"{path}:{lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            values[key.strip()] = _coerce(key.strip(), raw)
    for name in _FIELD_TYPES:
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            values[name] = _coerce(name, env)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return PipelineConfig(**values)


@contextlib.contextmanager
def output_lock(outdir: Path):
    """Exclusive advisory lock so two commands never write one directory."""
    outdir.mkdir(parents=True, exist_ok=True)
    lock = outdir / ".ja.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise PipelineError(
            f"{lock} exists: another command is writing this directory "
            "(remove the file if that command crashed)"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            lock.unlink()


# --------------------------------------------------------------------------
# artifact formats

def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_intersections(path: Path, intersections: list[osm.Intersection]):
    rows = ["id,lat,lon,class,signalized,leg_count,merged_count"]
    for it in sorted(intersections, key=lambda i: i.id):
        rows.append(
            f"{it.id},{_fmt(it.lat)},{_fmt(it.lon)},{it.simplified_class},"
            f"{str(it.signalized).lower()},{it.leg_count},{it.merged_count}"
        )
    path.write_text("\n".join(rows) + "\n")
    json_path = path.with_suffix(".json")
    json_path.write_text(json.dumps(
        [
            {
                "id": it.id, "lat": it.lat, "lon": it.lon,
                "class": it.simplified_class, "signalized": it.signalized,
                "leg_count": it.leg_count, "merged_count": it.merged_count,
            }
            for it in sorted(intersections, key=lambda i: i.id)
        ],
        indent=0, sort_keys=True,
    ) + "\n")


def read_intersections(path: Path) -> list[osm.Intersection]:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "id,lat,lon,class,signalized,leg_count,merged_count":
        raise PipelineError(f"{path}: not an intersections file (bad header)")
    out = []
    for line in lines[1:]:
        iid, lat, lon, cls, sig, legs, merged = line.split(",")
        out.append(osm.Intersection(
            id=int(iid), lat=float(lat), lon=float(lon), simplified_class=cls,
            signalized=sig == "true", leg_count=int(legs),
            merged_node_ids=set(range(int(merged))),
            from_roundabout=cls == "O",
        ))
    return out


def save_gray_png(path: Path, img: np.ndarray):
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)


def load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=float) / 255.0


def write_codes(path: Path, codes: np.ndarray, ids: list[int]):
    """Self-describing binary (magic, version, N, D, row-major f32) plus an
    id sidecar that keeps the join key attached."""
    data = np.ascontiguousarray(codes, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(CODES_MAGIC)
        fh.write(struct.pack("<III", CODES_VERSION, data.shape[0], data.shape[1]))
        fh.write(data.tobytes())
    sidecar = path.with_suffix(".ids.csv")
    sidecar.write_text("id\n" + "\n".join(str(i) for i in ids) + "\n")


def read_codes(path: Path) -> tuple[np.ndarray, list[int]]:
    with open(path, "rb") as fh:
        if fh.read(4) != CODES_MAGIC:
            raise PipelineError(f"{path}: not a codes file")
        version, n, d = struct.unpack("<III", fh.read(12))
        if version != CODES_VERSION:
            raise PipelineError(f"{path}: codes format version {version}")
        codes = np.frombuffer(fh.read(4 * n * d), dtype=np.float32).reshape(n, d)
    sidecar = path.with_suffix(".ids.csv")
    if sidecar.exists():
        ids = [int(v) for v in sidecar.read_text().splitlines()[1:]]
    else:
        ids = list(range(n))
    if len(ids) != n:
        raise PipelineError(f"{sidecar}: {len(ids)} ids for {n} code rows")
    return codes.astype(float), ids


def write_embedding(path: Path, points: list[tsne.EmbeddingPoint]):
    rows = ["id,x,y"] + [f"{p.id},{_fmt(p.x)},{_fmt(p.y)}" for p in points]
    path.write_text("\n".join(rows) + "\n")
    path.with_suffix(".json").write_text(json.dumps(
        [{"id": p.id, "x": p.x, "y": p.y} for p in points], indent=0,
    ) + "\n")


def read_embedding(path: Path) -> list[tsne.EmbeddingPoint]:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "id,x,y":
        raise PipelineError(f"{path}: not an embedding file (bad header)")
    out = []
    for line in lines[1:]:
        iid, x, y = line.split(",")
        out.append(tsne.EmbeddingPoint(id=int(iid), x=float(x), y=float(y)))
    return out


def write_station_stats(path: Path, stats: list[telematics.IntersectionStats]):
    rows = ["id,volume,mean_speed,ha_freq,hd_freq,qualified"]
    for s in sorted(stats, key=lambda s: s.intersection_id):
        speed = _fmt(s.mean_speed) if s.mean_speed is not None else ""
        ha = _fmt(s.ha_freq) if s.ha_freq is not None else ""
        hd = _fmt(s.hd_freq) if s.hd_freq is not None else ""
        rows.append(f"{s.intersection_id},{s.volume},{speed},{ha},{hd},"
                    f"{str(s.qualified).lower()}")
    path.write_text("\n".join(rows) + "\n")


def read_station_stats(path: Path) -> dict[int, telematics.IntersectionStats]:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != "id,volume,mean_speed,ha_freq,hd_freq,qualified":
        raise PipelineError(f"{path}: not a stats file (bad header)")
    out = {}
    for line in lines[1:]:
        iid, volume, speed, ha, hd, qualified = line.split(",")
        out[int(iid)] = telematics.IntersectionStats(
            intersection_id=int(iid), volume=int(volume),
            mean_speed=float(speed) if speed else None,
            ha_freq=float(ha) if ha else None,
            hd_freq=float(hd) if hd else None,
            qualified=qualified == "true",
        )
    return out


def _check_id_conservation(stage: str, output_ids, input_ids):
    missing = sorted(set(output_ids) - set(input_ids))
    if missing:
        raise PipelineError(f"{stage}: output ids not in input: {missing[:10]}")
    dropped = sorted(set(input_ids) - set(output_ids))
    if dropped:
        log.info("%s: %d ids dropped (first: %s)", stage, len(dropped), dropped[:5])
    return dropped


# --------------------------------------------------------------------------
# stages

def run_identify(cfg: PipelineConfig) -> Path:
    src = Path(cfg.osm_path)
    if not src.exists():
        raise PipelineError(f"osm_path {src} does not exist")
    with open(src, "rb") as fh:
        data = osm.parse_osm(fh)
    for w in data.warnings:
        log.warning("%s", w)
    intersections = osm.identify_intersections(
        data, merge_threshold_m=cfg.merge_threshold_m
    )
    out = cfg.out / "intersections.csv"
    write_intersections(out, intersections)
    counts = {c: sum(1 for it in intersections if it.simplified_class == c)
              for c in osm.SIMPLIFIED_CLASSES}
    log.info("identified %d intersections %s", len(intersections), counts)
    return out


def _preprocess_one(args):
    """Worker for one image; returns None when the file cannot be processed."""
    path_str, keep_r, fade_r = args
    try:
        img = load_rgb(Path(path_str))
        res = imaging.preprocess(img, keep_r=keep_r, fade_r=fade_r)
    except (OSError, ValueError) as err:
        log.warning("skipping %s: %s", Path(path_str).name, err)
        return None
    return res.image, res.rotation.angle, res.rotation.degenerate


def run_preprocess(cfg: PipelineConfig) -> Path:
    image_dir = Path(cfg.image_dir)
    if not image_dir.is_dir():
        raise PipelineError(f"image_dir {image_dir} does not exist")
    files = sorted(image_dir.glob("*.png"))
    if not files:
        raise PipelineError(f"no PNG files in {image_dir}")
    out_dir = cfg.out / "abstractions"
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = ["file,intersection_id,angle_deg,degenerate"]
    jobs = []
    for path in files:
        stem = path.stem
        iid = int(stem.split("_")[-1]) if stem.split("_")[-1].isdigit() else None
        jobs.append((path, iid))

    work = [(str(p), cfg.keep_r, cfg.fade_r) for p, _ in jobs]
    if cfg.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_preprocess_one, work))
    else:
        results = [_preprocess_one(w) for w in work]

    skipped = sum(1 for r in results if r is None)
    for (path, iid), result in zip(jobs, results):
        if result is None:
            continue
        image, angle, degenerate = result
        out_path = out_dir / f"{path.stem}.png"
        save_gray_png(out_path, image)
        manifest.append(
            f"{out_path.name},{iid if iid is not None else ''},"
            f"{angle:.6f},{str(degenerate).lower()}"
        )
    manifest_path = cfg.out / "manifest.csv"
    manifest_path.write_text("\n".join(manifest) + "\n")
    log.info("preprocessed %d images (%d skipped)", len(files) - skipped, skipped)
    return manifest_path


def _load_abstractions(cfg: PipelineConfig) -> tuple[np.ndarray, list[int]]:
    manifest_path = cfg.out / "manifest.csv"
    if not manifest_path.exists():
        raise PipelineError(
            f"{manifest_path} missing: run the preprocess stage first"
        )
    images, ids = [], []
    for line in manifest_path.read_text().splitlines()[1:]:
        fname, iid, _, _ = line.split(",")
        with Image.open(cfg.out / "abstractions" / fname) as im:
            images.append(np.asarray(im.convert("L"), dtype=float) / 255.0)
        ids.append(int(iid) if iid else len(ids))
    return np.stack(images), ids


def run_train(cfg: PipelineConfig) -> Path:
    images, _ = _load_abstractions(cfg)
    network = cfg.network()
    params = ae.init_params(network, seed=cfg.seed)
    result = ae.train(
        network, images, params, steps=cfg.train_steps,
        batch_size=cfg.batch_size,
        optimizer=ae.AdamSettings(learning_rate=cfg.learning_rate),
        seed=cfg.seed,
    )
    ckpt = cfg.out / "model.ckpt"
    ae.save_checkpoint(ckpt, network, result.params)
    (cfg.out / "loss_curve.csv").write_text(
        "\n".join(ae.loss_curve_rows(result.history)) + "\n"
    )
    if result.diverged:
        raise PipelineError(
            f"training diverged at step {result.steps_completed}; "
            f"last good checkpoint written to {ckpt}"
        )
    log.info("trained %d steps; final total loss %.3f", result.steps_completed,
             result.history[-1][4] if result.history else float("nan"))
    return ckpt


def run_encode(cfg: PipelineConfig) -> Path:
    ckpt = cfg.out / "model.ckpt"
    if not ckpt.exists():
        raise PipelineError(f"{ckpt} missing: run the train stage first")
    network, params = ae.load_checkpoint(ckpt)
    images, ids = _load_abstractions(cfg)
    codes = ae.encode_batch(network, params, images.astype(np.float32))
    out = cfg.out / "codes.bin"
    write_codes(out, codes, ids)
    report = ae.compression_report(codes, network.input_side)
    (cfg.out / "compression.json").write_text(json.dumps(report, indent=2) + "\n")
    log.info("encoded %d images to %d-wide codes", codes.shape[0], codes.shape[1])
    return out


def run_embed(cfg: PipelineConfig) -> Path:
    codes_path = cfg.out / "codes.bin"
    if not codes_path.exists():
        raise PipelineError(f"{codes_path} missing: run the encode stage first")
    codes, ids = read_codes(codes_path)
    config = tsne.TsneConfig(
        perplexity=cfg.perplexity, n_iter=cfg.tsne_iterations,
        mode=cfg.tsne_mode, theta=cfg.tsne_theta, seed=cfg.seed,
    )
    points, kl_log = tsne.run_tsne(codes, config, ids=ids)
    out = cfg.out / "embedding.csv"
    write_embedding(out, points)
    (cfg.out / "embedding_kl.csv").write_text(
        "iteration,kl\n" + "\n".join(f"{i},{_fmt(v)}" for i, v in kl_log) + "\n"
    )
    _check_id_conservation("embed", [p.id for p in points], ids)
    return out


def run_join(cfg: PipelineConfig) -> Path:
    emb_path = cfg.out / "embedding.csv"
    inter_path = cfg.out / "intersections.csv"
    for p in (emb_path, inter_path):
        if not p.exists():
            raise PipelineError(f"{p} missing: run earlier stages first")
    points = read_embedding(emb_path)
    intersections = {it.id: it for it in read_intersections(inter_path)}

    stats_map: dict[int, telematics.IntersectionStats] = {}
    if cfg.telematics_path:
        tpath = Path(cfg.telematics_path)
        if not tpath.exists():
            raise PipelineError(f"telematics_path {tpath} does not exist")
        with open(tpath) as fh:
            records, report = telematics.ingest_records(fh)
        for w in report.warnings:
            log.warning("%s", w)
        matched = telematics.match_records(
            records, list(intersections.values()), cfg.match_radius_m
        )
        stats_map = {
            iid: telematics.compute_stats(iid, recs) for iid, recs in matched.items()
        }
        write_station_stats(cfg.out / "stats.csv", list(stats_map.values()))

    manifest_images = {}
    manifest_path = cfg.out / "manifest.csv"
    if manifest_path.exists():
        for line in manifest_path.read_text().splitlines()[1:]:
            fname, iid, _, _ = line.split(",")
            if iid:
                manifest_images[int(iid)] = f"abstractions/{fname}"

    records_out = []
    dropped = []
    for p in points:
        it = intersections.get(p.id)
        if it is None:
            dropped.append(p.id)
            continue
        s = stats_map.get(p.id)
        records_out.append({
            "id": p.id, "x": p.x, "y": p.y,
            "class": it.simplified_class, "signalized": it.signalized,
            "volume": s.volume if s else 0,
            "mean_speed": s.mean_speed if s else None,
            "ha_freq": s.ha_freq if s else None,
            "hd_freq": s.hd_freq if s else None,
            "qualified": bool(s.qualified) if s else False,
            "image": manifest_images.get(p.id),
        })
    if dropped:
        log.warning("join: %d embedded ids missing from intersections: %s",
                    len(dropped), dropped[:5])
    out = cfg.out / "records.json"
    out.write_text(json.dumps(records_out, indent=0, sort_keys=True) + "\n")
    log.info("joined %d records", len(records_out))
    return out


def load_records(outdir: Path) -> list[dict]:
    path = outdir / "records.json"
    if not path.exists():
        raise PipelineError(f"{path} missing: run the join stage first")
    return json.loads(path.read_text())


def _region_members(records: list[dict], region: dict) -> list[dict]:
    if "rect" in region:
        x0, y0, x1, y1 = region["rect"]
        x0, x1 = min(x0, x1), max(x0, x1)
        y0, y1 = min(y0, y1), max(y0, y1)
        poly = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    else:
        poly = [tuple(v) for v in region["polygon"]]
    return [r for r in records if point_in_polygon(r["x"], r["y"], poly)]


def _stats_from_record(r: dict) -> telematics.IntersectionStats:
    return telematics.IntersectionStats(
        intersection_id=r["id"], volume=r["volume"], mean_speed=r["mean_speed"],
        ha_freq=r["ha_freq"], hd_freq=r["hd_freq"], qualified=r["qualified"],
    )


def region_report(records: list[dict], regions: list[dict]) -> dict:
    """Table of per-region driving behavior plus cross-region tests.

    Columns: region, speed, ha_freq,
    hd_freq, count. With two or more non-degenerate regions the report adds
    a one-way ANOVA and Games-Howell pairwise block per measure.
    """
    rows = []
    samples: dict[str, dict[str, list[float]]] = {}
    for region in regions:
        label = region.get("label", f"region{len(rows)}")
        members = _region_members(records, region)
        stats = telematics.region_stats(
            label, [_stats_from_record(r) for r in members]
        )
        rows.append({
            "region": label,
            "speed": stats.mean_speed,
            "ha_freq": stats.mean_ha_freq,
            "hd_freq": stats.mean_hd_freq,
            "count": stats.count,
        })
        qualified = [r for r in members if r["qualified"]]
        samples[label] = {
            "speed": [r["mean_speed"] for r in qualified],
            "ha_freq": [r["ha_freq"] for r in qualified],
            "hd_freq": [r["hd_freq"] for r in qualified],
        }
    comparison = {}
    usable = {k: v for k, v in samples.items() if len(v["speed"]) >= 2}
    if len(usable) >= 2:
        labels = sorted(usable)
        for measure in ("speed", "ha_freq", "hd_freq"):
            groups = [usable[label][measure] for label in labels]
            anova = jstats.one_way_anova(groups)
            pairs = jstats.games_howell(groups, labels=labels)
            comparison[measure] = {
                "anova": anova.to_dict(),
                "games_howell": [
                    {"a": p.label_a, "b": p.label_b, **p.result.to_dict()}
                    for p in pairs
                ],
            }
    return {"regions": rows, "comparison": comparison}


def run_stats(cfg: PipelineConfig) -> Path:
    records = load_records(cfg.out)
    if not cfg.regions_path:
        raise PipelineError("regions_path not set (JSON list of labeled regions)")
    regions = json.loads(Path(cfg.regions_path).read_text())
    report = region_report(records, regions)
    out = cfg.out / "region_stats.json"
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    table = ["region,speed,ha_freq,hd_freq,count"]
    for row in report["regions"]:
        speed = _fmt(row["speed"]) if row["speed"] is not None else ""
        ha = _fmt(row["ha_freq"]) if row["ha_freq"] is not None else ""
        hd = _fmt(row["hd_freq"]) if row["hd_freq"] is not None else ""
        table.append(f"{row['region']},{speed},{ha},{hd},{row['count']}")
    (cfg.out / "region_report.csv").write_text("\n".join(table) + "\n")
    return out


def run_outliers(cfg: PipelineConfig, factor: float = 8.0) -> Path:
    records = load_records(cfg.out)
    if cfg.regions_path:
        regions = json.loads(Path(cfg.regions_path).read_text())
    else:
        regions = [{"label": "all", "rect": [
            min(r["x"] for r in records) - 1, min(r["y"] for r in records) - 1,
            max(r["x"] for r in records) + 1, max(r["y"] for r in records) + 1,
        ]}]
    report = []
    for region in regions:
        label = region.get("label", "region")
        members = [_stats_from_record(r) for r in _region_members(records, region)]
        try:
            ids, degenerate = telematics.find_outliers(members, factor=factor)
        except ValueError as err:
            report.append({"region": label, "error": str(err)})
            continue
        report.append({"region": label, "factor": factor, "outliers": ids,
                       "degenerate_mean": degenerate})
    out = cfg.out / "outliers.json"
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return out


def run_synth(cfg: PipelineConfig) -> Path:
    """Generate the synthetic desk dataset: scenes, map positions, telematics."""
    per_class = max(1, cfg.scene_count // len(synth.CLASSES))
    corpus = synth.generate_corpus(per_class, side=cfg.image_side, seed=cfg.seed)
    scene_dir = cfg.out / "scenes"
    scene_dir.mkdir(parents=True, exist_ok=True)
    intersections = []
    lat0, lon0 = -33.80, 151.10
    for idx, (iid, cls) in enumerate(zip(corpus.ids, corpus.classes)):
        rgb = np.clip(np.round(corpus.images[idx] * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(rgb, mode="RGB").save(scene_dir / f"scene_{iid:05d}.png")
        intersections.append(osm.Intersection(
            id=iid,
            lat=lat0 + 0.002 * (idx // 20),
            lon=lon0 + 0.002 * (idx % 20),
            simplified_class=cls,
            signalized=(cls == "#" and idx % 3 == 0),
            leg_count={"O": 8, "T": 3, "X": 4, "#": 5}[cls],
            merged_node_ids={iid},
            from_roundabout=cls == "O",
        ))
    write_intersections(cfg.out / "intersections.csv", intersections)
    labels_rows = ["id,class"] + [
        f"{iid},{cls}" for iid, cls in zip(corpus.ids, corpus.classes)
    ]
    (cfg.out / "labels.csv").write_text("\n".join(labels_rows) + "\n")

    profile = telematics.BehaviorProfile.default()
    classes = dict(zip(corpus.ids, corpus.classes))
    text, truth = telematics.generate_synthetic_telematics(
        intersections, classes, profile, seed=cfg.seed
    )
    (cfg.out / "telematics.csv").write_text(text)
    write_station_stats(cfg.out / "telematics_truth.csv", list(truth.values()))
    log.info("generated %d scenes and %d telematics rows",
             len(corpus.ids), text.count("\n") - 1)
    return scene_dir
