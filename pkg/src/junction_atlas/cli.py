"""Command-line entry points for the pipeline stages and the service."""
from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .pipeline import PipelineError

STAGES = {
    "identify": pipeline.run_identify,
    "preprocess": pipeline.run_preprocess,
    "train": pipeline.run_train,
    "encode": pipeline.run_encode,
    "embed": pipeline.run_embed,
    "join": pipeline.run_join,
    "synth": pipeline.run_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="junction-atlas",
        description="Intersection design clustering and driving-behavior analysis",
    )
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--seed", type=int, help="override the pipeline seed")
    parser.add_argument("--jobs", type=int, help="worker processes for batch stages")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("identify", "parse OSM XML and write the intersections file"),
        ("preprocess", "abstract raw scene images and write the manifest"),
        ("train", "train the autoencoder and write a checkpoint"),
        ("encode", "encode abstractions into bottleneck codes"),
        ("embed", "run t-SNE over the codes"),
        ("join", "join embedding, map data, and telematics stats"),
        ("synth", "generate the synthetic desk-scale dataset"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("stats", help="per-region statistics report")
    _add_common(p)
    p.add_argument("--regions", help="JSON file with labeled regions")
    p.add_argument("--calibrate", type=int, metavar="N",
                   help="run N null-hypothesis ANOVA simulations instead")

    p = sub.add_parser("outliers", help="regionwise high-HD outlier query")
    _add_common(p)
    p.add_argument("--regions", help="JSON file with labeled regions")
    p.add_argument("--factor", type=float, default=8.0,
                   help="HD ratio threshold (default 8)")

    p = sub.add_parser("serve", help="start the read-only HTTP API")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8036)
    p.add_argument("--cors-origin", default=None)
    return parser


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--output-dir", help="artifact directory")
    p.add_argument("--osm-path", help="input OSM XML file")
    p.add_argument("--image-dir", help="input scene image directory")
    p.add_argument("--telematics-path", help="input telematics CSV")
    p.add_argument("--ae-config", choices=["canonical", "desk"])
    p.add_argument("--train-steps", type=int)
    p.add_argument("--scene-count", type=int)
    # the global flags also work after the verb; SUPPRESS keeps a value
    # parsed before the verb from being clobbered by the subparser default
    p.add_argument("--config", default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)


def _config_from_args(args) -> pipeline.PipelineConfig:
    overrides = {
        "output_dir": args.output_dir,
        "osm_path": args.osm_path,
        "image_dir": args.image_dir,
        "telematics_path": args.telematics_path,
        "ae_config": args.ae_config,
        "train_steps": args.train_steps,
        "scene_count": args.scene_count,
        "seed": args.seed,
        "jobs": args.jobs,
    }
    if getattr(args, "regions", None):
        overrides["regions_path"] = args.regions
    return pipeline.load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config_from_args(args)
    except (PipelineError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    try:
        if args.command in STAGES:
            with pipeline.output_lock(cfg.out):
                path = STAGES[args.command](cfg)
            print(f"{args.command}: wrote {path}")
        elif args.command == "stats":
            if args.calibrate:
                from . import stats as jstats

                pvals = jstats.anova_null_calibration(args.calibrate, seed=cfg.seed)
                out = cfg.out / "calibration.csv"
                cfg.out.mkdir(parents=True, exist_ok=True)
                out.write_text("p\n" + "\n".join(f"{p:.10g}" for p in pvals) + "\n")
                print(f"stats: wrote {out} ({args.calibrate} null simulations)")
            else:
                with pipeline.output_lock(cfg.out):
                    path = pipeline.run_stats(cfg)
                print(f"stats: wrote {path}")
        elif args.command == "outliers":
            with pipeline.output_lock(cfg.out):
                path = pipeline.run_outliers(cfg, factor=args.factor)
            print(f"outliers: wrote {path}")
        elif args.command == "serve":
            import uvicorn

            from .service import build_app

            app = build_app(cfg.out, cors_origin=args.cors_origin)
            uvicorn.run(app, host=args.host, port=args.port, log_level="info")
        else:  # pragma: no cover - argparse enforces choices
            return 2
    except PipelineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
