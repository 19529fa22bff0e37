"""Run the whole desk-scale pipeline through the stage runners.

Equivalent to the CLI sequence
  junction-atlas synth / preprocess / train / encode / embed / join / stats
at the standard desk scale (200 scenes, 150 training steps); takes a few
minutes on a laptop. Artifacts land in demo_out/pipeline; point the service
at that directory afterwards:

  junction-atlas serve --output-dir demo_out/pipeline
"""
import json
import logging
from pathlib import Path

import numpy as np

from junction_atlas import pipeline as pl
from junction_atlas import tsne

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

out = Path("demo_out/pipeline")
cfg = pl.PipelineConfig(output_dir=str(out), scene_count=200, seed=7)
cfg.image_dir = str(out / "scenes")
cfg.telematics_path = str(out / "telematics.csv")

pl.run_synth(cfg)
pl.run_preprocess(cfg)
pl.run_train(cfg)
pl.run_encode(cfg)
pl.run_embed(cfg)
pl.run_join(cfg)

records = pl.load_records(cfg.out)
labels = {int(l.split(",")[0]): l.split(",")[1]
          for l in (out / "labels.csv").read_text().splitlines()[1:]}
coords = np.array([[r["x"], r["y"]] for r in records])
truth = np.array([labels[r["id"]] for r in records])
purity = tsne.cluster_purity(tsne.kmeans(coords, 4, seed=0), truth)
print(f"\nembedding purity against generator classes: {purity:.3f}")

xs, ys = coords[:, 0], coords[:, 1]
regions = [
    {"label": "left", "rect": [float(xs.min()) - 1, float(ys.min()) - 1,
                               float(np.median(xs)), float(ys.max()) + 1]},
    {"label": "right", "rect": [float(np.median(xs)), float(ys.min()) - 1,
                                float(xs.max()) + 1, float(ys.max()) + 1]},
]
(out / "regions.json").write_text(json.dumps(regions))
cfg.regions_path = str(out / "regions.json")
pl.run_stats(cfg)
print((out / "region_report.csv").read_text())
