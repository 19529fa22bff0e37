"""Train the desk-scale autoencoder on a small abstraction corpus.

Prints the loss decomposition every 25 steps and reports the compression
of the learned codes. Takes a couple of minutes on a laptop.
"""
import numpy as np

from junction_atlas import autoencoder as ae
from junction_atlas import imaging, synth

corpus = synth.generate_corpus(8, side=64, seed=5)   # 32 scenes
abstractions = np.stack([
    imaging.preprocess(img, keep_r=13.0, fade_r=32.0).image
    for img in corpus.images
]).astype(np.float32)

config = ae.desk_config(alpha=0.1, beta=0.05)
params = ae.init_params(config, seed=0)
print("architecture:")
for name, side, ch in ae.shape_trace(config):
    print(f"  {name:12s} {side:3d} x {side:<3d} x {ch}")

result = ae.train(config, abstractions, params, steps=100, batch_size=16, seed=0)
print("\n  step     recon        l2        l1")
for step, recon, l2, l1, _ in result.history[::25] + [result.history[-1]]:
    print(f"  {step:4d}  {recon:9.2f}  {l2:8.3f}  {l1:8.3f}")

codes = ae.encode_batch(config, result.params, abstractions)
report = ae.compression_report(codes, config.input_side)
print(f"\ncodes: {codes.shape[0]} x {codes.shape[1]}, "
      f"mean nonzero activations {report['mean_nonzero_activations']:.1f} "
      f"of {report['bottleneck_width']} "
      f"(effective compression {report['effective_compression']:.1%})")
