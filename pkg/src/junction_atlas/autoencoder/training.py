"""Mini-batch Adam training loop with a per-step loss-component log."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .network import LossBreakdown, NetworkConfig, backward, trainable_keys

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamSettings:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[tuple[int, float, float, float, float]]  # step, recon, l2, l1, total
    diverged: bool = False
    steps_completed: int = 0
    codes_l1: float | None = None


class _Adam:
    def __init__(self, keys, settings: AdamSettings):
        self.settings = settings
        self.m = {k: 0.0 for k in keys}
        self.v = {k: 0.0 for k in keys}
        self.t = 0

    def step(self, params, grads):
        s = self.settings
        self.t += 1
        bc1 = 1.0 - s.beta1 ** self.t
        bc2 = 1.0 - s.beta2 ** self.t
        for k in self.m:
            g = grads[k]
            self.m[k] = s.beta1 * self.m[k] + (1.0 - s.beta1) * g
            self.v[k] = s.beta2 * self.v[k] + (1.0 - s.beta2) * (g * g)
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            params[k] = params[k] - s.learning_rate * mhat / (np.sqrt(vhat) + s.eps)


def train(
    config: NetworkConfig,
    dataset: np.ndarray,
    params: dict[str, np.ndarray],
    steps: int,
    batch_size: int = 32,
    optimizer: AdamSettings = AdamSettings(),
    seed: int = 0,
    dtype=np.float32,
) -> TrainResult:
    """Run ``steps`` mini-batch updates; deterministic under a fixed seed.

    Training runs in float32 by default (pass float64 for gradient studies).
    On divergence (non-finite loss) the loop aborts and returns the
    parameters from the last good step with ``diverged`` set.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    params = {k: np.array(v, dtype=dtype) for k, v in params.items()}
    dataset = np.asarray(dataset, dtype=dtype)
    rng = np.random.default_rng(seed)
    adam = _Adam(trainable_keys(params), optimizer)
    history: list[tuple[int, float, float, float, float]] = []
    batch_size = min(batch_size, len(dataset))

    order = rng.permutation(len(dataset))
    cursor = 0
    last_good = {k: v.copy() for k, v in params.items()}
    for step in range(steps):
        if cursor + batch_size > len(order):
            order = rng.permutation(len(dataset))
            cursor = 0
        batch = dataset[order[cursor:cursor + batch_size]]
        cursor += batch_size
        try:
            grads, breakdown, _ = backward(config, params, batch)
        except FloatingPointError:
            log.warning("training diverged at step %d; keeping last good parameters", step)
            return TrainResult(last_good, history, diverged=True, steps_completed=step)
        if not np.isfinite(breakdown.total):
            log.warning("training diverged at step %d; keeping last good parameters", step)
            return TrainResult(last_good, history, diverged=True, steps_completed=step)
        history.append((step, breakdown.recon, breakdown.l2, breakdown.l1, breakdown.total))
        last_good = {k: v.copy() for k, v in params.items()}
        adam.step(params, grads)
    return TrainResult(params, history, diverged=False, steps_completed=steps)


def loss_curve_rows(history) -> list[str]:
    """Delimited text rows (step, recon, l2, l1) for the convergence log."""
    rows = ["step,recon,l2,l1"]
    rows += [f"{s},{r:.10g},{l2:.10g},{l1:.10g}" for s, r, l2, l1, _ in history]
    return rows
