"""Synthetic intersection scene rendering.

Stand-in for aerial imagery: anti-aliased road strips with lane markings on
a lightly textured background. Realism target is class separability after
preprocessing, not photorealism. All rendering is deterministic under the
scene's seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROAD_RGB = (0.30, 0.30, 0.32)
MARKING_RGB = (0.95, 0.95, 0.92)
GRASS_RGB = (0.47, 0.60, 0.42)

CLASSES = ("O", "T", "X", "#")


@dataclass
class SyntheticScene:
    cls: str
    leg_angles: tuple[float, ...]       # degrees, counterclockwise from east
    leg_widths: tuple[float, ...]       # pixels at the canonical 256 side
    render_side: int = 256
    ring_radius: float = 0.0            # roundabouts only, pixels at 256
    ring_width: float = 0.0
    markings: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")
        if len(self.leg_angles) != len(self.leg_widths):
            raise ValueError("leg_angles and leg_widths must align")


def make_scene(cls: str, rng: np.random.Generator, side: int = 256) -> SyntheticScene:
    """Randomized scene spec for one simplified class."""
    base = float(rng.uniform(0.0, 180.0))
    jitter = lambda s: float(rng.uniform(-s, s))
    if cls == "X":
        angles = [base, base + 90 + jitter(4), base + 180 + jitter(4), base + 270 + jitter(4)]
        widths = [rng.uniform(9, 12)] * 4
    elif cls == "T":
        stem = base + 90 + jitter(6)
        angles = [base, base + 180 + jitter(3), stem]
        widths = [rng.uniform(9, 12)] * 3
    elif cls == "#":
        n_legs = int(rng.integers(5, 7))
        angles = [base + k * 360.0 / n_legs + jitter(8) for k in range(n_legs)]
        widths = [rng.uniform(16, 22)] * n_legs
    else:  # O
        n_legs = int(rng.integers(3, 5))
        angles = [base + k * 360.0 / n_legs + jitter(10) for k in range(n_legs)]
        widths = [rng.uniform(8, 10)] * n_legs
    scene = SyntheticScene(
        cls=cls,
        leg_angles=tuple(a % 360.0 for a in angles),
        leg_widths=tuple(float(w) for w in widths),
        render_side=side,
        ring_radius=float(rng.uniform(26, 34)) if cls == "O" else 0.0,
        ring_width=float(rng.uniform(9, 11)) if cls == "O" else 0.0,
        seed=int(rng.integers(0, 2 ** 31 - 1)),
    )
    return scene


def _coverage(dist: np.ndarray, half_width: float, aa: float = 0.8) -> np.ndarray:
    return np.clip((half_width + aa - dist) / (2.0 * aa), 0.0, 1.0)


def _texture(side: int, rng: np.random.Generator, amplitude: float = 0.02) -> np.ndarray:
    """Smooth low-amplitude plane-wave mixture."""
    yy, xx = np.mgrid[0:side, 0:side] / side
    tex = np.zeros((side, side))
    for _ in range(4):
        fx, fy = rng.uniform(2.0, 9.0, 2)
        phase = rng.uniform(0, 2 * math.pi)
        tex += np.sin(2 * math.pi * (fx * xx + fy * yy) + phase)
    tex /= np.abs(tex).max()
    return amplitude * tex


def generate_scene(scene: SyntheticScene) -> np.ndarray:
    """Render one scene to an RGB float image in [0, 1]."""
    side = scene.render_side
    scale = side / 256.0
    c = (side - 1) / 2.0
    rows, cols = np.mgrid[0:side, 0:side]
    x = cols - c
    y = c - rows
    rng = np.random.default_rng(scene.seed)

    road = np.zeros((side, side))
    marking = np.zeros((side, side))

    ring_r = scene.ring_radius * scale
    for angle, width in zip(scene.leg_angles, scene.leg_widths):
        th = math.radians(angle)
        ux, uy = math.cos(th), math.sin(th)
        along = x * ux + y * uy
        across = -x * uy + y * ux
        w = width * scale / 2.0
        start = ring_r if scene.cls == "O" else 0.0
        on_leg = along >= start
        dist = np.where(on_leg, np.abs(across), np.inf)
        road = np.maximum(road, _coverage(dist, w))
        if scene.markings and scene.cls != "O":
            dash = ((along / (12.0 * scale)) % 2.0) < 1.0
            mark_dist = np.where(on_leg & dash & (along > w * 2), np.abs(across), np.inf)
            marking = np.maximum(marking, _coverage(mark_dist, 0.8 * scale, aa=0.6))

    if scene.cls == "O":
        r = np.hypot(x, y)
        ring = _coverage(np.abs(r - ring_r), scene.ring_width * scale / 2.0)
        road = np.maximum(road, ring)
        # clear the island in the middle
        island = _coverage(r, ring_r - scene.ring_width * scale / 2.0)
        road = np.maximum(road - island, road * (1 - island))
    elif scene.cls == "#":
        # painted island: a marking ring around the center
        r = np.hypot(x, y)
        marking = np.maximum(
            marking, _coverage(np.abs(r - 10.0 * scale), 1.2 * scale, aa=0.6)
        )

    img = np.empty((side, side, 3))
    tex = _texture(side, rng)
    for ch in range(3):
        base = GRASS_RGB[ch] + tex
        paved = base * (1 - road) + ROAD_RGB[ch] * road
        img[..., ch] = paved * (1 - marking) + MARKING_RGB[ch] * marking
    return np.clip(img, 0.0, 1.0)


@dataclass
class Corpus:
    ids: list[int]
    classes: list[str]
    scenes: list[SyntheticScene]
    images: np.ndarray = field(repr=False)


def generate_corpus(n_per_class: int, side: int = 64, seed: int = 0,
                    classes: tuple[str, ...] = CLASSES) -> Corpus:
    """Deterministic labeled corpus with n_per_class scenes per class."""
    rng = np.random.default_rng(seed)
    ids, labels, scenes, images = [], [], [], []
    next_id = 1
    for cls in classes:
        for _ in range(n_per_class):
            scene = make_scene(cls, rng, side)
            ids.append(next_id)
            labels.append(cls)
            scenes.append(scene)
            images.append(generate_scene(scene))
            next_id += 1
    return Corpus(ids=ids, classes=labels, scenes=scenes, images=np.stack(images))
