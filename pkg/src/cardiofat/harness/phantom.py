"""Synthetic desk-scale stand-in for the clinical CT dataset.

Each phantom slice is a randomized elliptical "heart" inside a tissue body:
a muscle core, an epicardial fat ring around it, a thin pericardium gap,
and a mediastinal fat band outside, with air beyond the body. Fat pixels
draw attenuation from the adipose band (-100..-50 HU); everything else
falls outside the display window (tissue above it, the gap and air below).
The two fat depots sample different sub-bands of the adipose range so the
desk-scale task stays learnable by the compact model, on top of the
geometric inside/outside cue.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigInvalid
from ..imaging import HuImage, Label, LabelMap, encode_labels, save_png, write_hu_raw

AIR_HU = -1000
TISSUE_HU = (10, 60)
GAP_HU = (-600, -350)  # pericardium gap: below the window, distinct from both fats
EPICARDIAL_HU = (-100, -72)
MEDIASTINAL_HU = (-78, -50)
WINDOW_SPAN = 170  # -200..-30


@dataclass(frozen=True)
class PhantomConfig:
    n_images: int = 16
    size: int = 64
    seed: int = 0
    noise_level: float = 0.05
    hole_rate: float = 0.03

    def __post_init__(self):
        if self.n_images < 1:
            raise ConfigInvalid(f"n_images {self.n_images}")
        if self.size < 16 or self.size % 16:
            raise ConfigInvalid(f"size {self.size} must be a multiple of 16")
        if not 0.0 <= self.noise_level <= 1.0 or not 0.0 <= self.hole_rate <= 1.0:
            raise ConfigInvalid("noise_level and hole_rate must lie in [0, 1]")


@dataclass
class PhantomSample:
    hu_clean: HuImage   # before additive noise
    hu: HuImage         # emitted attenuation grid
    labels: LabelMap


def _ellipse_radius(size, cx, cy, a, b, theta):
    ys, xs = np.mgrid[0:size, 0:size]
    dx = xs - cx
    dy = ys - cy
    u = (dx * np.cos(theta) + dy * np.sin(theta)) / a
    v = (-dx * np.sin(theta) + dy * np.cos(theta)) / b
    return np.sqrt(u * u + v * v)


def phantom_sample(cfg: PhantomConfig, rng) -> PhantomSample:
    """Draw one slice; consumes a fixed sequence of values from the stream."""
    s = cfg.size
    body_cx = s / 2 + rng.uniform(-0.03, 0.03) * s
    body_cy = s / 2 + rng.uniform(-0.03, 0.03) * s
    body_a = rng.uniform(0.40, 0.47) * s
    body_b = rng.uniform(0.38, 0.46) * s
    heart_cx = body_cx + rng.uniform(-0.06, 0.06) * s
    heart_cy = body_cy + rng.uniform(-0.06, 0.06) * s
    heart_a = rng.uniform(0.17, 0.24) * s
    heart_b = rng.uniform(0.15, 0.22) * s
    theta = rng.uniform(0.0, np.pi)
    core_scale = rng.uniform(0.45, 0.60)
    ring_outer = 1.0 + 3.2 / min(heart_a, heart_b)
    med_outer = rng.uniform(1.45, 1.75)

    body = _ellipse_radius(s, body_cx, body_cy, body_a, body_b, 0.0) <= 1.0
    r = _ellipse_radius(s, heart_cx, heart_cy, heart_a, heart_b, theta)

    labels = np.zeros((s, s), dtype=np.uint8)
    labels[body & (r > core_scale) & (r <= 1.0)] = Label.EPICARDIAL
    labels[body & (r > 1.0) & (r <= ring_outer)] = Label.PERICARDIUM
    labels[body & (r > ring_outer) & (r <= med_outer)] = Label.MEDIASTINAL

    hu = np.full((s, s), AIR_HU, dtype=np.float64)
    tissue = rng.uniform(*TISSUE_HU, size=(s, s))
    hu[body] = tissue[body]
    epi_draw = rng.uniform(*EPICARDIAL_HU, size=(s, s))
    med_draw = rng.uniform(*MEDIASTINAL_HU, size=(s, s))
    gap_draw = rng.uniform(*GAP_HU, size=(s, s))
    hu[labels == Label.EPICARDIAL] = epi_draw[labels == Label.EPICARDIAL]
    hu[labels == Label.MEDIASTINAL] = med_draw[labels == Label.MEDIASTINAL]
    hu[labels == Label.PERICARDIUM] = gap_draw[labels == Label.PERICARDIUM]

    if cfg.hole_rate > 0.0:
        # tissue islands inside the fat depots; labels stay consistent
        holes = rng.random((s, s)) < cfg.hole_rate
        fat = (labels == Label.EPICARDIAL) | (labels == Label.MEDIASTINAL)
        punch = holes & fat
        hu[punch] = tissue[punch]
        labels[punch] = Label.BACKGROUND

    clean = np.clip(np.round(hu), -1024, 3071).astype(np.int16)
    noisy = hu + rng.normal(0.0, cfg.noise_level * WINDOW_SPAN, size=(s, s))
    noisy = np.clip(np.round(noisy), -1024, 3071).astype(np.int16)
    return PhantomSample(
        hu_clean=HuImage(clean), hu=HuImage(noisy), labels=LabelMap(labels)
    )


def phantom_id(index):
    return f"phantom_{index:04d}"


def generate_phantom(cfg: PhantomConfig, out_dir) -> list:
    """Write HUIM inputs and color-mask targets; returns the sample ids."""
    out = Path(out_dir)
    (out / "huim").mkdir(parents=True, exist_ok=True)
    (out / "target").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    ids = []
    for i in range(cfg.n_images):
        sample = phantom_sample(cfg, rng)
        name = phantom_id(i)
        with open(out / "huim" / f"{name}.huim", "wb") as fh:
            fh.write(write_hu_raw(sample.hu))
        save_png(encode_labels(sample.labels), out / "target" / f"{name}.png")
        ids.append(name)
    with open(out / "phantom.json", "w") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ids
