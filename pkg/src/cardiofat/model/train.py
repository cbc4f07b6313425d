"""Deterministic adversarial training and inference.

One batch takes one discriminator step followed by one generator step; the
generator step scores its output against the freshly updated discriminator.
Everything random (weight init, epoch shuffling, augmentation draws,
dropout) flows from the seed in the config, so sequential runs with equal
seeds produce bit-identical checkpoints.
"""

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..datasetprep import AugmentConfig, augment, decompose_pair
from ..errors import ConfigInvalid, EmptyDataset, ShapeError
from ..imaging import ColorMask, WindowedImage, resize_bilinear, round_half_up
from .checkpoint import Checkpoint
from .losses import bce_with_logits, bce_with_logits_grad, l1_mean, l1_mean_grad
from .networks import PRESETS, build_discriminator, build_generator
from .optim import Adam

LOAD_OVER_CROP = 286 / 256  # the stock load/crop proportion

# Regression targets sit at 0.9 * [-1, 1]: pinning them onto tanh's
# asymptotes stalls minority structures once the channel saturates, since
# the L1 sign gradient cannot climb back through a near-zero tanh slope.
TARGET_SCALE = 0.9


def scaled_load_size(crop_size: int) -> int:
    """Load size proportional to the stock 286/256 pairing."""
    return int(round(crop_size * LOAD_OVER_CROP))


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 4
    learning_rate: float = 2e-4
    l1_weight: float = 100.0
    seed: int = 0
    load_size: int = 72
    crop_size: int = 64
    flip_enabled: bool = True
    flip_probability: float = 0.5
    preset: str = "toy"
    in_channels: int = 1
    out_channels: int = 3

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigInvalid(f"epochs {self.epochs}, batch {self.batch_size}")
        if self.learning_rate <= 0 or self.l1_weight < 0:
            raise ConfigInvalid("learning rate must be positive, l1 weight nonnegative")
        if self.preset not in PRESETS:
            raise ConfigInvalid(f"unknown preset {self.preset!r}")
        div = 2 ** PRESETS[self.preset].depth
        if self.crop_size % div:
            raise ConfigInvalid(f"crop {self.crop_size} not divisible by {div}")
        if self.load_size < self.crop_size:
            raise ConfigInvalid(f"load {self.load_size} < crop {self.crop_size}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def _to_unit(arr):
    return arr.astype(np.float32) / 127.5 - 1.0


def pair_to_tensors(pair, out_channels, dtype=np.float32):
    """(input, target) tensors shaped (1, C, H, W); the input spans [-1, 1]
    and the target is compressed to TARGET_SCALE * [-1, 1]."""
    left, right = decompose_pair(pair)
    x = _to_unit(right.pixels[:, :, 0])[None, None].astype(dtype)
    if out_channels == 3:
        t = _to_unit(left.pixels).transpose(2, 0, 1)[None]
    else:
        t = _to_unit(left.pixels[:, :, 0])[None, None]
    return x, (t * TARGET_SCALE).astype(dtype)


def _eval_transform(pair, crop_size):
    """Deterministic validation-time transform: resize both halves to crop."""
    left, right = decompose_pair(pair)
    left = resize_bilinear(left, crop_size, crop_size)
    right = resize_bilinear(right, crop_size, crop_size)
    composite = np.concatenate([left.pixels, right.pixels], axis=1)
    from ..datasetprep import PairedSample

    return PairedSample(ColorMask(composite))


def _batch(pairs, cfg, aug_cfg, rng):
    xs, ts = [], []
    for pair in pairs:
        sample = augment(pair, aug_cfg, rng)
        x, t = pair_to_tensors(sample, cfg.out_channels)
        xs.append(x)
        ts.append(t)
    return np.concatenate(xs, axis=0), np.concatenate(ts, axis=0)


def validation_l1(generator, pairs, cfg):
    """Mean L1 between generated and target halves of unaugmented pairs."""
    if not pairs:
        return None
    total = 0.0
    for pair in pairs:
        x, t = pair_to_tensors(_eval_transform(pair, cfg.crop_size), cfg.out_channels)
        fake, _ = generator.forward(x, train=False)
        total += l1_mean(fake, t)
    return total / len(pairs)


def train(dataset, cfg: TrainConfig, val_dataset=()) -> Checkpoint:
    """Train the conditional pair on PairedSamples; deterministic per seed."""
    dataset = list(dataset)
    if not dataset:
        raise EmptyDataset("no training pairs")
    val_dataset = list(val_dataset)
    preset = PRESETS[cfg.preset]

    generator = build_generator(
        preset, in_channels=cfg.in_channels, out_channels=cfg.out_channels, seed=cfg.seed
    )
    discriminator = build_discriminator(
        preset, in_channels=cfg.in_channels, cand_channels=cfg.out_channels, seed=cfg.seed + 1
    )
    opt_g = Adam(generator.weights, lr=cfg.learning_rate)
    opt_d = Adam(discriminator.weights, lr=cfg.learning_rate)
    loop_rng = np.random.default_rng(cfg.seed + 2)
    aug_rng = np.random.default_rng(cfg.seed + 3)
    drop_rng = np.random.default_rng(cfg.seed + 4)
    aug_cfg = AugmentConfig(
        flip_enabled=cfg.flip_enabled,
        load_size=cfg.load_size,
        crop_size=cfg.crop_size,
        flip_probability=cfg.flip_probability,
    )

    history = []
    n = len(dataset)
    for epoch in range(1, cfg.epochs + 1):
        order = loop_rng.permutation(n)
        sums = {"g_loss": 0.0, "d_loss": 0.0, "l1": 0.0}
        batches = 0
        for start in range(0, n, cfg.batch_size):
            chunk = [dataset[i] for i in order[start : start + cfg.batch_size]]
            x, target = _batch(chunk, cfg, aug_cfg, aug_rng)

            fake, gcache = generator.forward(x, train=True, rng=drop_rng)

            # discriminator step on (real, detached fake)
            discriminator.zero_grads()
            real_logits, cache_r = discriminator.forward(x, target)
            fake_logits, cache_f = discriminator.forward(x, fake)
            d_loss = 0.5 * (
                bce_with_logits(real_logits, 1.0) + bce_with_logits(fake_logits, 0.0)
            )
            discriminator.backward(0.5 * bce_with_logits_grad(real_logits, 1.0), cache_r)
            discriminator.backward(0.5 * bce_with_logits_grad(fake_logits, 0.0), cache_f)
            opt_d.step(discriminator.grads())

            # generator step against the updated discriminator
            generator.zero_grads()
            discriminator.zero_grads()
            fake_logits, cache_f = discriminator.forward(x, fake)
            adv = bce_with_logits(fake_logits, 1.0)
            l1 = l1_mean(fake, target)
            g_loss = adv + cfg.l1_weight * l1
            _, d_fake = discriminator.backward(
                bce_with_logits_grad(fake_logits, 1.0), cache_f
            )
            generator.backward(
                d_fake + cfg.l1_weight * l1_mean_grad(fake, target), gcache
            )
            opt_g.step(generator.grads())

            sums["g_loss"] += g_loss
            sums["d_loss"] += d_loss
            sums["l1"] += l1
            batches += 1

        record = {"epoch": epoch}
        record.update({k: v / batches for k, v in sums.items()})
        val = validation_l1(generator, val_dataset, cfg)
        if val is not None:
            record["val_l1"] = val
        history.append(record)

    generator.zero_grads()
    discriminator.zero_grads()
    return Checkpoint(
        generator=generator,
        discriminator=discriminator,
        config=cfg.to_dict(),
        epoch=cfg.epochs,
        history=history,
    )


def segment(ckpt: Checkpoint, img: WindowedImage) -> ColorMask:
    """Translate a windowed CT image into an RGB mask image.

    The input is normalized to [-1, 1], run through the generator with
    stochastic layers off, and rescaled to 8 bits. One-channel generators
    yield a grayscale mask replicated across RGB.
    """
    x = _to_unit(img.intensities)[None, None]
    fake, _ = ckpt.generator.forward(x, train=False)
    rgb = np.clip(round_half_up((fake[0] / TARGET_SCALE + 1.0) * 127.5), 0, 255).astype(
        np.uint8
    )
    if rgb.shape[0] == 1:
        rgb = np.repeat(rgb, 3, axis=0)
    elif rgb.shape[0] != 3:
        raise ShapeError(f"cannot render {rgb.shape[0]}-channel output as RGB")
    return ColorMask(rgb.transpose(1, 2, 0))
