"""Paired-sample construction, patching, splits, and training augmentation."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadRatios,
    CropLargerThanLoad,
    DimensionMismatch,
    OddDimensions,
    OddWidth,
    PatchCountMismatch,
)
from .imaging import ColorMask, WindowedImage, gray_to_rgb, resize_bilinear
from .morphology import BinaryMask

# Exact per-set fractions behind the published 562/169/112 allocation of the
# 843-image clinical set.
TABLE2_RATIOS = (562 / 843, 169 / 843, 112 / 843)


@dataclass
class PairedSample:
    """Side-by-side composite: target (B) on the left, input (A) on the right."""

    composite: ColorMask

    def __post_init__(self):
        if self.composite.width % 2 != 0:
            raise OddWidth(f"composite width {self.composite.width}")

    @property
    def half_width(self):
        return self.composite.width // 2

    @property
    def height(self):
        return self.composite.height

    def __eq__(self, other):
        if not isinstance(other, PairedSample):
            return NotImplemented
        return self.composite == other.composite


@dataclass(frozen=True)
class SplitSpec:
    train_ids: tuple
    val_ids: tuple
    test_ids: tuple
    seed: int

    def __post_init__(self):
        sets = [set(self.train_ids), set(self.val_ids), set(self.test_ids)]
        total = len(self.train_ids) + len(self.val_ids) + len(self.test_ids)
        if len(sets[0] | sets[1] | sets[2]) != total:
            raise ValueError("split partitions overlap or repeat ids")

    @property
    def sizes(self):
        return (len(self.train_ids), len(self.val_ids), len(self.test_ids))

    def all_ids(self):
        return self.train_ids + self.val_ids + self.test_ids


@dataclass(frozen=True)
class AugmentConfig:
    flip_enabled: bool = True
    load_size: int = 286
    crop_size: int = 256
    flip_probability: float = 0.5

    def __post_init__(self):
        if not (self.load_size >= self.crop_size >= 1):
            raise CropLargerThanLoad(
                f"load {self.load_size} < crop {self.crop_size}"
            )
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip probability outside [0, 1]")


@dataclass(frozen=True)
class AugmentParams:
    """One drawn transform, applied identically to both halves."""

    flip: bool
    offset_x: int
    offset_y: int


@dataclass
class PatchGrid:
    """Exactly four equal patches in top-left, top-right, bottom-left,
    bottom-right order."""

    patches: list

    def __post_init__(self):
        if len(self.patches) != 4:
            raise PatchCountMismatch(f"{len(self.patches)} patches, need 4")
        dims = {(p.width, p.height) for p in self.patches}
        if len(dims) != 1:
            raise DimensionMismatch(f"patch dims differ: {sorted(dims)}")


def compose_pair(target: ColorMask, input_img: WindowedImage) -> PairedSample:
    """Juxtapose target (left) and the gray input replicated to RGB (right)."""
    if (target.height, target.width) != (input_img.height, input_img.width):
        raise DimensionMismatch(
            f"target {target.width}x{target.height} vs "
            f"input {input_img.width}x{input_img.height}"
        )
    right = gray_to_rgb(input_img)
    composite = np.concatenate([target.pixels, right.pixels], axis=1)
    return PairedSample(ColorMask(composite))


def decompose_pair(p: PairedSample):
    """Return (left half, right half) of the composite, unmodified."""
    w = p.half_width
    return (
        ColorMask(p.composite.pixels[:, :w].copy()),
        ColorMask(p.composite.pixels[:, w:].copy()),
    )


def split_patches(img, grid=(2, 2)) -> PatchGrid:
    """Quarter an image into TL, TR, BL, BR patches of (W/2)x(H/2)."""
    if grid != (2, 2):
        raise ValueError("only the 2x2 grid is supported")
    if img.width % 2 != 0 or img.height % 2 != 0:
        raise OddDimensions(f"{img.width}x{img.height}")
    arr = img.pixels if isinstance(img, ColorMask) else img.intensities
    h2, w2 = img.height // 2, img.width // 2
    quads = [
        arr[:h2, :w2],
        arr[:h2, w2:],
        arr[h2:, :w2],
        arr[h2:, w2:],
    ]
    if isinstance(img, ColorMask):
        return PatchGrid([ColorMask(q.copy()) for q in quads])
    return PatchGrid(
        [
            WindowedImage(q.copy(), window_lo=img.window_lo, window_hi=img.window_hi)
            for q in quads
        ]
    )


def reassemble_patches(grid: PatchGrid):
    """Exact inverse of split_patches."""
    tl, tr, bl, br = grid.patches
    if isinstance(tl, ColorMask):
        top = np.concatenate([tl.pixels, tr.pixels], axis=1)
        bottom = np.concatenate([bl.pixels, br.pixels], axis=1)
        return ColorMask(np.concatenate([top, bottom], axis=0))
    top = np.concatenate([tl.intensities, tr.intensities], axis=1)
    bottom = np.concatenate([bl.intensities, br.intensities], axis=1)
    return WindowedImage(
        np.concatenate([top, bottom], axis=0),
        window_lo=tl.window_lo,
        window_hi=tl.window_hi,
    )


def binarize_class(labels, cls) -> BinaryMask:
    """1 where the label equals cls, 0 elsewhere."""
    return BinaryMask((labels.labels == int(cls)).astype(np.uint8))


def make_split(ids, ratios, seed: int) -> SplitSpec:
    """Shuffle ids with a seeded generator and partition by the given ratios.

    Train takes floor(n * r_train) ids, validation floor(n * r_val), and the
    test set takes the remainder. A small epsilon guards the floor against
    ratios that are exact in intent but inexact in floating point.
    """
    ids = list(ids)
    if not ids:
        raise ValueError("no ids to split")
    r_train, r_val, r_test = ratios
    if min(r_train, r_val, r_test) < 0 or abs(r_train + r_val + r_test - 1.0) > 1e-9:
        raise BadRatios(f"ratios {ratios} do not sum to 1")
    n = len(ids)
    order = np.random.default_rng(seed).permutation(n)
    shuffled = [ids[i] for i in order]
    n_train = math.floor(n * r_train + 1e-9)
    n_val = math.floor(n * r_val + 1e-9)
    return SplitSpec(
        train_ids=tuple(shuffled[:n_train]),
        val_ids=tuple(shuffled[n_train : n_train + n_val]),
        test_ids=tuple(shuffled[n_train + n_val :]),
        seed=seed,
    )


def hflip_mask(mask: ColorMask) -> ColorMask:
    return ColorMask(mask.pixels[:, ::-1].copy())


def draw_augment_params(cfg: AugmentConfig, rng) -> AugmentParams:
    """Draw flip then crop offsets from the stream, in that fixed order."""
    flip = bool(cfg.flip_enabled and rng.random() < cfg.flip_probability)
    span = cfg.load_size - cfg.crop_size + 1
    offset_x = int(rng.integers(0, span))
    offset_y = int(rng.integers(0, span))
    return AugmentParams(flip=flip, offset_x=offset_x, offset_y=offset_y)


def apply_augment(sample: PairedSample, params: AugmentParams, cfg: AugmentConfig) -> PairedSample:
    """Apply one drawn transform to both halves of a pair."""
    left, right = decompose_pair(sample)
    halves = []
    for half in (left, right):
        if params.flip:
            half = hflip_mask(half)
        half = resize_bilinear(half, cfg.load_size, cfg.load_size)
        window = half.pixels[
            params.offset_y : params.offset_y + cfg.crop_size,
            params.offset_x : params.offset_x + cfg.crop_size,
        ]
        halves.append(ColorMask(window.copy()))
    return PairedSample(ColorMask(np.concatenate([h.pixels for h in halves], axis=1)))


def augment(sample: PairedSample, cfg: AugmentConfig, rng) -> PairedSample:
    """Seeded flip + resize-to-load + shared random crop-to-crop of a pair."""
    return apply_augment(sample, draw_augment_params(cfg, rng), cfg)
