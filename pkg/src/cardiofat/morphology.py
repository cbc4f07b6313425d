"""Binary morphology post-processing: dilation, erosion, closing, recoloring.

Offsets are (dx, dy) pairs with dx counting columns to the right and dy
counting rows downward. Standalone dilation and erosion read out-of-bounds
pixels as 0. Closing is evaluated on a zero-padded canvas wide enough for
the structuring element and then cropped back, which is the plain-grid
closing restricted to the image window; this keeps closing extensive,
idempotent, and monotone even for masks touching the border.
"""

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DimensionMismatch
from .imaging import ColorMask, WindowedImage


@dataclass(frozen=True)
class StructuringElement:
    offsets: frozenset  # of (dx, dy) int pairs

    def __post_init__(self):
        object.__setattr__(self, "offsets", frozenset(tuple(o) for o in self.offsets))
        if (0, 0) not in self.offsets:
            raise ValueError("structuring element must contain (0, 0)")

    def reflected(self):
        return StructuringElement(frozenset((-dx, -dy) for dx, dy in self.offsets))

    @property
    def extent(self):
        """(max |dx|, max |dy|) over the offsets."""
        return (
            max(abs(dx) for dx, _ in self.offsets),
            max(abs(dy) for _, dy in self.offsets),
        )


CROSS = StructuringElement(frozenset({(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}))


@dataclass
class BinaryMask:
    bits: np.ndarray  # (H, W) over {0, 1}

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.size == 0:
            raise ValueError("mask must be 2-D and non-empty")
        self.bits = (bits != 0).astype(np.uint8)

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def height(self):
        return self.bits.shape[0]

    def popcount(self):
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.all(self.bits == other.bits))


def _shift(bits, dy, dx):
    """Translate a 0/1 grid by (dy, dx) filling with zeros."""
    out = np.zeros_like(bits)
    h, w = bits.shape
    ys = slice(max(dy, 0), min(h, h + dy))
    xs = slice(max(dx, 0), min(w, w + dx))
    yd = slice(max(-dy, 0), min(h, h - dy))
    xd = slice(max(-dx, 0), min(w, w - dx))
    out[ys, xs] = bits[yd, xd]
    return out


def _dilate_bits(bits, se):
    out = np.zeros_like(bits)
    for dx, dy in se.offsets:
        np.logical_or(out, _shift(bits, dy, dx), out=out)
    return out.astype(np.uint8)


def _erode_bits(bits, se):
    out = np.ones_like(bits)
    for dx, dy in se.offsets:
        np.logical_and(out, _shift(bits, -dy, -dx), out=out)
    return out.astype(np.uint8)


def dilate(m: BinaryMask, se: StructuringElement = CROSS) -> BinaryMask:
    """Set p when some pixel of m lies under the reflected element at p."""
    return BinaryMask(_dilate_bits(m.bits, se))


def erode(m: BinaryMask, se: StructuringElement = CROSS) -> BinaryMask:
    """Keep p only when every element offset from p lands on a set pixel."""
    return BinaryMask(_erode_bits(m.bits, se))


def close(m: BinaryMask, se: StructuringElement = CROSS) -> BinaryMask:
    """Dilation followed by erosion; fills holes smaller than the element."""
    pad_x, pad_y = se.extent
    padded = np.pad(m.bits, ((pad_y, pad_y), (pad_x, pad_x)))
    closed = _erode_bits(_dilate_bits(padded, se), se)
    h, w = m.bits.shape
    return BinaryMask(closed[pad_y : pad_y + h, pad_x : pad_x + w])


def overlay(ct: WindowedImage, m: BinaryMask, color=(255, 0, 0)) -> ColorMask:
    """Paint mask pixels with a solid color on top of the grayscale CT."""
    if (ct.height, ct.width) != (m.height, m.width):
        raise DimensionMismatch(
            f"ct {ct.width}x{ct.height} vs mask {m.width}x{m.height}"
        )
    out = np.repeat(ct.intensities[:, :, None], 3, axis=2)
    out[m.bits == 1] = np.asarray(color, dtype=np.uint8)
    return ColorMask(out)


def save_mask_png(m: BinaryMask, path):
    """Write a mask as 8-bit grayscale PNG with 0 -> 0 and 1 -> 255."""
    Image.fromarray(m.bits * np.uint8(255), mode="L").save(path, format="PNG")


def load_mask_png(path) -> BinaryMask:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return BinaryMask((arr >= 128).astype(np.uint8))
