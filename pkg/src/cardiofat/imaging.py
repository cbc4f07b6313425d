"""CT attenuation ingestion, Hounsfield windowing, and label/color mask codecs.

Images are numpy arrays in row-major order with the origin at the top-left
pixel; ``width`` is the number of columns and ``height`` the number of rows.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    InvalidSize,
    InvalidWindow,
    MalformedHeader,
    TruncatedPayload,
)

# Display window used throughout: brackets the adipose band (fat sits near
# -100..-50 HU) and fits an 8-bit image without interpolation.
WINDOW_LO = -200
WINDOW_HI = -30

HUIM_MAGIC = b"HUIM"
HUIM_VERSION = 1


class Label(IntEnum):
    BACKGROUND = 0
    EPICARDIAL = 1
    MEDIASTINAL = 2
    PERICARDIUM = 3


FOREGROUND_LABELS = (Label.EPICARDIAL, Label.MEDIASTINAL, Label.PERICARDIUM)

# Ties in nearest-palette decoding resolve in this fixed order.
DECODE_TIE_ORDER = (
    Label.BACKGROUND,
    Label.PERICARDIUM,
    Label.MEDIASTINAL,
    Label.EPICARDIAL,
)


@dataclass(frozen=True)
class Palette:
    """RGB triple per segmentation class."""

    background: tuple = (0, 0, 0)
    epicardial: tuple = (255, 0, 0)
    mediastinal: tuple = (0, 255, 0)
    pericardium: tuple = (0, 0, 255)

    def __post_init__(self):
        triples = [self.background, self.epicardial, self.mediastinal, self.pericardium]
        if len(set(triples)) != 4:
            raise ValueError("palette triples must be pairwise distinct")

    def color_of(self, label):
        return (self.background, self.epicardial, self.mediastinal, self.pericardium)[
            Label(label)
        ]

    def as_array(self):
        """4x3 uint8 array indexed by Label value."""
        return np.array(
            [self.background, self.epicardial, self.mediastinal, self.pericardium],
            dtype=np.uint8,
        )


CANONICAL_PALETTE = Palette()


@dataclass
class HuImage:
    """Signed CT attenuation grid in Hounsfield Units."""

    values: np.ndarray  # (H, W) int16

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int16)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("HU grid must be 2-D and non-empty")

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, HuImage):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.all(self.values == other.values)
        )


@dataclass
class WindowedImage:
    """8-bit windowed form of a HU grid."""

    intensities: np.ndarray  # (H, W) uint8
    window_lo: int = WINDOW_LO
    window_hi: int = WINDOW_HI

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.uint8)
        if self.intensities.ndim != 2 or self.intensities.size == 0:
            raise ValueError("intensity grid must be 2-D and non-empty")
        if self.window_lo >= self.window_hi:
            raise InvalidWindow(f"window [{self.window_lo}, {self.window_hi}]")

    @property
    def width(self):
        return self.intensities.shape[1]

    @property
    def height(self):
        return self.intensities.shape[0]

    def __eq__(self, other):
        if not isinstance(other, WindowedImage):
            return NotImplemented
        return (
            self.intensities.shape == other.intensities.shape
            and (self.window_lo, self.window_hi) == (other.window_lo, other.window_hi)
            and bool(np.all(self.intensities == other.intensities))
        )


@dataclass
class LabelMap:
    """Per-pixel class grid over the four segmentation classes."""

    labels: np.ndarray  # (H, W) uint8 with values in Label

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.labels.ndim != 2 or self.labels.size == 0:
            raise ValueError("label grid must be 2-D and non-empty")
        if self.labels.max(initial=0) > max(Label):
            raise ValueError("label grid holds values outside the class set")

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(
            np.all(self.labels == other.labels)
        )


@dataclass
class ColorMask:
    """24-bit RGB mask grid."""

    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3 or self.pixels.size == 0:
            raise ValueError("color mask must be (H, W, 3) and non-empty")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ColorMask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.all(self.pixels == other.pixels)
        )


def round_half_up(x):
    """Round with ties away from zero toward +inf, for non-negative input."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def read_hu_raw(data: bytes) -> HuImage:
    """Decode a HUIM container: magic 'HUIM', version 0x01, u32le width,
    u32le height, then width*height little-endian signed 16-bit values."""
    if len(data) < 13:
        raise MalformedHeader("container shorter than the 13-byte header")
    if data[:4] != HUIM_MAGIC:
        raise MalformedHeader(f"bad magic {data[:4]!r}")
    if data[4] != HUIM_VERSION:
        raise MalformedHeader(f"unsupported version {data[4]}")
    width, height = struct.unpack_from("<II", data, 5)
    if width == 0 or height == 0:
        raise MalformedHeader(f"zero dimension {width}x{height}")
    need = width * height * 2
    payload = data[13:]
    if len(payload) < need:
        raise TruncatedPayload(f"payload {len(payload)} bytes, expected {need}")
    if len(payload) > need:
        raise MalformedHeader(f"{len(payload) - need} trailing bytes")
    values = np.frombuffer(payload, dtype="<i2").reshape(height, width)
    return HuImage(values.astype(np.int16))


def write_hu_raw(img: HuImage) -> bytes:
    """Encode a HuImage into the HUIM container format."""
    header = HUIM_MAGIC + bytes([HUIM_VERSION]) + struct.pack("<II", img.width, img.height)
    return header + img.values.astype("<i2").tobytes()


def window_hu(img: HuImage, lo: int = WINDOW_LO, hi: int = WINDOW_HI) -> WindowedImage:
    """Clamp HU values to [lo, hi] and rescale to 8 bits.

    intensity = round_half_up((clamp(v, lo, hi) - lo) * 255 / (hi - lo));
    everything at or below lo maps to 0 and at or above hi to 255.
    """
    if lo >= hi:
        raise InvalidWindow(f"window [{lo}, {hi}]")
    v = np.clip(img.values.astype(np.float64), lo, hi)
    scaled = round_half_up((v - lo) * 255.0 / (hi - lo))
    return WindowedImage(scaled.astype(np.uint8), window_lo=lo, window_hi=hi)


def encode_labels(labels: LabelMap, palette: Palette = CANONICAL_PALETTE) -> ColorMask:
    """Paint each pixel with the palette triple of its class."""
    return ColorMask(palette.as_array()[labels.labels])


def decode_colors(mask: ColorMask, palette: Palette = CANONICAL_PALETTE) -> LabelMap:
    """Map each RGB pixel to the class with the nearest palette triple.

    Distance is squared Euclidean in RGB; ties resolve in the fixed order
    Background < Pericardium < Mediastinal < Epicardial.
    """
    rgb = mask.pixels.astype(np.int64)
    candidates = np.array(
        [palette.color_of(lab) for lab in DECODE_TIE_ORDER], dtype=np.int64
    )
    # (H, W, 4): distance to each candidate, in tie order so argmin breaks ties.
    d2 = ((rgb[:, :, None, :] - candidates[None, None, :, :]) ** 2).sum(axis=3)
    order = np.array([int(lab) for lab in DECODE_TIE_ORDER], dtype=np.uint8)
    return LabelMap(order[np.argmin(d2, axis=2)])


def _resize_plane(plane, out_w, out_h):
    """Bilinear resampling of one 2-D uint8 plane at half-pixel centers."""
    in_h, in_w = plane.shape
    src_x = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0, in_w - 1)
    src_y = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0, in_h - 1)
    x0 = np.floor(src_x).astype(np.intp)
    y0 = np.floor(src_y).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = src_x - x0
    fy = src_y - y0
    p = plane.astype(np.float64)
    top = p[y0[:, None], x0[None, :]] * (1 - fx) + p[y0[:, None], x1[None, :]] * fx
    bot = p[y1[:, None], x0[None, :]] * (1 - fx) + p[y1[:, None], x1[None, :]] * fx
    out = top * (1 - fy[:, None]) + bot * fy[:, None]
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def resize_bilinear(img, out_w: int, out_h: int):
    """Resize a WindowedImage or ColorMask with half-pixel-center bilinear
    interpolation. Returns the same kind of image."""
    if out_w < 1 or out_h < 1:
        raise InvalidSize(f"target {out_w}x{out_h}")
    if isinstance(img, WindowedImage):
        return WindowedImage(
            _resize_plane(img.intensities, out_w, out_h),
            window_lo=img.window_lo,
            window_hi=img.window_hi,
        )
    if isinstance(img, ColorMask):
        planes = [_resize_plane(img.pixels[:, :, c], out_w, out_h) for c in range(3)]
        return ColorMask(np.stack(planes, axis=2))
    raise TypeError(f"cannot resize {type(img).__name__}")


def gray_to_rgb(img: WindowedImage) -> ColorMask:
    """Replicate a grayscale image across the three RGB channels."""
    return ColorMask(np.repeat(img.intensities[:, :, None], 3, axis=2))


def save_png(img, path):
    """Write a WindowedImage as 8-bit grayscale PNG or a ColorMask as 24-bit RGB PNG."""
    if isinstance(img, WindowedImage):
        Image.fromarray(img.intensities, mode="L").save(path, format="PNG")
    elif isinstance(img, ColorMask):
        Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")
    else:
        raise TypeError(f"cannot save {type(img).__name__}")


def load_windowed_png(path, window_lo=WINDOW_LO, window_hi=WINDOW_HI) -> WindowedImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return WindowedImage(arr, window_lo=window_lo, window_hi=window_hi)


def load_color_png(path) -> ColorMask:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return ColorMask(arr)
