"""Morphology laws and exhaustive set-definition oracles."""

import numpy as np
import pytest

from cardiofat.errors import DimensionMismatch
from cardiofat.imaging import WindowedImage
from cardiofat.morphology import (
    CROSS,
    BinaryMask,
    StructuringElement,
    close,
    dilate,
    erode,
    load_mask_png,
    overlay,
    save_mask_png,
)


def oracle_dilate(bits, se):
    """Double-loop evaluation of the dilation definition with reflection."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            for dx, dy in se.offsets:
                qy, qx = y - dy, x - dx
                if 0 <= qy < h and 0 <= qx < w and bits[qy, qx]:
                    out[y, x] = 1
                    break
    return out


def oracle_erode(bits, se):
    """Double-loop evaluation of the erosion definition, out-of-bounds = 0."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            ok = True
            for dx, dy in se.offsets:
                qy, qx = y + dy, x + dx
                if not (0 <= qy < h and 0 <= qx < w) or not bits[qy, qx]:
                    ok = False
                    break
            out[y, x] = 1 if ok else 0
    return out


def random_mask(rng, h=8, w=8, p=0.5):
    return BinaryMask((rng.random((h, w)) < p).astype(np.uint8))


class TestDilate:
    def test_single_center_pixel_becomes_plus(self):
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[2, 2] = 1
        out = dilate(BinaryMask(bits), CROSS).bits
        expected = np.zeros((5, 5), dtype=np.uint8)
        for dy, dx in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]:
            expected[2 + dy, 2 + dx] = 1
        assert np.array_equal(out, expected)

    def test_empty_mask_stays_empty(self):
        empty = BinaryMask(np.zeros((6, 6), dtype=np.uint8))
        assert dilate(empty, CROSS) == empty

    def test_matches_oracle_on_random_masks(self):
        rng = np.random.default_rng(19)
        for _ in range(25):
            m = random_mask(rng)
            assert np.array_equal(dilate(m, CROSS).bits, oracle_dilate(m.bits, CROSS))

    def test_reflection_semantics_with_asymmetric_element(self):
        se = StructuringElement(frozenset({(0, 0), (1, 0)}))
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[2, 2] = 1
        out = dilate(BinaryMask(bits), se).bits
        # Minkowski sum: the pixel plus its translate by (dx=1, dy=0)
        expected = np.zeros((5, 5), dtype=np.uint8)
        expected[2, 2] = expected[2, 3] = 1
        assert np.array_equal(out, expected)
        assert np.array_equal(out, oracle_dilate(bits, se))


class TestErode:
    def test_full_mask_keeps_interior_only(self):
        full = BinaryMask(np.ones((6, 7), dtype=np.uint8))
        out = erode(full, CROSS).bits
        assert np.array_equal(out, oracle_erode(full.bits, CROSS))
        expected = np.zeros((6, 7), dtype=np.uint8)
        expected[1:-1, 1:-1] = 1
        assert np.array_equal(out, expected)

    def test_single_pixel_erodes_away(self):
        bits = np.zeros((5, 5), dtype=np.uint8)
        bits[2, 2] = 1
        assert erode(BinaryMask(bits), CROSS).popcount() == 0

    def test_erode_of_dilated_point_recovers_point(self):
        bits = np.zeros((7, 7), dtype=np.uint8)
        bits[3, 3] = 1
        m = BinaryMask(bits)
        assert erode(dilate(m, CROSS), CROSS) == m

    def test_matches_oracle_on_random_masks(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            m = random_mask(rng)
            assert np.array_equal(erode(m, CROSS).bits, oracle_erode(m.bits, CROSS))


class TestClose:
    def test_block_center_hole_filled(self):
        bits = np.zeros((7, 7), dtype=np.uint8)
        bits[1:6, 1:6] = 1
        bits[3, 3] = 0
        out = close(BinaryMask(bits), CROSS).bits
        expected = bits.copy()
        expected[3, 3] = 1
        assert np.array_equal(out, expected)

    def test_empty_mask_stays_empty(self):
        empty = BinaryMask(np.zeros((8, 8), dtype=np.uint8))
        assert close(empty, CROSS) == empty

    def test_extensive_including_border_pixels(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            m = random_mask(rng, 16, 16, p=0.3)
            closed = close(m, CROSS)
            assert np.all(closed.bits >= m.bits)

    def test_idempotent(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            m = random_mask(rng, 16, 16, p=0.4)
            once = close(m, CROSS)
            assert close(once, CROSS) == once

    def test_monotone(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            small = random_mask(rng, 12, 12, p=0.3)
            extra = random_mask(rng, 12, 12, p=0.2)
            big = BinaryMask(np.logical_or(small.bits, extra.bits))
            assert np.all(close(small, CROSS).bits <= close(big, CROSS).bits)

    def test_interior_translation_invariance(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            core = (rng.random((8, 8)) < 0.4).astype(np.uint8)
            bits = np.zeros((16, 16), dtype=np.uint8)
            bits[3:11, 3:11] = core  # support stays >= 2 pixels from borders
            shifted = np.roll(bits, (1, 1), axis=(0, 1))
            closed_then_shift = np.roll(close(BinaryMask(bits), CROSS).bits, (1, 1), axis=(0, 1))
            shift_then_closed = close(BinaryMask(shifted), CROSS).bits
            assert np.array_equal(closed_then_shift, shift_then_closed)


class TestOverlay:
    def test_empty_mask_gives_grayscale(self):
        rng = np.random.default_rng(47)
        ct = WindowedImage(rng.integers(0, 256, size=(4, 4), dtype=np.uint8))
        out = overlay(ct, BinaryMask(np.zeros((4, 4), dtype=np.uint8)))
        for c in range(3):
            assert np.array_equal(out.pixels[:, :, c], ct.intensities)

    def test_full_mask_gives_solid_color(self):
        ct = WindowedImage(np.zeros((3, 3), dtype=np.uint8))
        out = overlay(ct, BinaryMask(np.ones((3, 3), dtype=np.uint8)), color=(255, 0, 0))
        assert np.all(out.pixels[:, :, 0] == 255)
        assert np.all(out.pixels[:, :, 1:] == 0)

    def test_checkerboard_pixelwise(self):
        ct = WindowedImage(np.arange(16, dtype=np.uint8).reshape(4, 4) * 10)
        board = np.indices((4, 4)).sum(axis=0) % 2
        out = overlay(ct, BinaryMask(board.astype(np.uint8)), color=(0, 0, 255))
        for y in range(4):
            for x in range(4):
                if board[y, x]:
                    assert tuple(out.pixels[y, x]) == (0, 0, 255)
                else:
                    assert tuple(out.pixels[y, x]) == (ct.intensities[y, x],) * 3

    def test_dimension_mismatch(self):
        ct = WindowedImage(np.zeros((3, 3), dtype=np.uint8))
        with pytest.raises(DimensionMismatch):
            overlay(ct, BinaryMask(np.zeros((4, 4), dtype=np.uint8)))


def test_mask_png_roundtrip(tmp_path):
    rng = np.random.default_rng(53)
    m = random_mask(rng, 10, 14)
    path = tmp_path / "mask.png"
    save_mask_png(m, path)
    assert load_mask_png(path) == m
