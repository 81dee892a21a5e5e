"""Toy perceptual fingerprint (block-mean / average-hash family).

The pipeline is: bilinear resample to 64x64, split into an 8x8 grid of 8x8
blocks, emit bit ``i`` = 1 iff the mean of block ``i`` exceeds the global
mean (ties give 0). Bits are row-major over the block grid, most significant
bit first.

Resampling uses half-pixel-centred bilinear interpolation with edge clamping.
All weights are rationals with denominator ``2 * dst``, so the whole chain is
carried out in integers and the threshold comparison is exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

HASH_SIDE = 64
GRID = 8
BLOCK = HASH_SIDE // GRID
DERIVATIVE_SIDE = 16
MIN_SIDE = 8


class ImageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Image:
    """Grayscale image; ``pixels`` is a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ImageError("pixels must be a 2-D array")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ImageError("pixel values must lie in 0..255")
            px = px.astype(np.uint8)
        h, w = px.shape
        if h < MIN_SIDE or w < MIN_SIDE:
            raise ImageError(f"image {w}x{h} is smaller than {MIN_SIDE}x{MIN_SIDE}")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> Image:
        if len(data) != width * height:
            raise ImageError(f"expected {width * height} bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True, order=True)
class Fingerprint:
    """64-bit exact-match image identifier."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value < 1 << 64:
            raise ValueError("fingerprint must fit in 64 bits")

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(8, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> Fingerprint:
        if len(data) != 8:
            raise ValueError("fingerprint is exactly 8 bytes")
        return cls(int.from_bytes(data, "big"))

    @classmethod
    def from_bits(cls, bits) -> Fingerprint:
        v = 0
        for b in np.asarray(bits, dtype=np.uint8).ravel():
            v = (v << 1) | int(b)
        return cls(v)

    def bits(self) -> np.ndarray:
        """Bits as an 8x8 array in block-grid order."""
        return np.array([(self.value >> (63 - i)) & 1 for i in range(64)], dtype=np.uint8).reshape(GRID, GRID)

    def __str__(self):
        return f"{self.value:016x}"


@lru_cache(maxsize=64)
def _axis_taps(src: int, dst: int) -> tuple:
    """Two-tap integer bilinear weights for one axis.

    Returns ``(i0, i1, w0, w1)`` arrays of length ``dst`` with
    ``w0 + w1 == 2 * dst``.
    """
    denom = 2 * dst
    i0 = np.empty(dst, dtype=np.intp)
    i1 = np.empty(dst, dtype=np.intp)
    w1 = np.empty(dst, dtype=np.int64)
    for i in range(dst):
        # source coordinate scaled by 2*dst: (i + 0.5) * src / dst - 0.5
        num = (2 * i + 1) * src - dst
        if num <= 0:
            lo, frac = 0, 0
        else:
            lo, frac = divmod(num, denom)
        if lo >= src - 1:
            lo, frac = src - 1, 0
        i0[i] = lo
        i1[i] = min(lo + 1, src - 1)
        w1[i] = frac
    w0 = denom - w1
    for arr in (i0, i1, w0, w1):
        arr.setflags(write=False)
    return i0, i1, w0, w1


def resample_scaled(pixels: np.ndarray, out_h: int, out_w: int) -> tuple:
    """Bilinear resample returning ``(scaled_int_image, scale)``.

    The real-valued result equals ``scaled_int_image / scale`` exactly.
    """
    px = np.asarray(pixels, dtype=np.int64)
    h, w = px.shape
    y0, y1, wy0, wy1 = _axis_taps(h, out_h)
    x0, x1, wx0, wx1 = _axis_taps(w, out_w)
    rows = wy0[:, None] * px[y0] + wy1[:, None] * px[y1]
    out = rows[:, x0] * wx0[None, :] + rows[:, x1] * wx1[None, :]
    return out, (2 * out_h) * (2 * out_w)


def influence_weights(src: int, dst: int) -> np.ndarray:
    """Dense (dst, src) matrix of the integer weights used on one axis."""
    i0, i1, w0, w1 = _axis_taps(src, dst)
    m = np.zeros((dst, src), dtype=np.int64)
    np.add.at(m, (np.arange(dst), i0), w0)
    np.add.at(m, (np.arange(dst), i1), w1)
    return m


def block_sums(pixels: np.ndarray) -> np.ndarray:
    """Exact scaled 8x8 block sums of the 64x64 resample (integers)."""
    small, _ = resample_scaled(pixels, HASH_SIDE, HASH_SIDE)
    return small.reshape(GRID, BLOCK, GRID, BLOCK).sum(axis=(1, 3))


def fingerprint_bits(pixels: np.ndarray) -> np.ndarray:
    sums = block_sums(pixels)
    # block_mean > global_mean  <=>  sum_b * n_blocks > total
    return (sums * (GRID * GRID) > sums.sum()).astype(np.uint8)


def compute_fingerprint(img: Image) -> Fingerprint:
    return Fingerprint.from_bits(fingerprint_bits(img.pixels))


def make_visual_derivative(img: Image) -> bytes:
    """16x16 bilinear thumbnail, 256 bytes row-major, round half up."""
    out, scale = resample_scaled(img.pixels, DERIVATIVE_SIDE, DERIVATIVE_SIDE)
    return ((out + scale // 2) // scale).astype(np.uint8).tobytes()


def hamming(a: Fingerprint, b: Fingerprint) -> int:
    return bin(a.value ^ b.value).count("1")


_PGM_HEADER = re.compile(rb"P5(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def read_pgm(path) -> Image:
    """Read a binary (P5) portable graymap with maxval <= 255."""
    data = Path(path).read_bytes()
    m = _PGM_HEADER.match(data)
    if not m:
        raise ImageError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval > 255:
        raise ImageError(f"{path}: 16-bit PGM not supported")
    body = data[m.end() : m.end() + w * h]
    return Image.from_bytes(w, h, body)


def write_pgm(path, img: Image) -> None:
    header = b"P5\n%d %d\n255\n" % (img.width, img.height)
    Path(path).write_bytes(header + img.to_bytes())
