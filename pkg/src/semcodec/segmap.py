"""Segmentation maps, regions, RGB images and the SMAP file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import BadMagic, DimensionMismatch, LabelOutOfRange, TruncatedStream, UnsupportedVersion

SMAP_MAGIC = b"SMAP"
SMAP_VERSION = 1
_SMAP_HEADER = struct.Struct("<4sBIIH")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SegMap:
    """Dense label grid; ``labels`` is an (height, width) int32 array."""

    width: int
    height: int
    num_classes: int
    labels: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, SegMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.num_classes == other.num_classes
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    @property
    def num_pixels(self) -> int:
        return self.width * self.height

    def to_bytes(self) -> bytes:
        head = _SMAP_HEADER.pack(SMAP_MAGIC, SMAP_VERSION, self.width, self.height, self.num_classes)
        return head + self.labels.astype("<u2").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SegMap":
        if len(data) < _SMAP_HEADER.size:
            raise TruncatedStream("SMAP header truncated")
        magic, version, w, h, ncls = _SMAP_HEADER.unpack_from(data)
        if magic != SMAP_MAGIC:
            raise BadMagic(f"not a SMAP file (magic {magic!r})")
        if version != SMAP_VERSION:
            raise UnsupportedVersion(f"SMAP version {version}")
        body = data[_SMAP_HEADER.size:]
        if len(body) != 2 * w * h:
            raise TruncatedStream(f"SMAP body has {len(body)} bytes, expected {2 * w * h}")
        labels = np.frombuffer(body, dtype="<u2")
        return new_segmap(w, h, ncls, labels)


@dataclass(frozen=True)
class Region:
    region_id: int
    label: int
    pixel_count: int
    seed: tuple[int, int]


@dataclass(frozen=True, eq=False)
class RegionSet:
    """Regions plus the per-pixel region-id grid they were derived from."""

    regions: tuple[Region, ...]
    ids: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.regions)

    def __eq__(self, other):
        if not isinstance(other, RegionSet):
            return NotImplemented
        return self.regions == other.regions and np.array_equal(self.ids, other.ids)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB image; ``samples`` is an (height, width, 3) uint8 array."""

    width: int
    height: int
    samples: np.ndarray = field(repr=False)
    channels: int = 3

    def __post_init__(self):
        s = np.ascontiguousarray(self.samples, dtype=np.uint8)
        if s.shape != (self.height, self.width, 3):
            raise DimensionMismatch(
                f"samples shape {s.shape} does not match {self.width}x{self.height}x3"
            )
        object.__setattr__(self, "samples", _frozen(s))

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.width == other.width and self.height == other.height and np.array_equal(
            self.samples, other.samples
        )

    __hash__ = None

    @classmethod
    def from_array(cls, a) -> "RgbImage":
        a = np.asarray(a)
        if a.ndim != 3 or a.shape[2] != 3:
            raise DimensionMismatch(f"expected (h, w, 3) array, got {a.shape}")
        return cls(a.shape[1], a.shape[0], a)


def new_segmap(width: int, height: int, num_classes: int, labels: Sequence[int] | np.ndarray) -> SegMap:
    if width <= 0 or height <= 0 or num_classes <= 0:
        raise ValueError("width, height and num_classes must be positive")
    arr = np.asarray(labels)
    if arr.size != width * height:
        raise DimensionMismatch(f"{arr.size} labels for a {width}x{height} map")
    arr = arr.reshape(height, width)
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        bad = int(arr.max()) if arr.max() >= num_classes else int(arr.min())
        raise LabelOutOfRange(f"label {bad} outside [0, {num_classes})")
    return SegMap(width, height, num_classes, _frozen(np.array(arr, dtype=np.int32)))


@numba.njit(cache=True)
def _flood_components(labels):
    h, w = labels.shape
    ids = np.full((h, w), -1, dtype=np.int32)
    stack = np.empty(h * w, dtype=np.int64)
    sizes = np.zeros(h * w, dtype=np.int64)
    n = 0
    for y0 in range(h):
        for x0 in range(w):
            if ids[y0, x0] >= 0:
                continue
            lab = labels[y0, x0]
            ids[y0, x0] = n
            top = 0
            stack[0] = y0 * w + x0
            top = 1
            count = 0
            while top > 0:
                top -= 1
                p = stack[top]
                y = p // w
                x = p - y * w
                count += 1
                if x > 0 and ids[y, x - 1] < 0 and labels[y, x - 1] == lab:
                    ids[y, x - 1] = n
                    stack[top] = p - 1
                    top += 1
                if x + 1 < w and ids[y, x + 1] < 0 and labels[y, x + 1] == lab:
                    ids[y, x + 1] = n
                    stack[top] = p + 1
                    top += 1
                if y > 0 and ids[y - 1, x] < 0 and labels[y - 1, x] == lab:
                    ids[y - 1, x] = n
                    stack[top] = p - w
                    top += 1
                if y + 1 < h and ids[y + 1, x] < 0 and labels[y + 1, x] == lab:
                    ids[y + 1, x] = n
                    stack[top] = p + w
                    top += 1
            sizes[n] = count
            n += 1
    return ids, sizes[:n]


def connected_components(m: SegMap) -> RegionSet:
    """4-connected label-homogeneous regions, numbered by row-major first pixel."""
    ids, sizes = _flood_components(m.labels)
    flat = ids.ravel()
    # region ids are allocated in scan order, so first occurrences are already sorted
    _, first = np.unique(flat, return_index=True)
    regions = tuple(
        Region(i, int(m.labels.flat[f]), int(sizes[i]), (int(f % m.width), int(f // m.width)))
        for i, f in enumerate(first)
    )
    return RegionSet(regions, _frozen(ids))


def gen_voronoi(width: int, height: int, num_seeds: int, num_classes: int, rng_seed: int) -> SegMap:
    """Synthetic map: every pixel takes the class of its nearest seed point.

    Seeds sit on integer pixel positions and distances are compared as exact
    integer squares, ties going to the lowest seed index.
    """
    if num_seeds < 1:
        raise ValueError("num_seeds must be >= 1")
    if width <= 0 or height <= 0 or num_classes <= 0:
        raise ValueError("width, height and num_classes must be positive")
    rng = np.random.default_rng(rng_seed)
    sx = rng.integers(0, width, size=num_seeds)
    sy = rng.integers(0, height, size=num_seeds)
    cls = rng.integers(0, num_classes, size=num_seeds)

    xs = np.arange(width, dtype=np.int64)[None, :]
    ys = np.arange(height, dtype=np.int64)[:, None]
    best = np.full((height, width), np.iinfo(np.int64).max, dtype=np.int64)
    labels = np.zeros((height, width), dtype=np.int32)
    for i in range(num_seeds):
        d = (xs - sx[i]) ** 2 + (ys - sy[i]) ** 2
        closer = d < best
        best[closer] = d[closer]
        labels[closer] = cls[i]
    return new_segmap(width, height, num_classes, labels)


def default_palette(n: int) -> list[tuple[int, int, int]]:
    """``n`` distinct colors (distinct as long as n <= 2**24)."""
    # multiplicative hash spreads consecutive labels across the color cube
    out = []
    for i in range(n):
        v = (i * 0x9E3779B1) & 0xFFFFFF
        out.append(((v >> 16) & 0xFF, (v >> 8) & 0xFF, v & 0xFF))
    return out


def render_rgb(m: SegMap, palette: Sequence[tuple[int, int, int]] | None = None) -> RgbImage:
    if palette is None:
        palette = default_palette(m.num_classes)
    if len(palette) < m.num_classes:
        raise ValueError(f"palette has {len(palette)} colors, map needs {m.num_classes}")
    lut = np.asarray(palette, dtype=np.uint8).reshape(-1, 3)
    return RgbImage(m.width, m.height, lut[m.labels])
