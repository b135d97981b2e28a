"""Byte serialization of a PathSet as start points plus signed segment lengths.

Layout (all integers LEB128; lengths zigzag-mapped first)::

    path_count
    per path: label, depth, start_x, start_y,
              one raw byte (0 = first segment horizontal, 1 = vertical),
              segment_count, segment_count signed lengths

Orientation alternates after the first segment, so it is never stored again.
"""

from __future__ import annotations

from .boundary import Path, PathSet
from .errors import LabelOutOfRange, LoopNotClosed, MalformedPathSet, TruncatedStream


def zigzag(v: int) -> int:
    return (v << 1) if v >= 0 else ((-v << 1) - 1)


def unzigzag(u: int) -> int:
    return (u >> 1) if not u & 1 else -((u + 1) >> 1)


def write_varint(out: bytearray, v: int) -> None:
    if v < 0:
        raise ValueError("varint must be non-negative")
    while v >= 0x80:
        out.append((v & 0x7F) | 0x80)
        v >>= 7
    out.append(v)


def read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    v = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise TruncatedStream("varint runs past the end of the stream")
        b = buf[pos]
        pos += 1
        v |= (b & 0x7F) << shift
        if b < 0x80:
            return v, pos
        shift += 7
        if shift > 63:
            raise MalformedPathSet("varint longer than 64 bits")


def delta_encode(p: PathSet) -> bytes:
    out = bytearray()
    write_varint(out, len(p.paths))
    for path in p.paths:
        x, y = path.points[0]
        write_varint(out, path.label)
        write_varint(out, path.depth)
        write_varint(out, x)
        write_varint(out, y)
        out.append(1 if path.first_vertical else 0)
        lengths = path.segment_lengths()
        write_varint(out, len(lengths))
        for d in lengths:
            write_varint(out, zigzag(d))
    return bytes(out)


def delta_decode(s: bytes, width: int, height: int, num_classes: int | None = None) -> PathSet:
    """Inverse of :func:`delta_encode`.

    ``num_classes`` defaults to one more than the largest decoded label.
    """
    pos = 0
    count, pos = read_varint(s, pos)
    paths = []
    for i in range(count):
        label, pos = read_varint(s, pos)
        depth, pos = read_varint(s, pos)
        x, pos = read_varint(s, pos)
        y, pos = read_varint(s, pos)
        if pos >= len(s):
            raise TruncatedStream("stream ends before orientation byte")
        vertical = s[pos]
        pos += 1
        if vertical > 1:
            raise MalformedPathSet(f"path {i}: orientation byte {vertical}")
        nseg, pos = read_varint(s, pos)
        if nseg < 4 or nseg % 2:
            raise MalformedPathSet(f"path {i}: {nseg} segments cannot close a rectilinear loop")
        points = [(x, y)]
        sum_x = sum_y = 0
        for k in range(nseg):
            u, pos = read_varint(s, pos)
            d = unzigzag(u)
            if (k % 2 == 1) == bool(vertical):
                x += d
                sum_x += d
            else:
                y += d
                sum_y += d
            if not (0 <= x <= width and 0 <= y <= height):
                raise MalformedPathSet(f"path {i}: corner ({x}, {y}) outside the {width}x{height} lattice")
            points.append((x, y))
        if sum_x or sum_y:
            raise LoopNotClosed(f"path {i}: segments sum to ({sum_x}, {sum_y}), not (0, 0)")
        paths.append(Path(label, depth, tuple(points[:-1])))
    if pos != len(s):
        raise MalformedPathSet(f"{len(s) - pos} trailing bytes after the last path")
    top = max((q.label for q in paths), default=0)
    if num_classes is None:
        num_classes = top + 1
    elif top >= num_classes:
        raise LabelOutOfRange(f"label {top} outside [0, {num_classes})")
    return PathSet(width, height, num_classes, tuple(paths))
