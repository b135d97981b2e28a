"""Region boundaries as closed rectilinear loops on the pixel-corner lattice.

A map becomes one loop per 4-connected region: the outer crack boundary of
the region, walked clockwise (screen orientation, y pointing down) from its
top-left corner, keeping only the corners. Holes need no loops of their own;
the regions filling a hole have their own outer loops and a larger
containment depth, so painting loops outermost-first reproduces the map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np
from scipy import ndimage

from .errors import MalformedPathSet
from .segmap import SegMap, connected_components, new_segmap

Point = tuple[int, int]


@dataclass(frozen=True)
class Path:
    label: int
    depth: int
    points: tuple[Point, ...]

    def __post_init__(self):
        pts = tuple((int(x), int(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        check_loop(pts)
        if self.label < 0 or self.depth < 0:
            raise MalformedPathSet("label and depth must be non-negative")

    @property
    def first_vertical(self) -> bool:
        return self.points[0][0] == self.points[1][0]

    def segment_lengths(self) -> list[int]:
        """Signed lengths of every segment, the closing one included."""
        pts = self.points
        n = len(pts)
        out = []
        for i in range(n):
            (x0, y0), (x1, y1) = pts[i], pts[(i + 1) % n]
            out.append(x1 - x0 if y1 == y0 else y1 - y0)
        return out


def check_loop(points: tuple[Point, ...]) -> None:
    n = len(points)
    if n < 4:
        raise MalformedPathSet(f"loop has {n} points, need at least 4")
    if n % 2:
        raise MalformedPathSet("rectilinear loop must have an even number of corners")
    prev_vertical = None
    for i in range(n):
        (x0, y0), (x1, y1) = points[i], points[(i + 1) % n]
        if (x0 == x1) == (y0 == y1):
            raise MalformedPathSet(f"segment {i} is not axis-aligned with non-zero length")
        vertical = x0 == x1
        if vertical == prev_vertical:
            raise MalformedPathSet(f"segments {i - 1} and {i} are colinear")
        prev_vertical = vertical
    if (points[0][0] == points[1][0]) == prev_vertical:
        raise MalformedPathSet("closing segment is colinear with the first")


@dataclass(frozen=True)
class PathSet:
    width: int
    height: int
    num_classes: int
    paths: tuple[Path, ...]

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        for p in self.paths:
            for x, y in p.points:
                if not (0 <= x <= self.width and 0 <= y <= self.height):
                    raise MalformedPathSet(f"corner ({x}, {y}) outside the {self.width}x{self.height} lattice")

    @property
    def num_points(self) -> int:
        return sum(len(p.points) for p in self.paths)


def sort_paths(paths: Iterable[Path]) -> list[Path]:
    return sorted(paths, key=lambda p: (p.depth, p.points[0][1], p.points[0][0]))


@numba.njit(cache=True)
def _trace_outer(ids, seeds_x, seeds_y):
    h, w = ids.shape
    n = seeds_x.shape[0]
    cap = 4 * h * w + 4 * n
    xs = np.empty(cap, dtype=np.int32)
    ys = np.empty(cap, dtype=np.int32)
    offsets = np.empty(n + 1, dtype=np.int64)
    k = 0
    for r in range(n):
        offsets[r] = k
        sx = seeds_x[r]
        sy = seeds_y[r]
        cx = sx
        cy = sy
        dx = 1
        dy = 0
        xs[k] = cx
        ys[k] = cy
        k += 1
        while True:
            cx += dx
            cy += dy
            if cx == sx and cy == sy:
                break
            # right-hand normal in y-down screen coordinates
            rx = -dy
            ry = dx
            ax = cx if dx + rx > 0 else cx - 1
            ay = cy if dy + ry > 0 else cy - 1
            bx = cx if dx - rx > 0 else cx - 1
            by = cy if dy - ry > 0 else cy - 1
            a_in = 0 <= ax < w and 0 <= ay < h and ids[ay, ax] == r
            b_in = 0 <= bx < w and 0 <= by < h and ids[by, bx] == r
            if not a_in:
                dx, dy = rx, ry
            elif b_in:
                dx, dy = -rx, -ry
            else:
                continue
            xs[k] = cx
            ys[k] = cy
            k += 1
    offsets[n] = k
    return xs[:k], ys[:k], offsets


@numba.njit(cache=True)
def _paint(xs, ys, offsets, labels, w, h):
    out = np.full((h, w), -1, dtype=np.int32)
    for i in range(offsets.shape[0] - 1):
        a = offsets[i]
        b = offsets[i + 1]
        x0 = xs[a]
        x1 = xs[a]
        y0 = ys[a]
        y1 = ys[a]
        for j in range(a, b):
            x0 = min(x0, xs[j])
            x1 = max(x1, xs[j])
            y0 = min(y0, ys[j])
            y1 = max(y1, ys[j])
        bw = x1 - x0
        bh = y1 - y0
        if bw == 0 or bh == 0:
            continue
        par = np.zeros((bh + 1, bw + 1), dtype=np.uint8)
        for j in range(a, b):
            jn = j + 1 if j + 1 < b else a
            if xs[j] == xs[jn]:
                par[ys[j] - y0, xs[j] - x0] ^= 1
                par[ys[jn] - y0, xs[j] - x0] ^= 1
        # prefix parity down columns gives crossings per row, then along rows
        for yy in range(1, bh):
            for xx in range(bw):
                par[yy, xx] ^= par[yy - 1, xx]
        lab = labels[i]
        for yy in range(bh):
            acc = 0
            for xx in range(bw):
                acc ^= par[yy, xx]
                if acc:
                    out[y0 + yy, x0 + xx] = lab
    return out


def _flatten(paths):
    lens = [len(p.points) for p in paths]
    offsets = np.zeros(len(paths) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    pts = np.array([pt for p in paths for pt in p.points], dtype=np.int32).reshape(-1, 2)
    return pts[:, 0].copy(), pts[:, 1].copy(), offsets


def _winding(xs, ys, offsets, w, h):
    """Number of clockwise loops enclosing each pixel."""
    diff = np.zeros((h + 1, w + 1), dtype=np.int32)
    nxt = np.arange(1, len(xs) + 1)
    nxt[offsets[1:] - 1] = offsets[:-1]
    vert = xs == xs[nxt]
    x = xs[vert]
    ya, yb = ys[vert], ys[nxt][vert]
    # upward cracks enter a clockwise loop when scanning left to right
    c = np.where(yb < ya, 1, -1)
    np.add.at(diff, (np.minimum(ya, yb), x), c)
    np.add.at(diff, (np.maximum(ya, yb), x), -c)
    return diff.cumsum(axis=0).cumsum(axis=1)[:h, :w]


def extract_paths(m: SegMap) -> PathSet:
    rs = connected_components(m)
    seeds_x = np.array([r.seed[0] for r in rs.regions], dtype=np.int32)
    seeds_y = np.array([r.seed[1] for r in rs.regions], dtype=np.int32)
    xs, ys, offsets = _trace_outer(rs.ids, seeds_x, seeds_y)
    depth = _winding(xs, ys, offsets, m.width, m.height)[seeds_y, seeds_x] - 1
    paths = []
    for r in rs.regions:
        a, b = offsets[r.region_id], offsets[r.region_id + 1]
        pts = tuple(zip(xs[a:b].tolist(), ys[a:b].tolist()))
        paths.append(Path(r.label, int(depth[r.region_id]), pts))
    return PathSet(m.width, m.height, m.num_classes, tuple(sort_paths(paths)))


def rasterize(p: PathSet, strict: bool = True) -> SegMap:
    """Paint loops in stored order with an even-odd fill.

    With ``strict=False`` pixels left uncovered (possible after lossy
    smoothing) take the label of the nearest painted pixel instead of
    raising.
    """
    if not p.paths:
        raise MalformedPathSet("empty PathSet cannot cover the map")
    xs, ys, offsets = _flatten(p.paths)
    labels = np.array([q.label for q in p.paths], dtype=np.int32)
    grid = _paint(xs, ys, offsets, labels, p.width, p.height)
    holes = grid < 0
    if holes.any():
        if strict:
            y, x = np.argwhere(holes)[0]
            raise MalformedPathSet(f"pixel ({x}, {y}) not covered by any loop")
        if holes.all():
            grid[:] = 0
        else:
            _, (iy, ix) = ndimage.distance_transform_edt(holes, return_indices=True)
            grid = grid[iy, ix]
    return new_segmap(p.width, p.height, p.num_classes, grid)


# -- lossy smoothing --------------------------------------------------------

def _dp_keep(pts: np.ndarray, eps: float) -> np.ndarray:
    """Douglas-Peucker over an open polyline; returns a keep mask."""
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        a, b = pts[i], pts[j]
        mid = pts[i + 1:j]
        ab = b - a
        norm = np.hypot(*ab)
        if norm == 0:
            d = np.hypot(mid[:, 0] - a[0], mid[:, 1] - a[1])
        else:
            d = np.abs(ab[0] * (mid[:, 1] - a[1]) - ab[1] * (mid[:, 0] - a[0])) / norm
        k = int(np.argmax(d))
        if d[k] > eps:
            k += i + 1
            keep[k] = True
            stack.append((i, k))
            stack.append((k, j))
    return keep


def _simplify_loop(points: tuple[Point, ...], eps: float) -> list[int]:
    pts = np.asarray(points, dtype=np.float64)
    d0 = np.hypot(pts[:, 0] - pts[0, 0], pts[:, 1] - pts[0, 1])
    far = int(np.argmax(d0))
    ring = np.vstack([pts, pts[:1]])
    keep = np.zeros(len(pts), dtype=bool)
    keep[: far + 1] |= _dp_keep(ring[: far + 1], eps)
    tail = _dp_keep(ring[far:], eps)
    keep[far:] |= tail[:-1]
    return np.flatnonzero(keep).tolist()


def _canonical(points: list[Point]) -> tuple[Point, ...] | None:
    """Merge colinear runs, cancel reversals, orient clockwise, rotate start."""
    # segments as (vertical, signed length), reduced cyclically to a fixpoint
    segs = []
    n = len(points)
    for i in range(n):
        (x0, y0), (x1, y1) = points[i], points[(i + 1) % n]
        if x0 != x1:
            segs.append([False, x1 - x0])
        if y0 != y1:
            segs.append([True, y1 - y0])
    start = points[0]
    changed = True
    while changed and segs:
        changed = False
        out = []
        for s in segs:
            if out and out[-1][0] == s[0]:
                out[-1][1] += s[1]
                if out[-1][1] == 0:
                    out.pop()
                changed = True
            else:
                out.append(s)
        if len(out) > 1 and out[0][0] == out[-1][0]:
            first = out.pop(0)
            dx, dy = (0, first[1]) if first[0] else (first[1], 0)
            start = (start[0] + dx, start[1] + dy)
            out[-1][1] += first[1]
            if out[-1][1] == 0:
                out.pop()
            changed = True
        segs = out
    if len(segs) < 4:
        return None
    pts = [start]
    for vertical, length in segs[:-1]:
        x, y = pts[-1]
        pts.append((x, y + length) if vertical else (x + length, y))
    area2 = sum(pts[i][0] * pts[(i + 1) % len(pts)][1] - pts[(i + 1) % len(pts)][0] * pts[i][1] for i in range(len(pts)))
    if area2 == 0:
        return None
    if area2 < 0:
        pts = pts[:1] + pts[:0:-1]
    k = min(range(len(pts)), key=lambda i: (pts[i][1], pts[i][0]))
    return tuple(pts[k:] + pts[:k])


def _bbox_loop(points: tuple[Point, ...]) -> tuple[Point, ...]:
    xs = [x for x, _ in points]
    ys = [y for _, y in points]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _staircase(a: Point, b: Point, eps: float, horizontal_first: bool) -> list[Point]:
    """Lattice staircase from ``a`` towards ``b`` (``b`` excluded).

    Uses the fewest equal steps whose corners stay within ``eps`` of the
    chord; one step is a single bend.
    """
    (xa, ya), (xb, yb) = a, b
    dx, dy = xb - xa, yb - ya
    if dx == 0 or dy == 0:
        return [a]
    k = max(1, math.ceil(abs(dx * dy) / (eps * math.hypot(dx, dy))))
    k = min(k, abs(dx), abs(dy))
    # integer rounding keeps the corners on the lattice
    cx = [xa + (2 * i * dx + k) // (2 * k) for i in range(k + 1)]
    cy = [ya + (2 * i * dy + k) // (2 * k) for i in range(k + 1)]
    out = []
    for i in range(k):
        out.append((cx[i], cy[i]))
        out.append((cx[i + 1], cy[i]) if horizontal_first else (cx[i], cy[i + 1]))
    return out


def _smooth_once(pts: list[Point], epsilon: float) -> list[Point]:
    keep = _simplify_loop(pts, epsilon)
    if len(keep) == len(pts):
        return pts
    loop = None
    if len(keep) >= 3:
        out: list[Point] = []
        for a, b in zip(keep, keep[1:] + keep[:1]):
            # steps follow the orientation the original loop leaves ``a`` with
            out.extend(_staircase(pts[a], pts[b], epsilon, pts[(a + 1) % len(pts)][1] == pts[a][1]))
        loop = _canonical(out)
    return loop if loop is not None else _bbox_loop(pts)


def _ladder(epsilon: float) -> list[float]:
    # fixed tolerances 2^(j/4) from 1/2 up to epsilon
    out = []
    j = -4
    while 2 ** (j / 4) <= epsilon:
        out.append(2 ** (j / 4))
        j += 1
    return out


def smooth_path(path: Path, epsilon: float) -> Path:
    """Simplify one loop; a loop that would collapse becomes its bounding box.

    Candidates are smoothed at every ladder tolerance up to ``epsilon`` and
    the one with fewest points wins (ties go to the larger tolerance). The
    candidate sets are nested, so the point count never grows with epsilon.
    """
    if epsilon <= 0 or len(path.points) <= 4:
        return path
    best = list(path.points)
    for e in _ladder(epsilon):
        cand = _smooth_once(list(path.points), e)
        if len(cand) <= len(best):
            best = cand
    if best == list(path.points):
        return path
    return Path(path.label, path.depth, best)


def smooth_paths(p: PathSet, epsilon: float) -> PathSet:
    """Lossy simplification: Douglas-Peucker per loop, then a lattice
    staircase between retained corners so loops stay rectilinear."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon == 0:
        return p
    paths = [smooth_path(q, epsilon) for q in p.paths]
    return PathSet(p.width, p.height, p.num_classes, tuple(sort_paths(paths)))
