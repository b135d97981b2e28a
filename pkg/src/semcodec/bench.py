"""Semantics rate benchmark on synthetic Voronoi maps."""

from __future__ import annotations

import io

from PIL import Image

from .boundary import extract_paths
from .segmap import SegMap, gen_voronoi, render_rgb
from .semantics import SemanticsHeader, decode_layers, encode_layers


def png_bytes(m: SegMap) -> bytes:
    """Rendered RGB map as a maximally compressed PNG, the bitmap baseline."""
    buf = io.BytesIO()
    Image.fromarray(render_rgb(m).samples, "RGB").save(buf, format="PNG", optimize=True)
    return buf.getvalue()


def bench_map(m: SegMap, with_baseline: bool = True) -> dict:
    flags, payload = encode_layers(m)
    sem, _ = decode_layers(SemanticsHeader(m.width, m.height, m.num_classes, flags), payload)
    paths = extract_paths(m)
    rec = {
        "width": m.width,
        "height": m.height,
        "paths": len(paths.paths),
        "points": paths.num_points,
        "semantics_bytes": len(payload),
        "semantics_bpp": 8 * len(payload) / m.num_pixels,
        "lossless": sem == m,
    }
    if with_baseline:
        rec["png_bpp"] = 8 * len(png_bytes(m)) / m.num_pixels
    return rec


def run_bench(maps: int, width: int, height: int, seeds: int, classes: int, seed: int, with_baseline: bool = True):
    """Per-map records in input order, then one summary record."""
    records = []
    for i in range(maps):
        rec = {"map": i, "seed": seed + i}
        rec.update(bench_map(gen_voronoi(width, height, seeds, classes, seed + i), with_baseline))
        records.append(rec)
    n = max(len(records), 1)
    summary = {
        "summary": True,
        "maps": len(records),
        "mean_semantics_bpp": sum(r["semantics_bpp"] for r in records) / n,
        "all_lossless": all(r["lossless"] for r in records),
    }
    if with_baseline:
        summary["mean_png_bpp"] = sum(r["png_bpp"] for r in records) / n
        summary["png_to_semantics_ratio"] = summary["mean_png_bpp"] / summary["mean_semantics_bpp"] if records else None
    return records + [summary]
