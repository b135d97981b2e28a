"""Binary PPM (P6, maxval 255) reading and writing."""

from __future__ import annotations

import re

import numpy as np

from .errors import FormatError, TruncatedStream
from .segmap import RgbImage

_HEADER = re.compile(rb"P6(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)(?:\s+|#[^\n]*\n)+(\d+)\s")


def encode_ppm(img: RgbImage) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.samples.tobytes()


def decode_ppm(data: bytes) -> RgbImage:
    m = _HEADER.match(data)
    if not m:
        raise FormatError("not a binary P6 PPM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if w <= 0 or h <= 0:
        raise FormatError("PPM dimensions must be positive")
    body = data[m.end():]
    if len(body) < w * h * 3:
        raise TruncatedStream(f"PPM body has {len(body)} bytes, expected {w * h * 3}")
    samples = np.frombuffer(body[: w * h * 3], dtype=np.uint8).reshape(h, w, 3)
    return RgbImage(w, h, samples)


def read_ppm(path) -> RgbImage:
    with open(path, "rb") as f:
        return decode_ppm(f.read())


def write_ppm(path, img: RgbImage) -> None:
    with open(path, "wb") as f:
        f.write(encode_ppm(img))
