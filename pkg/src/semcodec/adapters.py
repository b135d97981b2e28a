"""Backbone image codecs the container can carry.

Adapters turn an :class:`RgbImage` into opaque bytes and back. The container
knows the image size, so ``decode_image`` receives it; payloads that carry
their own size (external codecs) just check it.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .errors import AdapterError, AdapterProcessFailed, UnknownBackbone
from .imageio import decode_ppm, encode_ppm
from .segmap import RgbImage

TMPDIR_ENV = "SEMCODEC_TMPDIR"


class BackboneAdapter:
    id: str = ""

    def encode_image(self, img: RgbImage, quality: int) -> bytes:
        raise NotImplementedError

    def decode_image(self, data: bytes, width: int, height: int) -> RgbImage:
        raise NotImplementedError


class NullAdapter(BackboneAdapter):
    """Raw interleaved RGB, exactly 24 bits per pixel."""

    id = "null"

    def encode_image(self, img, quality=0):
        return img.samples.tobytes()

    def decode_image(self, data, width, height):
        if len(data) != width * height * 3:
            raise AdapterError(self.id, f"raw payload has {len(data)} bytes, expected {width * height * 3}")
        return RgbImage(width, height, np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3))


def _half(n):
    return (n + 1) // 2


class Down2xAdapter(BackboneAdapter):
    """2x2 box average stored raw; bilinear upsampling on decode."""

    id = "down2x"

    def encode_image(self, img, quality=0):
        a = img.samples.astype(np.uint32)
        h, w = a.shape[:2]
        a = np.pad(a, ((0, h % 2), (0, w % 2), (0, 0)), mode="edge")
        s = a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2]
        return ((s + 2) // 4).astype(np.uint8).tobytes()

    def decode_image(self, data, width, height):
        hw, hh = _half(width), _half(height)
        if len(data) != hw * hh * 3:
            raise AdapterError(self.id, f"payload has {len(data)} bytes, expected {hw * hh * 3}")
        small = np.frombuffer(data, dtype=np.uint8).reshape(hh, hw, 3).astype(np.float64)
        # pixel-centre aligned sample positions in the half-size grid
        ys = np.clip((np.arange(height) + 0.5) / 2 - 0.5, 0, hh - 1)
        xs = np.clip((np.arange(width) + 0.5) / 2 - 0.5, 0, hw - 1)
        y0 = np.floor(ys).astype(int)
        x0 = np.floor(xs).astype(int)
        y1 = np.minimum(y0 + 1, hh - 1)
        x1 = np.minimum(x0 + 1, hw - 1)
        fy = (ys - y0)[:, None, None]
        fx = (xs - x0)[None, :, None]
        top = small[y0][:, x0] * (1 - fx) + small[y0][:, x1] * fx
        bot = small[y1][:, x0] * (1 - fx) + small[y1][:, x1] * fx
        out = np.rint(top * (1 - fy) + bot * fy)
        return RgbImage(width, height, np.clip(out, 0, 255).astype(np.uint8))


class ExternalAdapter(BackboneAdapter):
    """Shells out to a codec through temp files.

    Templates are split like a shell command line, then ``{in}``, ``{out}``
    and ``{q}`` are substituted inside each argument. The encoder reads a
    P6 PPM and writes the payload; the decoder does the reverse.
    """

    def __init__(self, id: str, encode_cmd: str, decode_cmd: str, suffix: str = ".bin"):
        for name, tpl in (("encode", encode_cmd), ("decode", decode_cmd)):
            if "{in}" not in tpl or "{out}" not in tpl:
                raise ValueError(f"{name} template must contain {{in}} and {{out}}: {tpl!r}")
        self.id = id
        self.encode_cmd = encode_cmd
        self.decode_cmd = decode_cmd
        self.suffix = suffix

    def _run(self, template, src: Path, dst: Path, quality: int):
        subs = {"{in}": str(src), "{out}": str(dst), "{q}": str(quality)}
        argv = []
        for arg in shlex.split(template):
            for k, v in subs.items():
                arg = arg.replace(k, v)
            argv.append(arg)
        try:
            proc = subprocess.run(argv, capture_output=True)
        except OSError as e:
            raise AdapterProcessFailed(self.id, f"cannot start {argv[0]!r}: {e}", None, str(e)) from e
        stderr = proc.stderr.decode(errors="replace")
        if proc.returncode != 0:
            raise AdapterProcessFailed(
                self.id, f"{argv[0]} exited with status {proc.returncode}: {stderr.strip()}", proc.returncode, stderr
            )
        if not dst.exists():
            raise AdapterProcessFailed(self.id, f"{argv[0]} produced no output file", proc.returncode, stderr)
        return dst.read_bytes()

    def _tmp(self):
        return tempfile.TemporaryDirectory(prefix="semcodec-", dir=os.environ.get(TMPDIR_ENV) or None)

    def encode_image(self, img, quality=75):
        with self._tmp() as d:
            src = Path(d, "in.ppm")
            src.write_bytes(encode_ppm(img))
            return self._run(self.encode_cmd, src, Path(d, "out" + self.suffix), quality)

    def decode_image(self, data, width=None, height=None):
        with self._tmp() as d:
            src = Path(d, "in" + self.suffix)
            src.write_bytes(data)
            raw = self._run(self.decode_cmd, src, Path(d, "out.ppm"), 0)
        try:
            img = decode_ppm(raw)
        except ValueError as e:
            raise AdapterError(self.id, f"decoder output is not a P6 PPM: {e}") from e
        if width is not None and (img.width, img.height) != (width, height):
            raise AdapterError(self.id, f"decoded {img.width}x{img.height}, expected {width}x{height}")
        return img


class Registry(dict):
    def get_adapter(self, id: str) -> BackboneAdapter:
        try:
            return self[id]
        except KeyError:
            raise UnknownBackbone(f"no backbone adapter registered as {id!r}") from None

    def add(self, adapter: BackboneAdapter) -> BackboneAdapter:
        self[adapter.id] = adapter
        return adapter


def default_registry() -> Registry:
    r = Registry()
    r.add(NullAdapter())
    r.add(Down2xAdapter())
    return r


def register_external_adapter(
    id: str, encode_cmd_template: str, decode_cmd_template: str, registry: Registry | None = None, suffix: str = ".bin"
) -> ExternalAdapter:
    adapter = ExternalAdapter(id, encode_cmd_template, decode_cmd_template, suffix)
    if registry is not None:
        registry.add(adapter)
    return adapter
