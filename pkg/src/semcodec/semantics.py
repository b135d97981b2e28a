"""End-to-end semantics codec: map -> loops -> delta bytes -> PPM, and back.

Multi-layer payload (class map, optional instance map)::

    u8 layer_count
    per layer: u64 uncompressed_len, u64 payload_len, payload

``.semz`` files prefix that payload with a 16-byte header: ``SEMZ``,
u32 width, u32 height, u16 num_classes, u8 flags, u8 reserved.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .boundary import extract_paths, rasterize, smooth_paths
from .delta import delta_decode, delta_encode
from .errors import BadMagic, DimensionMismatch, FormatError, TruncatedStream
from .ppm import Bitstream, ppm_compress, ppm_decompress
from .segmap import SegMap

FLAG_INSTANCES = 0x01
FLAG_LOSSY = 0x02

SEMZ_MAGIC = b"SEMZ"
_SEMZ_HEADER = struct.Struct("<4sIIHBB")
_LAYER = struct.Struct("<QQ")


def encode_semantics(m: SegMap, epsilon: float = 0.0) -> Bitstream:
    paths = extract_paths(m)
    if epsilon > 0:
        paths = smooth_paths(paths, epsilon)
    return ppm_compress(delta_encode(paths))


def decode_semantics(
    b: Bitstream, width: int, height: int, num_classes: int | None = None, lossy: bool = False
) -> SegMap:
    """Rebuild a map; ``num_classes=None`` infers it from the largest label."""
    paths = delta_decode(ppm_decompress(b), width, height, num_classes)
    return rasterize(paths, strict=not lossy)


def pack_layers(layers: list[Bitstream]) -> bytes:
    if len(layers) > 255:
        raise ValueError("at most 255 semantics layers")
    out = bytearray([len(layers)])
    for b in layers:
        out += _LAYER.pack(b.uncompressed_len, len(b.bytes))
        out += b.bytes
    return bytes(out)


def unpack_layers(data: bytes) -> list[Bitstream]:
    if not data:
        raise TruncatedStream("semantics payload is empty")
    count = data[0]
    pos = 1
    layers = []
    for i in range(count):
        if pos + _LAYER.size > len(data):
            raise TruncatedStream(f"semantics layer {i} header truncated")
        raw_len, size = _LAYER.unpack_from(data, pos)
        pos += _LAYER.size
        if pos + size > len(data):
            raise TruncatedStream(f"semantics layer {i} needs {size} bytes, {len(data) - pos} left")
        layers.append(Bitstream(bytes(data[pos:pos + size]), raw_len))
        pos += size
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after semantics layers")
    return layers


@dataclass(frozen=True)
class SemanticsHeader:
    width: int
    height: int
    num_classes: int
    flags: int = 0

    @property
    def has_instances(self) -> bool:
        return bool(self.flags & FLAG_INSTANCES)

    @property
    def lossy(self) -> bool:
        return bool(self.flags & FLAG_LOSSY)


def encode_layers(sem: SegMap, inst: SegMap | None = None, epsilon: float = 0.0) -> tuple[int, bytes]:
    """Returns (flags, payload) for a class map and optional instance map."""
    maps = [sem] if inst is None else [sem, inst]
    for extra in maps[1:]:
        if (extra.width, extra.height) != (sem.width, sem.height):
            raise DimensionMismatch("instance map and class map differ in size")
    flags = (FLAG_INSTANCES if inst is not None else 0) | (FLAG_LOSSY if epsilon > 0 else 0)
    return flags, pack_layers([encode_semantics(m, epsilon) for m in maps])


def decode_layers(header: SemanticsHeader, payload: bytes) -> tuple[SegMap, SegMap | None]:
    layers = unpack_layers(payload)
    want = 2 if header.has_instances else 1
    if len(layers) != want:
        raise FormatError(f"expected {want} semantics layers, found {len(layers)}")
    sem = decode_semantics(layers[0], header.width, header.height, header.num_classes, header.lossy)
    inst = None
    if header.has_instances:
        # instance id range is not transmitted
        inst = decode_semantics(layers[1], header.width, header.height, None, header.lossy)
    return sem, inst


def write_semz(sem: SegMap, inst: SegMap | None = None, epsilon: float = 0.0) -> bytes:
    flags, payload = encode_layers(sem, inst, epsilon)
    return _SEMZ_HEADER.pack(SEMZ_MAGIC, sem.width, sem.height, sem.num_classes, flags, 0) + payload


def read_semz(data: bytes) -> tuple[SegMap, SegMap | None]:
    if len(data) < _SEMZ_HEADER.size:
        raise TruncatedStream("SEMZ header truncated")
    magic, w, h, ncls, flags, _ = _SEMZ_HEADER.unpack_from(data)
    if magic != SEMZ_MAGIC:
        raise BadMagic(f"not a SEMZ file (magic {magic!r})")
    return decode_layers(SemanticsHeader(w, h, ncls, flags), data[_SEMZ_HEADER.size:])
