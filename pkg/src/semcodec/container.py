"""JPSE container: backbone image payload plus semantics payload.

On-disk layout, little-endian, no padding::

    "JPSE" | u8 version | u32 width | u32 height | u16 num_classes | u8 flags
    | u8 id_len | backbone id (UTF-8)
    | u64 backbone_len | backbone payload
    | u64 semantics_len | semantics payload

flags: bit0 has instance layer, bit1 semantics were smoothed (lossy).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .adapters import BackboneAdapter, Registry, default_registry
from .errors import AdapterError, BadMagic, DimensionMismatch, FormatError, TruncatedContainer, UnsupportedVersion
from .segmap import RgbImage, SegMap
from .semantics import FLAG_INSTANCES, FLAG_LOSSY, SemanticsHeader, decode_layers, encode_layers

MAGIC = b"JPSE"
VERSION = 1
_FIXED = struct.Struct("<4sBIIHB")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class ContainerFile:
    width: int
    height: int
    num_classes: int
    flags: int
    backbone_id: str
    backbone: bytes
    semantics: bytes
    version: int = VERSION

    @property
    def has_instances(self) -> bool:
        return bool(self.flags & FLAG_INSTANCES)

    @property
    def lossy_semantics(self) -> bool:
        return bool(self.flags & FLAG_LOSSY)

    @property
    def header_len(self) -> int:
        return _FIXED.size + 1 + len(self.backbone_id.encode()) + 2 * _U64.size

    def __len__(self):
        return self.header_len + len(self.backbone) + len(self.semantics)

    def to_bytes(self) -> bytes:
        bid = self.backbone_id.encode("utf-8")
        if len(bid) > 255:
            raise ValueError("backbone id longer than 255 bytes")
        return b"".join(
            [
                _FIXED.pack(MAGIC, self.version, self.width, self.height, self.num_classes, self.flags),
                bytes([len(bid)]),
                bid,
                _U64.pack(len(self.backbone)),
                self.backbone,
                _U64.pack(len(self.semantics)),
                self.semantics,
            ]
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "ContainerFile":
        data = bytes(data)
        if len(data) >= 4 and data[:4] != MAGIC:
            raise BadMagic(f"not a JPSE container (magic {data[:4]!r})")
        if len(data) < _FIXED.size + 1:
            raise TruncatedContainer("container header truncated")
        magic, version, w, h, ncls, flags = _FIXED.unpack_from(data)
        if version != VERSION:
            raise UnsupportedVersion(f"JPSE version {version} (this reader handles {VERSION})")
        if w == 0 or h == 0 or ncls == 0:
            raise FormatError("width, height and num_classes must be positive")
        pos = _FIXED.size
        id_len = data[pos]
        pos += 1
        parts = []
        if pos + id_len > len(data):
            raise TruncatedContainer("backbone id truncated")
        bid = data[pos:pos + id_len].decode("utf-8")
        pos += id_len
        for what in ("backbone", "semantics"):
            if pos + _U64.size > len(data):
                raise TruncatedContainer(f"{what} length field truncated")
            (n,) = _U64.unpack_from(data, pos)
            pos += _U64.size
            if pos + n > len(data):
                raise TruncatedContainer(f"{what} payload needs {n} bytes, {len(data) - pos} left")
            parts.append(data[pos:pos + n])
            pos += n
        if pos != len(data):
            raise FormatError(f"{len(data) - pos} trailing bytes after container")
        return cls(w, h, ncls, flags, bid, parts[0], parts[1], version)


def read_container(path) -> ContainerFile:
    with open(path, "rb") as f:
        return ContainerFile.from_bytes(f.read())


def write_container(path, f: ContainerFile) -> None:
    with open(path, "wb") as fh:
        fh.write(f.to_bytes())


def compress(
    x: RgbImage,
    sem: SegMap,
    sem_inst: SegMap | None = None,
    backbone: BackboneAdapter | None = None,
    quality: int = 75,
    epsilon: float = 0.0,
) -> ContainerFile:
    if backbone is None:
        backbone = default_registry().get_adapter("null")
    if (x.width, x.height) != (sem.width, sem.height):
        raise DimensionMismatch(f"image is {x.width}x{x.height}, map is {sem.width}x{sem.height}")
    if sem.num_classes > 0xFFFF:
        raise ValueError("num_classes does not fit in 16 bits")
    flags, payload = encode_layers(sem, sem_inst, epsilon)
    try:
        visual = backbone.encode_image(x, quality)
    except AdapterError:
        raise
    except Exception as e:
        raise AdapterError(backbone.id, f"encode failed: {e}") from e
    return ContainerFile(x.width, x.height, sem.num_classes, flags, backbone.id, bytes(visual), payload)


def decompress(f: ContainerFile, registry: Registry | None = None) -> tuple[RgbImage, SegMap, SegMap | None]:
    """Backbone reconstruction plus the decoded semantics layers."""
    registry = registry if registry is not None else default_registry()
    adapter = registry.get_adapter(f.backbone_id)
    try:
        img = adapter.decode_image(f.backbone, f.width, f.height)
    except AdapterError:
        raise
    except Exception as e:
        raise AdapterError(adapter.id, f"decode failed: {e}") from e
    if (img.width, img.height) != (f.width, f.height):
        raise AdapterError(adapter.id, f"decoded {img.width}x{img.height}, container says {f.width}x{f.height}")
    sem, inst = decode_layers(SemanticsHeader(f.width, f.height, f.num_classes, f.flags), f.semantics)
    return img, sem, inst


@dataclass(frozen=True)
class Bpp:
    total: float
    backbone: float
    semantics: float
    header: float


def bpp(f: ContainerFile) -> Bpp:
    px = f.width * f.height
    return Bpp(
        total=8 * len(f) / px,
        backbone=8 * len(f.backbone) / px,
        semantics=8 * len(f.semantics) / px,
        header=8 * f.header_len / px,
    )
