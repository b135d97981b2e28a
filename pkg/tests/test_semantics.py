import numpy as np
import pytest
from hypothesis import given

from conftest import segmaps
from semcodec.bench import png_bytes
from semcodec.errors import BadMagic, FormatError, TruncatedStream
from semcodec.ppm import Bitstream
from semcodec.segmap import gen_voronoi, new_segmap
from semcodec.semantics import (
    FLAG_INSTANCES,
    FLAG_LOSSY,
    SemanticsHeader,
    decode_layers,
    decode_semantics,
    encode_layers,
    encode_semantics,
    pack_layers,
    read_semz,
    unpack_layers,
    write_semz,
)


@given(segmaps(max_side=20, max_classes=5))
def test_roundtrip_property(m):
    b = encode_semantics(m)
    assert decode_semantics(b, m.width, m.height, m.num_classes) == m


def test_voronoi_roundtrip():
    m = gen_voronoi(300, 200, 40, 12, 2)
    assert decode_semantics(encode_semantics(m), 300, 200, 12) == m


def test_uniform_map_is_nearly_free():
    m = new_segmap(1024, 512, 35, np.full(1024 * 512, 17))
    _, payload = encode_layers(m)
    assert 8 * len(payload) / m.num_pixels < 0.001


def test_voronoi_against_png_baseline():
    m = gen_voronoi(1024, 512, 200, 35, 7)
    _, payload = encode_layers(m)
    assert 5 * len(payload) <= len(png_bytes(m))


def test_layers_with_instances():
    sem = gen_voronoi(80, 60, 10, 4, 1)
    inst = gen_voronoi(80, 60, 25, 25, 2)
    flags, payload = encode_layers(sem, inst)
    assert flags == FLAG_INSTANCES
    assert payload[0] == 2
    s2, i2 = decode_layers(SemanticsHeader(80, 60, sem.num_classes, flags), payload)
    assert s2 == sem
    assert np.array_equal(i2.labels, inst.labels)
    assert i2.num_classes == int(inst.labels.max()) + 1


def test_lossy_flag_and_decode():
    m = gen_voronoi(120, 80, 12, 5, 3)
    flags, payload = encode_layers(m, epsilon=2.0)
    assert flags == FLAG_LOSSY
    out, _ = decode_layers(SemanticsHeader(120, 80, 5, flags), payload)
    assert out.labels.shape == m.labels.shape
    # smoothing moves boundaries but most pixels survive
    assert np.mean(out.labels == m.labels) > 0.95
    _, lossless = encode_layers(m)
    assert len(payload) < len(lossless)


def test_layer_layout():
    layers = [Bitstream(b"\x01abc", 3), Bitstream(b"\x01", 0)]
    data = pack_layers(layers)
    assert data[0] == 2
    assert int.from_bytes(data[1:9], "little") == 3
    assert int.from_bytes(data[9:17], "little") == 4
    assert data[17:21] == b"\x01abc"
    assert unpack_layers(data) == layers


def test_layer_errors():
    data = pack_layers([Bitstream(b"\x01abc", 3)])
    with pytest.raises(TruncatedStream):
        unpack_layers(data[:-1])
    with pytest.raises(TruncatedStream):
        unpack_layers(b"")
    with pytest.raises(FormatError):
        unpack_layers(data + b"x")
    with pytest.raises(FormatError):
        decode_layers(SemanticsHeader(1, 1, 1, FLAG_INSTANCES), data)


def test_semz_roundtrip_and_header():
    m = gen_voronoi(64, 64, 12, 8, 7)
    data = write_semz(m)
    assert data[:4] == b"SEMZ"
    assert int.from_bytes(data[4:8], "little") == 64
    assert int.from_bytes(data[8:12], "little") == 64
    assert int.from_bytes(data[12:14], "little") == 8
    assert data[14] == 0 and data[15] == 0
    sem, inst = read_semz(data)
    assert sem == m and inst is None
    with pytest.raises(BadMagic):
        read_semz(b"SEMX" + data[4:])
    with pytest.raises(TruncatedStream):
        read_semz(data[:10])
