import shutil
import struct
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semcodec.adapters import ExternalAdapter, default_registry, register_external_adapter
from semcodec.container import ContainerFile, bpp, compress, decompress, read_container, write_container
from semcodec.errors import (
    AdapterError,
    AdapterProcessFailed,
    BadMagic,
    DimensionMismatch,
    FormatError,
    TruncatedContainer,
    UnknownBackbone,
    UnsupportedVersion,
)
from semcodec.imageio import encode_ppm
from semcodec.segmap import RgbImage, gen_voronoi, new_segmap
from semcodec.semantics import FLAG_INSTANCES, FLAG_LOSSY

TOOL = Path(__file__).parent / "tools" / "pil_jpeg.py"


def noise_image(w, h, seed=0):
    rng = np.random.default_rng(seed)
    return RgbImage(w, h, rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


def random_container(rng) -> ContainerFile:
    bid = "".join(rng.choice(list("abcdefghij-_0123456789"), int(rng.integers(0, 20))))
    return ContainerFile(
        width=int(rng.integers(1, 5000)),
        height=int(rng.integers(1, 5000)),
        num_classes=int(rng.integers(1, 65536)),
        flags=int(rng.integers(0, 4)),
        backbone_id=bid,
        backbone=rng.bytes(int(rng.integers(0, 3000))),
        semantics=rng.bytes(int(rng.integers(0, 3000))),
    )


# -- layout ------------------------------------------------------------------

def test_header_layout():
    f = ContainerFile(2, 3, 4, FLAG_INSTANCES, "null", b"\x01\x02", b"\x03")
    data = f.to_bytes()
    assert data[:4] == b"JPSE"
    assert struct.unpack_from("<BIIHB", data, 4) == (1, 2, 3, 4, FLAG_INSTANCES)
    assert data[16] == 4 and data[17:21] == b"null"
    assert struct.unpack_from("<Q", data, 21) == (2,)
    assert data[29:31] == b"\x01\x02"
    assert struct.unpack_from("<Q", data, 31) == (1,)
    assert data[39:] == b"\x03"
    assert len(data) == len(f) == f.header_len + 3


def test_repack_identical_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        data = random_container(rng).to_bytes()
        assert ContainerFile.from_bytes(data).to_bytes() == data


@given(st.binary(max_size=64), st.binary(max_size=64), st.text(max_size=10))
def test_repack_property(backbone, semantics, bid):
    f = ContainerFile(7, 9, 3, 0, bid, backbone, semantics)
    g = ContainerFile.from_bytes(f.to_bytes())
    assert g == f


def test_bad_magic():
    data = bytearray(ContainerFile(1, 1, 1, 0, "null", b"abc", b"").to_bytes())
    data[0:4] = b"JPEG"
    with pytest.raises(BadMagic):
        ContainerFile.from_bytes(bytes(data))


def test_bad_version():
    data = bytearray(ContainerFile(1, 1, 1, 0, "null", b"abc", b"").to_bytes())
    data[4] = 2
    with pytest.raises(UnsupportedVersion):
        ContainerFile.from_bytes(bytes(data))


def test_truncation_every_prefix():
    data = ContainerFile(3, 2, 2, 0, "down2x", b"xyz" * 5, b"semantics").to_bytes()
    for n in range(4, len(data)):
        with pytest.raises(TruncatedContainer):
            ContainerFile.from_bytes(data[:n])


def test_trailing_bytes_and_zero_dims():
    data = ContainerFile(3, 2, 2, 0, "null", b"", b"").to_bytes()
    with pytest.raises(FormatError):
        ContainerFile.from_bytes(data + b"\0")
    zero = bytearray(data)
    zero[5:9] = b"\0\0\0\0"
    with pytest.raises(FormatError):
        ContainerFile.from_bytes(bytes(zero))


def test_file_io(tmp_path):
    f = ContainerFile(5, 5, 2, 0, "null", b"\0" * 75, b"s")
    write_container(tmp_path / "a.jpse", f)
    assert read_container(tmp_path / "a.jpse") == f


# -- pipeline ----------------------------------------------------------------

def test_null_uniform_map_roundtrip():
    x = noise_image(33, 21, 1)
    sem = new_segmap(33, 21, 1, np.zeros(33 * 21, dtype=int))
    f = compress(x, sem)
    img, out, inst = decompress(ContainerFile.from_bytes(f.to_bytes()))
    assert np.array_equal(img.samples, x.samples)
    assert out == sem and inst is None
    assert len(f.backbone) == 3 * 33 * 21


def test_down2x_smaller_than_raw():
    x = noise_image(64, 64, 2)
    sem = gen_voronoi(64, 64, 10, 4, 2)
    f = compress(x, sem, backbone=default_registry().get_adapter("down2x"))
    assert len(f) < 3 * 64 * 64
    img, out, _ = decompress(f)
    assert (img.width, img.height) == (64, 64)
    assert out == sem


def test_down2x_odd_dimensions():
    x = noise_image(15, 9, 3)
    a = default_registry().get_adapter("down2x")
    data = a.encode_image(x, 0)
    assert len(data) == 8 * 5 * 3
    assert a.decode_image(data, 15, 9).samples.shape == (9, 15, 3)


def test_down2x_constant_image_exact():
    x = RgbImage(10, 6, np.full((6, 10, 3), 77, dtype=np.uint8))
    a = default_registry().get_adapter("down2x")
    assert np.array_equal(a.decode_image(a.encode_image(x, 0), 10, 6).samples, x.samples)


def test_instances_layer():
    sem = gen_voronoi(40, 30, 6, 3, 4)
    inst = gen_voronoi(40, 30, 9, 9, 5)
    f = compress(noise_image(40, 30), sem, inst)
    assert f.flags == FLAG_INSTANCES
    _, out, out_inst = decompress(f)
    assert out == sem
    assert np.array_equal(out_inst.labels, inst.labels)


def test_lossy_flag():
    sem = gen_voronoi(60, 40, 8, 3, 6)
    f = compress(noise_image(60, 40), sem, epsilon=2.0)
    assert f.lossy_semantics and f.flags == FLAG_LOSSY
    _, out, _ = decompress(f)
    assert out.labels.shape == (40, 60)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compress(noise_image(10, 10), gen_voronoi(10, 11, 3, 2, 0))


def test_unknown_backbone():
    f = ContainerFile(1, 1, 1, 0, "nope", b"", b"")
    with pytest.raises(UnknownBackbone):
        decompress(f)


def test_null_payload_size_checked():
    f = compress(noise_image(4, 4), gen_voronoi(4, 4, 2, 2, 0))
    bad = ContainerFile(f.width, f.height, f.num_classes, f.flags, "null", f.backbone[:-1], f.semantics)
    with pytest.raises(AdapterError):
        decompress(bad)


# -- bpp ---------------------------------------------------------------------

def test_bpp_backbone_one():
    f = ContainerFile(1024, 512, 35, 0, "x", b"\0" * 65536, b"")
    assert bpp(f).backbone == 1.0


def test_bpp_additivity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        r = bpp(random_container(rng))
        assert abs(r.total - (r.header + r.backbone + r.semantics)) <= 1e-12


# -- external adapters ---------------------------------------------------------

def test_external_identity(tmp_path, monkeypatch):
    monkeypatch.setenv("SEMCODEC_TMPDIR", str(tmp_path))
    a = register_external_adapter("copy", "cp {in} {out}", "cp {in} {out}")
    x = noise_image(12, 7, 8)
    data = a.encode_image(x, 50)
    assert data == encode_ppm(x)
    assert np.array_equal(a.decode_image(data, 12, 7).samples, x.samples)
    # temp dirs are cleaned up
    assert list(tmp_path.iterdir()) == []


def test_external_registry_pipeline():
    reg = default_registry()
    register_external_adapter("copy", "cp {in} {out}", "cp {in} {out}", registry=reg)
    x = noise_image(20, 20, 9)
    sem = gen_voronoi(20, 20, 4, 3, 9)
    f = compress(x, sem, backbone=reg.get_adapter("copy"))
    img, out, _ = decompress(f, reg)
    assert np.array_equal(img.samples, x.samples) and out == sem


def test_external_failure_captures_stderr():
    cmd = f"{sys.executable} -c \"import sys; sys.stderr.write('boom'); sys.exit(4)\" {{in}} {{out}}"
    a = ExternalAdapter("bad", cmd, cmd)
    with pytest.raises(AdapterProcessFailed) as e:
        a.encode_image(noise_image(4, 4), 75)
    assert e.value.returncode == 4
    assert "boom" in e.value.stderr


def test_external_missing_output():
    a = ExternalAdapter("noop", "true {in} {out}", "true {in} {out}")
    with pytest.raises(AdapterProcessFailed):
        a.encode_image(noise_image(4, 4), 75)


def test_external_missing_binary():
    a = ExternalAdapter("ghost", "no-such-codec-xyz {in} {out}", "cp {in} {out}")
    with pytest.raises(AdapterProcessFailed):
        a.encode_image(noise_image(4, 4), 75)


def test_external_template_needs_placeholders():
    with pytest.raises(ValueError):
        ExternalAdapter("x", "cp a b", "cp {in} {out}")


def test_external_codec_matches_direct_invocation(tmp_path):
    exe = sys.executable
    a = register_external_adapter(
        "pil-jpeg", f"{exe} {TOOL} enc {{in}} {{out}} {{q}}", f"{exe} {TOOL} dec {{in}} {{out}}", suffix=".jpg"
    )
    x = noise_image(48, 32, 10)
    payload = a.encode_image(x, 60)
    (tmp_path / "x.ppm").write_bytes(encode_ppm(x))
    subprocess.run([exe, str(TOOL), "enc", str(tmp_path / "x.ppm"), str(tmp_path / "x.jpg"), "60"], check=True)
    assert payload == (tmp_path / "x.jpg").read_bytes()
    y = a.decode_image(payload, 48, 32)
    assert (y.width, y.height) == (48, 32)
    # quality reaches the tool
    assert len(a.encode_image(x, 10)) < len(payload)


@pytest.mark.skipif(not (shutil.which("cjpeg") and shutil.which("djpeg")), reason="cjpeg/djpeg not installed")
def test_system_cjpeg_roundtrip():
    a = register_external_adapter(
        "jpeg", "cjpeg -quality {q} -outfile {out} {in}", "djpeg -pnm -outfile {out} {in}", suffix=".jpg"
    )
    x = noise_image(40, 24, 12)
    y = a.decode_image(a.encode_image(x, 75), 40, 24)
    assert (y.width, y.height) == (40, 24)
