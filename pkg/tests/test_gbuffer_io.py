import struct

import numpy as np
import pytest

from forge.gbuffer_io import (
    CHANNEL_ORDER,
    GBufferFormatError,
    gamma_encode,
    read_gbuffer,
    write_gbuffer,
    write_png,
)


def test_round_trip_bit_exact(sphere_gbuffer, tmp_path):
    path = tmp_path / "a.gbuf"
    write_gbuffer(path, sphere_gbuffer)
    back = read_gbuffer(path)
    assert np.array_equal(back.albedo,
                          sphere_gbuffer.albedo.astype(np.float32))
    assert np.array_equal(back.normal,
                          sphere_gbuffer.normal.astype(np.float32))
    assert np.array_equal(back.depth, sphere_gbuffer.depth.astype(np.float32))
    assert np.array_equal(back.ao, sphere_gbuffer.ao.astype(np.float32))
    assert np.array_equal(back.coverage, sphere_gbuffer.coverage)
    # write -> read -> write is byte-identical
    path2 = tmp_path / "b.gbuf"
    write_gbuffer(path2, back)
    assert path.read_bytes() == path2.read_bytes()


def test_header_layout(sphere_gbuffer, tmp_path):
    path = tmp_path / "a.gbuf"
    write_gbuffer(path, sphere_gbuffer)
    raw = path.read_bytes()
    assert raw[:5] == b"GBUF1"
    w, h, nch = struct.unpack("<III", raw[5:17])
    assert (h, w) == sphere_gbuffer.shape
    assert nch == 9
    # channel names are 16-byte space-padded ascii in canonical order
    offset = 17
    stride = 16 + w * h * 4
    names = [raw[offset + k * stride:offset + k * stride + 16]
             for k in range(nch)]
    assert names[0] == b"albedo.r".ljust(16)
    assert [n.decode().strip() for n in names] == list(CHANNEL_ORDER)
    assert b"depth".ljust(16) in names


def test_bad_magic_errors(tmp_path):
    p = tmp_path / "bad.gbuf"
    p.write_bytes(b"NOPE!" + b"\x00" * 64)
    with pytest.raises(GBufferFormatError):
        read_gbuffer(p)


def test_truncation_errors(sphere_gbuffer, tmp_path):
    path = tmp_path / "a.gbuf"
    write_gbuffer(path, sphere_gbuffer)
    raw = path.read_bytes()
    for cut in (3, 10, 40, len(raw) - 7):
        p = tmp_path / "cut.gbuf"
        p.write_bytes(raw[:cut])
        with pytest.raises(GBufferFormatError):
            read_gbuffer(p)


def test_gamma_encode_range():
    img = np.linspace(-0.5, 2.0, 64).reshape(8, 8)
    out = gamma_encode(img)
    assert out.min() >= 0 and out.max() <= 1
    assert np.isclose(gamma_encode(np.array(0.5)), 0.5 ** (1 / 2.2))


def test_write_png(tmp_path):
    from PIL import Image

    img = np.random.default_rng(0).random((16, 16, 3))
    write_png(tmp_path / "p.png", img)
    loaded = Image.open(tmp_path / "p.png")
    assert loaded.size == (16, 16)
