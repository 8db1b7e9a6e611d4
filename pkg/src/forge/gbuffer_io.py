"""Bit-exact g-buffer container ("GBUF1") and PNG previews."""

from __future__ import annotations

import struct

import numpy as np

from .render import GBuffer

MAGIC = b"GBUF1"

CHANNEL_ORDER = [
    "albedo.r", "albedo.g", "albedo.b",
    "normal.x", "normal.y", "normal.z",
    "depth", "ao", "coverage",
]


class GBufferFormatError(ValueError):
    pass


def _channels(gb: GBuffer):
    return {
        "albedo.r": gb.albedo[..., 0], "albedo.g": gb.albedo[..., 1],
        "albedo.b": gb.albedo[..., 2],
        "normal.x": gb.normal[..., 0], "normal.y": gb.normal[..., 1],
        "normal.z": gb.normal[..., 2],
        "depth": gb.depth, "ao": gb.ao,
        "coverage": gb.coverage.astype(np.float32),
    }


def write_gbuffer(path, gb: GBuffer) -> None:
    h, w = gb.shape
    chans = _channels(gb)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", w, h, len(CHANNEL_ORDER)))
        for name in CHANNEL_ORDER:
            f.write(name.encode("ascii").ljust(16))
            f.write(np.ascontiguousarray(chans[name], dtype="<f4").tobytes())


def read_gbuffer(path) -> GBuffer:
    with open(path, "rb") as f:
        magic = f.read(5)
        if magic != MAGIC:
            raise GBufferFormatError(f"bad magic {magic!r}")
        header = f.read(12)
        if len(header) != 12:
            raise GBufferFormatError("truncated header")
        w, h, n = struct.unpack("<III", header)
        chans = {}
        for _ in range(n):
            name_raw = f.read(16)
            if len(name_raw) != 16:
                raise GBufferFormatError("truncated channel name")
            name = name_raw.decode("ascii").rstrip(" ")
            data = f.read(4 * w * h)
            if len(data) != 4 * w * h:
                raise GBufferFormatError(f"truncated channel data for {name!r}")
            chans[name] = np.frombuffer(data, dtype="<f4").reshape(h, w)
    missing = [c for c in CHANNEL_ORDER if c not in chans]
    if missing:
        raise GBufferFormatError(f"missing channels: {missing}")
    coverage = chans["coverage"] > 0.5
    return GBuffer(
        albedo=np.stack([chans["albedo.r"], chans["albedo.g"],
                         chans["albedo.b"]], axis=-1),
        normal=np.stack([chans["normal.x"], chans["normal.y"],
                         chans["normal.z"]], axis=-1),
        depth=chans["depth"].copy(),
        ao=chans["ao"].copy(),
        coverage=coverage,
        objid=coverage.astype(np.int32),
    )


def gamma_encode(img: np.ndarray, gamma: float = 2.2) -> np.ndarray:
    return np.clip(img, 0.0, 1.0) ** (1.0 / gamma)


def write_png(path, img: np.ndarray, gamma: float = 2.2) -> None:
    """8-bit preview; all computation elsewhere stays on linear floats."""
    from PIL import Image as PILImage

    arr = (gamma_encode(np.asarray(img, dtype=np.float64), gamma) * 255 + 0.5)
    arr = arr.astype(np.uint8)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    mode = "L" if arr.ndim == 2 else "RGB"
    PILImage.fromarray(arr, mode=mode).save(path)
