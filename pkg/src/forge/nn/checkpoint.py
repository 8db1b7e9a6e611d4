"""NNCK1 checkpoint container: JSON header + raw float32 parameter blob."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"NNCK1"


class CheckpointError(ValueError):
    pass


@dataclass
class ModelCheckpoint:
    kind: str  # denoiser | classifier | discriminator
    arrays: dict  # name -> float32 ndarray (params + buffers)
    step: int = 0
    meta: dict = field(default_factory=dict)  # ctor kwargs, norm stats, loss...

    def build(self):
        """Reconstruct the network this checkpoint was taken from."""
        from .models import ClassifierNet, DenoiserNet, DiscriminatorNet

        ctor = {"denoiser": DenoiserNet, "classifier": ClassifierNet,
                "discriminator": DiscriminatorNet}[self.kind]
        kwargs = dict(self.meta["ctor"])
        for key in ("widths", "fc"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        model = ctor(**kwargs)
        state = dict(model.state_arrays())
        if set(state) != set(self.arrays):
            raise CheckpointError("checkpoint arrays do not match model")
        for name, value in state.items():
            value[...] = self.arrays[name].reshape(value.shape)
        return model


def checkpoint_of(model, kind, step=0, meta=None) -> ModelCheckpoint:
    arrays = {n: np.array(v, dtype=np.float32, copy=True)
              for n, v in model.state_arrays()}
    return ModelCheckpoint(kind=kind, arrays=arrays, step=step,
                           meta=dict(meta or {}))


def save_checkpoint(path, ckpt: ModelCheckpoint) -> None:
    names = sorted(ckpt.arrays)
    header = {
        "kind": ckpt.kind,
        "step": ckpt.step,
        "meta": ckpt.meta,
        "arrays": [{"name": n, "shape": list(ckpt.arrays[n].shape)}
                   for n in names],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(ckpt.arrays[n], dtype="<f4").tobytes())


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path, "rb") as f:
        if f.read(5) != MAGIC:
            raise CheckpointError("bad magic")
        raw = f.read(4)
        if len(raw) != 4:
            raise CheckpointError("truncated header length")
        (hlen,) = struct.unpack("<I", raw)
        blob = f.read(hlen)
        if len(blob) != hlen:
            raise CheckpointError("truncated header")
        header = json.loads(blob)
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = f.read(4 * count)
            if len(data) != 4 * count:
                raise CheckpointError(f"truncated blob for {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(
                data, dtype="<f4").reshape(shape).copy()
    return ModelCheckpoint(kind=header["kind"], arrays=arrays,
                           step=header["step"], meta=header["meta"])
