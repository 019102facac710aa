"""Binary checkpoint files: model config, tensors, optimizer and rng state.

Layout (all integers little-endian):

    magic b"CSRK", uint32 version
    uint32 length, config JSON (utf-8, sorted keys)
    uint32 count, then per tensor:
        uint16 name length, name utf-8
        uint8 dtype code (0 = float32, 1 = float64), uint8 ndim
        uint32 * ndim shape, raw array bytes
    uint8 optimizer flag; when set: uint64 step count, 5 float64 hyper
        parameters (lr, beta1, beta2, eps, weight decay), then the first
        and second moment tensor blocks
    uint8 rng flag; when set: uint32 length, rng-state JSON

Tensors round-trip bit for bit; loading never silently casts.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .optim import Adam

_MAGIC = b"CSRK"
_VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


@dataclass
class Checkpoint:
    config: dict
    state: dict[str, np.ndarray]
    optimizer: Adam | None = None
    rng_state: dict | None = None


def _write_tensor(f, name: str, arr: np.ndarray) -> None:
    if arr.dtype == np.float32:
        code = 0
    elif arr.dtype == np.float64:
        code = 1
    else:
        raise ValueError(f"tensor {name!r} has unsupported dtype {arr.dtype}")
    encoded = name.encode("utf-8")
    f.write(struct.pack("<H", len(encoded)))
    f.write(encoded)
    f.write(struct.pack("<BB", code, arr.ndim))
    f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    f.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def _write_tensors(f, tensors: dict[str, np.ndarray]) -> None:
    f.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        _write_tensor(f, name, tensors[name])


def _read_exact(f, size: int) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise ValueError("checkpoint file is truncated")
    return data


def _read_tensor(f) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read_exact(f, 2))
    name = _read_exact(f, name_len).decode("utf-8")
    code, ndim = struct.unpack("<BB", _read_exact(f, 2))
    if code not in _DTYPES:
        raise ValueError(f"tensor {name!r} has unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
    dtype = _DTYPES[code]
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    raw = _read_exact(f, count * dtype.itemsize)
    arr = np.frombuffer(raw, dtype=dtype).reshape(shape)
    return name, arr.astype(arr.dtype.newbyteorder("="), copy=True)


def _read_tensors(f) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", _read_exact(f, 4))
    out = {}
    for _ in range(count):
        name, arr = _read_tensor(f)
        out[name] = arr
    return out


def save_checkpoint(path, config: dict, state: dict[str, np.ndarray],
                    optimizer: Adam | None = None,
                    rng_state: dict | None = None) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", _VERSION))
        blob = json.dumps(config, sort_keys=True).encode("utf-8")
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        _write_tensors(f, state)
        if optimizer is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            f.write(struct.pack("<Q", optimizer.step_count))
            f.write(struct.pack("<5d", optimizer.learning_rate, optimizer.beta1,
                                optimizer.beta2, optimizer.eps,
                                optimizer.weight_decay))
            _write_tensors(f, optimizer.m)
            _write_tensors(f, optimizer.v)
        if rng_state is None:
            f.write(struct.pack("<B", 0))
        else:
            f.write(struct.pack("<B", 1))
            blob = json.dumps(rng_state, sort_keys=True).encode("utf-8")
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(f, 4))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (config_len,) = struct.unpack("<I", _read_exact(f, 4))
        config = json.loads(_read_exact(f, config_len).decode("utf-8"))
        state = _read_tensors(f)

        optimizer = None
        (has_opt,) = struct.unpack("<B", _read_exact(f, 1))
        if has_opt:
            (step_count,) = struct.unpack("<Q", _read_exact(f, 8))
            lr, b1, b2, eps, wd = struct.unpack("<5d", _read_exact(f, 40))
            optimizer = Adam(learning_rate=lr, beta1=b1, beta2=b2, eps=eps,
                             weight_decay=wd)
            optimizer.step_count = step_count
            optimizer.m = _read_tensors(f)
            optimizer.v = _read_tensors(f)

        rng_state = None
        (has_rng,) = struct.unpack("<B", _read_exact(f, 1))
        if has_rng:
            (rng_len,) = struct.unpack("<I", _read_exact(f, 4))
            rng_state = json.loads(_read_exact(f, rng_len).decode("utf-8"))

        if f.read(1):
            raise ValueError(f"{path}: trailing bytes after checkpoint payload")
    return Checkpoint(config=config, state=state, optimizer=optimizer,
                      rng_state=rng_state)
