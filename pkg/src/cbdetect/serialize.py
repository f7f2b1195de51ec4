"""Versioned binary container for trained models.

Layout: 5 magic bytes, a length-prefixed UTF-8 JSON header, then a count
of named numpy arrays each stored as (name, dtype, shape, raw C-order
bytes). Both the baseline ("CBBL1") and neural ("CBNN1") model files use
this container with different magic bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np

BASELINE_MAGIC = b"CBBL1"
NEURAL_MAGIC = b"CBNN1"


class ModelFileError(ValueError):
    pass


def _write_bytes(fh, payload: bytes):
    fh.write(struct.pack(">I", len(payload)))
    fh.write(payload)


def _read_bytes(fh) -> bytes:
    raw = fh.read(4)
    if len(raw) != 4:
        raise ModelFileError("truncated model file")
    (n,) = struct.unpack(">I", raw)
    payload = fh.read(n)
    if len(payload) != n:
        raise ModelFileError("truncated model file")
    return payload


def save_model_file(path, magic: bytes, header: dict,
                    arrays: dict[str, np.ndarray]):
    with open(path, "wb") as fh:
        fh.write(magic)
        _write_bytes(fh, json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(struct.pack(">I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            _write_bytes(fh, name.encode("utf-8"))
            _write_bytes(fh, str(arr.dtype).encode("utf-8"))
            fh.write(struct.pack(">I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack(">Q", dim))
            _write_bytes(fh, arr.tobytes())


def load_model_file(path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        got = fh.read(len(magic))
        if got != magic:
            raise ModelFileError(
                f"{path}: bad magic {got!r}, expected {magic!r}")
        header = json.loads(_read_bytes(fh).decode("utf-8"))
        (count,) = struct.unpack(">I", fh.read(4))
        arrays = {}
        for _ in range(count):
            name = _read_bytes(fh).decode("utf-8")
            dtype = np.dtype(_read_bytes(fh).decode("utf-8"))
            (ndim,) = struct.unpack(">I", fh.read(4))
            shape = tuple(
                struct.unpack(">Q", fh.read(8))[0] for _ in range(ndim))
            data = _read_bytes(fh)
            arrays[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
        return header, arrays
