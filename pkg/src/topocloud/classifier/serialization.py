"""Model file: ``TMDL1`` magic, u64 length + JSON metadata, little-endian float64
tensors in the order listed in the metadata, then a SHA-256 of everything before it."""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .network import CnnModel

MODEL_MAGIC = b"TMDL1"
MODEL_VERSION = 1
_LEN = struct.Struct("<Q")
_DIGEST = 32


class ModelFileError(ValueError):
    pass


def _tensors(model: CnnModel):
    items = [(f"param:{k}", v) for k, v in model.params.items()]
    items += [(f"buffer:{k}", v) for k, v in model.buffers.items()]
    items += [("norm_mean", model.norm_mean), ("norm_std", model.norm_std)]
    return items


def model_to_bytes(model: CnnModel) -> bytes:
    tensors = _tensors(model)
    meta = {
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "input_len": model.input_len,
        "channels": list(model.channels),
        "kernels": list(model.kernels),
        "tensors": [[name, list(arr.shape)] for name, arr in tensors],
        "meta": model.meta,
    }
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(np.ascontiguousarray(arr, dtype="<f8").tobytes() for _, arr in tensors)
    blob = MODEL_MAGIC + _LEN.pack(len(header)) + header + body
    return blob + hashlib.sha256(blob).digest()


def model_from_bytes(data: bytes) -> CnnModel:
    if not data.startswith(MODEL_MAGIC):
        raise ModelFileError("not a model file (bad magic)")
    if len(data) < len(MODEL_MAGIC) + _LEN.size + _DIGEST:
        raise ModelFileError("checksum failure: model file truncated")
    blob, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(blob).digest() != digest:
        raise ModelFileError("checksum failure: model file corrupt or truncated")
    (hlen,) = _LEN.unpack_from(blob, len(MODEL_MAGIC))
    start = len(MODEL_MAGIC) + _LEN.size
    meta = json.loads(blob[start:start + hlen].decode())
    if meta.get("version") != MODEL_VERSION:
        raise ModelFileError(f"model file version {meta.get('version')} unsupported "
                             f"(expected {MODEL_VERSION})")
    offset = start + hlen
    params, buffers, extra = {}, {}, {}
    for name, shape in meta["tensors"]:
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)
        offset += 8 * count
        kind, _, key = name.partition(":")
        if kind == "param":
            params[key] = arr
        elif kind == "buffer":
            buffers[key] = arr
        else:
            extra[name] = arr
    if offset != len(blob):
        raise ModelFileError("payload size does not match tensor shapes")
    return CnnModel(meta["classes"], meta["input_len"], tuple(meta["channels"]), params, buffers,
                    extra["norm_mean"], extra["norm_std"], tuple(meta["kernels"]), meta["meta"])


def save_model(model: CnnModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> CnnModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
