"""CANNET01 model files.

Layout (little-endian): 8-byte magic ``CANNET01``; u32 format version; u32
depth, width, norm_mode, aux_channels, plain; f64 lrelu_alpha, bn_eps,
bn_momentum; every parameter array in ``CanModel.params`` order as float32
(kernels in (tap_row, tap_col, in, out) order), then the running statistics.
"""

import struct

import numpy as np

from .config import CanConfig, NormMode
from .model import CanModel, param_shapes, state_shapes

MAGIC = b"CANNET01"
VERSION = 1
_HEADER = struct.Struct("<I5I3d")


class ModelFormatError(ValueError):
    """Base class for unreadable model streams."""


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedStreamError(ModelFormatError):
    pass


class NonFiniteValueError(ModelFormatError):
    pass


class TrailingDataError(ModelFormatError):
    pass


def serialize_model(model):
    cfg = model.config
    parts = [MAGIC, _HEADER.pack(VERSION, cfg.depth, cfg.width, int(cfg.norm_mode),
                                 cfg.aux_channels, int(cfg.plain), cfg.lrelu_alpha,
                                 cfg.bn_eps, cfg.bn_momentum)]
    for arrays, shapes in ((model.params, param_shapes(cfg)), (model.state, state_shapes(cfg))):
        for name, shape in shapes.items():
            a = arrays[name]
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return b"".join(parts)


def deserialize_model(data):
    data = bytes(data)
    if len(data) < len(MAGIC) and MAGIC.startswith(data):
        raise TruncatedStreamError("stream ends inside the magic")
    if data[:len(MAGIC)] != MAGIC:
        raise BadMagicError("stream does not start with CANNET01")
    pos = len(MAGIC)
    if len(data) < pos + 4:
        raise TruncatedStreamError("stream ends inside the header")
    (version,) = struct.unpack_from("<I", data, pos)
    if version != VERSION:
        raise VersionMismatchError(f"format version {version}, expected {VERSION}")
    if len(data) < pos + _HEADER.size:
        raise TruncatedStreamError("stream ends inside the header")
    _, depth, width, norm, aux, plain, alpha, eps, mom = _HEADER.unpack_from(data, pos)
    pos += _HEADER.size
    try:
        cfg = CanConfig(depth=depth, width=width, norm_mode=NormMode(norm),
                        aux_channels=aux, plain=bool(plain), lrelu_alpha=alpha,
                        bn_eps=eps, bn_momentum=mom)
    except ValueError as exc:
        raise ModelFormatError(f"invalid header: {exc}") from None

    def take(shapes):
        nonlocal pos
        out = {}
        for name, shape in shapes.items():
            n = int(np.prod(shape))
            end = pos + 4 * n
            if end > len(data):
                raise TruncatedStreamError(f"stream ends inside {name}")
            a = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape)
            if not np.all(np.isfinite(a)):
                raise NonFiniteValueError(f"{name} contains non-finite values")
            out[name] = a.astype(np.float32)
            pos = end
        return out

    params = take(param_shapes(cfg))
    state = take(state_shapes(cfg))
    if pos != len(data):
        raise TrailingDataError(f"{len(data) - pos} unexpected bytes after the payload")
    for name, a in state.items():
        if name.endswith("running_var") and np.any(a < 0):
            raise ModelFormatError(f"{name} is negative")
    return CanModel(cfg, params, state)


def save_model(model, path):
    with open(path, "wb") as f:
        f.write(serialize_model(model))


def load_model(path):
    with open(path, "rb") as f:
        return deserialize_model(f.read())
