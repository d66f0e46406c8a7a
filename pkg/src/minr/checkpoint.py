"""Binary model checkpoints.

Layout (all little-endian):

    magic  "MINR"  (4 bytes)
    u8     format version (currently 1)
    u8     bytes per parameter: 4 (float32) or 8 (float64)
    u16    layer count L
    L x (u32 in_dim, u32 out_dim, u8 has_sine, f64 omega)
    f64    value_range min
    f64    value_range max
    u64    parameter count P
    P x f32/f64 flat parameters in the frozen layer order
    u32    CRC32 of every preceding byte
"""

from __future__ import annotations

import re
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import FormatError, SchemaError
from .siren import LayerSchema, MlpParameters, param_count

MAGIC = b"MINR"
VERSION = 1

_HEAD = struct.Struct("<4sBBH")
_LAYER = struct.Struct("<IIBd")
_RANGE = struct.Struct("<ddQ")
_CRC = struct.Struct("<I")


def write_checkpoint(path, params: MlpParameters, value_range) -> None:
    dtype = params.values.dtype
    if dtype == np.float32:
        width = 4
    elif dtype == np.float64:
        width = 8
    else:
        raise TypeError(f"unsupported parameter dtype {dtype}")
    blob = bytearray()
    blob += _HEAD.pack(MAGIC, VERSION, width, len(params.schema))
    for layer in params.schema:
        blob += _LAYER.pack(layer.in_dim, layer.out_dim, int(layer.has_sine), layer.omega)
    lo, hi = value_range
    blob += _RANGE.pack(float(lo), float(hi), params.values.size)
    blob += params.values.astype(f"<f{width}").tobytes()
    blob += _CRC.pack(zlib.crc32(bytes(blob)))
    Path(path).write_bytes(bytes(blob))


def read_checkpoint(path):
    """Returns (MlpParameters, value_range). Raises FormatError on corruption."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEAD.size + _CRC.size:
        raise FormatError(f"{path}: truncated checkpoint")
    (stored_crc,) = _CRC.unpack(blob[-_CRC.size :])
    if zlib.crc32(blob[: -_CRC.size]) != stored_crc:
        raise FormatError(f"{path}: CRC mismatch, file is corrupt")
    magic, version, width, n_layers = _HEAD.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if width not in (4, 8):
        raise FormatError(f"{path}: bad precision flag {width}")
    offset = _HEAD.size
    schema = []
    for _ in range(n_layers):
        in_dim, out_dim, has_sine, omega = _LAYER.unpack_from(blob, offset)
        offset += _LAYER.size
        schema.append(LayerSchema(in_dim, out_dim, bool(has_sine), omega))
    lo, hi, count = _RANGE.unpack_from(blob, offset)
    offset += _RANGE.size
    schema = tuple(schema)
    if count != param_count(schema):
        raise FormatError(f"{path}: parameter count {count} does not match schema")
    end = offset + count * width
    if end != len(blob) - _CRC.size:
        raise FormatError(f"{path}: payload size mismatch")
    values = np.frombuffer(blob[offset:end], dtype=f"<f{width}").astype(
        np.float32 if width == 4 else np.float64
    )
    try:
        params = MlpParameters(schema, values)
    except SchemaError as e:
        raise FormatError(f"{path}: {e}") from None
    return params, (lo, hi)


def member_filename(index) -> str:
    return f"member_{index:04d}.minr"


_MEMBER_RE = re.compile(r"member_(\d+)\.minr$")


def load_model_dir(directory):
    """Read every member_*.minr in a directory; returns [(index, params, range)]."""
    directory = Path(directory)
    found = []
    for p in sorted(directory.glob("member_*.minr")):
        m = _MEMBER_RE.search(p.name)
        if not m:
            continue
        params, value_range = read_checkpoint(p)
        found.append((int(m.group(1)), params, value_range))
    if not found:
        raise FormatError(f"no member_*.minr checkpoints found in {directory}")
    found.sort(key=lambda t: t[0])
    return found
