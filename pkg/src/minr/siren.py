"""Sine-activated MLP: schema, parameter layout, initialization, forward and backward.

The network maps coordinates in [-1, 1]^d to scalar values. Every layer but the
last applies sin(omega * (W x + b)); the last layer is purely affine.

Parameters live in one flat vector with a frozen layout (checkpoints depend on
it): layer 0 weights row-major (out x in), layer 0 bias, layer 1 weights,
layer 1 bias, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError
from . import kernels

DEFAULT_OMEGA = 30.0


@dataclass(frozen=True)
class LayerSchema:
    in_dim: int
    out_dim: int
    has_sine: bool
    omega: float = DEFAULT_OMEGA


def siren_schema(in_dim=3, hidden=256, layers=7, out_dim=1, omega=DEFAULT_OMEGA):
    """Build a sine-MLP schema with `layers` weight layers (final one affine)."""
    if layers < 2:
        raise SchemaError("need at least an input and an output layer")
    schema = [LayerSchema(in_dim, hidden, True, omega)]
    for _ in range(layers - 2):
        schema.append(LayerSchema(hidden, hidden, True, omega))
    schema.append(LayerSchema(hidden, out_dim, False, omega))
    return tuple(schema)


def default_schema():
    """The default backbone: 7 layers, hidden width 256, 3-D in, scalar out."""
    return siren_schema()


def validate_schema(schema):
    schema = tuple(schema)
    if not schema:
        raise SchemaError("empty schema")
    for i, layer in enumerate(schema):
        if layer.in_dim < 1 or layer.out_dim < 1:
            raise SchemaError(f"layer {i} has non-positive dimensions")
        if i > 0 and schema[i - 1].out_dim != layer.in_dim:
            raise SchemaError(f"layer {i} input dim does not match layer {i-1} output dim")
    if schema[-1].has_sine:
        raise SchemaError("final layer must be affine (has_sine=False)")
    return schema


def param_count(schema):
    return sum(l.in_dim * l.out_dim + l.out_dim for l in schema)


@dataclass
class MlpParameters:
    """Flat parameter vector plus the layer schema describing its layout."""

    schema: tuple
    values: np.ndarray

    def __post_init__(self):
        self.schema = validate_schema(self.schema)
        expected = param_count(self.schema)
        if self.values.ndim != 1 or self.values.size != expected:
            raise SchemaError(
                f"parameter vector has length {self.values.size}, schema needs {expected}"
            )

    @property
    def dtype(self):
        return self.values.dtype

    @property
    def size(self):
        return self.values.size


def layer_views(schema, values):
    """Per-layer (weight, bias) views into a flat vector, in the frozen order."""
    views = []
    offset = 0
    for layer in schema:
        w = values[offset : offset + layer.in_dim * layer.out_dim]
        w = w.reshape(layer.out_dim, layer.in_dim)
        offset += layer.in_dim * layer.out_dim
        b = values[offset : offset + layer.out_dim]
        offset += layer.out_dim
        views.append((w, b))
    return views


def init_siren(schema, seed, dtype=np.float32):
    """Random initialization of a sine MLP.

    First-layer weights are uniform in [-1/in_dim, 1/in_dim]; all later layers
    uniform in [-sqrt(6/in_dim)/omega, +sqrt(6/in_dim)/omega]. Biases start at
    zero. Deterministic for a given seed.
    """
    schema = validate_schema(schema)
    dtype = np.dtype(dtype)
    if dtype not in (np.float32, np.float64):
        raise TypeError("dtype must be float32 or float64")
    rng = np.random.default_rng(seed)
    values = np.zeros(param_count(schema), dtype=np.float64)
    for i, (w, _) in enumerate(layer_views(schema, values)):
        layer = schema[i]
        if i == 0:
            bound = 1.0 / layer.in_dim
        else:
            bound = np.sqrt(6.0 / layer.in_dim) / layer.omega
        w[:] = rng.uniform(-bound, bound, size=w.shape)
    return MlpParameters(schema, values.astype(dtype))


def flatten(params: MlpParameters) -> np.ndarray:
    """Copy of the flat parameter vector in the frozen layer order."""
    return params.values.copy()


def unflatten(schema, vector) -> MlpParameters:
    vector = np.asarray(vector)
    return MlpParameters(tuple(schema), vector.copy())


def _check_coords(params, coords):
    coords = np.ascontiguousarray(coords, dtype=params.dtype)
    if coords.ndim != 2 or coords.shape[1] != params.schema[0].in_dim:
        raise ValueError(
            f"coords must be (N, {params.schema[0].in_dim}), got {coords.shape}"
        )
    if not np.isfinite(coords).all():
        raise DataError("coords contain non-finite values")
    return coords


def forward(params: MlpParameters, coords) -> np.ndarray:
    """Evaluate the network on a batch of coordinates.

    Rows are independent: the result for each coordinate does not depend on
    the rest of the batch or on chunking.
    """
    coords = _check_coords(params, coords)
    out = kernels.forward(params.schema, params.values, coords)
    if params.schema[-1].out_dim == 1:
        return out[:, 0]
    return out


def backward(params: MlpParameters, coords, targets):
    """MSE loss and its exact gradient with respect to every parameter.

    Returns (loss, grad) where grad is a flat vector aligned with the
    parameter layout.
    """
    coords = _check_coords(params, coords)
    targets = np.ascontiguousarray(targets, dtype=params.dtype)
    out_dim = params.schema[-1].out_dim
    if targets.ndim == 1:
        targets = targets.reshape(-1, 1)
    if targets.shape != (coords.shape[0], out_dim):
        raise ValueError(
            f"targets must be ({coords.shape[0]}, {out_dim}), got {targets.shape}"
        )
    if coords.shape[0] == 0:
        raise ValueError("empty batch")
    if not np.isfinite(targets).all():
        raise DataError("targets contain non-finite values")
    return kernels.forward_backward(params.schema, params.values, coords, targets)
