"""Hot-loop kernels for the sine MLP, with backend selection at import time.

Two interchangeable primitive sets exist: `_fused` (Cython, BLAS-backed, fused
element-wise loops) and `reference` (pure numpy). The compiled backend is used
when importable; set MINR_BACKEND=numpy or MINR_BACKEND=compiled to force one.
Both produce the same results up to floating-point rounding; within a single
backend results are bit-deterministic.
"""

import os

import numpy as np

from . import reference

try:
    from . import _fused
except ImportError:
    _fused = None

_env = os.environ.get("MINR_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numpy", "compiled"):
    raise ValueError(f"MINR_BACKEND must be auto, numpy or compiled, not {_env!r}")
if _env == "compiled" and _fused is None:
    raise ImportError("MINR_BACKEND=compiled but the minr.kernels._fused extension is not built")

_active = reference if (_env == "numpy" or _fused is None) else _fused


def backend_name():
    """Name of the primitive set in use: 'compiled' or 'numpy'."""
    return "compiled" if _active is _fused else "numpy"


def have_compiled():
    return _fused is not None


def set_backend(name):
    """Switch backends at runtime (used by tests and benchmarks)."""
    global _active
    if name == "numpy":
        _active = reference
    elif name == "compiled":
        if _fused is None:
            raise ImportError("compiled kernels are not built")
        _active = _fused
    else:
        raise ValueError(f"unknown backend {name!r}")


def _run_forward(prims, schema, values, coords, keep_cache):
    from ..siren import layer_views

    views = layer_views(schema, values)
    n = coords.shape[0]
    x = coords
    inputs = [x] if keep_cache else None
    zs = [] if keep_cache else None
    for layer, (w, b) in zip(schema, views):
        z = np.empty((n, layer.out_dim), dtype=values.dtype)
        prims.affine(x, w, b, z)
        if layer.has_sine:
            a = np.empty_like(z)
            prims.sine_forward(z, layer.omega, a)
        else:
            a = z
        if keep_cache:
            zs.append(z)
            inputs.append(a)
        x = a
    return x, inputs, zs


def forward(schema, values, coords):
    """Batched network evaluation; returns an (N, out_dim) array."""
    out, _, _ = _run_forward(_active, schema, values, coords, keep_cache=False)
    return out


def forward_backward(schema, values, coords, targets):
    """MSE loss and flat gradient for a batch; returns (loss, grad)."""
    from ..siren import layer_views

    prims = _active
    out, inputs, zs = _run_forward(prims, schema, values, coords, keep_cache=True)
    delta = np.empty_like(out)
    loss = prims.mse_delta(out, targets, delta)

    grad = np.zeros_like(values)
    weight_views = layer_views(schema, values)
    grad_views = layer_views(schema, grad)
    for l in range(len(schema) - 1, -1, -1):
        layer = schema[l]
        w, _ = weight_views[l]
        dw, db = grad_views[l]
        if layer.has_sine:
            prims.sine_backward_scale(delta, zs[l], layer.omega)
        prims.weight_grads(delta, inputs[l], dw, db)
        if l > 0:
            dx = np.empty((coords.shape[0], layer.in_dim), dtype=values.dtype)
            prims.propagate(delta, w, dx)
            delta = dx
    return loss, grad
