"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's internals: the reference
forward pass unpacks the flat parameter vector itself, and gradient checks use
central finite differences of the loss.
"""

import numpy as np
import pytest

import minr


def oracle_forward(schema, values, coords):
    """Direct per-layer matrix arithmetic from the documented flat layout:
    layer 0 weights row-major, layer 0 bias, layer 1 weights, ...
    """
    x = np.asarray(coords, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    offset = 0
    for layer in schema:
        w = values[offset : offset + layer.in_dim * layer.out_dim].reshape(
            layer.out_dim, layer.in_dim
        )
        offset += layer.in_dim * layer.out_dim
        b = values[offset : offset + layer.out_dim]
        offset += layer.out_dim
        z = x @ w.T + b
        x = np.sin(layer.omega * z) if layer.has_sine else z
    return x


def mse_loss(schema, values, coords, targets):
    out = oracle_forward(schema, values, coords)
    t = np.asarray(targets, dtype=np.float64).reshape(out.shape)
    return float(np.mean((out - t) ** 2))


def fd_gradient(params, coords, targets, h=1e-5):
    """Central finite differences of the library loss, one parameter at a time."""
    base = params.values.astype(np.float64)
    grad = np.zeros_like(base)
    for i in range(base.size):
        plus = base.copy()
        plus[i] += h
        minus = base.copy()
        minus[i] -= h
        grad[i] = (
            mse_loss(params.schema, plus, coords, targets)
            - mse_loss(params.schema, minus, coords, targets)
        ) / (2 * h)
    return grad


def brute_force_chamfer(a, b):
    """O(n*m) symmetric Chamfer distance, no spatial index."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    return 0.5 * (np.mean(np.sqrt(d2.min(axis=1))) + np.mean(np.sqrt(d2.min(axis=0))))


def tiny_schema(hidden=8, layers=3):
    return minr.siren_schema(hidden=hidden, layers=layers)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_dataset(directory, volumes, name="test"):
    """Write Volume objects as a raw-file dataset; returns the descriptor path."""
    directory.mkdir(parents=True, exist_ok=True)
    pattern = "vol_{index:04}.raw"
    for i, vol in enumerate(volumes):
        minr.write_raw(vol, directory / pattern.format(index=i))
    desc = minr.DatasetDescriptor(
        name=name,
        dims=volumes[0].dims,
        count=len(volumes),
        path_pattern=pattern,
        base_dir=directory,
    )
    path = directory / f"{name}.json"
    from minr.volume import save_descriptor

    save_descriptor(desc, path)
    return path


def constant_volume(dims, value):
    from minr.volume import from_array

    return from_array(np.full(dims, value, dtype=np.float32))
