import numpy as np
import pytest

import minr
import minr.kernels as kernels
from minr.errors import DataError

from conftest import fd_gradient, oracle_forward, tiny_schema

BACKENDS = ["numpy"] + (["compiled"] if kernels.have_compiled() else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = kernels.backend_name()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def test_forward_zero_params_gives_zero(backend):
    schema = tiny_schema()
    params = minr.unflatten(schema, np.zeros(minr.param_count(schema), dtype=np.float32))
    coords = np.random.default_rng(0).uniform(-1, 1, (10, 3)).astype(np.float32)
    assert np.all(minr.forward(params, coords) == 0.0)


def test_forward_single_sine_unit(backend):
    # 1 -> 1 -> 1 net, first weight 1, omega 1: output is w2*sin(x).
    schema = (minr.LayerSchema(1, 1, True, omega=1.0), minr.LayerSchema(1, 1, False))
    params = minr.unflatten(schema, np.array([1.0, 0.0, 1.0, 0.0], dtype=np.float64))
    out = minr.forward(params, np.array([[0.0]]))
    assert out[0] == 0.0
    out = minr.forward(params, np.array([[0.5]]))
    assert out[0] == pytest.approx(np.sin(0.5), abs=1e-12)


def test_forward_matches_matrix_oracle(backend, rng):
    schema = minr.siren_schema(hidden=4, layers=2)
    params = minr.init_siren(schema, 3, dtype=np.float64)
    coords = rng.uniform(-1, 1, (5, 3))
    out = minr.forward(params, coords)
    expected = oracle_forward(schema, params.values, coords)[:, 0]
    assert np.abs(out - expected).max() < 1e-12


def test_forward_rejects_non_finite(backend):
    params = minr.init_siren(tiny_schema(), 0)
    coords = np.array([[0.0, np.nan, 0.0]], dtype=np.float32)
    with pytest.raises(DataError):
        minr.forward(params, coords)


def test_forward_repeat_call_bit_identical(backend, rng):
    params = minr.init_siren(tiny_schema(), 1)
    coords = rng.uniform(-1, 1, (64, 3)).astype(np.float32)
    assert np.array_equal(minr.forward(params, coords), minr.forward(params, coords))


def test_forward_chunking_invariance(backend, rng):
    # Per-row results are independent of the rest of the batch; BLAS kernel
    # selection may differ by shape, so equality holds to working precision.
    params = minr.init_siren(tiny_schema(), 1)
    coords = rng.uniform(-1, 1, (64, 3)).astype(np.float32)
    whole = minr.forward(params, coords)
    parts = np.concatenate([minr.forward(params, coords[:17]),
                            minr.forward(params, coords[17:])])
    assert np.abs(whole - parts).max() < 2e-6
    perm = rng.permutation(64)
    assert np.abs(minr.forward(params, coords[perm]) - whole[perm]).max() < 2e-6


def test_backward_zero_residual(backend, rng):
    params = minr.init_siren(tiny_schema(), 2)
    coords = rng.uniform(-1, 1, (20, 3)).astype(np.float32)
    targets = minr.forward(params, coords)
    loss, grad = minr.backward(params, coords, targets)
    assert loss == 0.0
    assert np.all(grad == 0.0)


def test_backward_final_bias_gradient(backend, rng):
    params = minr.init_siren(tiny_schema(), 4, dtype=np.float64)
    coords = rng.uniform(-1, 1, (33, 3))
    targets = rng.uniform(-1, 1, 33)
    pred = minr.forward(params, coords)
    _, grad = minr.backward(params, coords, targets)
    expected = np.mean(2.0 * (pred - targets))
    assert grad[-1] == pytest.approx(expected, rel=1e-12)


def test_backward_matches_finite_differences(backend, rng):
    schema = minr.siren_schema(hidden=6, layers=7)
    params = minr.init_siren(schema, 5, dtype=np.float64)
    coords = rng.uniform(-1, 1, (32, 3))
    targets = rng.uniform(-1, 1, 32)
    _, grad = minr.backward(params, coords, targets)
    fd = fd_gradient(params, coords, targets)
    rel = np.abs(grad - fd) / np.maximum(1.0, np.abs(fd))
    assert rel.max() < 1e-5


def test_backward_rejects_empty_batch(backend):
    params = minr.init_siren(tiny_schema(), 0)
    with pytest.raises(ValueError):
        minr.backward(params, np.zeros((0, 3), dtype=np.float32), np.zeros(0))


def test_backward_loss_is_mse(backend, rng):
    params = minr.init_siren(tiny_schema(), 6, dtype=np.float64)
    coords = rng.uniform(-1, 1, (16, 3))
    targets = rng.uniform(-1, 1, 16)
    loss, _ = minr.backward(params, coords, targets)
    pred = oracle_forward(params.schema, params.values, coords)[:, 0]
    assert loss == pytest.approx(float(np.mean((pred - targets) ** 2)), rel=1e-12)


@pytest.mark.skipif(not kernels.have_compiled(), reason="extension not built")
def test_backends_agree(rng):
    schema = minr.siren_schema(hidden=16, layers=4)
    for dtype, tol in ((np.float32, 2e-5), (np.float64, 1e-12)):
        params = minr.init_siren(schema, 9, dtype=dtype)
        coords = rng.uniform(-1, 1, (257, 3)).astype(dtype)
        targets = rng.uniform(-1, 1, 257).astype(dtype)
        results = {}
        for name in ("numpy", "compiled"):
            kernels.set_backend(name)
            try:
                out = minr.forward(params, coords)
                loss, grad = minr.backward(params, coords, targets)
            finally:
                kernels.set_backend("compiled" if kernels.have_compiled() else "numpy")
            results[name] = (out, loss, grad)
        out_a, loss_a, grad_a = results["numpy"]
        out_b, loss_b, grad_b = results["compiled"]
        assert np.abs(out_a - out_b).max() < tol
        assert abs(loss_a - loss_b) < tol
        scale = max(1.0, np.abs(grad_a).max())
        assert np.abs(grad_a - grad_b).max() / scale < tol
