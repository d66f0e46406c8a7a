import numpy as np
import pytest

import minr
from minr.optim import adam_init, adam_step

from conftest import tiny_schema


def _params_from(values):
    schema = (minr.LayerSchema(1, 1, True), minr.LayerSchema(1, 1, False))
    assert minr.param_count(schema) == 4
    return minr.unflatten(schema, np.asarray(values, dtype=np.float64))


def test_sgd_single_value():
    p = _params_from([1.0, 0.0, 0.0, 0.0])
    g = np.array([0.5, 0.0, 0.0, 0.0])
    out = minr.sgd_step(p, g, 0.1)
    assert out.values[0] == pytest.approx(0.95, abs=1e-15)


def test_sgd_zero_gradient_is_noop():
    p = minr.init_siren(tiny_schema(), 0)
    out = minr.sgd_step(p, np.zeros_like(p.values), 1e-4)
    assert np.array_equal(out.values, p.values)


def test_sgd_matches_scalar_loop(rng):
    p = minr.init_siren(tiny_schema(), 1, dtype=np.float64)
    g = rng.standard_normal(p.values.size)
    out = minr.sgd_step(p, g, 1e-4)
    expected = np.array([v - 1e-4 * gi for v, gi in zip(p.values, g)])
    assert np.array_equal(out.values, expected)


def test_sgd_leaves_input_untouched():
    p = minr.init_siren(tiny_schema(), 2)
    before = p.values.copy()
    minr.sgd_step(p, np.ones_like(p.values), 0.1)
    assert np.array_equal(p.values, before)


def test_sgd_length_mismatch():
    p = minr.init_siren(tiny_schema(), 0)
    with pytest.raises(ValueError):
        minr.sgd_step(p, np.zeros(3), 0.1)


def test_sgd_additivity(rng):
    p = minr.init_siren(tiny_schema(), 3, dtype=np.float64)
    g1 = rng.standard_normal(p.values.size)
    g2 = rng.standard_normal(p.values.size)
    combined = minr.sgd_step(p, g1 + g2, 0.01)
    sequential = minr.sgd_step(minr.sgd_step(p, g1, 0.01), g2, 0.01)
    assert np.allclose(combined.values, sequential.values, atol=1e-12)


def test_adam_first_step_magnitude(rng):
    p = minr.init_siren(tiny_schema(), 4, dtype=np.float64)
    g = rng.standard_normal(p.values.size)
    state = adam_init(p, lr=1e-3, eps=1e-300)
    _, out = adam_step(state, p, g)
    delta = np.abs(out.values - p.values)
    nonzero = g != 0
    assert np.allclose(delta[nonzero], 1e-3, rtol=1e-9)


def test_adam_zero_gradient_is_noop():
    p = minr.init_siren(tiny_schema(), 5)
    state = adam_init(p, lr=1e-3)
    for _ in range(5):
        state, p2 = adam_step(state, p, np.zeros_like(p.values))
        assert np.array_equal(p2.values, p.values)
        p = p2


def test_adam_matches_scalar_oracle():
    # Minimize (theta - 3)^2 in one dimension and compare against a
    # hand-rolled scalar Adam with the same hyperparameters.
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = _params_from([0.0, 0.0, 0.0, 0.0])
    state = adam_init(p, lr=lr, beta1=b1, beta2=b2, eps=eps)

    theta = 0.0
    m = v = 0.0
    for t in range(1, 11):
        grad_scalar = 2 * (theta - 3.0)
        g = np.array([grad_scalar, 0.0, 0.0, 0.0])
        state, p = adam_step(state, p, g)

        m = b1 * m + (1 - b1) * grad_scalar
        v = b2 * v + (1 - b2) * grad_scalar**2
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)
        assert p.values[0] == pytest.approx(theta, abs=1e-12)


def test_adam_dimension_mismatch():
    p = minr.init_siren(tiny_schema(), 0)
    other = minr.init_siren(minr.siren_schema(hidden=4, layers=2), 0)
    state = adam_init(other, lr=1e-3)
    with pytest.raises(ValueError):
        adam_step(state, p, np.zeros_like(p.values))
