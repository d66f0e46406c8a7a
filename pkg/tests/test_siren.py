import numpy as np
import pytest

import minr
from minr.errors import SchemaError
from minr.siren import layer_views, param_count

from conftest import tiny_schema


def test_default_schema_parameter_count():
    # (3*256+256) + 5*(256*256+256) + (256*1+1)
    assert param_count(minr.default_schema()) == 330_241


def test_default_schema_shape():
    schema = minr.default_schema()
    assert len(schema) == 7
    assert schema[0].in_dim == 3 and schema[0].out_dim == 256
    assert all(l.has_sine for l in schema[:-1])
    assert not schema[-1].has_sine
    assert schema[-1].out_dim == 1


def test_init_deterministic():
    schema = tiny_schema()
    a = minr.init_siren(schema, 7)
    b = minr.init_siren(schema, 7)
    assert np.array_equal(a.values, b.values)
    c = minr.init_siren(schema, 8)
    assert not np.array_equal(a.values, c.values)


def test_init_rejects_bad_schema():
    with pytest.raises(SchemaError):
        minr.init_siren((minr.LayerSchema(0, 4, True), minr.LayerSchema(4, 1, False)), 0)
    with pytest.raises(SchemaError):
        minr.init_siren((minr.LayerSchema(3, 4, True), minr.LayerSchema(4, 1, True)), 0)


def test_init_first_layer_uniform_bounds():
    # Wide first layer gives >=1e5 weight samples for the statistical check.
    schema = (
        minr.LayerSchema(3, 40_000, True),
        minr.LayerSchema(40_000, 1, False),
    )
    params = minr.init_siren(schema, 3)
    w0, b0 = layer_views(params.schema, params.values)[0]
    bound = 1.0 / 3.0
    assert w0.size >= 100_000
    assert w0.min() >= -bound and w0.max() <= bound
    # Empirical extremes should cover at least 99% of the stated interval.
    assert (w0.max() - w0.min()) >= 0.99 * 2 * bound
    assert np.all(b0 == 0)


def test_init_hidden_layer_uniform_bounds():
    schema = minr.siren_schema(hidden=256, layers=3)
    params = minr.init_siren(schema, 5)
    w1, b1 = layer_views(params.schema, params.values)[1]
    bound = np.sqrt(6.0 / 256) / 30.0
    assert w1.min() >= -bound and w1.max() <= bound
    assert (w1.max() - w1.min()) >= 0.99 * 2 * bound
    assert np.all(b1 == 0)


def test_flatten_unflatten_roundtrip():
    params = minr.init_siren(tiny_schema(), 11)
    flat = minr.flatten(params)
    again = minr.unflatten(params.schema, flat)
    assert np.array_equal(again.values, params.values)
    assert np.array_equal(minr.flatten(again), flat)


def test_flatten_default_schema_length():
    params = minr.init_siren(minr.siren_schema(hidden=4, layers=7), 0)
    assert minr.flatten(params).size == param_count(params.schema)


def test_unflatten_length_mismatch():
    with pytest.raises(SchemaError):
        minr.unflatten(tiny_schema(), np.zeros(3))


def test_param_count_formula_random_schemas(rng):
    for _ in range(20):
        layers = int(rng.integers(2, 6))
        dims = [int(rng.integers(1, 9)) for _ in range(layers + 1)]
        schema = tuple(
            minr.LayerSchema(dims[i], dims[i + 1], i < layers - 1)
            for i in range(layers)
        )
        params = minr.init_siren(schema, 0)
        expected = sum(d_in * d_out + d_out for d_in, d_out in zip(dims, dims[1:]))
        assert params.values.size == expected
