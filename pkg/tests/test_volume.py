import numpy as np
import pytest

import minr
from minr.errors import DataError, FormatError
from minr.volume import (
    axis_coordinates,
    from_array,
    grid_coords,
    load_descriptor,
    retained_fraction,
    subsample_volume,
)

from conftest import constant_volume, make_dataset


def test_load_raw_layout(tmp_path):
    path = tmp_path / "v.raw"
    np.arange(8, dtype="<f4").tofile(path)
    vol = minr.load_raw(path, (2, 2, 2))
    assert vol.voxel(1, 0, 0) == 1.0
    assert vol.voxel(0, 1, 0) == 2.0
    assert vol.voxel(0, 0, 1) == 4.0
    assert vol.value_range == (0.0, 7.0)
    assert not vol.normalized


def test_raw_roundtrip(tmp_path, rng):
    vol = from_array(rng.standard_normal((5, 4, 3)).astype(np.float32))
    minr.write_raw(vol, tmp_path / "v.raw")
    back = minr.load_raw(tmp_path / "v.raw", vol.dims)
    assert np.array_equal(back.data, vol.data)


def test_raw_roundtrip_large(tmp_path, rng):
    vol = from_array(rng.standard_normal((128, 128, 128)).astype(np.float32))
    minr.write_raw(vol, tmp_path / "big.raw")
    assert (tmp_path / "big.raw").read_bytes() == vol.data.astype("<f4").tobytes()


def test_load_raw_size_mismatch(tmp_path):
    path = tmp_path / "bad.raw"
    np.arange(9, dtype="<f4").tofile(path)
    with pytest.raises(FormatError):
        minr.load_raw(path, (2, 2, 2))


def test_load_raw_rejects_non_finite(tmp_path):
    path = tmp_path / "nan.raw"
    np.array([0, 1, 2, np.nan, 4, 5, 6, 7], dtype="<f4").tofile(path)
    with pytest.raises(DataError):
        minr.load_raw(path, (2, 2, 2))


def test_normalize_maps_to_unit_interval():
    vol = constant_volume((2, 2, 2), 0.0)
    vol.data[:4] = 10.0
    vol = from_array(vol.grid)
    norm = minr.normalize(vol)
    assert set(np.unique(norm.data)) == {-1.0, 1.0}
    assert norm.value_range == (0.0, 10.0)
    assert norm.normalized


def test_normalize_constant_volume():
    norm = minr.normalize(constant_volume((3, 3, 3), 5.0))
    assert np.all(norm.data == 0.0)
    assert norm.value_range == (5.0, 5.0)


def test_normalize_twice_rejected():
    norm = minr.normalize(constant_volume((2, 2, 2), 1.0))
    with pytest.raises(ValueError):
        minr.normalize(norm)


def test_denormalize_roundtrip(rng):
    vol = from_array(rng.uniform(-3.0, 7.0, (6, 5, 4)).astype(np.float32))
    back = minr.denormalize(minr.normalize(vol))
    scale = max(abs(v) for v in vol.value_range)
    assert np.abs(back.data - vol.data).max() <= 1e-6 * scale


def test_coord_of_index_endpoints():
    assert minr.coord_of_index((5, 3, 1), (0, 0, 0)) == (-1.0, -1.0, 0.0)
    assert minr.coord_of_index((5, 3, 1), (4, 2, 0)) == (1.0, 1.0, 0.0)
    assert minr.coord_of_index((5, 3, 2), (1, 1, 1)) == (-0.5, 0.0, 1.0)


def test_coord_of_index_out_of_range():
    with pytest.raises(IndexError):
        minr.coord_of_index((4, 4, 4), (4, 0, 0))


def test_axis_coordinates_degenerate():
    assert axis_coordinates(1).tolist() == [0.0]
    assert axis_coordinates(3).tolist() == [-1.0, 0.0, 1.0]


def test_subsample_member_count(tmp_path):
    vols = [constant_volume((4, 4, 4), float(i)) for i in range(20)]
    desc = load_descriptor(make_dataset(tmp_path, vols))
    subs = minr.subsample_dataset(desc, 1, 2)
    assert len(subs) == 10
    assert [idx for _, idx in subs] == list(range(0, 20, 2))


def test_subsample_dims_ceil_division():
    vol = constant_volume((640, 240, 80), 1.0)
    sub = subsample_volume(vol, 4)
    assert sub.dims == (160, 60, 20)


def test_subsample_retained_fraction(tmp_path):
    vols = [constant_volume((8, 8, 8), float(i)) for i in range(4)]
    desc = load_descriptor(make_dataset(tmp_path, vols))
    assert retained_fraction(desc, 4, 2) == pytest.approx(1.0 / 128.0)
    subs = minr.subsample_dataset(desc, 4, 2)
    kept = sum(v.size for v, _ in subs)
    assert kept / (4 * 512) == pytest.approx(1.0 / 128.0)


def test_subsample_fraction_uneven_dims(tmp_path):
    vols = [constant_volume((10, 6, 7), float(i)) for i in range(5)]
    desc = load_descriptor(make_dataset(tmp_path, vols))
    frac = retained_fraction(desc, 4, 2)
    subs = minr.subsample_dataset(desc, 4, 2)
    kept = sum(v.size for v, _ in subs)
    assert frac == pytest.approx(kept / (5 * 10 * 6 * 7))
    assert subs[0][0].dims == (3, 2, 2)


def test_subsample_keeps_original_coordinates(rng):
    vol = from_array(rng.standard_normal((9, 9, 9)).astype(np.float32))
    sub = subsample_volume(vol, 4)
    # Voxel (1,1,1) of the subsample is voxel (4,4,4) of the original grid.
    expected = minr.coord_of_index((9, 9, 9), (4, 4, 4))
    ax, ay, az = sub.axis_coords
    assert (ax[1], ay[1], az[1]) == expected
    assert sub.voxel(1, 1, 1) == vol.voxel(4, 4, 4)


def test_subsample_rejects_bad_interval(tmp_path):
    vols = [constant_volume((4, 4, 4), 0.0)]
    desc = load_descriptor(make_dataset(tmp_path, vols))
    with pytest.raises(ValueError):
        minr.subsample_dataset(desc, 0, 1)


def test_sample_batch_size_and_consistency(rng):
    vol = minr.normalize(from_array(np.random.default_rng(3).standard_normal((8, 8, 8)).astype(np.float32)))
    batch = minr.sample_batch(vol, 50_000, rng)
    assert batch.coords.shape == (50_000, 3)
    assert batch.values.shape == (50_000,)
    nx, ny, nz = vol.dims
    i = np.rint((batch.coords[:, 0].astype(np.float64) + 1) * (nx - 1) / 2).astype(int)
    j = np.rint((batch.coords[:, 1].astype(np.float64) + 1) * (ny - 1) / 2).astype(int)
    k = np.rint((batch.coords[:, 2].astype(np.float64) + 1) * (nz - 1) / 2).astype(int)
    flat = i + nx * (j + ny * k)
    assert np.array_equal(batch.values, vol.data[flat])


def test_sample_batch_deterministic():
    vol = constant_volume((4, 4, 4), 1.0)
    a = minr.sample_batch(vol, 100, np.random.default_rng(5))
    b = minr.sample_batch(vol, 100, np.random.default_rng(5))
    c = minr.sample_batch(vol, 100, np.random.default_rng(6))
    assert np.array_equal(a.coords, b.coords)
    assert not np.array_equal(a.coords, c.coords)


def test_grid_coords_order():
    vol = constant_volume((3, 2, 2), 0.0)
    coords = grid_coords(vol)
    assert coords.shape == (12, 3)
    assert coords[0].tolist() == [-1.0, -1.0, -1.0]
    assert coords[1].tolist() == [0.0, -1.0, -1.0]  # x varies fastest
    assert coords[3].tolist() == [-1.0, 1.0, -1.0]


def test_descriptor_labels_checked(tmp_path):
    vols = [constant_volume((2, 2, 2), 0.0), constant_volume((2, 2, 2), 1.0)]
    path = make_dataset(tmp_path, vols)
    import json

    doc = json.loads(path.read_text())
    doc["labels"] = [{"h0": 1}]
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        load_descriptor(path)


def test_descriptor_missing_member(tmp_path):
    vols = [constant_volume((2, 2, 2), 0.0)]
    path = make_dataset(tmp_path, vols)
    (tmp_path / "vol_0000.raw").unlink()
    with pytest.raises(FormatError):
        load_descriptor(path)
