import math

import numpy as np
import pytest

import minr
from minr.metrics import mse, psnr, reconstruct_volume, write_metrics_csv
from minr.training import FinetuneConfig, finetune_volume, train_scratch
from minr.volume import from_array

from conftest import constant_volume, tiny_schema


def test_reconstruct_zero_net_constant_volume():
    schema = tiny_schema()
    params = minr.unflatten(schema, np.zeros(minr.param_count(schema), dtype=np.float32))
    vol = reconstruct_volume(params, (5, 6, 7), (-1.0, 1.0))
    assert vol.dims == (5, 6, 7)
    assert np.all(vol.data == 0.0)
    assert not vol.normalized


def test_reconstruct_respects_value_range():
    schema = tiny_schema()
    params = minr.unflatten(schema, np.zeros(minr.param_count(schema), dtype=np.float32))
    vol = reconstruct_volume(params, (4, 4, 4), (10.0, 30.0))
    assert np.all(vol.data == 20.0)  # output 0 maps to the midpoint


def test_reconstruct_fitted_volume(rng):
    gt = from_array(rng.uniform(0, 1, (8, 8, 8)).astype(np.float32))
    norm = minr.normalize(gt)
    theta = train_scratch(norm, steps=400, optimizer="adam", lr=5e-3,
                          batch_size=512, seed=1,
                          schema=minr.siren_schema(hidden=32, layers=4))
    recon = reconstruct_volume(theta, gt.dims, norm.value_range)
    assert mse(minr.denormalize(norm), recon) < 1e-3
    norm_recon = reconstruct_volume(theta, gt.dims, (-1.0, 1.0))
    assert mse(norm, norm_recon) < 1e-6


def test_reconstruct_clamp():
    schema = (minr.LayerSchema(3, 1, True), minr.LayerSchema(1, 1, False))
    values = np.zeros(minr.param_count(schema), dtype=np.float32)
    values[-2] = 50.0  # final weight: outputs exceed [-1, 1]
    values[0] = 1.0
    params = minr.unflatten(schema, values)
    free = reconstruct_volume(params, (4, 4, 4), (0.0, 1.0))
    clamped = reconstruct_volume(params, (4, 4, 4), (0.0, 1.0), clamp=True)
    assert free.data.max() > 1.0
    assert clamped.data.max() <= 1.0 and clamped.data.min() >= 0.0


def test_psnr_formula():
    ref = constant_volume((4, 4, 4), 0.0)
    ref.data[: ref.size // 2] = 1.0  # range 1
    cand_data = ref.data.copy()
    cand = minr.Volume(ref.dims, cand_data + 0.01, ref.value_range)
    # MSE = 1e-4 with range 1 -> 40 dB
    assert psnr(ref, cand) == pytest.approx(40.0, abs=1e-6)
    worst = minr.Volume(ref.dims, ref.data + 1.0, ref.value_range)
    assert psnr(ref, worst) == pytest.approx(0.0, abs=1e-9)


def test_psnr_identical_is_inf():
    ref = constant_volume((4, 4, 4), 2.0)
    assert psnr(ref, ref) == math.inf


def test_psnr_dim_mismatch():
    with pytest.raises(ValueError):
        psnr(constant_volume((4, 4, 4), 0.0), constant_volume((4, 4, 5), 0.0))


def test_psnr_monotone_in_mse(rng):
    ref = from_array(rng.uniform(0, 1, (6, 6, 6)).astype(np.float32))
    values = []
    for scale in (0.001, 0.01, 0.1):
        noisy = minr.Volume(ref.dims, ref.data + np.float32(scale), ref.value_range)
        values.append(psnr(ref, noisy))
    assert values[0] > values[1] > values[2]


def test_evaluate_member_consistency(rng):
    gt = from_array(rng.uniform(-1, 1, (8, 8, 8)).astype(np.float32))
    norm = minr.normalize(gt)
    theta = train_scratch(norm, steps=300, optimizer="adam", lr=5e-3,
                          batch_size=512, seed=2,
                          schema=minr.siren_schema(hidden=32, layers=4))
    report = minr.evaluate_member(theta, gt, isovalue=0.0, member_index=3)
    assert report.member_index == 3
    recon = reconstruct_volume(theta, gt.dims, gt.value_range)
    assert report.psnr_db == pytest.approx(psnr(gt, recon), rel=1e-12)
    assert report.mse == pytest.approx(mse(gt, recon), rel=1e-12)
    assert report.chamfer is not None and report.chamfer >= 0.0


def test_evaluate_member_flat_gt_marks_chamfer_absent():
    gt = constant_volume((6, 6, 6), -3.0)  # strictly below isovalue 0
    schema = tiny_schema()
    params = minr.unflatten(schema, np.zeros(minr.param_count(schema), dtype=np.float32))
    report = minr.evaluate_member(params, gt, isovalue=0.0)
    assert report.chamfer is None
    assert math.isfinite(report.psnr_db) or report.psnr_db == math.inf


def test_quality_report_well_fitted_exceeds_40db(rng):
    blob = minr.synthetic.gaussian_blob((8, 8, 8), (3.5, 3.5, 3.5), 2.0)
    norm = minr.normalize(blob)
    theta = train_scratch(norm, steps=800, optimizer="adam", lr=5e-3,
                          batch_size=512, seed=3,
                          schema=minr.siren_schema(hidden=32, layers=4))
    report = minr.evaluate_member(theta, blob, isovalue=0.5)
    assert report.psnr_db > 40.0


def test_metrics_csv_format(tmp_path):
    reports = [
        minr.QualityReport(0, 41.5, 0.25, 1e-4),
        minr.QualityReport(1, math.inf, None, 0.0),
    ]
    path = tmp_path / "metrics.csv"
    write_metrics_csv(reports, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "member_index,psnr_db,chamfer,mse"
    assert lines[1].startswith("0,41.5,0.25,")
    assert lines[2].split(",")[2] == ""  # chamfer marker for empty meshes
    assert "inf" in lines[2]
