"""Reconstruction and quality measurement: full-grid decoding, PSNR, Chamfer."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .chamfer import chamfer
from .marching import marching_cubes
from .siren import MlpParameters, forward
from .volume import Volume, axis_coordinates


def reconstruct_volume(params: MlpParameters, dims, value_range,
                       clamp=False, chunk=1 << 16) -> Volume:
    """Evaluate the network on every grid coordinate and map back to data units.

    Values are not clamped to the recorded range unless asked; the returned
    value_range reflects the reconstructed data itself.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError("dims must be positive")
    axes = [axis_coordinates(d) for d in dims]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    coords = np.stack(
        [gx.ravel(order="F"), gy.ravel(order="F"), gz.ravel(order="F")], axis=1
    ).astype(np.float32)
    out = np.empty(coords.shape[0], dtype=np.float64)
    for start in range(0, coords.shape[0], chunk):
        out[start : start + chunk] = forward(params, coords[start : start + chunk])
    lo, hi = value_range
    data = (out + 1.0) * (0.5 * (hi - lo)) + lo
    if clamp:
        np.clip(data, min(lo, hi), max(lo, hi), out=data)
    data = data.astype(np.float32)
    return Volume(dims, data, (float(data.min()), float(data.max())))


def mse(reference: Volume, candidate: Volume) -> float:
    if reference.dims != candidate.dims:
        raise ValueError(f"dims differ: {reference.dims} vs {candidate.dims}")
    diff = reference.data.astype(np.float64) - candidate.data.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(reference: Volume, candidate: Volume) -> float:
    """10*log10(range^2 / MSE) with range taken from the reference volume.

    Identical volumes give +inf.
    """
    err = mse(reference, candidate)
    data_range = float(reference.data.max()) - float(reference.data.min())
    if err == 0.0:
        return math.inf
    if data_range == 0.0:
        return -math.inf
    return 10.0 * math.log10(data_range * data_range / err)


@dataclass
class QualityReport:
    member_index: int
    psnr_db: float
    chamfer: float  # None when either isosurface is empty
    mse: float


def evaluate_member(params: MlpParameters, gt_volume: Volume, isovalue,
                    value_range=None, member_index=-1, clamp=False) -> QualityReport:
    """Reconstruct at the ground-truth grid and compare volumes and isosurfaces.

    `value_range` is the range used to map network output back to data units;
    it defaults to the ground-truth member's own range (the convention used
    when the model was fit to that member).
    """
    if value_range is None:
        value_range = gt_volume.value_range
    recon = reconstruct_volume(params, gt_volume.dims, value_range, clamp=clamp)
    err = mse(gt_volume, recon)
    quality = psnr(gt_volume, recon)
    mesh_gt = marching_cubes(gt_volume, isovalue)
    mesh_rc = marching_cubes(recon, isovalue)
    if mesh_gt.is_empty or mesh_rc.is_empty:
        cd = None
    else:
        cd = chamfer(mesh_gt.vertices, mesh_rc.vertices)
    return QualityReport(member_index, quality, cd, err)


def write_metrics_csv(reports, path) -> None:
    """Append-style CSV: member_index, psnr_db, chamfer, mse (header included)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["member_index", "psnr_db", "chamfer", "mse"])
        for r in reports:
            cd = "" if r.chamfer is None else f"{r.chamfer:.10g}"
            writer.writerow([r.member_index, f"{r.psnr_db:.10g}", cd, f"{r.mse:.10g}"])
