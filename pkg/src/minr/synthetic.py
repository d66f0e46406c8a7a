"""Synthetic volume generators for tests, benchmarks and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .volume import DatasetDescriptor, Volume, from_array, save_descriptor, write_raw


def gaussian_blob(dims, center, sigma, amplitude=1.0) -> Volume:
    """A 3-D Gaussian bump centered at `center` (voxel units)."""
    nx, ny, nz = dims
    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    cx, cy, cz = center
    r2 = (i - cx) ** 2 + (j - cy) ** 2 + (k - cz) ** 2
    return from_array(amplitude * np.exp(-r2 / (2.0 * sigma**2)))


def sphere_distance(dims, center, radius) -> Volume:
    """Signed distance to a sphere: negative inside, zero on the surface."""
    nx, ny, nz = dims
    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    cx, cy, cz = center
    dist = np.sqrt((i - cx) ** 2 + (j - cy) ** 2 + (k - cz) ** 2)
    return from_array(dist - radius)


def write_blob_dataset(directory, count=8, dims=(32, 32, 32), sigma=4.0,
                       travel=0.5, name="blob") -> Path:
    """Write a translating-blob sequence as raw files plus a descriptor JSON.

    The blob moves diagonally across `travel` of the domain over the
    sequence. Returns the descriptor path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = dims
    pattern = "vol_{index:04}.raw"
    for t in range(count):
        frac = t / max(count - 1, 1)
        center = (
            nx * (0.5 - travel / 2 + travel * frac),
            ny * 0.5,
            nz * (0.5 - travel / 2 + travel * frac),
        )
        write_raw(gaussian_blob(dims, center, sigma), directory / pattern.format(index=t))
    desc = DatasetDescriptor(name=name, dims=dims, count=count,
                             path_pattern=pattern, base_dir=directory)
    path = directory / f"{name}.json"
    save_descriptor(desc, path)
    return path
