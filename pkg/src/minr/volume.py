"""Volume representation, raw I/O, normalization, grid coordinates and sampling.

Raw files are little-endian float32 with x varying fastest, then y, then z
(flat index = i + nx*(j + ny*k)). Grid coordinates map each axis onto [-1, 1]
with index i at -1 + 2i/(D-1); a length-1 axis maps to 0.

A subsampled volume keeps the coordinates its voxels had on the original grid,
so a model pretrained on the sparse set and finetuned on the full set sees one
consistent coordinate field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

RAW_DTYPE = np.dtype("<f4")


def axis_coordinates(size: int) -> np.ndarray:
    """Normalized coordinates of one axis: -1 + 2i/(size-1); [0] if size == 1."""
    if size < 1:
        raise ValueError("axis size must be positive")
    if size == 1:
        return np.zeros(1)
    return -1.0 + 2.0 * np.arange(size) / (size - 1)


def coord_of_index(dims, index):
    """Normalized (x, y, z) of a grid index (i, j, k)."""
    out = []
    for d, i in zip(dims, index):
        if not 0 <= i < d:
            raise IndexError(f"index {index} out of range for dims {tuple(dims)}")
        out.append(0.0 if d == 1 else -1.0 + 2.0 * i / (d - 1))
    return tuple(out)


@dataclass
class Volume:
    """Dense scalar grid stored flat (x fastest) plus its coordinate field.

    `value_range` is the (min, max) of the original data and survives
    normalization so values can be mapped back. `axis_coords` defaults to the
    canonical grid of `dims`; subsampling substitutes the retained original
    coordinates.
    """

    dims: tuple
    data: np.ndarray
    value_range: tuple
    normalized: bool = False
    axis_coords: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if self.data.ndim != 1 or self.data.size != int(np.prod(self.dims)):
            raise ValueError(
                f"data length {self.data.size} does not match dims {self.dims}"
            )
        if self.axis_coords is None:
            self.axis_coords = tuple(axis_coordinates(d) for d in self.dims)

    @property
    def size(self):
        return self.data.size

    @property
    def grid(self):
        """(nx, ny, nz) view with grid[i, j, k] at x=i, y=j, z=k."""
        return self.data.reshape(self.dims, order="F")

    def voxel(self, i, j, k):
        nx, ny, _ = self.dims
        return float(self.data[i + nx * (j + ny * k)])


def from_array(arr, normalized=False) -> Volume:
    """Build a Volume from an (nx, ny, nz) array indexed [i, j, k]."""
    arr = np.asarray(arr)
    if arr.ndim != 3:
        raise ValueError("expected a 3-D array")
    data = np.asfortranarray(arr, dtype=np.float32).ravel(order="F")
    rng = (float(arr.min()), float(arr.max()))
    return Volume(arr.shape, data, rng, normalized=normalized)


def load_raw(path, dims) -> Volume:
    """Read a little-endian float32 raw volume with the given dimensions."""
    dims = tuple(int(d) for d in dims)
    expected = int(np.prod(dims)) * RAW_DTYPE.itemsize
    path = Path(path)
    actual = path.stat().st_size
    if actual != expected:
        raise FormatError(
            f"{path}: file is {actual} bytes, dims {dims} require {expected}"
        )
    data = np.fromfile(path, dtype=RAW_DTYPE).astype(np.float32)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: volume contains non-finite values")
    return Volume(dims, data, (float(data.min()), float(data.max())))


def write_raw(volume: Volume, path) -> None:
    """Inverse of load_raw."""
    path = Path(path)
    if str(path) == "":
        raise ValueError("empty path")
    volume.data.astype(RAW_DTYPE).tofile(path)


def normalize(volume: Volume) -> Volume:
    """Affine map of [min, max] onto [-1, 1]; constant volumes map to zero.

    The original (min, max) is kept in value_range for inversion.
    """
    if volume.normalized:
        raise ValueError("volume is already normalized")
    lo, hi = float(volume.data.min()), float(volume.data.max())
    if hi > lo:
        data = (volume.data.astype(np.float64) - lo) * (2.0 / (hi - lo)) - 1.0
        data = data.astype(np.float32)
    else:
        data = np.zeros_like(volume.data)
    return Volume(volume.dims, data, (lo, hi), normalized=True,
                  axis_coords=volume.axis_coords)


def denormalize(volume: Volume) -> Volume:
    """Map normalized values in [-1, 1] back to the stored value_range."""
    if not volume.normalized:
        raise ValueError("volume is not normalized")
    lo, hi = volume.value_range
    data = (volume.data.astype(np.float64) + 1.0) * (0.5 * (hi - lo)) + lo
    return Volume(volume.dims, data.astype(np.float32), (lo, hi), normalized=False,
                  axis_coords=volume.axis_coords)


@dataclass
class CoordBatch:
    """Paired coordinates (N x 3, on the source grid) and voxel values (N)."""

    coords: np.ndarray
    values: np.ndarray


def sample_batch(volume: Volume, n, rng) -> CoordBatch:
    """Draw n voxels uniformly with replacement; deterministic given rng state."""
    if n < 1:
        raise ValueError("batch size must be at least 1")
    if volume.size == 0:
        raise ValueError("empty volume")
    nx, ny, _ = volume.dims
    flat = rng.integers(0, volume.size, size=n)
    i = flat % nx
    j = (flat // nx) % ny
    k = flat // (nx * ny)
    ax, ay, az = volume.axis_coords
    coords = np.stack([ax[i], ay[j], az[k]], axis=1).astype(np.float32)
    return CoordBatch(coords, volume.data[flat])


def grid_coords(volume: Volume) -> np.ndarray:
    """All voxel coordinates as an (N, 3) float32 array, x fastest."""
    ax, ay, az = volume.axis_coords
    gx, gy, gz = np.meshgrid(ax, ay, az, indexing="ij")
    return np.stack(
        [gx.ravel(order="F"), gy.ravel(order="F"), gz.ravel(order="F")], axis=1
    ).astype(np.float32)


@dataclass
class DatasetDescriptor:
    """Metadata for a time-varying or ensemble sequence of raw volumes."""

    name: str
    dims: tuple
    count: int
    path_pattern: str
    dtype: str = "f32-le"
    labels: list = None
    base_dir: Path = Path(".")

    def member_path(self, index) -> Path:
        return Path(self.base_dir) / self.path_pattern.format(index=index)

    def load_member(self, index) -> Volume:
        if not 0 <= index < self.count:
            raise IndexError(f"member {index} out of range (count={self.count})")
        return load_raw(self.member_path(index), self.dims)


def load_descriptor(path) -> DatasetDescriptor:
    """Parse a dataset descriptor JSON file and check that members resolve."""
    path = Path(path)
    with open(path) as f:
        raw = json.load(f)
    try:
        desc = DatasetDescriptor(
            name=raw["name"],
            dims=tuple(int(d) for d in raw["dims"]),
            count=int(raw["count"]),
            path_pattern=raw["path_pattern"],
            dtype=raw.get("dtype", "f32-le"),
            labels=raw.get("labels"),
            base_dir=path.parent,
        )
    except KeyError as e:
        raise FormatError(f"{path}: missing descriptor field {e}") from None
    if desc.dtype != "f32-le":
        raise FormatError(f"{path}: unsupported dtype {desc.dtype!r}")
    if desc.count < 1:
        raise FormatError(f"{path}: count must be >= 1")
    if desc.labels is not None and len(desc.labels) != desc.count:
        raise FormatError(f"{path}: labels length does not match count")
    for i in range(desc.count):
        if not desc.member_path(i).exists():
            raise FormatError(f"{path}: member {i} not found at {desc.member_path(i)}")
    return desc


def save_descriptor(desc: DatasetDescriptor, path) -> None:
    doc = {
        "name": desc.name,
        "dims": list(desc.dims),
        "count": desc.count,
        "path_pattern": desc.path_pattern,
        "dtype": desc.dtype,
    }
    if desc.labels is not None:
        doc["labels"] = desc.labels
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def subsample_dataset(descriptor, lambda_s, lambda_t, normalize_members=True):
    """Spatiotemporal subsampling: every lambda_t-th member, every lambda_s-th
    voxel per axis, both anchored at index 0.

    Members are normalized against their full-resolution value range before
    voxels are dropped, and retained voxels keep their original grid
    coordinates, so the sparse set matches what finetuning will later see.
    Returns a list of (Volume, member_index) pairs.
    """
    lambda_s, lambda_t = int(lambda_s), int(lambda_t)
    if lambda_s < 1 or lambda_t < 1:
        raise ValueError("subsampling intervals must be >= 1")
    out = []
    for index in range(0, descriptor.count, lambda_t):
        vol = descriptor.load_member(index)
        if normalize_members:
            vol = normalize(vol)
        out.append((subsample_volume(vol, lambda_s), index))
    return out


def subsample_volume(volume: Volume, lambda_s) -> Volume:
    """Keep voxels whose index is 0 mod lambda_s on each axis."""
    if lambda_s < 1:
        raise ValueError("subsampling interval must be >= 1")
    if lambda_s == 1:
        return volume
    sub = volume.grid[::lambda_s, ::lambda_s, ::lambda_s]
    coords = tuple(ax[::lambda_s] for ax in volume.axis_coords)
    return Volume(
        sub.shape,
        np.asfortranarray(sub).ravel(order="F"),
        volume.value_range,
        normalized=volume.normalized,
        axis_coords=coords,
    )


def retained_fraction(descriptor, lambda_s, lambda_t) -> float:
    """Fraction of the dataset's samples kept by subsample_dataset."""
    kept_members = len(range(0, descriptor.count, lambda_t))
    kept_voxels = 1
    total_voxels = 1
    for d in descriptor.dims:
        kept_voxels *= len(range(0, d, lambda_s))
        total_voxels *= d
    return (kept_members * kept_voxels) / (descriptor.count * total_voxels)
