"""Isosurface extraction: classic 256-case marching cubes, vectorized.

Vertices are emitted in voxel-index coordinates and lie on cell edges at the
position where linear interpolation of the two corner values reaches the
isovalue. Vertices shared between cells are emitted once; each grid edge maps
to a single mesh vertex, which keeps the output deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mc_tables import CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRI_TABLE
from .volume import Volume

# Each cell edge is an axis-aligned grid edge: origin corner offset + axis.
_EDGE_ORIGIN = np.minimum(CORNER_OFFSETS[EDGE_CORNERS[:, 0]],
                          CORNER_OFFSETS[EDGE_CORNERS[:, 1]]).astype(np.int64)
_EDGE_AXIS = np.argmax(CORNER_OFFSETS[EDGE_CORNERS[:, 0]]
                       != CORNER_OFFSETS[EDGE_CORNERS[:, 1]], axis=1).astype(np.int64)


@dataclass
class TriangleMesh:
    """Vertices (V x 3, voxel-index space) and triangle index triples (F x 3)."""

    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def is_empty(self):
        return self.vertices.shape[0] == 0


def empty_mesh() -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def marching_cubes(volume: Volume, isovalue) -> TriangleMesh:
    """Extract the isovalue level set of a volume as a triangle mesh."""
    nx, ny, nz = volume.dims
    if min(nx, ny, nz) < 2:
        raise ValueError(f"marching cubes needs at least 2 voxels per axis, got {volume.dims}")
    grid = volume.grid.astype(np.float64)
    iso = float(isovalue)

    case = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.uint16)
    for n, (dx, dy, dz) in enumerate(CORNER_OFFSETS):
        corner = grid[dx : nx - 1 + dx, dy : ny - 1 + dy, dz : nz - 1 + dz]
        case |= (corner < iso).astype(np.uint16) << n

    edge_mask = EDGE_TABLE[case]
    ci, cj, ck = np.nonzero(edge_mask)
    if ci.size == 0:
        return empty_mesh()
    cell_mask = edge_mask[ci, cj, ck]

    # Global key per (cell, local edge): axis-major id of the grid edge.
    n_nodes = nx * ny * nz
    ei = ci[:, None] + _EDGE_ORIGIN[None, :, 0]
    ej = cj[:, None] + _EDGE_ORIGIN[None, :, 1]
    ek = ck[:, None] + _EDGE_ORIGIN[None, :, 2]
    keys = (_EDGE_AXIS[None, :] * n_nodes) + ei + nx * (ej + ny * ek)

    crossed = (cell_mask[:, None] >> np.arange(12)[None, :]) & 1
    unique_keys = np.unique(keys[crossed.astype(bool)])

    # Interpolate one vertex per crossed grid edge.
    axis = unique_keys // n_nodes
    lin = unique_keys % n_nodes
    vi = lin % nx
    vj = (lin // nx) % ny
    vk = lin // (nx * ny)
    step = np.eye(3, dtype=np.int64)[axis]
    lo = grid[vi, vj, vk]
    hi = grid[vi + step[:, 0], vj + step[:, 1], vk + step[:, 2]]
    t = (iso - lo) / (hi - lo)
    vertices = np.stack([vi, vj, vk], axis=1) + t[:, None] * step

    # Triangles: map the table's local edges through the per-cell keys.
    tri_rows = TRI_TABLE[case[ci, cj, ck]].astype(np.int64)
    cell_of = np.nonzero(tri_rows >= 0)[0]
    local_edges = tri_rows[tri_rows >= 0]
    vert_ids = np.searchsorted(unique_keys, keys[cell_of, local_edges])
    triangles = vert_ids.reshape(-1, 3)
    return TriangleMesh(vertices, triangles)


def write_obj(mesh: TriangleMesh, path) -> None:
    """ASCII OBJ export (v/f records, 1-based indices)."""
    with open(Path(path), "w") as f:
        for x, y, z in mesh.vertices:
            f.write(f"v {x:.10g} {y:.10g} {z:.10g}\n")
        for a, b, c in mesh.triangles + 1:
            f.write(f"f {a} {b} {c}\n")
