"""Symmetric Chamfer distance between point sets.

Nearest neighbors come from a k-d tree, which returns exact Euclidean
distances, so the result matches a brute-force O(n*m) scan.
"""

import numpy as np
from scipy.spatial import cKDTree


def chamfer(a, b) -> float:
    """0.5 * (mean nearest distance a->b + mean nearest distance b->a)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError("point sets must be (n, d) arrays with matching d")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("chamfer distance needs non-empty point sets")
    d_ab = cKDTree(b).query(a)[0]
    d_ba = cKDTree(a).query(b)[0]
    return 0.5 * (float(d_ab.mean()) + float(d_ba.mean()))
