"""Parameter-space analysis of adapted models.

Adapted parameter vectors are stacked into a (members x parameters) matrix and
projected to 2-D, either with PCA (deterministic linear baseline) or exact
t-SNE. Representative members are picked by farthest-point coverage of the
raw parameter space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .siren import MlpParameters


@dataclass
class ParamMatrix:
    data: np.ndarray  # (T, P), row t = flat parameters of member_ids[t]
    member_ids: list

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


@dataclass
class Projection2D:
    points: np.ndarray  # (T, 2)
    member_ids: list
    method: str
    seed: int = None
    labels: list = None
    objective_trace: np.ndarray = None


@dataclass
class SelectionResult:
    selected: list  # sorted member indices
    k: int
    criterion: dict  # member index -> farthest-point distance when chosen


def param_matrix(models) -> ParamMatrix:
    """Stack adapted parameter vectors, ordered by member index.

    Accepts an AdaptedModelSet or an iterable of (member_index, MlpParameters).
    """
    if hasattr(models, "models"):
        pairs = [(m.member_index, m.params) for m in models.models]
    else:
        pairs = list(models)
    if not pairs:
        raise ValueError("no models to assemble")
    pairs.sort(key=lambda t: t[0])
    schema = pairs[0][1].schema
    for idx, p in pairs:
        if p.schema != schema:
            raise SchemaError(f"member {idx} has a different schema")
    data = np.stack([p.values.astype(np.float64) for _, p in pairs])
    return ParamMatrix(data, [idx for idx, _ in pairs])


def _standardize(x):
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return (x - x.mean(axis=0)) / std


def pca_project(matrix: ParamMatrix, out_dim=2, standardize=False,
                labels=None) -> Projection2D:
    """Mean-centered projection onto the top principal directions.

    Works on the T x T Gram matrix, so the cost is independent of the
    parameter count. Component signs are fixed (largest-magnitude score
    positive) to make the output deterministic.
    """
    x = matrix.data
    t = x.shape[0]
    if t < 2:
        raise ValueError("PCA needs at least 2 members")
    if out_dim < 1 or out_dim > t:
        raise ValueError("out_dim out of range")
    x = _standardize(x) if standardize else x - x.mean(axis=0)
    gram = x @ x.T
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1][:out_dim]
    scale = np.sqrt(np.maximum(eigvals[order], 0.0))
    points = eigvecs[:, order] * scale
    for c in range(points.shape[1]):
        peak = np.argmax(np.abs(points[:, c]))
        if points[peak, c] < 0:
            points[:, c] = -points[:, c]
    return Projection2D(points, list(matrix.member_ids), "pca", labels=labels)


def _entropy_probs(neg_dist_row, beta):
    p = np.exp(neg_dist_row * beta)
    total = p.sum()
    if total <= 0:
        return 0.0, np.zeros_like(p)
    h = np.log(total) - beta * float(neg_dist_row @ p) / total
    return h, p / total


def _affinities(sq_dists, perplexity, tol=1e-5, max_tries=64):
    """Per-point Gaussian bandwidths found by bisection on the entropy."""
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        row = -sq_dists[i, others]
        beta, lo, hi = 1.0, 0.0, np.inf
        h, probs = _entropy_probs(row, beta)
        for _ in range(max_tries):
            if abs(h - target) < tol:
                break
            if h > target:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
            h, probs = _entropy_probs(row, beta)
        p[i, others] = probs
    return p


def tsne_project(matrix: ParamMatrix, perplexity=None, iterations=500, seed=0,
                 standardize=False, labels=None) -> Projection2D:
    """Exact t-SNE to 2-D with early exaggeration, momentum and adaptive gains.

    O(T^2) pairwise affinities (no tree approximation); deterministic for a
    given seed. The KL objective is recorded per iteration in
    objective_trace.
    """
    x = matrix.data
    t = x.shape[0]
    if t < 4:
        raise ValueError("t-SNE needs at least 4 members")
    if perplexity is None:
        perplexity = min(30.0, (t - 1) / 3.0)
    if not 0 < perplexity < t - 1:
        raise ValueError(f"perplexity must be in (0, {t - 1}), got {perplexity}")
    if standardize:
        x = _standardize(x)
    sq_norms = np.sum(x * x, axis=1)
    sq_dists = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * (x @ x.T), 0.0)
    np.fill_diagonal(sq_dists, 0.0)
    if sq_dists.max() == 0.0:
        raise ValueError("all parameter vectors are identical; nothing to embed")

    p = _affinities(sq_dists, perplexity)
    p = p + p.T
    p /= p.sum()
    p = np.maximum(p, 1e-12)

    exaggeration = 4.0
    exaggeration_until = min(100, iterations // 2)
    momentum_switch = 250
    eta = 200.0
    min_gain = 0.01

    rng = np.random.default_rng(seed)
    y = rng.standard_normal((t, 2)) * 1e-4
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)
    trace = np.empty(iterations)

    for it in range(iterations):
        pe = p * exaggeration if it < exaggeration_until else p
        ysq = np.sum(y * y, axis=1)
        num = 1.0 / (1.0 + ysq[:, None] + ysq[None, :] - 2.0 * (y @ y.T))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)

        weights = (pe - q) * num
        grad = 4.0 * ((np.diag(weights.sum(axis=1)) - weights) @ y)

        momentum = 0.5 if it < momentum_switch else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, min_gain)
        velocity = momentum * velocity - eta * gains * grad
        y = y + velocity
        y = y - y.mean(axis=0)
        trace[it] = float(np.sum(p * np.log(p / q)))

    return Projection2D(y, list(matrix.member_ids), "tsne", seed=seed,
                        labels=labels, objective_trace=trace)


def select_timesteps(matrix: ParamMatrix, k) -> SelectionResult:
    """Greedy farthest-point selection in raw parameter space.

    Seeded with the first member; each next pick maximizes the distance to
    the closest already-selected member, ties broken toward the lower index.
    """
    t = matrix.rows
    if not 1 <= k <= t:
        raise ValueError(f"k must be in [1, {t}], got {k}")
    x = matrix.data
    chosen = [0]
    criterion = {matrix.member_ids[0]: np.inf}
    min_dist = np.linalg.norm(x - x[0], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(min_dist))  # argmax takes the first (lowest) index on ties
        chosen.append(nxt)
        criterion[matrix.member_ids[nxt]] = float(min_dist[nxt])
        min_dist = np.minimum(min_dist, np.linalg.norm(x - x[nxt], axis=1))
    chosen.sort()
    return SelectionResult([matrix.member_ids[i] for i in chosen], k, criterion)


def smoothness_score(points, order=None) -> float:
    """Mean turning angle (radians) along the member-order path; 0 = straight.

    Triples containing a zero-length segment are skipped.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if order is not None:
        points = points[np.asarray(order)]
    seg = np.diff(points, axis=0)
    norms = np.linalg.norm(seg, axis=1)
    angles = []
    for i in range(len(seg) - 1):
        if norms[i] == 0 or norms[i + 1] == 0:
            continue
        cosang = float(seg[i] @ seg[i + 1]) / (norms[i] * norms[i + 1])
        angles.append(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return float(np.mean(angles)) if angles else 0.0
