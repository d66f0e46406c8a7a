"""The two-stage training pipeline and the baseline strategies.

Stage one optimizes a shared initialization on the subsampled dataset with a
first-order nested loop: clone the current initialization, adapt the clone for
K SGD steps on fresh random batches, and move the initialization toward the
average post-adaptation parameters. Stage two finetunes that initialization on
each full-resolution member independently.

Randomness protocol (relied on by reproducibility guarantees): the network is
initialized from the config seed, and all batch sampling for a run draws from
the single generator returned by `batch_stream(seed)`, consumed in loop order
(outer step, then member, then inner step). Per-member finetuning seeds come
from `member_seed(seed, index)` so results do not depend on encode order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .siren import MlpParameters, backward, default_schema, forward, init_siren
from .optim import adam_init, adam_step, sgd_step
from .volume import Volume, grid_coords, sample_batch, subsample_dataset


@dataclass
class MetaConfig:
    lambda_s: int = 4
    lambda_t: int = 2
    alpha: float = 1e-4
    beta: float = 1e-4
    inner_steps: int = 16
    outer_steps: int = 500
    batch_size: int = 50_000
    seed: int = 0

    def validate(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("learning rates must be positive")
        if self.inner_steps < 0 or self.outer_steps < 0:
            raise ValueError("step counts must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.lambda_s < 1 or self.lambda_t < 1:
            raise ValueError("subsampling intervals must be >= 1")


@dataclass
class FinetuneConfig:
    lr: float = 1e-5
    epochs: int = 16
    batch_size: int = 50_000
    seed: int = 0
    mode: str = "epochs"  # "epochs": full passes over all voxels; "steps": random batches

    def validate(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.mode not in ("epochs", "steps"):
            raise ValueError(f"unknown finetune mode {self.mode!r}")


def batch_stream(seed) -> np.random.Generator:
    """The batch-sampling generator used by the pretraining loops."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def member_seed(seed, index) -> int:
    """Order-independent per-member seed for encode_dataset."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def resolve_members(source, lambda_s, lambda_t):
    """Materialize pretraining members from a descriptor or pass a prepared
    list of (Volume, member_index) through unchanged (the latter is assumed
    already subsampled and normalized)."""
    if hasattr(source, "load_member"):
        return subsample_dataset(source, lambda_s, lambda_t)
    members = list(source)
    if not members:
        raise ValueError("no members to pretrain on")
    return members


def inner_adapt(params, volume, steps, alpha, batch_size, rng) -> MlpParameters:
    """K SGD steps on freshly sampled batches; the input parameters are untouched."""
    theta = params
    for _ in range(steps):
        batch = sample_batch(volume, batch_size, rng)
        _, grad = backward(theta, batch.coords, batch.values)
        theta = sgd_step(theta, grad, alpha)
    return theta


def meta_pretrain(descriptor, config: MetaConfig, schema=None, dtype=np.float32,
                  progress=None) -> MlpParameters:
    """Optimize a shared initialization on the subsampled dataset.

    Each outer step adapts a clone on every member and moves the
    initialization by beta times the mean of (theta - theta_adapted).
    Deterministic given the config seed. `progress(step, members)` is called
    after each outer step when provided.
    """
    config.validate()
    members = resolve_members(descriptor, config.lambda_s, config.lambda_t)
    schema = schema or default_schema()
    theta = init_siren(schema, config.seed, dtype=dtype)
    rng = batch_stream(config.seed)
    n_members = len(members)
    beta = np.dtype(dtype).type(config.beta)
    for step in range(config.outer_steps):
        accum = np.zeros_like(theta.values)
        for vol, _ in members:
            adapted = inner_adapt(theta, vol, config.inner_steps, config.alpha,
                                  config.batch_size, rng)
            accum += theta.values - adapted.values
        theta = MlpParameters(theta.schema, theta.values - beta * (accum / n_members))
        if progress is not None:
            progress(step, n_members)
    return theta


def full_volume_mse(params, volume, chunk=1 << 16) -> float:
    """Mean squared error of the network against every voxel of a volume."""
    coords = grid_coords(volume)
    sse = 0.0
    for start in range(0, coords.shape[0], chunk):
        pred = forward(params, coords[start : start + chunk])
        diff = pred.astype(np.float64) - volume.data[start : start + chunk]
        sse += float(np.dot(diff, diff))
    return sse / coords.shape[0]


@dataclass
class FinetuneResult:
    params: MlpParameters
    seconds: float
    initial_mse: float
    final_mse: float


def finetune_volume(meta_params, volume: Volume, config: FinetuneConfig) -> FinetuneResult:
    """Adapt an initialization to one normalized full-resolution volume.

    In "epochs" mode every epoch shuffles all voxels and takes one SGD step
    per batch (the final partial batch included). In "steps" mode each of the
    K steps uses one randomly sampled batch.
    """
    config.validate()
    if not volume.normalized:
        raise ValueError("finetuning expects a normalized volume")
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    initial_mse = full_volume_mse(meta_params, volume)
    theta = meta_params
    if config.mode == "steps":
        theta = inner_adapt(theta, volume, config.epochs, config.lr,
                            config.batch_size, rng)
    else:
        coords = grid_coords(volume)
        n = coords.shape[0]
        for _ in range(config.epochs):
            order = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                _, grad = backward(theta, coords[idx], volume.data[idx])
                theta = sgd_step(theta, grad, config.lr)
    final_mse = full_volume_mse(theta, volume)
    return FinetuneResult(theta, time.perf_counter() - t0, initial_mse, final_mse)


@dataclass
class AdaptedModel:
    member_index: int
    params: MlpParameters
    value_range: tuple
    seconds: float
    final_mse: float


@dataclass
class AdaptedModelSet:
    """One finetuned model per dataset member, plus any per-member failures."""

    descriptor_name: str
    models: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def encode_dataset(descriptor, meta_params, config: FinetuneConfig,
                   progress=None) -> AdaptedModelSet:
    """Finetune the same initialization on every member independently.

    Member failures are recorded as (index, message) and do not stop the
    remaining members. Per-member wall-clock time is captured.
    """
    config.validate()
    result = AdaptedModelSet(descriptor.name)
    for index in range(descriptor.count):
        try:
            result.models.append(encode_member(descriptor, index, meta_params, config))
        except Exception as e:  # keep encoding the rest
            result.failures.append((index, str(e)))
        if progress is not None:
            progress(index, descriptor.count)
    return result


def encode_member(descriptor, index, meta_params, config: FinetuneConfig) -> AdaptedModel:
    """Load, normalize and finetune a single member (order-independent seed)."""
    from .volume import normalize

    raw = descriptor.load_member(index)
    vol = normalize(raw)
    member_config = FinetuneConfig(
        lr=config.lr,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=member_seed(config.seed, index),
        mode=config.mode,
    )
    fit = finetune_volume(meta_params, vol, member_config)
    return AdaptedModel(index, fit.params, vol.value_range, fit.seconds, fit.final_mse)


def train_scratch(volume: Volume, steps, optimizer="adam", lr=1e-4,
                  batch_size=50_000, seed=0, schema=None,
                  dtype=np.float32) -> MlpParameters:
    """Baseline: random init plus `steps` optimizer updates on random batches."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not volume.normalized:
        raise ValueError("training expects a normalized volume")
    schema = schema or default_schema()
    theta = init_siren(schema, seed, dtype=dtype)
    rng = batch_stream(seed)
    state = adam_init(theta, lr) if optimizer == "adam" else None
    if optimizer not in ("adam", "sgd"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    for _ in range(steps):
        batch = sample_batch(volume, batch_size, rng)
        _, grad = backward(theta, batch.coords, batch.values)
        if state is not None:
            state, theta = adam_step(state, theta, grad)
        else:
            theta = sgd_step(theta, grad, lr)
    return theta


def pretrain_vanilla(descriptor, config: MetaConfig, schema=None,
                     dtype=np.float32, progress=None) -> MlpParameters:
    """Baseline initialization without the nested loop: direct SGD on the
    subsampled members, visited round-robin, one batch per step.

    The step budget equals outer_steps * members * inner_steps so both
    pretraining strategies see the same number of samples.
    """
    config.validate()
    members = resolve_members(descriptor, config.lambda_s, config.lambda_t)
    schema = schema or default_schema()
    theta = init_siren(schema, config.seed, dtype=dtype)
    rng = batch_stream(config.seed)
    total = config.outer_steps * len(members) * config.inner_steps
    for step in range(total):
        vol, _ = members[step % len(members)]
        batch = sample_batch(vol, config.batch_size, rng)
        _, grad = backward(theta, batch.coords, batch.values)
        theta = sgd_step(theta, grad, config.alpha)
        if progress is not None:
            progress(step, total)
    return theta
