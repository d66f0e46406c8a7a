"""First-order parameter updates: plain SGD and bias-corrected Adam.

Updates are functional: they return new parameter objects and leave the inputs
untouched, so callers can hold on to earlier iterates (the meta-update needs
the pre-adaptation vector).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .siren import MlpParameters


def _check_lengths(params, grad):
    grad = np.asarray(grad)
    if grad.shape != params.values.shape:
        raise ValueError(
            f"gradient length {grad.shape} does not match parameters {params.values.shape}"
        )
    return grad


def sgd_step(params: MlpParameters, grad, lr) -> MlpParameters:
    """theta - lr * grad, element-wise."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    grad = _check_lengths(params, grad)
    values = params.values - params.dtype.type(lr) * grad.astype(params.dtype, copy=False)
    return MlpParameters(params.schema, values)


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for Adam."""

    step_count: int
    first_moment: np.ndarray
    second_moment: np.ndarray
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    kind = "adam"


def adam_init(params: MlpParameters, lr, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState(
        step_count=0,
        first_moment=np.zeros_like(params.values),
        second_moment=np.zeros_like(params.values),
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(state: AdamState, params: MlpParameters, grad):
    """One bias-corrected Adam update; returns (new_state, new_params)."""
    grad = _check_lengths(params, grad)
    if state.first_moment.shape != params.values.shape:
        raise ValueError("optimizer state does not match parameter dimensions")
    grad = grad.astype(params.dtype, copy=False)
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * np.square(grad)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    values = params.values - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(t, m, v, state.lr, state.beta1, state.beta2, state.eps)
    return new_state, MlpParameters(params.schema, values.astype(params.dtype))
