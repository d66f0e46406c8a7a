"""Pure-numpy kernel primitives. Fallback when the compiled extension is absent."""

import numpy as np


def affine(x, w, b, z):
    """z = x @ w.T + b"""
    np.matmul(x, w.T, out=z)
    z += b


def sine_forward(z, omega, a):
    """a = sin(omega * z)"""
    np.multiply(z, z.dtype.type(omega), out=a)
    np.sin(a, out=a)


def sine_backward_scale(delta, z, omega):
    """delta *= omega * cos(omega * z), in place."""
    omega = z.dtype.type(omega)
    delta *= omega * np.cos(omega * z)


def weight_grads(delta, a_prev, dw, db):
    """dw = delta.T @ a_prev; db = column sums of delta."""
    np.matmul(delta.T, a_prev, out=dw)
    np.sum(delta, axis=0, out=db)


def propagate(delta, w, dx):
    """dx = delta @ w"""
    np.matmul(delta, w, out=dx)


def mse_delta(pred, targets, delta):
    """Fill delta with d(mean squared error)/d(pred); return the loss.

    The loss is accumulated in double precision regardless of the working dtype.
    """
    np.subtract(pred, targets, out=delta)
    loss = float(np.mean(np.square(delta, dtype=np.float64)))
    delta *= delta.dtype.type(2.0 / delta.size)
    return loss
