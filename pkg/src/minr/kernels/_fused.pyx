# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel primitives: BLAS matmuls plus fused element-wise loops.

Same contracts as minr.kernels.reference. GEMMs go through the BLAS linked
into scipy; sine/cosine loops are fused and parallelized over elements
(element-wise writes only, so results do not depend on the thread count).
"""

from cython.parallel cimport prange
from libc.math cimport cos, cosf, sin, sinf

from scipy.linalg.cython_blas cimport dgemm, sgemm

import numpy as np

ctypedef fused real:
    float
    double

# Below this many elements the OpenMP fork costs more than it saves.
DEF PAR_THRESHOLD = 32768


cdef void _gemm(char ta, char tb, int m, int n, int k, real* a, int lda,
                real* b, int ldb, real beta, real* c, int ldc) noexcept nogil:
    cdef float onef = 1.0, betaf
    cdef double oned = 1.0, betad
    if real is float:
        betaf = <float> beta
        sgemm(&ta, &tb, &m, &n, &k, &onef, <float*> a, &lda, <float*> b, &ldb,
              &betaf, <float*> c, &ldc)
    else:
        betad = <double> beta
        dgemm(&ta, &tb, &m, &n, &k, &oned, <double*> a, &lda, <double*> b, &ldb,
              &betad, <double*> c, &ldc)


def affine(real[:, ::1] x, real[:, ::1] w, real[::1] b, real[:, ::1] z):
    """z = x @ w.T + b"""
    cdef int n = x.shape[0], in_dim = x.shape[1], out_dim = w.shape[0]
    cdef Py_ssize_t i, j
    with nogil:
        # Row-major z viewed column-major is z^T (out x n) = w @ x^T.
        _gemm(c'T', c'N', out_dim, n, in_dim, &w[0, 0], in_dim,
              &x[0, 0], in_dim, <real> 0.0, &z[0, 0], out_dim)
        if n * out_dim >= PAR_THRESHOLD:
            for i in prange(n, schedule='static'):
                for j in range(out_dim):
                    z[i, j] += b[j]
        else:
            for i in range(n):
                for j in range(out_dim):
                    z[i, j] += b[j]


def sine_forward(real[:, ::1] z, double omega, real[:, ::1] a):
    """a = sin(omega * z)"""
    cdef Py_ssize_t total = z.shape[0] * z.shape[1], i
    cdef real* zp = &z[0, 0]
    cdef real* ap = &a[0, 0]
    cdef real om = <real> omega
    with nogil:
        if total >= PAR_THRESHOLD:
            for i in prange(total, schedule='static'):
                if real is float:
                    ap[i] = sinf(om * zp[i])
                else:
                    ap[i] = sin(om * zp[i])
        else:
            for i in range(total):
                if real is float:
                    ap[i] = sinf(om * zp[i])
                else:
                    ap[i] = sin(om * zp[i])


def sine_backward_scale(real[:, ::1] delta, real[:, ::1] z, double omega):
    """delta *= omega * cos(omega * z)"""
    cdef Py_ssize_t total = z.shape[0] * z.shape[1], i
    cdef real* zp = &z[0, 0]
    cdef real* dp = &delta[0, 0]
    cdef real om = <real> omega
    with nogil:
        if total >= PAR_THRESHOLD:
            for i in prange(total, schedule='static'):
                if real is float:
                    dp[i] = dp[i] * (om * cosf(om * zp[i]))
                else:
                    dp[i] = dp[i] * (om * cos(om * zp[i]))
        else:
            for i in range(total):
                if real is float:
                    dp[i] = dp[i] * (om * cosf(om * zp[i]))
                else:
                    dp[i] = dp[i] * (om * cos(om * zp[i]))


def weight_grads(real[:, ::1] delta, real[:, ::1] a_prev, real[:, ::1] dw,
                 real[::1] db):
    """dw = delta.T @ a_prev; db = column sums of delta."""
    cdef int n = delta.shape[0], out_dim = delta.shape[1]
    cdef int in_dim = a_prev.shape[1]
    cdef Py_ssize_t i, j
    cdef real acc
    with nogil:
        # Row-major dw (out x in) viewed column-major is dw^T = a_prev^T @ delta.
        _gemm(c'N', c'T', in_dim, out_dim, n, &a_prev[0, 0], in_dim,
              &delta[0, 0], out_dim, <real> 0.0, &dw[0, 0], in_dim)
        # Per-column serial sums: deterministic independent of thread count.
        for j in prange(out_dim, schedule='static'):
            acc = 0.0
            for i in range(n):
                acc = acc + delta[i, j]
            db[j] = acc


def propagate(real[:, ::1] delta, real[:, ::1] w, real[:, ::1] dx):
    """dx = delta @ w"""
    cdef int n = delta.shape[0], out_dim = delta.shape[1], in_dim = w.shape[1]
    with nogil:
        _gemm(c'N', c'N', in_dim, n, out_dim, &w[0, 0], in_dim,
              &delta[0, 0], out_dim, <real> 0.0, &dx[0, 0], in_dim)


def mse_delta(real[:, ::1] pred, real[:, ::1] targets, real[:, ::1] delta):
    """Fill delta with d(MSE)/d(pred); return the loss (double accumulator)."""
    cdef Py_ssize_t total = pred.shape[0] * pred.shape[1], i
    cdef real* pp = &pred[0, 0]
    cdef real* tp = &targets[0, 0]
    cdef real* dp = &delta[0, 0]
    cdef double acc = 0.0, diff
    cdef real scale = <real> (2.0 / total)
    with nogil:
        for i in range(total):
            dp[i] = pp[i] - tp[i]
            diff = <double> dp[i]
            acc += diff * diff
            dp[i] = dp[i] * scale
    return acc / total
