"""Closed-form batched inverses for 2x2 and 3x3 matrices (shape (..., n, n))."""
import numpy as np


def inv3(a):
    a00, a01, a02 = a[..., 0, 0], a[..., 0, 1], a[..., 0, 2]
    a10, a11, a12 = a[..., 1, 0], a[..., 1, 1], a[..., 1, 2]
    a20, a21, a22 = a[..., 2, 0], a[..., 2, 1], a[..., 2, 2]
    c00 = a11 * a22 - a12 * a21
    c01 = a12 * a20 - a10 * a22
    c02 = a10 * a21 - a11 * a20
    det = a00 * c00 + a01 * c01 + a02 * c02
    out = np.empty(a.shape)
    out[..., 0, 0] = c00
    out[..., 1, 0] = c01
    out[..., 2, 0] = c02
    out[..., 0, 1] = a02 * a21 - a01 * a22
    out[..., 1, 1] = a00 * a22 - a02 * a20
    out[..., 2, 1] = a01 * a20 - a00 * a21
    out[..., 0, 2] = a01 * a12 - a02 * a11
    out[..., 1, 2] = a02 * a10 - a00 * a12
    out[..., 2, 2] = a00 * a11 - a01 * a10
    return out / det[..., None, None]


def gram2(k):
    """K^T K for (..., 3, 2) arrays, returned as its three distinct entries."""
    g00 = np.sum(k[..., 0] * k[..., 0], axis=-1)
    g01 = np.sum(k[..., 0] * k[..., 1], axis=-1)
    g11 = np.sum(k[..., 1] * k[..., 1], axis=-1)
    return g00, g01, g11


def pinv_columns(k):
    """K (K^T K)^{-1} and det(K^T K) for (..., 3, 2) arrays."""
    g00, g01, g11 = gram2(k)
    det = g00 * g11 - g01 * g01
    c0 = (k[..., 0] * g11[..., None] - k[..., 1] * g01[..., None]) / det[..., None]
    c1 = (k[..., 1] * g00[..., None] - k[..., 0] * g01[..., None]) / det[..., None]
    return np.stack([c0, c1], axis=-1), det
