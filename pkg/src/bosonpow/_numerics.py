"""Compiled inner loops shared by the pair-potential and path-sampling code.

Kernel tables are sampled on a uniform radial grid ``r_i = i*h`` and on the
time lattice ``tau_j = j*dt`` of the path discretization, so only the radial
direction is interpolated (4-point Lagrange, even reflection at r = 0).
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def interp_row(values, h, j, r):
    t = r / h
    i = int(t)
    f = t - i
    im1 = i - 1 if i >= 1 else 1
    w_m1 = -f * (f - 1.0) * (f - 2.0) / 6.0
    w_0 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
    w_1 = -(f + 1.0) * f * (f - 2.0) / 2.0
    w_2 = (f + 1.0) * f * (f - 1.0) / 6.0
    return (w_m1 * values[j, im1] + w_0 * values[j, i]
            + w_1 * values[j, i + 1] + w_2 * values[j, i + 2])


@njit(cache=True)
def distance(X, i, j):
    acc = 0.0
    for c in range(X.shape[1]):
        diff = X[i, c] - X[j, c]
        acc += diff * diff
    return math.sqrt(acc)


@njit(cache=True)
def max_pair_distance(X):
    # bounding-box diagonal, an upper bound on every pairwise distance
    acc = 0.0
    for c in range(X.shape[1]):
        lo = X[0, c]
        hi = X[0, c]
        for i in range(X.shape[0]):
            v = X[i, c]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        acc += (hi - lo) ** 2
    return math.sqrt(acc)


@njit(cache=True)
def quadrant_sum(values, h, X, wl, wr):
    """sum_{i,j} wl_i wr_j K(|X_i - X_j|, |i - j|)."""
    n = X.shape[0]
    total = 0.0
    for i in range(n):
        if wl[i] == 0.0:
            continue
        row = 0.0
        for j in range(n):
            if wr[j] == 0.0:
                continue
            row += wr[j] * interp_row(values, h, abs(i - j), distance(X, i, j))
        total += wl[i] * row
    return total


@njit(cache=True)
def square_sum(values, h, X, w):
    """sum_{i,j} w_i w_j K(|X_i - X_j|, |i - j|) over the full square."""
    n = X.shape[0]
    total = 0.0
    for i in range(n):
        row = 0.0
        for j in range(i + 1, n):
            row += w[j] * interp_row(values, h, j - i, distance(X, i, j))
        total += 2.0 * w[i] * row + w[i] * w[i] * values[0, 0]
    return total


@njit(cache=True)
def row_values(values, h, X, i, x_new, out):
    """K(|x_new - X_j|, |i - j|) for every j, written into ``out``."""
    n = X.shape[0]
    d = X.shape[1]
    for j in range(n):
        acc = 0.0
        for c in range(d):
            diff = x_new[c] - X[j, c]
            acc += diff * diff
        out[j] = interp_row(values, h, abs(i - j), math.sqrt(acc))
