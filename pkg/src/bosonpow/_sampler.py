"""Compiled Metropolis-Hastings moves for the path Gibbs measure.

Every proposal is reversible with respect to the Gaussian reference law, so
the acceptance ratio involves only the pair-interaction exponent
``(g^2/2) * sum_{a,b} w_a w_b K_ab``.
"""
import math

import numpy as np
from numba import njit

from ._numerics import interp_row, max_pair_distance, quadrant_sum, square_sum


@njit(cache=True)
def local_sweep(values, h, r_lim, X, w, wl, wr, coef_l, coef_r, sd, active,
                beta, g2, normals, log_u, start, state, new_row, old_row, x_new):
    """One pass of single-slice pCN updates starting at site ``start``.

    ``state`` holds ``[S, W, accepted, proposed]`` and is updated in place.
    Returns -1 when the pass completes, or the site index at which a
    proposal left the kernel table (the caller enlarges it and resumes).
    """
    n, d = X.shape
    shrink = math.sqrt(1.0 - beta * beta)
    k00 = values[0, 0]
    for i in range(start, n):
        if not active[i]:
            continue
        for c in range(d):
            m = 0.0
            if i > 0:
                m += coef_l[i] * X[i - 1, c]
            if i < n - 1:
                m += coef_r[i] * X[i + 1, c]
            x_new[c] = m + shrink * (X[i, c] - m) + beta * sd[i] * normals[i, c]
        for j in range(n):
            acc_new = 0.0
            acc_old = 0.0
            for c in range(d):
                dn = x_new[c] - X[j, c]
                do = X[i, c] - X[j, c]
                acc_new += dn * dn
                acc_old += do * do
            r_new = math.sqrt(acc_new)
            if r_new > r_lim:
                return i
            lag = abs(i - j)
            new_row[j] = interp_row(values, h, lag, r_new)
            old_row[j] = interp_row(values, h, lag, math.sqrt(acc_old))
        new_row[i] = k00
        old_row[i] = k00
        d_sq = 0.0
        d_l = 0.0
        d_r = 0.0
        for j in range(n):
            diff = new_row[j] - old_row[j]
            d_sq += w[j] * diff
            d_l += wl[j] * diff
            d_r += wr[j] * diff
        d_exponent = g2 * w[i] * d_sq
        state[3] += 1.0
        if log_u[i] < d_exponent:
            for c in range(d):
                X[i, c] = x_new[c]
            state[0] += 2.0 * w[i] * d_sq
            state[1] += wl[i] * d_r + wr[i] * d_l
            state[2] += 1.0
    return -1


@njit(cache=True)
def global_move(values, h, r_lim, X, fresh, w, wl, wr, beta, g2, log_u, state, X_new):
    """Whole-path pCN move ``X' = sqrt(1 - beta^2) X + beta Z``.

    Returns 1 if the proposal left the kernel table, else 0.
    """
    shrink = math.sqrt(1.0 - beta * beta)
    n, d = X.shape
    for i in range(n):
        for c in range(d):
            X_new[i, c] = shrink * X[i, c] + beta * fresh[i, c]
    if max_pair_distance(X_new) > r_lim:
        return 1
    s_new = square_sum(values, h, X_new, w)
    state[5] += 1.0
    if log_u < 0.5 * g2 * (s_new - state[0]):
        for i in range(n):
            for c in range(d):
                X[i, c] = X_new[i, c]
        state[0] = s_new
        state[1] = quadrant_sum(values, h, X, wl, wr)
        state[4] += 1.0
    return 0


@njit(cache=True)
def batch_integrals(values, h, paths, w, wl, wr):
    """Full-square and quadrant sums for a stack of paths ``(m, n, d)``."""
    m = paths.shape[0]
    s = np.empty(m)
    q = np.empty(m)
    for a in range(m):
        s[a] = square_sum(values, h, paths[a], w)
        q[a] = quadrant_sum(values, h, paths[a], wl, wr)
    return s, q


@njit(cache=True)
def batch_max_distance(paths):
    m = paths.shape[0]
    out = 0.0
    for a in range(m):
        v = max_pair_distance(paths[a])
        if v > out:
            out = v
    return out
