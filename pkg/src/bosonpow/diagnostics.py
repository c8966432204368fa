"""Batch-means error bars and autocorrelation summaries for MCMC output."""
from __future__ import annotations

import math

import numpy as np

__all__ = ["batch_means", "BatchMeans", "compensated_mean"]


class BatchMeans:
    """Batch-means summary of one or more chains.

    Attributes
    ----------
    mean : float
        Grand mean over all samples.
    stderr : float
        Standard error of ``mean`` from the spread of batch means.
    tau_int : float
        Integrated autocorrelation time, ``b * var(batch means) / var(x)``.
    ess : float
        Effective sample size ``n / tau_int``.
    """

    def __init__(self, mean, stderr, tau_int, ess, n, n_batches):
        self.mean = mean
        self.stderr = stderr
        self.tau_int = tau_int
        self.ess = ess
        self.n = n
        self.n_batches = n_batches

    def __repr__(self):
        return (f"BatchMeans(mean={self.mean:.6g}, stderr={self.stderr:.3g}, "
                f"tau_int={self.tau_int:.3g}, ess={self.ess:.1f}, n={self.n})")


def compensated_mean(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return math.fsum(x) / len(x) if len(x) else math.nan


def batch_means(x, chain_ids=None, batch_size: int | None = None) -> BatchMeans:
    """Batch means over possibly several concatenated chains.

    Batches never straddle two chains.  The default batch size is
    ``floor(sqrt(n_chain))`` of the shortest chain.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = len(x)
    if n == 0:
        raise ValueError("batch_means needs at least one sample")
    chain_ids = np.zeros(n, dtype=int) if chain_ids is None else np.asarray(chain_ids)
    mean = compensated_mean(x)
    var = float(np.var(x, ddof=1)) if n > 1 else 0.0
    if var == 0.0:
        return BatchMeans(mean, 0.0, 1.0, float(n), n, 0)

    chains = [x[chain_ids == c] for c in np.unique(chain_ids)]
    shortest = min(len(c) for c in chains)
    b = batch_size or max(1, int(math.isqrt(shortest)))
    batches = []
    for c in chains:
        k = len(c) // b
        if k:
            batches.append(c[: k * b].reshape(k, b).mean(axis=1))
    batches = np.concatenate(batches) if batches else np.array([])
    if len(batches) < 2:
        stderr = math.sqrt(var / n)
        return BatchMeans(mean, stderr, 1.0, float(n), n, len(batches))
    var_bm = float(np.var(batches, ddof=1))
    tau = max(b * var_bm / var, 1.0 / n)
    stderr = math.sqrt(var_bm / len(batches))
    return BatchMeans(mean, stderr, tau, n / max(tau, 1.0), n, len(batches))
