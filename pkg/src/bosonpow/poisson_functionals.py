"""Expectations of functionals of a rate-1 Poisson process at a fixed time.

The inner expectation ``E_P[f(N_t)]`` is summed exactly over the Poisson pmf
up to a cutoff, and the discarded tail is bounded with a Chernoff estimate
applied to a linear majorant ``|f(n)| <= A + B*n``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bernstein import BernsteinSpec, eval_bernstein
from .errors import DomainError, TruncationError

__all__ = [
    "PoissonQuery",
    "SeriesResult",
    "poisson_mgf",
    "expect_functional",
    "expect_functional_detailed",
    "expect_series",
    "poisson_tail_bound",
    "psi_on_integers",
    "simulate_poisson_at",
    "simulate_poisson_many",
    "poisson_pmf",
]

POSITIVE = "positive"
ZERO = "zero"
NEGATIVE = "negative"

DEFAULT_TOL = 1e-13
MAX_TERMS = 1 << 22


@dataclass(frozen=True)
class PoissonQuery:
    """Inner functional of the random-time Poisson layer.

    ``positive``: ``E[Psi(N_t + r)]``; ``zero``: ``E[Psi(N_t)]``;
    ``negative``: ``E[(N_t + 1)^m Psi(N_t + 1)]`` with ``m <= -1``.
    ``psi=None`` stands for the constant weight 1 (no Bernstein factor).
    """

    branch: str
    psi: BernsteinSpec | None = None
    m: int = 0
    shift: int = 0

    def __post_init__(self):
        if self.branch == POSITIVE:
            if self.m < 1 or self.shift < 1:
                raise DomainError("positive branch needs m >= 1 and shift r >= 1")
        elif self.branch == ZERO:
            if self.m != 0 or self.shift != 0:
                raise DomainError("zero branch carries m = 0 and no shift")
        elif self.branch == NEGATIVE:
            if self.m > -1 or self.shift != 1:
                raise DomainError("negative branch needs m <= -1 and shift 1")
        else:
            raise DomainError(f"unknown branch {self.branch!r}")

    @classmethod
    def positive(cls, m: int, r: int, psi: BernsteinSpec | None = None) -> "PoissonQuery":
        return cls(POSITIVE, psi, m, r)

    @classmethod
    def zero(cls, psi: BernsteinSpec | None = None) -> "PoissonQuery":
        return cls(ZERO, psi)

    @classmethod
    def negative(cls, m: int, psi: BernsteinSpec | None = None) -> "PoissonQuery":
        return cls(NEGATIVE, psi, m, 1)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    tail_bound: float
    n_terms: int


def poisson_mgf(u: float, t: float) -> float:
    """``E[exp(-u N_t)] = exp(t (e^{-u} - 1))``; ``u = inf`` gives ``P(N_t = 0)``."""
    if u < 0 or t < 0:
        raise DomainError("poisson_mgf needs u, t >= 0")
    return math.exp(t * math.expm1(-u))


def _log_chernoff(t: float, k: int) -> float:
    """log of a bound on ``P(N_t >= k)``."""
    if k <= 0:
        return 0.0
    if t == 0.0:
        return -math.inf
    if k <= t:
        return 0.0
    return -t + k * (1.0 + math.log(t) - math.log(k))


def poisson_tail_bound(t: float, cutoff: int, a: float, b: float) -> float:
    """Upper bound on ``sum_{n > cutoff} (a + b n) P(N_t = n)``.

    Uses ``sum_{n>N} n p(n) = t P(N_t >= N)`` and Chernoff for both tails.
    """
    above = math.exp(_log_chernoff(t, cutoff + 1))
    at_or_above = math.exp(_log_chernoff(t, cutoff))
    return a * above + b * t * at_or_above


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SMALL_N = 16
_STIRLERR_SMALL = np.array([0.0] + [math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _HALF_LOG_2PI
                                    for n in range(1, _SMALL_N)])


def _stirlerr(n: np.ndarray) -> np.ndarray:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)``."""
    out = np.empty_like(n)
    small = n < _SMALL_N
    out[small] = _STIRLERR_SMALL[n[small].astype(int)]
    x = n[~small]
    x2 = 1.0 / (x * x)
    out[~small] = (1.0 / 12 - x2 * (1.0 / 360 - x2 * (1.0 / 1260 - x2 * (1.0 / 1680 - x2 / 1188)))) / x
    return out


def poisson_pmf(n, t: float) -> np.ndarray:
    """``e^{-t} t^n / n!`` in saddle-point form, accurate to ~1e-13 relative even for t ~ 1e5.

    ``scipy.stats.poisson.pmf`` loses about 1e-11 relative accuracy at
    ``t = 1e4``, which would dominate the series error budget.
    """
    n = np.asarray(n, dtype=float)
    if t == 0.0:
        return (n == 0).astype(float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        d = (n - t) / t
        # n log(n/t) + t - n, in the cancellation-free form near the mode
        near = t * ((1.0 + d) * np.log1p(d) - d)
        far = n * (np.log(n) - math.log(t)) + t - n
        bd0 = np.where(np.abs(d) < 0.5, near, far)
        out = np.exp(-_stirlerr(n) - bd0) / np.sqrt(2.0 * math.pi * np.maximum(n, 1.0))
    return np.where(n == 0, math.exp(-t), out)


_PSI_CACHE: dict[BernsteinSpec, np.ndarray] = {}
_PSI_LOCK = threading.Lock()


def psi_on_integers(psi: BernsteinSpec, n_max: int) -> np.ndarray:
    """``Psi(0), ..., Psi(n_max)`` via :func:`eval_bernstein`, memoized per spec."""
    cached = _PSI_CACHE.get(psi)
    if cached is not None and len(cached) > n_max:
        return cached[: n_max + 1]
    with _PSI_LOCK:
        cached = _PSI_CACHE.get(psi)
        start = 0 if cached is None else len(cached)
        target = max(n_max + 1, 2 * start)
        fresh = np.array([eval_bernstein(psi, float(n)) for n in range(start, target)])
        values = fresh if cached is None else np.concatenate([cached, fresh])
        _PSI_CACHE[psi] = values
    return values[: n_max + 1]


def _default_cutoff(t: float, shift: int) -> int:
    return int(max(math.ceil(t) + 12.0 * math.sqrt(t + 1.0) + 40.0, shift + 10))


def expect_series(
    weights: Callable[[int], np.ndarray],
    t: float,
    growth: tuple[float, float],
    shift: int = 0,
    tol: float = DEFAULT_TOL,
    max_terms: int = MAX_TERMS,
) -> SeriesResult:
    """Sum ``sum_n f(n) P(N_t = n)`` with a certified tail.

    Parameters
    ----------
    weights
        ``weights(N)`` returns ``f(0), ..., f(N)`` as an array.
    growth
        ``(A, B)`` with ``|f(n)| <= A + B n`` for every ``n``.
    tol
        Relative tolerance on the tail bound; an exactly-zero value needs a
        zero bound.
    """
    if not t >= 0.0:
        raise DomainError(f"Poisson time must be >= 0, got {t!r}")
    a, b = growth
    cutoff = min(_default_cutoff(t, shift), max_terms)
    while True:
        pmf = poisson_pmf(np.arange(cutoff + 1), t)
        terms = weights(cutoff) * pmf
        value = math.fsum(terms)
        bound = poisson_tail_bound(t, cutoff, a, b)
        if bound <= tol * abs(value) or bound == 0.0:
            return SeriesResult(value, bound, cutoff + 1)
        if cutoff >= max_terms:
            raise TruncationError(f"Poisson series at t={t} did not converge", bound)
        cutoff = min(2 * cutoff, max_terms)


def _query_weights(query: PoissonQuery):
    psi = query.psi
    shift = query.shift

    def weights(cutoff):
        n = np.arange(cutoff + 1, dtype=float)
        if psi is None:
            base = np.ones(cutoff + 1)
        else:
            base = psi_on_integers(psi, cutoff + shift)[shift:]
        if query.branch == NEGATIVE:
            base = base * (n + 1.0) ** query.m
        return base

    if psi is None:
        growth = (1.0, 0.0)
    elif query.branch == NEGATIVE:
        # (n+1)^m Psi(n+1) <= (n+1)^(m+1) Psi(1) <= Psi(1) for m <= -1
        growth = (eval_bernstein(psi, 1.0), 0.0)
    else:
        # concavity and Psi(0) = 0 give Psi(x) <= Psi(1) max(x, 1)
        p1 = eval_bernstein(psi, 1.0)
        growth = (p1 * max(shift, 1), p1)
    return weights, growth


def expect_functional_detailed(query: PoissonQuery, t: float, tol: float = DEFAULT_TOL) -> SeriesResult:
    weights, growth = _query_weights(query)
    return expect_series(weights, float(t), growth, query.shift, tol)


def expect_functional(query: PoissonQuery, t: float, tol: float = DEFAULT_TOL) -> float:
    """``E_P`` of the query's weight at Poisson time ``t``.

    Raises
    ------
    TruncationError
        If the tail bound cannot be pushed below ``tol`` (relative).
    """
    return expect_functional_detailed(query, t, tol).value


def simulate_poisson_at(t: float, rng_seed=None) -> int:
    """One Poisson(t) draw; ``rng_seed`` may be a seed or a ``numpy`` Generator."""
    if t < 0:
        raise DomainError("Poisson time must be >= 0")
    rng = np.random.default_rng(rng_seed)
    return int(rng.poisson(t))


def simulate_poisson_many(t: float, size: int, rng_seed=None) -> np.ndarray:
    if t < 0:
        raise DomainError("Poisson time must be >= 0")
    return np.random.default_rng(rng_seed).poisson(t, size=size)
