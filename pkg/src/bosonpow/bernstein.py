"""Bernstein functions through their drift + Levy measure decomposition.

A Bernstein function is written as

    Psi(u) = b*u + int_0^inf (1 - exp(-u*y)) lambda(dy),

with drift ``b >= 0`` and a Levy measure ``lambda`` on (0, inf) satisfying
``int (y ^ 1) lambda(dy) < inf``.  The fractional power ``u**(alpha/2)`` has
density ``(alpha/2) / Gamma(1 - alpha/2) * y**(-1 - alpha/2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

__all__ = [
    "LevyMeasure",
    "BernsteinSpec",
    "MonotonicityReport",
    "eval_bernstein",
    "eval_bernstein_many",
    "fractional_power_spec",
    "log_gamma_spec",
    "drift_spec",
    "tabulated_spec",
    "check_complete_monotonicity",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10

FRACTIONAL = "fractional"
LOG_GAMMA = "log_gamma"
TABULATED = "tabulated"


@dataclass(frozen=True)
class LevyMeasure:
    """Levy measure on (0, inf).

    Use the constructors :meth:`fractional`, :meth:`log_gamma` and
    :meth:`tabulated` rather than the raw initializer.  Tabulated measures are
    atomic: each ``(y, w)`` node is a point mass ``w`` at ``y``.
    """

    kind: str
    alpha: float | None = None
    nodes: tuple[tuple[float, float], ...] = ()
    integrability_bound: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        if self.kind == FRACTIONAL:
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise DomainError(f"fractional Levy measure needs 0 < alpha < 2, got {self.alpha!r}")
            s = self.alpha / 2.0
            bound = self._scale() * (1.0 / (1.0 - s) + 1.0 / s)
        elif self.kind == LOG_GAMMA:
            bound = -math.expm1(-1.0) + float(special.exp1(1.0))
        elif self.kind == TABULATED:
            for y, _ in self.nodes:
                if not y > 0.0:
                    raise DomainError(f"Levy measure must live on (0, inf); got node y={y!r}")
            bound = math.fsum(w * min(y, 1.0) for y, w in self.nodes)
        else:
            raise DomainError(f"unknown Levy measure kind {self.kind!r}")
        if not math.isfinite(bound):
            raise DomainError("Levy measure is not integrable against min(y, 1)")
        object.__setattr__(self, "integrability_bound", bound)

    @classmethod
    def fractional(cls, alpha: float) -> "LevyMeasure":
        return cls(FRACTIONAL, alpha=float(alpha))

    @classmethod
    def log_gamma(cls) -> "LevyMeasure":
        """Measure ``exp(-y)/y dy`` whose Bernstein function is ``log(1 + u)``."""
        return cls(LOG_GAMMA)

    @classmethod
    def tabulated(cls, nodes, strict: bool = True) -> "LevyMeasure":
        """Atomic measure from ``(y, weight)`` pairs.

        ``strict=False`` admits negative weights; such a measure is not a
        Levy measure and only exists to exercise the monotonicity checker.
        """
        nodes = tuple((float(y), float(w)) for y, w in nodes)
        if strict:
            for _, w in nodes:
                if w < 0.0:
                    raise DomainError(f"Levy measure weights must be >= 0, got {w!r}")
        return cls(TABULATED, nodes=nodes)

    @property
    def has_density(self) -> bool:
        return self.kind != TABULATED

    def _scale(self) -> float:
        s = self.alpha / 2.0
        return s / math.gamma(1.0 - s)

    def _singular_exponent(self) -> float:
        # density ~ y**(-1 - s) as y -> 0
        return self.alpha / 2.0 if self.kind == FRACTIONAL else 0.0

    def density(self, y: float) -> float:
        if self.kind == FRACTIONAL:
            return self._scale() * y ** (-1.0 - self.alpha / 2.0)
        if self.kind == LOG_GAMMA:
            return math.exp(-y) / y
        raise TypeError("tabulated Levy measures are atomic and have no density")

    def log_y_density(self, log_y: float) -> float:
        """``log(y * density(y))`` as a function of ``log(y)``."""
        if self.kind == FRACTIONAL:
            return math.log(self._scale()) - self.alpha / 2.0 * log_y
        if self.kind == LOG_GAMMA:
            return -math.exp(log_y) if log_y < 700 else -math.inf
        raise TypeError("tabulated Levy measures are atomic and have no density")

    def integrability_quadrature(self) -> float:
        """Recompute ``int min(y, 1) lambda(dy)`` by adaptive quadrature."""
        if not self.has_density:
            return math.fsum(w * min(y, 1.0) for y, w in self.nodes)
        head, _ = integrate.quad(lambda y: y * self.density(y), 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        # y = exp(z) on the tail
        tail, _ = integrate.quad(
            lambda z: math.exp(self.log_y_density(z)),
            0.0, np.inf, epsabs=1e-300, epsrel=1e-12, limit=200,
        )
        return head + tail


@dataclass(frozen=True)
class BernsteinSpec:
    """Bernstein function ``Psi(u) = drift*u + int (1 - e^{-uy}) levy(dy)``."""

    drift: float = 0.0
    levy: LevyMeasure | None = None
    label: str = ""

    def __post_init__(self):
        if not self.drift >= 0.0:
            raise DomainError(f"drift must be >= 0, got {self.drift!r}")

    @property
    def in_b0(self) -> bool:
        """True for the drift-free subclass used by the expectation formulas."""
        return self.drift == 0.0 and self.levy is not None

    def __call__(self, u: float) -> float:
        return eval_bernstein(self, u)


def fractional_power_spec(alpha: float) -> BernsteinSpec:
    """Levy representation of ``u**(alpha/2)`` for ``0 < alpha < 2``.

    ``alpha = 0`` (the constant weight) and ``alpha = 2`` (pure drift) are not
    members of the drift-free class and are rejected here; callers route them
    through the identity weight or :func:`drift_spec`.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"fractional_power_spec requires 0 < alpha < 2, got {alpha!r}")
    return BernsteinSpec(0.0, LevyMeasure.fractional(alpha), label=f"u^{alpha / 2:g}")


def log_gamma_spec() -> BernsteinSpec:
    return BernsteinSpec(0.0, LevyMeasure.log_gamma(), label="log(1+u)")


def drift_spec(b: float = 1.0) -> BernsteinSpec:
    return BernsteinSpec(float(b), None, label=f"{b:g}*u")


def tabulated_spec(nodes, drift: float = 0.0, strict: bool = True, label: str = "tabulated") -> BernsteinSpec:
    return BernsteinSpec(float(drift), LevyMeasure.tabulated(nodes, strict=strict), label=label)


def _quad_piece(f, a, b, tol):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, epsabs=1e-300, epsrel=max(min(tol * 1e-2, 1e-12), 1e-14), limit=400)
    return val, err


def _one_minus_exp_ratio(x):
    # (1 - e^{-x}) / x, continuous at 0
    return -math.expm1(-x) / x if x > 0.0 else 1.0


def _levy_integral(levy: LevyMeasure, u: float, tol: float) -> tuple[float, float]:
    """Return ``(int (1 - e^{-uy}) levy(dy), error estimate)`` for a density measure."""
    s = levy._singular_exponent()
    p = 1.0 / (1.0 - s)

    log_p = math.log(p)

    # (0, 1]: y = v**p absorbs the y**(-1-s) singularity; for the fractional
    # density the transformed integrand is u * c * p * (1 - e^{-uy}) / (uy)
    def head(v):
        log_y = p * math.log(v)
        y = math.exp(log_y)
        weight = math.exp(log_p + (p - 1.0) * math.log(v) + levy.log_y_density(log_y))
        return weight * u * _one_minus_exp_ratio(u * y)

    # (1, inf): y = exp(z) turns the power-law tail into an exponential one
    def tail(z):
        weight = math.exp(levy.log_y_density(z))
        if z > 700:
            return weight
        return weight * -math.expm1(-u * math.exp(z))

    total = 0.0
    err = 0.0
    head_breaks = [0.0, 1.0]
    if u > 1.0:
        head_breaks.insert(1, (1.0 / u) ** (1.0 / p))
    for a, b in zip(head_breaks[:-1], head_breaks[1:]):
        v, e = _quad_piece(head, a, b, tol)
        total += v
        err += e
    tail_breaks = [0.0, np.inf]
    if 0.0 < u < 1.0:
        tail_breaks.insert(1, math.log(1.0 / u))
    for a, b in zip(tail_breaks[:-1], tail_breaks[1:]):
        v, e = _quad_piece(tail, a, b, tol)
        total += v
        err += e
    return total, err


def eval_bernstein(spec: BernsteinSpec, u: float, tol: float = DEFAULT_TOL) -> float:
    """Evaluate ``Psi(u)`` from the drift and Levy measure of ``spec``.

    Raises
    ------
    DomainError
        If ``u < 0``.
    QuadratureError
        If the Levy integral misses the relative tolerance ``tol``.
    """
    u = float(u)
    if not u >= 0.0:
        raise DomainError(f"Bernstein functions are evaluated on u >= 0, got {u!r}")
    value = spec.drift * u
    levy = spec.levy
    if levy is None or u == 0.0:
        return value
    if not levy.has_density:
        return value + math.fsum(w * -math.expm1(-u * y) for y, w in levy.nodes)
    integral, err = _levy_integral(levy, u, tol)
    if err > tol * abs(integral) + 1e-300:
        raise QuadratureError("Levy integral did not converge", integral, err)
    return value + integral


def eval_bernstein_many(spec: BernsteinSpec, us, tol: float = DEFAULT_TOL) -> np.ndarray:
    return np.array([eval_bernstein(spec, u, tol) for u in np.ravel(us)], dtype=float).reshape(np.shape(us))


@dataclass
class MonotonicityReport:
    """Outcome of :func:`check_complete_monotonicity`.

    ``max_violation[n]`` is the largest positive part of ``(-1)**n Psi^(n)``
    found on the grid for ``n >= 1``; entry 0 is the largest positive part of
    ``-Psi``.  Only excesses above the finite-difference error estimate plus
    ``atol`` count as violations.
    """

    order: int
    max_violation: dict[int, float]
    violations: list[tuple[int, float, float]]
    atol: float

    @property
    def ok(self) -> bool:
        return not self.violations


def _central_difference(f, u, n, h):
    coeffs = [(-1) ** j * math.comb(n, j) for j in range(n + 1)]
    return math.fsum(c * f(u + (n / 2.0 - j) * h) for j, c in enumerate(coeffs)) / h ** n


def _adaptive_derivative(f, u, n, steps=10):
    # largest admissible step keeps every stencil point strictly positive
    h = min(1.0, u) * 2.0 / (n + 1)
    estimates = []
    for _ in range(steps):
        estimates.append((h, _central_difference(f, u, n, h)))
        h *= 0.5
    best, best_err = estimates[-1][1], math.inf
    for (_, d1), (_, d2) in zip(estimates[:-1], estimates[1:]):
        diff = abs(d2 - d1)
        if diff < best_err:
            best, best_err = d2, diff
    return best, best_err


def check_complete_monotonicity(spec: BernsteinSpec, grid, order: int = 3, atol: float = 1e-6) -> MonotonicityReport:
    """Finite-difference test of the sign pattern ``(-1)**n Psi^(n) <= 0``.

    Violations are reported, never raised.
    """
    grid = [float(u) for u in grid]
    if order < 1 or order > 6:
        raise DomainError("order must be between 1 and 6")
    if any(u <= 0.0 for u in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be positive and strictly increasing")

    f = spec.__call__
    max_violation = {n: 0.0 for n in range(order + 1)}
    violations = []
    for u in grid:
        value = f(u)
        if -value > atol:
            violations.append((0, u, -value))
        max_violation[0] = max(max_violation[0], -value, 0.0)
        for n in range(1, order + 1):
            d, err = _adaptive_derivative(f, u, n)
            signed = (-1) ** n * d
            max_violation[n] = max(max_violation[n], signed, 0.0)
            if signed > err + atol:
                violations.append((n, u, signed))
    return MonotonicityReport(order, max_violation, violations, atol)
