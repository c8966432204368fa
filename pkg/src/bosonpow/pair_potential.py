"""Pair interaction kernel, its saturation constant, and path double integrals.

All three model variants share the form

    K(x, t) = 1/2 int rho(k) exp(-|t| Omega(k)) exp(-i k.x) dk

with ``rho = phihat^2 / omega, Omega = omega`` (Nelson, zero momentum) and
``rho = phihat^2 / |k|^2, Omega = 1`` (polaron).  The saturation constant is
``W_inf = 1/2 int rho / Omega^2 dk`` and a constant path over the window
``[-T, T]`` gives ``1/2 int rho / Omega^2 (1 - e^{-T Omega})^2 dk``.
"""
from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _numerics
from .errors import DivergentIntegralError, DomainError, QuadratureError
from .model import POINT, POLARON, ModelSpec

__all__ = [
    "kernel",
    "kernel_with_error",
    "w_infinity",
    "w_infinity_with_error",
    "constant_path_w",
    "infrared_diagnostic",
    "KernelTable",
    "DiscretePath",
    "trapezoid_weights",
    "double_time_integral",
    "square_integral",
    "w_certificate",
]

DEFAULT_TOL = 1e-11


def _check_convergent(model: ModelSpec):
    if model.variant == POLARON:
        if model.d < 3:
            raise DivergentIntegralError("polaron coupling phihat/|k| is not square integrable for d < 3 (infrared)")
        if model.cutoff.kind == POINT:
            raise DivergentIntegralError("point-charge polaron: int dk/|k|^2 diverges at large |k| (ultraviolet)")


def _radial_prefactor(d: int) -> float:
    # 1/2 times the angular integral of the radial reduction
    return 0.5 * (4.0 * math.pi if d == 3 else 2.0)


def _quad(f, a, b, epsabs, epsrel, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=500, **kw)


def _radial_moment(model: ModelSpec, radial, tol: float) -> tuple[float, float]:
    """``1/2 int radial(k) dk`` over R^d for a radial integrand, with error."""
    d = model.d
    pref = _radial_prefactor(d)
    kmax = model.cutoff.k_max
    f = (lambda k: float(radial(k)) * k * k) if d == 3 else (lambda k: float(radial(k)))
    val, err = _quad(f, 0.0, kmax, 0.0, tol)
    return pref * val, pref * err


@functools.lru_cache(maxsize=64)
def _kernel_scale(model: ModelSpec) -> float:
    # K(0, 0) sets the absolute error scale for far-field kernel values
    _check_convergent(model)
    val, _ = _radial_moment(model, lambda k: model.spectral_weight(k), 1e-12)
    return val


def kernel_with_error(model: ModelSpec, x, t: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(K(x, t), error estimate)`` by adaptive radial quadrature."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    tau = abs(float(t))
    if model.variant == POLARON and model.cutoff.kind == POINT:
        if model.d != 3:
            raise DivergentIntegralError("point-charge polaron kernel needs d = 3")
        a = model.cutoff.normalization
        # 2 pi A^2 int_0^inf sinc(kr) dk = pi^2 A^2 / r
        return (math.pi ** 2 * a * a * math.exp(-tau) / r if r > 0 else math.inf), 0.0
    _check_convergent(model)

    scale = _kernel_scale(model)
    epsabs = tol * scale
    d = model.d
    pref = _radial_prefactor(d)
    kmax = model.cutoff.k_max

    def base(k):
        return float(model.spectral_weight(k) * np.exp(-tau * model.rate(k)))

    if r == 0.0:
        f = (lambda k: base(k) * k * k) if d == 3 else base
        val, err = _quad(f, 0.0, kmax, epsabs, tol)
        return pref * val, pref * err

    k1 = min(kmax, math.pi / r)
    if d == 3:
        head = lambda k: base(k) * k * k * (math.sin(k * r) / (k * r) if k > 0 else 1.0)
    else:
        head = lambda k: base(k) * math.cos(k * r)
    val, err = _quad(head, 0.0, k1, epsabs, tol)
    if k1 < kmax:
        if d == 3:
            v2, e2 = _quad(lambda k: base(k) * k / r, k1, kmax, epsabs, tol, weight="sin", wvar=r)
        else:
            v2, e2 = _quad(base, k1, kmax, epsabs, tol, weight="cos", wvar=r)
        val += v2
        err += e2
    return pref * val, pref * err


def kernel(model: ModelSpec, x, t: float, tol: float = DEFAULT_TOL) -> float:
    """Pair interaction ``K(x, t)`` by direct quadrature.

    Raises
    ------
    QuadratureError
        If the estimated error exceeds ``tol`` relative to ``K(0, 0)``.
    """
    val, err = kernel_with_error(model, x, t, tol)
    if err > 0.0 and err > 100.0 * tol * max(_kernel_scale(model), abs(val)):
        raise QuadratureError("kernel quadrature did not converge", val, err)
    return val


@functools.lru_cache(maxsize=64)
def _w_infinity_cached(model: ModelSpec, tol: float) -> tuple[float, float]:
    _check_convergent(model)
    return _radial_moment(model, lambda k: model.spectral_weight(k) / model.rate(k) ** 2, tol)


def w_infinity_with_error(model: ModelSpec, tol: float = 1e-12) -> tuple[float, float]:
    return _w_infinity_cached(model.with_g(0.0), tol)


def w_infinity(model: ModelSpec, tol: float = 1e-12) -> float:
    """Saturation constant ``W_inf``; the deterministic upper bound of ``W``.

    Raises
    ------
    DivergentIntegralError
        For the polaron with a point charge (ultraviolet) or ``d < 3``
        (infrared).
    """
    val, err = w_infinity_with_error(model, tol)
    if err > 1e3 * tol * val:
        raise QuadratureError("W_inf quadrature did not converge", val, err)
    return val


def constant_path_w(model: ModelSpec, T: float, tol: float = 1e-12) -> float:
    """Quadrant integral ``W_T`` of the constant path, in closed radial form."""
    _check_convergent(model)

    def radial(k):
        om = model.rate(k)
        return model.spectral_weight(k) / om ** 2 * (-np.expm1(-T * om)) ** 2

    return _radial_moment(model, radial, tol)[0]


def infrared_diagnostic(model: ModelSpec, C: float) -> float:
    """``1/2 int rho / Omega^2 (1 - C |k|^2) dk``, a candidate lower bound on E[W].

    A non-positive value makes the bound vacuous; a ``UserWarning`` says so.
    """
    if C < 0:
        raise DomainError("C must be >= 0")
    _check_convergent(model)
    value = _radial_moment(model, lambda k: model.spectral_weight(k) / model.rate(k) ** 2 * (1.0 - C * k * k), 1e-12)[0]
    if value <= 0.0:
        warnings.warn(f"infrared lower bound is vacuous for C={C}: value {value:.3g} <= 0", UserWarning, stacklevel=2)
    return value


def trapezoid_weights(n: int, dt: float, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """Trapezoid weights on grid indices ``lo..hi`` of an ``n``-point grid, zero elsewhere."""
    hi = n - 1 if hi is None else hi
    w = np.zeros(n)
    w[lo : hi + 1] = dt
    w[lo] *= 0.5
    w[hi] *= 0.5
    return w


@dataclass
class DiscretePath:
    """Path sampled on the uniform grid ``-T, -T + dt, ..., T``."""

    dt: float
    T: float
    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.ascontiguousarray(np.atleast_2d(np.asarray(self.positions, dtype=float)))
        steps = 2.0 * self.T / self.dt
        if not self.dt > 0 or abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) % 2:
            raise DomainError("window T must be a multiple of dt so that t = 0 is a grid point")
        if self.positions.shape[0] != self.n:
            raise DomainError(f"path has {self.positions.shape[0]} points, grid needs {self.n}")

    @property
    def n(self) -> int:
        return int(round(2.0 * self.T / self.dt)) + 1

    @property
    def origin(self) -> int:
        return (self.n - 1) // 2

    @property
    def times(self) -> np.ndarray:
        return -self.T + self.dt * np.arange(self.n)

    @classmethod
    def constant(cls, dt: float, T: float, d: int, value: float = 0.0) -> "DiscretePath":
        n = int(round(2.0 * T / dt)) + 1
        return cls(dt, T, np.full((n, d), float(value)))


@dataclass
class KernelTable:
    """Kernel on a radial grid times the time lattice ``tau_j = j*dt``.

    ``error`` is a certified bound on ``|table - K|`` at any ``r <= r_limit``,
    made of the worst quadrature discrepancy against adaptive quadrature and
    the worst interpolation discrepancy at cell midpoints.
    """

    model: ModelSpec
    dt: float
    h: float
    values: np.ndarray
    error: float = 0.0
    quadrature_error: float = 0.0
    interpolation_error: float = 0.0
    n_nodes: int = 0
    _nodes: tuple = field(default=(), repr=False)

    @property
    def n_tau(self) -> int:
        return self.values.shape[0]

    @property
    def r_limit(self) -> float:
        return (self.values.shape[1] - 3) * self.h

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @classmethod
    def build(cls, model: ModelSpec, dt: float, n_tau: int, r_max: float = 12.0, h: float = 0.02,
              certify: bool = True) -> "KernelTable":
        _check_convergent(model)
        n_r = int(math.ceil(r_max / h)) + 4
        kmax = model.cutoff.k_max
        r_grid = h * np.arange(n_r)
        n_nodes = 200 + int(8.0 * kmax * r_grid[-1] / (2.0 * math.pi))
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        k = 0.5 * kmax * (x + 1.0)
        wk = 0.5 * kmax * w * _radial_prefactor(model.d) * model.spectral_weight(k)
        if model.d == 3:
            wk = wk * k * k
        rate = model.rate(k)
        nodes = (k, wk, rate)
        values = cls._evaluate_nodes(model.d, nodes, dt * np.arange(n_tau), r_grid)
        table = cls(model, dt, h, values, n_nodes=n_nodes, _nodes=nodes)
        if certify:
            table.certify()
        return table

    @staticmethod
    def _evaluate_nodes(d, nodes, taus, rs):
        k, wk, rate = nodes
        decay = np.exp(-np.outer(taus, rate)) * wk
        kr = np.outer(k, rs)
        if d == 3:
            basis = np.sinc(kr / math.pi)
        else:
            basis = np.cos(kr)
        return decay @ basis

    def certify(self, n_rows: int = 6, n_quad: int = 5) -> float:
        """Recompute the error certificate and return it."""
        rows = np.unique(np.linspace(0, self.n_tau - 1, n_rows).round().astype(int))
        rs = self.h * np.arange(self.values.shape[1] - 3)
        mids = rs[:-1] + 0.5 * self.h
        exact = self._evaluate_nodes(self.model.d, self._nodes, self.dt * rows, mids)
        interp = np.array([[self.evaluate(r, j) for r in mids] for j in rows])
        self.interpolation_error = float(np.max(np.abs(exact - interp)))

        worst = 0.0
        r_probe = np.linspace(0.0, self.r_limit, n_quad)
        for j in rows:
            for r in r_probe:
                ref, err = kernel_with_error(self.model, r, j * self.dt)
                got = self._evaluate_nodes(self.model.d, self._nodes, np.array([j * self.dt]), np.array([r]))[0, 0]
                worst = max(worst, abs(ref - got) + err)
        self.quadrature_error = worst
        self.error = self.interpolation_error + self.quadrature_error
        return self.error

    def evaluate(self, r, j) -> np.ndarray | float:
        """Interpolated kernel at radius ``r`` and lag index ``j``."""
        r = np.asarray(r, dtype=float)
        j = np.asarray(j)
        if np.any(r > self.r_limit) or np.any(r < 0):
            raise DomainError(f"radius outside kernel table range [0, {self.r_limit}]")
        t = r / self.h
        i = t.astype(int)
        f = t - i
        im1 = np.where(i >= 1, i - 1, 1)
        w_m1 = -f * (f - 1.0) * (f - 2.0) / 6.0
        w_0 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
        w_1 = -(f + 1.0) * f * (f - 2.0) / 2.0
        w_2 = (f + 1.0) * f * (f - 1.0) / 6.0
        v = self.values
        out = w_m1 * v[j, im1] + w_0 * v[j, i] + w_1 * v[j, i + 1] + w_2 * v[j, i + 2]
        return out if out.ndim else float(out)

    def to_csv(self, path, stride: int = 1) -> None:
        """Dump ``(|x|, |t|, K)`` rows for plotting."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["abs_x", "abs_t", "kernel"])
            for j in range(0, self.n_tau, stride):
                for i in range(0, self.values.shape[1] - 3, stride):
                    out.writerow([f"{i * self.h:.10g}", f"{j * self.dt:.10g}", f"{self.values[j, i]:.17g}"])


def _ensure_range(table: KernelTable, path: DiscretePath):
    if path.n > table.n_tau:
        raise DomainError(f"kernel table covers {table.n_tau} lags, path needs {path.n}")
    if abs(path.dt - table.dt) > 1e-12 * table.dt:
        raise DomainError("path grid spacing does not match the kernel table lattice")
    if _numerics.max_pair_distance(path.positions) > table.r_limit:
        raise DomainError("path excursion exceeds the kernel table radius; rebuild with larger r_max")


def double_time_integral(table: KernelTable, path: DiscretePath) -> float:
    """Trapezoidal ``W_T = int_{-T}^0 ds int_0^T K(X_t - X_s, t - s) dt``."""
    _ensure_range(table, path)
    n, o = path.n, path.origin
    wl = trapezoid_weights(n, path.dt, 0, o)
    wr = trapezoid_weights(n, path.dt, o, n - 1)
    return float(_numerics.quadrant_sum(table.values, table.h, path.positions, wl, wr))


def square_integral(table: KernelTable, path: DiscretePath) -> float:
    """Trapezoidal ``int_{-T}^T int_{-T}^T K(X_t - X_s, t - s) ds dt``."""
    _ensure_range(table, path)
    w = trapezoid_weights(path.n, path.dt)
    return float(_numerics.square_sum(table.values, table.h, path.positions, w))


def w_certificate(table: KernelTable, T: float) -> float:
    """Numerical slack ``eps`` such that every discretized ``W_T <= W_inf + eps``.

    Since ``|K(x, t)| <= K(0, t)``, the constant path maximizes the discrete
    sum, so the slack is its excess over ``W_inf`` plus table error.
    """
    path = DiscretePath.constant(table.dt, T, table.model.d)
    w_const = double_time_integral(table, path)
    w_inf, w_err = w_infinity_with_error(table.model)
    return max(0.0, w_const - w_inf) + 2.0 * table.error * T * T + w_err
