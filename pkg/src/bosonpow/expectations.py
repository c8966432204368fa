"""Ground-state expectations of powers and Bernstein functions of the number operator.

Outer average over retained ``W`` samples, inner Poisson expectation at time
``t = g^2 W``.  For ``k = m + alpha/2``:

* ``m >= 1``: ``sum_r S(m, r) t^r E[Psi(N_t + r)]``
* ``m = 0``:  ``E[Psi(N_t)]``
* ``m <= -1``: ``E[(N_t + 1)^m Psi(N_t + 1)]``

with ``Psi(u) = u^(alpha/2)``; when ``alpha = 0`` the Bernstein factor is
dropped and the first line is the Poisson raw moment with random intensity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .bernstein import DEFAULT_TOL as PSI_TOL
from .bernstein import BernsteinSpec, eval_bernstein, fractional_power_spec
from .combinatorics import stirling2
from .diagnostics import batch_means
from .errors import DomainError
from .model import ModelSpec
from .pair_potential import infrared_diagnostic, w_infinity
from .path_gibbs import PathEnsemble
from .poisson_functionals import PoissonQuery, expect_functional_detailed

__all__ = [
    "PowerQuery",
    "Estimate",
    "ground_state_expectation",
    "inner_values",
    "strong_coupling_bounds",
    "jensen_upper_bound",
    "infrared_diagnostic",
    "RESULT_COLUMNS",
    "RESULT_SCHEMA",
    "estimate_row",
]

log = logging.getLogger(__name__)

RESULT_SCHEMA = "bosonpow-expect/1"
RESULT_COLUMNS = ("model_hash", "query", "g", "value", "mc_stderr", "det_error", "n_eff")


@dataclass(frozen=True)
class PowerQuery:
    """Target ``<N^k>`` or, with ``psi_override``, ``<N^m Psi(N)>`` for integer ``k = m``.

    Non-integer ``k`` splits as ``m = floor(k)``, ``alpha = 2 (k - m)`` in
    ``[0, 2)``.  Negative ``m`` always uses the ``N + 1`` shift.
    """

    k: float
    psi_override: BernsteinSpec | None = None
    m: int = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self):
        k = float(self.k)
        if not math.isfinite(k):
            raise DomainError("power k must be finite")
        m = math.floor(k)
        alpha = 2.0 * (k - m)
        if alpha >= 2.0:
            raise DomainError(f"alpha = 2 is not canonical for k={k}; fold it into m + 1")
        if self.psi_override is not None and alpha != 0.0:
            raise DomainError("psi_override needs an integer k (the power of N multiplying Psi)")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "alpha", alpha)

    @property
    def psi(self) -> BernsteinSpec | None:
        """Bernstein factor, or ``None`` when it is identically 1."""
        if self.psi_override is not None:
            return self.psi_override
        return fractional_power_spec(self.alpha) if self.alpha > 0.0 else None

    @property
    def label(self) -> str:
        if self.psi_override is not None:
            return f"N^{self.m}*{self.psi_override.label}" if self.m else self.psi_override.label
        return f"k={self.k:g}"

    def inner_queries(self) -> list[tuple[int, PoissonQuery]]:
        """``(r, query)`` pairs; the inner value is ``sum_r S(m, r) t^r E[query]``."""
        psi = self.psi
        if self.m >= 1:
            return [(r, PoissonQuery.positive(self.m, r, psi)) for r in range(1, self.m + 1)]
        if self.m == 0:
            return [(0, PoissonQuery.zero(psi))]
        return [(0, PoissonQuery.negative(self.m, psi))]


@dataclass
class Estimate:
    value: float
    mc_stderr: float
    deterministic_error: float
    n_effective: float
    provenance: dict = field(default_factory=dict)


def _inner_at(query: PowerQuery, t: float, tol: float) -> tuple[float, float]:
    """Inner value at Poisson time ``t`` and its deterministic error."""
    if query.k == 0.0 and query.psi_override is None:
        return 1.0, 0.0
    if query.m == 0 and t == 0.0:
        # N_0 = 0 and every Bernstein function vanishes there
        return (1.0, 0.0) if query.psi is None else (0.0, 0.0)
    value, err = 0.0, 0.0
    for r, pq in query.inner_queries():
        res = expect_functional_detailed(pq, t, tol)
        coef = stirling2(query.m, r) * t ** r if query.m >= 1 else 1.0
        value += coef * res.value
        err += coef * res.tail_bound
    if query.psi is not None:
        err += PSI_TOL * abs(value)
    return value, err


def inner_values(query: PowerQuery, t, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """Inner values and errors at each Poisson time, evaluated once per distinct ``t``."""
    t = np.asarray(t, dtype=float)
    uniq, inverse = np.unique(t, return_inverse=True)
    vals = np.empty(len(uniq))
    errs = np.empty(len(uniq))
    for i, ti in enumerate(uniq):
        vals[i], errs[i] = _inner_at(query, float(ti), tol)
    return vals[inverse].reshape(t.shape), errs[inverse].reshape(t.shape)


def _is_degenerate(ens: PathEnsemble) -> bool:
    return any(d.get("kind") == "degenerate" for d in ens.diagnostics)


def ground_state_expectation(query: PowerQuery, ensemble: PathEnsemble, g: float,
                             tol: float = 1e-13) -> Estimate:
    """Estimate the ground-state expectation of ``query`` at coupling ``g``.

    Raises
    ------
    DomainError
        If the ensemble was sampled at a different coupling.  Degenerate
        (deterministic-``W``) ensembles are valid for every ``g``.
    """
    if not _is_degenerate(ensemble) and not math.isclose(ensemble.model.g, g, rel_tol=1e-12, abs_tol=1e-15):
        raise DomainError(f"ensemble was sampled at g={ensemble.model.g}, not g={g}")
    g2 = float(g) ** 2
    if query.m == 1 and query.alpha == 0.0 and query.psi_override is None:
        # <N> = g^2 E[W]: the inner value is t itself, no series needed
        vals = g2 * ensemble.w
        errs = np.zeros_like(vals)
    else:
        vals, errs = inner_values(query, g2 * ensemble.w, tol)
    bm = batch_means(vals, ensemble.chain_ids)
    det = float(np.mean(errs))
    det += _table_error_propagation(query, ensemble, g2, tol)
    prov = {
        "query": query.label,
        "k": query.k,
        "m": query.m,
        "alpha": query.alpha,
        "g": g,
        "model_hash": ensemble.model.hash(include_g=False),
        "n_samples": len(ensemble),
        "T": ensemble.T,
        "dt": ensemble.dt,
    }
    return Estimate(bm.mean, bm.stderr, det, bm.ess, prov)


def _table_error_propagation(query, ensemble, g2, tol) -> float:
    """First-order effect of the kernel-table error on the inner value at mean ``W``."""
    table_err = max(((d.get("table_error") or 0.0) for d in ensemble.diagnostics), default=0.0)
    if table_err == 0.0 or not math.isfinite(ensemble.T):
        return 0.0
    dw = table_err * ensemble.T ** 2
    w0 = float(np.mean(ensemble.w))
    hi, _ = _inner_at(query, g2 * (w0 + dw), tol)
    lo, _ = _inner_at(query, g2 * max(w0 - dw, 0.0), tol)
    return 0.5 * abs(hi - lo)


def strong_coupling_bounds(query: PowerQuery, model: ModelSpec, a: float) -> tuple[float, float]:
    """Corridor ``((W_inf - a)^k, W_inf^k)`` for ``lim <N^k> / g^(2k)``, ``k >= 1``."""
    if query.psi_override is not None:
        raise DomainError("the corridor is stated for pure powers N^k")
    if query.k < 1.0:
        raise DomainError(f"strong-coupling corridor needs k >= 1, got k={query.k}")
    if a < 0:
        raise DomainError("a must be >= 0")
    w_inf = w_infinity(model)
    if not w_inf - a > 0:
        raise DomainError("need W_inf - a > 0")
    return (w_inf - a) ** query.k, w_inf ** query.k


def jensen_upper_bound(psi: BernsteinSpec, model: ModelSpec, g: float) -> float:
    """``Psi(g^2 W_inf)``, an upper bound on ``<Psi(N)>`` by concavity."""
    return eval_bernstein(psi, float(g) ** 2 * w_infinity(model))


def estimate_row(est: Estimate, extra: dict | None = None) -> dict:
    p = est.provenance
    row = {
        "model_hash": p.get("model_hash", ""),
        "query": p.get("query", ""),
        "g": p.get("g", math.nan),
        "value": est.value,
        "mc_stderr": est.mc_stderr,
        "det_error": est.deterministic_error,
        "n_eff": est.n_effective,
    }
    if extra:
        row.update(extra)
    return row
