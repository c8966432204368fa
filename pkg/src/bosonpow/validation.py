"""Named invariant checks run by ``bosonpow validate``.

Each check returns a :class:`CheckResult`; checks are kept small enough that
the whole suite finishes in well under a minute.
"""
from __future__ import annotations

import math
import traceback
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    observed: str
    expected: str

    def to_dict(self) -> dict:
        return asdict(self)


def _result(module, name, passed, observed, expected):
    return CheckResult(module, name, bool(passed), str(observed), str(expected))


def check_stirling():
    from .combinatorics import a_coefficient, stirling2

    bad = [(m, r) for m in range(1, 21) for r in range(1, 21)
           if a_coefficient(m, r) != (stirling2(m, r) if m >= r else 0)]
    return _result("combinatorics", "a_coefficient_equals_stirling2", not bad, bad[:5] or "none", "no mismatches")


def check_fractional_roundtrip():
    from .bernstein import eval_bernstein, fractional_power_spec

    worst = 0.0
    for alpha in (0.5, 1.0, 1.5):
        spec = fractional_power_spec(alpha)
        for u in (0.0, 0.3, 1.0, 4.0, 50.0, 1000.0):
            exact = u ** (alpha / 2)
            worst = max(worst, abs(eval_bernstein(spec, u) - exact) / (1.0 + exact))
    return _result("bernstein", "fractional_roundtrip", worst <= 1e-8, f"{worst:.3g}", "<= 1e-08")


def check_poisson_mgf():
    from .poisson_functionals import expect_series, poisson_mgf

    worst = 0.0
    for u in (0.1, 1.0, 3.0):
        for t in (0.5, 5.0, 50.0):
            res = expect_series(lambda n, u=u: np.exp(-u * np.arange(n + 1)), t, (1.0, 0.0))
            worst = max(worst, abs(res.value - poisson_mgf(u, t)))
    return _result("poisson_functionals", "mgf_consistency", worst <= 1e-12, f"{worst:.3g}", "<= 1e-12")


def check_kernel_positivity():
    from .model import CutoffFunction, ModelSpec
    from .pair_potential import KernelTable

    model = ModelSpec("nelson", CutoffFunction("gaussian", math.sqrt(2.0)))
    table = KernelTable.build(model, 0.1, 41, r_max=6.0)
    k0 = table.values[:, 0]
    ok = np.all(k0 > 0) and np.all(np.abs(table.values[:, :-3]) <= k0[:, None] * (1 + 1e-9) + table.error)
    return _result("pair_potential", "kernel_positive_on_diagonal_and_bounded", ok,
                   f"min K(0,t)={k0.min():.3g}", "K(0,t) > 0 and |K(x,t)| <= K(0,t)")


def check_constant_path():
    from .model import CutoffFunction, ModelSpec
    from .pair_potential import constant_path_w, w_infinity

    model = ModelSpec("nelson", CutoffFunction("gaussian", math.sqrt(2.0)))
    gap = abs(constant_path_w(model, 40.0) - w_infinity(model))
    return _result("pair_potential", "constant_path_saturates_w_infinity", gap <= 1e-12, f"{gap:.3g}", "<= 1e-12")


def check_oracle():
    from .expectations import PowerQuery
    from .oracle import SingleModeModel, exact_diag_ground_state, oracle_expectation, pipeline_expectation

    worst = 0.0
    for mu in (0.5, 2.0, 10.0):
        model = SingleModeModel.from_mu(mu)
        _, state = exact_diag_ground_state(model)
        for k in (-2, -1, -0.5, 0.5, 1, 1.5, 2, 3, 3.5):
            q = PowerQuery(k)
            ref = oracle_expectation(model, q, state)
            worst = max(worst, abs(pipeline_expectation(model, q) - ref) / abs(ref))
    return _result("oracle", "pipeline_matches_exact_diagonalization", worst <= 1e-9, f"{worst:.3g}", "<= 1e-09")


def check_mgf_crosscheck():
    from .oracle import SingleModeModel, mgf_crosscheck

    worst = 0.0
    for mu in (1.0, 5.0):
        model = SingleModeModel.from_mu(mu)
        for beta in (0.0, 0.5, 1.0, 3.0):
            exact, formula = mgf_crosscheck(model, beta)
            worst = max(worst, abs(exact - formula))
    return _result("oracle", "rho_beta_identity", worst <= 1e-10, f"{worst:.3g}", "<= 1e-10")


def check_w_range():
    from .model import CutoffFunction, ModelSpec
    from .path_gibbs import MCMCConfig, run_chains

    model = ModelSpec("nelson", CutoffFunction("gaussian", math.sqrt(2.0)), g=1.0)
    ens = run_chains(model, MCMCConfig(T=2.0, dt=0.1, n_sweeps=500, burn_in=100, thin=1), seed=7)
    bad = ens.w_range_violations
    return _result("path_gibbs", "w_range", bad == 0, f"{bad} violations in {len(ens)}", "0 violations")


def check_pull_through():
    from .expectations import PowerQuery, ground_state_expectation
    from .model import ModelSpec
    from .path_gibbs import PathEnsemble

    rng = np.random.default_rng(3)
    w = rng.uniform(0.0, 1.7, 500)
    ens = PathEnsemble(w, np.zeros(500, dtype=int), ModelSpec(g=1.3), 2.0, 0.1, 1.77, 0.0)
    est = ground_state_expectation(PowerQuery(1), ens, 1.3).value
    ref = 1.3 ** 2 * math.fsum(w) / len(w)
    gap = abs(est - ref) / ref
    return _result("expectations", "k1_equals_g2_mean_w", gap <= 4 * np.finfo(float).eps, f"{gap:.3g}",
                   "machine precision")


CHECKS: list[Callable[[], CheckResult]] = [
    check_stirling,
    check_fractional_roundtrip,
    check_poisson_mgf,
    check_kernel_positivity,
    check_constant_path,
    check_oracle,
    check_mgf_crosscheck,
    check_pull_through,
    check_w_range,
]


def run_checks(checks=None) -> list[CheckResult]:
    out = []
    for check in checks or CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # a crash is reported as a failure, not raised
            module = check.__module__.rsplit(".", 1)[-1]
            out.append(_result(module, check.__name__.removeprefix("check_"), False,
                               f"{type(exc).__name__}: {exc}", traceback.format_exc(limit=2)))
    return out
