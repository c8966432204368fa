import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonpow.bernstein import (
    LevyMeasure,
    check_complete_monotonicity,
    drift_spec,
    eval_bernstein,
    fractional_power_spec,
    log_gamma_spec,
    tabulated_spec,
)
from bosonpow.errors import DomainError

alphas = st.floats(0.02, 1.98)


@pytest.mark.parametrize("alpha,u,expected", [(1.0, 0.0, 0.0), (1.0, 4.0, 2.0), (1.0, 9.0, 3.0)])
def test_fractional_examples(alpha, u, expected):
    assert eval_bernstein(fractional_power_spec(alpha), u) == pytest.approx(expected, rel=1e-12, abs=0)


def test_alpha_two_is_pure_drift():
    assert eval_bernstein(drift_spec(1.0), 3.0) == 3.0
    assert not drift_spec(1.0).in_b0


@pytest.mark.parametrize("alpha", [0.0, 2.0, -0.5, 2.5])
def test_fractional_rejects_boundary(alpha):
    with pytest.raises(DomainError):
        fractional_power_spec(alpha)


@settings(max_examples=60, deadline=None)
@given(alphas, st.floats(0.0, 1e3))
def test_fractional_roundtrip(alpha, u):
    exact = u ** (alpha / 2.0)
    assert abs(eval_bernstein(fractional_power_spec(alpha), u) - exact) <= 1e-8 * (1.0 + exact)


@pytest.mark.parametrize("u", [0.0, 1e-6, 0.5, 3.0, 1e4])
def test_log_gamma_is_log1p(u):
    assert eval_bernstein(log_gamma_spec(), u) == pytest.approx(math.log1p(u), rel=1e-10, abs=1e-16)


def test_tabulated_is_atomic():
    spec = tabulated_spec([(0.5, 2.0), (3.0, 0.25)], drift=0.1)
    u = 1.7
    expected = 0.1 * u + 2.0 * (1 - math.exp(-0.5 * u)) + 0.25 * (1 - math.exp(-3.0 * u))
    assert eval_bernstein(spec, u) == pytest.approx(expected, rel=1e-15)


def test_tabulated_rejects_bad_nodes():
    with pytest.raises(DomainError):
        tabulated_spec([(0.0, 1.0)])
    with pytest.raises(DomainError):
        tabulated_spec([(1.0, -1.0)])


@pytest.mark.parametrize("levy", [LevyMeasure.fractional(0.5), LevyMeasure.fractional(1.0),
                                  LevyMeasure.fractional(1.7), LevyMeasure.log_gamma()])
def test_integrability_bound_matches_quadrature(levy):
    assert levy.integrability_quadrature() == pytest.approx(levy.integrability_bound, rel=1e-8)


def test_negative_u_rejected():
    with pytest.raises(DomainError):
        eval_bernstein(fractional_power_spec(1.0), -1.0)


@settings(max_examples=30, deadline=None)
@given(alphas, st.lists(st.floats(0.0, 500.0), min_size=3, max_size=8, unique=True))
def test_monotone_and_midpoint_concave(alpha, us):
    spec = fractional_power_spec(alpha)
    us = sorted(us)
    vals = [spec(u) for u in us]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    for a, b in zip(us, us[1:]):
        assert spec(0.5 * (a + b)) >= 0.5 * (spec(a) + spec(b)) - 1e-10 * (1 + spec(b))


def test_psi_zero_is_zero_for_b0():
    for spec in (fractional_power_spec(0.3), log_gamma_spec(), tabulated_spec([(1.0, 1.0)])):
        assert spec.in_b0
        assert eval_bernstein(spec, 0.0) == 0.0


def test_monotonicity_report_sqrt():
    report = check_complete_monotonicity(fractional_power_spec(1.0), [0.5, 1, 2, 4], order=3)
    assert report.ok
    assert max(report.max_violation.values()) <= 1e-6


def test_monotonicity_report_drift():
    assert check_complete_monotonicity(drift_spec(1.0), [0.5, 1, 2, 4], order=2).ok


def test_monotonicity_report_flags_negative_weight():
    bad = tabulated_spec([(0.5, 1.0), (3.0, -0.8)], strict=False)
    report = check_complete_monotonicity(bad, [0.2, 0.5, 1, 2, 4], order=3)
    assert not report.ok
    assert {n for n, _, _ in report.violations}


def test_concurrent_evaluation_is_consistent():
    spec = fractional_power_spec(1.3)
    us = np.linspace(0.1, 50, 40)
    serial = [spec(u) for u in us]
    out = [None] * 4

    def work(i):
        out[i] = [spec(u) for u in us]

    threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(o == serial for o in out)
