import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from bosonpow.bernstein import fractional_power_spec, log_gamma_spec
from bosonpow.errors import DomainError, TruncationError
from bosonpow.expectations import PowerQuery
from bosonpow.oracle import (
    CoherentState,
    SingleModeModel,
    exact_diag_ground_state,
    mgf_crosscheck,
    oracle_expectation,
    pipeline_expectation,
)


def test_unit_intensity_energy_and_state():
    model = SingleModeModel.from_mu(1.0)
    assert model.mu == pytest.approx(1.0, rel=1e-15)
    energy, psi = exact_diag_ground_state(model)
    assert energy == pytest.approx(-1.0, abs=1e-10)
    n = np.arange(len(psi))
    expected = np.exp(-0.5 - 0.5 * gammaln(n + 1.0)) * (-1.0) ** n
    np.testing.assert_allclose(psi, expected, atol=1e-10)


@pytest.mark.parametrize("omega_bar,lambda_bar,g", [(1.0, 1.0, 0.7), (2.5, 0.4, 3.0), (0.5, 2.0, 1.1)])
def test_energy_is_minus_mu_omega(omega_bar, lambda_bar, g):
    model = SingleModeModel(omega_bar, lambda_bar, g)
    energy, _ = exact_diag_ground_state(model)
    assert energy == pytest.approx(-model.mu * omega_bar, rel=1e-10, abs=1e-12)


def test_zero_coupling_is_vacuum():
    energy, psi = exact_diag_ground_state(SingleModeModel(g=0.0))
    assert energy == 0.0
    assert psi[0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.abs(psi[1:]) < 1e-15)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 30.0))
def test_number_distribution_is_poisson(mu):
    model = SingleModeModel.from_mu(mu)
    _, psi = exact_diag_ground_state(model)
    tv = 0.5 * np.abs(psi ** 2 - CoherentState(model.mu).pmf(model.n_max)).sum()
    assert tv < 1e-10


def test_truncation_checks():
    with pytest.raises(DomainError):
        exact_diag_ground_state(SingleModeModel(g=3.0, n_max=20))
    with pytest.raises(DomainError):
        SingleModeModel(omega_bar=0.0)
    with pytest.raises(DomainError):
        CoherentState(-1.0)


def test_tail_weight_guard(monkeypatch):
    from bosonpow import oracle

    model = SingleModeModel.from_mu(4.0)
    exact_diag_ground_state(model)
    monkeypatch.setattr(oracle, "TAIL_TOL", 1e-300)
    with pytest.raises(TruncationError):
        exact_diag_ground_state(model)


@pytest.mark.parametrize("mu", [0.5, 2.0, 10.0, 40.0])
@pytest.mark.parametrize("k", [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2, 2.5, 3, 4])
def test_pipeline_matches_oracle(mu, k):
    model = SingleModeModel.from_mu(mu)
    q = PowerQuery(k)
    assert pipeline_expectation(model, q) == pytest.approx(oracle_expectation(model, q), rel=1e-9)


@pytest.mark.parametrize("m", [-1, 0, 2])
@pytest.mark.parametrize("psi", [fractional_power_spec(0.7), log_gamma_spec()], ids=["frac", "loggamma"])
def test_pipeline_matches_oracle_with_bernstein_factor(m, psi):
    model = SingleModeModel.from_mu(3.0)
    q = PowerQuery(m, psi)
    assert pipeline_expectation(model, q) == pytest.approx(oracle_expectation(model, q), rel=1e-7)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0, 5.0])
def test_mgf_identity(beta):
    exact, formula = mgf_crosscheck(SingleModeModel.from_mu(2.5), beta)
    assert exact == pytest.approx(formula, abs=1e-12)
    with pytest.raises(DomainError):
        mgf_crosscheck(SingleModeModel.from_mu(1.0), -1.0)


def test_coherent_state_pmf():
    p = CoherentState(3.0).pmf(60)
    assert math.fsum(p) == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(CoherentState(0.0).pmf(3), [1.0, 0.0, 0.0, 0.0])
