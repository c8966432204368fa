"""Exactly solvable single-mode fixed-source model.

``h = wbar a^dag a + (g / sqrt 2) lbar (a + a^dag)`` has a coherent ground
state whose number distribution is Poisson with mean
``mu = g^2 lbar^2 / (2 wbar^2)``.  Truncated-Fock diagonalization gives an
independent check of every expectation formula with deterministic ``W``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bernstein import eval_bernstein
from .errors import DomainError, TruncationError
from .expectations import PowerQuery, ground_state_expectation
from .model import ModelSpec
from .path_gibbs import PathEnsemble

__all__ = [
    "SingleModeModel",
    "CoherentState",
    "exact_diag_ground_state",
    "oracle_expectation",
    "pipeline_expectation",
    "mgf_crosscheck",
    "TAIL_TOL",
]

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class CoherentState:
    mu: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise DomainError("coherent-state intensity must be >= 0")

    def pmf(self, n_max: int) -> np.ndarray:
        n = np.arange(n_max + 1)
        if self.mu == 0.0:
            return (n == 0).astype(float)
        from scipy.special import gammaln

        return np.exp(n * math.log(self.mu) - self.mu - gammaln(n + 1.0))


@dataclass(frozen=True)
class SingleModeModel:
    omega_bar: float = 1.0
    lambda_bar: float = math.sqrt(2.0)
    g: float = 1.0
    n_max: int | None = None

    def __post_init__(self):
        if not self.omega_bar > 0:
            raise DomainError("mode frequency must be > 0")
        if self.n_max is None:
            object.__setattr__(self, "n_max", self.required_n_max)
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")

    @property
    def mu(self) -> float:
        return self.g ** 2 * self.lambda_bar ** 2 / (2.0 * self.omega_bar ** 2)

    @property
    def w_value(self) -> float:
        """Deterministic ``W`` with ``g^2 W = mu``."""
        return self.lambda_bar ** 2 / (2.0 * self.omega_bar ** 2)

    @property
    def required_n_max(self) -> int:
        return 10 + math.ceil(10.0 * self.mu)

    def coherent_state(self) -> CoherentState:
        return CoherentState(self.mu)

    @classmethod
    def from_mu(cls, mu: float, omega_bar: float = 1.0, lambda_bar: float = math.sqrt(2.0)) -> "SingleModeModel":
        """Model with coupling chosen so that the Poisson intensity is ``mu``."""
        return cls(omega_bar, lambda_bar, math.sqrt(2.0 * mu) * omega_bar / abs(lambda_bar))


def exact_diag_ground_state(model: SingleModeModel) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the truncated tridiagonal Hamiltonian.

    The state is normalized with a nonnegative vacuum component.

    Raises
    ------
    DomainError
        If ``n_max`` is below ``10 + ceil(10 mu)``.
    TruncationError
        If the weight on the top tenth of the basis exceeds ``1e-12``.
    """
    if model.n_max < model.required_n_max:
        raise DomainError(f"n_max={model.n_max} too small; need >= {model.required_n_max}")
    n = np.arange(model.n_max + 1, dtype=float)
    diag = model.omega_bar * n
    off = model.g / math.sqrt(2.0) * model.lambda_bar * np.sqrt(n[1:])
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    psi = vecs[:, 0]
    psi = psi / np.linalg.norm(psi)
    if psi[0] < 0:
        psi = -psi
    tail = float(np.sum(psi[-max(1, len(psi) // 10):] ** 2))
    if tail > TAIL_TOL:
        raise TruncationError(f"Fock truncation n_max={model.n_max} leaves tail weight {tail:.3g}", tail)
    return float(vals[0]), psi


def _weights(query: PowerQuery, n: np.ndarray) -> np.ndarray:
    if query.psi_override is not None:
        psi = query.psi_override
        arg = n + 1.0 if query.m < 0 else n
        ps = np.array([eval_bernstein(psi, float(u)) for u in arg])
        with np.errstate(divide="ignore"):
            return np.where(arg > 0, arg ** float(query.m), 0.0) * ps if query.m else ps
    if query.k == 0.0:
        return np.ones_like(n)
    if query.m < 0:
        return (n + 1.0) ** query.k
    return n ** query.k


def oracle_expectation(model: SingleModeModel, query: PowerQuery, state: np.ndarray | None = None) -> float:
    """``sum_n f(n) |psi_n|^2`` from the diagonalized state with closed-form powers."""
    if state is None:
        _, state = exact_diag_ground_state(model)
    n = np.arange(len(state), dtype=float)
    return math.fsum(_weights(query, n) * state ** 2)


def pipeline_expectation(model: SingleModeModel, query: PowerQuery) -> float:
    """Same quantity through the path/Poisson pipeline with a one-sample ensemble."""
    ens = PathEnsemble.degenerate(model.w_value, ModelSpec(g=model.g))
    return ground_state_expectation(query, ens, model.g).value


def mgf_crosscheck(model: SingleModeModel, beta: float, state: np.ndarray | None = None) -> tuple[float, float]:
    """``(sum_n e^{-beta n} |psi_n|^2, exp(-mu (1 - e^{-beta})))``."""
    if beta < 0:
        raise DomainError("beta must be >= 0")
    if state is None:
        _, state = exact_diag_ground_state(model)
    n = np.arange(len(state), dtype=float)
    exact = math.fsum(np.exp(-beta * n) * state ** 2)
    formula = math.exp(model.mu * math.expm1(-beta))
    return exact, formula
