"""Ground-state expectations of powers and Bernstein functions of the boson number operator.

Outer layer: samples of the double time integral ``W`` of the pair
interaction under a path-space Gibbs measure.  Inner layer: a rate-1 Poisson
variable evaluated at the random time ``g^2 W``.
"""
from .bernstein import (
    BernsteinSpec,
    LevyMeasure,
    check_complete_monotonicity,
    eval_bernstein,
    fractional_power_spec,
    log_gamma_spec,
)
from .combinatorics import a_coefficient, poisson_raw_moment, stirling2
from .errors import (
    BosonPowError,
    ConfigError,
    DivergentIntegralError,
    DomainError,
    QuadratureError,
    TruncationError,
)
from .expectations import (
    Estimate,
    PowerQuery,
    ground_state_expectation,
    jensen_upper_bound,
    strong_coupling_bounds,
)
from .model import CutoffFunction, DispersionSpec, ModelSpec
from .oracle import SingleModeModel, exact_diag_ground_state, mgf_crosscheck, oracle_expectation
from .pair_potential import KernelTable, infrared_diagnostic, kernel, w_infinity
from .path_gibbs import MCMCConfig, PathEnsemble, ReferenceProcess, rho_beta, run_chains, run_gibbs_chain
from .poisson_functionals import PoissonQuery, expect_functional, poisson_mgf

__version__ = "0.1.0"
