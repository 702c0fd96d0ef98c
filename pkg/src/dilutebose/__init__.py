"""Variational second-order energy of the dilute Bose gas with soft potentials.

Builds a Bogoliubov-type pair trial state on a periodic box, evaluates its
energy as momentum sums, solves the zero-energy scattering problem and
compares the second-order coefficient with the Lee-Huang-Yang value.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NumericError, VerificationError
from .potential import PotentialSpec, evaluate_position, fourier_continuum
from .lattice import LatticeSpec, enumerate_shells, riemann_limit
from .scattering import ScatteringSolution, born_series, compute_h, solve_radial
from .variational import (
    EnergyBreakdown,
    VariationalState,
    abc_minimize,
    build_state,
    energy_full,
    energy_reduced,
    error_term_diagnostics,
    minimal_value_m,
    minimizer_e,
)
from .fock_oracle import TruncatedFockState, expect_moment, hamiltonian_expectation, run_oracle_suite
from .asymptotics import (
    PhiResult,
    integrand_F,
    lhy_prediction,
    phi,
    phi_prime0,
    q_from_integral,
    q_of_h,
    s_lambda,
)

__all__ = [
    "ConfigError", "DomainError", "NumericError", "VerificationError",
    "PotentialSpec", "evaluate_position", "fourier_continuum",
    "LatticeSpec", "enumerate_shells", "riemann_limit",
    "ScatteringSolution", "born_series", "compute_h", "solve_radial",
    "EnergyBreakdown", "VariationalState", "abc_minimize", "build_state",
    "energy_full", "energy_reduced", "error_term_diagnostics",
    "minimal_value_m", "minimizer_e",
    "PhiResult", "integrand_F", "lhy_prediction", "phi", "phi_prime0",
    "q_from_integral", "q_of_h", "s_lambda",
    "TruncatedFockState", "expect_moment", "hamiltonian_expectation", "run_oracle_suite",
]
