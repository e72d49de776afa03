"""Charge qubit decoherence in a lossy cavity, quasi-normal-mode model.

The resonant cavity mode and a discretized continuum of non-resonant modes
form two qubit-conditioned quadratic Hamiltonians.  The package evaluates
the analytic dissipation and decoherence formulas for that model and checks
them against an exact single-particle propagator and a truncated Fock-space
evolver.
"""
from .errors import *  # noqa: F401,F403
from .physparams import (
    PhysicalConfig,
    lorentzian_weight,
    phi0,
    phi_j,
    resonant_field_amplitude,
    screening_phase,
)
from .bath import BathSpec, DiscretizedBath, discretize, golden_rule_rate
from .hamiltonian import (
    BranchHamiltonian,
    Displacements,
    build_branch,
    qubit_basis_transform,
    solve_displacements,
)
from .dynamics import (
    PropagatorCoefficients,
    analytic_coefficients,
    conjugate_coefficients,
    exact_coefficients,
    lamb_shift,
)
from .observables import (
    InitialState,
    RunResult,
    decoherence_closed_form,
    decoherence_exact,
    forcing_offset,
    photon_number,
    short_time_rate,
)

__version__ = "0.1.0"
