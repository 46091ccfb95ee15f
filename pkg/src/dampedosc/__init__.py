"""Moment-space simulation and purity audits for the damped quantum harmonic oscillator."""

from .core_state import (
    DEFAULT_CONSTANTS,
    GaussianState,
    PhysConstants,
    UncertaintyClass,
    ccs_state,
    correlation_coefficient,
    density_matrix_eval,
    linear_entropy,
    purity_nu,
    sigma_det,
    uncertainty_class,
    von_neumann_entropy,
    wigner_eval,
)
from .dynamics import (
    IntegratorOptions,
    Trajectory,
    fluctuation_energy,
    integrate,
    kg_analytic_propagator,
    kg_asymptotic_variances,
    lindblad_steady_state,
    total_energy,
)
from .entropy_rates import (
    kg_entropy_rate,
    lindblad_entropy_rate,
    model_entropy_rate,
    rate_fd_audit,
)
from .model_zoo import (
    AgarwalModel,
    BathSpec,
    DrudeModel,
    KGCoefficients,
    LindbladParams,
    OhmicModel,
    ThermalKGModel,
    WeakCouplingModel,
    WeidlichHaakeModel,
    lindblad_constraint_check,
    purity_preserving_diffusion,
    purity_preserving_params,
)
from .purity_audit import (
    Verdict,
    audit_purity,
    hamiltonian_expectation_check,
    purity_preserving_initial_state,
    purity_residual,
)

__all__ = [name for name in dir() if not name.startswith("_")]
