"""Purity-of-state conditions, purity-preserving states, and the
``<H> = <H'>`` check for the non-Hermitian effective Hamiltonians.

Every ``*_purity_residual`` returns the left-hand side of a condition whose
vanishing means ``d Tr(rho^2)/dt = 0`` at that instant for a pure state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core_state import (
    DEFAULT_CONSTANTS,
    PURITY_TOL,
    GaussianState,
    PhysConstants,
    purity_nu,
    sigma_det,
)
from .dynamics import kg_asymptotic_variances, lindblad_moment_derivatives
from .errors import ConstantCoefficientsRequired, NotPure, UnknownVariant
from .model_zoo import (
    AgarwalModel,
    BathSpec,
    DrudeModel,
    KGCoefficients,
    LindbladParams,
    ModelKind,
    OhmicModel,
    ThermalKGModel,
    WeakCouplingModel,
    WeidlichHaakeModel,
    coefficient_at,
    resolve_dynamics,
    thermal_coth,
)

#: Relative tolerance for the "preserves purity" verdict.
RESIDUAL_TOL = 1e-8


def kg_purity_residual(
    state: GaussianState, coeffs: KGCoefficients, t: float = 0.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    """``M^2 D_p var_qq - M D_q cov_pq - (hbar^2/4) gamma_p``."""
    k = coeffs.at(t)
    return (k.M**2 * k.D_p * state.var_qq - k.M * k.D_q * state.cov_pq
            - 0.25 * c.hbar**2 * k.gamma_p)


def thermal_purity_residual(
    state: GaussianState, gamma_q, gamma_p, bath: BathSpec, M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS, t: float = 0.0,
) -> float:
    """Thermal-initial-condition form, written directly in ``<q^2>, <p^2>``."""
    q2, p2 = bath.require_variances()
    gq = coefficient_at(gamma_q, t, "gamma_q")
    gp = coefficient_at(gamma_p, t, "gamma_p")
    return gp * p2 * state.var_qq - (M * gq * q2 - p2 / M) * state.cov_pq - 0.25 * c.hbar**2 * gp


def ohmic_purity_residual(
    state: GaussianState, gamma: float, omega0: float, bath: BathSpec, M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    q2, p2 = bath.require_variances()
    return (gamma * p2 * state.var_qq - (M * omega0**2 * q2 - p2 / M) * state.cov_pq
            - 0.25 * c.hbar**2 * gamma)


def drude_purity_residual(
    state: GaussianState, alpha: float, eta_d: float, bath: BathSpec, M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    q2, p2 = bath.require_variances()
    return (2.0 * alpha * p2 * state.var_qq
            - (M * (alpha**2 + eta_d**2) * q2 - p2 / M) * state.cov_pq
            - 0.5 * c.hbar**2 * alpha)


def weak_coupling_purity_residual(
    state: GaussianState, K_c: float, K_s: float, gamma_c: float, omega0: float,
    M: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    return K_c * state.var_qq + K_s / (M * omega0) * state.cov_pq - 0.25 * c.hbar * gamma_c


def agarwal_purity_residual(
    state: GaussianState, omega0: float, temperature: float, M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    """``M omega0 coth(hbar omega0/2 kB T) var_qq - hbar/2``."""
    coth = thermal_coth(omega0, temperature, c)
    return M * omega0 * coth * state.var_qq - 0.5 * c.hbar


def weidlich_haake_purity_residual(
    state: GaussianState, omega0: float, temperature: float, M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    """``(M omega0 var_qq + var_pp/(M omega0)) coth(hbar omega0/2 kB T) - hbar``."""
    coth = thermal_coth(omega0, temperature, c)
    return (M * omega0 * state.var_qq + state.var_pp / (M * omega0)) * coth - c.hbar


def lindblad_purity_residual(
    state: GaussianState, params: LindbladParams, c: PhysConstants = DEFAULT_CONSTANTS,
) -> float:
    """``D_pp var_qq + D_qq var_pp - 2 D_pq cov_pq - hbar^2 lambda / 2``."""
    return (params.D_pp * state.var_qq + params.D_qq * state.var_pp
            - 2.0 * params.D_pq * state.cov_pq - 0.5 * c.hbar**2 * params.lam)


def purity_residual(state: GaussianState, model, c: PhysConstants = DEFAULT_CONSTANTS,
                    t: float = 0.0) -> float:
    """Dispatch to the purity condition written for ``model``'s own variant."""
    if isinstance(model, LindbladParams):
        return lindblad_purity_residual(state, model, c)
    if isinstance(model, WeidlichHaakeModel):
        return weidlich_haake_purity_residual(state, model.omega0, model.temperature, model.M, c)
    if isinstance(model, AgarwalModel):
        return agarwal_purity_residual(state, model.omega0, model.temperature, model.M, c)
    if isinstance(model, WeakCouplingModel):
        return weak_coupling_purity_residual(state, model.K_c, model.K_s, model.gamma_c,
                                             model.omega0, model.M, c)
    if isinstance(model, DrudeModel):
        return drude_purity_residual(state, model.alpha, model.eta_d, model.bath, model.M, c)
    if isinstance(model, OhmicModel):
        return ohmic_purity_residual(state, model.gamma, model.omega0, model.bath, model.M, c)
    if isinstance(model, ThermalKGModel):
        return thermal_purity_residual(state, model.gamma_q, model.gamma_p, model.bath,
                                       model.M, c, t)
    if isinstance(model, KGCoefficients):
        return kg_purity_residual(state, model, t, c)
    raise UnknownVariant(f"no purity condition for {type(model).__name__}")


def residual_scale(model, c: PhysConstants = DEFAULT_CONSTANTS, t: float = 0.0) -> float:
    """Natural magnitude of ``model``'s purity residual, used to judge "zero".

    Residuals in action^2 * frequency get ``(hbar^2/4) * rate``; the Agarwal
    and Weidlich-Haake forms are in units of action and get ``hbar/2`` and
    ``hbar``; the weak-coupling form gets ``(hbar/4) gamma_c``.
    """
    area = c.pure_area
    if isinstance(model, LindbladParams):
        rate = model.lam
    elif isinstance(model, WeidlichHaakeModel):
        return c.hbar
    elif isinstance(model, AgarwalModel):
        return 0.5 * c.hbar
    elif isinstance(model, WeakCouplingModel):
        return 0.25 * c.hbar * model.gamma_c if model.gamma_c > 0 else 0.25 * c.hbar
    else:
        k = resolve_dynamics(model, c).at(t)
        rate = k.gamma_p
    return area * rate if rate > 0 else area


class Verdict(enum.Enum):
    PRESERVES_PURITY = "PreservesPurity"
    LOSES_PURITY = "LosesPurity"


@dataclass(frozen=True)
class PurityCondition:
    kind: ModelKind
    model: object


def purity_condition(model) -> PurityCondition:
    kind = getattr(model, "kind", None)
    if not isinstance(kind, ModelKind):
        raise UnknownVariant(f"no purity condition for {type(model).__name__}")
    return PurityCondition(kind=kind, model=model)


@dataclass(frozen=True)
class PurityReport:
    condition: PurityCondition
    times: np.ndarray
    residuals: np.ndarray
    verdict: Verdict
    max_abs_residual: float
    tolerance: float


def audit_purity(trajectory, model=None, c: PhysConstants | None = None,
                 tol: float = RESIDUAL_TOL) -> PurityReport:
    """Evaluate the model's purity condition along a trajectory.

    The verdict is ``PRESERVES_PURITY`` when the initial state is pure and
    ``max |residual| <= tol * residual_scale`` over every sample.
    """
    model = trajectory.model if model is None else model
    c = trajectory.constants if c is None else c
    times = np.asarray(trajectory.times, dtype=float)
    residuals = np.array([purity_residual(s, model, c, t)
                          for t, s in zip(times, trajectory.states)])
    scale = max(residual_scale(model, c, t) for t in times)
    threshold = tol * scale
    max_abs = float(np.max(np.abs(residuals)))
    initially_pure = purity_nu(trajectory.states[0], c) <= 1.0 + PURITY_TOL
    preserves = initially_pure and max_abs <= threshold
    return PurityReport(
        condition=purity_condition(model),
        times=times,
        residuals=residuals,
        verdict=Verdict.PRESERVES_PURITY if preserves else Verdict.LOSES_PURITY,
        max_abs_residual=max_abs,
        tolerance=threshold,
    )


# --------------------------------------------------------------------------
# purity-preserving states


def purity_preserving_variances(mu: float, omega: float, m: float = 1.0,
                                c: PhysConstants = DEFAULT_CONSTANTS) -> GaussianState:
    """Centred correlated coherent state with constant variances::

        var_qq = hbar/(2 m Omega), var_pp = hbar m omega^2/(2 Omega),
        cov_pq = -hbar mu/(2 Omega),   Omega = sqrt(omega^2 - mu^2)
    """
    from .model_zoo import purity_preserving_diffusion

    purity_preserving_diffusion(1.0, mu, omega, m, c)  # validates omega > |mu|
    big_omega = math.sqrt(omega * omega - mu * mu)
    h = c.hbar / (2.0 * big_omega)
    return GaussianState(0.0, 0.0, h / m, h * m * omega * omega, -h * mu)


def lindblad_pure_stationary_state(params: LindbladParams, c: PhysConstants = DEFAULT_CONSTANTS,
                                   tol: float = PURITY_TOL) -> GaussianState | None:
    """Solve the pure-state conditions for a Lindblad model.

    Eliminating ``var_pp`` between the pure-state condition and
    ``sigma = hbar^2/4`` leaves a sum of squares that vanishes only if
    ``D_pp D_qq - D_pq^2 = hbar^2 lambda^2/4`` (the diffusion bound is
    saturated) together with two linear relations fixing ``cov_pq`` and
    ``var_qq``.  The resulting state is returned only if it is also a fixed
    point of the moment equations; otherwise no state stays pure.
    """
    lam = params.lam
    if not lam > 0:
        return None
    det = params.D_pp * params.D_qq - params.D_pq**2
    bound = 0.25 * (c.hbar * lam) ** 2
    if abs(det - bound) > tol * bound:
        return None
    cov_pq = bound * params.D_pq / (lam * det)
    var_qq = (params.D_pq * cov_pq + 0.25 * c.hbar**2 * lam) / params.D_pp
    var_pp = (c.pure_area + cov_pq**2) / var_qq
    state = GaussianState(0.0, 0.0, var_qq, var_pp, cov_pq)
    rates = lindblad_moment_derivatives(state, params).as_array()[2:]
    size = lam * max(var_qq, var_pp, abs(cov_pq))
    if np.max(np.abs(rates)) > 1e3 * tol * size:
        return None
    return state


def purity_preserving_initial_state(model, c: PhysConstants = DEFAULT_CONSTANTS,
                                    tol: float = PURITY_TOL) -> GaussianState | None:
    """The Gaussian state that stays pure for all times under ``model``, or ``None``.

    Karrlein-Grabert variants (including Agarwal): the stationary variances,
    provided they form a minimum-uncertainty state.  Lindblad variants
    (including Weidlich-Haake): see :func:`lindblad_pure_stationary_state`.
    """
    dyn = resolve_dynamics(model, c)
    if isinstance(dyn, LindbladParams):
        return lindblad_pure_stationary_state(dyn, c, tol)
    if not dyn.is_constant:
        raise ConstantCoefficientsRequired("purity classification needs constant coefficients")
    if not (dyn.gamma_p > 0 and dyn.gamma_q > 0):
        return None
    var_qq, var_pp, cov_pq = kg_asymptotic_variances(dyn)
    if not (var_qq > 0 and var_pp > 0):
        return None
    if abs(var_qq * var_pp - c.pure_area) > tol * c.pure_area:
        return None
    return GaussianState(0.0, 0.0, var_qq, var_pp, cov_pq)


# --------------------------------------------------------------------------
# non-Hermitian effective Hamiltonians


def kg_effective_hamiltonian_expectation(
    state: GaussianState, coeffs: KGCoefficients, t: float = 0.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> complex:
    """``<H'>`` of the Karrlein-Grabert non-linear Schroedinger Hamiltonian.

    Covers the weak-coupling and Agarwal forms through their KG coefficients.
    Operator products use ``<q p> = cov_pq + <q><p> + i hbar/2``; the
    imaginary part equals ``-kg_purity_residual / hbar``.
    """
    k = coeffs.at(t)
    M, hbar = k.M, c.hbar
    q2 = state.var_qq + state.mean_q**2
    p2 = state.var_pp + state.mean_p**2
    qp = state.cov_pq + state.mean_q * state.mean_p + 0.5j * hbar
    centred_pq = state.cov_pq - 0.5j * hbar
    return (
        p2 / (2.0 * M)
        + 0.5 * M * k.gamma_q * q2
        + 0.5 * k.gamma_p * (qp + state.mean_p * state.mean_q - state.mean_q * state.mean_p)
        + 1j * M / hbar * k.D_q * centred_pq
        - 1j * M**2 / hbar * k.D_p * state.var_qq
    )


def _ham2_expectations(state: GaussianState, params: LindbladParams,
                       c: PhysConstants) -> tuple[float, complex]:
    from .dynamics import total_energy

    h = total_energy(state, params, c)
    shift = params.lam * (state.mean_p * state.mean_q - state.mean_q * state.mean_p)
    anti = (params.D_pp * state.var_qq + params.D_qq * state.var_pp
            - params.D_pq * 2.0 * state.cov_pq - 0.5 * params.lam * c.hbar**2)
    return h, h + shift - 1j / c.hbar * anti


def _ham6_expectations(state: GaussianState, model: WeidlichHaakeModel,
                       c: PhysConstants) -> tuple[float, complex]:
    hbar, M, w0 = c.hbar, model.M, model.omega0
    scale = math.sqrt(2.0 * hbar * M * w0)
    alpha = complex(M * w0 * state.mean_q, state.mean_p) / scale
    q2 = state.var_qq + state.mean_q**2
    p2 = state.var_pp + state.mean_p**2
    number = (M * w0 * q2 + p2 / (M * w0)) / (2.0 * hbar) - 0.5
    centred_number = number - abs(alpha) ** 2
    h = hbar * (w0 + 0.5 * model.gamma_s) * number
    coth = thermal_coth(w0, model.temperature, c)
    cross = alpha.conjugate() * alpha - alpha * alpha.conjugate()
    h_prime = (h + 1j * hbar * 0.5 * model.gamma_c * (cross + 0.5)
               - 1j * hbar * 0.5 * model.gamma_c * coth * (centred_number + 0.5))
    return h, h_prime


def hamiltonian_expectation_check(state: GaussianState, model,
                                  c: PhysConstants = DEFAULT_CONSTANTS,
                                  tol: float = 1e-6) -> tuple[float, complex]:
    """Return ``(<H>, <H'>)`` for a pure state.

    Supported: Lindblad models (``H = H0 + mu (qp+pq)/2``) and the
    Weidlich-Haake model (``H = hbar (omega0 + gamma_s/2) a^dagger a``).  The
    two agree whenever the model's purity residual vanishes; otherwise
    ``<H'>`` picks up an imaginary part proportional to that residual.
    """
    nu = purity_nu(state, c)
    if nu > 1.0 + tol:
        raise NotPure(f"state has nu = {nu!r}; the effective Hamiltonian needs a pure state")
    if isinstance(model, WeidlichHaakeModel):
        return _ham6_expectations(state, model, c)
    if isinstance(model, LindbladParams):
        return _ham2_expectations(state, model, c)
    raise UnknownVariant(f"no effective-Hamiltonian identity for {type(model).__name__}")


# --------------------------------------------------------------------------
# long-time state of the purity-preserving Lindblad model


def asymptotic_density_matrix(params: LindbladParams, x, y, c: PhysConstants = DEFAULT_CONSTANTS):
    """``<x|rho(inf)|y>`` for the purity-preserving Lindblad model."""
    big_omega = math.sqrt(params.omega**2 - params.mu**2)
    m, hbar = params.m, c.hbar
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = math.sqrt(m * big_omega / (math.pi * hbar)) * np.exp(
        -m / (2.0 * hbar) * (big_omega * (x**2 + y**2) + 1j * params.mu * (x**2 - y**2))
    )
    return complex(out) if np.ndim(out) == 0 else out


def asymptotic_wigner(params: LindbladParams, p, q, c: PhysConstants = DEFAULT_CONSTANTS):
    big_omega = math.sqrt(params.omega**2 - params.mu**2)
    m = params.m
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    energy = p**2 / (2.0 * m) + 0.5 * m * params.omega**2 * q**2 + params.mu * p * q
    out = np.exp(-2.0 * energy / (c.hbar * big_omega)) / (math.pi * c.hbar)
    return float(out) if np.ndim(out) == 0 else out


def is_pure(state: GaussianState, c: PhysConstants = DEFAULT_CONSTANTS,
            tol: float = PURITY_TOL) -> bool:
    return abs(sigma_det(state) - c.pure_area) <= tol * c.pure_area
