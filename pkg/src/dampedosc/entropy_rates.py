"""Closed-form linear-entropy production rates and a finite-difference audit.

For a Gaussian state ``S_l = 1 - hbar/(2 sqrt(sigma))``, so every rate below
is ``hbar/(4 sigma^{3/2}) * d sigma/dt`` written out for one model family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_state import DEFAULT_CONSTANTS, GaussianState, PhysConstants, sigma_det
from .errors import DegenerateState, InsufficientSamples, UnknownVariant
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
    coefficient_at,
    drude_gammas,
    thermal_coth,
)


def _prefactor(state: GaussianState) -> tuple[float, float]:
    sigma = sigma_det(state)
    if not sigma > 0:
        raise DegenerateState(f"sigma = {sigma!r} must be positive")
    return sigma, 1.0 / (2.0 * sigma * math.sqrt(sigma))


def kg_entropy_rate(state: GaussianState, coeffs: KGCoefficients, t: float = 0.0,
                    c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    """``(hbar/2 sigma^{3/2}) [M^2 D_p var_qq - M D_q cov_pq - gamma_p sigma]``."""
    sigma, pre = _prefactor(state)
    k = coeffs.at(t)
    bracket = k.M**2 * k.D_p * state.var_qq - k.M * k.D_q * state.cov_pq - k.gamma_p * sigma
    return c.hbar * pre * bracket


def thermal_entropy_rate(state: GaussianState, gamma_q, gamma_p, bath: BathSpec, M: float = 1.0,
                         c: PhysConstants = DEFAULT_CONSTANTS, t: float = 0.0) -> float:
    """Rate for the thermal initial condition, in terms of ``<q^2>, <p^2>``."""
    sigma, pre = _prefactor(state)
    q2, p2 = bath.require_variances()
    gq = coefficient_at(gamma_q, t, "gamma_q")
    gp = coefficient_at(gamma_p, t, "gamma_p")
    bracket = gp * p2 * state.var_qq - (M * gq * q2 - p2 / M) * state.cov_pq - gp * sigma
    return c.hbar * pre * bracket


def ohmic_entropy_rate(state: GaussianState, gamma: float, omega0: float, bath: BathSpec,
                       M: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    sigma, pre = _prefactor(state)
    q2, p2 = bath.require_variances()
    bracket = (gamma * p2 * state.var_qq - (M * omega0**2 * q2 - p2 / M) * state.cov_pq
               - gamma * sigma)
    return c.hbar * pre * bracket


def drude_entropy_rate(state: GaussianState, alpha: float, eta_d: float, bath: BathSpec,
                       M: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    """The thermal form with ``gamma_p = 2 alpha`` and ``gamma_q = alpha^2 + eta_d^2``."""
    gamma_q, gamma_p = drude_gammas(alpha, eta_d)
    return thermal_entropy_rate(state, gamma_q, gamma_p, bath, M, c)


def weak_coupling_entropy_rate(state: GaussianState, K_c: float, K_s: float, gamma_c: float,
                               omega0: float, M: float = 1.0,
                               c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    sigma, pre = _prefactor(state)
    bracket = K_c * state.var_qq + K_s / (M * omega0) * state.cov_pq - gamma_c * sigma / c.hbar
    return c.hbar**2 * pre * bracket


def agarwal_entropy_rate(state: GaussianState, kappa: float, omega0: float, temperature: float,
                         M: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    sigma, pre = _prefactor(state)
    coth = thermal_coth(omega0, temperature, c)
    bracket = M * omega0 * coth * state.var_qq - 2.0 * sigma / c.hbar
    return c.hbar**2 * kappa * pre * bracket


def weidlich_haake_entropy_rate(state: GaussianState, gamma_c: float, omega0: float,
                                temperature: float, M: float = 1.0,
                                c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    sigma, pre = _prefactor(state)
    coth = thermal_coth(omega0, temperature, c)
    bracket = ((M * omega0 * state.var_qq + state.var_pp / (M * omega0)) * coth
               - 4.0 * sigma / c.hbar)
    return 0.25 * c.hbar**2 * gamma_c * pre * bracket


def lindblad_entropy_rate(state: GaussianState, params: LindbladParams,
                          c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    """``(hbar/2 sigma^{3/2}) [D_pp var_qq + D_qq var_pp - 2 D_pq cov_pq - 2 lambda sigma]``."""
    sigma, pre = _prefactor(state)
    bracket = (params.D_pp * state.var_qq + params.D_qq * state.var_pp
               - 2.0 * params.D_pq * state.cov_pq - 2.0 * params.lam * sigma)
    return c.hbar * pre * bracket


def model_entropy_rate(state: GaussianState, model, c: PhysConstants = DEFAULT_CONSTANTS,
                       t: float = 0.0) -> float:
    """Dispatch to the rate formula written for ``model``'s own variant."""
    if isinstance(model, LindbladParams):
        return lindblad_entropy_rate(state, model, c)
    if isinstance(model, WeidlichHaakeModel):
        return weidlich_haake_entropy_rate(state, model.gamma_c, model.omega0,
                                           model.temperature, model.M, c)
    if isinstance(model, AgarwalModel):
        return agarwal_entropy_rate(state, model.kappa, model.omega0, model.temperature,
                                    model.M, c)
    if isinstance(model, WeakCouplingModel):
        return weak_coupling_entropy_rate(state, model.K_c, model.K_s, model.gamma_c,
                                          model.omega0, model.M, c)
    if isinstance(model, DrudeModel):
        return drude_entropy_rate(state, model.alpha, model.eta_d, model.bath, model.M, c)
    if isinstance(model, OhmicModel):
        return ohmic_entropy_rate(state, model.gamma, model.omega0, model.bath, model.M, c)
    if isinstance(model, ThermalKGModel):
        return thermal_entropy_rate(state, model.gamma_q, model.gamma_p, model.bath,
                                    model.M, c, t)
    if isinstance(model, KGCoefficients):
        return kg_entropy_rate(state, model, t, c)
    raise UnknownVariant(f"no entropy-rate formula for {type(model).__name__}")


@dataclass(frozen=True)
class EntropyRateRecord:
    t: float
    rate_formula: float
    rate_fd: float
    gap: float


@dataclass(frozen=True)
class RateAudit:
    records: list[EntropyRateRecord]
    max_gap: float
    richardson_gap: float
    """Largest difference between the plain central difference and its
    Richardson-extrapolated value; an estimate of the stencil error."""


def rate_fd_audit(trajectory, model=None, c: PhysConstants | None = None,
                  rel_spacing_tol: float = 1e-9) -> RateAudit:
    """Compare closed-form rates with central differences of ``S_l``.

    Needs at least three uniformly spaced samples.  The Richardson estimate
    uses the doubled stencil ``(S[i+2] - S[i-2]) / 4h`` where available.
    """
    model = trajectory.model if model is None else model
    c = trajectory.constants if c is None else c
    times = np.asarray(trajectory.times, dtype=float)
    if len(times) < 3:
        raise InsufficientSamples(f"need at least 3 samples, got {len(times)}")
    steps = np.diff(times)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) > rel_spacing_tol * max(abs(h), 1e-300) * len(times):
        raise InsufficientSamples("samples must be uniformly spaced")
    # S_l from sigma directly keeps round-off at the pure boundary symmetric
    sigma = np.array([sigma_det(s) for s in trajectory.states])
    s_lin = 1.0 - c.hbar / (2.0 * np.sqrt(sigma))
    fd = (s_lin[2:] - s_lin[:-2]) / (2.0 * h)
    records = []
    for i, rate_fd in enumerate(fd, start=1):
        formula = model_entropy_rate(trajectory.states[i], model, c, times[i])
        records.append(EntropyRateRecord(float(times[i]), float(formula), float(rate_fd),
                                         float(abs(formula - rate_fd))))
    if len(times) >= 5:
        wide = (s_lin[4:] - s_lin[:-4]) / (4.0 * h)
        extrapolated = (4.0 * fd[1:-1] - wide) / 3.0
        richardson = float(np.max(np.abs(extrapolated - fd[1:-1])))
    else:
        richardson = float("nan")
    return RateAudit(records=records, max_gap=max(r.gap for r in records),
                     richardson_gap=richardson)
