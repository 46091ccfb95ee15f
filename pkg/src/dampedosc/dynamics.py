"""Moment equations of motion, their integration, and closed-form solutions.

Both master-equation families are linear in the five Gaussian moments
``y = (mean_q, mean_p, var_qq, var_pp, cov_pq)``, so each model reduces to an
affine system ``dy/dt = A(t) y + b(t)``.  The explicit derivative functions
(:func:`kg_moment_derivatives`, :func:`lindblad_moment_derivatives`) spell
the equations out term by term; the integrator uses the matrix form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core_state import (
    DEFAULT_CONSTANTS,
    PURITY_TOL,
    GaussianState,
    PhysConstants,
    entropy_from_nu,
    purity_nu,
    sigma_det,
)
from .errors import (
    AdmissibilityLost,
    ConstantCoefficientsRequired,
    DegenerateState,
    InvalidParameter,
    NoSteadyState,
    StepRejected,
    UncertaintyViolation,
    UndampedModel,
)
from .model_zoo import KGCoefficients, LindbladParams, resolve_dynamics

#: Below this value of ``|Omega^2| t^2`` the propagator uses a power series.
SERIES_THRESHOLD = 1e-6

#: Steps per shortest dynamical time scale for the default RK4 step.
RK4_STEPS_PER_SCALE = 200


@dataclass(frozen=True)
class MomentDerivative:
    d_mean_q: float
    d_mean_p: float
    d_var_qq: float
    d_var_pp: float
    d_cov_pq: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d_mean_q, self.d_mean_p, self.d_var_qq, self.d_var_pp, self.d_cov_pq])

    def sigma_rate(self, state: GaussianState) -> float:
        """Time derivative of ``sigma = var_qq var_pp - cov_pq^2`` implied by these rates."""
        return (
            self.d_var_qq * state.var_pp
            + state.var_qq * self.d_var_pp
            - 2.0 * state.cov_pq * self.d_cov_pq
        )


def kg_moment_derivatives(
    state: GaussianState, coeffs: KGCoefficients, t: float = 0.0
) -> MomentDerivative:
    k = coeffs.at(t)
    M = k.M
    return MomentDerivative(
        d_mean_q=state.mean_p / M,
        d_mean_p=-M * k.gamma_q * state.mean_q - k.gamma_p * state.mean_p,
        d_var_qq=2.0 * state.cov_pq / M,
        d_var_pp=-2.0 * k.gamma_p * state.var_pp - 2.0 * M * k.gamma_q * state.cov_pq
        + 2.0 * M * M * k.D_p,
        d_cov_pq=-M * k.gamma_q * state.var_qq + state.var_pp / M - k.gamma_p * state.cov_pq
        + M * k.D_q,
    )


def lindblad_moment_derivatives(state: GaussianState, params: LindbladParams) -> MomentDerivative:
    m, w2 = params.m, params.omega**2
    lam, mu = params.lam, params.mu
    return MomentDerivative(
        d_mean_q=state.mean_p / m - (lam - mu) * state.mean_q,
        d_mean_p=-m * w2 * state.mean_q - (lam + mu) * state.mean_p,
        d_var_qq=-2.0 * (lam - mu) * state.var_qq + 2.0 * state.cov_pq / m + 2.0 * params.D_qq,
        d_var_pp=-2.0 * (lam + mu) * state.var_pp - 2.0 * m * w2 * state.cov_pq
        + 2.0 * params.D_pp,
        d_cov_pq=-m * w2 * state.var_qq + state.var_pp / m - 2.0 * lam * state.cov_pq
        + 2.0 * params.D_pq,
    )


def moment_derivatives(state: GaussianState, model, t: float = 0.0,
                       c: PhysConstants = DEFAULT_CONSTANTS) -> MomentDerivative:
    dyn = resolve_dynamics(model, c)
    if isinstance(dyn, LindbladParams):
        return lindblad_moment_derivatives(state, dyn)
    return kg_moment_derivatives(state, dyn, t)


def _kg_system(k: KGCoefficients) -> tuple[np.ndarray, np.ndarray]:
    M, gq, gp = k.M, k.gamma_q, k.gamma_p
    A = np.array([
        [0.0, 1.0 / M, 0.0, 0.0, 0.0],
        [-M * gq, -gp, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 2.0 / M],
        [0.0, 0.0, 0.0, -2.0 * gp, -2.0 * M * gq],
        [0.0, 0.0, -M * gq, 1.0 / M, -gp],
    ])
    b = np.array([0.0, 0.0, 0.0, 2.0 * M * M * k.D_p, M * k.D_q])
    return A, b


def _lindblad_system(p: LindbladParams) -> tuple[np.ndarray, np.ndarray]:
    m, w2, lam, mu = p.m, p.omega**2, p.lam, p.mu
    A = np.array([
        [-(lam - mu), 1.0 / m, 0.0, 0.0, 0.0],
        [-m * w2, -(lam + mu), 0.0, 0.0, 0.0],
        [0.0, 0.0, -2.0 * (lam - mu), 0.0, 2.0 / m],
        [0.0, 0.0, 0.0, -2.0 * (lam + mu), -2.0 * m * w2],
        [0.0, 0.0, -m * w2, 1.0 / m, -2.0 * lam],
    ])
    b = np.array([0.0, 0.0, 2.0 * p.D_qq, 2.0 * p.D_pp, 2.0 * p.D_pq])
    return A, b


def linear_system(model, t: float = 0.0, c: PhysConstants = DEFAULT_CONSTANTS):
    """Matrix form ``(A, b)`` of the moment equations at time ``t``."""
    dyn = resolve_dynamics(model, c)
    if isinstance(dyn, LindbladParams):
        return _lindblad_system(dyn)
    return _kg_system(dyn.at(t))


# --------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class IntegratorOptions:
    """``method`` is ``"rk4"`` (fixed step, ``dt`` or an automatic default) or
    ``"rk45"`` (adaptive, scipy's Dormand-Prince pair)."""

    method: str = "rk4"
    dt: float | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    check_admissibility: bool = True
    admissibility_tol: float = PURITY_TOL

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise InvalidParameter(f"unknown integration method {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt!r}")


@dataclass(frozen=True)
class SampleDiagnostics:
    nu: float
    S_l: float
    S: float
    purity_residual: float
    entropy_rate: float
    E_fluct: float
    E_total: float


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[GaussianState]
    diagnostics: list[SampleDiagnostics]
    model: object = None
    constants: PhysConstants = field(default=DEFAULT_CONSTANTS)

    def __len__(self) -> int:
        return len(self.states)

    def moments(self) -> np.ndarray:
        """``(N, 5)`` array of ``(mean_q, mean_p, var_qq, var_pp, cov_pq)``."""
        return np.array([s.as_array() for s in self.states])

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return np.asarray(self.times)
        if name == "sigma_det":
            return np.array([sigma_det(s) for s in self.states])
        if name in GaussianState.__dataclass_fields__:
            return np.array([getattr(s, name) for s in self.states])
        return np.array([getattr(d, name) for d in self.diagnostics])


def default_rk4_step(model, t: float = 0.0, c: PhysConstants = DEFAULT_CONSTANTS) -> float | None:
    """``min(2 pi / fastest oscillation, 1 / fastest decay) / 200`` from the
    eigenvalues of the drift matrix; ``None`` when the drift is nilpotent."""
    A, _ = linear_system(model, t, c)
    eig = np.linalg.eigvals(A)
    scales = []
    im = np.max(np.abs(eig.imag))
    re = np.max(np.abs(eig.real))
    if im > 0:
        scales.append(2.0 * math.pi / im)
    if re > 0:
        scales.append(1.0 / re)
    if not scales:
        return None
    return min(scales) / RK4_STEPS_PER_SCALE


def _rk4_path(rhs, t_grid: np.ndarray, y0: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty((len(t_grid), len(y0)))
    out[0] = y0
    y = y0.copy()
    for i in range(1, len(t_grid)):
        t0, t1 = t_grid[i - 1], t_grid[i]
        n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
        h = (t1 - t0) / n
        t = t0
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out[i] = y
    return out


def integrate(
    model,
    initial: GaussianState,
    t_grid: Sequence[float],
    opts: IntegratorOptions | None = None,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> Trajectory:
    """Integrate the moment equations and sample them on ``t_grid``.

    ``model`` may be any variant from :mod:`dampedosc.model_zoo`; per-sample
    diagnostics use that variant's own purity condition and entropy rate.
    """
    opts = opts or IntegratorOptions()
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise InvalidParameter("t_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(t_grid) <= 0):
        raise InvalidParameter("t_grid must be strictly increasing")
    _check_admissible(initial, c, opts, t_grid[0])

    dyn = resolve_dynamics(model, c)
    constant = getattr(dyn, "is_constant", True)
    if constant:
        A, b = linear_system(dyn, t_grid[0], c)

        def rhs(t, y):
            return A @ y + b
    else:
        def rhs(t, y):
            At, bt = _kg_system(dyn.at(t))
            return At @ y + bt

    y0 = initial.as_array()
    if len(t_grid) == 1:
        path = y0[None, :]
    elif opts.method == "rk4":
        dt = opts.dt or default_rk4_step(dyn, t_grid[0], c)
        if dt is None:
            dt = (t_grid[-1] - t_grid[0]) / 1000.0
        path = _rk4_path(rhs, t_grid, y0, dt)
    else:
        sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method="RK45", t_eval=t_grid,
                        rtol=opts.rel_tol, atol=opts.abs_tol)
        if not sol.success:
            raise StepRejected(f"adaptive integration failed: {sol.message}")
        path = sol.y.T

    states = []
    for t, y in zip(t_grid, path):
        state = GaussianState.from_array(y)
        _check_admissible(state, c, opts, t)
        states.append(state)
    diagnostics = [sample_diagnostics(s, model, t, c, opts.admissibility_tol,
                                      strict=opts.check_admissibility)
                   for t, s in zip(t_grid, states)]
    return Trajectory(times=t_grid, states=states, diagnostics=diagnostics, model=model, constants=c)


def _check_admissible(state: GaussianState, c: PhysConstants, opts: IntegratorOptions, t: float):
    if not opts.check_admissibility:
        return
    sigma = sigma_det(state)
    if not (state.var_qq > 0 and state.var_pp > 0) or sigma < c.pure_area * (1.0 - opts.admissibility_tol):
        raise AdmissibilityLost(
            f"state at t={t!r} violates the uncertainty relation: sigma = {sigma!r}, "
            f"hbar^2/4 = {c.pure_area!r}"
        )


def sample_diagnostics(state: GaussianState, model, t: float = 0.0,
                       c: PhysConstants = DEFAULT_CONSTANTS,
                       tol: float = PURITY_TOL, strict: bool = True) -> SampleDiagnostics:
    """Per-sample functionals.  With ``strict=False`` an unphysical state
    gets NaN for the quantities that need ``sigma >= hbar^2/4``."""
    # local imports: both modules import this one
    from .entropy_rates import model_entropy_rate
    from .purity_audit import purity_residual

    try:
        nu = purity_nu(state, c, tol)
        s_l, s_vn = 1.0 - 1.0 / nu, entropy_from_nu(nu)
    except UncertaintyViolation:
        if strict:
            raise
        nu = s_l = s_vn = math.nan
    try:
        rate = model_entropy_rate(state, model, c, t)
    except DegenerateState:
        if strict:
            raise
        rate = math.nan
    return SampleDiagnostics(
        nu=nu,
        S_l=s_l,
        S=s_vn,
        purity_residual=purity_residual(state, model, c, t),
        entropy_rate=rate,
        E_fluct=fluctuation_energy(state, model, c, t),
        E_total=total_energy(state, model, c, t),
    )


# --------------------------------------------------------------------------
# closed-form Karrlein-Grabert solution


def _propagator_functions(omega2: float, t: float) -> tuple[float, float, float]:
    """Return ``(cos(Omega t), (1 - cos(Omega t))/Omega^2, sin(Omega t)/Omega)``.

    All three are entire in ``Omega^2``; the trigonometric, hyperbolic and
    series branches evaluate them without cancellation.
    """
    z = omega2 * t * t
    if abs(z) < SERIES_THRESHOLD:
        cos_w = 1.0 - z / 2.0 + z * z / 24.0
        one_minus_cos = t * t * (0.5 - z / 24.0 + z * z / 720.0)
        sinc = t * (1.0 - z / 6.0 + z * z / 120.0)
    elif omega2 > 0:
        w = math.sqrt(omega2)
        cos_w = math.cos(w * t)
        one_minus_cos = 2.0 * math.sin(0.5 * w * t) ** 2 / omega2
        sinc = math.sin(w * t) / w
    else:
        w = math.sqrt(-omega2)
        cos_w = math.cosh(w * t)
        one_minus_cos = 2.0 * math.sinh(0.5 * w * t) ** 2 / (w * w)
        sinc = math.sinh(w * t) / w
    return cos_w, one_minus_cos, sinc


def kg_propagator_matrix(gamma_q: float, gamma_p: float, t: float) -> np.ndarray:
    """The 3x3 matrix ``T(t)`` acting on the scaled second-moment vector.

    This is the printed ``-2 exp(-gamma_p t) b_ij / Omega^2`` with each
    ``b_ij/Omega^2`` rewritten through ``gamma_q = (Omega^2 + gamma_p^2)/4``
    so that no entry divides by ``Omega^2``.
    """
    if not gamma_q > 0:
        raise InvalidParameter(f"the propagator needs gamma_q > 0, got {gamma_q!r}")
    omega2 = 4.0 * gamma_q - gamma_p**2
    cos_w, K, F = _propagator_functions(omega2, t)
    s = math.sqrt(gamma_q)
    gp = gamma_p
    b = np.array([
        [-0.25 * gp * gp * K - 0.25 * (cos_w + 1.0) - 0.5 * gp * F, -gamma_q * K, -s * (gp * K + F)],
        [-gamma_q * K, -0.25 * gp * gp * K - 0.25 * (cos_w + 1.0) + 0.5 * gp * F, s * (F - gp * K)],
        [0.5 * s * (gp * K + F), 0.5 * s * (gp * K - F), -0.5 + 2.0 * gamma_q * K],
    ])
    return -2.0 * math.exp(-gp * t) * b


def kg_printed_b_matrix(gamma_q: float, gamma_p: float, t: float) -> np.ndarray:
    """The oscillating functions ``b_ij`` exactly as printed (oscillatory branch
    only, ``4 gamma_q > gamma_p^2``)."""
    omega2 = 4.0 * gamma_q - gamma_p**2
    if not omega2 > 0:
        raise InvalidParameter("the printed b_ij form is the oscillatory branch")
    w = math.sqrt(omega2)
    co, si = math.cos(w * t), math.sin(w * t)
    s = math.sqrt(gamma_q)
    gp, gq = gamma_p, gamma_q
    return np.array([
        [(gp**2 / 2 - gq) * co - gp * w / 2 * si - gq, gq * (co - 1), s * (gp * co - w * si - gp)],
        [gq * (co - 1), (gp**2 / 2 - gq) * co + gp * w / 2 * si - gq, s * (gp * co + w * si - gp)],
        [-s * (gp / 2 * co - w / 2 * si - gp / 2), -s * (gp / 2 * co + w / 2 * si - gp / 2),
         -2 * gq * co + gp**2 / 2],
    ])


def kg_asymptotic_variances(coeffs: KGCoefficients) -> tuple[float, float, float]:
    """Stationary ``(var_qq, var_pp, cov_pq)`` for constant coefficients:
    ``((D_p + gamma_p D_q)/(gamma_p gamma_q), M^2 D_p/gamma_p, 0)``."""
    if not coeffs.is_constant:
        raise ConstantCoefficientsRequired("asymptotic variances need constant coefficients")
    gq, gp = coeffs.gamma_q, coeffs.gamma_p
    if gp == 0:
        raise UndampedModel("gamma_p = 0: no steady state")
    if not gq > 0:
        raise InvalidParameter(f"gamma_q must be positive, got {gq!r}")
    return (coeffs.D_p + gp * coeffs.D_q) / (gp * gq), coeffs.M**2 * coeffs.D_p / gp, 0.0


@dataclass(frozen=True)
class PropagatorKG:
    """Closed-form evolution ``X(t) = T (X(0) - X(inf)) + X(inf)`` of the scaled
    vector ``X = (M sqrt(gamma_q) var_qq, var_pp / (M sqrt(gamma_q)), cov_pq)``."""

    T: np.ndarray
    X_inf: np.ndarray | None
    scaling: float
    t: float
    coeffs: KGCoefficients

    def to_x(self, var_qq: float, var_pp: float, cov_pq: float) -> np.ndarray:
        return np.array([self.scaling * var_qq, var_pp / self.scaling, cov_pq])

    def from_x(self, x: np.ndarray) -> tuple[float, float, float]:
        return float(x[0] / self.scaling), float(x[1] * self.scaling), float(x[2])

    def propagate(self, var_qq: float, var_pp: float, cov_pq: float) -> tuple[float, float, float]:
        x0 = self.to_x(var_qq, var_pp, cov_pq)
        if self.X_inf is None:
            if self.coeffs.D_p != 0 or self.coeffs.D_q != 0:
                raise UndampedModel("gamma_p = 0 with nonzero diffusion has no closed form here")
            return self.from_x(self.T @ x0)
        return self.from_x(self.T @ (x0 - self.X_inf) + self.X_inf)

    def evolve(self, state: GaussianState) -> GaussianState:
        """Second moments from the closed form; means from the exponential of the
        2x2 mean drift matrix."""
        k = self.coeffs
        drift = np.array([[0.0, 1.0 / k.M], [-k.M * k.gamma_q, -k.gamma_p]])
        mq, mp = expm(drift * self.t) @ np.array([state.mean_q, state.mean_p])
        return GaussianState(float(mq), float(mp), *self.propagate(state.var_qq, state.var_pp, state.cov_pq))


def kg_analytic_propagator(coeffs: KGCoefficients, t: float) -> PropagatorKG:
    if not coeffs.is_constant:
        raise ConstantCoefficientsRequired("the analytic propagator needs constant coefficients")
    scaling = coeffs.M * math.sqrt(coeffs.gamma_q) if coeffs.gamma_q > 0 else float("nan")
    T = kg_propagator_matrix(coeffs.gamma_q, coeffs.gamma_p, t)
    if coeffs.gamma_p > 0:
        inf = kg_asymptotic_variances(coeffs)
        X_inf = np.array([scaling * inf[0], inf[1] / scaling, inf[2]])
    else:
        X_inf = None
    return PropagatorKG(T=T, X_inf=X_inf, scaling=scaling, t=float(t), coeffs=coeffs)


# --------------------------------------------------------------------------
# Lindblad steady state


def _is_hurwitz(A: np.ndarray) -> bool:
    """Routh-Hurwitz test on the characteristic polynomial of a 2x2 or 3x3 matrix."""
    coeffs = np.poly(A)[1:]
    if len(coeffs) == 2:
        return bool(coeffs[0] > 0 and coeffs[1] > 0)
    a2, a1, a0 = coeffs
    return bool(a2 > 0 and a0 > 0 and a2 * a1 > a0)


def lindblad_steady_state(params: LindbladParams) -> GaussianState:
    """Unique stationary Gaussian state of the Lindblad moment equations."""
    A, b = _lindblad_system(params)
    if not (params.lam > 0 and _is_hurwitz(A[2:, 2:]) and _is_hurwitz(A[:2, :2])):
        raise NoSteadyState(f"drift matrix is not Hurwitz for {params}")
    var = np.linalg.solve(A[2:, 2:], -b[2:])
    return GaussianState(0.0, 0.0, *(float(v) for v in var))


# --------------------------------------------------------------------------
# energies


def _energy_form(model, c: PhysConstants, t: float):
    dyn = resolve_dynamics(model, c)
    if isinstance(dyn, LindbladParams):
        return dyn.m, dyn.omega, dyn.mu
    return dyn.M, dyn.bare_frequency(t), 0.0


def fluctuation_energy(state: GaussianState, model, c: PhysConstants = DEFAULT_CONSTANTS,
                       t: float = 0.0) -> float:
    """``var_pp/2m + m omega^2 var_qq/2 + mu cov_pq`` (``mu = 0`` for KG models)."""
    m, w, mu = _energy_form(model, c, t)
    return state.var_pp / (2.0 * m) + 0.5 * m * w * w * state.var_qq + mu * state.cov_pq


def total_energy(state: GaussianState, model, c: PhysConstants = DEFAULT_CONSTANTS,
                 t: float = 0.0) -> float:
    """Mean of the system Hamiltonian: fluctuation energy plus the same
    quadratic form evaluated on the means."""
    m, w, mu = _energy_form(model, c, t)
    coherent = (state.mean_p**2 / (2.0 * m) + 0.5 * m * w * w * state.mean_q**2
                + mu * state.mean_p * state.mean_q)
    return fluctuation_energy(state, model, c, t) + coherent
