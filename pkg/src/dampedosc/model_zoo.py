"""Parameter containers and coefficient constructors for every model variant.

Two dynamical families exist:

* :class:`KGCoefficients` -- the Karrlein-Grabert master equation with
  coefficients ``gamma_q, gamma_p, D_q, D_p`` (constant or time dependent);
* :class:`LindbladParams` -- the Lindblad equation with ``lambda, mu`` and the
  diffusion matrix ``D_pp, D_qq, D_pq``.

The named variants (thermal, Ohmic, Drude, weak coupling, Agarwal,
Weidlich-Haake) are thin dataclasses that know which family they reduce to
(:func:`resolve_dynamics`) and keep their own parameters around so that the
variant-specific purity conditions and entropy rates can be evaluated verbatim.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Union

from .core_state import DEFAULT_CONSTANTS, PhysConstants
from .errors import (
    CoefficientUndefined,
    InvalidParameter,
    MissingBathData,
    OverdampedRegime,
    UnknownVariant,
)

Coefficient = Union[float, Callable[[float], float]]

#: Relative tolerance for the Lindblad diffusion constraint.
CONSTRAINT_TOL = 1e-9


def is_constant(value: Coefficient) -> bool:
    return not callable(value)


def coefficient_at(value: Coefficient, t: float, name: str = "coefficient") -> float:
    """Evaluate a constant or time-dependent coefficient at time ``t``."""
    if not callable(value):
        return float(value)
    try:
        out = float(value(t))
    except Exception as exc:  # user callbacks may fail in arbitrary ways
        raise CoefficientUndefined(f"{name} could not be evaluated at t={t!r}: {exc}") from exc
    if not math.isfinite(out):
        raise CoefficientUndefined(f"{name}({t!r}) = {out!r} is not finite")
    return out


def thermal_coth(omega0: float, temperature: float, c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    """``coth(hbar omega0 / 2 kB T)``, equal to 1 at ``T = 0``."""
    if temperature < 0:
        raise InvalidParameter(f"temperature must be >= 0, got {temperature!r}")
    if temperature == 0:
        return 1.0
    x = c.hbar * omega0 / (2.0 * c.kB * temperature)
    return 1.0 / math.tanh(x)


class ModelKind(enum.Enum):
    KG_GENERAL = "KGGeneral"
    KG_THERMAL = "KGThermal"
    OHMIC = "Ohmic"
    DRUDE = "Drude"
    WEAK_COUPLING = "WeakCoupling"
    AGARWAL = "Agarwal"
    WEIDLICH_HAAKE = "WeidlichHaake"
    LINDBLAD = "Lindblad"


# --------------------------------------------------------------------------
# dynamical families


@dataclass(frozen=True)
class KGCoefficients:
    """Coefficients of the Karrlein-Grabert master equation.

    Each of ``gamma_q, gamma_p, D_q, D_p`` is either a number or a callable
    ``t -> value``. ``omega0`` is only used for energies; when omitted it
    defaults to ``sqrt(gamma_q)`` for constant ``gamma_q``.
    """

    gamma_q: Coefficient
    gamma_p: Coefficient
    D_q: Coefficient
    D_p: Coefficient
    M: float = 1.0
    omega0: float | None = None

    kind = ModelKind.KG_GENERAL

    def __post_init__(self):
        if not self.M > 0:
            raise InvalidParameter(f"mass M must be positive, got {self.M!r}")
        if self.is_constant and self.gamma_p < 0:
            raise InvalidParameter(f"gamma_p must be >= 0, got {self.gamma_p!r}")

    @property
    def is_bound(self) -> bool:
        """True for constant coefficients with ``gamma_q > 0`` (a confining potential)."""
        return self.is_constant and self.gamma_q > 0

    @property
    def is_constant(self) -> bool:
        return all(is_constant(v) for v in (self.gamma_q, self.gamma_p, self.D_q, self.D_p))

    def at(self, t: float) -> "KGCoefficients":
        """Constant snapshot of the coefficients at time ``t``."""
        if self.is_constant:
            return self
        return KGCoefficients(
            gamma_q=coefficient_at(self.gamma_q, t, "gamma_q"),
            gamma_p=coefficient_at(self.gamma_p, t, "gamma_p"),
            D_q=coefficient_at(self.D_q, t, "D_q"),
            D_p=coefficient_at(self.D_p, t, "D_p"),
            M=self.M,
            omega0=self.bare_frequency(t),
        )

    def bare_frequency(self, t: float = 0.0) -> float:
        if self.omega0 is not None:
            return float(self.omega0)
        return math.sqrt(coefficient_at(self.gamma_q, t, "gamma_q"))

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> "KGCoefficients":
        return self


@dataclass(frozen=True)
class LindbladParams:
    m: float
    omega: float
    lam: float
    mu: float
    D_pp: float
    D_qq: float
    D_pq: float

    kind = ModelKind.LINDBLAD

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidParameter(f"mass m must be positive, got {self.m!r}")
        if not self.omega > 0:
            raise InvalidParameter(f"omega must be positive, got {self.omega!r}")
        if self.lam < 0:
            raise InvalidParameter(f"lambda must be >= 0, got {self.lam!r}")

    is_constant = True

    def lindblad_params(self, c: PhysConstants = DEFAULT_CONSTANTS) -> "LindbladParams":
        return self


@dataclass(frozen=True)
class BathSpec:
    temperature: float = 0.0
    q2_eq: float | None = None
    p2_eq: float | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise InvalidParameter(f"temperature must be >= 0, got {self.temperature!r}")
        for name in ("q2_eq", "p2_eq"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidParameter(f"{name} must be positive, got {v!r}")

    def require_variances(self) -> tuple[float, float]:
        if self.q2_eq is None or self.p2_eq is None:
            raise MissingBathData("equilibrium variances <q^2> and <p^2> are required")
        return self.q2_eq, self.p2_eq


# --------------------------------------------------------------------------
# coefficient constructors


def kg_thermal_coefficients(
    gamma_q: Coefficient, gamma_p: Coefficient, bath: BathSpec, M: float = 1.0
) -> tuple[Coefficient, Coefficient]:
    """Diffusion coefficients ``(D_q, D_p)`` for the thermal initial condition.

    ``D_q = gamma_q <q^2> - <p^2>/M^2`` and ``D_p = gamma_p <p^2>/M^2``. When a
    damping coefficient is a callable, the matching diffusion coefficient is
    returned as a callable too.
    """
    q2, p2 = bath.require_variances()
    if callable(gamma_q):
        def D_q(t, _g=gamma_q):
            return _g(t) * q2 - p2 / M**2
    else:
        D_q = gamma_q * q2 - p2 / M**2
    if callable(gamma_p):
        def D_p(t, _g=gamma_p):
            return _g(t) * p2 / M**2
    else:
        D_p = gamma_p * p2 / M**2
    return D_q, D_p


def drude_gammas(alpha: float, eta_d: float) -> tuple[float, float]:
    """``(gamma_q, gamma_p) = (alpha^2 + eta^2, 2 alpha)`` for Drude damping."""
    return alpha * alpha + eta_d * eta_d, 2.0 * alpha


def agarwal_coefficients(
    kappa: float,
    omega0: float,
    temperature: float,
    c: PhysConstants = DEFAULT_CONSTANTS,
    M: float = 1.0,
) -> KGCoefficients:
    """Agarwal equation rewritten with Karrlein-Grabert coefficients.

    The friction term of the Agarwal equation is ``-(i kappa/hbar)[q,{p,rho}]``,
    which matches ``-(i gamma_p/2 hbar)[q,{p,rho}]`` for ``gamma_p = 2 kappa``.
    """
    if kappa < 0:
        raise InvalidParameter(f"kappa must be >= 0, got {kappa!r}")
    if not omega0 > 0:
        raise InvalidParameter(f"omega0 must be positive, got {omega0!r}")
    coth = thermal_coth(omega0, temperature, c)
    return KGCoefficients(
        gamma_q=omega0**2,
        gamma_p=2.0 * kappa,
        D_q=0.0,
        D_p=c.hbar * omega0 * kappa * coth / M,
        M=M,
        omega0=omega0,
    )


def weak_coupling_coefficients(
    gamma_s: float,
    gamma_c: float,
    K_s: float,
    K_c: float,
    omega0: float,
    c: PhysConstants = DEFAULT_CONSTANTS,
    M: float = 1.0,
) -> KGCoefficients:
    """Weak-damping master equation mapped onto Karrlein-Grabert coefficients.

    Term-by-term: ``gamma_q = omega0^2 + omega0 gamma_s``, ``gamma_p = gamma_c``,
    ``D_q = -hbar K_s / (M^2 omega0)``, ``D_p = hbar K_c / M^2``.
    """
    if not omega0 > 0:
        raise InvalidParameter(f"omega0 must be positive, got {omega0!r}")
    return KGCoefficients(
        gamma_q=omega0**2 + omega0 * gamma_s,
        gamma_p=gamma_c,
        D_q=-c.hbar * K_s / (M**2 * omega0),
        D_p=c.hbar * K_c / M**2,
        M=M,
        omega0=omega0,
    )


def weidlich_haake_rates(
    gamma_c: float, omega0: float, temperature: float, c: PhysConstants = DEFAULT_CONSTANTS
) -> tuple[float, float]:
    """Down/up transition rates ``(gamma_c/4)[coth(hbar omega0/2 kB T) +- 1]``."""
    if gamma_c < 0:
        raise InvalidParameter(f"gamma_c must be >= 0, got {gamma_c!r}")
    if not omega0 > 0:
        raise InvalidParameter(f"omega0 must be positive, got {omega0!r}")
    coth = thermal_coth(omega0, temperature, c)
    return 0.25 * gamma_c * (coth + 1.0), 0.25 * gamma_c * (coth - 1.0)


def weidlich_haake_to_lindblad(
    gamma_down: float,
    gamma_up: float,
    omega0: float,
    M: float = 1.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> LindbladParams:
    if not gamma_down >= gamma_up >= 0:
        raise InvalidParameter(
            f"need gamma_down >= gamma_up >= 0, got {gamma_down!r}, {gamma_up!r}"
        )
    total = gamma_down + gamma_up
    return LindbladParams(
        m=M,
        omega=omega0,
        lam=gamma_down - gamma_up,
        mu=0.0,
        D_pp=0.5 * c.hbar * M * omega0 * total,
        D_qq=0.5 * c.hbar * total / (M * omega0),
        D_pq=0.0,
    )


@dataclass(frozen=True)
class ConstraintCheck:
    residual: float
    passed: bool
    failures: tuple[str, ...] = ()


def lindblad_constraint_check(
    params: LindbladParams, c: PhysConstants = DEFAULT_CONSTANTS, tol: float = CONSTRAINT_TOL
) -> ConstraintCheck:
    """Check ``D_pp > 0, D_qq > 0`` and ``D_pp D_qq - D_pq^2 >= hbar^2 lambda^2/4``.

    The returned residual is ``D_pp D_qq - D_pq^2 - hbar^2 lambda^2 / 4``.
    """
    bound = 0.25 * (c.hbar * params.lam) ** 2
    det = params.D_pp * params.D_qq - params.D_pq**2
    residual = det - bound
    failures = []
    if not params.D_pp > 0:
        failures.append("D_pp > 0")
    if not params.D_qq > 0:
        failures.append("D_qq > 0")
    scale = max(bound, abs(params.D_pp * params.D_qq), abs(params.D_pq) ** 2)
    if residual < -tol * scale:
        failures.append("D_pp*D_qq - D_pq^2 >= hbar^2*lambda^2/4")
    return ConstraintCheck(residual=residual, passed=not failures, failures=tuple(failures))


def purity_preserving_diffusion(
    lam: float, mu: float, omega: float, m: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS
) -> tuple[float, float, float]:
    """Diffusion coefficients ``(D_pp, D_qq, D_pq)`` that keep a correlated
    coherent state pure.

    With ``Omega = sqrt(omega^2 - mu^2)``::

        D_qq = hbar lam / (2 m Omega)
        D_pp = hbar lam m omega^2 / (2 Omega)
        D_pq = -hbar lam mu / (2 Omega)

    Raises :class:`OverdampedRegime` when ``omega <= |mu|``.
    """
    if not omega > abs(mu):
        raise OverdampedRegime(
            f"omega = {omega!r} must exceed |mu| = {abs(mu)!r}; no pure state survives otherwise"
        )
    if lam < 0:
        raise InvalidParameter(f"lambda must be >= 0, got {lam!r}")
    big_omega = math.sqrt(omega * omega - mu * mu)
    k = c.hbar * lam / (2.0 * big_omega)
    return k * m * omega * omega, k / m, -k * mu


def purity_preserving_params(
    lam: float, mu: float, omega: float, m: float = 1.0, c: PhysConstants = DEFAULT_CONSTANTS
) -> LindbladParams:
    D_pp, D_qq, D_pq = purity_preserving_diffusion(lam, mu, omega, m, c)
    return LindbladParams(m=m, omega=omega, lam=lam, mu=mu, D_pp=D_pp, D_qq=D_qq, D_pq=D_pq)


def lindblad_single_operator(
    params: LindbladParams, c: PhysConstants = DEFAULT_CONSTANTS
) -> tuple[complex, complex]:
    """Coefficients ``(c_q, c_p)`` of the single environment operator
    ``V = c_q q + c_p p`` that generates the purity-preserving dynamics."""
    if not params.D_qq > 0:
        raise InvalidParameter(f"D_qq must be positive, got {params.D_qq!r}")
    k = math.sqrt(2.0 / (c.hbar * params.D_qq))
    c_q = k * complex(0.5 * params.lam * c.hbar, -params.D_pq)
    c_p = k * complex(0.0, params.D_qq)
    return c_q, c_p


def operator_commutator(c_q: complex, c_p: complex, c: PhysConstants = DEFAULT_CONSTANTS) -> float:
    """``[V, V^dagger]`` (a c-number) for ``V = c_q q + c_p p``."""
    return 2.0 * c.hbar * (c_q.conjugate() * c_p).imag


def single_operator_diffusion(
    c_q: complex, c_p: complex, c: PhysConstants = DEFAULT_CONSTANTS
) -> tuple[float, float, float, float]:
    """Recover ``(D_pp, D_qq, D_pq, lambda)`` generated by one operator
    ``V = c_q q + c_p p``."""
    cross = c_p.conjugate() * c_q
    D_qq = 0.5 * c.hbar * abs(c_p) ** 2
    D_pp = 0.5 * c.hbar * abs(c_q) ** 2
    D_pq = -0.5 * c.hbar * cross.real
    lam = -cross.imag
    return D_pp, D_qq, D_pq, lam


# --------------------------------------------------------------------------
# named variants


@dataclass(frozen=True)
class ThermalKGModel:
    """Thermal initial condition: ``D_q, D_p`` follow from the bath variances."""

    gamma_q: Coefficient
    gamma_p: Coefficient
    bath: BathSpec
    M: float = 1.0
    omega0: float | None = None

    kind = ModelKind.KG_THERMAL

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> KGCoefficients:
        D_q, D_p = kg_thermal_coefficients(self.gamma_q, self.gamma_p, self.bath, self.M)
        return KGCoefficients(self.gamma_q, self.gamma_p, D_q, D_p, M=self.M, omega0=self.omega0)


@dataclass(frozen=True)
class OhmicModel:
    """Strictly Ohmic damping.

    ``<p^2>`` diverges logarithmically for a strictly Ohmic bath, so
    ``bath.p2_eq`` must be an explicit, user-regularized value.
    """

    gamma: float
    omega0: float
    bath: BathSpec
    M: float = 1.0

    kind = ModelKind.OHMIC
    warnings = ("<p^2> is logarithmically divergent for strictly Ohmic damping; "
                "the supplied value is a user regularization",)

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> KGCoefficients:
        D_q, D_p = kg_thermal_coefficients(self.omega0**2, self.gamma, self.bath, self.M)
        return KGCoefficients(self.omega0**2, self.gamma, D_q, D_p, M=self.M, omega0=self.omega0)


@dataclass(frozen=True)
class DrudeModel:
    alpha: float
    eta_d: float
    bath: BathSpec
    M: float = 1.0
    omega0: float | None = None

    kind = ModelKind.DRUDE

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> KGCoefficients:
        gamma_q, gamma_p = drude_gammas(self.alpha, self.eta_d)
        D_q, D_p = kg_thermal_coefficients(gamma_q, gamma_p, self.bath, self.M)
        return KGCoefficients(gamma_q, gamma_p, D_q, D_p, M=self.M, omega0=self.omega0)


@dataclass(frozen=True)
class WeakCouplingModel:
    gamma_s: float
    gamma_c: float
    K_s: float
    K_c: float
    omega0: float
    M: float = 1.0

    kind = ModelKind.WEAK_COUPLING

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> KGCoefficients:
        return weak_coupling_coefficients(
            self.gamma_s, self.gamma_c, self.K_s, self.K_c, self.omega0, c, self.M
        )


@dataclass(frozen=True)
class AgarwalModel:
    kappa: float
    omega0: float
    temperature: float = 0.0
    M: float = 1.0

    kind = ModelKind.AGARWAL

    def kg_coefficients(self, c: PhysConstants = DEFAULT_CONSTANTS) -> KGCoefficients:
        return agarwal_coefficients(self.kappa, self.omega0, self.temperature, c, self.M)


@dataclass(frozen=True)
class WeidlichHaakeModel:
    """Weidlich-Haake model; ``omega0`` is taken as already renormalized by any
    frequency shift."""

    gamma_c: float
    omega0: float
    temperature: float = 0.0
    M: float = 1.0
    gamma_s: float = 0.0

    kind = ModelKind.WEIDLICH_HAAKE

    def rates(self, c: PhysConstants = DEFAULT_CONSTANTS) -> tuple[float, float]:
        return weidlich_haake_rates(self.gamma_c, self.omega0, self.temperature, c)

    def lindblad_params(self, c: PhysConstants = DEFAULT_CONSTANTS) -> LindbladParams:
        down, up = self.rates(c)
        return weidlich_haake_to_lindblad(down, up, self.omega0, self.M, c)


Model = Union[
    KGCoefficients,
    LindbladParams,
    ThermalKGModel,
    OhmicModel,
    DrudeModel,
    WeakCouplingModel,
    AgarwalModel,
    WeidlichHaakeModel,
]


def resolve_dynamics(model, c: PhysConstants = DEFAULT_CONSTANTS):
    """Reduce any model variant to ``KGCoefficients`` or ``LindbladParams``."""
    if hasattr(model, "lindblad_params"):
        return model.lindblad_params(c)
    if hasattr(model, "kg_coefficients"):
        return model.kg_coefficients(c)
    raise UnknownVariant(f"unsupported model type {type(model).__name__}")
