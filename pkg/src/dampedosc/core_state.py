"""Gaussian oscillator states and the functionals defined on them.

A single-mode Gaussian state is fully described by five numbers: the means
``(mean_q, mean_p)`` and the centred second moments ``(var_qq, var_pp, cov_pq)``.
Everything here is a pure function of those five numbers plus the physical
constants.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import xlogy

from .errors import DegenerateState, InvalidParameter, UncertaintyViolation

#: Relative tolerance on ``sigma - hbar^2/4`` used to call a state pure.
PURITY_TOL = 1e-9


@dataclass(frozen=True)
class PhysConstants:
    """Planck and Boltzmann constants; natural units by default."""

    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.kB > 0):
            raise InvalidParameter(f"hbar and kB must be positive, got {self}")

    @property
    def pure_area(self) -> float:
        """Phase-space area hbar^2/4 of a minimum-uncertainty state."""
        return 0.25 * self.hbar**2


DEFAULT_CONSTANTS = PhysConstants()


@dataclass(frozen=True)
class GaussianState:
    mean_q: float
    mean_p: float
    var_qq: float
    var_pp: float
    cov_pq: float

    @classmethod
    def from_array(cls, y) -> "GaussianState":
        """Build from ``(mean_q, mean_p, var_qq, var_pp, cov_pq)``."""
        return cls(*(float(v) for v in y))

    def as_array(self) -> np.ndarray:
        return np.array([self.mean_q, self.mean_p, self.var_qq, self.var_pp, self.cov_pq])

    def covariance(self) -> np.ndarray:
        """Covariance matrix in ``(q, p)`` ordering."""
        return np.array([[self.var_qq, self.cov_pq], [self.cov_pq, self.var_pp]])

    def centred(self) -> "GaussianState":
        return replace(self, mean_q=0.0, mean_p=0.0)

    def with_means(self, mean_q: float, mean_p: float) -> "GaussianState":
        return replace(self, mean_q=float(mean_q), mean_p=float(mean_p))


class UncertaintyClass(enum.Enum):
    VIOLATING = "Violating"
    PURE_BOUNDARY = "PureBoundary"
    MIXED = "Mixed"


def sigma_det(state: GaussianState) -> float:
    """Determinant ``var_qq*var_pp - cov_pq**2`` of the covariance matrix."""
    return state.var_qq * state.var_pp - state.cov_pq**2


def uncertainty_class(
    state: GaussianState, c: PhysConstants = DEFAULT_CONSTANTS, tol: float = PURITY_TOL
) -> UncertaintyClass:
    bound = c.pure_area
    sigma = sigma_det(state)
    if sigma < bound * (1.0 - tol):
        return UncertaintyClass.VIOLATING
    if abs(sigma - bound) <= bound * tol:
        return UncertaintyClass.PURE_BOUNDARY
    return UncertaintyClass.MIXED


def purity_nu(
    state: GaussianState, c: PhysConstants = DEFAULT_CONSTANTS, tol: float = PURITY_TOL
) -> float:
    """Purity coefficient ``nu = (2/hbar) sqrt(sigma)``, equal to ``1/Tr(rho^2)``.

    Round-off undershoot of ``sigma`` below ``hbar^2/4`` (within ``tol``) is
    clamped to ``nu = 1``; anything further below raises
    :class:`UncertaintyViolation`.
    """
    sigma = sigma_det(state)
    bound = c.pure_area
    if sigma < bound * (1.0 - tol):
        raise UncertaintyViolation(
            f"sigma = {sigma!r} is below hbar^2/4 = {bound!r} (relative tolerance {tol})"
        )
    if sigma <= bound:
        return 1.0
    return 2.0 * math.sqrt(sigma) / c.hbar


def linear_entropy(
    state: GaussianState, c: PhysConstants = DEFAULT_CONSTANTS, tol: float = PURITY_TOL
) -> float:
    """``S_l = 1 - Tr(rho^2) = 1 - 1/nu``."""
    return 1.0 - 1.0 / purity_nu(state, c, tol)


def entropy_from_nu(nu: float) -> float:
    """Von Neumann entropy of a Gaussian state with purity coefficient ``nu``.

    Uses ``0 ln 0 = 0`` so that ``nu = 1`` gives exactly zero.
    """
    if nu < 1.0:
        raise UncertaintyViolation(f"nu = {nu!r} < 1")
    a = 0.5 * (nu + 1.0)
    b = 0.5 * (nu - 1.0)
    return float(xlogy(a, a) - xlogy(b, b))


def von_neumann_entropy(
    state: GaussianState, c: PhysConstants = DEFAULT_CONSTANTS, tol: float = PURITY_TOL
) -> float:
    return entropy_from_nu(purity_nu(state, c, tol))


def correlation_coefficient(state: GaussianState) -> float:
    """``r = cov_pq / sqrt(var_qq var_pp)``."""
    prod = state.var_qq * state.var_pp
    if not prod > 0:
        raise DegenerateState(f"var_qq*var_pp = {prod!r} must be positive")
    return state.cov_pq / math.sqrt(prod)


def wigner_eval(state: GaussianState, p, q):
    """Gaussian Wigner function ``W(p, q)``; accepts scalars or arrays."""
    sigma = sigma_det(state)
    if not sigma > 0:
        raise DegenerateState(f"sigma = {sigma!r} must be positive")
    dq = np.asarray(q, dtype=float) - state.mean_q
    dp = np.asarray(p, dtype=float) - state.mean_p
    quad = state.var_pp * dq**2 + state.var_qq * dp**2 - 2.0 * state.cov_pq * dq * dp
    w = np.exp(-quad / (2.0 * sigma)) / (2.0 * math.pi * math.sqrt(sigma))
    return float(w) if np.ndim(w) == 0 else w


def density_matrix_eval(state: GaussianState, x, y, c: PhysConstants = DEFAULT_CONSTANTS):
    """Coordinate-representation matrix element ``<x|rho|y>`` of the state."""
    if not state.var_qq > 0:
        raise DegenerateState(f"var_qq = {state.var_qq!r} must be positive")
    hbar = c.hbar
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    centre = 0.5 * (x + y) - state.mean_q
    diff = x - y
    conditional = state.var_pp - state.cov_pq**2 / state.var_qq
    exponent = (
        -centre**2 / (2.0 * state.var_qq)
        + 1j * state.cov_pq / (hbar * state.var_qq) * centre * diff
        - conditional * diff**2 / (2.0 * hbar**2)
        + 1j * state.mean_p * diff / hbar
    )
    rho = np.exp(exponent) / math.sqrt(2.0 * math.pi * state.var_qq)
    return complex(rho) if np.ndim(rho) == 0 else rho


def ccs_state(
    r: float,
    eta: float,
    mean_q: float = 0.0,
    mean_p: float = 0.0,
    c: PhysConstants = DEFAULT_CONSTANTS,
) -> GaussianState:
    """Correlated coherent state with correlation ``r`` and width ``eta``.

    ``var_qq = eta**2``; the momentum variance and covariance are fixed by
    minimum uncertainty, so the result always has ``sigma = hbar^2/4``.
    """
    if not abs(r) < 1.0:
        raise InvalidParameter(f"|r| must be < 1, got r = {r!r}")
    if not eta > 0:
        raise InvalidParameter(f"eta must be positive, got {eta!r}")
    one_minus = 1.0 - r * r
    return GaussianState(
        mean_q=float(mean_q),
        mean_p=float(mean_p),
        var_qq=eta * eta,
        var_pp=c.hbar**2 / (4.0 * eta * eta * one_minus),
        cov_pq=c.hbar * r / (2.0 * math.sqrt(one_minus)),
    )


def ccs_wigner(r: float, eta: float, state_means: tuple[float, float], p, q,
               c: PhysConstants = DEFAULT_CONSTANTS):
    """Wigner function of a correlated coherent state written in ``(r, eta)`` form."""
    hbar = c.hbar
    mq, mp = state_means
    dq = np.asarray(q, dtype=float) - mq
    dp = np.asarray(p, dtype=float) - mp
    one_minus = 1.0 - r * r
    exponent = (
        -dq**2 / (2.0 * eta**2 * one_minus)
        - 2.0 * eta**2 * dp**2 / hbar**2
        + 2.0 * r / (hbar * math.sqrt(one_minus)) * dq * dp
    )
    return np.exp(exponent) / (math.pi * hbar)
