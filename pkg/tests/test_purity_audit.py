import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampedosc.core_state import GaussianState, PhysConstants, ccs_state, sigma_det
from dampedosc.dynamics import IntegratorOptions, integrate, total_energy
from dampedosc.errors import ConstantCoefficientsRequired, MissingBathData, NotPure, UnknownVariant
from dampedosc.model_zoo import (
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
    drude_gammas,
    kg_thermal_coefficients,
    purity_preserving_params,
)
from dampedosc.purity_audit import (
    Verdict,
    agarwal_purity_residual,
    asymptotic_density_matrix,
    asymptotic_wigner,
    audit_purity,
    drude_purity_residual,
    hamiltonian_expectation_check,
    kg_effective_hamiltonian_expectation,
    kg_purity_residual,
    lindblad_pure_stationary_state,
    lindblad_purity_residual,
    ohmic_purity_residual,
    purity_condition,
    purity_preserving_initial_state,
    purity_preserving_variances,
    purity_residual,
    thermal_purity_residual,
    weak_coupling_purity_residual,
    weidlich_haake_purity_residual,
)
from dampedosc.core_state import density_matrix_eval, wigner_eval

VARPUR = GaussianState(0, 0, 0.625, 0.625, -0.375)
COEPUR = purity_preserving_params(0.1, 0.6, 1.0)

admissible = st.builds(
    lambda r, eta, stretch, mq, mp: GaussianState(
        mq, mp, eta**2 * stretch, 0.25 / (eta**2 * (1 - r * r)), 0.5 * r / math.sqrt(1 - r * r)),
    st.floats(-0.9, 0.9), st.floats(0.3, 2.0), st.floats(1.0, 3.0), st.floats(-2, 2),
    st.floats(-2, 2),
)


def test_kg_residual_examples():
    k = KGCoefficients(1.0, 0.2, 0.05, 0.1)
    assert kg_purity_residual(GaussianState(0, 0, 1, 1, 0.1), k) == pytest.approx(0.045)
    closed = KGCoefficients(1.0, 0.0, 0.0, 0.0)
    assert kg_purity_residual(GaussianState(0, 0, 3, 2, 0.4), closed) == 0.0


def test_thermal_residual_two_paths_agree():
    bath = BathSpec(0.4, 0.7, 0.6)
    rng = np.random.default_rng(3)
    for _ in range(20):
        gq, gp, M = rng.uniform(0.1, 2, size=3)
        D_q, D_p = kg_thermal_coefficients(gq, gp, bath, M)
        s = GaussianState(0, 0, *rng.uniform(0.3, 2, size=2), rng.uniform(-0.2, 0.2))
        direct = thermal_purity_residual(s, gq, gp, bath, M)
        assert direct == pytest.approx(kg_purity_residual(s, KGCoefficients(gq, gp, D_q, D_p, M=M)),
                                       abs=1e-14)


def test_ohmic_examples():
    bath = BathSpec(q2_eq=0.5, p2_eq=0.5)
    assert ohmic_purity_residual(GaussianState(0, 0, 0.5, 0.5, 0), 0.2, 1.0, bath) == pytest.approx(0.0)
    assert ohmic_purity_residual(GaussianState(0, 0, 1, 1, 0), 0.2, 1.0, bath) == pytest.approx(0.05)
    with pytest.raises(MissingBathData):
        ohmic_purity_residual(VARPUR, 0.2, 1.0, BathSpec())


def test_drude_matches_thermal_with_drude_gammas():
    bath = BathSpec(0.0, 0.8, 0.6)
    s = GaussianState(0, 0, 0.9, 0.7, 0.1)
    gq, gp = drude_gammas(0.15, 1.2)
    assert drude_purity_residual(s, 0.15, 1.2, bath) == pytest.approx(
        thermal_purity_residual(s, gq, gp, bath), abs=1e-15)


def test_weak_coupling_examples():
    s = GaussianState(0, 0, 0.5, 0.5, 0.2)
    assert weak_coupling_purity_residual(s, 0.05, 0.0, 0.1, 1.0) == pytest.approx(0.0)
    # negative K_s with positive covariance lowers the residual
    assert weak_coupling_purity_residual(s, 0.05, -0.1, 0.1, 2.0) == pytest.approx(-0.01)
    model = WeakCouplingModel(0.01, 0.1, -0.1, 0.05, 2.0)
    mapped = kg_purity_residual(s, model.kg_coefficients())
    assert mapped == pytest.approx(weak_coupling_purity_residual(s, 0.05, -0.1, 0.1, 2.0))


def test_agarwal_examples():
    assert agarwal_purity_residual(GaussianState(0, 0, 0.5, 0.5, 0), 1.0, 0.0) == 0.0
    assert agarwal_purity_residual(GaussianState(0, 0, 1.0, 0.25, 0), 1.0, 0.0) == 0.5
    assert agarwal_purity_residual(GaussianState(0, 0, 0.5, 0.5, 0), 1.0, 0.5) > 0


@settings(max_examples=30)
@given(admissible, st.floats(0.01, 1), st.floats(0.2, 3), st.floats(0, 3))
def test_agarwal_residual_is_kg_residual_rescaled(s, kappa, omega0, T):
    model = AgarwalModel(kappa, omega0, T)
    kg = kg_purity_residual(s, model.kg_coefficients())
    assert kg == pytest.approx(kappa * agarwal_purity_residual(s, omega0, T), abs=1e-13)


def test_weidlich_haake_examples():
    ground = GaussianState(0, 0, 0.5, 0.5, 0)
    assert weidlich_haake_purity_residual(ground, 1.0, 0.0) == 0.0
    assert weidlich_haake_purity_residual(GaussianState(0, 0, 1, 1, 0), 1.0, 0.0) == 1.0


@given(admissible, st.floats(0.2, 5), st.floats(1e-3, 10), st.floats(0.2, 3))
def test_weidlich_haake_residual_positive_above_zero_temperature(s, omega0, T, M):
    assert weidlich_haake_purity_residual(s, omega0, T, M) > 0


def test_lindblad_residual_examples():
    assert lindblad_purity_residual(VARPUR, COEPUR) == pytest.approx(0.0, abs=1e-16)
    coepur0 = purity_preserving_params(0.1, 0.0, 1.0)
    assert lindblad_purity_residual(GaussianState(0, 0, 1, 1, 0), coepur0) == pytest.approx(0.05)


@given(admissible, st.floats(0.01, 2), st.floats(0.01, 2))
def test_lindblad_residual_positive_without_friction(s, D_pp, D_qq):
    assert lindblad_purity_residual(s, LindbladParams(1, 1, 0.0, 0.0, D_pp, D_qq, 0.0)) > 0


def test_dispatch_and_conditions():
    bath = BathSpec(0.3, 0.6, 0.5)
    s = GaussianState(0, 0, 0.8, 0.6, 0.1)
    models = [KGCoefficients(1, 0.1, 0.0, 0.05), ThermalKGModel(1, 0.1, bath),
              OhmicModel(0.1, 1, bath), DrudeModel(0.1, 1, bath),
              WeakCouplingModel(0, 0.1, 0, 0.05, 1), AgarwalModel(0.1, 1),
              WeidlichHaakeModel(0.1, 1), COEPUR]
    for model in models:
        assert math.isfinite(purity_residual(s, model))
        assert purity_condition(model).kind is model.kind
    assert purity_condition(COEPUR).kind is ModelKind.LINDBLAD
    with pytest.raises(UnknownVariant):
        purity_residual(s, object())


def test_audit_verdicts():
    grid = np.linspace(0, 100, 51)
    kept = audit_purity(integrate(COEPUR, VARPUR, grid, IntegratorOptions(dt=0.05)))
    assert kept.verdict is Verdict.PRESERVES_PURITY
    assert kept.max_abs_residual < 1e-15
    warm = AgarwalModel(0.1, 1.0, 0.8)
    lost = audit_purity(integrate(warm, GaussianState(0, 0, 0.5, 0.5, 0), grid))
    assert lost.verdict is Verdict.LOSES_PURITY
    # a mixed start never earns the verdict, even with a vanishing residual
    closed = KGCoefficients(1.0, 0.0, 0.0, 0.0)
    mixed = audit_purity(integrate(closed, GaussianState(0, 0, 1, 1, 0), grid[:5]))
    assert mixed.max_abs_residual == 0.0
    assert mixed.verdict is Verdict.LOSES_PURITY


def test_purity_preserving_initial_state_examples():
    assert purity_preserving_initial_state(COEPUR).as_array() == pytest.approx(VARPUR.as_array())
    assert purity_preserving_initial_state(AgarwalModel(0.1, 1.0)).as_array()[2:] == \
        pytest.approx([0.5, 0.5, 0.0])
    assert purity_preserving_initial_state(AgarwalModel(0.1, 1.0, 0.3)) is None
    assert purity_preserving_initial_state(WeidlichHaakeModel(0.2, 2.0)).as_array()[2:] == \
        pytest.approx([0.25, 1.0, 0.0])
    assert purity_preserving_initial_state(WeidlichHaakeModel(0.2, 2.0, 0.4)) is None
    # thermal KG with a mixed equilibrium state has no pure invariant state
    assert purity_preserving_initial_state(KGCoefficients(1.0, 0.2, 0.05, 0.1)) is None
    with pytest.raises(ConstantCoefficientsRequired):
        purity_preserving_initial_state(KGCoefficients(1.0, lambda t: 0.1, 0.0, 0.0))


def test_kg_squeezed_invariant_state():
    # choose D's so that the asymptotic state is a squeezed minimum-uncertainty state
    gq, gp, M = 2.0, 0.3, 1.0
    var_pp = 0.8
    var_qq = 0.25 / var_pp
    D_p = gp * var_pp / M**2
    D_q = var_qq * gq - D_p / gp
    k = KGCoefficients(gq, gp, D_q, D_p, M=M)
    s = purity_preserving_initial_state(k)
    assert s.as_array()[2:] == pytest.approx([var_qq, var_pp, 0.0])
    assert kg_purity_residual(s, k) == pytest.approx(0.0, abs=1e-15)
    traj = integrate(k, s, np.linspace(0, 50, 26))
    assert max(abs(d.nu - 1) for d in traj.diagnostics) < 1e-10
    assert audit_purity(traj).verdict is Verdict.PRESERVES_PURITY


def test_dek_chain_rejects_unsaturated_and_non_stationary():
    unsat = LindbladParams(1, 1, 0.1, 0.0, 0.1, 0.1, 0.0)
    assert lindblad_pure_stationary_state(unsat) is None
    # saturated ineq, but D_pq of the wrong sign for mu: not a fixed point
    wrong = LindbladParams(1, 1, 0.1, 0.6, 0.0625, 0.0625, 0.0375)
    assert lindblad_pure_stationary_state(wrong) is None
    assert lindblad_pure_stationary_state(LindbladParams(1, 1, 0.0, 0.0, 0.1, 0.1, 0.0)) is None


@settings(max_examples=30)
@given(st.floats(0.01, 1), st.floats(-0.9, 0.9), st.floats(0.3, 3), st.floats(0.3, 3),
       st.floats(0.5, 2))
def test_dek_chain_recovers_varpur(lam, mu_frac, omega, m, hbar):
    c = PhysConstants(hbar=hbar)
    mu = mu_frac * omega
    params = purity_preserving_params(lam, mu, omega, m, c)
    found = lindblad_pure_stationary_state(params, c)
    expected = purity_preserving_variances(mu, omega, m, c)
    assert found.as_array() == pytest.approx(expected.as_array(), rel=1e-9, abs=1e-12)
    assert sigma_det(found) == pytest.approx(c.pure_area, rel=1e-9)


def test_varpur_correlation():
    s = purity_preserving_variances(0.6, 1.0)
    assert s.cov_pq / math.sqrt(s.var_qq * s.var_pp) == pytest.approx(-0.6)


# --------------------------------------------------------------------------
# effective Hamiltonians


def test_ham2_equal_at_purity_and_gap_off_purity():
    displaced = VARPUR.with_means(0.7, -0.3)
    h, hp = hamiltonian_expectation_check(displaced, COEPUR)
    assert h == pytest.approx(total_energy(displaced, COEPUR))
    assert abs(hp - h) < 1e-14
    other = ccs_state(0.0, 0.9)
    h, hp = hamiltonian_expectation_check(other, COEPUR)
    assert hp.real == pytest.approx(h)
    assert hp.imag == pytest.approx(-lindblad_purity_residual(other, COEPUR))


def test_ham6_equal_at_purity_and_gap_off_purity():
    model = WeidlichHaakeModel(0.3, 1.5, 0.0, M=0.8, gamma_s=0.05)
    coherent = ccs_state(0.0, math.sqrt(0.5 / (0.8 * 1.5)), 0.4, -0.9)
    h, hp = hamiltonian_expectation_check(coherent, model)
    assert abs(hp - h) < 1e-14
    squeezed = ccs_state(0.3, 0.5, 0.4, -0.9)
    h, hp = hamiltonian_expectation_check(squeezed, model)
    cpur = weidlich_haake_purity_residual(squeezed, 1.5, 0.0, 0.8)
    assert hp.imag == pytest.approx(-0.25 * model.gamma_c * cpur)
    with pytest.raises(NotPure):
        hamiltonian_expectation_check(GaussianState(0, 0, 1, 1, 0), model)
    with pytest.raises(UnknownVariant):
        hamiltonian_expectation_check(coherent, AgarwalModel(0.1, 1.0))


@given(admissible, st.floats(0.1, 2), st.floats(0, 1), st.floats(-0.3, 0.3), st.floats(0, 0.3))
def test_kg_effective_hamiltonian_imaginary_part(s, gq, gp, D_q, D_p):
    k = KGCoefficients(gq, gp, D_q, D_p)
    value = kg_effective_hamiltonian_expectation(s, k)
    assert value.imag == pytest.approx(-kg_purity_residual(s, k), abs=1e-13)


# --------------------------------------------------------------------------
# long-time state


def test_asymptotic_forms_match_varpur():
    rng = np.random.default_rng(5)
    x, y, p = rng.normal(size=(3, 30))
    assert np.allclose(asymptotic_density_matrix(COEPUR, x, y), density_matrix_eval(VARPUR, x, y))
    assert np.allclose(asymptotic_wigner(COEPUR, p, x), wigner_eval(VARPUR, p, x))
