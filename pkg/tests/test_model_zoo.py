import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dampedosc.core_state import PhysConstants
from dampedosc.dynamics import kg_asymptotic_variances
from dampedosc.errors import (
    CoefficientUndefined,
    InvalidParameter,
    MissingBathData,
    OverdampedRegime,
    UnknownVariant,
)
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
    agarwal_coefficients,
    coefficient_at,
    drude_gammas,
    kg_thermal_coefficients,
    lindblad_constraint_check,
    lindblad_single_operator,
    operator_commutator,
    purity_preserving_diffusion,
    purity_preserving_params,
    resolve_dynamics,
    single_operator_diffusion,
    thermal_coth,
    weak_coupling_coefficients,
    weidlich_haake_rates,
    weidlich_haake_to_lindblad,
)


def test_kg_construction_rules():
    with pytest.raises(InvalidParameter):
        KGCoefficients(1.0, 0.1, 0.0, 0.0, M=0.0)
    with pytest.raises(InvalidParameter):
        KGCoefficients(1.0, -0.1, 0.0, 0.0)
    free = KGCoefficients(0.0, 0.0, 0.0, 0.0)
    assert not free.is_bound
    assert KGCoefficients(1.0, 0.1, 0.0, 0.0).is_bound


def test_time_dependent_coefficients():
    k = KGCoefficients(1.0, lambda t: 0.1 * t, 0.0, lambda t: 0.2, omega0=1.0)
    assert not k.is_constant
    snap = k.at(2.0)
    assert snap.gamma_p == pytest.approx(0.2)
    assert snap.is_constant
    bad = KGCoefficients(1.0, lambda t: 1.0 / (t - 1.0), 0.0, 0.0)
    with pytest.raises(CoefficientUndefined):
        bad.at(1.0)
    with pytest.raises(CoefficientUndefined):
        coefficient_at(lambda t: math.nan, 0.0)


def test_thermal_coefficients():
    D_q, D_p = kg_thermal_coefficients(1.0, 0.2, BathSpec(q2_eq=0.55, p2_eq=0.5))
    assert (D_q, D_p) == pytest.approx((0.05, 0.1))
    assert kg_thermal_coefficients(1.0, 0.0, BathSpec(q2_eq=1, p2_eq=1))[1] == 0.0
    assert kg_thermal_coefficients(2.0, 0.1, BathSpec(q2_eq=0.5, p2_eq=1.0))[0] == 0.0
    with pytest.raises(MissingBathData):
        kg_thermal_coefficients(1.0, 0.2, BathSpec())
    D_q_t, D_p_t = kg_thermal_coefficients(lambda t: 1 + t, lambda t: t, BathSpec(q2_eq=1, p2_eq=2))
    assert D_q_t(1.0) == pytest.approx(0.0)
    assert D_p_t(0.5) == pytest.approx(1.0)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.1, 5), st.floats(0.1, 5),
       st.floats(0.2, 3))
def test_thermal_round_trip_through_asymptotics(gq, gp, q2, p2, M):
    D_q, D_p = kg_thermal_coefficients(gq, gp, BathSpec(q2_eq=q2, p2_eq=p2), M)
    var_qq, var_pp, cov = kg_asymptotic_variances(KGCoefficients(gq, gp, D_q, D_p, M=M))
    # asymptotic <p^2> is M^2 D_p / gamma_p = p2 in these units of momentum variance
    assert var_qq == pytest.approx(q2, rel=1e-9)
    assert var_pp == pytest.approx(p2, rel=1e-9)
    assert cov == 0.0


def test_drude_gammas():
    assert drude_gammas(0.1, 1.0) == pytest.approx((1.01, 0.2))
    assert drude_gammas(0.0, 2.0) == (4.0, 0.0)
    assert drude_gammas(0.3, 0.0) == pytest.approx((0.09, 0.6))


@given(st.floats(0, 10), st.floats(0, 10))
def test_drude_always_oscillatory(alpha, eta):
    gq, gp = drude_gammas(alpha, eta)
    assert 4 * gq - gp**2 == pytest.approx(4 * eta**2, abs=1e-9 * (1 + gq))


def test_agarwal_coefficients():
    k = agarwal_coefficients(0.1, 1.0, 0.0)
    # gamma_p = 2 kappa: see the decisions ledger
    assert (k.gamma_q, k.gamma_p, k.D_q, k.D_p) == pytest.approx((1.0, 0.2, 0.0, 0.1))
    assert k.D_p / k.gamma_p == pytest.approx(0.5)
    hot = agarwal_coefficients(0.1, 1.0, 1e4)
    assert hot.D_p == pytest.approx(2 * 0.1 * 1e4, rel=1e-6)
    off = agarwal_coefficients(0.0, 1.0, 3.0)
    assert off.gamma_p == 0.0 and off.D_p == 0.0 and off.D_q == 0.0


def test_weak_coupling_mapping():
    c = PhysConstants(hbar=1.5)
    k = weak_coupling_coefficients(0.02, 0.1, 0.03, 0.07, 2.0, c, M=1.2)
    assert k.gamma_q == pytest.approx(4.0 + 2.0 * 0.02)
    assert k.gamma_p == 0.1
    assert k.D_q == pytest.approx(-1.5 * 0.03 / (1.44 * 2.0))
    assert k.D_p == pytest.approx(1.5 * 0.07 / 1.44)


def test_weidlich_haake_rates():
    assert weidlich_haake_rates(0.2, 1.0, 0.0) == pytest.approx((0.1, 0.0))
    # coth(x) = 3 at x = atanh(1/3)
    T = 1.0 / (2 * math.atanh(1 / 3))
    assert weidlich_haake_rates(0.2, 1.0, T) == pytest.approx((0.2, 0.1))
    assert thermal_coth(1.0, T) == pytest.approx(3.0)


@given(st.floats(0.001, 2), st.floats(0.1, 5), st.floats(0, 10), st.floats(0.2, 3))
def test_weidlich_haake_mapping_is_lindblad(gamma_c, omega0, T, M):
    down, up = weidlich_haake_rates(gamma_c, omega0, T)
    assert down - up == pytest.approx(gamma_c / 2)
    params = weidlich_haake_to_lindblad(down, up, omega0, M)
    check = lindblad_constraint_check(params)
    assert check.passed
    if T == 0:
        assert check.residual == pytest.approx(0.0, abs=1e-15)


def test_weidlich_haake_zero_temperature_mapping():
    p = weidlich_haake_to_lindblad(0.1, 0.0, 2.0, M=1.5)
    assert p.lam == 0.1
    assert p.D_pp == pytest.approx(0.5 * 1.5 * 2.0 * 0.1)
    assert p.D_qq == pytest.approx(0.5 * 0.1 / 3.0)
    assert p.D_pq == 0.0 and p.mu == 0.0
    assert weidlich_haake_to_lindblad(0.3, 0.3, 1.0).lam == 0.0


def test_lindblad_constraint_examples():
    ok = lindblad_constraint_check(LindbladParams(1, 1, 0.0, 0.0, 1.0, 1.0, 0.0))
    assert ok.passed and ok.residual == 1.0
    bad = lindblad_constraint_check(LindbladParams(1, 1, 1.0, 0.0, 0.1, 0.1, 0.0))
    assert not bad.passed
    assert bad.residual == pytest.approx(-0.24)
    assert lindblad_constraint_check(purity_preserving_params(0.1, 0.6, 1.0)).passed


def test_lindblad_params_validation():
    with pytest.raises(InvalidParameter):
        LindbladParams(1, 1, -0.1, 0, 1, 1, 0)
    with pytest.raises(InvalidParameter):
        LindbladParams(0, 1, 0.1, 0, 1, 1, 0)


def test_purity_preserving_diffusion_examples():
    assert purity_preserving_diffusion(0.1, 0.0, 1.0) == pytest.approx((0.05, 0.05, 0.0))
    D_pp, D_qq, D_pq = purity_preserving_diffusion(0.1, 0.6, 1.0)
    assert (D_pp, D_qq, D_pq) == pytest.approx((0.0625, 0.0625, -0.0375))
    assert D_pp * D_qq - D_pq**2 == pytest.approx(0.0025, abs=1e-16)
    with pytest.raises(OverdampedRegime):
        purity_preserving_diffusion(0.1, 1.0, 1.0)


@given(st.floats(0.001, 3), st.floats(-0.95, 0.95), st.floats(0.2, 5), st.floats(0.2, 5),
       st.floats(0.5, 2))
def test_coepur_saturates_ineq(lam, mu_frac, omega, m, hbar):
    c = PhysConstants(hbar=hbar)
    D_pp, D_qq, D_pq = purity_preserving_diffusion(lam, mu_frac * omega, omega, m, c)
    bound = (hbar * lam) ** 2 / 4
    assert D_pp * D_qq - D_pq**2 == pytest.approx(bound, rel=1e-9)


@given(st.floats(1e-3, 3), st.floats(-0.95, 0.95), st.floats(0.2, 5), st.floats(0.2, 5))
def test_single_operator_round_trip(lam, mu_frac, omega, m):
    params = purity_preserving_params(lam, mu_frac * omega, omega, m)
    c_q, c_p = lindblad_single_operator(params)
    assert operator_commutator(c_q, c_p) == pytest.approx(2 * lam, abs=1e-12)
    D_pp, D_qq, D_pq, lam_back = single_operator_diffusion(c_q, c_p)
    scale = max(params.D_pp, params.D_qq, 1e-300)
    assert D_pp == pytest.approx(params.D_pp, abs=1e-12 * scale)
    assert D_qq == pytest.approx(params.D_qq, abs=1e-12 * scale)
    assert D_pq == pytest.approx(params.D_pq, abs=1e-12 * scale)
    assert lam_back == pytest.approx(lam, abs=1e-12)


def test_hermitian_operator_commutes():
    assert operator_commutator(complex(0.3, 0), complex(-1.2, 0)) == 0.0


def test_single_operator_needs_position_diffusion():
    with pytest.raises(InvalidParameter):
        lindblad_single_operator(LindbladParams(1, 1, 0.0, 0.0, 1.0, 0.0, 0.0))


def test_variants_resolve():
    bath = BathSpec(0.3, 0.6, 0.5)
    cases = [
        (ThermalKGModel(1.0, 0.2, bath), ModelKind.KG_THERMAL, KGCoefficients),
        (OhmicModel(0.2, 1.0, bath), ModelKind.OHMIC, KGCoefficients),
        (DrudeModel(0.1, 1.0, bath), ModelKind.DRUDE, KGCoefficients),
        (WeakCouplingModel(0.0, 0.1, 0.0, 0.05, 1.0), ModelKind.WEAK_COUPLING, KGCoefficients),
        (AgarwalModel(0.1, 1.0), ModelKind.AGARWAL, KGCoefficients),
        (WeidlichHaakeModel(0.2, 1.0), ModelKind.WEIDLICH_HAAKE, LindbladParams),
        (purity_preserving_params(0.1, 0.0, 1.0), ModelKind.LINDBLAD, LindbladParams),
    ]
    for model, kind, family in cases:
        assert model.kind is kind
        assert isinstance(resolve_dynamics(model), family)
    assert OhmicModel.warnings
    ohmic = resolve_dynamics(OhmicModel(0.2, 1.5, bath))
    assert ohmic.gamma_q == pytest.approx(2.25) and ohmic.gamma_p == 0.2
    with pytest.raises(UnknownVariant):
        resolve_dynamics(object())


def test_bath_validation():
    with pytest.raises(InvalidParameter):
        BathSpec(temperature=-1)
    with pytest.raises(InvalidParameter):
        BathSpec(q2_eq=0.0, p2_eq=1.0)
