import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abist import errors
from abist.conjugation import ConjugationData, conjugation_data, nu_of
from abist.pc_asymptotics import (
    AsymptoticModel,
    PCCoefficients,
    ReflectionInterpolant,
    g_coefficient,
    m1_err,
    m1_pc,
    modulated_r_at_phase,
    nu_from_modulus,
    pc_coefficients,
    theorem2_eval,
    xi_coefficients,
)
from abist.phase_geometry import ConeSpec
from abist.soliton_engine import one_soliton_closed
from abist.spectral_transform import DiscreteMode, ScatteringData, compute_scattering_data, default_kgrid

from conftest import K1, sech_profile

KG = default_kgrid()
r_hat_strategy = st.builds(
    lambda m, a: m * cmath.exp(1j * a), st.floats(1e-3, 20.0), st.floats(0, 2 * math.pi)
)


def reflectionless(modes, alpha=-2.0, beta=1.0):
    s11 = np.ones(KG.size, complex)
    for m in modes:
        s11 *= (KG - m.k) / (KG - np.conj(m.k))
    return ScatteringData(alpha, beta, KG, s11, np.zeros(KG.size, complex), list(modes))


@pytest.fixture(scope="module")
def radiation():
    # 0.8 sech with alpha = -1 has no eigenvalue and a visible reflection coefficient
    return compute_scattering_data(sech_profile(0.8, alpha=-1.0))


@pytest.fixture(scope="module")
def mixed():
    # 1.5 sech: reflection plus one eigenvalue at 0.25 i travelling at v = 4
    return compute_scattering_data(sech_profile(1.5, alpha=-1.0))


# --- r_hat ------------------------------------------------------------------------


def test_r_hat_zero_reflection():
    cd = ConjugationData(1.0, 0.0, 0.0, 1.0, 1.0)
    assert modulated_r_at_phase(lambda k: 0j, cd, 1.0, 3.0, -1.0, 1) == 0


@pytest.mark.parametrize("sign", [1, -1])
def test_r_hat_modulus(radiation, sign):
    rho = ReflectionInterpolant(radiation)
    nu = nu_of(radiation)
    k0 = 0.7
    cd = conjugation_data(nu, k0, [])
    r = modulated_r_at_phase(rho, cd, k0, 12.0, -1.0, sign)
    T0 = cd.T0_plus if sign > 0 else cd.T0_minus
    assert abs(r) == pytest.approx(abs(rho(sign * k0)) / abs(T0) ** 2, rel=1e-13)
    # |rho| = |r| = |s12/s11|
    i = int(np.argmin(np.abs(KG - sign * 0.7)))
    assert abs(rho(KG[i])) == pytest.approx(abs(radiation.r[i]), rel=1e-12)


@pytest.mark.parametrize("ln_sign", [1, -1])
def test_r_hat_doubling_t_changes_only_the_phase(radiation, ln_sign):
    rho = ReflectionInterpolant(radiation)
    k0, t, alpha = 0.6, 7.0, -1.0
    cd = conjugation_data(nu_of(radiation), k0, [])
    a = modulated_r_at_phase(rho, cd, k0, t, alpha, 1, ln_sign)
    b = modulated_r_at_phase(rho, cd, k0, 2 * t, alpha, 1, ln_sign)
    assert abs(abs(b) - abs(a)) < 1e-12
    nu = cd.nu_at_k0
    # with the printed sign convention (ln_sign = +1) the increment is -nu ln2 - alpha t/k0
    expected = -ln_sign * nu * math.log(2) - alpha * t / k0
    assert abs(cmath.exp(1j * expected) - b / a) < 1e-12


def test_r_hat_argument_checks(radiation):
    rho = ReflectionInterpolant(radiation)
    cd = ConjugationData(1.0, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(errors.ValidationError):
        modulated_r_at_phase(rho, cd, 1.0, -1.0, -1.0, 1)
    with pytest.raises(errors.ValidationError):
        modulated_r_at_phase(rho, cd, 1.0, 1.0, -1.0, 0)
    with pytest.raises(errors.InterpolationOutOfRange):
        rho(7.0)
    with pytest.raises(errors.InterpolationOutOfRange):
        rho(0.01)


# --- Xi ------------------------------------------------------------------------------


def test_xi_zero_limit():
    assert xi_coefficients(0j) == (0j, 0j)


def test_xi_unit_reflection():
    nu = nu_from_modulus(1.0)
    assert nu == pytest.approx(-0.110318, abs=1e-6)
    x12, _ = xi_coefficients(1.0 + 0j)
    assert abs(x12) ** 2 == pytest.approx(-nu, rel=1e-12)


@pytest.mark.parametrize("sign", [1, -1])
@settings(max_examples=100)
@given(r_hat=r_hat_strategy)
def test_xi_identities(sign, r_hat):
    nu = nu_from_modulus(abs(r_hat))
    x12, x21 = xi_coefficients(r_hat, nu, sign)
    assert abs(x12 * x21 - nu) < 1e-12 * max(1.0, abs(nu))
    assert abs(abs(x12) ** 2 + nu) < 1e-10


@settings(max_examples=50)
@given(r_hat=r_hat_strategy)
def test_xi_against_mpmath(r_hat):
    nu = nu_from_modulus(abs(r_hat))
    pref = mpmath.sqrt(2 * mpmath.pi) * mpmath.exp(-mpmath.pi * nu / 2)
    ref12 = pref * mpmath.expjpi(0.25) / (mpmath.mpc(r_hat) * mpmath.gamma(mpmath.mpc(0, -nu)))
    ref21 = -pref * mpmath.expjpi(-0.25) / (mpmath.conj(mpmath.mpc(r_hat)) * mpmath.gamma(mpmath.mpc(0, nu)))
    x12, x21 = xi_coefficients(r_hat, nu)
    assert abs(x12 - complex(ref12)) < 1e-12 * abs(complex(ref12))
    assert abs(x21 - complex(ref21)) < 1e-12 * abs(complex(ref21))


def test_xi_minus_phase_point_is_conjugate_model():
    r = 0.4 - 0.9j
    nu = nu_from_modulus(abs(r))
    p12, p21 = xi_coefficients(r, nu, 1)
    m12, m21 = xi_coefficients(np.conj(r), nu, -1)
    assert m12 == pytest.approx(np.conj(p12), rel=1e-14)
    assert m21 == pytest.approx(np.conj(p21), rel=1e-14)


def test_gamma_overflow_guard():
    with pytest.raises(errors.GammaOverflow):
        xi_coefficients(1.0 + 0j, nu0=-60.0)


# --- M1 pieces -------------------------------------------------------------------------


def test_m1_pc_structure():
    np.testing.assert_array_equal(m1_pc(0, 0), np.zeros((2, 2)))
    m = m1_pc(0.3 + 0.1j, -0.2j)
    assert np.trace(m) == 0
    assert m[0, 1] == 0.3 + 0.1j and m[1, 0] == 0.2j


def _random_sl2(rng):
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return m / np.sqrt(np.linalg.det(m))


def test_m1_err_zero_and_identity_cases():
    rng = np.random.default_rng(3)
    z = np.zeros((2, 2))
    assert np.all(m1_err(_random_sl2(rng), _random_sl2(rng), z, z, 0.8, -1.0, 5.0) == 0)
    pp, pm = m1_pc(0.2 + 0.3j, 0.1 - 0.4j), m1_pc(-0.5j, 0.3)
    k0, alpha, t = 0.8, -1.0, 5.0
    expected = -1j * math.sqrt(-(k0**3) / (alpha * t)) * (pp - pm)
    got = m1_err(np.eye(2), np.eye(2), pp, pm, k0, alpha, t, relative_sign=-1)
    assert np.max(np.abs(got - expected)) < 1e-15


def test_m1_err_hand_expansion():
    rng = np.random.default_rng(11)
    mp, mm = _random_sl2(rng), _random_sl2(rng)
    xp, xm = (0.3 - 0.2j, 0.7 + 0.1j), (-0.4j, 0.25 + 0.5j)
    k0, alpha, t = 1.1, -3.0, 40.0
    err = m1_err(mp, mm, m1_pc(*xp), m1_pc(*xm), k0, alpha, t, relative_sign=-1)
    bracket = lambda m, x: m[0, 0] ** 2 * x[0] + m[0, 1] ** 2 * x[1]
    expected = math.sqrt(-(k0**3) / (alpha * t)) * (-1j) * (bracket(mp, xp) - bracket(mm, xm))
    assert abs(err[0, 1] - expected) < 1e-14


def test_m1_err_rejects_non_unimodular_mout():
    with pytest.raises(errors.NonUnimodularMout):
        m1_err(2 * np.eye(2), np.eye(2), m1_pc(1, 1), m1_pc(1, 1), 1.0, -1.0, 1.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k0=st.floats(0.1, 3.0), alpha=st.floats(-5, -0.1), t=st.floats(1.0, 500.0))
def test_g_coefficients_match_m1_err(seed, k0, alpha, t):
    rng = np.random.default_rng(seed)
    mp, mm = _random_sl2(rng), _random_sl2(rng)
    rp, rm = (complex(*rng.normal(size=2)) for _ in range(2))
    pcp = pc_coefficients(rp, nu_from_modulus(abs(rp)), 1)
    pcm = pc_coefficients(rm, nu_from_modulus(abs(rm)), -1)
    g1 = g_coefficient(mm, pcm, k0, alpha)
    g2 = g_coefficient(mp, pcp, k0, alpha)
    err = m1_err(mp, mm, m1_pc(pcp.Xi12, pcp.Xi21), m1_pc(pcm.Xi12, pcm.Xi21), k0, alpha, t)
    lhs = (g1 + g2) / math.sqrt(t)
    assert abs(lhs - 4j * err[0, 1]) < 1e-10 * max(1.0, abs(lhs))


# --- theorem2_eval ------------------------------------------------------------------------


def test_solitonless_reflectionless_is_zero():
    A, B, c = theorem2_eval(reflectionless([]), ConeSpec(-1, 1, 0.5, 2), 5.0, 5.0)
    assert A == 0 and B == 0 and c.g1 == 0 and c.g2 == 0


@pytest.mark.parametrize("variant", ["cone", "tilde"])
def test_single_soliton_collapses_to_closed_form(variant):
    data = reflectionless([DiscreteMode(K1, 1.0)])
    cone = ConeSpec(-1, 1, 0.5, 2)
    lo, hi = cone.cross_section(3.0)
    model = AsymptoticModel(data, cone, variant=variant)
    for x in np.linspace(lo, hi, 13):
        A, B, _ = model.evaluate(x, 3.0)
        Ac, Bc = one_soliton_closed(K1, x, 3.0, -2.0, 1.0)
        assert abs(A - Ac) < 1e-10
        assert abs(B - Bc) < 1e-6


def test_outside_cone_rejected(radiation):
    with pytest.raises(errors.OutsideCone):
        theorem2_eval(radiation, ConeSpec(-1, 1, 0.5, 2), 100.0, 5.0)


def test_model_option_validation(radiation):
    cone = ConeSpec(-1, 1, 0.5, 2)
    for kw in ({"variant": "x"}, {"t0_form": "x"}, {"b_form": "x"}):
        with pytest.raises(errors.ValidationError):
            AsymptoticModel(radiation, cone, **kw)


def test_B_correction_is_real(mixed):
    model = AsymptoticModel(mixed, ConeSpec(-1, 1, 2, 8))
    for t in (10.0, 20.0, 40.0):
        _, _, c = model.evaluate(4 * t + 0.3, t)
        assert c.mout_plus[0, 1] != 0
        corr = c.h1 + c.h2 + c.f1 + c.f2
        assert abs(corr.imag) < 1e-8 * max(1.0, abs(corr))
        assert abs(c.b_derived.imag) < 1e-8 * max(1.0, abs(c.b_derived))


def test_g_moduli_are_frozen_along_a_ray(radiation):
    # without solitons M_out = I and only the phase of r_hat moves with t;
    # |g1 + g2| itself oscillates because the two phase points interfere
    model = AsymptoticModel(radiation, ConeSpec(-1, 1, 0.5, 2))
    ref = None
    for t in (10.0, 20.0, 35.0, 80.0):
        _, _, c = model.evaluate(1.0 * t, t)
        assert c.k0 == pytest.approx(0.5, rel=1e-15)
        if ref is None:
            ref = (abs(c.g1), abs(c.g2))
        assert abs(abs(c.g1) - ref[0]) < 1e-8 and abs(abs(c.g2) - ref[1]) < 1e-8


def test_real_even_data_give_real_A(radiation):
    A, _, c = theorem2_eval(radiation, ConeSpec(-1, 1, 0.5, 2), 12.0, 10.0)
    assert abs(A.imag) < 1e-12 and abs(A) > 0


def test_t0_forms_agree_without_delta_minus_modes(radiation):
    cone = ConeSpec(-1, 1, 0.5, 2)
    a = theorem2_eval(radiation, cone, 12.0, 10.0, t0_form="T0")
    b = theorem2_eval(radiation, cone, 12.0, 10.0, t0_form="delta")
    assert a[0] == b[0]


def test_b_forms_and_json(mixed):
    cone = ConeSpec(-1, 1, 2, 8)
    _, Bp, c = theorem2_eval(mixed, cone, 80.3, 20.0, b_form="printed")
    _, Bd, d = theorem2_eval(mixed, cone, 80.3, 20.0, b_form="derived")
    assert Bd - Bp == pytest.approx(float((d.b_derived - (c.h1 + c.h2 + c.f1 + c.f2)).real) / math.sqrt(20.0))
    js = c.to_json()
    for key in ("k0", "g1", "g2", "h1", "h2", "f1", "f2", "mout_plus_k0", "xi_minus_k0"):
        assert key in js
    assert js["b_form"] == "printed" and len(js["g1"]) == 2
