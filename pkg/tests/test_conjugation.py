import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abist import errors
from abist.conjugation import (
    NuFunction,
    T0_at_phase,
    T_eval,
    conjugation_data,
    delta0,
    delta_boundary,
    delta_eval,
    endpoint_power,
    modulate_constants,
    nu_of,
    trace_s11,
)
from abist.phase_geometry import SpectrumPartition
from abist.spectral_transform import DiscreteMode, compute_scattering_data, default_kgrid, scattering_at

from conftest import sech_profile

KG = default_kgrid()
R_SYNTH = 0.8 * np.exp(-KG**2 / 2 + 2j * KG)
NU = nu_of(R_SYNTH, KG)
ZERO_NU = NuFunction.zero()


@pytest.fixture(scope="module")
def generic_data():
    # 1.5 sech: one eigenvalue at 0.25 i and a nonzero reflection coefficient
    return compute_scattering_data(sech_profile(1.5))


# --- nu ------------------------------------------------------------------------


def test_nu_examples():
    assert np.all(nu_of(np.zeros(4), np.arange(4.0)).values == 0)
    assert nu_of(np.ones(4), np.arange(4.0)).values == pytest.approx(-math.log(2) / (2 * math.pi))
    assert -math.log(2) / (2 * math.pi) == pytest.approx(-0.110318, abs=1e-6)
    r = math.sqrt(math.exp(2 * math.pi) - 1)
    assert nu_of(np.full(4, r), np.arange(4.0)).values == pytest.approx(-1.0, rel=1e-13)


def test_nu_sign(generic_data):
    nu = nu_of(generic_data)
    assert np.all(nu.values <= 0)
    assert np.all((nu.values == 0) == (generic_data.r == 0))
    assert nu(20.0) == 0.0


def test_nu_rejects_non_finite():
    with pytest.raises(errors.ValidationError):
        nu_of(np.array([1.0, np.nan]), np.array([0.0, 1.0]))


# --- delta ------------------------------------------------------------------------


def test_delta_trivial():
    assert delta_eval(ZERO_NU, 1.0, 0.3 + 0.2j) == 1
    assert delta_boundary(ZERO_NU, 1.0, 0.2, "plus") == 1
    assert delta_boundary(ZERO_NU, 1.0, 0.2, "minus") == 1


@pytest.mark.parametrize("nu0", [-0.05, -0.3, -1.0])
@pytest.mark.parametrize("k0", [0.5, 1.0, 2.5])
def test_delta_constant_nu_closed_form(nu0, k0):
    nu = NuFunction(np.linspace(-5, 5, 101), np.full(101, nu0))
    assert delta_eval(nu, k0, 1j * k0) == pytest.approx(math.exp(-math.pi * nu0 / 2), rel=1e-12)


def test_delta_tends_to_one():
    k0 = 1.0
    d5 = abs(delta_eval(NU, k0, 5 * k0) - 1)
    d10 = abs(delta_eval(NU, k0, 10 * k0) - 1)
    assert d10 < 0.6 * d5


def test_delta_jump_synthetic():
    k0 = 2.0
    for k in np.linspace(-1.9, 1.9, 50):
        ratio = delta_boundary(NU, k0, k, "plus") / delta_boundary(NU, k0, k, "minus")
        assert abs(ratio - math.exp(-2 * math.pi * float(NU(k)))) < 1e-12


@pytest.mark.parametrize("k", [-0.7, 0.0, 0.35, 0.9])
def test_delta_boundary_matches_off_axis_limits(k):
    k0 = 1.2
    up = delta_eval(NU, k0, k + 1e-3j)
    down = delta_eval(NU, k0, k - 1e-3j)
    assert abs(up - delta_boundary(NU, k0, k, "plus")) < 1e-4 * 10
    assert abs(down - delta_boundary(NU, k0, k, "minus")) < 1e-4 * 10
    # the limit converges linearly: a 10x smaller offset gets within 1e-4
    assert abs(delta_eval(NU, k0, k + 1e-4j) - delta_boundary(NU, k0, k, "plus")) < 1e-4
    assert abs(delta_eval(NU, k0, k - 1e-4j) - delta_boundary(NU, k0, k, "minus")) < 1e-4


def test_delta_outside_cut_has_no_jump():
    k0 = 1.0
    for k in (1.5, -2.0, 3.3):
        assert abs(delta_eval(NU, k0, k + 1e-9j) / delta_eval(NU, k0, k - 1e-9j) - 1) < 1e-8


def test_delta_guards():
    with pytest.raises(errors.TooCloseToCut):
        delta_eval(NU, 1.0, 0.5)
    with pytest.raises(errors.TooCloseToCut):
        delta_eval(NU, 1.0, 1.0005)
    with pytest.raises(errors.TooCloseToEndpoint):
        delta_boundary(NU, 1.0, 0.9995, "plus")
    with pytest.raises(errors.ValidationError):
        delta_boundary(NU, 1.0, 0.2, "up")


def test_delta_is_analytic_off_the_cut():
    # Cauchy's theorem on a square centred at 1 + 1i with side 1
    x, w = np.polynomial.legendre.leggauss(40)
    corners = [0.5 + 0.5j, 1.5 + 0.5j, 1.5 + 1.5j, 0.5 + 1.5j]
    total = 0j
    for a, b in zip(corners, corners[1:] + corners[:1]):
        z = (a + b) / 2 + (b - a) / 2 * x
        total += np.sum(w * np.array([delta_eval(NU, 1.2, zz) for zz in z])) * (b - a) / 2
    assert abs(total) < 1e-8


# --- T and T0 ---------------------------------------------------------------------


def test_T_trivial():
    assert T_eval(ZERO_NU, 1.0, [], 0.3 + 2j) == 1


@settings(max_examples=100, deadline=None)
@given(kr=st.floats(-4, 4), ki=st.floats(0.01, 3) | st.floats(-3, -0.01))
def test_T_reflection_symmetry(kr, ki):
    k = complex(kr, ki)
    poles = [0.3 + 0.4j, -0.5 + 0.2j]
    if min(abs(k - p) for p in poles + [np.conj(p) for p in poles]) < 1e-3:
        return
    val = T_eval(NU, 1.1, poles, k) * np.conj(T_eval(NU, 1.1, poles, np.conj(k)))
    assert abs(val - 1) < 1e-8


def test_T_large_k_expansion():
    k0, poles = 1.3, [0.2 + 0.5j, 0.1j + 0.4]
    s, w = np.polynomial.legendre.leggauss(200)
    integral = np.sum(w * NU(k0 * s)) * k0
    predicted = 1j * (2 * sum(p.imag for p in poles) - integral)
    k = 1e3
    assert abs(k * (T_eval(NU, k0, poles, k) - 1) - predicted) < 5e-3 * abs(predicted)


def test_T_pole_hit():
    with pytest.raises(errors.PoleHit):
        T_eval(NU, 1.0, [0.5 + 0.5j], 0.5 + 0.5j)


def test_T0_trivial():
    assert T0_at_phase(ZERO_NU, 1.0, [], 1) == 1
    assert T0_at_phase(ZERO_NU, 1.0, [], -1) == 1


def _ray_gap(k0, poles, sign, step):
    nu_p = float(NU(sign * k0))
    k = sign * k0 + step * np.exp(1j * np.pi / 4)
    return T0_at_phase(NU, k0, poles, sign) - T_eval(NU, k0, poles, k) / endpoint_power(k, k0, nu_p, sign)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("k0", [0.4, 1.5])
def test_T0_matches_ray_limit(sign, k0):
    gap = _ray_gap(k0, [], sign, 1e-3)
    assert abs(gap) < 1e-3


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("k0", [0.4, 1.5])
def test_T0_ray_limit_with_blaschke_factor(sign, k0):
    # a nearby Delta^- pole steepens T, so the gap at a fixed step grows;
    # it must still shrink linearly with the step
    gaps = [abs(_ray_gap(k0, [0.1 + 0.2j], sign, h)) for h in (1e-3, 1e-4, 1e-5)]
    assert gaps[2] < 1e-4
    assert 7 < gaps[0] / gaps[1] < 13 and 7 < gaps[1] / gaps[2] < 13


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("k0", [0.3, 0.8, 2.0])
def test_T0_window_and_reduced_agree(sign, k0):
    a = T0_at_phase(NU, k0, [], sign, method="window")
    b = T0_at_phase(NU, k0, [], sign, method="reduced")
    assert abs(a - b) < 1e-8
    assert abs(a) == pytest.approx(1.0, abs=1e-12)
    assert a == delta0(NU, k0, sign)


def test_conjugation_data_bundle():
    cd = conjugation_data(NU, 0.9, [0.2 + 0.3j])
    assert cd.nu_at_k0 == pytest.approx(float(NU(0.9)))
    assert cd.nu_at_minus_k0 == pytest.approx(float(NU(-0.9)))
    assert cd.T0_plus == T0_at_phase(NU, 0.9, [0.2 + 0.3j], 1)


# --- trace formula ----------------------------------------------------------------


def test_trace_trivial_and_single_mode():
    assert trace_s11([], ZERO_NU, 0.3 + 0.1j) == 1
    assert trace_s11([1j], ZERO_NU, 2j) == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("k", [1 + 1j, -0.5 + 0.3j, 0.2 + 2j, 2.0 + 0.1j])
def test_trace_matches_direct_scattering(generic_data, k):
    direct, _ = scattering_at(sech_profile(1.5), k)
    assert abs(trace_s11(generic_data.modes, nu_of(generic_data), k) - direct) < 1e-4


def test_trace_on_axis_rejected():
    with pytest.raises(errors.ValidationError):
        trace_s11([], NU, 1.0)


# --- modulated constants ---------------------------------------------------------------


def test_tilde_trivial():
    modes = [DiscreteMode(0.6 + 0.6j, 1.0), DiscreteMode(2j, 0.5j)]
    part = SpectrumPartition(delta_minus=(), delta_plus=(0, 1))
    out = modulate_constants(modes, part, ZERO_NU, 0.5, variant="tilde")
    assert [(m.k, m.c, m.flipped) for m in out] == [(m.k, m.c, False) for m in modes]


def test_cone_single_mode_unchanged():
    modes = [DiscreteMode(0.6 + 0.6j, 1.0 + 0.5j)]
    out = modulate_constants(modes, SpectrumPartition(inside=(0,)), ZERO_NU, 1.0, variant="cone")
    assert out[0].c == modes[0].c


def test_cone_two_modes_inside():
    k1, k2 = 0.6 + 0.6j, 0.7 + 0.5j
    modes = [DiscreteMode(k1, 1.0), DiscreteMode(k2, 2.0)]
    out = modulate_constants(modes, SpectrumPartition(inside=(0, 1)), ZERO_NU, 1.0, variant="cone")
    assert out[0].c == pytest.approx(((k1 - k2) / (k1 - k2.conjugate())) ** 2, rel=1e-15)
    assert out[1].c == pytest.approx(2 * ((k2 - k1) / (k2 - k1.conjugate())) ** 2, rel=1e-15)


def test_tilde_flips_delta_minus_modes():
    k1 = 0.3 + 0.2j
    modes = [DiscreteMode(k1, 0.7)]
    out = modulate_constants(modes, SpectrumPartition(delta_minus=(0,)), NU, 1.0, variant="tilde")
    d = delta_eval(NU, 1.0, k1)
    # s_-'(k1) = 1/(k1 - conj k1) for a single factor
    assert out[0].flipped
    assert out[0].c == pytest.approx(d**2 * (k1 - k1.conjugate()) ** 2 / 0.7, rel=1e-13)


def test_modulate_rejects_coincident_modes_and_unknown_variant():
    modes = [DiscreteMode(1j, 1.0), DiscreteMode(1j, 2.0)]
    with pytest.raises(errors.PoleHit):
        modulate_constants(modes, SpectrumPartition(), ZERO_NU, 1.0)
    with pytest.raises(errors.ValidationError):
        modulate_constants(modes[:1], SpectrumPartition(), ZERO_NU, 1.0, variant="other")
