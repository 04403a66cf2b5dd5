import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from conelab import HALF_LINE, LORENTZ3, ArgumentError, ParameterError
from conelab.geometry import ball_volume, invariant_ball_volume, make_lattice
from conelab.measures import (
    AtomicMeasure,
    KernelFunction,
    average,
    average_field,
    ball_mass,
    berezin,
    berezin_field,
    berezin_m,
    det_integral,
    lattice_lp_sum,
    lp_lambda_norm,
    mean_value_check,
    offdiag_sum,
    radius_variation_ratio,
)
from conelab.quadrature import CONVERGED, DIVERGING, disc_rule
from oracles import halfplane_det_integral

atom_x = st.integers(-40, 40).map(lambda k: k / 20)
atom_y = st.floats(0.2, 5.0)


@st.composite
def halfplane_measures(draw, max_atoms=5):
    k = draw(st.integers(1, max_atoms))
    xs = draw(st.lists(atom_x, min_size=k, max_size=k, unique=True))
    ys = draw(st.lists(atom_y, min_size=k, max_size=k))
    cs = draw(st.lists(st.floats(0.1, 3.0), min_size=k, max_size=k))
    return AtomicMeasure(HALF_LINE, np.array(xs) + 1j * np.array(ys), cs)


# -- atomic measures --------------------------------------------------------


def test_measure_validation():
    with pytest.raises(ArgumentError):
        AtomicMeasure(HALF_LINE, [1j], [0.0])
    with pytest.raises(ArgumentError):
        AtomicMeasure(HALF_LINE, [1 - 1j], [1.0])
    with pytest.raises(ArgumentError):
        AtomicMeasure(HALF_LINE, [1j, 1j], [1.0, 2.0])
    with pytest.raises(ArgumentError):
        AtomicMeasure(HALF_LINE, np.zeros(0, dtype=complex), [])


def test_measure_sum_merges_atoms():
    a = AtomicMeasure(HALF_LINE, [1j, 2j], [1.0, 2.0])
    b = AtomicMeasure(HALF_LINE, [2j, 3j], [0.5, 1.0])
    s = a + b
    assert len(s) == 3
    got = dict(zip(s.points[:, 0].tolist(), s.masses.tolist()))
    assert got == {1j: 1.0, 2j: 2.5, 3j: 1.0}


def test_measure_json_roundtrip():
    mu = AtomicMeasure(LORENTZ3, [[0.1 + 1j, 0.2j, -0.3 + 0.1j]], [2.5])
    back = AtomicMeasure.from_json(mu.to_json())
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.masses, mu.masses)
    assert json.loads(mu.to_json())["cone"] == mu.backend.kind.value


# -- transforms --------------------------------------------------------------


def test_berezin_point_mass_value():
    # |k_ν(i, i)|² = (2^{-(ν+1)})² · 1 with ν = 0.5
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    assert berezin(mu, 1j, 0.5) == pytest.approx(0.125, rel=1e-14)


def test_lattice_lp_sum_value():
    assert lattice_lp_sum([0.5, 0.25], 0.5) == pytest.approx(math.sqrt(0.5) + 0.5, rel=1e-15)
    assert lattice_lp_sum([0.0, 0.0], 0.3) == 0.0
    with pytest.raises(ArgumentError):
        lattice_lp_sum([-1.0], 1.0)
    with pytest.raises(ParameterError):
        lattice_lp_sum([1.0], 0.0)


@pytest.mark.parametrize("backend,nu", [(HALF_LINE, 1.0), (HALF_LINE, 0.5), (LORENTZ3, 1.0)])
def test_berezin_m0_is_rescaled_berezin(backend, nu):
    # unit-norm kernel vs the c_ν-free kernel: factor 2^{r(ν+n/r)} c_ν
    mu = AtomicMeasure(backend, [0.3 + 1j * 1.5 * backend.identity, -0.2 + 1j * 0.7 * backend.identity], [1.0, 2.0])
    w = 0.1 + 1j * 1.1 * backend.identity
    kappa = 2 ** (backend.r * (nu + backend.n_over_r)) * backend.kernel_constant(nu)
    assert berezin_m(mu, w, nu, 0) == pytest.approx(kappa * berezin(mu, w, nu), rel=1e-12)


def test_berezin_m0_halfplane_factor():
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    assert berezin_m(mu, 2j, 1.0, 0) / berezin(mu, 2j, 1.0) == pytest.approx(4 / math.pi, rel=1e-12)


@given(halfplane_measures(), atom_x, atom_y, st.floats(-3, 3))
def test_berezin_translation_invariant(mu, wx, wy, a):
    w = wx + 1j * wy
    assert berezin(mu.translated(a), w + a, 1.0) == pytest.approx(berezin(mu, w, 1.0), rel=1e-10)


@given(halfplane_measures(), atom_x, atom_y, st.floats(0.1, 10.0))
def test_berezin_dilation_covariant(mu, wx, wy, t):
    nu = 1.5
    h = HALF_LINE.transitive_action(t)
    w = wx + 1j * wy
    lhs = berezin(mu.pushforward(h, nu + 1), t * w, nu)
    assert lhs == pytest.approx(berezin(mu, w, nu), rel=1e-9)


def test_berezin_lorentz_group_covariant():
    rng = np.random.default_rng(2)
    pts = rng.normal(scale=0.3, size=(4, 3)) + 1j * (np.array([1.6, 0.3, -0.2]) + rng.uniform(0, 0.3, (4, 1)) * np.array([1, 0, 0]))
    mu = AtomicMeasure(LORENTZ3, pts, rng.uniform(0.5, 2.0, 4))
    h = LORENTZ3.transitive_action(np.array([2.0, 0.5, 0.7]))
    w = np.array([0.1, -0.2, 0.3]) + 1j * np.array([1.3, 0.1, 0.2])
    nu = 1.2
    lhs = berezin(mu.pushforward(h, nu + 1.5), h.apply(w), nu)
    assert lhs == pytest.approx(berezin(mu, w, nu), rel=1e-9)


@given(halfplane_measures(), atom_x, atom_y, st.floats(0.05, 0.9))
def test_average_nonnegative_and_positively_homogeneous(mu, wx, wy, delta):
    w = wx + 1j * wy
    a = average(mu, w, delta, 1.0)
    assert a >= 0
    assert average(mu.scaled(2.5), w, delta, 1.0) == pytest.approx(2.5 * a)


def test_average_point_mass_closed_form():
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j, 3.0)
    z = 0.05 + 1.02j
    assert ball_mass(mu, z, 0.3) == 3.0
    assert average(mu, z, 0.3, 1.0) == pytest.approx(3.0 / ball_volume(HALF_LINE, 1.0, z, 0.3))
    assert average(mu, 5j, 0.3, 1.0) == 0.0


# -- kernel test functions ----------------------------------------------------


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_kernel_function_norm_by_disc_rule(p):
    nu = 1.0
    f = KernelFunction.at(HALF_LINE, 1.0, 0.3 + 0.7j, coef=2.0)
    z, w = disc_rule(nu, 128, 512)
    val = np.sum(w * np.abs(f(z[:, None])) ** p) ** (1 / p)
    assert f.norm_p(p, nu) == pytest.approx(val, rel=1e-6)


def test_kernel_function_norm_by_tube_quadrature():
    from conelab.quadrature import integrate_tube

    p, nu = 1.5, 1.0
    f = KernelFunction.at(HALF_LINE, 1.0, 0.3 + 0.7j)
    rep = integrate_tube(HALF_LINE, lambda z: np.abs(f(z)) ** p * z[..., 0].imag ** (nu - 1), center=0.3 + 0.7j, rtol=1e-7)
    assert f.norm_p(p, nu) == pytest.approx(rep.value ** (1 / p), rel=1e-5)


def test_kernel_function_norm_boundary_exponent():
    # K_1(·, u) is not in L^1_1: p(σ + 1) = 2 is on the boundary
    with pytest.raises(ParameterError):
        KernelFunction.at(HALF_LINE, 1.0, 1j).norm_p(1.0, 1.0)


@given(st.floats(-4, 4))
def test_kernel_function_norm_translation_invariant(a):
    f = KernelFunction.at(LORENTZ3, 1.0, 1j * LORENTZ3.identity)
    assert f.translated(a).norm_p(1.5, 1.0) == pytest.approx(f.norm_p(1.5, 1.0), rel=1e-12)


# -- truncated integrals --------------------------------------------------------


def test_berezin_lp_integral_closed_form():
    # ∫ (δ_i)~^p dλ = ∫ |(z+i)/i|^{-2sp} y^{sp-2} dx dy with s = ν + 1
    nu, p = 1.0, 0.75
    s = nu + 1
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    rep = lp_lambda_norm(berezin_field(mu, nu), p, backend=HALF_LINE, rtol=1e-5)
    assert rep.verdict == CONVERGED
    assert rep.value == pytest.approx(halfplane_det_integral(2 * s * p, s * p - 1), rel=1e-3)


def test_berezin_lp_integral_diverges_below_cutoff():
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    rep = lp_lambda_norm(berezin_field(mu, 1.0), 0.4, backend=HALF_LINE)
    assert rep.verdict == DIVERGING


def test_average_lp_integral_by_independent_quadrature():
    # support is B_δ(i); the integrand is (C_δ y^2)^{-p} y^{-2} on the disc
    delta, p, nu = 0.4, 0.8, 1.0
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    rep = lp_lambda_norm(average_field(mu, delta, nu), p, backend=HALF_LINE)
    C = ball_volume(HALF_LINE, nu, 1j, delta)
    rho = math.sqrt(2) * delta
    c, R = math.cosh(rho), math.sinh(rho)
    half = lambda y: math.sqrt(max(R * R - (y - c) ** 2, 0.0))
    ref, _ = integrate.quad(lambda y: 2 * half(y) * (C * y**2) ** (-p) * y**-2, c - R, c + R, epsrel=1e-12)
    assert rep.value == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_det_integral_halfplane_scaling(t):
    alpha, p, nu = 3.0, 1.0, 1.0
    rep = det_integral(HALF_LINE, alpha, p, nu, t=t, rtol=1e-6)
    expected = HALF_LINE.det_integral_constant(alpha, p, nu) * t ** (-p * alpha + 1 + nu)
    assert rep.value == pytest.approx(expected, rel=1e-4)


def test_offdiag_sum_explicit():
    # z_k = i 2^k, j = 0: Σ_{k≥1} 2^{kβ} / (2^k + 1)^α
    pts = 1j * 2.0 ** np.arange(4)
    expected = sum(2.0 ** (2 * k) / (2.0**k + 1) ** 3 for k in range(1, 4))
    assert offdiag_sum(HALF_LINE, pts, 3.0, 2.0, 0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(4 / 27 + 16 / 125 + 64 / 729)


def test_offdiag_sum_names_violated_inequality():
    with pytest.raises(ParameterError, match="alpha > beta \\+ n/r - 1"):
        offdiag_sum(HALF_LINE, [1j, 2j], 2.0, 2.5, 0)
    with pytest.raises(ParameterError, match="beta > 2n/r - 1"):
        offdiag_sum(LORENTZ3, [1j * LORENTZ3.identity], 4.0, 1.5, 0)


def test_offdiag_sum_single_node_is_zero():
    assert offdiag_sum(HALF_LINE, [1j], 3.0, 2.0, 0) == 0.0


def test_offdiag_sum_translation_invariant():
    lat = make_lattice(HALF_LINE, 0.4, n_samples=0)
    a = offdiag_sum(HALF_LINE, lat, 3.0, 2.0, 5)
    b = offdiag_sum(HALF_LINE, lat.translated(1.7), 3.0, 2.0, 5)
    assert a == pytest.approx(b, rel=1e-12)


def test_mean_value_constant_function():
    delta = 0.3
    for b in (HALF_LINE, LORENTZ3):
        one = lambda z: np.ones(np.asarray(z).shape[:-1])
        got = mean_value_check(b, one, 1j * b.identity, delta, 2.0)
        assert got == pytest.approx(1.0 / (delta ** (-b.n) * invariant_ball_volume(b, delta)), rel=1e-10)


def test_mean_value_holomorphic_bounded():
    f = KernelFunction.at(HALF_LINE, 1.0, 0.2 + 0.5j)
    vals = [mean_value_check(HALF_LINE, f, z, 0.3, p) for z in (1j, 0.4 + 2j, -1 + 0.6j) for p in (0.5, 1, 2)]
    assert max(vals) < 10 and min(vals) > 0


def test_radius_variation_single_atom_closed_form():
    # p = 1, ν = 1: both integrands reduce to dλ on the ball
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    rv = radius_variation_ratio(mu, 1.0, 1.0, 0.4, 0.2)
    assert rv.value_delta == pytest.approx(invariant_ball_volume(HALF_LINE, 0.4), rel=1e-10)
    assert rv.ratio == pytest.approx(invariant_ball_volume(HALF_LINE, 0.4) / invariant_ball_volume(HALF_LINE, 0.2), rel=1e-9)


def test_radius_variation_zero_measure():
    rv = radius_variation_ratio(None, 1.0, 1.0, 0.4, 0.2)
    assert rv.value_delta == 0.0 and math.isnan(rv.ratio)


@given(halfplane_measures(max_atoms=3), st.floats(0.2, 4.0))
def test_radius_variation_homogeneous(mu, t):
    p = 0.8
    a = radius_variation_ratio(mu, 1.0, p, 0.4, 0.2)
    b = radius_variation_ratio(mu.scaled(t), 1.0, p, 0.4, 0.2)
    assert b.value_delta == pytest.approx(t**p * a.value_delta, rel=1e-10)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-10)
