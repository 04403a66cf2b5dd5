import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab import HALF_LINE, LORENTZ3, ArgumentError, DomainError, ParameterError, get_backend
from oracles import halfplane_det_integral, halfplane_kernel_constant, lorentz_det_integral

finite = st.floats(-3.0, 3.0, allow_nan=False)
positive = st.floats(0.1, 5.0)


@st.composite
def lorentz_points(draw):
    """Points ``t·(cosh η, sinh η cos φ, sinh η sin φ)`` of the open Lorentz cone."""
    t = draw(positive)
    eta = draw(st.floats(0.0, 2.0))
    phi = draw(st.floats(0.0, 2 * math.pi))
    return t * np.array([math.cosh(eta), math.sinh(eta) * math.cos(phi), math.sinh(eta) * math.sin(phi)])


def test_aliases_resolve():
    assert get_backend("halfplane") is HALF_LINE
    assert get_backend("lorentz") is LORENTZ3
    assert get_backend(LORENTZ3) is LORENTZ3
    with pytest.raises(ArgumentError):
        get_backend("siegel")


def test_shape_constants():
    assert (HALF_LINE.n, HALF_LINE.r, HALF_LINE.n_over_r) == (1, 1, 1.0)
    assert (LORENTZ3.n, LORENTZ3.r, LORENTZ3.n_over_r) == (3, 2, 1.5)


def test_trivial_space_rejected():
    with pytest.raises(ParameterError, match="nu > n/r - 1"):
        LORENTZ3.check_nu(0.5)
    HALF_LINE.check_nu(0.01)


def test_determinant_values():
    assert LORENTZ3.det([2.0, 1.0, 1.0]) == pytest.approx(2.0)
    assert HALF_LINE.det(3.0) == pytest.approx(3.0)
    assert not LORENTZ3.in_cone(np.array([1.0, 1.0, 0.5]))


def test_complex_det_log_outside_cone():
    with pytest.raises(DomainError):
        LORENTZ3.complex_det_log(np.array([1.0, 2.0, 0.0]) + 0j)


@given(lorentz_points(), lorentz_points())
def test_lorentz_complex_det_matches_polynomial(a, b):
    zeta = a + 1j * b
    lhs = LORENTZ3.complex_det_power(zeta, 1.0)
    rhs = zeta[0] ** 2 - zeta[1] ** 2 - zeta[2] ** 2
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


@given(lorentz_points(), st.floats(-2.0, 2.0))
def test_lorentz_branch_is_real_on_cone(a, s):
    v = LORENTZ3.complex_det_power(a + 0j, s)
    assert abs(v.imag) <= 1e-12 * abs(v)
    assert v.real == pytest.approx(LORENTZ3.det(a) ** s, rel=1e-10)


@given(lorentz_points(), lorentz_points())
def test_group_action_is_equivariant_for_det(y, v):
    g = LORENTZ3.transitive_action(y)
    assert np.allclose(g.apply(LORENTZ3.identity), y, rtol=1e-10, atol=1e-10)
    assert LORENTZ3.det(g.apply(v)) == pytest.approx(g.jacobian_power(1.0) * LORENTZ3.det(v), rel=1e-9)
    back = g.inverse().apply(g.apply(v))
    assert np.allclose(back, v, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.0, 3.5])
def test_halfplane_kernel_constant_closed_form(nu):
    assert HALF_LINE.kernel_constant(nu) == pytest.approx(halfplane_kernel_constant(nu), rel=1e-9)


def test_halfplane_c1_is_one_over_pi():
    assert HALF_LINE.kernel_constant(1.0) == pytest.approx(1 / math.pi, rel=1e-12)


@pytest.mark.parametrize("alpha,p,nu", [(3.0, 1.0, 1.0), (2.0, 0.8, 0.5), (1.5, 2.0, 1.0), (5.0, 0.8, 2.0)])
def test_halfplane_det_integral_closed_form(alpha, p, nu):
    assert HALF_LINE.det_integral_constant(alpha, p, nu) == pytest.approx(
        halfplane_det_integral(p * alpha, nu), rel=1e-8
    )


def test_det_integral_divergence_named():
    with pytest.raises(ParameterError, match=r"p\*alpha > nu \+ 2n/r - 1"):
        LORENTZ3.det_integral_constant(1.0, 1.0, 1.0)


@pytest.mark.parametrize("q,nu", [(6.0, 1.0), (5.0, 2.0)])
def test_lorentz_det_integral_cylindrical_oracle(q, nu):
    assert LORENTZ3.det_integral_constant(q, 1.0, nu) == pytest.approx(lorentz_det_integral(q, nu), rel=1e-4)


def test_lorentz_det_integral_by_monte_carlo():
    q, nu = 6.0, 1.0
    const = LORENTZ3.det_integral_constant(q, 1.0, nu)
    rng = np.random.default_rng(3)
    n = 400_000
    # x = tan(πt/2) with t uniform on (-1, 1)^3 (density 1/8)
    t = rng.uniform(-1, 1, size=(n, 3))
    x = np.tan(0.5 * np.pi * t)
    jac_x = 8.0 * np.prod(0.5 * np.pi / np.cos(0.5 * np.pi * t) ** 2, axis=1)
    # y0 = tan(πu/2), (y1, y2) uniform in the square of half-width y0
    u = rng.uniform(size=(n, 3))
    y0 = np.tan(0.5 * np.pi * u[:, 0])
    y = np.stack([y0, y0 * (2 * u[:, 1] - 1), y0 * (2 * u[:, 2] - 1)], axis=1)
    jac_y = 0.5 * np.pi / np.cos(0.5 * np.pi * u[:, 0]) ** 2 * (2 * y0) ** 2
    inside = LORENTZ3.in_cone(y)
    y, x, w = y[inside], x[inside], (jac_x * jac_y)[inside]
    zeta = (x + 1j * (y + LORENTZ3.identity)) / 1j
    val = np.abs(LORENTZ3.complex_det_power(zeta, -q)) * LORENTZ3.det(y) ** (nu - 1.5) * w
    assert val.sum() / n == pytest.approx(const, rel=0.1)
