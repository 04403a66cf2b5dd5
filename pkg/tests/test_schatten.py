import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelab import HALF_LINE, LORENTZ3, ArgumentError, NumericalError, ParameterError
from conelab.measures import AtomicMeasure
from conelab.quadrature import CONVERGED, DIVERGING
from conelab.schatten import (
    GramRealization,
    OperatorSpectrum,
    hs_integral,
    lower_bound_sum,
    rkt_cutoff,
    rkt_integral,
    schatten_norm,
    schatten_power_sum,
    spectrum,
    toeplitz_gram,
)
from oracles import onb_values


def _psd(rng, n, rank=None):
    a = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    return a @ a.conj().T


seeds = st.integers(0, 2**31 - 1)


def test_diagonal_spectrum_values():
    s = spectrum(np.diag([0.25, 0.5]))
    assert s.eigenvalues.tolist() == [0.5, 0.25]
    assert schatten_norm(s, 1.0) == pytest.approx(0.75, rel=1e-15)
    assert schatten_norm(s, 2.0) == pytest.approx(0.5590169943749475, rel=1e-15)
    assert schatten_norm(s, 0.5) == pytest.approx((math.sqrt(0.5) + 0.5) ** 2, rel=1e-15)
    assert schatten_norm(s, 0.5) == pytest.approx(1.45711, abs=1e-5)


def test_single_atom_gram():
    # K_1(i, i) = c_1 / 4 = 1 / (4π)
    G = toeplitz_gram(AtomicMeasure.point_mass(HALF_LINE, 1j), 1.0)
    assert G.matrix.shape == (1, 1)
    assert G.matrix[0, 0].real == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert G.matrix[0, 0].real == pytest.approx(0.0796, abs=1e-4)


def test_spectrum_input_errors():
    with pytest.raises(ArgumentError):
        spectrum(np.ones((2, 3)))
    with pytest.raises(ArgumentError):
        spectrum(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        spectrum(np.diag([1.0, -1.0]))
    with pytest.raises(ParameterError):
        schatten_power_sum(spectrum(np.eye(2)), 0.0)


def test_spectrum_empty_and_zero():
    assert len(spectrum(np.zeros((0, 0)))) == 0
    assert schatten_norm(spectrum(np.zeros((3, 3))), 0.5) == 0.0


def test_operator_spectrum_rejects_unsorted():
    with pytest.raises(ArgumentError):
        OperatorSpectrum([0.1, 0.2])


def test_gram_json_roundtrip():
    mu = AtomicMeasure(HALF_LINE, [1j, 0.5 + 2j], [1.0, 0.3])
    G = toeplitz_gram(mu, 1.0)
    back = GramRealization.from_dict(json.loads(G.to_json()))
    assert np.array_equal(back.matrix, G.matrix)
    s = spectrum(G)
    assert OperatorSpectrum.from_dict(json.loads(s.to_json())).eigenvalues.tolist() == s.eigenvalues.tolist()
    assert s.source["atoms"] == 2


def test_gram_atom_limit():
    pts = 1j * np.linspace(1, 2, 5)
    with pytest.raises(ParameterError):
        toeplitz_gram(AtomicMeasure(HALF_LINE, pts, np.ones(5)), 1.0, max_atoms=4)


@pytest.mark.parametrize("backend", [HALF_LINE, LORENTZ3])
def test_gram_hermitian_psd_and_trace(backend):
    rng = np.random.default_rng(4)
    pts = rng.normal(scale=0.5, size=(12, backend.n)) + 1j * backend.identity * rng.uniform(0.5, 2.0, (12, 1))
    mu = AtomicMeasure(backend, pts, rng.uniform(0.1, 1.0, 12))
    G = toeplitz_gram(mu, 1.2)
    assert np.array_equal(G.matrix, G.matrix.conj().T)
    s = spectrum(G)
    assert np.all(s.eigenvalues >= 0)
    # trace of T_μ is ∫ K(z, z) dμ
    from conelab.geometry import kernel

    tr = sum(c * kernel(backend, 1.2, p, p).real for p, c in zip(mu.points, mu.masses))
    assert schatten_norm(s, 1.0) == pytest.approx(tr, rel=1e-12)


def test_gram_spectrum_matches_basis_matrix():
    # T_μ in the orthonormal basis e_k: M_jk = Σ c_i e_k(w_i) conj(e_j(w_i))
    nu = 1.0
    pts = np.array([1j, 0.3 + 1.4j, -0.4 + 0.8j])
    masses = np.array([1.0, 0.5, 2.0])
    E = onb_values(nu, 300, pts)
    M = (np.conj(E) * masses[None, :]) @ E.T
    ref = np.sort(np.linalg.eigvalsh(M))[::-1][:3]
    s = spectrum(toeplitz_gram(AtomicMeasure(HALF_LINE, pts, masses), nu))
    assert np.allclose(s.eigenvalues, ref, rtol=1e-8)


@given(seeds, st.integers(1, 8))
def test_schatten_monotone_in_p(seed, n):
    s = spectrum(_psd(np.random.default_rng(seed), n))
    ps = [0.3, 0.5, 1.0, 1.5, 2.0, 4.0]
    vals = [schatten_norm(s, p) for p in ps]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


@given(seeds, st.integers(1, 8))
def test_schatten_two_is_frobenius(seed, n):
    A = _psd(np.random.default_rng(seed), n)
    assert schatten_norm(spectrum(A), 2.0) == pytest.approx(np.linalg.norm(A), rel=1e-12)


@given(seeds, st.integers(1, 8), st.floats(1.0, 4.0))
def test_schatten_triangle_inequality(seed, n, p):
    rng = np.random.default_rng(seed)
    A, B = _psd(rng, n), _psd(rng, n)
    lhs = schatten_norm(spectrum(A + B), p)
    assert lhs <= (schatten_norm(spectrum(A), p) + schatten_norm(spectrum(B), p)) * (1 + 1e-12)


@given(seeds, st.integers(1, 8), st.floats(0.2, 2.0))
def test_entrywise_sum_dominates_schatten(seed, n, p):
    A = _psd(np.random.default_rng(seed), n)
    assert schatten_power_sum(spectrum(A), p) <= lower_bound_sum(A, p) * (1 + 1e-10)


@given(seeds, st.integers(1, 6))
def test_schatten_unitarily_invariant(seed, n):
    rng = np.random.default_rng(seed)
    A = _psd(rng, n)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    B = Q @ A @ Q.conj().T
    B = 0.5 * (B + B.conj().T)
    assert schatten_norm(spectrum(B), 0.7) == pytest.approx(schatten_norm(spectrum(A), 0.7), rel=1e-9)


@given(seeds, st.integers(1, 5), st.integers(1, 5), st.floats(0.3, 3.0))
def test_direct_sum_additive(seed, n, m, p):
    rng = np.random.default_rng(seed)
    A, B = _psd(rng, n), _psd(rng, m)
    D = np.zeros((n + m, n + m), dtype=complex)
    D[:n, :n], D[n:, n:] = A, B
    lhs = schatten_power_sum(spectrum(D), p)
    rhs = schatten_power_sum(spectrum(A), p) + schatten_power_sum(spectrum(B), p)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_low_rank_null_space_is_zero():
    A = _psd(np.random.default_rng(0), 10, rank=3)
    s = spectrum(A)
    assert np.count_nonzero(s.eigenvalues) == 3


def test_rkt_cutoff_values():
    assert rkt_cutoff(HALF_LINE, 1.0, 0) == pytest.approx(0.5)
    assert rkt_cutoff(HALF_LINE, 1.0, 1) == pytest.approx(0.25)
    assert rkt_cutoff(LORENTZ3, 1.0, 1) == pytest.approx(2 / 4.5)


def test_rkt_verdicts_flip_with_m():
    mu = AtomicMeasure.point_mass(HALF_LINE, 1j)
    r0 = rkt_integral(mu, 1.0, 0, 0.4)
    r1 = rkt_integral(mu, 1.0, 1, 0.4)
    assert not r0.admissible and r0.verdict == DIVERGING
    assert r1.admissible and r1.verdict == CONVERGED


def test_hs_ratio_m0_closed_form():
    # ∫ ‖T_μ k_z‖² dλ / ‖T_μ‖²_{S_2} = 2^{r(ν+n/r)} / c_ν, independent of μ
    nu = 1.0
    expected = 2 ** (nu + 1) / HALF_LINE.kernel_constant(nu)
    for mu in (
        AtomicMeasure.point_mass(HALF_LINE, 1j),
        AtomicMeasure(HALF_LINE, [1j, 0.5 + 1.5j, -0.3 + 0.6j], [1.0, 0.4, 2.0]),
    ):
        res = hs_integral(mu, nu, 0, rtol=1e-5)
        assert res.report.verdict == CONVERGED
        assert res.ratio == pytest.approx(expected, rel=2e-3)
    assert expected == pytest.approx(4 * math.pi)


def test_hs_ratio_m1_measure_independent():
    nu = 1.0
    ratios = [
        hs_integral(mu, nu, 1, rtol=1e-5).ratio
        for mu in (
            AtomicMeasure.point_mass(HALF_LINE, 2j),
            AtomicMeasure(HALF_LINE, [1j, 1 + 1j], [1.0, 1.0]),
            AtomicMeasure(HALF_LINE, [0.5j, 0.2 + 0.9j, 3j], [0.3, 1.0, 2.0]),
        )
    ]
    assert max(ratios) / min(ratios) - 1 < 0.01


def test_hs_rejects_negative_m():
    with pytest.raises(ParameterError):
        hs_integral(AtomicMeasure.point_mass(HALF_LINE, 1j), 1.0, -1)
