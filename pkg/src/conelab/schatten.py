"""
Toeplitz operators of atomic measures as finite Gram matrices.

For ``μ = Σ c_i δ_{w_i}`` the operator ``T_μ = Σ c_i K_{w_i} ⟨·, K_{w_i}⟩``
has the same nonzero spectrum as ``G_ij = √(c_i c_j) K_ν(w_i, w_j)``, so
Schatten norms are exact up to the eigensolve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ArgumentError, NumericalError, ParameterError
from .geometry import TruncationRegion, kernel, normalized_box_kernel
from .measures import AtomicMeasure, _region_center, berezin_m_field, lp_lambda_norm
from .quadrature import Budget, ConvergenceReport, integrate_tube

__all__ = [
    "GramRealization",
    "OperatorSpectrum",
    "toeplitz_gram",
    "spectrum",
    "schatten_norm",
    "schatten_power_sum",
    "hs_integral",
    "rkt_integral",
    "HSResult",
    "RKTResult",
    "lower_bound_sum",
]

MAX_ATOMS = 64


def _matrix_to_json(a: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(a, dtype=complex)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


@dataclass
class GramRealization:
    """Hermitian PSD matrix ``√(c_i c_j) K_ν(w_i, w_j)`` with its generating data."""

    matrix: np.ndarray
    atoms: AtomicMeasure
    nu: float

    def to_dict(self) -> dict:
        return {"nu": self.nu, "measure": self.atoms.to_dict(), "matrix": _matrix_to_json(self.matrix)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "GramRealization":
        return cls(_matrix_from_json(d["matrix"]), AtomicMeasure.from_dict(d["measure"]), float(d["nu"]))


@dataclass
class OperatorSpectrum:
    """Non-negative eigenvalues in descending order."""

    eigenvalues: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float).ravel()
        if np.any(np.diff(ev) > 0) or (ev.size and ev.min() < 0):
            raise ArgumentError("eigenvalues must be non-negative and descending")
        self.eigenvalues = ev

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(v) for v in self.eigenvalues], "source": self.source}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "OperatorSpectrum":
        return cls(d["eigenvalues"], d.get("source", {}))


def toeplitz_gram(mu: AtomicMeasure, nu: float, max_atoms: int = MAX_ATOMS) -> GramRealization:
    """Gram realization of ``T_μ`` on ``A²_ν``.

    Only the upper triangle is evaluated; the lower one is its conjugate,
    so the result is Hermitian exactly.
    """
    b = mu.backend
    b.check_nu(nu)
    N = len(mu)
    if N > max_atoms:
        raise ParameterError(f"at most {max_atoms} atoms are supported, got {N}")
    P = mu.points
    K = np.asarray(kernel(b, nu, P[:, None, :], P[None, :, :]), dtype=complex)
    sq = np.sqrt(mu.masses)
    G = sq[:, None] * K * sq[None, :]
    iu = np.triu_indices(N, 1)
    G[(iu[1], iu[0])] = np.conj(G[iu])
    G[np.diag_indices(N)] = G.diagonal().real
    tr = float(G.diagonal().real.sum())
    if not np.all(G.diagonal().real > 0):
        raise NumericalError("Gram diagonal must be positive")
    lo = float(_accel.jacobi_eigvalsh(G).min()) if N > 1 else tr
    if lo < -1e-10 * tr:
        raise NumericalError(f"Gram matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
    return GramRealization(G, mu, float(nu))


def spectrum(G, source: dict | None = None) -> OperatorSpectrum:
    """Eigenvalues of a Hermitian PSD matrix, clamped at 0 and sorted.

    Values at or below ``n·eps·λ_max`` are set to zero, so ``p < 1`` power
    sums do not pick up rounding noise from the null space.

    Accepts a :class:`GramRealization` or a plain square matrix.
    """
    if isinstance(G, GramRealization):
        A = G.matrix
        src = {"nu": G.nu, "atoms": len(G.atoms), "cone": G.atoms.backend.kind.value}
    else:
        A = np.asarray(G)
        src = {}
    if source:
        src.update(source)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ArgumentError("spectrum needs a square matrix")
    if A.shape[0] == 0:
        return OperatorSpectrum(np.zeros(0), src)
    scale = float(np.abs(A).max()) or 1.0
    if np.abs(A - A.conj().T).max() > 1e-12 * scale:
        raise ArgumentError("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    ev = np.asarray(_accel.jacobi_eigvalsh(A), dtype=float)
    if not np.all(np.isfinite(ev)):
        raise NumericalError("eigensolve failed")
    top = max(float(ev.max()), 0.0)
    tr = float(np.abs(np.diag(A).real).sum())
    if ev.min() < -1e-10 * max(tr, top):
        raise NumericalError(f"matrix is not positive semidefinite (min eigenvalue {ev.min():.3e})")
    # eigenvalues at rounding level are zero (numerical rank)
    ev = np.where(ev <= A.shape[0] * np.finfo(float).eps * top, 0.0, ev)
    ev = np.sort(ev)[::-1]
    return OperatorSpectrum(ev, src)


def schatten_power_sum(spec: OperatorSpectrum, p: float) -> float:
    """``Σ λ_j^p`` (the p-th power of the norm)."""
    if not p > 0:
        raise ParameterError("p must be positive")
    ev = spec.eigenvalues[spec.eigenvalues > 0]
    return math.fsum((ev**p).tolist())


def schatten_norm(spec: OperatorSpectrum, p: float) -> float:
    """``(Σ λ_j^p)^{1/p}``."""
    s = schatten_power_sum(spec, p)
    return s ** (1.0 / p) if s > 0 else 0.0


def lower_bound_sum(A, p: float) -> float:
    """``Σ_{k,j} |A_jk|^p``, which dominates ``‖A‖_{S_p}^p`` for ``0 < p ≤ 2``."""
    a = np.abs(np.asarray(A)).ravel()
    return math.fsum((a[a > 0] ** p).tolist())


# ---------------------------------------------------------------------------
# integral identities
# ---------------------------------------------------------------------------


@dataclass
class HSResult:
    """``∫‖T_μ k_z^{ν,m}‖² dλ`` next to ``‖T_μ‖²_{S_2}``."""

    report: ConvergenceReport
    s2_squared: float

    @property
    def integral(self) -> float:
        return self.report.value

    @property
    def ratio(self) -> float:
        return self.report.value / self.s2_squared

    def to_dict(self) -> dict:
        return {"integral": self.integral, "s2_squared": self.s2_squared, "ratio": self.ratio, "report": self.report.to_dict()}


def _measure_center(mu: AtomicMeasure):
    b = mu.backend
    x = mu.points.real.mean(axis=0)
    if b.n == 1:
        y = math.exp(float(np.log(mu.points.imag[:, 0]).mean()))
        return x + 1j * y
    return x + 1j * b.identity


def hs_integral(
    mu: AtomicMeasure,
    nu: float,
    m: int,
    region: TruncationRegion | None = None,
    *,
    rtol: float = 1e-3,
    budget: Budget | None = None,
    seed: int = 0,
    **quad,
) -> HSResult:
    """Quadrature of ``‖T_μ k_z^{ν,m}‖²_{2,ν} dλ(z)`` and ``‖T_μ‖²_{S_2}``.

    With ``a_i = √c_i k_z^{ν,m}(w_i)`` the integrand is ``a* G a``.
    Extra keyword arguments go to the region-growth integrator.
    """
    if m < 0 or int(m) != m:
        raise ParameterError("m must be a non-negative integer")
    b = mu.backend
    G = toeplitz_gram(mu, nu)
    s2 = float(np.sum(np.abs(G.matrix) ** 2))
    sq = np.sqrt(mu.masses)
    P = mu.points
    GT = G.matrix.T.copy()
    dl = -2.0 * b.n_over_r

    def integrand(z):
        shape = z.shape[:-1]
        zz = z.reshape(-1, b.n)
        A = np.asarray(normalized_box_kernel(b, nu, int(m), zz[:, None, :], P[None, :, :])) * sq[None, :]
        val = np.einsum("qi,qi->q", A.conj(), A @ GT).real
        return (val * b.det(zz.imag) ** dl).reshape(shape)

    if region is None:
        center, kw = _measure_center(mu), {}
    else:
        center, kw = _region_center(b, region)
    kw.update(quad)
    rep = integrate_tube(b, integrand, center=center, rtol=rtol, budget=budget, seed=seed, **kw)
    return HSResult(rep, s2)


@dataclass
class RKTResult:
    """``∫ (μ̃^m)^p dλ`` next to ``‖T_μ‖^p_{S_p}``."""

    report: ConvergenceReport
    schatten_p: float
    admissible: bool

    @property
    def verdict(self) -> str:
        return self.report.verdict

    @property
    def ratio(self) -> float:
        return self.report.value / self.schatten_p

    def to_dict(self) -> dict:
        return {
            "integral": self.report.value,
            "schatten_p_power": self.schatten_p,
            "ratio": self.ratio,
            "admissible": self.admissible,
            "report": self.report.to_dict(),
        }


def rkt_cutoff(backend, nu: float, m: int) -> float:
    """Smallest admissible ``p``: ``(2n/r - 1)/(ν + n/r + 2m)``."""
    return (2 * backend.n_over_r - 1.0) / (nu + backend.n_over_r + 2 * m)


def rkt_integral(
    mu: AtomicMeasure,
    nu: float,
    m: int,
    p: float,
    region: TruncationRegion | None = None,
    *,
    rtol: float = 1e-3,
    budget: Budget | None = None,
    seed: int = 0,
) -> RKTResult:
    """``∫ (μ̃^m)^p dλ`` on growing regions, with ``‖T_μ‖^p_{S_p}``.

    Below the admissible range ``p(ν+n/r+2m) > 2n/r - 1`` the integral
    diverges for every nonzero atomic measure; it is still traced so the
    divergence is visible, and ``admissible`` is ``False``.
    """
    b = mu.backend
    if not p > 0:
        raise ParameterError("p must be positive")
    sp = schatten_power_sum(spectrum(toeplitz_gram(mu, nu)), p)
    admissible = p * (nu + b.n_over_r + 2 * m) > 2 * b.n_over_r - 1
    if region is None:
        region = _point_region(b, _measure_center(mu))
    rep = lp_lambda_norm(berezin_m_field(mu, nu, m), p, region, b, rtol=rtol, budget=budget, seed=seed)
    return RKTResult(rep, sp, bool(admissible))


def _point_region(backend, center) -> TruncationRegion:
    c = np.asarray(center).reshape(backend.n)
    if backend.n == 1:
        y = float(c.imag[0])
        return TruncationRegion(((c.real[0] - 4 * y, c.real[0] + 4 * y),), (y / 4, y * 4), 1.0)
    return TruncationRegion(tuple((v - 1.0, v + 1.0) for v in c.real), (0.25, 4.0), 2.0)
