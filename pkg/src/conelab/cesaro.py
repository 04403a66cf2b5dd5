"""
Cesàro-type (Volterra) operators on the upper half-plane.

``T_g f = F`` solves ``□F = f·□g`` with ``□ = (1/i) d/dz``.  Matrix
entries against the orthonormal basis

    e_k(z) = n_k (z - i)^k / (z + i)^{k+ν+1}

come from ``⟨T_g f, h⟩_ν = C_ν^{-1} ∫ f □g h̄ dV_{ν+1}``, where ``C_ν`` is
the box constant (``□K_ν = C_ν K_{ν+1}``).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .cone import get_backend
from .errors import ArgumentError, ParameterError, UnsupportedBackendError
from .geometry import Lattice, TruncationRegion, box_constant
from .measures import ScalarField, _push_ball, lattice_lp_sum, lp_lambda_norm
from .quadrature import CONVERGED, Budget, ConvergenceReport, ball_rule, disc_rule
from .schatten import spectrum

__all__ = [
    "Symbol",
    "BasisFunction",
    "onb_halfplane",
    "cesaro_form",
    "cesaro_matrix",
    "cesaro_schatten",
    "CesaroResult",
    "besov_seminorm",
    "cesaro_toeplitz_check",
    "besov_lattice_sum",
]

# resolution of the whole-plane rule used for all matrix entries
N_RHO = 96
N_THETA = 1024


def _halfline_only(backend):
    b = get_backend(backend)
    if b.n != 1:
        raise UnsupportedBackendError("Cesàro operators are implemented on the half-plane only")
    return b


@dataclass(frozen=True)
class Symbol:
    """A symbol ``g`` with a closed-form ``□g``.

    ``kind`` is one of ``const``, ``z``, ``power`` (``(z+i)^{-eps}``) or
    ``log`` (``log(z+i)``); ``coef`` multiplies the whole symbol.
    """

    kind: str
    eps: float = 1.0
    coef: complex = 1.0

    KINDS = ("const", "z", "power", "log")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ArgumentError(f"unknown symbol kind {self.kind!r}; choose from {', '.join(self.KINDS)}")
        if self.kind == "power" and not self.eps > 0:
            raise ParameterError("power symbols need eps > 0")

    @classmethod
    def parse(cls, text: str) -> "Symbol":
        """``"const"``, ``"z"``, ``"log"`` or ``"power:EPS"``."""
        kind, _, arg = text.strip().partition(":")
        return cls(kind, float(arg)) if arg else cls(kind)

    @property
    def label(self) -> str:
        base = {"const": "1", "z": "z", "log": "log(z+i)"}.get(self.kind, f"(z+i)^-{self.eps:g}")
        return base if self.coef == 1 else f"{self.coef:g}*{base}"

    def __mul__(self, c) -> "Symbol":
        return Symbol(self.kind, self.eps, self.coef * c)

    __rmul__ = __mul__

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "const":
            v = np.ones_like(z)
        elif self.kind == "z":
            v = z
        elif self.kind == "power":
            v = (z + 1j) ** (-self.eps)
        else:
            v = np.log(z + 1j)
        return self.coef * v

    def box(self, z):
        """``□g = (1/i) g'``."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "const":
            d = np.zeros_like(z)
        elif self.kind == "z":
            d = np.ones_like(z)
        elif self.kind == "power":
            d = -self.eps * (z + 1j) ** (-self.eps - 1.0)
        else:
            d = 1.0 / (z + 1j)
        return self.coef * d / 1j

    @property
    def is_zero(self) -> bool:
        return self.kind == "const" or self.coef == 0


@dataclass(frozen=True)
class BasisFunction:
    """``e_k(z) = n_k (z-i)^k / (z+i)^{k+ν+1}``."""

    nu: float
    k: int
    norm_factor: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim and z.shape[-1] == 1:
            z = z[..., 0]
        return self.norm_factor * (z - 1j) ** self.k / (z + 1j) ** (self.k + self.nu + 1.0)


@functools.lru_cache(maxsize=512)
def _norm_factor(nu: float, k: int) -> float:
    z, w = disc_rule(nu, N_RHO, N_THETA)
    raw = np.abs((z - 1j) ** k / (z + 1j) ** (k + nu + 1.0)) ** 2
    return 1.0 / math.sqrt(math.fsum((w * raw).tolist()))


def onb_halfplane(nu: float, k: int, backend="halfline") -> BasisFunction:
    """The ``k``-th orthonormal basis function of ``A²_ν`` on the half-plane.

    ``n_k`` is measured by quadrature, so the basis is orthonormal to the
    accuracy of the whole-plane rule.
    """
    b = _halfline_only(backend)
    b.check_nu(nu)
    if k < 0 or int(k) != k:
        raise ParameterError("k must be a non-negative integer")
    return BasisFunction(float(nu), int(k), _norm_factor(float(nu), int(k)))


def cesaro_form(g: Symbol, f, h, nu: float, *, n_rho: int = N_RHO, n_theta: int = N_THETA) -> complex:
    """``⟨T_g f, h⟩_ν`` by quadrature of ``C_ν^{-1} ∫ f □g h̄ dV_{ν+1}``."""
    if g.is_zero:
        return 0j
    z, w = disc_rule(nu + 1.0, n_rho, n_theta)
    val = np.sum(w * f(z) * g.box(z) * np.conj(h(z)))
    return complex(val / box_constant(get_backend("halfline"), nu))


def _basis_values(nu, K, z):
    return np.stack([onb_halfplane(nu, k)(z) for k in range(K)])


def cesaro_matrix(g: Symbol, nu: float, K: int) -> np.ndarray:
    """``M_jk = ⟨T_g e_k, e_j⟩_ν`` for ``j, k < K``."""
    if g.is_zero:
        return np.zeros((K, K), dtype=complex)
    z, w = disc_rule(nu + 1.0, N_RHO, N_THETA)
    E = _basis_values(nu, K, z)
    C = box_constant(get_backend("halfline"), nu)
    return (np.conj(E) * w[None, :]) @ (E * g.box(z)[None, :]).T / C


def _singular_values(M) -> np.ndarray:
    ev = np.asarray(_accel.jacobi_eigvalsh(M.conj().T @ M), dtype=float)
    return np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]


@dataclass
class CesaroResult:
    """``‖T_g‖_{S_p}`` on the first ``K`` basis functions, plus the K-sequence."""

    value: float
    sequence: dict = field(default_factory=dict)

    @property
    def relative_change(self) -> float:
        """Relative change between the last two basis sizes."""
        ks = sorted(self.sequence)
        if len(ks) < 2 or self.sequence[ks[-1]] == 0:
            return 0.0
        a, b = self.sequence[ks[-2]], self.sequence[ks[-1]]
        return abs(b - a) / abs(b)

    def to_dict(self) -> dict:
        return {"value": self.value, "sequence": {str(k): v for k, v in sorted(self.sequence.items())}}


def cesaro_schatten(g: Symbol, nu: float, p: float, K: int = 32, region: TruncationRegion | None = None) -> CesaroResult:
    """Schatten ``p``-norm of the truncated matrix of ``T_g``.

    The sequence holds the value at ``K/4, K/2, K`` (those at least 2).
    ``region`` is accepted for a uniform interface; the whole-plane rule
    needs no truncation.
    """
    if not 1 <= p < 2:
        raise ParameterError("cesaro_schatten requires 1 <= p < 2")
    if not 1 <= K <= 32:
        raise ParameterError("basis size K must lie in [1, 32]")
    get_backend("halfline").check_nu(nu)
    M = cesaro_matrix(g, nu, K)
    seq = {}
    for k in sorted({max(K // 4, 1), max(K // 2, 1), K}):
        s = _singular_values(M[:k, :k])
        seq[k] = math.fsum((s[s > 0] ** p).tolist()) ** (1.0 / p) if np.any(s > 0) else 0.0
    return CesaroResult(seq[K], seq)


def besov_seminorm(
    g: Symbol, p: float, region: TruncationRegion | None = None, *, rtol: float = 1e-3, budget: Budget | None = None
) -> ConvergenceReport:
    """``∫ |Im z · □g(z)|^p dλ`` on growing regions, with a verdict."""
    if g.is_zero:
        return ConvergenceReport(0.0, CONVERGED, [0.0], [0.0], 0)
    f = ScalarField(lambda z: np.abs(z.imag[..., 0] * g.box(z[..., 0])), f"besov({g.label})")
    return lp_lambda_norm(f, p, region, "halfline", rtol=rtol, budget=budget)


def _symbol_measure_diag(g: Symbol, nu: float, K: int) -> np.ndarray:
    # ⟨T_μ e_j, e_j⟩ for dμ_g = C_ν^{-2} |□g|² y^{ν+1} dx dy
    z, w = disc_rule(nu + 2.0, N_RHO, N_THETA)
    E = _basis_values(nu, K, z)
    C = box_constant(get_backend("halfline"), nu)
    dens = w * np.abs(g.box(z)) ** 2 / C**2
    return (np.abs(E) ** 2) @ dens


def cesaro_toeplitz_check(g: Symbol, nu: float, p: float, K: int = 16) -> dict:
    """Both sides of ``Σ_j |⟨T_g e_j, e_j⟩|^p ≤ Σ_j ⟨T_μ e_j, e_j⟩^{p/2}``."""
    M = cesaro_matrix(g, nu, K)
    diag = np.abs(np.diag(M))
    tm = _symbol_measure_diag(g, nu, K)
    return {
        "lhs": lattice_lp_sum(diag, p),
        "rhs": lattice_lp_sum(tm, p / 2.0),
        "termwise": [float(a**p - b ** (p / 2)) for a, b in zip(diag, tm)],
    }


def besov_lattice_sum(g: Symbol, lattice: Lattice, nu: float, p: float, size: int = 0) -> float:
    """``Σ_j (μ_g(B_j) / (Im ζ_j)^{ν+1})^{p/2}`` over δ-balls about the lattice nodes."""
    b = _halfline_only(lattice.backend)
    zeta, w = ball_rule(b, float(lattice.delta), size)
    C = box_constant(b, nu)
    vals = []
    for c in lattice.nodes:
        z = _push_ball(b, c, zeta)
        y = z.imag[:, 0]
        mass = math.fsum((w * np.abs(g.box(z[:, 0])) ** 2 * y ** (nu + 3.0)).tolist()) / C**2
        vals.append(mass / c.imag[0] ** (nu + 1.0))
    return lattice_lp_sum(vals, p / 2.0)
