"""
Symmetric-cone backends.

Two irreducible cones are supported: the half-line (rank 1, the upper
half-plane as tube domain) and the three-dimensional Lorentz cone
(rank 2).  Points are numpy arrays whose trailing axis has length ``n``;
for the half-line a bare scalar or an array without a trailing unit axis
is accepted and promoted.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ArgumentError, DomainError, ParameterError

__all__ = [
    "ConeKind",
    "ConeBackend",
    "GroupElement",
    "TubePoint",
    "HALF_LINE",
    "LORENTZ3",
    "get_backend",
]


class ConeKind(str, enum.Enum):
    HALF_LINE = "halfline"
    LORENTZ3 = "lorentz3"


_ALIASES = {
    "halfline": ConeKind.HALF_LINE,
    "halfplane": ConeKind.HALF_LINE,
    "half_line": ConeKind.HALF_LINE,
    "rank1": ConeKind.HALF_LINE,
    "lorentz3": ConeKind.LORENTZ3,
    "lorentz": ConeKind.LORENTZ3,
}

_MINKOWSKI = np.diag([1.0, -1.0, -1.0])


@dataclass(frozen=True)
class TubePoint:
    """A point ``z = x + iy`` of the tube domain."""

    x: tuple
    y: tuple

    @classmethod
    def from_complex(cls, z) -> "TubePoint":
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return cls(tuple(float(v) for v in z.real), tuple(float(v) for v in z.imag))

    @property
    def z(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float) + 1j * np.asarray(self.y, dtype=float)


@dataclass(frozen=True)
class GroupElement:
    """Element ``y -> scale * M y`` of the simply transitive cone group.

    ``matrix`` is the identity for the half-line and an SO0(1,2) boost for
    the Lorentz cone.  The same real-linear map acts on tube points.
    """

    scale: float
    matrix: np.ndarray = field(repr=False)
    r: int = 1

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, y):
        y = np.asarray(y)
        return self.scale * (y @ self.matrix.T)

    def inverse(self) -> "GroupElement":
        if self.n == 1:
            inv = np.ones((1, 1))
        else:
            inv = _MINKOWSKI @ self.matrix.T @ _MINKOWSKI
        return GroupElement(1.0 / self.scale, inv, self.r)

    def jacobian_power(self, s: float) -> float:
        """``(Det g)^{r s / n}``; the factor by which ``Δ^s`` is multiplied."""
        return self.scale ** (self.r * s)

    @property
    def linear_det(self) -> float:
        return self.scale**self.n


@dataclass(frozen=True)
class ConeBackend:
    """An irreducible symmetric cone: its dimension, rank, identity and determinant."""

    kind: ConeKind
    n: int
    r: int
    e: tuple

    # -- shapes ---------------------------------------------------------

    def as_points(self, y, dtype=float) -> np.ndarray:
        """Coerce ``y`` to an array with trailing axis ``n``."""
        y = np.asarray(y, dtype=dtype)
        if self.n == 1:
            if y.ndim == 0 or y.shape[-1] != 1:
                y = y[..., None]
        elif y.ndim == 0 or y.shape[-1] != self.n:
            raise ArgumentError(
                f"{self.kind.value} points need trailing dimension {self.n}, got shape {y.shape}"
            )
        return y

    @property
    def identity(self) -> np.ndarray:
        return np.asarray(self.e, dtype=float)

    @property
    def n_over_r(self) -> float:
        return self.n / self.r

    def check_nu(self, nu: float) -> None:
        if not nu > self.n_over_r - 1:
            raise ParameterError(
                f"space is trivial: weighted Bergman spaces need nu > n/r - 1 = "
                f"{self.n_over_r - 1:g}, got nu = {nu:g}"
            )

    # -- determinant ----------------------------------------------------

    def det(self, y) -> np.ndarray:
        """Jordan determinant (polynomial, works for complex input too)."""
        y = self.as_points(y, dtype=np.result_type(np.asarray(y), float))
        if self.n == 1:
            return y[..., 0]
        return y[..., 0] ** 2 - y[..., 1] ** 2 - y[..., 2] ** 2

    def in_cone(self, y) -> np.ndarray:
        y = self.as_points(y)
        if self.n == 1:
            return y[..., 0] > 0
        return (y[..., 0] > 0) & (self.det(y) > 0)

    def _require_cone(self, y, what="point"):
        inside = self.in_cone(y)
        if not np.all(inside):
            raise DomainError(f"{what} outside the open {self.kind.value} cone")

    def complex_det_log(self, zeta) -> np.ndarray:
        """Continuous logarithm of ``Δ(ζ)`` for ``Re ζ`` in the open cone.

        Real-valued at real cone points, continued along the segment from
        ``Re ζ`` to ``ζ``.  For the Lorentz cone the factorisation
        ``Δ(a + ib) = Δ(a)(1 + iλ1)(1 + iλ2)`` with real ``λk`` (roots of a
        hyperbolic polynomial) keeps every factor in the right half-plane
        along the segment, so principal logs add up to the continuous one.
        """
        zeta = self.as_points(zeta, dtype=complex)
        a, b = zeta.real, zeta.imag
        self._require_cone(a, "Re ζ")
        if self.n == 1:
            return np.log(zeta[..., 0])
        da = self.det(a)
        db = self.det(b)
        bil = a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]
        root = np.sqrt(np.maximum(bil * bil - da * db, 0.0))
        lam1 = (bil + root) / da
        lam2 = (bil - root) / da
        return np.log(da) + np.log1p(1j * lam1) + np.log1p(1j * lam2)

    def complex_det_power(self, zeta, s) -> np.ndarray:
        """``Δ^s(ζ)`` on the branch real-positive at real cone points."""
        return np.exp(s * self.complex_det_log(zeta))

    def abs_det_power(self, zeta, s: float) -> np.ndarray:
        """``|Δ^s(ζ)|`` for real ``s`` (cheaper than the complex power)."""
        return np.exp(s * self.complex_det_log(zeta).real)

    # -- group ----------------------------------------------------------

    def transitive_action(self, y) -> GroupElement:
        """The group element mapping ``e`` to the cone point ``y``."""
        y = self.as_points(y)
        if y.ndim != 1:
            raise ArgumentError("transitive_action takes a single cone point")
        self._require_cone(y)
        if self.n == 1:
            return GroupElement(float(y[0]), np.ones((1, 1)), 1)
        scale = math.sqrt(float(self.det(y)))
        return GroupElement(scale, lorentz_boost(y / scale), 2)

    # -- constants measured by quadrature --------------------------------

    def det_integral_constant(self, alpha: float, p: float, nu: float) -> float:
        """``∫ |Δ^{-α}((z + ie)/i)|^p dV_ν(z)`` over the whole tube.

        Requires ``pα > ν + 2n/r - 1``.  The x-integral is reduced by
        homogeneity to a fixed profile integral and both factors are
        evaluated in spectral coordinates by adaptive quadrature.
        """
        self.check_nu(nu)
        q = p * alpha
        if not q > nu + 2 * self.n_over_r - 1:
            raise ParameterError(
                f"determinant integral diverges: requires p*alpha > nu + 2n/r - 1 "
                f"({q:g} <= {nu + 2 * self.n_over_r - 1:g})"
            )
        return _det_integral_constant(self.kind, float(q), float(nu))

    def kernel_constant(self, nu: float) -> float:
        """``c_ν``: the factor making ``c_ν Δ^{-(ν+n/r)}((z - w̄)/i)`` reproducing."""
        self.check_nu(nu)
        s = nu + self.n_over_r
        norm_sq = self.det_integral_constant(s, 2.0, nu)
        return float(2.0 ** (-self.r * s) / norm_sq)


def lorentz_boost(u) -> np.ndarray:
    """Pure SO0(1,2) boost mapping ``e = (1,0,0)`` to the unit hyperboloid point ``u``."""
    u = np.asarray(u, dtype=float)
    ch = u[0]
    sh_vec = u[1:]
    sh = math.hypot(sh_vec[0], sh_vec[1])
    m = np.eye(3)
    if sh == 0.0:
        return m
    nvec = sh_vec / sh
    m[0, 0] = ch
    m[0, 1:] = sh * nvec
    m[1:, 0] = sh * nvec
    m[1:, 1:] = np.eye(2) + (ch - 1.0) * np.outer(nvec, nvec)
    return m


def lorentz_boost_apply(u, v):
    """Apply the boost taking ``e`` to ``u`` (shape ``(..., 3)``, unit determinant) to ``v``."""
    u = np.asarray(u, dtype=float)
    ch = u[..., 0]
    sh = np.hypot(u[..., 1], u[..., 2])
    safe = sh > 0
    n1 = np.where(safe, u[..., 1] / np.where(safe, sh, 1.0), 1.0)
    n2 = np.where(safe, u[..., 2] / np.where(safe, sh, 1.0), 0.0)
    par = n1 * v[..., 1] + n2 * v[..., 2]
    k = sh * v[..., 0] + (ch - 1.0) * par
    out = np.empty(np.broadcast_shapes(u.shape, np.shape(v)), dtype=np.result_type(v, float))
    out[..., 0] = ch * v[..., 0] + sh * par
    out[..., 1] = v[..., 1] + k * n1
    out[..., 2] = v[..., 2] + k * n2
    return out


_QUAD = dict(epsabs=0.0, epsrel=1e-11, limit=400)


def _profile_x(kind: ConeKind, q: float) -> float:
    # ∫_{R^n} |Δ(e - ix)|^{-q} dx
    if kind is ConeKind.HALF_LINE:
        val, _ = integrate.quad(lambda t: np.cos(t) ** (q - 2), -np.pi / 2, np.pi / 2, **_QUAD)
        return val

    # (π/4) ∫∫ |sin(θ1-θ2)| cos^{q-3}θ1 cos^{q-3}θ2 over (-π/2, π/2)^2, λ = tan θ
    def inner(t1):
        f = lambda t2: abs(math.sin(t1 - t2)) * math.cos(t2) ** (q - 3)
        lo, _ = integrate.quad(f, -np.pi / 2, t1, **_QUAD)
        hi, _ = integrate.quad(f, t1, np.pi / 2, **_QUAD)
        return (lo + hi) * math.cos(t1) ** (q - 3)

    val, _ = integrate.quad(inner, -np.pi / 2, np.pi / 2, **_QUAD)
    return np.pi / 4 * val


def _profile_y(kind: ConeKind, s: float, nu: float) -> float:
    # ∫_Ω Δ(y + e)^{-s} Δ(y)^{ν - n/r} dy
    if kind is ConeKind.HALF_LINE:
        g = lambda m: (1.0 + m) ** (-s)
        lo, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(nu - 1.0, 0.0), **_QUAD)
        hi, _ = integrate.quad(lambda m: g(m) * m ** (nu - 1.0), 1.0, np.inf, **_QUAD)
        return lo + hi

    a_exp = nu - 1.5

    def inner(a):
        # a^{2+a_exp} ∫_0^1 (1-t) t^{a_exp} (1 + a t)^{-s} dt
        val, _ = integrate.quad(
            lambda t: (1.0 + a * t) ** (-s), 0.0, 1.0, weight="alg", wvar=(a_exp, 1.0), **_QUAD
        )
        return val * a ** (2.0 + a_exp)

    outer = lambda a: (1.0 + a) ** (-s) * inner(a)
    lo, _ = integrate.quad(outer, 0.0, 1.0, weight="alg", wvar=(a_exp, 0.0), **_QUAD)
    hi, _ = integrate.quad(lambda a: outer(a) * a**a_exp, 1.0, np.inf, **_QUAD)
    # (π/4)·2·∫∫_{μ1>μ2}
    return np.pi / 2 * (lo + hi)


@functools.lru_cache(maxsize=None)
def _det_integral_constant(kind: ConeKind, q: float, nu: float) -> float:
    nr = 1.0 if kind is ConeKind.HALF_LINE else 1.5
    return float(_profile_x(kind, q) * _profile_y(kind, q - nr, nu))


HALF_LINE = ConeBackend(ConeKind.HALF_LINE, 1, 1, (1.0,))
LORENTZ3 = ConeBackend(ConeKind.LORENTZ3, 3, 2, (1.0, 0.0, 0.0))


def get_backend(name) -> ConeBackend:
    """Look up a backend by kind or alias (``halfplane``, ``lorentz3``, ...)."""
    if isinstance(name, ConeBackend):
        return name
    key = name.value if isinstance(name, ConeKind) else str(name).lower()
    try:
        kind = _ALIASES[key]
    except KeyError:
        raise ArgumentError(f"unknown cone {name!r}; choose halfplane or lorentz3") from None
    return HALF_LINE if kind is ConeKind.HALF_LINE else LORENTZ3
