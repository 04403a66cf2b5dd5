"""
Positive measures on the tube and the scalar transforms built on them.

Measures are finite sums of point masses.  Averages over Bergman balls,
Berezin transforms, lattice sums, truncated ``L^p(dλ)`` integrals,
determinant integrals and the off-diagonal lattice sum all live here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cone import ConeBackend, GroupElement, TubePoint, get_backend
from .errors import ArgumentError, ParameterError
from .geometry import (
    Lattice,
    TruncationRegion,
    _ball_volume_ratio,
    as_points,
    ball_volume,
    bergman_distance,
    invariant_ball_volume,
    kernel,
)
from .quadrature import CONVERGED, Budget, ConvergenceReport, ball_rule, integrate_tube

__all__ = [
    "AtomicMeasure",
    "ScalarField",
    "KernelFunction",
    "average",
    "berezin",
    "berezin_m",
    "lattice_lp_sum",
    "lp_lambda_norm",
    "det_integral",
    "offdiag_sum",
    "mean_value_check",
    "radius_variation_ratio",
    "average_field",
    "berezin_field",
    "berezin_m_field",
    "ball_mass",
]


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass
class AtomicMeasure:
    """Finite positive measure ``Σ c_i δ_{w_i}``.

    Parameters
    ----------
    backend : ConeBackend or str
    points : array_like, shape (N, n) complex
    masses : array_like, shape (N,), strictly positive
    """

    backend: ConeBackend
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.backend = get_backend(self.backend)
        pts = as_points(self.backend, self.points).reshape(-1, self.backend.n)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if pts.shape[0] == 0:
            raise ArgumentError("an atomic measure needs at least one atom")
        if pts.shape[0] != m.shape[0]:
            raise ArgumentError("points and masses differ in length")
        if not np.all(m > 0):
            raise ArgumentError("atom masses must be strictly positive")
        if not np.all(self.backend.in_cone(pts.imag)):
            raise ArgumentError("atoms must lie in the tube domain")
        if len(np.unique(np.round(pts, 14), axis=0)) != len(pts):
            raise ArgumentError("atoms must be pairwise distinct")
        self.points = pts
        self.masses = m

    def __len__(self) -> int:
        return len(self.masses)

    @classmethod
    def point_mass(cls, backend, z, mass: float = 1.0) -> "AtomicMeasure":
        backend = get_backend(backend)
        return cls(backend, as_points(backend, z).reshape(1, backend.n), [mass])

    @property
    def atoms(self) -> list:
        return [(TubePoint(tuple(p.real), tuple(p.imag)), float(c)) for p, c in zip(self.points, self.masses)]

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.backend, self.points, self.masses * factor)

    def translated(self, a) -> "AtomicMeasure":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.backend.n,))
        return AtomicMeasure(self.backend, self.points + a[None, :], self.masses)

    def pushforward(self, h: GroupElement, mass_power: float = 0.0) -> "AtomicMeasure":
        """Image under ``z -> h·z`` with masses multiplied by ``jacobian_power(mass_power)``."""
        pts = h.apply(self.points)
        return AtomicMeasure(self.backend, pts, self.masses * h.jacobian_power(mass_power))

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        pts = np.concatenate([self.points, other.points])
        m = np.concatenate([self.masses, other.masses])
        key = np.round(pts, 14)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv, m)
        first = np.array([np.flatnonzero(inv == k)[0] for k in range(len(uniq))])
        return AtomicMeasure(self.backend, pts[first], merged)

    def to_dict(self) -> dict:
        return {
            "cone": self.backend.kind.value,
            "atoms": [
                {"x": list(map(float, p.real)), "y": list(map(float, p.imag)), "mass": float(c)}
                for p, c in zip(self.points, self.masses)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "AtomicMeasure":
        backend = get_backend(d.get("cone", "halfline"))
        pts = [np.array(a["x"]) + 1j * np.array(a["y"]) for a in d["atoms"]]
        return cls(backend, np.array(pts), [a["mass"] for a in d["atoms"]])

    @classmethod
    def from_json(cls, s: str) -> "AtomicMeasure":
        return cls.from_dict(json.loads(s))


@dataclass
class ScalarField:
    """A real function on the tube.

    ``evaluator`` takes complex points of shape ``(..., n)`` and returns
    reals of shape ``(...)``.  When ``support`` is given as
    ``(centres, radius)`` the field vanishes off the union of those
    Bergman balls, and integrals use a union-of-balls rule instead of
    region growth.
    """

    evaluator: object
    label: str = ""
    support: tuple | None = None

    def __call__(self, z):
        return self.evaluator(z)


@dataclass(frozen=True)
class KernelFunction:
    """Test function ``coef · K_σ(·, u)``."""

    backend: ConeBackend
    sigma: float
    u: tuple
    coef: complex = 1.0

    @classmethod
    def at(cls, backend, sigma, u, coef=1.0) -> "KernelFunction":
        backend = get_backend(backend)
        u = as_points(backend, u).reshape(backend.n)
        return cls(backend, float(sigma), tuple(complex(v) for v in u), complex(coef))

    @property
    def pole(self) -> np.ndarray:
        return np.array(self.u, dtype=complex)

    def __call__(self, z):
        return self.coef * kernel(self.backend, self.sigma, z, self.pole)

    def translated(self, a) -> "KernelFunction":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.backend.n,))
        return KernelFunction(self.backend, self.sigma, tuple(self.pole + a), self.coef)

    def norm_p(self, p: float, nu: float) -> float:
        """``‖f‖_{p,ν}`` from the determinant-integral scaling law."""
        b = self.backend
        a = self.sigma + b.n_over_r
        C = b.det_integral_constant(a, p, nu)
        v = b.det(self.pole.imag)
        c = b.kernel_constant(self.sigma) * abs(self.coef)
        return c * (C * v ** (-p * a + b.n_over_r + nu)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _pts(backend, z):
    return as_points(backend, z)


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def ball_mass(mu: AtomicMeasure, z, delta: float):
    """``μ(B_δ(z))``: total mass of atoms at distance ``< δ`` from ``z``."""
    z = _pts(mu.backend, z)
    out = np.zeros(z.shape[:-1])
    for p, c in zip(mu.points, mu.masses):
        out += c * (np.asarray(bergman_distance(mu.backend, z, p)) < delta)
    return _scalar(out)


def average(mu: AtomicMeasure, z, delta: float, nu: float):
    """``μ̂_δ(z) = μ(B_δ(z)) / V_ν(B_δ(z))``."""
    return _scalar(np.asarray(ball_mass(mu, z, delta)) / np.asarray(ball_volume(mu.backend, nu, z, delta)))


def berezin(mu: AtomicMeasure, w, nu: float):
    """``μ̃(w) = Σ c_i |k_ν(w_i, w)|²`` with the normalized kernel."""
    b = mu.backend
    b.check_nu(nu)
    w = _pts(b, w)
    s = nu + b.n_over_r
    logv = np.log(b.det(w.imag))
    out = np.zeros(w.shape[:-1])
    for p, c in zip(mu.points, mu.masses):
        lg = b.complex_det_log((p - np.conj(w)) / 1j).real
        out += c * np.exp(-2.0 * s * lg + s * logv)
    return _scalar(out)


def berezin_m(mu: AtomicMeasure, z, nu: float, m: int):
    """``μ̃^m(z) = Σ c_i |k_z^{ν,m}(w_i)|²`` with the unit-norm box kernel."""
    from .geometry import box_norm_constant

    b = mu.backend
    b.check_nu(nu)
    z = _pts(b, z)
    a = nu + m + b.n_over_r
    C = box_norm_constant(b, nu, m)
    logv = np.log(b.det(z.imag))
    out = np.zeros(z.shape[:-1])
    for p, c in zip(mu.points, mu.masses):
        lg = b.complex_det_log((p - np.conj(z)) / 1j).real
        out += c * np.exp(-2.0 * a * lg + (nu + b.n_over_r + 2 * m) * logv)
    return _scalar(out / C)


def lattice_lp_sum(values, p: float) -> float:
    """``Σ v_j^p`` (no root taken; ``0^p = 0``)."""
    if not p > 0:
        raise ParameterError("p must be positive")
    v = np.asarray(values, dtype=float).ravel()
    if np.any(v < 0):
        raise ArgumentError("lattice values must be non-negative")
    v = v[v > 0]
    return math.fsum((v**p).tolist())


def average_field(mu: AtomicMeasure, delta: float, nu: float) -> ScalarField:
    return ScalarField(lambda z: average(mu, z, delta, nu), f"average(δ={delta:g})", (mu.points, delta))


def berezin_field(mu: AtomicMeasure, nu: float) -> ScalarField:
    return ScalarField(lambda z: berezin(mu, z, nu), f"berezin(ν={nu:g})")


def berezin_m_field(mu: AtomicMeasure, nu: float, m: int) -> ScalarField:
    return ScalarField(lambda z: berezin_m(mu, z, nu, m), f"berezin_m(ν={nu:g}, m={m})")


# ---------------------------------------------------------------------------
# truncated integrals
# ---------------------------------------------------------------------------


def _push_ball(backend, center, zeta):
    # the affine automorphism taking ie to ``center``, applied to ball nodes
    h = backend.transitive_action(center.imag)
    return center.real[None, :] + h.apply(zeta)


def _union_of_balls(backend, centres, radius, F, weight_power, size=0):
    """``∫_{∪ B(c_i)} F dλ·Δ^{weight_power}`` as ``Σ_i ∫_{B(c_i)} F / N``.

    ``N(z)`` counts the balls containing ``z``, so overlaps are counted
    once; exact for any integrand supported in the union.
    """
    zeta, w = ball_rule(backend, float(radius), size)
    centres = _pts(backend, centres).reshape(-1, backend.n)
    total = []
    for c in centres:
        z = _push_ball(backend, c, zeta)
        cnt = np.zeros(len(z))
        for c2 in centres:
            cnt += np.asarray(bergman_distance(backend, z, c2)) < radius
        val = np.asarray(F(z), dtype=float) * backend.det(z.imag) ** weight_power
        inside = cnt > 0
        total.append(math.fsum((w[inside] * val[inside] / cnt[inside]).tolist()))
    return math.fsum(total)


def _region_center(backend, region: TruncationRegion | None):
    if region is None:
        return 1j * backend.identity, {}
    x = np.array([0.5 * (a + b) for a, b in region.x_box])
    lo, hi = region.det_range
    if backend.n == 1:
        kw = dict(x_half=max(0.5 * (region.x_box[0][1] - region.x_box[0][0]), 1e-3), s_half=max(0.5 * math.log(hi / lo), 0.1))
        return x + 1j * math.sqrt(lo * hi), kw
    tau = (lo * hi) ** 0.25
    kw = dict(s_half=max(0.25 * math.log(hi / lo), 0.1))
    return x + 1j * tau * backend.identity, kw


def lp_lambda_norm(
    field: ScalarField,
    p: float,
    region: TruncationRegion | None = None,
    backend=None,
    *,
    rtol: float = 1e-3,
    budget: Budget | None = None,
    seed: int = 0,
) -> ConvergenceReport:
    """``∫ |F|^p dλ`` on geometrically growing regions, with a verdict.

    ``region`` sets the starting box (its centre and size).  Fields with
    compact ``support`` are integrated exactly over the union of balls and
    reported as converged.  The report's ``value`` is the integral itself
    (no ``1/p`` root).
    """
    backend = get_backend(backend or "halfline")
    if not p > 0:
        raise ParameterError("p must be positive")
    if field.support is not None:
        centres, radius = field.support
        val = _union_of_balls(backend, centres, radius, lambda z: np.abs(field(z)) ** p, 0.0)
        return ConvergenceReport(val, CONVERGED, [val], [val], 0)
    center, kw = _region_center(backend, region)
    weight = -2.0 * backend.n_over_r

    def integrand(z):
        return np.abs(field(z)) ** p * backend.det(z.imag) ** weight

    return integrate_tube(backend, integrand, center=center, rtol=rtol, budget=budget, seed=seed, **kw)


def det_integral(
    backend, alpha: float, p: float, nu: float, t=None, *, rtol: float = 1e-3, budget: Budget | None = None, seed: int = 0
) -> ConvergenceReport:
    """Truncated ``∫ |Δ^{-α}((z + it)/i)|^p dV_ν(z)`` with a convergence verdict.

    Finite exactly when ``pα > ν + 2n/r - 1``; then it equals
    ``C Δ^{-pα + n/r + ν}(t)``.
    """
    backend = get_backend(backend)
    backend.check_nu(nu)
    t = backend.identity if t is None else backend.as_points(np.asarray(t, dtype=float))
    if not np.all(backend.in_cone(t)):
        raise ParameterError("t must lie in the open cone")
    q = p * alpha
    wpow = nu - backend.n_over_r

    def integrand(z):
        lg = backend.complex_det_log((z + 1j * t) / 1j).real
        return np.exp(-q * lg) * backend.det(z.imag) ** wpow

    if backend.n == 1:
        return integrate_tube(backend, integrand, center=1j * t, rtol=rtol, budget=budget)
    return integrate_tube(backend, integrand, center=np.zeros(3) + 0j, anchor=t, rtol=rtol, budget=budget, seed=seed)


def offdiag_sum(backend, sublattice, alpha: float, beta: float, j: int) -> float:
    """Empirical ``ε``: ``Σ_{k≠j} |Δ^{-α}((z_k - z̄_j)/i)| Δ^β(y_k) / Δ^{β-α}(y_j)``."""
    backend = get_backend(backend)
    nr = backend.n_over_r
    if not alpha > 2 * nr - 1:
        raise ParameterError(f"requires alpha > 2n/r - 1 = {2 * nr - 1:g}")
    if not beta > 2 * nr - 1:
        raise ParameterError(f"requires beta > 2n/r - 1 = {2 * nr - 1:g}")
    if not alpha > beta + nr - 1:
        raise ParameterError(f"requires alpha > beta + n/r - 1 = {beta + nr - 1:g}")
    nodes = sublattice.nodes if isinstance(sublattice, Lattice) else _pts(backend, sublattice).reshape(-1, backend.n)
    if len(nodes) <= 1:
        return 0.0
    zj = nodes[j]
    others = np.delete(nodes, j, axis=0)
    lg = backend.complex_det_log((others - np.conj(zj)[None, :]) / 1j).real
    terms = np.exp(-alpha * lg) * backend.det(others.imag) ** beta
    return math.fsum(terms.tolist()) / backend.det(zj.imag) ** (beta - alpha)


def mean_value_check(backend, f, z, delta: float, p: float, size: int = 0) -> float:
    """``|f(z)|^p / (δ^{-n} ∫_{B_δ(z)} |f|^p dλ)``."""
    backend = get_backend(backend)
    z = _pts(backend, z).reshape(backend.n)
    zeta, w = ball_rule(backend, float(delta), size)
    pts = _push_ball(backend, z, zeta)
    integral = math.fsum((w * np.abs(f(pts)) ** p).tolist())
    top = abs(complex(np.asarray(f(z[None, :])).ravel()[0])) ** p
    return top / (delta ** (-backend.n) * integral)


@dataclass
class RadiusVariation:
    """Integrals ``∫ (μ(B_r(z))/Δ^{ν+n/r}(Im z))^p dV_ν`` for two radii."""

    value_delta: float
    value_beta: float
    verdict_delta: str = CONVERGED
    verdict_beta: str = CONVERGED
    meta: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.value_beta == 0.0:
            return math.nan if self.value_delta == 0.0 else math.inf
        return self.value_delta / self.value_beta


def radius_variation_ratio(
    mu: AtomicMeasure | None, nu: float, p: float, delta: float, beta: float, region: TruncationRegion | None = None, backend=None
) -> RadiusVariation:
    """Compare the ``L^p_ν`` sizes of ball-mass functions at radii ``δ`` and ``β``.

    The integrand vanishes off the union of balls about the atoms, so both
    integrals are computed exactly over that union (always finite for an
    atomic measure).  ``region``, when given, clips the integration domain.
    ``mu=None`` is the zero measure.
    """
    for r in (delta, beta):
        if not 0 < r < 1:
            raise ParameterError("radii must lie in (0, 1)")
    if mu is None:
        return RadiusVariation(0.0, 0.0)
    b = mu.backend
    b.check_nu(nu)
    s = nu + b.n_over_r
    out = []
    for r in (delta, beta):

        def F(z, r=r):
            val = (np.asarray(ball_mass(mu, z, r)) / b.det(z.imag) ** s) ** p
            if region is not None:
                val = val * region.contains(z)
            return val

        out.append(_union_of_balls(b, mu.points, r, F, s))
    return RadiusVariation(out[0], out[1])
