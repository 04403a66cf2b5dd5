"""
Bergman geometry of the tube domain.

Kernels and their box derivatives, the Bergman distance, ball volumes
and certified δ-lattices.  Points are complex arrays with trailing axis
``n`` (a bare complex scalar is fine for the half-plane) or
:class:`~conelab.cone.TubePoint` instances.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from . import _accel
from .cone import ConeBackend, TubePoint, get_backend, lorentz_boost_apply
from .errors import BudgetError, DomainError, ParameterError
from .quadrature import ball_rule

__all__ = [
    "SpectralParams",
    "TruncationRegion",
    "Lattice",
    "SublatticeDecomposition",
    "as_points",
    "kernel",
    "normalized_kernel",
    "box_constant",
    "box_kernel",
    "normalized_box_kernel",
    "box_norm_constant",
    "bergman_distance",
    "metric_tensor",
    "path_length",
    "lipschitz_logdet",
    "invariant_ball_volume",
    "ball_volume",
    "overlap_bound",
    "default_region",
    "make_lattice",
    "lattice_from_points",
    "certify",
    "separated_sublattice",
    "distance_matrix",
]


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralParams:
    """Weight ``nu``, exponent ``p``, box order ``m`` and radius ``delta``."""

    nu: float = 1.0
    p: float = 1.0
    m: int = 0
    delta: float = 0.5

    def validate(self, backend: ConeBackend) -> "SpectralParams":
        backend.check_nu(self.nu)
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta:g}")
        if not self.p > 0:
            raise ParameterError(f"p must be positive, got {self.p:g}")
        if int(self.m) != self.m or self.m < 0:
            raise ParameterError(f"m must be a non-negative integer, got {self.m!r}")
        return self


@dataclass(frozen=True)
class TruncationRegion:
    """A bounded piece of the tube used for lattices and truncated integrals.

    Parameters
    ----------
    x_box : tuple of (lo, hi)
        One interval per real coordinate.
    det_range : (lo, hi)
        Range of ``Δ(Im z)``; ``lo > 0``.
    anisotropy_bound : float
        Bound on ``‖y‖ / Δ^{1/r}(y)`` (Lorentz tube only; ``‖e‖ = 1``).
    """

    x_box: tuple
    det_range: tuple
    anisotropy_bound: float = 1.0

    def __post_init__(self):
        xb = tuple((float(a), float(b)) for a, b in self.x_box)
        object.__setattr__(self, "x_box", xb)
        object.__setattr__(self, "det_range", (float(self.det_range[0]), float(self.det_range[1])))
        if any(b <= a for a, b in xb):
            raise ParameterError("x_box intervals must be nonempty")
        lo, hi = self.det_range
        if not 0 < lo <= hi:
            raise ParameterError("det_range needs 0 < d_lo <= d_hi")
        if self.anisotropy_bound < 1.0:
            raise ParameterError("anisotropy_bound must be >= 1")

    @property
    def n(self) -> int:
        return len(self.x_box)

    @property
    def eta_max(self) -> float:
        """Largest hyperbolic angle of ``y / Δ^{1/2}(y)`` allowed (Lorentz tube)."""
        return 0.5 * math.acosh(self.anisotropy_bound**2)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0 or z.shape[-1] != self.n:
            z = z[..., None]
        x, y = z.real, z.imag
        ok = np.ones(z.shape[:-1], dtype=bool)
        for i, (a, b) in enumerate(self.x_box):
            ok &= (x[..., i] >= a) & (x[..., i] <= b)
        if self.n == 1:
            d = y[..., 0]
            ok &= d > 0
        else:
            d = y[..., 0] ** 2 - y[..., 1] ** 2 - y[..., 2] ** 2
            ok &= (y[..., 0] > 0) & (d > 0)
            ratio = np.linalg.norm(y, axis=-1) / np.sqrt(np.where(d > 0, d, 1.0))
            ok &= ratio <= self.anisotropy_bound * (1 + 1e-12)
        ok &= (d >= self.det_range[0]) & (d <= self.det_range[1])
        return ok

    def scaled(self, factor: float) -> "TruncationRegion":
        """Grow the region geometrically: x half-widths and log det-range by ``factor``."""
        xb = []
        for a, b in self.x_box:
            c, h = 0.5 * (a + b), 0.5 * (b - a) * factor
            xb.append((c - h, c + h))
        lo, hi = self.det_range
        mid = math.sqrt(lo * hi)
        half = 0.5 * math.log(hi / lo) * factor
        return TruncationRegion(tuple(xb), (mid * math.exp(-half), mid * math.exp(half)), self.anisotropy_bound)

    def to_dict(self) -> dict:
        return {
            "x_box": [list(iv) for iv in self.x_box],
            "det_range": list(self.det_range),
            "anisotropy_bound": self.anisotropy_bound,
        }

    @classmethod
    def from_dict(cls, d) -> "TruncationRegion":
        return cls(tuple(tuple(iv) for iv in d["x_box"]), tuple(d["det_range"]), d.get("anisotropy_bound", 1.0))


def default_region(backend, delta: float = 0.5) -> TruncationRegion:
    """Standard lattice region: ``[-2,2] × [1/4,4]`` on the half-plane, a few balls wide on the Lorentz tube."""
    backend = get_backend(backend)
    if backend.n == 1:
        return TruncationRegion(((-2.0, 2.0),), (0.25, 4.0))
    return TruncationRegion(
        ((-delta, delta),) * 3, (math.exp(-delta), math.exp(delta)), math.sqrt(math.cosh(2 * delta))
    )


# ---------------------------------------------------------------------------
# points and kernels
# ---------------------------------------------------------------------------


def as_points(backend: ConeBackend, z) -> np.ndarray:
    """Complex array with trailing axis ``n`` from points, arrays or TubePoints."""
    if isinstance(z, TubePoint):
        z = z.z
    elif isinstance(z, (list, tuple)) and z and isinstance(z[0], TubePoint):
        z = np.stack([p.z for p in z])
    return backend.as_points(z, dtype=complex)


def _out(v):
    v = np.asarray(v)
    return v[()] if v.ndim == 0 else v


def _zeta(backend, z, w):
    z = as_points(backend, z)
    w = as_points(backend, w)
    return (z - np.conj(w)) / 1j


def kernel(backend, nu: float, z, w):
    """Weighted Bergman kernel ``K_ν(z, w) = c_ν Δ^{-(ν+n/r)}((z - w̄)/i)``."""
    backend = get_backend(backend)
    c = backend.kernel_constant(nu)
    return _out(c * backend.complex_det_power(_zeta(backend, z, w), -(nu + backend.n_over_r)))


def normalized_kernel(backend, nu: float, z, w):
    """``k_ν(z, w) = Δ^{-(ν+n/r)}((z - w̄)/i) Δ^{(ν+n/r)/2}(Im w)`` (no ``c_ν`` factor)."""
    backend = get_backend(backend)
    backend.check_nu(nu)
    s = nu + backend.n_over_r
    w = as_points(backend, w)
    return _out(backend.complex_det_power(_zeta(backend, z, w), -s) * backend.det(w.imag) ** (s / 2))


def _gamma_factor(backend: ConeBackend, s: float) -> float:
    # □ Δ^{-s}((z - w̄)/i) = γ(s) Δ^{-s-1}((z - w̄)/i)
    if backend.n == 1:
        return s
    return 4.0 * s * (s - 0.5)


def box_constant(backend, nu: float) -> float:
    """``C_ν`` with ``□_z K_ν(z, w) = C_ν K_{ν+1}(z, w)``."""
    backend = get_backend(backend)
    s = nu + backend.n_over_r
    return _gamma_factor(backend, s) * backend.kernel_constant(nu) / backend.kernel_constant(nu + 1)


def box_kernel(backend, nu: float, m: int, z, w):
    """``□_z^m K_ν(z, w) = (∏_{j<m} C_{ν+j}) K_{ν+m}(z, w)``."""
    backend = get_backend(backend)
    backend.check_nu(nu)
    if m == 0:
        return kernel(backend, nu, z, w)
    coef = backend.kernel_constant(nu)
    for j in range(m):
        coef *= _gamma_factor(backend, nu + j + backend.n_over_r)
    s = nu + m + backend.n_over_r
    return _out(coef * backend.complex_det_power(_zeta(backend, z, w), -s))


def box_norm_constant(backend, nu: float, m: int) -> float:
    """``‖Δ^{-(ν+m+n/r)}((· + ie)/i)‖²_{2,ν}``; other centres follow by homogeneity."""
    backend = get_backend(backend)
    return backend.det_integral_constant(nu + m + backend.n_over_r, 2.0, nu)


def normalized_box_kernel(backend, nu: float, m: int, z, w):
    """Unit-norm ``k_z^{ν,m}(w)``, holomorphic in ``w``.

    ``Δ^{-(ν+m+n/r)}((w - z̄)/i) Δ^{(ν+n/r+2m)/2}(Im z) / C^{1/2}`` with
    ``C`` from :func:`box_norm_constant`.
    """
    backend = get_backend(backend)
    backend.check_nu(nu)
    a = nu + m + backend.n_over_r
    z = as_points(backend, z)
    norm = math.sqrt(box_norm_constant(backend, nu, m))
    val = backend.complex_det_power(_zeta(backend, w, z), -a)
    return _out(val * backend.det(z.imag) ** ((nu + backend.n_over_r + 2 * m) / 2) / norm)


# ---------------------------------------------------------------------------
# distance and metric
# ---------------------------------------------------------------------------


def bergman_distance(backend, z, w):
    """Geodesic distance of the metric ``∂∂̄ log K_{n/r}(z, z)``.

    Half-plane: ``d_hyp / √2``.  Lorentz tube: closed form through the
    Cayley transform after moving ``w`` to ``ie``.
    """
    backend = get_backend(backend)
    z = as_points(backend, z)
    w = as_points(backend, w)
    if not (np.all(backend.in_cone(z.imag)) and np.all(backend.in_cone(w.imag))):
        raise DomainError("points must lie in the tube domain")
    if backend.n == 1:
        return _out(_accel.dist_half_numpy(z[..., 0], w[..., 0]))
    return _out(_accel.dist_lor_numpy(z, w))


def metric_tensor(backend, y) -> np.ndarray:
    """``g(y) = -(n/2r) ∇² log Δ(y)``; the same form acts on ``Re dz`` and ``Im dz``."""
    backend = get_backend(backend)
    y = backend.as_points(y)
    if backend.n == 1:
        return (0.5 / y[..., 0] ** 2)[..., None, None]
    J = np.diag([1.0, -1.0, -1.0])
    q = backend.det(y)
    jy = y @ J
    hess = 2.0 * J / q[..., None, None] - 4.0 * jy[..., :, None] * jy[..., None, :] / q[..., None, None] ** 2
    return -0.75 * hess


def path_length(backend, path, refine: int = 8) -> float:
    """Metric length of the polyline through ``path`` (each segment split ``refine`` times)."""
    backend = get_backend(backend)
    p = as_points(backend, path)
    t = (np.arange(refine) + 0.5) / refine
    total = 0.0
    for a, b in zip(p[:-1], p[1:]):
        mids = a[None, :] + t[:, None] * (b - a)[None, :]
        g = metric_tensor(backend, mids.imag)
        dz = (b - a) / refine
        q = np.einsum("i,kij,j->k", dz.real, g, dz.real) + np.einsum("i,kij,j->k", dz.imag, g, dz.imag)
        total += float(np.sum(np.sqrt(q)))
    return total


def lipschitz_logdet(backend) -> float:
    """Lipschitz constant of ``log Δ(Im z)`` for the Bergman distance: ``√(2r²/n)``."""
    backend = get_backend(backend)
    return math.sqrt(2.0 * backend.r**2 / backend.n)


def _logdet(backend, z):
    return np.log(backend.det(z.imag))


# ---------------------------------------------------------------------------
# balls
# ---------------------------------------------------------------------------


def invariant_ball_volume(backend, delta: float) -> float:
    """``λ(B_δ)``, the same for every centre."""
    backend = get_backend(backend)
    if backend.n == 1:
        rho = math.sqrt(2.0) * delta
        return 4.0 * math.pi * math.sinh(rho / 2) ** 2
    _, w = ball_rule(backend, float(delta))
    return float(np.sum(w))


@functools.lru_cache(maxsize=256)
def _ball_volume_ratio(backend: ConeBackend, nu: float, delta: float) -> float:
    s = nu + backend.n_over_r
    if backend.n == 1:
        rho = math.sqrt(2.0) * delta
        c, R = math.cosh(rho), math.sinh(rho)
        val, err = integrate.quad(
            lambda y: 2.0 * math.sqrt(max(R * R - (y - c) ** 2, 0.0)) * y ** (nu - 1.0),
            c - R,
            c + R,
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
        if not np.isfinite(val) or err > 1e-8 * abs(val):
            raise BudgetError("ball volume quadrature did not converge")
        return val
    zeta, w = ball_rule(backend, float(delta))
    return float(np.sum(w * backend.det(zeta.imag) ** s))


def ball_volume(backend, nu: float, z, delta: float):
    """``V_ν(B_δ(z)) = C_δ Δ^{ν+n/r}(Im z)`` with ``C_δ`` by quadrature at ``ie``."""
    backend = get_backend(backend)
    backend.check_nu(nu)
    if not delta > 0:
        raise ParameterError("delta must be positive")
    z = as_points(backend, z)
    ratio = _ball_volume_ratio(backend, float(nu), float(delta))
    return _out(ratio * backend.det(z.imag) ** (nu + backend.n_over_r))


def overlap_bound(backend, delta: float) -> int:
    """Packing bound for how many δ/2-separated points fit in one δ-ball.

    Disjoint balls of radius ``δ/4`` about such points lie in a ball of
    radius ``5δ/4``, so the count is at most the ratio of their invariant
    volumes.
    """
    backend = get_backend(backend)
    return int(invariant_ball_volume(backend, 1.25 * delta) / invariant_ball_volume(backend, 0.25 * delta))


# ---------------------------------------------------------------------------
# lattices
# ---------------------------------------------------------------------------


@dataclass
class Lattice:
    """A certified δ-lattice restricted to a truncation region.

    Attributes
    ----------
    nodes : ndarray, shape (N, n) complex
        Lattice points, sorted by ``log Δ(Im ζ)``.
    delta : float
    region : TruncationRegion or None
    certificates : dict
        ``min_pairwise_distance``, ``covering_fraction``, ``max_overlap``,
        ``overlap_bound`` and ``n_samples``.
    """

    backend: ConeBackend
    nodes: np.ndarray
    delta: float
    region: TruncationRegion | None = None
    certificates: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def points(self) -> list:
        return [TubePoint(tuple(p.real), tuple(p.imag)) for p in self.nodes]

    def translated(self, a) -> "Lattice":
        a = np.broadcast_to(np.asarray(a, dtype=float), (self.backend.n,))
        region = self.region
        if region is not None:
            region = TruncationRegion(
                tuple((lo + s, hi + s) for (lo, hi), s in zip(region.x_box, a)),
                region.det_range,
                region.anisotropy_bound,
            )
        return Lattice(self.backend, self.nodes + a[None, :], self.delta, region, dict(self.certificates))

    def to_dict(self) -> dict:
        return {
            "cone": self.backend.kind.value,
            "delta": self.delta,
            "region": None if self.region is None else self.region.to_dict(),
            "nodes": [[list(map(float, p.real)), list(map(float, p.imag))] for p in self.nodes],
            "certificates": dict(self.certificates),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "Lattice":
        backend = get_backend(d.get("cone", "halfline"))
        nodes = np.array([np.array(x) + 1j * np.array(y) for x, y in d["nodes"]], dtype=complex)
        nodes = nodes.reshape(-1, backend.n)
        region = None if d.get("region") is None else TruncationRegion.from_dict(d["region"])
        return cls(backend, nodes, float(d["delta"]), region, dict(d.get("certificates", {})))

    @classmethod
    def from_json(cls, s: str) -> "Lattice":
        return cls.from_dict(json.loads(s))


def _sobol(dim, n, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return qmc.Sobol(dim, scramble=True, seed=seed).random(n)


def _region_samples(backend, region: TruncationRegion, n: int, seed) -> np.ndarray:
    # quasi-random points filling the region in its natural coordinates
    lo, hi = region.det_range
    if backend.n == 1:
        u = _sobol(2, n, seed)
        (a, b), = region.x_box
        x = a + (b - a) * u[:, 0]
        y = lo * (hi / lo) ** u[:, 1]
        return (x + 1j * y)[:, None]
    u = _sobol(6, n, seed)
    x = np.stack([a + (b - a) * u[:, i] for i, (a, b) in enumerate(region.x_box)], axis=1)
    tau = np.sqrt(lo * (hi / lo) ** u[:, 3])
    eta = region.eta_max * np.sqrt(u[:, 4])
    phi = 2 * np.pi * u[:, 5]
    y = tau[:, None] * np.stack([np.cosh(eta), np.sinh(eta) * np.cos(phi), np.sinh(eta) * np.sin(phi)], axis=1)
    return x + 1j * y


def _grid(a, b, h, phase):
    # points a + (k + phase) h inside [a, b], always at least the midpoint
    k = np.arange(int(math.floor((b - a) / h - phase)) + 1)
    pts = a + (k + phase) * h
    pts = pts[pts <= b]
    return pts if pts.size else np.array([0.5 * (a + b)])


def _candidates(backend, region: TruncationRegion, delta: float, rng) -> np.ndarray:
    # group-orbit grid: det-geometric layers, x-spacing proportional to Δ^{1/r}(y),
    # mesh about δ/3 in the Bergman metric along every coordinate direction
    hm = delta / 3.0
    lo, hi = region.det_range
    phase = rng.random(8)
    out = []
    if backend.n == 1:
        (xa, xb), = region.x_box
        hs = math.sqrt(2.0) * hm
        for s in _grid(math.log(lo), math.log(hi), hs, phase[0]):
            y = math.exp(s)
            xs = _grid(xa, xb, hs * y, phase[1])
            out.append(xs + 1j * y)
        return np.concatenate(out)[:, None]
    h = hm / math.sqrt(1.5)
    rings = [(0.0, 1)]
    for eta in _grid(0.0, region.eta_max, h, phase[2])[1:] if region.eta_max > 0 else []:
        rings.append((eta, max(1, int(math.ceil(2 * math.pi * math.sinh(eta) / h)))))
    for lt in _grid(0.5 * math.log(lo), 0.5 * math.log(hi), h, phase[0]):
        tau = math.exp(lt)
        for eta, m in rings:
            phis = 2 * np.pi * (np.arange(m) + phase[3]) / m
            for phi in phis:
                y = tau * np.array([math.cosh(eta), math.sinh(eta) * math.cos(phi), math.sinh(eta) * math.sin(phi)])
                axes = [_grid(a, b, h * tau, phase[4 + i]) for i, (a, b) in enumerate(region.x_box)]
                X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
                out.append(X + 1j * y[None, :])
    return np.concatenate(out)


def _certify(backend, nodes, delta, region, n_samples, seed) -> dict:
    kind = _accel._kind_code(backend.n)
    lip = lipschitz_logdet(backend)
    ld = _logdet(backend, nodes)
    mpd = _accel.pairwise_min(kind, nodes, ld, delta, lip) if len(nodes) > 1 else math.inf
    cert = {"min_pairwise_distance": float(mpd), "overlap_bound": overlap_bound(backend, delta)}
    if region is not None and n_samples:
        samples = _region_samples(backend, region, n_samples, seed)
        sld = _logdet(backend, samples)
        mind, counts = _accel.cover_stats(kind, samples, nodes, ld, sld, delta, lip)
        cert["covering_fraction"] = float(np.mean(mind < delta))
        cert["max_overlap"] = int(counts.max())
        cert["n_samples"] = int(n_samples)
    return cert


def _sorted_by_logdet(backend, pts):
    ld = _logdet(backend, pts)
    order = np.argsort(ld, kind="stable")
    return np.ascontiguousarray(pts[order]), ld[order]


def make_lattice(backend, delta: float, region: TruncationRegion | None = None, seed: int = 0, n_samples: int = 2**14):
    """Greedy maximal δ/2-separated set in ``region`` with certificates.

    Candidates stream from a group-orbit grid whose phase depends on
    ``seed``; the covering fraction and overlap are measured on
    ``n_samples`` scrambled Sobol points of the region.
    """
    backend = get_backend(backend)
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta:g}")
    region = region or default_region(backend, delta)
    rng = np.random.default_rng(seed)
    cands = _candidates(backend, region, delta, rng)
    cands = cands[region.contains(cands)]
    if cands.shape[0] == 0:
        lo, hi = region.det_range
        y = math.sqrt(math.sqrt(lo * hi)) if backend.n == 3 else math.sqrt(lo * hi)
        x = np.array([0.5 * (a + b) for a, b in region.x_box])
        cands = (x + 1j * y * backend.identity)[None, :]
    cands, ld = _sorted_by_logdet(backend, cands)
    kind = _accel._kind_code(backend.n)
    idx = _accel.greedy_separated(kind, cands, ld, 0.5 * delta, lipschitz_logdet(backend))
    nodes = np.ascontiguousarray(cands[idx])
    cert = _certify(backend, nodes, delta, region, n_samples, seed + 7919)
    return Lattice(backend, nodes, float(delta), region, cert)


def certify(lattice: Lattice, n_samples: int = 2**14, seed: int = 0) -> dict:
    """Recompute the certificates of ``lattice`` on a fresh sample of its region."""
    return _certify(lattice.backend, lattice.nodes, lattice.delta, lattice.region, n_samples, seed + 7919)


def lattice_from_points(backend, points, delta: float, region: TruncationRegion | None = None, n_samples: int = 0):
    """Wrap explicit nodes as a :class:`Lattice` (certificates measured, not enforced)."""
    backend = get_backend(backend)
    nodes, _ = _sorted_by_logdet(backend, as_points(backend, points).reshape(-1, backend.n))
    return Lattice(backend, nodes, float(delta), region, _certify(backend, nodes, delta, region, n_samples, 0))


@dataclass
class SublatticeDecomposition:
    """Colour classes of a lattice, each ``A``-separated.

    ``color_bound`` is one more than the largest number of other nodes
    closer than ``A`` to a node, which bounds the number of greedy colours.
    """

    colors: list
    separation: float
    color_bound: int

    @property
    def sublattice(self) -> Lattice:
        return self.colors[0]

    def __len__(self) -> int:
        return len(self.colors)


def distance_matrix(lattice: Lattice) -> np.ndarray:
    """All pairwise Bergman distances between lattice nodes (row blocks)."""
    nodes = lattice.nodes
    N = len(nodes)
    D = np.empty((N, N))
    for s in range(0, N, 256):
        D[s : s + 256] = bergman_distance(lattice.backend, nodes[s : s + 256, None, :], nodes[None, :, :])
    return D


def separated_sublattice(
    lattice: Lattice, A: float, rtol: float = 1e-12, distances: np.ndarray | None = None
) -> SublatticeDecomposition:
    """Greedy colouring of the nodes into ``A``-separated classes.

    Nodes are visited in ``log Δ`` order; each joins the first class where
    all members are at distance ``≥ A(1 - rtol)`` (the slack absorbs
    rounding on exact ties).  ``distances`` may pass a precomputed
    :func:`distance_matrix` when several separations are needed.
    """
    if not A > 0:
        raise ParameterError("separation A must be positive")
    backend = lattice.backend
    nodes = lattice.nodes
    N = len(nodes)
    if N == 0:
        return SublatticeDecomposition([lattice], A, 1)
    thr = A * (1.0 - rtol)
    if lattice.certificates.get("min_pairwise_distance", 0.0) >= thr:
        return SublatticeDecomposition([lattice], A, 1)
    D = distance_matrix(lattice) if distances is None else np.asarray(distances)
    close = D < thr
    np.fill_diagonal(close, False)
    color = np.full(N, -1)
    for i in range(N):
        used = set(color[close[i] & (color >= 0)].tolist())
        c = 0
        while c in used:
            c += 1
        color[i] = c
    parts = []
    for c in range(color.max() + 1):
        mask = color == c
        sel = nodes[mask]
        sub = D[np.ix_(mask, mask)]
        mpd = float(sub[~np.eye(len(sel), dtype=bool)].min()) if len(sel) > 1 else math.inf
        cert = {"min_pairwise_distance": mpd, "overlap_bound": lattice.certificates.get("overlap_bound")}
        parts.append(Lattice(backend, sel, lattice.delta, lattice.region, cert))
    return SublatticeDecomposition(parts, float(A), int(close.sum(axis=1).max()) + 1)
