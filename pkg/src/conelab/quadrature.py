"""
Quadrature over the tube domain.

Integrals over the unbounded tube are evaluated on nested, geometrically
growing regions.  Each growth step only integrates the new shell, so the
trace of cumulative values is monotone for positive integrands and the
shell increments are the convergence signal.

Three families of rules live here:

* ``integrate_halfplane``: composite Gauss-Legendre in ``(x, log y)``.
* ``integrate_lorentz``: scrambled Sobol points in group-adapted
  coordinates of the Lorentz tube.
* ``disc_rule`` / ``ball_rule``: fixed rules for the whole half-plane
  (through the Cayley map) and for Bergman balls.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special
from scipy.stats import qmc

from .cone import ConeBackend, lorentz_boost_apply

__all__ = [
    "ConvergenceReport",
    "Budget",
    "classify_trace",
    "integrate_halfplane",
    "integrate_lorentz",
    "integrate_tube",
    "disc_rule",
    "ball_rule",
]

CONVERGED = "converged"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


@dataclass
class ConvergenceReport:
    """Value of a truncated integral and the evidence behind its verdict.

    Attributes
    ----------
    value : float
        Integral over the largest region reached.
    verdict : str
        ``"converged"``, ``"diverging"`` or ``"inconclusive"``.
    trace : list of float
        Cumulative value after each growth step.
    increments : list of float
        Shell contributions (``trace`` differences, first entry is the core).
    cells : int
        Number of integrand evaluations spent.
    """

    value: float
    verdict: str
    trace: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    cells: int = 0

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    @property
    def diverging(self) -> bool:
        return self.verdict == DIVERGING

    def scaled(self, factor: float) -> "ConvergenceReport":
        return ConvergenceReport(
            self.value * factor,
            self.verdict,
            [v * factor for v in self.trace],
            [v * factor for v in self.increments],
            self.cells,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Budget:
    """Limits for region growth; exhausting any of them yields ``inconclusive``."""

    max_steps: int = 40
    max_cells: int = 50_000_000
    max_seconds: float = 120.0


def classify_trace(increments, trace, rtol=1e-3, min_steps=3, min_div_steps=6, ratio=0.97, floor=0.8, window=3):
    """Verdict for a sequence of shell increments.

    Converged when the last increment is below ``rtol`` of the running
    value.  Diverging when the last ``window`` ratios of successive
    increments are all at least ``floor`` (noise allowance) and their
    geometric mean is at least ``ratio``: the shells are not shrinking, so
    the truncated integral grows without bound.  Slowly shrinking shells
    (a convergent tail near a cut-off) satisfy neither test and end
    ``inconclusive`` when the budget runs out.  Returns ``None`` while
    undecided.
    """
    k = len(increments) - 1
    if k < 1:
        return None
    value = trace[-1]
    last = increments[-1]
    if value == 0.0 and last == 0.0 and k >= min_steps:
        return CONVERGED
    if k >= min_steps and value != 0.0 and abs(last) <= rtol * abs(value):
        return CONVERGED
    if k >= min_div_steps:
        tail = increments[-(window + 1) :]
        if all(v > 0 for v in tail):
            q = [b / a for a, b in zip(tail[:-1], tail[1:])]
            if min(q) >= floor and math.prod(q) ** (1.0 / len(q)) >= ratio:
                return DIVERGING
    return None


# ---------------------------------------------------------------------------
# half-plane: composite Gauss-Legendre in (x, s = log y)
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gauss(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    return t, w


def _panel_nodes(edges, order):
    t, w = _gauss(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:, 0:1], edges[:, 1:2]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * t[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def integrate_halfplane(
    f,
    *,
    x0=0.0,
    y0=1.0,
    x_half=4.0,
    s_half=math.log(4.0),
    n_x_central=16,
    n_s_central=8,
    order=16,
    growth=2.0,
    rtol=1e-3,
    budget: Budget | None = None,
    y_floor=0.0,
):
    """Integrate ``f(x, y) dx dy`` over the upper half-plane on growing boxes.

    Region ``k`` is ``|x - x0| <= x_half·g^k`` and
    ``|log(y/y0)| <= s_half + k log g`` with ``g = growth``.

    Parameters
    ----------
    f : callable
        Vectorised integrand taking real arrays ``x`` and ``y``.
    y_floor : float
        Optional hard lower limit for ``y`` (shells below it are skipped).

    Returns
    -------
    ConvergenceReport
    """
    budget = budget or Budget()
    t0 = time.perf_counter()
    lg = math.log(growth)
    s0 = math.log(y0)
    cx = np.linspace(-x_half, x_half, n_x_central + 1)
    x_core = np.stack([cx[:-1], cx[1:]], axis=1)
    cs = np.linspace(-s_half, s_half, n_s_central + 1)
    s_core = np.stack([cs[:-1], cs[1:]], axis=1)

    def block(x_edges, s_edges):
        if len(x_edges) == 0 or len(s_edges) == 0:
            return 0.0, 0
        xs, wx = _panel_nodes(np.asarray(x_edges) + x0, order)
        ss, ws = _panel_nodes(np.asarray(s_edges) + s0, order)
        ys = np.exp(ss)
        keep = ys >= y_floor
        ys, ws = ys[keep], ws[keep]
        if ys.size == 0:
            return 0.0, 0
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        vals = np.asarray(f(X, Y), dtype=float)
        total = float(np.einsum("i,ij,j->", wx, vals, ws * ys))
        return total, vals.size

    core, cells = block(x_core, s_core)
    trace, increments = [core], [core]
    x_edges = [tuple(e) for e in x_core]
    s_edges = [tuple(e) for e in s_core]
    verdict = None
    for k in range(1, budget.max_steps + 1):
        xa, xb = x_half * growth ** (k - 1), x_half * growth**k
        sa, sb = s_half + (k - 1) * lg, s_half + k * lg
        new_x = [(xa, xb), (-xb, -xa)]
        new_s = [(sa, sb), (-sb, -sa)]
        inc1, c1 = block(new_x, s_edges + new_s)
        inc2, c2 = block(x_edges, new_s)
        x_edges += new_x
        s_edges += new_s
        cells += c1 + c2
        inc = inc1 + inc2
        trace.append(trace[-1] + inc)
        increments.append(inc)
        verdict = classify_trace(increments, trace, rtol=rtol)
        if verdict is not None:
            break
        if cells > budget.max_cells or time.perf_counter() - t0 > budget.max_seconds:
            break
    return ConvergenceReport(trace[-1], verdict or INCONCLUSIVE, trace, increments, cells)


# ---------------------------------------------------------------------------
# Lorentz tube: Sobol points in (log τ, η, φ, asinh x')
# ---------------------------------------------------------------------------


def _lorentz_map(pts, anchor, x0):
    # pts columns: s = log τ, η, φ, u1, u2, u3
    tau = np.exp(pts[:, 0])
    eta, phi = pts[:, 1], pts[:, 2]
    she = np.sinh(eta)
    y = tau[:, None] * np.stack([np.cosh(eta), she * np.cos(phi), she * np.sin(phi)], axis=1)
    a = y + anchor[None, :]
    da = a[:, 0] ** 2 - a[:, 1] ** 2 - a[:, 2] ** 2
    sa = np.sqrt(da)
    xp = np.sinh(pts[:, 3:6])
    x = x0[None, :] + sa[:, None] * lorentz_boost_apply(a / sa[:, None], xp)
    jac = da**1.5 * np.prod(np.cosh(pts[:, 3:6]), axis=1) * tau**3 * she
    return x, y, jac


def _slabs(lo_old, hi_old, lo_new, hi_new):
    # boxes partitioning [lo_new, hi_new] minus [lo_old, hi_old] (nested boxes)
    out = []
    d = len(lo_new)
    for i in range(d):
        for a, b in ((lo_new[i], lo_old[i]), (hi_old[i], hi_new[i])):
            if b - a <= 0:
                continue
            lo = [lo_old[j] if j < i else lo_new[j] for j in range(d)]
            hi = [hi_old[j] if j < i else hi_new[j] for j in range(d)]
            lo[i], hi[i] = a, b
            out.append((np.array(lo), np.array(hi)))
    return out


def integrate_lorentz(
    f,
    *,
    anchor=(1.0, 0.0, 0.0),
    x0=(0.0, 0.0, 0.0),
    s_half=math.log(2.0),
    eta0=1.0,
    u0=1.0,
    growth=2.0,
    n_points=2**12,
    seed=0,
    rtol=1e-3,
    budget: Budget | None = None,
):
    """Integrate ``f(x, y) dx dy`` over the Lorentz tube on growing regions.

    Cone points are ``y = τ(cosh η, sinh η cos φ, sinh η sin φ)``; the
    real part is ``x = x0 + Δ(a)^{1/2} B_a sinh(u)`` with ``a = y + anchor``
    and ``B_a`` the boost to ``a``, which matches the natural scale of
    integrands like ``|Δ((z + i·anchor)/i)|^{-q}``.  Each growth step adds
    ``log g`` to the ranges of ``log τ`` (both ways), ``η`` and ``u``, and
    every new slab gets ``n_points`` scrambled Sobol points.
    """
    budget = budget or Budget()
    t0 = time.perf_counter()
    anchor = np.asarray(anchor, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    lg = math.log(growth)
    rng = np.random.default_rng(seed)

    def box(k):
        lo = np.array([-s_half - k * lg, 0.0, 0.0, -u0 - k * lg, -u0 - k * lg, -u0 - k * lg])
        hi = np.array([s_half + k * lg, eta0 + k * lg, 2 * np.pi, u0 + k * lg, u0 + k * lg, u0 + k * lg])
        return lo, hi

    def estimate(lo, hi):
        sob = qmc.Sobol(6, scramble=True, seed=rng)
        u = sob.random(n_points)
        pts = lo[None, :] + u * (hi - lo)[None, :]
        x, y, jac = _lorentz_map(pts, anchor, x0)
        vals = np.asarray(f(x, y), dtype=float) * jac
        return float(np.prod(hi - lo) * math.fsum(vals) / n_points), n_points

    lo, hi = box(0)
    core, cells = estimate(lo, hi)
    trace, increments = [core], [core]
    verdict = None
    for k in range(1, budget.max_steps + 1):
        lo_new, hi_new = box(k)
        inc = 0.0
        for a, b in _slabs(lo, hi, lo_new, hi_new):
            v, c = estimate(a, b)
            inc += v
            cells += c
        lo, hi = lo_new, hi_new
        trace.append(trace[-1] + inc)
        increments.append(inc)
        verdict = classify_trace(increments, trace, rtol=rtol)
        if verdict is not None:
            break
        if cells > budget.max_cells or time.perf_counter() - t0 > budget.max_seconds:
            break
    return ConvergenceReport(trace[-1], verdict or INCONCLUSIVE, trace, increments, cells)


def integrate_tube(backend: ConeBackend, f, *, center=None, rtol=1e-3, budget=None, seed=0, **kw):
    """Dispatch to the half-plane or Lorentz integrator.

    ``f`` receives complex points ``z`` with trailing axis ``n`` and must
    return the integrand for Lebesgue measure ``dx dy``.  ``center`` is a
    tube point around which regions grow.
    """
    if backend.n == 1:
        c = complex(np.asarray(center if center is not None else 1j).ravel()[0])

        def g(x, y):
            return f((x + 1j * y)[..., None])

        return integrate_halfplane(g, x0=c.real, y0=c.imag, rtol=rtol, budget=budget, **kw)
    c = np.asarray(center if center is not None else 1j * backend.identity, dtype=complex)

    def g(x, y):
        return f(x + 1j * y)

    kw.setdefault("anchor", c.imag)
    return integrate_lorentz(g, x0=c.real, rtol=rtol, budget=budget, seed=seed, **kw)


# ---------------------------------------------------------------------------
# fixed rules
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def disc_rule(sigma: float, n_rho: int = 64, n_theta: int = 256):
    """Rule for ``∫ F(z) y^{σ-1} dx dy`` over the whole upper half-plane.

    Built on the Cayley map ``z = i(1+ω)/(1-ω)``: Gauss-Jacobi in
    ``ρ = |ω|²`` against ``(1-ρ)^{σ-1}`` and the trapezoid rule in
    ``arg ω``.  Exact for ``F·|1-ω|^{2σ+2}`` a polynomial in
    ``ω, ω̄`` of moderate degree.

    Returns
    -------
    z : ndarray of complex, shape (n_rho·n_theta,)
    w : ndarray of float, same shape
    """
    t, wj = special.roots_jacobi(n_rho, sigma - 1.0, 0.0)
    rho = 0.5 * (1.0 + t)
    wr = 2.0 ** (-sigma) * wj
    theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    om = np.sqrt(rho)[:, None] * np.exp(1j * theta)[None, :]
    z = 1j * (1.0 + om) / (1.0 - om)
    w = wr[:, None] * (2.0 * np.pi / n_theta) * 2.0 * np.abs(1.0 - om) ** (-2.0 * sigma - 2.0)
    z.setflags(write=False)
    w.setflags(write=False)
    return z.ravel(), w.ravel()


def _lorentz_ball_box(backend, delta, rng):
    # half-widths of a box around ie containing B_δ(ie), grown until no
    # sampled point of the box boundary lies inside the ball
    from ._accel import dist_lor_numpy

    e = backend.identity
    h = 1.2 * delta / math.sqrt(1.5)
    while True:
        pts = rng.uniform(-1.0, 1.0, size=(20000, 6))
        face = rng.integers(0, 6, size=pts.shape[0])
        pts[np.arange(pts.shape[0]), face] = np.sign(pts[np.arange(pts.shape[0]), face])
        z = pts[:, :3] * h + 1j * (e[None, :] + pts[:, 3:] * h)
        ok = backend.in_cone(z.imag)
        d = np.full(z.shape[0], np.inf)
        d[ok] = dist_lor_numpy(z[ok], 1j * e[None, :])
        if d.min() > delta:
            return h
        h *= 1.25


@functools.lru_cache(maxsize=32)
def ball_rule(backend: ConeBackend, delta: float, size: int = 0, seed: int = 12345):
    """Rule for ``∫_{B_δ(ie)} F dλ`` on the Bergman ball about ``ie``.

    Half-plane: the ball is the Euclidean disc with centre ``i cosh ρ`` and
    radius ``sinh ρ`` (``ρ = √2 δ``); polar Gauss-Legendre in the radius,
    trapezoid in the angle.  Lorentz tube: scrambled Sobol points in a
    certified bounding box, rejected outside the ball.  Push forward to
    ``B_δ(z)`` with ``ζ -> Re z + h·ζ`` (``dλ`` is invariant).

    Returns
    -------
    zeta : ndarray, shape (N, n) complex
    w : ndarray, shape (N,) float, weights for ``dλ``
    """
    if backend.n == 1:
        n_r = size or 24
        n_t = 2 * n_r
        rho = math.sqrt(2.0) * delta
        c, R = math.cosh(rho), math.sinh(rho)
        t, wt = _gauss(n_r)
        r = 0.5 * R * (1.0 + t)
        wr = 0.5 * R * wt * r
        th = 2.0 * np.pi * (np.arange(n_t) + 0.5) / n_t
        zeta = (1j * c + r[:, None] * np.exp(1j * th)[None, :]).ravel()
        w = (wr[:, None] * (2.0 * np.pi / n_t) * np.ones(n_t)[None, :]).ravel() / zeta.imag**2
        return zeta[:, None], w
    from ._accel import dist_lor_numpy

    n = size or 2**15
    rng = np.random.default_rng(seed)
    e = backend.identity
    h = _lorentz_ball_box(backend, delta, rng)
    u = qmc.Sobol(6, scramble=True, seed=rng).random(n)
    pts = 2.0 * u - 1.0
    zeta = pts[:, :3] * h + 1j * (e[None, :] + pts[:, 3:] * h)
    ok = backend.in_cone(zeta.imag)
    zeta = zeta[ok]
    inside = dist_lor_numpy(zeta, 1j * e[None, :]) < delta
    zeta = zeta[inside]
    w = np.full(zeta.shape[0], (2.0 * h) ** 6 / n) / backend.det(zeta.imag) ** 3
    return zeta, w
