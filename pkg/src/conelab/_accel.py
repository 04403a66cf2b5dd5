"""
Hot numeric kernels with two interchangeable implementations.

Every kernel exists as a numba ``@njit`` loop and as a pure-numpy
vectorised routine.  The numba path is used when numba imports and the
environment variable ``CONELAB_DISABLE_NUMBA`` is unset (or ``0``); set
it to ``1`` to force the numpy path.  Both paths are importable directly
(``*_numba`` / ``*_numpy``) for benchmarking and cross-checking.

Distances follow the Bergman metric normalised by ``∂∂̄ log K_{n/r}``:
half-plane ``d = d_hyp / √2``; Lorentz tube
``d = sqrt(3 (artanh² s1 + artanh² s2))`` with ``s1, s2`` the singular
values of the Cayley image after moving the base point to ``ie``.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("CONELAB_DISABLE_NUMBA", "0") in ("", "0")

_S_MAX = 1.0 - 1e-15

# ---------------------------------------------------------------------------
# scalar distance formulas (plain python; jitted below when numba exists)
# ---------------------------------------------------------------------------


def _dist_half(x1, y1, x2, y2):
    q = ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (4.0 * y1 * y2)
    return math.sqrt(2.0) * math.asinh(math.sqrt(q))


def _lor_frame(v0, v1, v2):
    # 1/Δ^{1/2}(v) and the boost parameters taking e to v/Δ^{1/2}(v)
    sc = math.sqrt(v0 * v0 - v1 * v1 - v2 * v2)
    u1, u2 = v1 / sc, v2 / sc
    sh = math.hypot(u1, u2)
    if sh > 0.0:
        n1, n2 = u1 / sh, u2 / sh
    else:
        n1, n2 = 1.0, 0.0
    return 1.0 / sc, v0 / sc, sh, n1, n2


def _lor_invariants(a0, a1, a2, isc, ch, sh, n1, n2):
    # a = z - Re w; move w to ie (inverse boost has the spatial part negated),
    # then the Cayley image
    #   c = (b - ie)(b + ie)^{-1} = ((Q+1), 2i b1, 2i b2) / (Q - 1 + 2i b0),  Q = Δ(b)
    # has s1² + s2² = |c|² and s1 s2 = |Δ(c)|
    par = n1 * a1 + n2 * a2
    b0 = (ch * a0 - sh * par) * isc
    k = -sh * a0 + (ch - 1.0) * par
    b1 = (a1 + k * n1) * isc
    b2 = (a2 + k * n2) * isc
    bb = b1 * b1 + b2 * b2
    q = b0 * b0 - bb
    dp = q - 1.0 + 2j * b0
    den = dp.real * dp.real + dp.imag * dp.imag
    q1 = q + 1.0
    n2sq = (q1.real**2 + q1.imag**2 + 4.0 * (b1.real**2 + b1.imag**2 + b2.real**2 + b2.imag**2)) / den
    dd = abs(q1 * q1 + 4.0 * bb) / den
    return n2sq, dd


def _lor_finish(n2sq, dd):
    disc = math.sqrt(max((n2sq - dd) * (n2sq + dd), 0.0))
    s1 = min(math.sqrt(n2sq + disc), _S_MAX)
    s2 = min(math.sqrt(max(n2sq - disc, 0.0)), _S_MAX)
    t1 = math.atanh(s1)
    t2 = math.atanh(s2)
    return math.sqrt(3.0 * (t1 * t1 + t2 * t2))


def _lor_from_frame(a0, a1, a2, isc, ch, sh, n1, n2):
    n2sq, dd = _lor_invariants(a0, a1, a2, isc, ch, sh, n1, n2)
    return _lor_finish(n2sq, dd)


def _dist_lor(zr, zi, wr, wi):
    isc, ch, sh, n1, n2 = _lor_frame(wi[0], wi[1], wi[2])
    a0 = complex(zr[0] - wr[0], zi[0])
    a1 = complex(zr[1] - wr[1], zi[1])
    a2 = complex(zr[2] - wr[2], zi[2])
    return _lor_from_frame(a0, a1, a2, isc, ch, sh, n1, n2)


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def dist_half_numpy(z, w):
    """Vectorised half-plane distance between broadcastable complex arrays."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    q = np.abs(z - w) ** 2 / (4.0 * z.imag * w.imag)
    return np.sqrt(2.0) * np.arcsinh(np.sqrt(q))


def dist_lor_numpy(z, w):
    """Vectorised Lorentz-tube distance; ``z``, ``w`` broadcast over leading axes, trailing 3."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z, w = np.broadcast_arrays(z, w)
    wr, wi = w.real, w.imag
    sc = np.sqrt(wi[..., 0] ** 2 - wi[..., 1] ** 2 - wi[..., 2] ** 2)
    u = wi / sc[..., None]
    sh = np.hypot(u[..., 1], u[..., 2])
    safe = sh > 0
    n1 = np.where(safe, u[..., 1] / np.where(safe, sh, 1.0), 1.0)
    n2 = np.where(safe, u[..., 2] / np.where(safe, sh, 1.0), 0.0)
    ch = u[..., 0]
    isc = 1.0 / sc
    a = z - wr
    par = n1 * a[..., 1] + n2 * a[..., 2]
    b0 = (ch * a[..., 0] - sh * par) * isc
    k = -sh * a[..., 0] + (ch - 1.0) * par
    b1 = (a[..., 1] + k * n1) * isc
    b2 = (a[..., 2] + k * n2) * isc
    bb = b1 * b1 + b2 * b2
    q = b0 * b0 - bb
    den = np.abs(q - 1.0 + 2j * b0) ** 2
    q1 = q + 1.0
    n2sq = (np.abs(q1) ** 2 + 4.0 * (np.abs(b1) ** 2 + np.abs(b2) ** 2)) / den
    dd = np.abs(q1 * q1 + 4.0 * bb) / den
    disc = np.sqrt(np.maximum((n2sq - dd) * (n2sq + dd), 0.0))
    s1 = np.minimum(np.sqrt(n2sq + disc), _S_MAX)
    s2 = np.minimum(np.sqrt(np.maximum(n2sq - disc, 0.0)), _S_MAX)
    return np.sqrt(3.0 * (np.arctanh(s1) ** 2 + np.arctanh(s2) ** 2))


def _dist_rows_numpy(kind, pt, pts):
    if kind == 1:
        return dist_half_numpy(pts[:, 0], pt[0])
    return dist_lor_numpy(pts, pt[None, :])


def greedy_separated_numpy(kind, cands, logdet, radius, lip):
    """Greedy maximal set of candidates with pairwise distance ≥ ``radius``.

    ``cands`` must be sorted by ``logdet``; ``lip`` is the Lipschitz
    constant of ``log Δ(Im z)`` so nodes outside the window
    ``|Δ log Δ| ≤ lip·radius`` are skipped without a distance evaluation.
    """
    m = cands.shape[0]
    chosen = np.empty(m, dtype=np.int64)
    count = 0
    window = lip * radius
    for i in range(m):
        if count:
            sel = chosen[:count]
            lo = np.searchsorted(logdet[sel], logdet[i] - window, side="left")
            near = sel[lo:]
            if near.size:
                d = _dist_rows_numpy(kind, cands[i], cands[near])
                if np.any(d < radius):
                    continue
        chosen[count] = i
        count += 1
    return chosen[:count].copy()


def cover_stats_numpy(kind, samples, nodes, node_logdet, sample_logdet, radius, lip):
    """Per sample: distance to nearest node and number of nodes within ``radius``.

    Nodes must be sorted by ``node_logdet``.  The nearest-node distance is
    only exact when it is below ``radius`` (otherwise it is reported as a
    lower bound ≥ radius).
    """
    m = samples.shape[0]
    mind = np.empty(m)
    counts = np.zeros(m, dtype=np.int64)
    window = lip * radius
    lo = np.searchsorted(node_logdet, sample_logdet - window, side="left")
    hi = np.searchsorted(node_logdet, sample_logdet + window, side="right")
    for i in range(m):
        if hi[i] <= lo[i]:
            mind[i] = np.inf
            continue
        d = _dist_rows_numpy(kind, samples[i], nodes[lo[i] : hi[i]])
        mind[i] = d.min()
        counts[i] = int(np.count_nonzero(d < radius))
    return mind, counts


def pairwise_min_numpy(kind, pts, logdet, cutoff, lip):
    """Minimum pairwise distance among points sorted by ``logdet``, capped at ``cutoff``."""
    best = cutoff
    m = pts.shape[0]
    window = lip * cutoff
    for i in range(m - 1):
        hi = np.searchsorted(logdet, logdet[i] + window, side="right")
        if hi <= i + 1:
            continue
        d = _dist_rows_numpy(kind, pts[i], pts[i + 1 : hi])
        best = min(best, float(d.min()))
    return best


# Dual-cone functionals ℓ map the tube holomorphically into the upper
# half-plane, so by Schwarz-Pick |Re ℓ(z) - Re ℓ(w)| <= 2 sqrt(Im ℓ(z) Im ℓ(w)) sinh(D/2)
# where D/2 <= d/√3 (Lorentz tube) or D = √2 d (half-plane).
_ELLS = np.array([[1.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, -1.0], [1.0, 0.0, 1.0]])


def projections(kind, z):
    """Real and imaginary parts of the half-plane projections used for pruning."""
    z = np.asarray(z, dtype=complex)
    if kind == 1:
        f = z[:, :1]
    else:
        f = z @ _ELLS.T
    return np.ascontiguousarray(f.real), np.ascontiguousarray(f.imag)


def _sinh2(kind, radius):
    half = radius / math.sqrt(2.0) if kind == 1 else radius / math.sqrt(3.0)
    return math.sinh(half) ** 2


def jacobi_eigvalsh_numpy(a, tol=1e-13, max_sweeps=64):
    """Cyclic Jacobi eigenvalues of a complex Hermitian matrix (row/column ops vectorised)."""
    a = np.array(a, dtype=complex, copy=True)
    n = a.shape[0]
    total = float(np.sum(np.abs(a) ** 2))
    if total == 0.0 or n == 1:
        return np.real(np.diag(a)).copy()
    for _ in range(max_sweeps):
        off = total - float(np.sum(np.abs(np.diag(a)) ** 2))
        if off <= tol * tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g < 1e-300:
                    continue
                ph = apq / g
                theta = (a[q, q].real - a[p, p].real) / (2.0 * g)
                t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                mask = np.ones(n, dtype=bool)
                mask[p] = mask[q] = False
                cp = a[mask, p].copy()
                cq = a[mask, q]
                a[mask, p] = c * cp - s * np.conj(ph) * cq
                a[mask, q] = s * cp + c * np.conj(ph) * cq
                a[p, mask] = np.conj(a[mask, p])
                a[q, mask] = np.conj(a[mask, q])
                a[p, p] = a[p, p].real - t * g
                a[q, q] = a[q, q].real + t * g
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.real(np.diag(a)).copy()


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:
    _dist_half_nb = numba.njit(cache=True)(_dist_half)

    _lor_frame_nb = numba.njit(cache=True)(_lor_frame)
    _lor_invariants_nb = numba.njit(cache=True)(_lor_invariants)
    _lor_finish_nb = numba.njit(cache=True)(_lor_finish)

    @numba.njit(cache=True)
    def _frames_nb(v):
        out = np.empty((v.shape[0], 5))
        for j in range(v.shape[0]):
            isc, ch, sh, n1, n2 = _lor_frame_nb(v[j, 0], v[j, 1], v[j, 2])
            out[j, 0] = isc
            out[j, 1] = ch
            out[j, 2] = sh
            out[j, 3] = n1
            out[j, 4] = n2
        return out

    @numba.njit(cache=True)
    def _dist_lor_split(x, y, i, u, fr, j, cut):
        # distance, or inf once s1² >= |c|²/2 already forces d >= radius
        a0 = complex(x[i, 0] - u[j, 0], y[i, 0])
        a1 = complex(x[i, 1] - u[j, 1], y[i, 1])
        a2 = complex(x[i, 2] - u[j, 2], y[i, 2])
        n2sq, dd = _lor_invariants_nb(a0, a1, a2, fr[j, 0], fr[j, 1], fr[j, 2], fr[j, 3], fr[j, 4])
        if n2sq >= cut:
            return np.inf
        return _lor_finish_nb(n2sq, dd)

    @numba.njit(cache=True)
    def _pair_dist_nb(kind, x, y, i, u, v, j, cut):
        if kind == 1:
            return _dist_half_nb(x[i, 0], y[i, 0], u[j, 0], v[j, 0])
        return _dist_lor_split(x, y, i, u, v, j, cut)

    @numba.njit(cache=True)
    def _lower_bound(arr, value):
        lo, hi = 0, arr.shape[0]
        while lo < hi:
            mid = (lo + hi) // 2
            if arr[mid] < value:
                lo = mid + 1
            else:
                hi = mid
        return lo

    @numba.njit(cache=True)
    def _far(fr, fi, i, gr, gi, j, s2):
        # exact rejection: the pair is at distance >= radius when any
        # half-plane projection separates the real parts too much
        for k in range(fr.shape[1]):
            dre = fr[i, k] - gr[j, k]
            if dre * dre > 4.0 * fi[i, k] * gi[j, k] * s2:
                return True
        return False

    @numba.njit(cache=True)
    def _greedy_nb(kind, x, y, V, fr, fi, s2, logdet, radius, lip):
        m = x.shape[0]
        chosen = np.empty(m, dtype=np.int64)
        chosen_ld = np.empty(m)
        count = 0
        window = lip * radius
        cut = 2.0 * math.tanh(radius / math.sqrt(3.0)) ** 2
        for i in range(m):
            lo = _lower_bound(chosen_ld[:count], logdet[i] - window)
            ok = True
            for j in range(lo, count):
                c = chosen[j]
                if _far(fr, fi, i, fr, fi, c, s2):
                    continue
                if _pair_dist_nb(kind, x, y, i, x, V, c, cut) < radius:
                    ok = False
                    break
            if ok:
                chosen[count] = i
                chosen_ld[count] = logdet[i]
                count += 1
        return chosen[:count].copy()

    @numba.njit(cache=True)
    def _cover_nb(kind, sx, sy, sfr, sfi, nx, nV, nfr, nfi, s2, node_logdet, sample_logdet, radius, lip):
        m = sx.shape[0]
        mind = np.empty(m)
        counts = np.zeros(m, dtype=np.int64)
        window = lip * radius
        cut = 2.0 * math.tanh(radius / math.sqrt(3.0)) ** 2
        for i in range(m):
            lo = _lower_bound(node_logdet, sample_logdet[i] - window)
            best = np.inf
            for j in range(lo, nx.shape[0]):
                if node_logdet[j] > sample_logdet[i] + window:
                    break
                if _far(sfr, sfi, i, nfr, nfi, j, s2):
                    continue
                d = _pair_dist_nb(kind, sx, sy, i, nx, nV, j, cut)
                if d < best:
                    best = d
                if d < radius:
                    counts[i] += 1
            mind[i] = best
        return mind, counts

    @numba.njit(cache=True)
    def _pairwise_min_nb(kind, x, y, V, fr, fi, s2, logdet, cutoff, lip):
        best = cutoff
        m = x.shape[0]
        window = lip * cutoff
        cut = 2.0 * math.tanh(cutoff / math.sqrt(3.0)) ** 2
        for i in range(m - 1):
            for j in range(i + 1, m):
                if logdet[j] > logdet[i] + window:
                    break
                if _far(fr, fi, i, fr, fi, j, s2):
                    continue
                d = _pair_dist_nb(kind, x, y, i, x, V, j, cut)
                if d < best:
                    best = d
        return best

    def _split(z):
        z = np.asarray(z, dtype=complex)
        return np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)

    def _second(kind, y):
        # what the inner loops need of the second point set: Im for the
        # half-plane, precomputed boost frames for the Lorentz tube
        return y if kind == 1 else _frames_nb(y)

    def greedy_separated_numba(kind, cands, logdet, radius, lip):
        x, y = _split(cands)
        fr, fi = projections(kind, cands)
        s2 = _sinh2(kind, radius)
        return _greedy_nb(kind, x, y, _second(kind, y), fr, fi, s2, np.ascontiguousarray(logdet, dtype=float), radius, lip)

    def cover_stats_numba(kind, samples, nodes, node_logdet, sample_logdet, radius, lip):
        sx, sy = _split(samples)
        nx, ny = _split(nodes)
        sfr, sfi = projections(kind, samples)
        nfr, nfi = projections(kind, nodes)
        return _cover_nb(
            kind, sx, sy, sfr, sfi, nx, _second(kind, ny), nfr, nfi, _sinh2(kind, radius),
            np.asarray(node_logdet, float), np.asarray(sample_logdet, float), radius, lip,
        )

    def pairwise_min_numba(kind, pts, logdet, cutoff, lip):
        x, y = _split(pts)
        fr, fi = projections(kind, pts)
        return _pairwise_min_nb(kind, x, y, _second(kind, y), fr, fi, _sinh2(kind, cutoff), np.asarray(logdet, float), cutoff, lip)

    @numba.njit(cache=True)
    def jacobi_eigvalsh_numba(a_in, tol=1e-13, max_sweeps=64):
        a = a_in.astype(np.complex128).copy()
        n = a.shape[0]
        total = 0.0
        for i in range(n):
            for j in range(n):
                total += abs(a[i, j]) ** 2
        out = np.empty(n)
        if total == 0.0 or n == 1:
            for i in range(n):
                out[i] = a[i, i].real
            return out
        for _ in range(max_sweeps):
            diag = 0.0
            for i in range(n):
                diag += abs(a[i, i]) ** 2
            if total - diag <= tol * tol * total:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    g = abs(apq)
                    if g < 1e-300:
                        continue
                    ph = apq / g
                    cph = ph.conjugate()
                    theta = (a[q, q].real - a[p, p].real) / (2.0 * g)
                    t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        if k == p or k == q:
                            continue
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * cph * akq
                        a[k, q] = s * akp + c * cph * akq
                        a[p, k] = a[k, p].conjugate()
                        a[q, k] = a[k, q].conjugate()
                    a[p, p] = a[p, p].real - t * g
                    a[q, q] = a[q, q].real + t * g
                    a[p, q] = 0.0
                    a[q, p] = 0.0
        for i in range(n):
            out[i] = a[i, i].real
        return out


def _kind_code(n: int) -> int:
    return 1 if n == 1 else 3


if USE_NUMBA:
    greedy_separated = greedy_separated_numba
    cover_stats = cover_stats_numba
    pairwise_min = pairwise_min_numba
    jacobi_eigvalsh = jacobi_eigvalsh_numba
else:
    greedy_separated = greedy_separated_numpy
    cover_stats = cover_stats_numpy
    pairwise_min = pairwise_min_numpy
    jacobi_eigvalsh = jacobi_eigvalsh_numpy
