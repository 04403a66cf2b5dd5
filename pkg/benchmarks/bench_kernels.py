"""
Numba vs pure-numpy timings for the hot kernels.

Each kernel is timed directly (both variants are importable side by side),
then ``make_lattice`` is timed end to end in two subprocesses, one with
``CONELAB_DISABLE_NUMBA=1``.  The first numba call (compilation or cache
load) is reported separately from the steady-state timing.

    python3 benchmarks/bench_kernels.py [--cone halfplane|lorentz3] [--delta 0.3]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from conelab import _accel
from conelab.cone import get_backend
from conelab.geometry import (
    _candidates,
    _logdet,
    _region_samples,
    _sorted_by_logdet,
    default_region,
    lipschitz_logdet,
)


def _best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _inputs(cone, delta, n_samples, seed=0):
    b = get_backend(cone)
    region = default_region(b, delta)
    cands = _candidates(b, region, delta, np.random.default_rng(seed))
    cands, ld = _sorted_by_logdet(b, cands[region.contains(cands)])
    samples = _region_samples(b, region, n_samples, seed + 1)
    return b, cands, ld, samples, _logdet(b, samples)


def bench_kernels(cone, delta, n_samples, repeat):
    b, cands, ld, samples, sld = _inputs(cone, delta, n_samples)
    kind = _accel._kind_code(b.n)
    lip = lipschitz_logdet(b)
    rng = np.random.default_rng(1)
    h = rng.standard_normal((48, 48)) + 1j * rng.standard_normal((48, 48))
    h = h @ h.conj().T

    def node_args():
        idx = _accel.greedy_separated_numpy(kind, cands, ld, 0.5 * delta, lip)
        return np.ascontiguousarray(cands[idx]), ld[idx]

    nodes, nld = node_args()
    cases = {
        "greedy_separated": lambda impl: impl(kind, cands, ld, 0.5 * delta, lip),
        "cover_stats": lambda impl: impl(kind, samples, nodes, nld, sld, delta, lip),
        "pairwise_min": lambda impl: impl(kind, nodes, nld, delta, lip),
        "jacobi_eigvalsh": lambda impl: impl(h),
    }
    print(f"# {cone}: {len(cands)} candidates, {len(nodes)} nodes, {n_samples} samples")
    print(f"{'kernel':18s} {'numpy [s]':>10s} {'numba [s]':>10s} {'first [s]':>10s} {'speedup':>8s}")
    for name, call in cases.items():
        t_np, r_np = _best_of(lambda: call(getattr(_accel, f"{name}_numpy")), repeat)
        if not _accel._HAVE_NUMBA:
            print(f"{name:18s} {t_np:10.4f} {'n/a':>10s}")
            continue
        nb = getattr(_accel, f"{name}_numba")
        t0 = time.perf_counter()
        call(nb)
        first = time.perf_counter() - t0
        t_nb, r_nb = _best_of(lambda: call(nb), repeat)
        _check_same(name, r_np, r_nb)
        print(f"{name:18s} {t_np:10.4f} {t_nb:10.4f} {first:10.4f} {t_np / t_nb:8.1f}x")


def _check_same(name, a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for x, y in zip(a, b):
        x, y = np.asarray(x), np.asarray(y)
        if x.dtype.kind in "iu":
            ok = np.array_equal(x, y)
        else:
            ok = np.allclose(np.sort(x.ravel()), np.sort(y.ravel()), rtol=1e-9, atol=1e-12, equal_nan=True)
        if not ok:
            raise SystemExit(f"{name}: numba and numpy results differ")


_E2E = (
    "import time,sys;from conelab.geometry import make_lattice;"
    "t=time.perf_counter();L=make_lattice(sys.argv[1],float(sys.argv[2]));"
    "print(len(L), time.perf_counter()-t)"
)


def bench_end_to_end(cone, delta):
    print(f"# make_lattice({cone!r}, {delta}) end to end (fresh interpreter, includes JIT cache load)")
    for flag in ("1", "0"):
        env = dict(os.environ, CONELAB_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", _E2E, cone, str(delta)], env=env, capture_output=True, text=True, check=True)
        n, t = out.stdout.split()
        label = "numpy" if flag == "1" else "numba"
        print(f"{label:6s} nodes={n:>6s} time={float(t):8.3f}s")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--cone", default="halfplane")
    ap.add_argument("--delta", type=float, default=0.2)
    ap.add_argument("--samples", type=int, default=2**12)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--no-e2e", action="store_true")
    args = ap.parse_args(argv)
    bench_kernels(args.cone, args.delta, args.samples, args.repeat)
    if not args.no_e2e:
        bench_end_to_end(args.cone, args.delta)


if __name__ == "__main__":
    main()
