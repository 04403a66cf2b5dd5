"""
Acceptance suite: eleven criteria at their stated tolerances and time limits.

Each criterion prints one ``PASS``/``FAIL`` line (collected and shown in the
pytest terminal summary).  Run standalone with

    python3 tests/test_acceptance.py
"""

from __future__ import annotations

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conelab import HALF_LINE
from conelab.experiments import PASS, make_spec, run
from conelab.geometry import kernel
from conelab.quadrature import CONVERGED, DIVERGING, disc_rule
from oracles import halfplane_kernel_constant

RESULTS: list = []
BACKENDS = ("halfplane", "lorentz3")


def _record(num, title, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}  {title}: {detail} ({elapsed:.1f}s < {limit:g}s)"
    RESULTS.append(line)
    print(line)
    return ok


def _checks(report):
    return {c.name: c for c in report.checks}


def _failed(report):
    return [f"{c.name}={c.value}" for c in report.checks if c.passed is not True]


# ---------------------------------------------------------------------------


def criterion_01():
    t0 = time.perf_counter()
    probes = [1j, 0.5 + 2j, -1 + 0.5j, 2 + 1j, 0.3 + 0.3j]
    worst = 0.0
    for nu in (0.5, 1.0, 2.0):
        z, w = disc_rule(nu, 96, 512)
        for u in probes:
            K = kernel(HALF_LINE, nu, z[:, None], np.array([u]))
            lhs = float(np.sum(w * np.abs(K) ** 2))
            # independent closed form: K_ν(u, u) = c_ν (2 Im u)^{-(ν+1)}
            rhs = halfplane_kernel_constant(nu) * (2 * u.imag) ** (-(nu + 1))
            worst = max(worst, abs(lhs / rhs - 1))
    return _record(1, "reproducing kernel (half-plane)", worst < 1e-3, f"max rel error {worst:.2e} (tol 1e-3, 15 cases)", time.perf_counter() - t0, 30)


def criterion_02():
    ok, parts, limit_ok = True, [], True
    t_total = 0.0
    for b in BACKENDS:
        t0 = time.perf_counter()
        rep = run(make_spec("box_identity", b, pairs=12))
        dt = time.perf_counter() - t0
        t_total = max(t_total, dt)
        c = _checks(rep)
        ok &= rep.verdict == PASS and c["ratio_constant"].value < 1e-6 and c["fd_matches_closed_form"].value < 1e-5
        limit_ok &= dt < 10
        parts.append(f"{b} spread {rep.metrics['spread']:.1e} fd {rep.metrics['fd_error']:.1e}")
    return _record(2, "box identity, 12 pairs", ok and limit_ok, "; ".join(parts), t_total, 10)


def criterion_03():
    ok, parts, worst = True, [], 0.0
    for b in BACKENDS:
        t0 = time.perf_counter()
        rep = run(make_spec("lattice_certification", b))
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        ok &= rep.verdict == PASS and dt < 60
        m = rep.metrics
        summary = ", ".join(
            f"δ={d}: sep {m[f'd{d:g}_min_separation']:.3f} cover {m[f'd{d:g}_covering']:.3f} "
            f"overlap {m[f'd{d:g}_max_overlap']}≤N={m[f'd{d:g}_N']}"
            for d in (0.2, 0.4)
        )
        parts.append(f"{b} [{summary}] {dt:.1f}s" + ("" if rep.verdict == PASS else f" failed {_failed(rep)}"))
    return _record(3, "lattice certification", ok, "; ".join(parts), worst, 60)


def criterion_04():
    t0 = time.perf_counter()
    ok, parts = True, []
    for p in (0.6, 0.8):
        rep = run(make_spec("thm1_2_equivalence", "halfplane", nu=1.0, p=p, count=20))
        c = _checks(rep)
        ok &= rep.verdict == PASS and rep.metrics["n_measures"] >= 20
        ok &= c["window_spread"].value < 1e3 and c["translation_invariance"].value <= 1e-10
        parts.append(f"p={p}: spread {rep.metrics['spread']:.3g}, translation {rep.metrics['translation_error']:.1e}")
    return _record(4, "lattice averages vs Schatten norm (20 measures)", ok, "; ".join(parts), time.perf_counter() - t0, 300)


def criterion_05():
    t0 = time.perf_counter()
    hi = run(make_spec("thm1_2_cutoff_iv", "halfplane", nu=1.0, p=0.75))
    lo = run(make_spec("thm1_2_cutoff_iv", "halfplane", nu=1.0, p=0.4))
    tr_hi = hi.doubling_traces["berezin_lp"]
    tr_lo = lo.doubling_traces["berezin_lp"]
    last = abs(tr_hi[-1] - tr_hi[-2]) / abs(tr_hi[-1])
    inc = np.diff(tr_lo[-4:])
    mono = bool(np.all(inc > 0) and np.all(np.diff(inc) >= 0))
    ok = hi.metrics["integral_verdict"] == CONVERGED and last < 1e-3
    ok &= lo.metrics["integral_verdict"] == DIVERGING and mono
    detail = f"p=0.75 converged (last doubling {last:.1e}); p=0.4 {lo.metrics['integral_verdict']} (increments {', '.join(f'{v:.2f}' for v in inc)})"
    return _record(5, "cut-off sharpness at p=1/2", ok, detail, time.perf_counter() - t0, 60)


def criterion_06():
    t0 = time.perf_counter()
    rep = run(make_spec("thm1_3_rkt", "halfplane", nu=1.0, p=0.4, m=1))
    m = rep.metrics
    ok = rep.verdict == PASS and m["m0_verdict"] == DIVERGING and m["m1_verdict"] == CONVERGED
    ok &= math.isclose(m["m1_cutoff"], 0.25)
    detail = f"p=0.4: m=0 {m['m0_verdict']}, m=1 {m['m1_verdict']} (cut-off {m['m1_cutoff']:.2f})"
    return _record(6, "box-kernel cut-off shift", ok, detail, time.perf_counter() - t0, 60)


def criterion_07():
    t0 = time.perf_counter()
    ok, parts = True, []
    for b in BACKENDS:
        rep = run(make_spec("prop3_3_hs_identity", b))
        c = _checks(rep)
        spreads = [c[f"m{m}_measure_independent"].value for m in (0, 1)]
        ok &= rep.verdict == PASS and max(spreads) <= 0.05
        parts.append(f"{b} spread m0 {spreads[0]:.2%} m1 {spreads[1]:.2%}")
    return _record(7, "Hilbert-Schmidt identity, 3 measures", ok, "; ".join(parts), time.perf_counter() - t0, 300)


def criterion_08():
    ok, parts, worst = True, [], 0.0
    for b in BACKENDS:
        t0 = time.perf_counter()
        rep = run(make_spec("lemma_offdiag_decay", b))
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        eps = rep.doubling_traces["epsilon"]
        ok &= rep.verdict == PASS and len(eps) >= 4 and all(y <= x for x, y in zip(eps, eps[1:])) and dt < 30
        parts.append(f"{b} ε(A) {' ≥ '.join(f'{v:.3g}' for v in eps)}")
    return _record(8, "off-diagonal decay, 3 doublings", ok, "; ".join(parts), worst, 30)


def criterion_09():
    t0 = time.perf_counter()
    rep = run(make_spec("schatten_axioms", pairs=50))
    c = _checks(rep)
    ok = rep.verdict == PASS and c["p2_frobenius"].value <= 1e-12 and rep.metrics["pairs"] == 50
    detail = f"monotone, Frobenius error {rep.metrics['frobenius_error']:.1e}, triangle on 50 pairs, entrywise bound on 20"
    return _record(9, "Schatten axioms", ok, detail, time.perf_counter() - t0, 10)


def criterion_10():
    t0 = time.perf_counter()
    rep = run(make_spec("thm4_1_cesaro", "halfplane", nu=1.0, p=1.5))
    c = _checks(rep)
    parts = [
        f"{name} {'ok' if c[name].passed else 'FAILED'} ({c[name].value:.3g}, {c[name].tolerance})"
        for name in ("cesaro_toeplitz_inequality", "besov_distribution_window", "schatten_K_stabilization")
    ]
    return _record(10, "Cesàro operator, p=1.5", rep.verdict == PASS, "; ".join(parts), time.perf_counter() - t0, 600)


def criterion_11():
    t0 = time.perf_counter()
    ok, parts = True, []
    for b in BACKENDS:
        rep = run(make_spec("lemma_det_integral", b))
        scal = [c for c in rep.checks if c.name.endswith("_t_scaling")]
        verdicts = [c for c in rep.checks if not c.name.endswith("_t_scaling")]
        ok &= rep.verdict == PASS and len(verdicts) >= 6
        worst = max((c.value for c in scal if isinstance(c.value, float)), default=float("nan"))
        parts.append(f"{b} {sum(bool(c.passed) for c in verdicts)}/{len(verdicts)} verdicts, worst scaling error {worst:.2%}")
    return _record(11, "determinant integrability grid", ok, "; ".join(parts), time.perf_counter() - t0, 600)


CRITERIA = [criterion_01, criterion_02, criterion_03, criterion_04, criterion_05, criterion_06,
            criterion_07, criterion_08, criterion_09, criterion_10, criterion_11]


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i:02d}" for i in range(1, 12)])
def test_acceptance(criterion):
    assert criterion(), RESULTS[-1]


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
