import json

import pytest

from conelab import ParameterError
from conelab.experiments import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    REGISTRY,
    ExperimentBudget,
    list_experiments,
    make_spec,
    run,
    sweep,
    sweep_csv,
)

EXPECTED_NAMES = {
    "thm1_2_equivalence",
    "thm1_2_cutoff_iv",
    "thm1_3_rkt",
    "lemma_offdiag_decay",
    "lemma_koranyi",
    "lemma_det_integral",
    "lemma_mean_value",
    "lemma_sampling",
    "thm2_4_atomic",
    "lemma_radius_variation",
    "lemma_discretization",
    "prop3_3_hs_identity",
    "box_identity",
    "thm4_1_cesaro",
    "schatten_axioms",
    "lattice_certification",
}


def test_registry_lists_every_experiment():
    assert {n for n, _ in list_experiments()} == EXPECTED_NAMES
    assert all(statement for _, statement in list_experiments())


def test_make_spec_validation():
    with pytest.raises(ParameterError):
        make_spec("no_such_experiment")
    with pytest.raises(ParameterError):
        make_spec("thm1_3_rkt", m=-1)
    with pytest.raises(ParameterError):
        make_spec("thm1_2_cutoff_iv", "lorentz3", nu=0.2)
    spec = make_spec("thm1_2_cutoff_iv", p=0.75)
    assert spec.params.p == 0.75 and spec.params.nu == 1.0


def test_report_json_is_deterministic():
    a = run(make_spec("schatten_axioms", seed=7))
    b = run(make_spec("schatten_axioms", seed=7))
    assert a.verdict == PASS
    assert a.to_json() == b.to_json()
    d = json.loads(a.to_json())
    assert d["verdict"] == PASS
    assert "wall_time" not in d
    assert "wall_time" in json.loads(a.to_json(include_time=True))


def test_seed_changes_random_inputs():
    a = run(make_spec("schatten_axioms", seed=1)).to_dict()["metrics"]
    b = run(make_spec("schatten_axioms", seed=2)).to_dict()["metrics"]
    assert a != b


@pytest.mark.parametrize("backend", ["halfplane", "lorentz3"])
def test_box_identity_passes(backend):
    assert run(make_spec("box_identity", backend)).verdict == PASS


def test_cutoff_sweep_verdicts():
    spec = make_spec("thm1_2_cutoff_iv")
    reps = sweep(spec, "p", ["0.4", "0.75"])
    assert [r.metrics["integral_verdict"] for r in reps] == ["diverging", "converged"]
    assert all(r.verdict == PASS for r in reps)
    text = sweep_csv("thm1_2_cutoff_iv", "p", ["0.4", "0.75"], reps)
    lines = text.strip().splitlines()
    assert lines[0].split(",")[:3] == ["p", "verdict", "cutoff"]
    assert len(lines) == 3


def test_empty_sweep_is_header_only():
    spec = make_spec("thm1_2_cutoff_iv")
    assert sweep_csv(spec.name, "p", [], sweep(spec, "p", [])).strip().count("\n") == 0


def test_sweep_rejects_unknown_param():
    with pytest.raises(ParameterError):
        sweep(make_spec("thm1_2_cutoff_iv"), "gamma", [1])


def test_node_budget_makes_run_inconclusive():
    spec = make_spec("lattice_certification", budget=ExperimentBudget(max_nodes=10))
    rep = run(spec)
    assert rep.verdict == INCONCLUSIVE


def test_trace_csv_columns():
    rep = run(make_spec("thm1_2_cutoff_iv", p=0.75))
    name = next(iter(rep.doubling_traces))
    rows = rep.trace_csv(name).strip().splitlines()
    assert rows[0] == f"step,{name}"
    assert len(rows) == len(rep.doubling_traces[name]) + 1


def test_failing_check_gives_fail_verdict():
    # a window narrower than the measured ratio must fail, not pass silently
    rep = run(make_spec("lemma_radius_variation", window=1.5))
    assert rep.verdict == FAIL
    assert any(c.passed is False for c in rep.checks)


def test_registry_columns_exist_in_metrics():
    rep = run(make_spec("box_identity"))
    for col in REGISTRY["box_identity"][4]:
        assert col in rep.metrics
