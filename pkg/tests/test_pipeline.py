import json

import numpy as np
import pytest

from ktorus.pipeline import (ObstructionReport, classify_classical,
                             report_to_json, run_full, _jsonable)


@pytest.fixture(scope="module")
def generic_report(cf_generic):
    return run_full(cf_generic)


def test_classify_flat(cf_flat):
    cl = classify_classical(cf_flat)
    assert cl["kind"] == "flat"
    assert cl["m1"].status == "DEGENERATE"
    assert cl["m2"].status == "DEGENERATE"


def test_classify_rotation(cf_rotation):
    cl = classify_classical(cf_rotation)
    assert cl["kind"] == "rotation"
    assert cl["m1"].status == "PASS"
    assert cl["m1"].residuals["aligned_mu_x"] < 1e-12
    # one active axis only: rank-2 fields reduce, so no PASS here
    assert cl["m2"].status == "INCONCLUSIVE"


def test_classify_rotation_oblique():
    from ktorus import ConformalFactor
    # modes on the line k = (1, 1): invariant direction is oblique
    cf = ConformalFactor(coeffs={(1, 1): 0.04, (2, 2): 0.01})
    cl = classify_classical(cf)
    assert cl["kind"] == "rotation"
    assert cl["m1"].status == "PASS"
    assert cl["m1"].residuals["aligned_mu_x"] < 1e-10


def test_classify_liouville(cf_liouville):
    cl = classify_classical(cf_liouville)
    assert cl["kind"] == "liouville"
    assert cl["m1"].status == "VIOLATED"
    assert cl["m2"].status == "PASS"
    assert cl["m2"].residuals["off_axes_mass"] < 1e-11
    assert min(cl["m2"].residuals["axis_mass_1"],
               cl["m2"].residuals["axis_mass_2"]) > 1e-3


def test_classify_generic(cf_generic):
    cl = classify_classical(cf_generic)
    assert cl["kind"] == "generic"
    assert cl["m1"].status == "VIOLATED"
    assert cl["m2"].status == "VIOLATED"
    assert cl["m1"].resolution_stability
    assert cl["m2"].resolution_stability


def test_run_full_flat(cf_flat):
    rep = run_full(cf_flat)
    assert "trivially integrable; Killing fields of all ranks exist " \
        "(reducible)" in rep.summary
    for entry in rep.per_rank.values():
        for row in entry.tests:
            assert row.status in ("DEGENERATE", "INCONCLUSIVE")


def test_run_full_rotation(cf_rotation):
    rep = run_full(cf_rotation)
    assert rep.per_rank[1].verdict == "exists (classical structure)"
    m1 = {r.name: r for r in rep.per_rank[1].tests}
    assert m1["classical_invariant_direction"].status == "PASS"
    for m in (2, 3, 4):
        assert "no irreducible field" not in rep.per_rank[m].verdict
        for row in rep.per_rank[m].tests:
            assert row.status != "VIOLATED"


def test_run_full_generic_excludes_all_ranks(generic_report):
    rep = generic_report
    for m in (1, 2, 3, 4):
        assert rep.per_rank[m].verdict.startswith("no irreducible field")
    names3 = {r.name: r for r in rep.per_rank[3].tests}
    assert names3["transport_solvability"].status == "VIOLATED"
    assert names3["source_mean_values"].status == "PASS"
    assert names3["potentiality_rank3"].status == "VIOLATED"


def test_violated_rows_are_stability_gated(generic_report):
    for entry in generic_report.per_rank.values():
        for row in entry.tests:
            if row.status == "VIOLATED":
                assert row.resolution_stability is True
            assert row.status in ("PASS", "VIOLATED", "DEGENERATE",
                                  "INCONCLUSIVE")


def test_report_json_deterministic_and_schema(generic_report):
    j1 = report_to_json(generic_report)
    j2 = report_to_json(generic_report)
    assert j1 == j2
    data = json.loads(j1)
    assert data["schema_version"] == 1
    assert set(data["per_rank"]) == {"1", "2", "3", "4"}
    assert "summary" in data and "evidence" in data["summary"]
    assert "not proofs" in data["summary"]
    row = data["per_rank"]["3"]["tests"][0]
    assert set(row) >= {"name", "status", "residuals",
                        "resolution_stability", "notes"}


def test_jsonable_formatting():
    out = _jsonable({"x": np.float64(1.0) / 3.0, "a": np.arange(3),
                     "c": 1 + 2j, "b": np.bool_(True)})
    assert out["x"] == float(f"{1.0 / 3.0:.17g}")
    assert out["a"] == [0, 1, 2]
    assert out["c"] == {"re": 1.0, "im": 2.0}
    assert out["b"] is True


def test_metric_id_stable(cf_generic):
    r1 = run_full(cf_generic, ranks=(1,))
    r2 = run_full(cf_generic, ranks=(1,))
    assert r1.metric_id == r2.metric_id
    assert "(1,0)" in r1.metric_id
