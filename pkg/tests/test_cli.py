import csv
import json
import os

import numpy as np
import pytest

from ktorus.cli import ConfigError, load_config, main

CONFIGS = os.path.join(os.path.dirname(__file__), "..",
                       "src", "ktorus", "configs")


def cfg_path(name):
    return os.path.join(CONFIGS, name)


def write_cfg(tmp_path, obj, name="m.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_load_bundled_configs():
    for name in ("flat", "rotation", "liouville", "generic",
                 "generic_asym"):
        cfg = load_config(cfg_path(name + ".json"))
        assert cfg.grid_n >= 4 * cfg.cf.max_degree


def test_reject_unknown_fields(tmp_path):
    p = write_cfg(tmp_path, {"mu_fourier": [], "g12": 0.25})
    with pytest.raises(ConfigError, match="conformal"):
        load_config(p)


def test_reject_malformed_entries(tmp_path):
    bad = [
        {"mu_fourier": [{"k": [1], "re": 0.1}]},
        {"mu_fourier": [{"k": [1, 0], "re": 0.1, "phase": 2.0}]},
        {"mu_fourier": [{"k": [0, 0], "im": 0.1}]},
        {"mu_fourier": [{"k": [1, 0], "re": 0.1},
                        {"k": [-1, 0], "re": 0.3}]},
        {"lattice": {"e1": [1, 0], "e2": [0.5, -1]}},
        {"lattice": {"e1": [1, 0]}},
        {"tolerances": {"nonsense": 1.0}},
        {"tolerances": {"transport_threshold": -2.0}},
        {"grid_n": 3.5},
    ]
    for obj in bad:
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, obj))


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"mu_fourier": [\n  {"k": [1, 0] "re": 0.1}\n]}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(str(p))


def test_hermitian_closure_one_sided(tmp_path):
    p = write_cfg(tmp_path, {"mu_fourier": [{"k": [2, 1], "re": 0.02,
                                             "im": -0.01}]})
    cfg = load_config(p)
    assert cfg.cf.coeffs[(-2, -1)] == complex(0.02, 0.01)


def test_grid_n_autoraise(tmp_path, capsys):
    p = write_cfg(tmp_path, {"mu_fourier": [{"k": [8, 0], "re": 0.01}],
                             "grid_n": 8})
    cfg = load_config(p)
    assert cfg.grid_n == 32
    err = capsys.readouterr().err
    assert "raised" in err


def test_analyze_rotation_rank1(tmp_path, capsys):
    out = str(tmp_path / "rep.json")
    code = main(["analyze", cfg_path("rotation.json"), "--ranks", "1",
                 "--out", out])
    assert code == 0
    data = json.loads(open(out).read())
    rows = {r["name"]: r for r in data["per_rank"]["1"]["tests"]}
    assert rows["classical_invariant_direction"]["status"] == "PASS"
    assert data["per_rank"]["1"]["verdict"] == "exists (classical structure)"


def test_analyze_determinism_fast(tmp_path):
    o1, o2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert main(["analyze", cfg_path("flat.json"), "--out", o1]) == 0
    assert main(["analyze", cfg_path("flat.json"), "--out", o2]) == 0
    assert open(o1, "rb").read() == open(o2, "rb").read()


def test_kernel_flat_rank2_constants(tmp_path):
    pre = str(tmp_path / "k")
    code = main(["kernel", cfg_path("flat.json"), "--rank", "2",
                 "--out", pre])
    assert code == 0
    svd = json.loads(open(pre + "_svd.json").read())
    assert svd["kernel_dimension_estimate"] == 2
    assert svd["subspace_sin"] < 1e-8
    cols = {}
    for i in (1, 2):
        with open(f"{pre}_field{i}.csv") as fh:
            rows = list(csv.DictReader(fh))
        a = np.array([float(r["a"]) for r in rows])
        b = np.array([float(r["b"]) for r in rows])
        assert a.std() < 1e-12 and b.std() < 1e-12
        cols[i] = (a[0], b[0])
    # on the flat metric the kernel is the constant pairs (1,0), (0,1)
    M = np.array([cols[1], cols[2]])
    s = np.linalg.svd(M, compute_uv=False)
    assert s[1] > 0.5 * s[0]


def test_geodesics_csv_schema(tmp_path):
    pre = str(tmp_path / "g")
    code = main(["geodesics", cfg_path("rotation.json"), "--class", "1,0",
                 "--out", pre])
    assert code == 0
    with open(pre + "_orbit_1_0.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == ["t", "x", "y", "theta"]
    with open(pre + "_ray_integrals.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["m"] for r in rows} == {"0", "1", "2", "3", "4"}
    for r in rows:
        assert abs(float(r["I1"])) < 1e-6


def test_isolines_outputs(tmp_path):
    pre = str(tmp_path / "iso")
    code = main(["isolines", cfg_path("generic.json"), "--c", "1,0",
                 "--out", pre])
    assert code == 0
    with open(pre + "_integrals.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    closed = [r for r in rows if r["closed"] == "1"]
    assert closed
    with open(pre + "_polylines.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == ["level", "component", "closed", "t", "x", "y"]


def test_lambda_outputs_and_determinism(tmp_path):
    pre = str(tmp_path / "lam")
    assert main(["lambda", cfg_path("generic.json"), "--out", pre]) == 0
    rep = json.loads(open(pre + "_report.json").read())
    assert rep["route_discrepancy"] < 1e-10 * (1 + rep["sup_norm"])
    assert max(abs(v) for v in rep["mean_values"]) <= rep["mean_value_bound"]
    body1 = open(pre + "_report.json", "rb").read()
    assert main(["lambda", cfg_path("generic.json"), "--out", pre]) == 0
    assert open(pre + "_report.json", "rb").read() == body1


def test_exit_codes(tmp_path):
    p = write_cfg(tmp_path, {"bogus": 1})
    assert main(["analyze", str(p)]) == 2
    missing = str(tmp_path / "nope.json")
    assert main(["analyze", missing]) == 2
