import csv
import json
import math
import subprocess
import sys

import pytest

from bergkern.cli_report import emit_report, load_config, main, run_config, validate_config
from bergkern.errors import ConfigInvalid, IoFailure

import oracles

PROFILE = {"kind": "profile", "seed": 0, "params": {"gamma": oracles.GAMMA_FIG}}
MOMENTS = {"kind": "moments", "seed": 0, "params": {"gamma": oracles.GAMMA_GAUSS, "cutoff": 4}}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def table(report, name):
    t = report.tables[name]
    return [dict(zip(t.columns, row)) for row in t.rows]


def test_profile_report_values():
    rep = run_config(PROFILE)
    values = {r["quantity"]: r["value"] for r in table(rep, "profile")}
    assert str(values["sigma"]) == "4" and str(values["tau"]) == "9/4"
    assert rep.passed


def test_moments_report_value():
    rep = run_config(MOMENTS)
    c00 = next(r["c_ab"] for r in table(rep, "moments") if (r["a"], r["b"]) == (0, 0))
    assert abs(c00 - oracles.GAUSS_C00) <= 1e-10 * oracles.GAUSS_C00
    assert rep.passed


@pytest.mark.parametrize(
    "raw, path",
    [
        ({}, "$"),
        ({"kind": "nope", "seed": 0}, "$.kind"),
        ({"kind": "profile"}, "$.seed"),
        ({"kind": "profile", "seed": 0, "params": {"gamma": [[1, 0]], "bogus": 1}}, "$.params.bogus"),
        ({"kind": "profile", "seed": 0, "extra": 1}, "$.extra"),
        ({"kind": "profile", "seed": 0, "params": {}}, "$.params.gamma"),
    ],
)
def test_config_errors(raw, path):
    with pytest.raises(ConfigInvalid) as err:
        run_config(validate_config(raw))
    assert err.value.path == path


def test_defaults_materialised():
    cfg = validate_config({"kind": "coercivity", "seed": 3})
    assert cfg.params["family_size"] == 128 and cfg.params["stability"] == 0.2


def test_same_report_identical_bytes(tmp_path):
    for fmt in ("csv", "text"):
        a = emit_report(run_config(MOMENTS), tmp_path / f"a_{fmt}", fmt)
        b = emit_report(run_config(MOMENTS), tmp_path / f"b_{fmt}", fmt)
        assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_csv_uses_17_digits(tmp_path):
    paths = emit_report(run_config(MOMENTS), tmp_path)
    rows = list(csv.reader((tmp_path / "moments_moments.csv").open()))
    assert rows[0] == ["a", "b", "c_ab"]
    assert float(rows[1][2]) == run_config(MOMENTS).tables["moments"].rows[0][2]
    assert any(p.name == "config.json" for p in paths)
    echoed = json.loads((tmp_path / "config.json").read_text())
    assert echoed["params"]["rtol"] == 1e-10


def test_kernel_schema():
    rep = run_config({"kind": "kernel", "seed": 1, "params": {"gamma": oracles.GAMMA_GAUSS, "pairs": 5}})
    assert rep.tables["kernel"].columns == [
        "re_zp", "im_zp", "re_wp", "im_wp", "re_zq", "im_zq", "re_wq", "im_wq", "re_B", "im_B", "tail",
    ]
    assert rep.passed


def test_bound_fit_schema_and_pin():
    rep = run_config({"kind": "bound-fit", "seed": 7, "params": {}})
    t = rep.tables["bound_fit"]
    assert t.columns == ["epsilon", "logC", "worst_pair_index"] and len(t.rows) == 1
    eps, logC, worst = t.rows[0]
    assert math.isclose(eps, oracles.DECAY_FIT["epsilon"], rel_tol=1e-9)
    assert math.isclose(logC, oracles.DECAY_FIT["logC"], rel_tol=1e-9)
    assert worst == oracles.DECAY_FIT["worst_pair_index"]


def test_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure):
        emit_report(run_config(PROFILE), blocker / "sub")


def test_exit_codes(tmp_path, capsys):
    good = write(tmp_path, {**PROFILE, "params": {**PROFILE["params"], "expect": {"sigma": "4"}}})
    bad = write(tmp_path, {**PROFILE, "params": {**PROFILE["params"], "expect": {"sigma": "5"}}}, "bad.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    out = tmp_path / "out"
    assert main(["run", str(good), "--out", str(out)]) == 0
    assert main(["run", str(bad), "--out", str(out)]) == 1
    assert main(["run", str(broken), "--out", str(out)]) == 2
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(out)]) == 2
    assert "config error" in capsys.readouterr().err


def test_load_config_reports_position(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text('{"kind": }')
    with pytest.raises(ConfigInvalid) as err:
        load_config(broken)
    assert ":1:" in str(err.value.path)


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, MOMENTS)
    env = {"BERGKERN_THREADS": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run(
        [sys.executable, "-m", "bergkern", "run", str(cfg), "--out", str(tmp_path / "o"), "--format", "text"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert "RESULT: PASS" in (tmp_path / "o" / "report.txt").read_text()


@pytest.mark.parametrize(
    "cfg",
    [
        {"kind": "hessian-check", "seed": 1, "params": {"gamma": oracles.GAMMA_SMALL, "samples": 20, "fd_samples": 5}},
        {"kind": "rho", "seed": 0, "params": {"h": 0.25}},
        {"kind": "dist", "seed": 0, "params": {"rho": "Max(1, x)", "targets": [[math.exp(3)]], "expect": [4.0]}},
        {"kind": "spectrum", "seed": 0, "params": {"potential": [["x**2"]], "h": 0.05, "expect": 1.0}},
        {"kind": "equivalence", "seed": 0, "params": {"forms": 1, "points": 16, "tolerance": 1e-3}},
        {"kind": "discreteness", "seed": 0, "params": {"entries": oracles.V0, "centers": [[0], [100]], "normalize": True,
                                                      "expect": [{"index": 0, "exact": "1/448"}, {"index": 1, "ratio": "1/12"}]}},
        {"kind": "oscillation", "seed": 0, "params": {"partitions": [{"weights": [1, 1], "spans": [[[1, 0]], [[0, 1]]]}],
                                                     "expect": [{"index": 0, "omega": oracles.OMEGA_HALF_HALF}]}},
        {"kind": "muckenhoupt", "seed": 0, "params": {"entries": oracles.W0, "cubes": [{"center": [0.5], "side": 1}],
                                                     "expect": {"def1": False, "def2": True}}},
        {"kind": "classify-cube", "seed": 0, "params": {"entries": oracles.V0, "cube": {"center": [1.5], "side": 1},
                                                       "expect": "Bad"}},
        {"kind": "coercivity", "seed": 0, "params": {"family_size": 4, "points": 10, "stability": 1.0}},
    ],
    ids=lambda c: c["kind"],
)
def test_every_kind_runs(cfg):
    rep = run_config(cfg)
    assert rep.assertions
    assert rep.passed, [a for a in rep.assertions if not a.passed]
