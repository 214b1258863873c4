import csv
import json

import pytest

from chebyshev_coords import cli
from chebyshev_coords.errors import ConditionFailure, PreconditionViolated


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_validate_ok_and_over_budget(tmp_path, capsys):
    assert run(tmp_path, "validate", "cone:1.5707963") == 0
    assert "yes" in capsys.readouterr().out
    assert run(tmp_path, "validate", "cones:1.6,1.6,1.6,1.6") == 2
    out = capsys.readouterr()
    assert "NO" in out.out and "PreconditionViolated" in out.err


def test_parse_errors_exit_one(tmp_path, capsys):
    assert run(tmp_path, "validate", str(tmp_path / "missing.json")) == 1
    assert run(tmp_path, "validate", "cone:6.4") == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(tmp_path, "validate", str(bad)) == 1
    assert "ParseError" in capsys.readouterr().err


def test_bad_eps_and_window(tmp_path):
    assert run(tmp_path, "validate", "flat", "--eps", "0.9") == 2
    assert run(tmp_path, "net", "flat", "--window", "0x3") == 2
    with pytest.raises(SystemExit):
        run(tmp_path, "net", "flat", "--window", "six")


def test_search_exhausted_exit_three(tmp_path):
    assert run(tmp_path, "cross", "random:3", "--budget", "1") == 3


def test_condition_failure_exit_four(tmp_path, monkeypatch):
    def refuse(*a, **k):
        raise ConditionFailure("sector 1 fails its curvature conditions")

    monkeypatch.setattr(cli, "build_nets", refuse)
    assert run(tmp_path, "net", "flat") == 4


def test_window_past_domain_exit_five(tmp_path):
    assert run(tmp_path, "net", "flat", "--window", "40x40") == 5


def test_trace_writes_jsonl(tmp_path):
    assert run(tmp_path, "trace", "cone:0.4", "--face", "3", "--angle", "0.2", "--length", "4") == 0
    lines = (tmp_path / "trace.jsonl").read_text().splitlines()
    assert lines and all(json.loads(ln) for ln in lines)
    assert run(tmp_path, "trace", "flat", "--face", "99999") == 2


def test_cross_outputs(tmp_path):
    assert run(tmp_path, "cross", "random:1", "--eps", "0.1") == 0
    doc = json.loads((tmp_path / "cross.json").read_text())
    assert len(doc["chord_arc"]) == 3
    with open(tmp_path / "sectors.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["sector"]) for r in rows] == [1, 2, 3, 4]
    assert (tmp_path / "phi.svg").read_bytes().startswith(b"<?xml")


def test_net_outputs_flat(tmp_path):
    assert run(tmp_path, "net", "flat", "--window", "3x3") == 0
    rep = json.loads((tmp_path / "net_report.json").read_text())
    assert len(rep) == 4
    for r in rep:
        assert abs(r["theta_min"] - 1.5707963267948966) < 1e-9
        assert r["hazzidakis"]["max_residual"] < 1e-9
    for k in range(1, 5):
        assert (tmp_path / f"net{k}.json").exists()
        assert (tmp_path / f"net{k}.obj").read_text().count("\nf ") >= 8
    header = (tmp_path / "cells.tsv").read_text().splitlines()[0]
    assert "\t" in header


def test_flatten_and_report(tmp_path):
    assert run(tmp_path, "flatten", "flat", "--window", "3x3", "--pairs", "30") == 0
    L = json.loads((tmp_path / "lipschitz.json").read_text())
    assert abs(L["affine"]["L_fwd"] - 1.0) < 1e-9
    for mode in ("affine", "straight"):
        assert (tmp_path / f"chart_{mode}.svg").exists()
    assert run(tmp_path, "report", "flat", "--window", "2x2", "--pairs", "20") == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["window"] == [2, 2]


def test_export_roundtrip(tmp_path):
    assert run(tmp_path, "export", "cone:0.4") == 0
    assert run(tmp_path, "validate", str(tmp_path / "surface.json")) == 0


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d, jobs in ((a, "1"), (b, "2")):
        assert cli.main(["net", "cone:0.4", "--window", "3x3", "--jobs", jobs, "--out", str(d)]) == 0
    for name in ("net_report.json", "cells.tsv", "sectors.csv", "net1.json", "net3.obj"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_run_config_checks():
    with pytest.raises(PreconditionViolated):
        cli.RunConfig("flat", h=0.0)
    with pytest.raises(PreconditionViolated):
        cli.RunConfig("flat", eps=0.0)
