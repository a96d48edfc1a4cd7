import csv
import io
import json
import math

import pytest

from lpslicing import __version__
from lpslicing.cli import run


def _json(capsys, argv, code=0):
    assert run(argv) == code
    return json.loads(capsys.readouterr().out)


def test_volume_cross_polytope(capsys):
    out = _json(capsys, ["volume", "--body", '{"kind":"lp_ball","n":3,"p":1}',
                         "--samples", "1000000", "--seed", "7"])
    res = out["result"]
    assert abs(res["value"] - 4 / 3) <= 3 * res["std_error"]
    assert out["seed"] == 7 and out["samples"] == 1_000_000
    assert out["version"] == __version__ and out["command"] == "volume"


def test_selftest_passes(capsys):
    out = _json(capsys, ["selftest"])
    assert out["result"]["passed"]
    assert len(out["result"]["checks"]) >= 10


def test_verify_corollary_row(capsys):
    assert run(["verify", "corollary", "--body", '{"kind":"lp_ball","n":8,"p":4}', "--k", "1",
                "--density", '{"kind":"uniform"}', "--seed", "1", "--samples", "50000",
                "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1
    assert 0 < float(rows[0]["C_emp"]) <= 3
    assert rows[0]["seed"] == "1" and rows[0]["version"] == __version__


def test_verify_prop1_json(capsys):
    out = _json(capsys, ["verify", "prop1", "--body", '{"kind":"lp_ball","n":3,"p":2}',
                         "--samples", "20000", "--probes", "5000"])
    assert out["result"]["prop1_passed"] is True
    assert out["result"]["max_section_source"] == "analytic"


def test_section_and_measure(capsys):
    out = _json(capsys, ["section", "--body", '{"kind":"lp_ball","n":2,"p":"inf"}',
                         "--normal", "[1, -1]", "--samples", "100"])
    assert out["result"]["value"] == pytest.approx(2 * math.sqrt(2), rel=1e-14)
    out = _json(capsys, ["measure", "--body", '{"kind":"lp_ball","n":2,"p":2}',
                         "--density", '{"kind":"gaussian","sigma":1}', "--samples", "100"])
    assert out["result"]["value"] == pytest.approx(2 * math.pi * (1 - math.exp(-0.5)), rel=1e-12)


def test_radon_reports_section(capsys):
    out = _json(capsys, ["radon", "--body", '{"kind":"lp_ball","n":3,"p":2}', "--xi", "[0,0,1]",
                         "--samples", "1000"])
    assert out["result"]["section_volume"] == pytest.approx(math.pi, rel=1e-12)


def test_ibody_ball(capsys):
    out = _json(capsys, ["ibody", "--body", '{"kind":"lp_ball","n":3,"p":2}', "--directions", "3",
                         "--samples", "1000"])
    assert all(r == pytest.approx(math.pi, rel=1e-12) for r in out["result"]["radial"])


def test_prop2_closed_form(capsys):
    out = _json(capsys, ["prop2", "--p", "4", "--n", "16"])
    assert out["result"]["R"] == pytest.approx(1.2293, abs=1e-4)


def test_prop2_csv_fields(capsys):
    assert run(["prop2", "--p", "4", "--n", "16", "--format", "csv"]) == 0
    row = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))[0]
    for key in ("p", "n", "k", "log_volume", "R", "R_over_sqrt_p", "seed", "samples"):
        assert key in row


def test_ovr_square(capsys):
    out = _json(capsys, ["ovr", "--body", '{"kind":"lp_ball","n":2,"p":"inf"}', "--eps", "1e-4",
                         "--boundary", "4000", "--samples", "200000"])
    assert out["result"]["ovr"] == pytest.approx(math.sqrt(math.pi / 2), rel=0.01)


def test_maxsection(capsys):
    out = _json(capsys, ["maxsection", "--body", '{"kind":"lp_ball","n":2,"p":"inf"}',
                         "--samples", "2000", "--restarts", "3"])
    assert out["result"]["value"] == pytest.approx(2 * math.sqrt(2), rel=1e-3)


def test_sweep_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bodies": [{"id": "b", "body": {"kind": "lp_ball", "n": 3, "p": 2}}],
                               "densities": [{"kind": "uniform"}], "k": [1],
                               "counts": {"volume": 5000, "section": 5000, "probes": 5000}}))
    out = tmp_path / "rows.csv"
    assert run(["sweep", "--config", str(cfg), "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1 and rows[0]["body_id"] == "b"


def test_empty_sweep(capsys):
    out = _json(capsys, ["sweep", "--config", "{}"])
    assert out["result"]["rows"] == []


def test_threads_do_not_change_bytes(capsys):
    argv = ["volume", "--body", '{"kind":"lp_ball","n":4,"p":3}', "--samples", "50000", "--seed", "3"]
    assert run(argv + ["--threads", "1"]) == 0
    one = capsys.readouterr().out
    assert run(argv + ["--threads", "4"]) == 0
    assert capsys.readouterr().out == one


@pytest.mark.parametrize("argv", [
    ["volume", "--bogus"],
    ["nosuch"],
    ["volume", "--body", '{"kind":"lp_ball","n":3,"p":1,"typo":0}'],
    ["volume", "--body", '{"kind":"lp_ball","n":3,"p":0.5}'],
    ["section", "--body", '{"kind":"lp_ball","n":3,"p":2}'],
    ["verify", "corollary", "--body", '{"kind":"lp_ball","n":3,"p":2}'],
    ["prop2", "--p", "4"],
    ["volume", "--body", "not json"],
])
def test_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_convergence_exit_code(monkeypatch, capsys):
    from lpslicing import cli
    from lpslicing.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("no", residual=0.5)

    monkeypatch.setattr(cli, "loewner_ovr_details", boom)
    assert run(["ovr", "--body", '{"kind":"lp_ball","n":2,"p":2}']) == 4


def test_inequality_violation_exit_code(monkeypatch, capsys):
    from lpslicing import slicing

    real = slicing.evaluate

    def failing(*a, **k):
        rep = real(*a, **k)
        rep.prop1_passed = False
        return rep

    monkeypatch.setattr(slicing, "evaluate", failing)
    code = run(["verify", "prop1", "--body", '{"kind":"lp_ball","n":3,"p":2}', "--samples", "2000",
                "--probes", "2000"])
    assert code == 3
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["report"]["mu_K"] == pytest.approx(4 * math.pi / 3)
