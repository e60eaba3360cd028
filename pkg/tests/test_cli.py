import csv
from pathlib import Path

import numpy as np
import pytest

from phiconj.cli import main
from phiconj.config import ConfigError, load_config, parse_config
from phiconj.scan import fmt

SCAN = """
[run]
seed = 3

[scenario:quad]
family = euclidean
function = quad
y_lower = -2
y_upper = 2
y_points = 9
checks = gradient, table, hessian

[scenario:exp_negative]
family = exp_coupling
function = const_rho
function_params = rho=5
y_lower = -1
y_upper = 1
y_points = 3
membership_x = 0
expect = negative
checks = membership

[scenario:bare]
family = anisotropic
kernel = cosh
function = abs
dim = 2
y_lower = -1, -0.5
y_upper = 1, 0.5
y_points = 2
"""


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scan_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, SCAN)
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("quad.csv", "exp_negative.csv", "bare.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_scan_values(tmp_path):
    cfg = _write(tmp_path, SCAN)
    main(["scan", "--config", str(cfg), "--out", str(tmp_path)])
    rows = _rows(tmp_path / "quad.csv")
    assert len(rows) == 9
    for r in rows:
        y = float(r["y_0"])
        assert float(r["envelope"]) == pytest.approx(-y * y / 4, abs=1e-12)
        assert float(r["hess_00"]) == pytest.approx(-0.5, abs=1e-8)
        assert r["gradient_pass"] == r["table_pass"] == r["hessian_pass"] == "1"
    neg = _rows(tmp_path / "exp_negative.csv")
    assert all(r["membership_holds"] == "0" and r["membership_pass"] == "1" for r in neg)
    bare = _rows(tmp_path / "bare.csv")
    assert list(bare[0])[-1] == "prox_all" and len(bare) == 4
    summary = _rows(tmp_path / "summary.csv")
    assert all(r["n_fail"] == "0" and r["n_error"] == "0" for r in summary)


def test_floats_round_trip_at_17_digits():
    for v in (0.1, -1 / 3, 1e-300, np.float64(2.0) ** 0.5):
        assert float(fmt(v)) == v
    assert fmt(True) == "1" and fmt(None) == ""


def test_per_row_errors_are_recorded(tmp_path):
    cfg = _write(tmp_path, """
[scenario:wells]
family = euclidean
function = double_well
y_lower = 0
y_upper = 0
y_points = 1
checks = gradient, single_valued
""")
    assert main(["scan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    (row,) = _rows(tmp_path / "wells.csv")
    assert row["n_clusters"] == "2" and row["gradient_pass"] == "error"
    assert row["single_valued_pass"] == "0"


SUITE_OK = "[run]\ncriteria = twist_round_trip, closed_form\n"


def test_suite_exit_codes(tmp_path, capsys):
    ok = _write(tmp_path, SUITE_OK)
    assert main(["suite", "--config", str(ok), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "suite_summary.csv")
    assert [r["name"] for r in rows] == ["twist_round_trip", "closed_form"]
    bad = _write(tmp_path, SUITE_OK + "[tolerances]\nclosed_form = 1e-30\n", "bad.ini")
    capsys.readouterr()
    assert main(["suite", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "closed_form" in capsys.readouterr().err


def test_check_subcommand(tmp_path):
    assert main(["check", "twist_round_trip", "--out", str(tmp_path), "--seed", "5"]) == 0
    assert (tmp_path / "check_twist_round_trip.csv").exists()
    assert main(["check", "3", "--out", str(tmp_path)]) == 0
    assert main(["check", "nope", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("text,needle", [
    ("no header\n", "no section headers"),
    ("[scenario:a]\nfamily = nope\nfunction = quad\n", "family"),
    ("[scenario:a]\nfamily = euclidean\nfunction = nope\n", "function"),
    ("[scenario:a]\nfamily = euclidean\nfunction = quad\ngamma = abc\n", "gamma"),
    ("[scenario:a]\nfamily = entropic\nfunction = linear\ny_lower = -1\n", "leaves Y"),
    ("[scenario:a]\nfamily = euclidean\nfunction = quad\nchecks = magic\n", "checks"),
    ("[scenario:a]\nfamily = euclidean\nfunction = quad\nchecks = membership\n", "membership_x"),
    ("[scenario:a]\nfamily = euclidean\nfunction = quad\ncolour = red\n", "unknown field"),
    ("[tolerances]\nfoo = 1\n", "foo"),
    ("[run]\ncriteria = nine\n", "criteria"),
    ("[extra]\n", "unknown section"),
])
def test_corrupt_configs(tmp_path, capsys, text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)
    cfg = _write(tmp_path, text)
    assert main(["suite", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert main(["scan", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["scan", "--config", str(_write(tmp_path, "[run]\n")), "--out", str(tmp_path)]) == 2
    assert main([]) == 2


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    scan = load_config(root / "scan_default.ini")
    assert len(scan.scenarios) >= 5 and any(s.expect == "negative" for s in scan.scenarios)
    assert load_config(root / "suite.ini").scenarios == ()
