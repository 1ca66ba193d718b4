import csv
import json

import pytest

from igabem import models
from igabem.cli import EXIT_MODEL, EXIT_OK, EXIT_VERIFY, main


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="module")
def d02_runs(tmp_path_factory):
    out = {}
    for opt in (1, 2):
        d = tmp_path_factory.mktemp(f"opt{opt}")
        assert main(["solve", "test1_d02", "--integration-option", str(opt), "--out-dir", str(d)]) == EXIT_OK
        out[opt] = d
    return out


def test_solve_summary(d02_runs):
    rows = read_csv(d02_runs[2] / "summary.csv")
    top = [r for r in rows if r["name"] == "top"][0]
    assert abs(float(top["u_z"]) / 0.09 - 1) < 5e-3
    man = json.loads((d02_runs[2] / "manifest.json").read_text())
    assert man["dof"] == 48 and man["integration_option"] == 2
    for name in ("nodes.csv", "tractions.csv", "grid.csv", "line_axis.csv", "trace.csv"):
        assert (d02_runs[2] / name).exists()


def test_options_agree_to_four_digits(d02_runs):
    a = float(read_csv(d02_runs[1] / "summary.csv")[0]["u_z"])
    b = float(read_csv(d02_runs[2] / "summary.csv")[0]["u_z"])
    assert f"{a:.4g}" == f"{b:.4g}"


def test_deterministic_csv(tmp_path):
    for k in (1, 2):
        assert main(["solve", "patchtest", "--out-dir", str(tmp_path / str(k))]) == EXIT_OK
    for name in ("summary.csv", "nodes.csv", "tractions.csv", "line_axis.csv"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_malformed_file(tmp_path, capsys):
    f = tmp_path / "m.json"
    f.write_text('{"material": {"E": 1, "nu": 0.2}, "patches": [}')
    assert main(["solve", str(f), "--out-dir", str(tmp_path)]) == EXIT_MODEL
    assert "line 1 column" in capsys.readouterr().err


def test_schema_violation(tmp_path, capsys):
    doc = models.cube_patch_test()
    doc["material"]["nu"] = 0.7
    f = tmp_path / "m.json"
    f.write_text(json.dumps(doc))
    assert main(["solve", str(f), "--out-dir", str(tmp_path)]) == EXIT_MODEL
    assert "material.nu" in capsys.readouterr().err


def test_missing_model(tmp_path):
    assert main(["solve", "no_such_model", "--out-dir", str(tmp_path)]) == EXIT_MODEL


def test_verify_quadrature(tmp_path):
    assert main(["verify", "quadrature", "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "jacobian_exponents.csv")
    assert [r["passed"] for r in rows] == ["True", "True"]


def test_verify_patchtest(tmp_path):
    assert main(["verify", "patchtest", "--out-dir", str(tmp_path)]) == EXIT_OK


def test_verify_closed_forms_flags_entries(tmp_path, capsys):
    assert main(["verify", "appendix", "--out-dir", str(tmp_path)]) == EXIT_VERIFY
    rows = read_csv(tmp_path / "appendix_conformance.csv")
    assert len(rows) == 36
    assert all(float(r["max_rel_error"]) >= 0 for r in rows)
    assert "flagged" in capsys.readouterr().out
