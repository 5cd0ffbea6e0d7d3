import csv
import io
import json

import pytest

from electrolyte_casimir import analytic
from electrolyte_casimir.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_eval_eq10_equal_spheres():
    code, text = run("eval", "--y", "2", "--u", "0.25", "--method", "eq10")
    assert code == 0
    d = json.loads(text)
    assert d["f"] == pytest.approx(2.00e-2, rel=5e-3)
    assert d["method"] == "eq10" and d["variant"] == "dielectric-in-electrolyte"


def test_eval_pfa():
    code, text = run("eval", "--x", "1", "--u", "0", "--method", "pfa")
    assert code == 0
    assert json.loads(text)["f"] == pytest.approx(0.150257, rel=1e-6)


def test_eval_physical_units_consistent():
    code, text = run("eval", "--L", "1e-6", "--R1", "1e-6", "--R2", "1e-6", "--T", "300",
                     "--method", "eq16", "--debye-length", "1e-8")
    d = json.loads(text)
    assert code == 0
    assert d["energy_J"] == pytest.approx(d["energy_kT"] * 1.380649e-23 * 300, rel=1e-9)
    assert d["energy_kT"] == pytest.approx(-d["f"])
    assert d["force_N"] < 0 and d["warnings"] == []


def test_eval_exact_text_output():
    code, text = run("eval", "--y", "1.5", "--u", "0.1", "--method", "exact", "--format", "text")
    assert code == 0
    assert "est_error" in text and "exact" in text


def test_eval_exact_force_by_finite_difference():
    code, text = run("eval", "--L", "5e-7", "--R1", "1e-6", "--R2", "1e-6", "--T", "300",
                     "--method", "exact", "--no-error-estimate")
    d = json.loads(text)
    _, text16 = run("eval", "--L", "5e-7", "--R1", "1e-6", "--R2", "1e-6", "--T", "300")
    assert code == 0
    assert d["force_N"] == pytest.approx(json.loads(text16)["force_N"], rel=2e-3)


def test_eval_warnings():
    _, text = run("eval", "--L", "2e-8", "--R1", "1e-6", "--plane", "--T", "300",
                  "--debye-length", "1e-8")
    w = json.loads(text)["warnings"]
    assert len(w) == 2


@pytest.mark.parametrize("argv", [
    ("eval", "--x", "1", "--y", "2", "--u", "0"),
    ("eval", "--L", "1e-6", "--R1", "1e-6", "--R2", "1e-6", "--u", "0.1"),
    ("eval", "--L", "1e-6"),
    ("eval", "--y", "0.5", "--u", "0.1"),
    ("eval", "--y", "2", "--u", "0.1", "--T", "300"),
    ("sweep", "--method", "magic"),
    ("sweep", "--count", "1"),
    ("frobnicate",),
])
def test_usage_errors(argv):
    assert run(*argv)[0] == 1


def test_numerical_failure_exit(monkeypatch):
    from electrolyte_casimir import scattering

    monkeypatch.setattr(scattering, "MODE_CAP", 2)
    assert run("eval", "--y", "1.01", "--u", "0", "--method", "exact")[0] == 2


def test_sweep_csv_stable(tmp_path):
    args = ["sweep", "--variable", "x", "--min", "0.01", "--max", "10", "--count", "5",
            "--u", "0,0.25", "--method", "eq10,eq16,pfa,dipole"]
    code, a = run(*args)
    _, b = run(*args)
    assert code == 0 and a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert rows[0] == ["x", "y_minus_1", "u", "f", "phi", "method", "est_error"]
    assert len(rows) == 1 + 5 * 2 * 4
    assert rows[1][5] == "eq10" and rows[2][5] == "eq16"
    # ten significant digits
    assert all(len(r[3].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 10
               for r in rows[1:])
    out = tmp_path / "s.csv"
    assert run(*args, "--output", str(out))[0] == 0
    assert out.read_text() == a


def test_sweep_figure_one_ordering():
    code, text = run("sweep", "--variable", "x", "--min", "0.01", "--max", "100", "--count", "9",
                     "--u", "0,0.04,0.1,0.25", "--method", "eq16", "--format", "json")
    rows = json.loads(text)["rows"]
    for i in range(9):
        fs = [r["f"] for r in rows[4 * i: 4 * i + 4]]
        assert fs == sorted(fs, reverse=True)


def test_sweep_exact_json():
    code, text = run("sweep", "--min", "0.1", "--max", "1", "--count", "2", "--u", "0.1",
                     "--method", "exact,eq16", "--format", "json")
    rows = json.loads(text)["rows"]
    assert code == 0 and len(rows) == 4
    assert rows[0]["est_error"] is not None and rows[1]["est_error"] is None
    assert rows[0]["f"] == pytest.approx(rows[1]["f"], rel=1.3e-3)


def test_config_file_and_override(tmp_path):
    from electrolyte_casimir.cli import accuracy_from_args, build_parser

    cfg = tmp_path / "acc.ini"
    cfg.write_text("[accuracy]\nquad_order = 120\nmode_tol = 1e-8\nestimate_error = false\n")
    args = build_parser().parse_args(["eval", "--config", str(cfg), "--mode-tol", "1e-9"])
    acc = accuracy_from_args(args)
    assert acc.quad_order == 120 and acc.mode_tol == 1e-9 and not acc.estimate_error
    cfg.write_text("[accuracy]\nbogus = 1\n")
    assert run("eval", "--config", str(cfg), "--y", "2", "--u", "0.1")[0] == 1


def test_fit_validate_only(tmp_path):
    model = tmp_path / "table1.json"
    model.write_text(json.dumps(analytic.TABLE_I.to_dict()))
    out = tmp_path / "rep.json"
    code, text = run("fit", "--n", "2", "--validate-only", "--model", str(model),
                     "--min", "0.1", "--max", "10", "--count", "3", "--validate-u", "0.25",
                     "--no-error-estimate", "--output", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["validation"]["overall"] < 1.3e-3
    assert "validation max deviation" in text


def test_fit_small_grid(tmp_path):
    out = tmp_path / "fit.json"
    code, text = run("fit", "--n", "2", "--min", "0.01", "--max", "10", "--count", "5",
                     "--validate-u", "none", "--no-error-estimate", "--output", str(out))
    assert code == 0 and "achieved eps" in text
    rep = json.loads(out.read_text())
    assert rep["order"] == 2 and rep["reference_u"] == 0.1 and rep["achieved_eps"] < 1e-3


def test_validate_metal_quick():
    code, text = run("validate", "--quick", "--variant", "metal")
    assert code == 0
    assert text.count("PASS") == 2
