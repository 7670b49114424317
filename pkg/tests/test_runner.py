import copy
import csv
import json
import os

import numpy as np
import pytest

from specpert.errors import CONFIG_INVALID, NOT_POSITIVE_DEFINITE, SpecPertError
from specpert.runner import (
    ExperimentReport,
    emit_plotdata,
    load_config,
    load_report,
    run,
    run_config,
    sweep,
    validate_config,
)
from specpert.runner.cli import demo_path, main, read_values


def _cfg(**over):
    raw = {
        "model": {"type": "DIAGONAL", "N": 300,
                  "law": {"a": "pi", "b": "-pi/2", "exponent": 2, "delta": 1}},
        "perturbation": {"recipe": "rank_one", "mode": "LEMMA1", "sigma": 0.1, "delta": 1},
        "fit": {"window": [20, 200]},
        "checks": ["lemma1_condition", "localization", "sandwich"],
        "output": {"formats": ["json", "csv"]},
    }
    for k, v in over.items():
        raw[k] = v
    return validate_config(raw)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- config -----------------------------------------------------------------

@pytest.mark.parametrize("mutate, fragment", [
    (lambda r: r.__setitem__("colour", 1), "colour"),
    (lambda r: r["model"].__setitem__("N", 6000), "model.N"),
    (lambda r: r.__setitem__("checks", ["nonsense"]), "checks"),
    (lambda r: r["perturbation"].__setitem__("recipe", "spiral"), "perturbation.recipe"),
    (lambda r: r["fit"].__setitem__("window", [200, 20]), "fit.window"),
    (lambda r: r["model"]["law"].__setitem__("a", "pi/0"), "model.law.a"),
    (lambda r: r["perturbation"].__setitem__("seed", 3), "perturbation"),
])
def test_config_rejections(mutate, fragment):
    raw = copy.deepcopy(_cfg())
    mutate(raw)
    with pytest.raises(SpecPertError) as exc:
        validate_config(raw)
    assert exc.value.code == CONFIG_INVALID
    assert fragment in exc.value.message


def test_config_idempotent_and_expands_all():
    cfg = _cfg(checks=["all"])
    assert validate_config(copy.deepcopy(cfg)) == cfg
    assert len(cfg["checks"]) == 9
    assert cfg["model"]["law"]["a"] == pytest.approx(np.pi)


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SpecPertError) as exc:
        load_config(p)
    assert exc.value.code == CONFIG_INVALID


# --- run --------------------------------------------------------------------

def test_run_zero_perturbation_identical_fits(tmp_path):
    cfg = _cfg(perturbation={"recipe": "zero"})
    rep = run_config(cfg, tmp_path)
    assert rep.exit_code == 0 and rep.c2_star == 0.0
    for key in ("a_hat", "b_hat"):
        assert rep.perturbed_fit[key] == pytest.approx(rep.base_fit[key], abs=1e-12)
    rows = _read_csv(tmp_path / "spectrum.csv")
    assert all(r["lambda"] == r["lambda_pert"] and r["mu_base"] == r["mu_pert"] for r in rows)


def test_run_not_positive_definite(tmp_path):
    cfg = _cfg(perturbation={"recipe": "rank_one", "mode": "LEMMA1", "sigma": -5.0, "delta": 1})
    rep = run_config(cfg, tmp_path)
    assert rep.exit_code == 2
    assert rep.error["code"] == NOT_POSITIVE_DEFINITE
    assert json.loads((tmp_path / "report.json").read_text())["exit_code"] == 2


def test_report_json_roundtrip(tmp_path):
    rep = run_config(_cfg(), tmp_path)
    loaded = load_report(tmp_path / "report.json")
    assert loaded == ExperimentReport.from_dict(rep.to_dict())
    assert loaded.to_json() == rep.to_json()
    assert loaded.passed_count == rep.passed_count
    assert set(rep.artifacts) >= {"report.json", "timings.json", "checks.csv", "spectrum.csv"}
    with pytest.raises(ValueError):
        ExperimentReport.from_dict({"config": {}, "bogus": 1})


def test_run_deterministic_bytes(tmp_path):
    cfg = _cfg(perturbation={"recipe": "random_sign", "sigma": 0.05, "delta": 1, "seed": 3})
    run_config(cfg, tmp_path / "a")
    run_config(cfg, tmp_path / "b")
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()


def test_run_only_and_unknown(tmp_path):
    rep = run_config(_cfg(), tmp_path, only=["sandwich", "homotopy"], write=False)
    assert [c["check_name"] for c in rep.checks] == ["sandwich", "homotopy"]
    with pytest.raises(SpecPertError):
        run_config(_cfg(), tmp_path, only=["nope"], write=False)


def test_csv_precision(tmp_path):
    run_config(_cfg(), tmp_path)
    rep = load_report(tmp_path / "report.json")
    rows = _read_csv(tmp_path / "spectrum.csv")
    assert float(rows[0]["lambda"]) == rep.model["lambda_1"]


# --- plot data --------------------------------------------------------------

def test_localization_band_brackets(tmp_path):
    rep = run_config(_cfg(), tmp_path, write=False)
    emit_plotdata(rep, tmp_path)
    rows = _read_csv(tmp_path / "localization.csv")
    lo = np.array([float(r["delta_lower"]) for r in rows])
    hi = np.array([float(r["delta_upper"]) for r in rows])
    val = np.array([float(r["lambda_pert"]) for r in rows])
    # c2 is the sup over all n, so the band holds from n0 = 1 up to roundoff
    assert np.all(val >= lo * (1 - 1e-12)) and np.all(val <= hi * (1 + 1e-12))


def test_emit_plotdata_two_sequence(tmp_path):
    cfg = validate_config({
        "model": {"type": "TWO_SEQUENCE", "N": 300,
                  "law1": {"a": "pi", "b": "-pi/2", "exponent": 2},
                  "law2": {"a": "pi", "b": 0, "exponent": 2}},
        "perturbation": {"recipe": "rank_one", "mode": "THEOREM1", "sigma": 0.05, "delta": 1},
        "fit": {"window": [20, 200]},
        "checks": ["sandwich"],
    })
    rep = run_config(cfg, tmp_path, write=False)
    assert set(emit_plotdata(rep, tmp_path)) == {"spectrum_odd.csv", "spectrum_even.csv", "localization.csv"}
    odd = _read_csv(tmp_path / "spectrum_odd.csv")
    assert [int(r["n"]) for r in odd[:3]] == [1, 3, 5]
    assert "preserved" in rep.verdict


def test_emit_plotdata_needs_data():
    with pytest.raises(ValueError):
        emit_plotdata(ExperimentReport(config={}), "unused")


# --- sweep ------------------------------------------------------------------

def test_single_point_sweep_matches_run(tmp_path):
    cfg = _cfg()
    reports, _ = sweep(cfg, {}, tmp_path / "sw")
    single = run_config(cfg, tmp_path / "one")
    assert reports[0].to_dict()["checks"] == single.to_dict()["checks"]
    assert reports[0].c2_star == single.c2_star


def test_sigma_sweep_delta_b_vanishes(tmp_path):
    cfg = _cfg(checks=["sandwich"])
    sigmas = [0.1, 0.01, 0.001, 0.0]
    reports, summary = sweep(cfg, {"sigma": sigmas}, tmp_path, workers=2)
    rows = _read_csv(summary)
    assert [float(r["sigma"]) for r in rows] == sigmas
    db = [abs(float(r["delta_b"])) for r in rows]
    assert db[0] > db[1] > db[2] > db[3] == 0.0
    assert all(r.exit_code == 0 for r in reports)


def test_delta_sweep_finite_c2(tmp_path):
    reports, summary = sweep(_cfg(checks=["sandwich"]), {"delta": [0.5, 1.0, 2.0]}, tmp_path)
    assert all(np.isfinite(float(r["c2_star"])) for r in _read_csv(summary))


def test_sweep_failing_point_does_not_stop(tmp_path):
    reports, summary = sweep(_cfg(checks=["sandwich"]), {"sigma": [0.1, -5.0]}, tmp_path)
    assert [r.exit_code for r in reports] == [0, 2]


# --- CLI --------------------------------------------------------------------

def test_cli_run_and_check(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(_cfg()))
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "[PASS] sandwich" in out and "exit 0" in out
    assert main(["check", str(path), "--only", "sandwich", "--out", str(tmp_path / "c"),
                 "--format", "json"]) == 0
    assert not (tmp_path / "c" / "spectrum.csv").exists()


def test_cli_errors(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    raw = _cfg()
    raw["extra"] = 1
    path.write_text(json.dumps(raw))
    assert main(["run", str(path)]) == 2
    assert "CONFIG_INVALID" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_cli_fit(tmp_path, capsys):
    n = np.arange(1, 401)
    lam = (np.pi * n - np.pi / 2) ** -2.0
    p = tmp_path / "vals.csv"
    p.write_text("lambda\n" + "\n".join(f"{v:.17g}" for v in lam) + "\n")
    np.testing.assert_array_equal(read_values(p), lam)
    assert main(["fit", str(p), "--exponent", "2", "--window", "20,300"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["a_hat"] == pytest.approx(np.pi, rel=1e-10)
    assert fit["b_hat"] == pytest.approx(-np.pi / 2, rel=1e-8)


def test_demo_names():
    assert demo_path("diagonal") == demo_path("demo_diagonal.json")
    with pytest.raises(SpecPertError):
        demo_path("nope")


@pytest.mark.parametrize("name, code", [
    ("diagonal", 0), ("two_sequence", 0), ("brownian", 0), ("bridge", 0), ("violating", 1),
])
def test_demos(name, code, tmp_path):
    rep = run(demo_path(name), tmp_path)
    assert rep.exit_code == code, [c["check_name"] for c in rep.checks if not c["passed"]]
    if name == "violating":
        failed = {c["check_name"] for c in rep.checks if not c["passed"]}
        assert {"lemma1_condition", "theorem1_condition"} <= failed
