import json

import numpy as np
import pytest

import app
from framework.output import read_csv


def load(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


@pytest.mark.integration
def test_check_passes_with_default_tolerances(run_cli):
    status, out = run_cli("check")
    report = load(out / "check_report.json")
    assert status == 0
    assert report["passed"] is True
    assert report["first_failure"] is None
    assert {(r["suite"], r["dimension"]) for r in report["suites"]} >= {("gauss", 2), ("oracle", 1), ("ibp", 1)}
    assert report["provenance"]["command"] == "check"


@pytest.mark.integration
def test_check_fails_on_an_impossible_tolerance(run_cli):
    status, out = run_cli("check", "--tol", "gauss=1e-30")
    report = load(out / "check_report.json")
    assert status == 1
    assert report["passed"] is False
    assert report["first_failure"].startswith("gauss")


@pytest.mark.integration
def test_degenerate_jump_regime(run_cli):
    status, out = run_cli("degenerate1d", "--gamma", "4")
    summary = load(out / "degenerate_summary_gamma4.json")
    assert status == 0
    assert summary["regime"] == "jump"
    assert summary["h"] == pytest.approx(1.0 / 64.0)
    assert abs(summary["jump_location"] - summary["oracle_jump"]) <= 2.0 * summary["h"]
    assert summary["oracle_jump"] == pytest.approx(0.2148, abs=1e-3)
    assert summary["competitor_gap"] < 0.0
    assert summary["euler_energy"] == pytest.approx(-5.680, abs=5e-3)
    assert summary["energy"] <= summary["euler_energy"]
    assert summary["generic_gap"] <= 1e-6
    assert summary["within_tolerance"] is True

    curve = read_csv(out / "degenerate_oracle_gamma4.csv")
    assert list(curve.columns) == ["xi", "F"]
    profile = read_csv(out / "degenerate_profile_gamma4.csv")
    assert len(profile) == 3 * 64


@pytest.mark.integration
def test_degenerate_large_gamma(run_cli):
    status, out = run_cli("degenerate1d", "--gamma", "14")
    summary = load(out / "degenerate_summary_gamma14.json")
    assert status == 0
    assert 0.0 < summary["oracle_jump"] < np.sqrt(2.0 / 14.0)
    assert summary["jump_location"] < 1.0
    assert summary["euler_energy"] <= summary["oracle_energy"] + 0.1
    assert summary["generic_gap"] <= 1e-6
    assert summary["within_tolerance"] is True


@pytest.mark.integration
def test_degenerate_smooth_regime(run_cli):
    status, out = run_cli("degenerate1d", "--gamma", "1.5", "--cells", "8")
    summary = load(out / "degenerate_summary_gamma1.5.json")
    assert status == 0
    assert summary["regime"] == "smooth"
    assert summary["max_error"] <= 1e-8


@pytest.mark.integration
def test_degenerate_rejects_a_square(run_cli):
    status, _ = run_cli("degenerate1d", "--cells", "4,4")
    assert status == 1


@pytest.mark.integration
def test_poisson_is_exact_in_1d(run_cli):
    status, out = run_cli("poisson", "--cells", "4", "--levels", "2")
    summary = load(out / "poisson_summary.json")
    assert status == 0
    assert summary["error"] <= 1e-8
    profile = read_csv(out / "poisson_profile.csv")
    assert np.allclose(profile["value"], profile["exact"], atol=1e-8)


@pytest.mark.integration
def test_poisson_converges_in_2d(run_cli):
    status, out = run_cli("poisson", "--cells", "4,4", "--levels", "2")
    table = read_csv(out / "poisson_study.csv")
    assert status == 0
    assert table["cells"].tolist() == [16, 64]
    assert table["max_error"].iloc[1] < table["max_error"].iloc[0]
    assert (table["solver_agreement"] <= 1e-8).all()


@pytest.mark.integration
def test_gauss_on_the_disk(run_cli):
    status, out = run_cli("gauss", "--levels", "2")
    summary = load(out / "gauss_disk.json")
    assert status == 0
    assert summary["quantity"] == "perimeter_disk"
    assert [row["cells"] for row in summary["levels"]] == [64, 256]
    table = read_csv(out / "gauss_disk.csv")
    assert (table["perimeter"] > 0.0).all()


@pytest.mark.integration
def test_koch_perimeter_grows(run_cli):
    status, out = run_cli("refine-study", "--quantity", "perimeter", "--region", "koch")
    table = read_csv(out / "refine_perimeter.csv")
    assert status == 0
    assert len(table) == 3
    assert np.all(np.diff(table["perimeter"]) > 0.0)


@pytest.mark.integration
def test_smooth_error_study(run_cli):
    status, out = run_cli("refine-study", "--quantity", "smooth_error", "--cells", "4", "--levels", "2")
    summary = load(out / "refine_smooth_error.json")
    assert status == 0
    assert summary["error"] <= 1e-8


@pytest.mark.integration
def test_pairing_study(run_cli):
    status, out = run_cli("refine-study", "--quantity", "pairing", "--cells", "8", "--levels", "3")
    summary = load(out / "refine_pairing.json")
    assert status == 0
    assert len(summary["levels"]) == 3
    assert np.isfinite(summary["limit"])


@pytest.mark.integration
def test_info_prints_json(run_cli, capsys):
    status, out = run_cli("info")
    data = json.loads(capsys.readouterr().out)
    assert status == 0
    assert data["app_name"] == "ultrafun"
    assert not out.exists()


@pytest.mark.integration
def test_invalid_configuration_exits_with_two(run_cli, tmp_path):
    assert run_cli("poisson", "--degree", "0")[0] == 2
    assert run_cli("poisson", "--tol", "nonsense=1")[0] == 2
    assert run_cli("poisson", "--config", str(tmp_path / "missing.json"))[0] == 2


@pytest.mark.integration
def test_config_file_is_used(run_cli, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"cells": [4], "levels": 1}))
    status, out = run_cli("poisson", "--config", str(path))
    assert status == 0
    assert read_csv(out / "poisson_study.csv")["cells"].tolist() == [4]


@pytest.mark.integration
def test_identical_runs_write_identical_files(run_cli):
    outputs = []
    for _ in range(2):
        status, out = run_cli("poisson", "--cells", "4", "--levels", "2")
        assert status == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]


def test_parser_rejects_malformed_cells():
    with pytest.raises(SystemExit):
        app.build_parser().parse_args(["poisson", "--cells", "4,x"])
