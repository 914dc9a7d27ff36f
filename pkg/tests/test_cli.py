"""CLI tests through Typer's CliRunner."""

import json

import pytest
from typer.testing import CliRunner

from src.cli.commands import app
from src.errors import MrGarkError

runner = CliRunner()


def error_of(output: str) -> dict:
    line = next(l for l in output.splitlines() if l.startswith('{"code"'))
    return json.loads(line)


@pytest.fixture(autouse=True)
def _quiet(quiet_cli):
    return quiet_cli


def test_check_text_report():
    result = runner.invoke(app, ["check", "--scheme", "mrk-radau1a-3", "--M", "2"])
    assert result.exit_code == 0, result.output
    assert "Order: 3" in result.output
    assert "Internally consistent: yes" in result.output
    assert "Stability-decoupled: no" in result.output


def test_check_json_report():
    result = runner.invoke(app, ["check", "-s", "ssp2-mr-lastslow", "-M", "2", "--rho", "1", "-f", "json"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["classified_order"] == 2
    assert data["structure_tag"] == "explicit"
    assert 0 < data["monotonicity"]["radius"] < 1
    assert data["passed"] is True


def test_check_reports_mis_inner_steps():
    result = runner.invoke(app, ["check", "-s", "mis", "-M", "3", "-f", "json"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["M"] == 3
    assert data["classified_order"] == 3


def test_check_uses_catalog_partitioning():
    result = runner.invoke(app, ["check", "-s", "add-stable-3-radau", "-M", "3", "-f", "json"])
    assert result.exit_code == 0, result.output
    stability = json.loads(result.output)["stability"]
    assert stability["partitioning"] == "component"
    assert stability["algebraically_stable"] is True


def test_partitioning_option_overrides_catalog():
    result = runner.invoke(
        app, ["stability", "-s", "add-stable-3-radau", "-M", "2", "--partitioning", "additive", "-f", "json"]
    )
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["partitioning"] == "additive"
    assert data["algebraically_stable"] is False


def test_check_expected_order_failure():
    result = runner.invoke(app, ["check", "-s", "mrk-radau2a-3", "-M", "2", "--expect-order", "3", "-f", "json"])
    assert result.exit_code == 1
    assert json.loads(result.output)["passed"] is False


def test_unknown_scheme():
    result = runner.invoke(app, ["check", "--scheme", "nosuch"])
    assert result.exit_code == 2
    assert error_of(result.output)["code"] == "UnknownScheme"


def test_unknown_problem():
    result = runner.invoke(app, ["converge", "-s", "add-stable-2", "-M", "2", "--problem", "nosuch", "--H", "0.1,0.05,0.025"])
    assert result.exit_code == 2
    assert error_of(result.output)["code"] == "UnknownProblem"


@pytest.mark.parametrize("cls", MrGarkError.__subclasses__())
def test_error_classes_are_documented(cls):
    assert cls.__doc__ and cls.__doc__.strip()
    assert cls.exit_code in (1, 2)


def test_missing_scheme():
    result = runner.invoke(app, ["stability"])
    assert result.exit_code == 2
    assert error_of(result.output)["code"] == "InvalidParameter"


def test_converge_csv():
    result = runner.invoke(app, [
        "converge", "-s", "add-stable-2", "-M", "2", "--problem", "linear2",
        "--H", "0.2,0.1,0.05,0.025", "--format", "csv",
    ])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "H,error"
    assert len(lines) == 5


def test_converge_rejects_bad_steps():
    result = runner.invoke(app, ["converge", "-s", "add-stable-2", "--problem", "linear2", "--H", "0.1,x"])
    assert result.exit_code == 2
    assert error_of(result.output)["code"] == "InvalidParameter"


def test_integrate_writes_trajectory(tmp_path):
    out = tmp_path / "traj.csv"
    result = runner.invoke(app, [
        "integrate", "-s", "ssp2-mr-lastslow", "-M", "2", "--problem", "monotone-decay",
        "--H", "0.1", "-o", str(out),
    ])
    assert result.exit_code == 0, result.output
    assert "Steps: 10 of H=0.1" in result.output
    assert "fast RHS 40" in result.output
    assert out.read_text().splitlines()[0] == "t,y0,y1"


def test_integrate_non_dividing_step():
    result = runner.invoke(app, ["integrate", "-s", "ssp2-mr-lastslow", "--problem", "linear2", "--H", "0.3"])
    assert result.exit_code == 2
    assert error_of(result.output)["code"] == "InvalidParameter"


def test_list():
    result = runner.invoke(app, ["list", "-f", "json"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert "mrk-radau1a-3" in [s["name"] for s in data["schemes"]]
    assert "ssp2" in data["bases"]


def test_export_then_check_file(tmp_path):
    path = tmp_path / "lastslow.json"
    result = runner.invoke(app, ["export", "-s", "ssp2-mr-lastslow", "-M", "2", "-o", str(path)])
    assert result.exit_code == 0, result.output
    assert json.loads(path.read_text())["M"] == 2

    result = runner.invoke(app, ["monotonicity", str(path), "-f", "json"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["incidence_verdicts"]


def test_stability_report_saved(tmp_path):
    path = tmp_path / "stab.json"
    result = runner.invoke(app, ["stability", "-s", "add-stable-2", "-M", "2", "-o", str(path)])
    assert result.exit_code == 0, result.output
    assert json.loads(path.read_text())["stability_decoupled"] is True
