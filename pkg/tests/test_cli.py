import json
import subprocess
import sys

import pytest

from bicomplex import __version__
from bicomplex.cli import EXIT_INPUT, EXIT_OK, EXIT_PROPERTY, main
from bicomplex.problem import fixture_path


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def envelope(text):
    doc = json.loads(text)
    assert doc["tool"] == "bicomplex" and doc["version"] == __version__
    assert len(doc["config_hash"]) == 64
    return doc


@pytest.mark.parametrize("cmd,spec", [
    ("el", "laplace.toml"), ("ms", "laplace.toml"), ("momentum", "laplace.toml"), ("noether", "laplace.toml"),
    ("el", "three_component.toml"), ("ms", "three_component.toml"), ("ms", "scalar_z3.toml"),
    ("el", "mechanics.toml"), ("ms", "mechanics.toml"), ("inverse", "mechanics.toml"),
])
def test_symbolic_commands_on_fixtures(cmd, spec, capsys):
    code, out, _ = run([cmd, "--spec", str(fixture_path(spec))], capsys)
    doc = envelope(out)
    assert code == EXIT_OK and doc["ok"] and doc["command"] == cmd
    assert all(doc.get("expected", {}).values())


@pytest.mark.parametrize("name", ["laplace.toml", "laplace"])
def test_bundled_fixture_names_resolve(name, capsys):
    code, out, _ = run(["el", "--spec", name], capsys)
    assert code == EXIT_OK
    assert envelope(out)["result"]["euler_lagrange"] == ["u[-1,0] + u[0,-1] - 4*u[0,0] + u[0,1] + u[1,0]"]


def test_el_output_text(capsys):
    code, out, _ = run(["el", "--spec", "mechanics.toml"], capsys)
    res = envelope(out)["result"]
    assert code == EXIT_OK
    assert len(res["euler_lagrange"]) == 2
    assert res["matches_degenerate_form"] is True


def test_noether_non_symmetry_is_property_failure(capsys):
    code, out, err = run(["noether", "--spec", "three_component.toml"], capsys)
    assert code == EXIT_PROPERTY and out == ""
    doc = json.loads(err)
    assert doc["exit_code"] == EXIT_PROPERTY and doc["witness"]


def test_inverse_rejects_non_variational_source(tmp_path, capsys):
    spec = tmp_path / "bad.toml"
    spec.write_text('[signature]\np = 1\nq = 1\n[problem]\nsource = ["u[1]"]\n')
    code, _, err = run(["inverse", "--spec", str(spec)], capsys)
    assert code == EXIT_PROPERTY
    assert "Helmholtz" in json.loads(err)["error"]


def test_inverse_round_trip(tmp_path, capsys):
    spec = tmp_path / "ok.json"
    spec.write_text(json.dumps({"signature": {"p": 1, "q": 1}, "problem": {"source": ["u[1] + u[-1] - 2*u"]}}))
    code, out, _ = run(["inverse", "--spec", str(spec)], capsys)
    res = envelope(out)["result"]
    assert code == EXIT_OK and res["round_trip_verified"]


def test_parse_error_reports_position(tmp_path, capsys):
    spec = tmp_path / "bad.toml"
    spec.write_text('[signature]\np = 1\nq = 1\n[problem]\nlagrangian = "u*(u[1] - )"\n')
    code, out, err = run(["el", "--spec", str(spec)], capsys)
    doc = json.loads(err)
    assert code == EXIT_INPUT and out == ""
    assert doc["line"] == 1 and doc["column"] == 11


@pytest.mark.parametrize("text", [
    "[signature]\np = 0\nq = 1\n",
    "[problem]\nlagrangian = \"u\"\n",
    "[signature]\np = 1\nq = 1\n[problem]\nL = [[\"u[1]\"]]\n",
    "not toml at all [",
])
def test_input_errors_exit_2(tmp_path, capsys, text):
    spec = tmp_path / "x.toml"
    spec.write_text(text)
    code, _, err = run(["el", "--spec", str(spec)], capsys)
    assert code == EXIT_INPUT
    assert json.loads(err)["ok"] is False


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = run(["ms", "--spec", str(tmp_path / "nope.toml")], capsys)
    assert code == EXIT_INPUT


def test_check_small_and_injected_bug(tmp_path, capsys):
    out_json = tmp_path / "check.json"
    code, out, _ = run(["check", "--seed", "1", "--sizes", "1", "--json", str(out_json)], capsys)
    rep = json.loads(out)
    assert code == EXIT_OK and rep["all_passed"] and out_json.read_text() == out
    code, out, _ = run(["check", "--seed", "1", "--sizes", "1", "--inject-dv-sign-bug"], capsys)
    rep = json.loads(out)
    assert code == EXIT_PROPERTY and not rep["all_passed"]
    failing = [i for i in rep["identities"] if not i["passed"]]
    assert failing and failing[0]["counterexample"]["residual"]


def test_check_rejects_bad_sizes(capsys):
    code, _, _ = run(["check", "--sizes", "0"], capsys)
    assert code == EXIT_INPUT


def test_integrate_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "mech.toml"
    cfg.write_text('scheme = "euler-b"\nseed = 1\n[mesh]\nnt = 50\nht = 0.1\n'
                   '[params]\nH = "h*(q^2 + p^2)/2"\nconstants = { h = 0.1 }\n[initial]\nq = 1.0\n'
                   '[thresholds]\nomega_drift = 1e-10\n[output]\ncsv = "out.csv"\nmanifest = "out.json"\n')
    code, out, _ = run(["integrate", "--config", str(cfg)], capsys)
    assert code == EXIT_OK
    assert (tmp_path / "out.csv").read_text().count("\n") == 51
    assert json.loads((tmp_path / "out.json").read_text()) == json.loads(out)


def test_integrate_threshold_miss_exit_1(tmp_path, capsys):
    cfg = tmp_path / "ctl.toml"
    cfg.write_text('scheme = "wave-control"\nseed = 2\n[mesh]\nnx = 16\nnt = 40\nhx = 0.3927\nht = 0.05\n'
                   '[initial]\nu = "0.5*cos(x)"\n[thresholds]\nms_residual_max = 1e-9\n')
    code, out, _ = run(["integrate", "--config", str(cfg)], capsys)
    assert code == EXIT_PROPERTY
    assert json.loads(out)["thresholds"]["ms_residual_max"]["met"] is False


def test_integrate_bad_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('scheme = "wave"\n[mesh]\nnx = 16\nnt = 0\nhx = 0.1\nht = 0.1\n')
    code, _, err = run(["integrate", "--config", str(cfg)], capsys)
    assert code == EXIT_INPUT and "nt" in json.loads(err)["error"]


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "bicomplex.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
