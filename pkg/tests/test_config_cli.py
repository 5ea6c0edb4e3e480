"""Configuration validation and the command-line interface."""

import hashlib
import json
from pathlib import Path

import pytest

from helixlab.cli import EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_HYPOTHESIS, EXIT_OK, main
from helixlab.config import canonical, validate, validate_dict
from helixlab.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _run(tmp_path, command, cfg, out="out", *extra):
    return main([command, "--config", cfg, "--out", str(tmp_path / out), *extra])


# -- validation ---------------------------------------------------------------

def test_empty_command_names_the_field():
    with pytest.raises(ConfigError) as exc:
        validate_dict({"command": "", "parameters": {}})
    assert exc.value.path == "command"


def test_negative_radius_is_a_range_error():
    with pytest.raises(ConfigError) as exc:
        validate_dict({"command": "flux", "parameters": {
            "surface": {"kind": "catenoid"}, "curves": [{"radius": -1.0}]}})
    assert exc.value.path == "parameters.curves[0].radius"


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError) as exc:
        validate_dict({"command": "census", "parameters": {"k": 3, "genus": 1}})
    assert "genus" in exc.value.path


def test_missing_required_parameter():
    with pytest.raises(ConfigError) as exc:
        validate_dict({"command": "scan", "parameters": {}})
    assert exc.value.path == "parameters.N"


def test_cross_field_checks():
    with pytest.raises(ConfigError):
        validate_dict({"command": "force", "parameters": {"y": [0.5, 2.0], "c": [1.0]}})
    with pytest.raises(ConfigError):
        validate_dict({"command": "census", "parameters": {}})
    with pytest.raises(ConfigError):
        validate_dict({"command": "height", "parameters": {"r1": 3.0, "r2": 2.0}})


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError) as exc:
        validate('{\n  "command": "census",\n  "parameters": {"k": 3,}\n}')
    assert "line 3" in str(exc.value) and "column" in str(exc.value)


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = validate(path.read_text(encoding="utf-8"))
    text = canonical(cfg)
    assert canonical(validate(text)) == text
    assert validate(text) == cfg


def test_canonical_form_fills_defaults():
    cfg = validate((CONFIGS / "solve_helicoid.json").read_text(encoding="utf-8"))
    data = json.loads(canonical(cfg))
    assert data["parameters"]["tol"] == 1e-10
    assert data["parameters"]["holes"] == []
    assert data["parameters"]["boundary"]["sigma_min"]["reference"] == "helicoid"


# -- command line -------------------------------------------------------------

def test_force_command(tmp_path, capsys):
    assert _run(tmp_path, "force", str(CONFIGS / "force_two_necks.json")) == EXIT_OK
    data = json.loads((tmp_path / "out" / "force.json").read_text())
    assert data["F1"] == pytest.approx(1.8075588524, rel=1e-10)
    assert not data["equilibrium"]["converged"]
    assert json.loads(capsys.readouterr().out)["verdicts"]


def test_census_command(tmp_path):
    assert _run(tmp_path, "census", str(CONFIGS / "census_k6.json")) == EXIT_OK
    data = json.loads((tmp_path / "out" / "census.json").read_text())
    assert data == {"components": 1, "ends": 2, "fixed_points": 6, "genus": 2}


def test_residue_command(tmp_path):
    assert _run(tmp_path, "residue", str(CONFIGS / "residue_p1.json")) == EXIT_OK
    data = json.loads((tmp_path / "out" / "residue.json").read_text())
    assert data["closed_form"] == [1.0, 0.0]
    assert abs(complex(*data["quadrature"]) - 1) < 1e-12


def test_exit_code_for_bad_config(tmp_path):
    cfg = _write(tmp_path, {"command": "census", "parameters": {"k": -1}})
    assert _run(tmp_path, "census", cfg) == EXIT_CONFIG
    assert _run(tmp_path, "force", str(CONFIGS / "census_k6.json")) == EXIT_CONFIG
    assert _run(tmp_path, "census", str(tmp_path / "missing.json")) == EXIT_CONFIG
    bad = tmp_path / "broken.json"
    bad.write_text("{", encoding="utf-8")
    assert _run(tmp_path, "census", str(bad)) == EXIT_CONFIG


def test_exit_code_for_nonconvergence(tmp_path):
    data = json.loads((CONFIGS / "solve_helicoid.json").read_text())
    data["parameters"].update({"max_iter": 1, "initial": "zero"})
    assert _run(tmp_path, "solve", _write(tmp_path, data)) == EXIT_CONVERGENCE


def test_exit_code_for_hypothesis_failure(tmp_path, capsys):
    data = json.loads((CONFIGS / "height_catenoid.json").read_text())
    data["parameters"]["r1"] = 0.5
    assert _run(tmp_path, "height", _write(tmp_path, data)) == EXIT_HYPOTHESIS
    assert "hypothesis failure" in capsys.readouterr().err


def test_seed_override_is_recorded(tmp_path):
    assert _run(tmp_path, "census", str(CONFIGS / "census_k6.json"), "out", "--seed", "7") == EXIT_OK
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 7


@pytest.mark.parametrize("command, name", [("force", "force_two_necks"), ("scan", "scan_N2"),
                                           ("solve", "solve_helicoid")])
def test_reruns_are_byte_identical(tmp_path, command, name):
    cfg = str(CONFIGS / f"{name}.json")
    assert _run(tmp_path, command, cfg, "a") == EXIT_OK
    assert _run(tmp_path, command, cfg, "b") == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "manifest.json")
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_manifest_digests_match(tmp_path):
    assert _run(tmp_path, "force", str(CONFIGS / "force_two_necks.json")) == EXIT_OK
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["files"]
    for entry in manifest["files"]:
        digest = hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest()
        assert digest == entry["sha256"]
    assert manifest["wall_time_s"] >= 0
