"""Config schema, preset resolution, and the command-line interface."""

import json
import os
import subprocess
import sys

import pytest

from infoloss.config import (
    list_presets,
    load_config,
    load_config_file,
    preset_path,
    resolve_config_path,
    triangle_abs_config,
)
from infoloss.errors import ConfigError

ALL_PRESETS = ["ex1_fold_square", "ex2_square_gaussian", "ex3_exp_sawtooth",
               "ex4_polar_unitdisc", "ex5_radius_only", "ex6_m0", "ex6_m1",
               "ex6_m2", "identity", "limiter_gaussian", "quantizer_uniform"]


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "infoloss", *args],
                          capture_output=True, text=True, **kw)


# --- schema ------------------------------------------------------------------

def test_all_presets_load():
    assert list_presets() == ALL_PRESETS
    for name in ALL_PRESETS:
        setup = load_config_file(preset_path(name))
        assert setup.name == name
        assert len(setup.digest) == 64


def test_digest_is_stable():
    a = load_config_file(preset_path("identity")).digest
    b = load_config_file(preset_path("identity")).digest
    assert a == b


def test_triangle_builder_matches_shipped_preset():
    built = load_config(triangle_abs_config(1, 2))
    shipped = load_config_file(preset_path("ex6_m1"))
    assert built.density.params["volume"] == shipped.density.params["volume"]
    assert [p.name for p in built.pmap.parts] == \
        [p.name for p in shipped.pmap.parts]


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.pop("dim"), "dim"),
    (lambda d: d.update(dim=0), "dim"),
    (lambda d: d.update(parts=[]), "parts"),
    (lambda d: d["parts"][0].update(forward=["x1 +"]), "offset"),
    (lambda d: d["parts"][0].update(forward=["sinh(x1)"]), "unknown function"),
    (lambda d: d["parts"][0].update(forward=["x9"]), "unknown variable"),
    (lambda d: d["parts"][0].update(forward=["x1", "x2"]), "expected 1"),
    (lambda d: d["parts"][0].pop("inverse"), "inverse"),
    (lambda d: d["density"].update(form="cauchy"), "unknown form"),
    (lambda d: d["parts"][0]["region"].update(bbox=[[1.0, 0.0]]), "box"),
])
def test_schema_rejections(mutate, fragment):
    doc = json.loads(preset_path("identity").read_text())
    mutate(doc)
    with pytest.raises(ConfigError) as err:
        load_config(doc)
    assert fragment.lower() in str(err.value).lower()


def test_inverse_vars_use_y_names():
    doc = json.loads(preset_path("identity").read_text())
    doc["parts"][0]["inverse"] = ["x1"]
    with pytest.raises(ConfigError):
        load_config(doc)


def test_preset_dir_override(tmp_path, monkeypatch):
    src = preset_path("identity").read_text()
    (tmp_path / "mymodel.json").write_text(src)
    monkeypatch.setenv("INFOLOSS_PRESET_DIR", str(tmp_path))
    assert list_presets() == ["mymodel"]
    assert resolve_config_path("mymodel") == tmp_path / "mymodel.json"


def test_resolve_plain_path(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(preset_path("identity").read_text())
    assert resolve_config_path(str(p)) == p


# --- CLI ---------------------------------------------------------------------

def test_cli_validate_ok():
    res = run_cli("validate", "identity", "--n", "2000")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    assert payload["ok"] is True


def test_cli_validate_overlap_exit_2(tmp_path):
    doc = json.loads(preset_path("identity").read_text())
    doc["parts"].append({
        "type": "branch", "name": "extra", "kind": "bijective",
        "region": {"predicate": "x1 > 0.5", "bbox": [[0.0, 1.0]]},
        "forward": ["x1"], "inverse": ["y1"]})
    p = tmp_path / "overlap.json"
    p.write_text(json.dumps(doc))
    res = run_cli("validate", str(p), "--n", "2000")
    assert res.returncode == 2
    assert json.loads(res.stdout)["overlaps"] > 0


def test_cli_bad_expression_exit_2(tmp_path):
    doc = json.loads(preset_path("identity").read_text())
    doc["parts"][0]["forward"] = ["x1 +"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    res = run_cli("validate", str(p))
    assert res.returncode == 2
    assert "offset" in res.stderr


def test_cli_loss_identity():
    res = run_cli("loss", "identity", "--n", "5000", "--seed", "1")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    assert payload["loss_bits"] == 0.0
    assert payload["method"] == "eq5_mc"


def test_cli_loss_quadrature_method():
    res = run_cli("loss", "ex2_square_gaussian", "--method", "eq5_quadrature",
                  "--nodes", "256")
    assert res.returncode == 0
    assert abs(json.loads(res.stdout)["loss_bits"] - 1.0) < 1e-6


def test_cli_loss_infinite_exit_3():
    res = run_cli("loss", "quantizer_uniform", "--n", "2000")
    assert res.returncode == 3
    assert res.stdout == ""
    assert "Infinite" in res.stderr


def test_cli_classify():
    res = run_cli("classify", "ex5_radius_only", "--n", "20000")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    assert payload["verdict"] == "Infinite"
    assert payload["reason"] == "rank_deficient_mass"


def test_cli_bounds():
    res = run_cli("bounds", "ex6_m1", "--n", "50000")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    assert abs(payload["e_log_card_bits"] - 0.75) < 0.02


def test_cli_sweep_csv():
    res = run_cli("sweep", "identity", "--n", "5000", "--depths", "0:3")
    assert res.returncode == 0
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "depth,loss_bits,stderr_bits"
    assert len(lines) == 5
    assert lines[1].startswith("0,")


def test_cli_report_json_roundtrip():
    res = run_cli("report", "identity", "--n", "20000")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    for key in ("name", "model_digest", "validation", "classification",
                "loss", "bounds", "sweep", "warnings"):
        assert key in payload
    assert payload["loss"]["eq5_mc"]["loss_bits"] == 0.0
    assert "wall_time_s" not in payload  # deterministic payload by default


def test_cli_report_sawtooth_flags():
    res = run_cli("report", "ex3_exp_sawtooth", "--n", "50000")
    assert res.returncode == 0
    payload = json.loads(res.stdout)
    flags = payload["bounds"]["infinite_flags"]
    assert flags["e_log_card"] and flags["log_e_card"] and flags["max_log_card"]
    assert not flags["h_W"]
    assert abs(payload["loss"]["eq5_mc"]["loss_bits"]
               - payload["bounds"]["h_W_bits"]) < 0.02
    assert "truncated" in " ".join(payload["warnings"])


def test_cli_report_text_and_timing():
    res = run_cli("report", "quantizer_uniform", "--n", "20000", "--out", "text")
    assert res.returncode == 0
    assert "Infinite" in res.stdout
    assert "atom" in res.stdout
    res = run_cli("report", "identity", "--n", "5000", "--timing")
    assert "wall_time_s" in json.loads(res.stdout)


def test_cli_presets_listing():
    res = run_cli("presets")
    names = [line.split("\t")[0] for line in res.stdout.strip().splitlines()]
    assert names == ALL_PRESETS
