import json
import math

import pytest

import nlstab


def test_schema_version():
    assert nlstab.schema_version() == 1


def test_profile_ground_state():
    p = nlstab.profile("cubic", omega=1.0, node_count=0, r_max=20.0, n_points=400)
    assert p["node_count"] == 0
    assert p["phi0"] > 0
    assert p["mass"] > 0
    assert p["residual_norm"] < 1e-8


def test_resonance_set_single_mode():
    members = nlstab.resonance_set([0.6], 1.0)
    assert members == [[2]]


def test_verdict_runs(tmp_path):
    v = nlstab.verdict("cubic", omega=1.0, node_count=0, r_max=20.0, n_points=300)
    assert "verdict" in v
    assert v["verdict"] in {
        "linearly-stable",
        "fails-condition-1",
        "fails-condition-2",
        "fails-condition-3",
        "degenerate/inconclusive",
    }


def test_pipeline_run(tmp_path):
    cfg = {
        "model": {"nonlinearity": "cubic", "omega": 1.0, "node_count": 0},
        "grid": {"r_max": 20.0, "n_points": 300},
        "output": {"directory": str(tmp_path / "out")},
    }
    res = nlstab.run(json.dumps(cfg), "profile")
    assert res["exit_code"] == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["stages"]["profile"] == "ok"


def test_config_error():
    with pytest.raises(nlstab.ConfigError):
        nlstab.run(json.dumps({"model": {"omega": -1.0}}), "profile")
