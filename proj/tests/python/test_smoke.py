import json
import math

import pytest

import opo_estim as oe


def small_config(**overrides):
    cfg = json.loads(oe.default_config())
    cfg["grid"] = {"dt": 1e-3, "t_final": 5.0}
    cfg["trials"] = 3
    cfg["workers"] = 1
    cfg.update(overrides)
    return json.dumps(cfg)


def test_default_config_round_trips():
    cfg = json.loads(oe.default_config())
    assert cfg["pump"]["c"] == 0.5
    assert cfg["physical"]["gamma1"] == 0.95
    assert cfg["grid"]["t_final"] == 100.0
    assert cfg["b_normalization"] == "consistent"


def test_single_trial_is_deterministic():
    cfg = small_config()
    a = oe.run_single_trial(cfg, index=1)
    b = oe.run_single_trial(cfg, index=1)
    assert not a["diverged"]
    assert a["dual-kf"] == b["dual-kf"]
    assert a["joint-ekf"] == b["joint-ekf"]
    c = oe.run_single_trial(cfg, index=2)
    assert a["dual-kf"]["eps"] != c["dual-kf"]["eps"]


def test_single_trial_paths():
    out = oe.run_single_trial(small_config(), index=0, keep_paths=True)
    paths = out["paths"]
    n = len(paths["times"])
    assert n == 5001
    for key in ("eps_true", "eps_dual", "q_truth", "p_dual", "q_joint"):
        assert len(paths[key]) == n
    assert all(math.isfinite(v) for v in paths["eps_dual"])


def test_case_study_summary(tmp_path):
    cfg = small_config(out_dir=str(tmp_path))
    summary = oe.run_case_study(cfg)
    assert summary["n_trials"] == 3
    assert summary["n_diverged"] == 0
    assert math.isfinite(summary["dual-kf"]["eps"]["mean_rpi"])
    assert (tmp_path / "case_study.csv").exists()
    assert (tmp_path / "case_study_trial0.svg").exists()


def test_sweep(tmp_path):
    cfg = json.loads(small_config(out_dir=str(tmp_path)))
    cfg["trials"] = 2
    cfg["grid"]["t_final"] = 2.0
    cfg["sweep"] = {"param": "T", "values": [0.5, 1.0]}
    points = oe.run_sweep(json.dumps(cfg))
    assert [p["value"] for p in points] == [0.5, 1.0]
    assert (tmp_path / "sweep_T.csv").exists()


def test_check_invariants_passes_at_defaults():
    rc, report = oe.check_invariants(
        oe.default_config(), sweep_points=10, ou_paths=50, ou_t_final=2000.0
    )
    assert rc == 0, report
    assert "[PASS]" in report
    assert "[FAIL]" not in report


def test_simulate_pump_zero_diffusion():
    path = oe.simulate_pump(g=0.0, epsilon0=0.5, c=0.5, t_final=1.0)
    assert len(path) == 1001
    assert all(v == 0.5 for v in path)


def test_rpi_and_mean_sem():
    truth = [0.0, 0.0, 0.0]
    baseline = [1.0, 1.0, 1.0]
    assert oe.rpi(truth, truth, baseline, dt=0.1) == pytest.approx(1.0)
    assert oe.rpi(baseline, truth, baseline, dt=0.1) == pytest.approx(0.0)
    mean, sem = oe.mean_sem([0.4, 0.6])
    assert mean == pytest.approx(0.5)
    assert sem == pytest.approx(0.1)
    with pytest.raises(Exception):
        oe.rpi([1.0], [1.0], [1.0], dt=1.0)


def test_config_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        oe.run_single_trial("{not json")
    bad = json.loads(oe.default_config())
    bad["pump"]["mu"] = 0.5
    with pytest.raises(ValueError):
        oe.run_single_trial(json.dumps(bad))


def test_trial_seed_counter_based():
    assert oe.trial_seed(20260826, 0) != oe.trial_seed(20260826, 1)
    assert oe.trial_seed(20260826, 7) == oe.trial_seed(20260826, 7)
