import json

import numpy as np
import pytest

from app.core.config import settings
from common.errors import ConfigError, InputError, StageError
from core.pipeline import observe_trajectories, replicate, run_experiment, simulate, slice_dir, sweep


def _artifact_bytes(out_dir):
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir()) if p.suffix in (".json", ".csv") and p.name != "timings.json"}


def test_run_writes_all_artifacts(small_config, tmp_path):
    report = run_experiment(small_config)
    out = tmp_path / "run"
    names = {p.name for p in out.iterdir()}
    assert {"matrix.csv", "matrix.json", "diagram.json", "diagram.csv", "diagram.svg", "report.json", "timings.json"} <= names
    assert report.diagram_path == "diagram.json"
    assert len(report.betti) == 2
    assert report.filtration_size > 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["config"]["seed"] == 5
    assert doc["seeds"]["master"] == 5
    assert "timings_ms" not in doc
    timings = json.loads((out / "timings.json").read_text())["timings_ms"]
    assert {"simulate", "observe", "distances", "filtration", "persistence", "summary", "artifacts"} <= set(timings)


def test_matrix_csv_has_no_header(small_config, tmp_path):
    run_experiment(small_config)
    rows = (tmp_path / "run" / "matrix.csv").read_text().splitlines()
    assert len(rows) == small_config.N
    assert all(len(r.split(",")) == small_config.N for r in rows)
    meta = json.loads((tmp_path / "run" / "matrix.json").read_text())
    assert meta == {"N": 12, "n": 8, "t": 3, "system": "sphere_height_gradient", "seed": 5}


def test_same_config_gives_identical_artifacts(small_config, tmp_path):
    run_experiment(small_config)
    first = _artifact_bytes(tmp_path / "run")
    run_experiment(small_config)
    assert _artifact_bytes(tmp_path / "run") == first


def test_format_selection(small_config):
    report = run_experiment(small_config.with_overrides(formats=("csv",)))
    assert report.diagram_path == "diagram.csv"
    assert sorted(report.artifacts) == ["diagram.csv", "matrix.csv", "report.json"]


def test_expected_signature_sets_passed(small_config):
    report = run_experiment(small_config.with_overrides(expected={0: 99}))
    assert report.passed is False
    assert run_experiment(small_config).passed is None


def test_lorenz_with_polynomial_observation(tmp_path):
    from core.experiment import ExperimentConfig

    cfg = ExperimentConfig.from_dict(
        {"system": "lorenz", "observation": "random_poly3", "n": 6, "T": 0.1, "N": 8, "t": 2, "seed": 2, "max_dim": 1, "output_dir": str(tmp_path / "lz")}
    )
    series = observe_trajectories(cfg, simulate(cfg))
    assert len(series) == 8 and series[0].values.shape == (6, 1)
    report = run_experiment(cfg)
    assert report.betti[0] >= 1


def test_noise_changes_only_observations(small_config):
    clean = observe_trajectories(small_config, simulate(small_config))
    noisy_cfg = small_config.with_overrides(noise_sigma=0.05)
    noisy = observe_trajectories(noisy_cfg, simulate(noisy_cfg))
    assert not np.array_equal(clean[0].values, noisy[0].values)
    np.testing.assert_allclose(clean[0].values, noisy[0].values, atol=0.5)


def test_sweep_equals_independent_runs(small_config, tmp_path):
    reports = sweep(small_config, [1, 3])
    assert [r.t for r in reports] == [1, 3]
    base = tmp_path / "run"
    assert json.loads((base / "sweep.json").read_text())["t_values"] == [1, 3]
    for r in reports:
        slice_out = base / f"t-{r.t:02d}"
        swept = _artifact_bytes(slice_out)
        single = run_experiment(small_config.with_overrides(t=r.t, output_dir=slice_dir(small_config.output_dir, r.t)))
        assert single.betti == r.betti
        assert _artifact_bytes(slice_out) == swept


def test_sweep_rejects_out_of_range_slack(small_config):
    with pytest.raises(ConfigError):
        sweep(small_config, [1, 8])
    with pytest.raises(InputError):
        sweep(small_config, [])


def test_failure_names_stage_and_removes_artifacts(small_config, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "SIMPLEX_BUDGET", 5)
    with pytest.raises(StageError) as exc:
        run_experiment(small_config)
    assert exc.value.stage == "filtration"
    assert exc.value.data["cause"] == "resource_limit"
    assert not (tmp_path / "run").exists()


def test_replicate_fraction(small_config, tmp_path):
    cfg = small_config.with_overrides(expected={0: 1})
    out = replicate(cfg, [1], min_fraction=0.5)
    assert out.fraction in (0.0, 1.0)
    doc = json.loads((tmp_path / "run" / "replicate.json").read_text())
    assert doc["seeds"] == [1]
    assert (tmp_path / "run" / "seed-1" / "report.json").exists()


def test_replicate_errors(small_config):
    with pytest.raises(InputError):
        replicate(small_config.with_overrides(expected={0: 1}), [])
    with pytest.raises(ConfigError):
        replicate(small_config, [1, 2])


def test_lorenz_short_recovers_both_wings_on_most_seeds(tmp_path):
    from core.experiment import ExperimentConfig

    found = []
    for seed in range(5):
        cfg = ExperimentConfig.from_dict({"preset": "lorenz-short", "seed": seed, "formats": "json", "output_dir": str(tmp_path / f"seed-{seed}")})
        report = run_experiment(cfg)
        assert report.r_max > 0 and report.simplices_by_dim[3] > 0
        found.append(report.betti[0] == 1 and report.betti[1] == 2)
    assert sum(found) >= 4, found


def test_cutoff_policy_sets_r_max(small_config):
    from core.filtration import default_r_max, enclosing_radius
    from core.slack import dissimilarity_matrix

    default = run_experiment(small_config)
    D = dissimilarity_matrix(observe_trajectories(small_config, simulate(small_config)), small_config.t)
    assert default.r_max == enclosing_radius(D)
    assert default.config["cutoff"] == "enclosing"
    mst = run_experiment(small_config.with_overrides(cutoff="mst"))
    assert mst.r_max == default_r_max(D)
