import json

import numpy as np
import pytest

from vdpsim import cli
from vdpsim import defaults as df
from vdpsim.config import (ExperimentConfig, NoiseSpec, config_from_dict,
                           config_hash, config_to_dict, load_config,
                           save_config)
from vdpsim.errors import ConfigError
from vdpsim.harness import (contour_polylines, noise_ensemble, run_scenario,
                            write_csv)

TWO_PI = 2 * np.pi


class TestNoiseEnsemble:
    def test_zero_sigmas_reproduce_base(self):
        base = df.effective_params("classical", detuning_hz=50.0)
        spec = NoiseSpec(coupling_rel_sigma=0.0, freq_sigma_hz=0.0, ensemble_size=5)
        for member in noise_ensemble(base, spec, seed=3):
            assert member == base

    def test_law_of_large_numbers(self):
        base = df.effective_params("classical")
        spec = NoiseSpec(ensemble_size=10_000)
        draws = noise_ensemble(base, spec, seed=11)
        ratios = np.array([m.V for m in draws]) / base.V
        assert np.std(ratios, ddof=1) == pytest.approx(0.02, rel=0.05)
        dets = np.array([m.delta2 for m in draws]) / TWO_PI
        assert np.std(dets, ddof=1) == pytest.approx(37.0, rel=0.05)

    def test_same_seed_identical(self):
        base = df.effective_params("quantum")
        spec = NoiseSpec(ensemble_size=8)
        a = noise_ensemble(base, spec, seed=21)
        b = noise_ensemble(base, spec, seed=21)
        assert a == b
        c = noise_ensemble(base, spec, seed=22)
        assert a != c


class TestConfig:
    def test_roundtrip(self, tmp_path):
        cfg = config_from_dict({
            "scenario": "sync", "seed": 7, "cutoffs": [10, 10],
            "regime": "quantum",
            "effective": {"regime": "quantum", "phi": 0.5},
            "readout": {"shots": 100, "beta_max": 3.5},
        })
        path = tmp_path / "cfg.json"
        save_config(cfg, path)
        back = load_config(path)
        assert back == cfg
        assert config_hash(back) == config_hash(cfg)

    def test_schedule_roundtrips_losslessly(self, tmp_path):
        sched = df.table_schedule("classical", phi=0.9,
                                  detunings=(0.0, TWO_PI * 40))
        cfg = ExperimentConfig(scenario="sync", seed=1, engine="stroboscopic",
                               schedule=sched)
        path = tmp_path / "cfg.json"
        save_config(cfg, path)
        back = load_config(path)
        assert back.schedule == sched

    def test_hash_semantics(self):
        base = config_from_dict({"scenario": "arnold", "seed": 5})
        same_io = config_from_dict({"scenario": "arnold", "seed": 5,
                                    "output_dir": "elsewhere", "workers": 2})
        assert config_hash(base) == config_hash(same_io)
        other = config_from_dict({"scenario": "arnold", "seed": 6})
        assert config_hash(base) != config_hash(other)
        other2 = config_from_dict({"scenario": "arnold", "seed": 5,
                                   "readout": {"shots": 50}})
        assert config_hash(base) != config_hash(other2)

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"scenario": "warp", "seed": 1})
        with pytest.raises(ConfigError):
            config_from_dict({"scenario": "sync"})  # missing seed
        with pytest.raises(ConfigError):
            config_from_dict({"scenario": "sync", "seed": 1, "workers": 0})
        with pytest.raises(ConfigError):
            config_from_dict({"scenario": "sync", "seed": 1,
                              "noise": {"ensemble_size": 0}})


def _csv_bytes(direc):
    out = {}
    for path in sorted(direc.glob("*.csv")):
        out[path.name] = path.read_bytes()
    return out


class TestScenarios:
    def test_tomo_check_bundle(self, tmp_path):
        cfg = config_from_dict({"scenario": "tomo-check", "seed": 3,
                                "output_dir": str(tmp_path / "t")})
        ctx = run_scenario(cfg)
        assert all(ctx.checks.values())
        manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
        assert manifest["config_hash"] == config_hash(cfg)
        assert manifest["failed_stage"] is None
        assert "tomo_check.csv" in manifest["outputs"]

    def test_sync_scenario_rerun_byte_identical(self, tmp_path):
        raw = {"scenario": "sync", "seed": 12, "regime": "quantum",
               "cutoffs": [12, 12], "phis": [0.0, np.pi],
               "readout": {"shots": 120}}
        ctx1 = run_scenario(config_from_dict(raw | {"output_dir": str(tmp_path / "a")}))
        ctx2 = run_scenario(config_from_dict(raw | {"output_dir": str(tmp_path / "b")}))
        assert all(ctx1.checks.values())
        a, b = _csv_bytes(tmp_path / "a"), _csv_bytes(tmp_path / "b")
        assert a.keys() == b.keys() and len(a) > 0
        for name in a:
            assert a[name] == b[name], f"{name} differs between reruns"

    def test_arnold_parallel_matches_serial(self, tmp_path):
        raw = {"scenario": "arnold", "seed": 9, "regime": "quantum",
               "cutoffs": [10, 10], "v_ratios": [0.0, 1.0],
               "detunings_hz": [0.0, 150.0], "noise": {"ensemble_size": 3}}
        run_scenario(config_from_dict(
            raw | {"output_dir": str(tmp_path / "serial"), "workers": 1}))
        run_scenario(config_from_dict(
            raw | {"output_dir": str(tmp_path / "par"), "workers": 2}))
        a, b = _csv_bytes(tmp_path / "serial"), _csv_bytes(tmp_path / "par")
        for name in a:
            assert a[name] == b[name], f"{name} differs under parallelism"

    def test_arnold_trends_tiny(self, tmp_path):
        cfg = config_from_dict({
            "scenario": "arnold", "seed": 4, "regime": "quantum",
            "cutoffs": [12, 12], "v_ratios": [0.0, 0.25, 1.0],
            "detunings_hz": [0.0, 150.0], "noise": {"ensemble_size": 3},
            "output_dir": str(tmp_path / "arn")})
        ctx = run_scenario(cfg)
        assert ctx.checks["trend.coupling_enhances_sync"]
        assert ctx.checks["trend.detuning_suppresses_sync"]
        assert ctx.checks["sweep.cutoff_adequate"]

    def test_sense_tiny(self, tmp_path):
        cfg = config_from_dict({
            "scenario": "sense", "seed": 2, "regime": "quantum",
            "cutoffs": [12, 12], "drive_amp_hz": 50.0,
            "detunings_hz": [-150.0, 0.0, 150.0],
            "noise": {"ensemble_size": 2},
            "output_dir": str(tmp_path / "sense")})
        ctx = run_scenario(cfg)
        assert ctx.checks["sense.peak_at_zero"]
        assert ctx.checks["sense.drive_off_unpolarized"]
        assert ctx.checks["sense.cutoff_adequate"]
        rows = (tmp_path / "sense" / "sense_scan.csv").read_text().splitlines()
        assert len(rows) == 3 + 2  # note + header + 3 detunings

    def test_meanfield_scenario(self, tmp_path):
        cfg = config_from_dict({"scenario": "meanfield", "seed": 1,
                                "output_dir": str(tmp_path / "mf")})
        ctx = run_scenario(cfg)
        assert ctx.checks["stability.closed_forms"]
        assert (tmp_path / "mf" / "lissajous_phi0.csv").exists()


class TestSweepFaultTolerance:
    def test_point_failures_recorded_not_fatal(self, tmp_path, monkeypatch):
        import vdpsim.harness as hz
        from vdpsim.errors import ConvergenceError
        from vdpsim.harness import RunContext, arnold_sweep

        real = hz.steady_state_direct
        calls = {"n": 0}

        def flaky(gen, *args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise ConvergenceError("injected failure")
            return real(gen, *args, **kwargs)

        monkeypatch.setattr(hz, "steady_state_direct", flaky)
        cfg = config_from_dict({
            "scenario": "arnold", "seed": 3, "regime": "quantum",
            "cutoffs": [8, 8], "v_ratios": [0.0, 1.0], "detunings_hz": [0.0],
            "noise": {"ensemble_size": 2},
            "output_dir": str(tmp_path / "o")})
        ctx = RunContext(cfg, cfg.output_dir)
        result = arnold_sweep(cfg, ctx=ctx)
        assert np.isnan(result.mean[0])
        assert not np.isnan(result.mean[1])
        assert ctx.checks["sweep.no_point_failures"] is False
        assert ctx.info["failed_points"]


class TestContour:
    def test_linear_field_contour(self):
        xs = np.linspace(0, 1, 11)
        ys = np.linspace(0, 2, 21)
        z = xs[:, None] + 0 * ys[None, :]  # level sets are vertical lines
        lines = contour_polylines(xs, ys, z, 0.55)
        assert lines
        pts = np.vstack(lines)
        assert np.abs(pts[:, 0] - 0.55).max() < 1e-12

    def test_circle_contour_closes(self):
        xs = np.linspace(-2, 2, 41)
        ys = np.linspace(-2, 2, 41)
        z = xs[:, None] ** 2 + ys[None, :] ** 2
        lines = contour_polylines(xs, ys, z, 1.0)
        pts = np.vstack(lines)
        radii = np.hypot(pts[:, 0], pts[:, 1])
        assert np.abs(radii - 1.0).max() < 0.05


class TestCli:
    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert cli.main(["sync", "--config", str(path)]) == 2

    def test_scenario_mismatch(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "meanfield", "seed": 1}))
        assert cli.main(["sync", "--config", str(path)]) == 2

    def test_meanfield_run_exits_zero(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "meanfield", "seed": 1,
                                    "output_dir": str(tmp_path / "out")}))
        assert cli.main(["meanfield", "--config", str(path)]) == 0
        captured = capsys.readouterr()
        assert "[pass]" in captured.out
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_numerical_failure_exit_code_and_manifest(self, tmp_path):
        # sense without a drive raises a numerical-failure error; the
        # manifest still lands, naming the failing stage
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "scenario": "sense", "seed": 1, "regime": "quantum",
            "cutoffs": [8, 8], "drive_amp_hz": 0.0,
            "detunings_hz": [0.0], "noise": {"ensemble_size": 1},
            "output_dir": str(tmp_path / "out")}))
        assert cli.main(["sense", "--config", str(path)]) == 3
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["failed_stage"] == "sense scan"
        assert "drive" in manifest["error"]

    def test_seed_override_changes_hash(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"scenario": "meanfield", "seed": 1,
                                    "output_dir": str(tmp_path / "o1")}))
        cli.main(["meanfield", "--config", str(path)])
        cli.main(["meanfield", "--config", str(path), "--seed", "2",
                  "--out", str(tmp_path / "o2")])
        m1 = json.loads((tmp_path / "o1" / "manifest.json").read_text())
        m2 = json.loads((tmp_path / "o2" / "manifest.json").read_text())
        assert m1["config_hash"] != m2["config_hash"]


def test_write_csv_deterministic_formatting(tmp_path):
    rows = [{"a": 1.0 / 3.0, "b": 7, "c": True, "d": None, "e": "x"}]
    path = tmp_path / "t.csv"
    write_csv(path, rows, "note")
    text = path.read_text()
    assert text == "# note\na,b,c,d,e\n0.333333333333,7,1,,x\n"
