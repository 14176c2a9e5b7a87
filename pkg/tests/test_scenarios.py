import json

import numpy as np
import pytest

from delaydisp.errors import ConfigurationError
from delaydisp.model import DampingProfile, HistorySpec, ModelParams
from delaydisp.scenarios import (
    PRESET_NAMES,
    RunConfig,
    TAU_SWEEP,
    dump_config,
    emit,
    load_config,
    preset,
    preset_members,
    read_norms_csv,
    run,
    run_sweep,
)


def _short(cfg: RunConfig, T_end=0.2, n=39) -> RunConfig:
    return cfg.replace(n=n, T_end=T_end, snapshot_every=50)


class TestPresets:
    def test_fig1b(self):
        cfg = preset("fig1b")
        assert cfg.profile == DampingProfile.constant(-1.0)
        assert cfg.params.tau == 0.0
        assert (cfg.params.nu, cfg.params.mu, cfg.n, cfg.dt, cfg.T_end) == (0.01, 0.001, 199, 1e-3, 10.0)

    def test_fig7d(self):
        cfg = preset("fig7d")
        assert cfg.profile.combined_coefficients() == (1.0, 2.0, 1.0, 2.0)
        assert cfg.params.tau == 1.0

    def test_fig9_is_tau_sweep(self):
        members = preset_members("fig9")
        assert [c.params.tau for _, c in members] == list(TAU_SWEEP)
        assert all(c.profile == DampingProfile.constant(1.0) for _, c in members)

    def test_norm_figure_group(self):
        assert [label for label, _ in preset_members("fig6")] == ["fig5a", "fig5b", "fig5c", "fig5d"]

    def test_every_name_resolves(self):
        for name in PRESET_NAMES:
            assert preset_members(name)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            preset("fig13")


class TestRunConfig:
    def test_dt_above_tau(self):
        with pytest.raises(ConfigurationError):
            preset("fig7a").replace(params=ModelParams(0.01, 0.001, 5e-4))

    def test_small_grid(self):
        with pytest.raises(ConfigurationError):
            preset("fig1a").replace(n=3)

    def test_dict_round_trip(self):
        cfg = preset("fig7d").replace(history=HistorySpec("separable", "bump", (), "exp", (0.5,), 0.3))
        assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_ini_round_trip(self, tmp_path):
        cfg = preset("fig3c")
        path = tmp_path / "c.ini"
        path.write_text(dump_config(cfg))
        assert load_config(path) == cfg

    def test_ini_errors(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[params]\nnu = 0.01\n")
        with pytest.raises(ConfigurationError):
            load_config(path)
        path.write_text("not an ini file")
        with pytest.raises(ConfigurationError):
            load_config(path)


class TestRun:
    def test_diagnostics_attached(self):
        res = run(_short(preset("fig3a"), T_end=3.0))
        assert res.status.state == "healthy"
        assert res.metadata["wirtinger_ok"]
        assert "dissipation_violation_fraction" in res.metadata
        assert res.decay is not None and res.decay.slope < 0

    def test_negative_damping_not_applicable(self):
        res = run(_short(preset("fig1b")))
        assert res.metadata["theorem_bound_violations"] is None

    def test_sweep_count_and_order(self):
        base = _short(preset("fig9"), T_end=0.05, n=19)
        results = run_sweep(base, "tau", TAU_SWEEP)
        assert [r.config.params.tau for r in results] == list(TAU_SWEEP)

    def test_sweep_empty(self):
        assert run_sweep(preset("fig9"), "tau", []) == []

    def test_sweep_rejects_before_running(self):
        with pytest.raises(ConfigurationError):
            run_sweep(preset("fig9"), "tau", [0.5, 5e-4])

    def test_sweep_bad_axis(self):
        with pytest.raises(ConfigurationError):
            run_sweep(preset("fig9"), "ell", [1.0])

    def test_parallel_sweep_matches_serial(self):
        base = _short(preset("fig9"), T_end=0.02, n=19)
        serial = run_sweep(base, "nu", [0.01, 0.02])
        parallel = run_sweep(base, "nu", [0.01, 0.02], max_workers=2)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.norm_series.l2_u, b.norm_series.l2_u)


class TestEmit:
    def test_zero_length_run(self, tmp_path):
        res = run(preset("fig1a").replace(T_end=0.0, n=19))
        emit(res, tmp_path)
        lines = (tmp_path / "norms.csv").read_text().splitlines()
        assert lines[0] == "t,l2_u,h1_u,h2_u,weighted"
        assert len(lines) == 2 and lines[1].startswith("0,")

    def test_files_and_format(self, tmp_path):
        res = run(_short(preset("fig1a"), T_end=0.1))
        emit(res, tmp_path)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["meta.json", "norms.csv", "snapshots.csv"]
        norms = (tmp_path / "norms.csv").read_text().splitlines()
        assert len(norms) == 1 + 101
        assert "e" not in "".join(norms[1:]).lower()
        snaps = (tmp_path / "snapshots.csv").read_text().splitlines()
        assert snaps[0] == "t,x,u"
        assert snaps[1] == "0,0,0"
        series = read_norms_csv(tmp_path / "norms.csv")
        np.testing.assert_allclose(series.l2_u, res.norm_series.l2_u, rtol=1e-11)

    def test_meta_round_trip(self, tmp_path):
        cfg = _short(preset("fig7c"), T_end=0.05)
        emit(run(cfg), tmp_path)
        meta = json.loads((tmp_path / "meta.json").read_text())
        assert RunConfig.from_dict(meta["config"]) == cfg
        assert meta["status"]["state"] == "healthy"
        assert meta["stability"]["M"] == "inf"
        assert meta["artifact_version"]

    def test_repeat_is_byte_identical(self, tmp_path):
        cfg = _short(preset("fig5b"), T_end=0.3)
        emit(run(cfg), tmp_path / "a")
        emit(run(cfg), tmp_path / "b")
        for name in ("norms.csv", "snapshots.csv", "meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit(run(_short(preset("fig1a"), T_end=0.01)), blocker / "out")


def test_theorem_bound_holds_for_clamped_history():
    # the bump x^2 (1-x)^2 meets the clamped conditions, so no boundary layer
    # forms at t = 0+ and the bound holds at half the admissible delay
    from delaydisp.analysis import stability_report, theorem_bound_check
    from delaydisp.discretization import SpatialGrid, build_operators

    base = preset("fig3a").replace(n=99, T_end=5.0)
    hist = HistorySpec("constant", "bump", (), amplitude=1e-2)
    ops = build_operators(SpatialGrid(base.n, 1.0))
    rep = stability_report(base.params.replace(tau=base.dt), base.profile, hist, ops, ds=base.dt)
    assert rep.sigma > 0 and rep.tau_hat > base.dt
    tau = round(rep.tau_hat / 2 / base.dt) * base.dt
    params = base.params.replace(tau=tau)
    rep_run = stability_report(params, base.profile, hist, ops, ds=base.dt)
    res = run(base.replace(params=params, history=hist))
    assert rep_run.applicable
    assert theorem_bound_check(res.norm_series.t, res.norm_series.h2_u, rep_run) == 0
