import csv
import json
import math

import numpy as np
import pytest

from dam_sim.beamforming import mrt_beamformer, zf_beamformer
from dam_sim.cli import main
from dam_sim.config import ALL_SCHEMES, ConfigError, config_from_dict, load_config
from dam_sim.experiment import (
    CSV_COLUMNS,
    _aggregate,
    emit_outputs,
    run_sweep,
    run_trial,
    trial_channel,
)


def small(**kw):
    base = {"sweep": {"variable": "M", "values": [8, 16, 32]}, "trials": 4}
    base.update(kw)
    return config_from_dict(base)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults_mirror_setup(self):
        cfg = load_config(None)
        assert cfg.sweep.values == [32, 64, 128, 256] and cfg.sweep.variable == "M"
        assert cfg.trials == 500
        assert (cfg.link_budget.power_dbm, cfg.link_budget.noise_dbm) == (30.0, -85.0)
        assert cfg.frame.build().n_c == 128_000
        assert cfg.frame.carrier_hz == 28e9
        assert (cfg.ofdm.num_subcarriers, cfg.ofdm.cp_length) == (512, 40)
        p = cfg.channel_params(64)
        assert (p.num_antennas, p.num_paths, p.max_delay, p.mu_max) == (64, 5, 40, 3)
        assert p.aod_interval == (-60.0, 60.0)
        assert cfg.schemes == list(ALL_SCHEMES)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "c.yaml"
        f.write_text("")
        assert load_config(f).config_hash() == load_config(None).config_hash()

    def test_yaml_overrides(self, tmp_path):
        f = tmp_path / "c.yaml"
        f.write_text("sweep: {variable: L, values: [1, 5]}\nchannel: {num_antennas: 64}\ntrials: 3\n")
        cfg = load_config(f)
        assert cfg.channel_params(5).num_antennas == 64
        assert cfg.channel_params(1).num_paths == 1

    @pytest.mark.parametrize("data,field", [
        ({"trials": 0}, "trials"),
        ({"sweep": {"variable": "K"}}, "sweep.variable"),
        ({"schemes": ["DAM-XX"]}, "schemes"),
        ({"channel": {"mu_max": 0}}, "channel.mu_max"),
        ({"ofdm": {"cp_length": 10}}, "ofdm.cp_length"),
        ({"frame": {"bandwidth_hz": "fast"}}, "frame.bandwidth_hz"),
        ({"trials": 2.5}, "trials"),
        ({"bogus": 1}, "bogus"),
        ({"channel": {"gain_model": {"colour": 1}}}, "channel.gain_model.colour"),
        ({"sweep": {"variable": "L", "values": [50]}}, "channel.num_paths"),
    ])
    def test_problems_name_the_field(self, data, field):
        with pytest.raises(ConfigError) as exc:
            config_from_dict(data)
        assert any(p.startswith(field) for p in exc.value.problems), exc.value.problems

    def test_hash_tracks_content(self):
        assert small().config_hash() == small().config_hash()
        assert small().config_hash() != small(trials=5).config_hash()


class TestSweep:
    def test_row_accounting(self):
        res = run_sweep(small())
        assert len(res.rows) == 3 * 4
        assert {r.scheme for r in res.rows} == set(ALL_SCHEMES)
        assert all(r.trials == 4 and math.isfinite(r.stderr_se) for r in res.rows)

    def test_common_random_numbers_and_ordering(self):
        cfg = small(trials=30)
        res = run_sweep(cfg)
        for v in cfg.sweep.values:
            zf, mrt, mmse = (res.samples[(v, s)] for s in ("DAM-ZF", "DAM-MRT", "DAM-MMSE"))
            assert np.all(mmse >= zf - 1e-12) and np.all(mmse >= mrt - 1e-12)
            assert res.mean(v, "DAM-MMSE") >= max(res.mean(v, "DAM-ZF"), res.mean(v, "DAM-MRT"))

    def test_infeasible_zf_counted(self):
        cfg = config_from_dict({"sweep": {"variable": "M", "values": [2, 8]}, "trials": 3})
        res = run_sweep(cfg)
        row = next(r for r in res.rows if r.value == 2 and r.scheme == "DAM-ZF")
        assert row.infeasible_zf_count == 3 and row.trials == 0 and math.isnan(row.mean_se)
        assert next(r for r in res.rows if r.value == 8 and r.scheme == "DAM-ZF").infeasible_zf_count == 0

    def test_trial_matches_direct_computation(self):
        cfg = small()
        se = run_trial(cfg, 1, 16, 2)
        ch = trial_channel(cfg, 1, 16, 2)
        b = cfg.link_budget.build()
        gamma = zf_beamformer(ch, b.power, b.sigma2).analytic_sinr
        assert se["DAM-ZF"] == pytest.approx((1 - 0.000625) * math.log2(1 + gamma), rel=1e-14)

    def test_workers_do_not_change_results(self, tmp_path):
        a = run_sweep(small(workers=1))
        b = run_sweep(small(workers=2))
        assert [r.as_csv() for r in a.rows] == [r.as_csv() for r in b.rows]

    def test_aggregate_is_order_independent(self):
        rng = np.random.default_rng(0)
        v = rng.exponential(size=1001) * 1e3
        assert _aggregate(v) == _aggregate(v[rng.permutation(v.size)])

    def test_large_antenna_regime(self):
        # M >= 20 L: per-trial relative ZF/MRT gap has median below 5%
        cfg = config_from_dict({"sweep": {"variable": "M", "values": [100]}, "trials": 60})
        b = cfg.link_budget.build()
        gaps = []
        for t in range(cfg.trials):
            ch = trial_channel(cfg, 0, 100, t)
            z = zf_beamformer(ch, b.power, b.sigma2).analytic_sinr
            gaps.append(abs(z - mrt_beamformer(ch, b.power, b.sigma2).analytic_sinr) / z)
        assert np.median(gaps) < 0.05


class TestOutputs:
    def test_deterministic_csv(self, tmp_path):
        cfg = small(trials=1)
        emit_outputs(run_sweep(cfg), tmp_path / "a", plots=False)
        emit_outputs(run_sweep(cfg), tmp_path / "b", plots=False)
        assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()

    def test_schema_and_overheads(self, tmp_path):
        paths = emit_outputs(run_sweep(small()), tmp_path, plots=True)
        rows = read_rows(paths["csv"])
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + 12
        for r in rows[1:]:
            ov = float(r[6])
            if r[2] == "OFDM-WF":
                assert ov == 231 * 40 / 128_000 and round(ov, 3) == 0.072
            else:
                assert ov == 0.000625
        man = json.loads(paths["manifest"].read_text())
        assert man["base_seed"] == 2021 and man["config"]["trials"] == 4
        assert paths["se_plot"].read_text().lstrip().startswith("<?xml")

    def test_plots_are_reproducible(self, tmp_path):
        res = run_sweep(small(trials=1))
        emit_outputs(res, tmp_path / "a")
        emit_outputs(res, tmp_path / "b")
        assert (tmp_path / "a/se_vs_M.svg").read_bytes() == (tmp_path / "b/se_vs_M.svg").read_bytes()

    def test_empty_scheme_list(self, tmp_path):
        paths = emit_outputs(run_sweep(small(schemes=[])), tmp_path)
        assert read_rows(paths["csv"]) == [list(CSV_COLUMNS)]

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match=str(blocker)):
            emit_outputs(run_sweep(small(trials=1)), blocker / "out")

    def test_link_level_outputs(self, tmp_path):
        cfg = config_from_dict({
            "sweep": {"variable": "M", "values": [16]}, "trials": 1,
            "link_level": {"enabled": True, "n_symbols": 120000, "papr_samples": 100000},
        })
        res = run_sweep(cfg)
        assert {e["scheme"] for e in res.link_level} == {"DAM-ZF", "DAM-MRT", "DAM-MMSE"}
        for e in res.link_level:
            assert abs(e["measured_sinr_db"] - e["analytic_sinr_db"]) < 0.3
        paths = emit_outputs(res, tmp_path)
        assert {"link_level", "papr", "papr_plot"} <= set(paths)


class TestCli:
    def test_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("sweep: {variable: M, values: [8]}\n")
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"),
                     "--trials", "2", "--seed", "7", "--no-plots"]) == 0
        man = json.loads((tmp_path / "o/manifest.json").read_text())
        assert man["base_seed"] == 7 and man["config"]["trials"] == 2
        assert "DAM-MMSE" in capsys.readouterr().out

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("trials: -1\n")
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "trials" in capsys.readouterr().err

    def test_verify(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert out.count("[PASS]") >= 6 and "[FAIL]" not in out

    def test_papr(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("sweep: {variable: M, values: [16]}\nlink_level: {papr_samples: 100000}\n")
        assert main(["papr", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert "PAPR at CCDF 1e-3" in capsys.readouterr().out
        assert (tmp_path / "papr_ccdf.csv").exists()
