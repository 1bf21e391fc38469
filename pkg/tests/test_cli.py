"""Runner checks: config validation, artifacts, determinism, exit codes."""

import os

import numpy as np
import pytest

from completeness_lab import cli
from completeness_lab.errors import ConfigError


def read_csvs(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        if name.endswith(".csv"):
            out[name] = (directory / name).read_bytes()
    return out


class TestConfig:
    def test_unknown_key_names_path(self):
        with pytest.raises(ConfigError, match="potential.potental"):
            cli.merge_config({"potential": {"potental": "square_well"}})

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="outptu"):
            cli.merge_config({"outptu": {}})

    def test_unknown_experiment_kind_rejected(self):
        with pytest.raises(ConfigError, match="experiment.kind"):
            cli.merge_config({"experiment": {"kind": "kernel-bxo"}})

    def test_type_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="R_length"):
            cli.merge_config({"experiment": {"R_length": "twenty"}})

    def test_defaults_fill_in(self):
        cfg = cli.merge_config({})
        assert cfg["experiment"]["kind"] == "kernel-box"
        assert cfg["experiment"]["M_terms"] == 1500
        assert cfg["run"]["workers"] == 0

    def test_effective_config_lists_every_knob(self):
        cfg = cli.merge_config({})
        text = cli.effective_config_text(cfg)
        for sec, keys in cli.DEFAULTS.items():
            assert f"[{sec}]" in text
            for key in keys:
                assert key in text

    def test_config_file_round_trip(self, tmp_path):
        cfg = cli.merge_config(
            {"potential": {"family": "free", "R0_length": 1.0},
             "experiment": {"kind": "spectrum", "R_length": 3.0,
                            "K_momentum": 10.0}}
        )
        p = tmp_path / "cfg.toml"
        p.write_text(cli.effective_config_text(cfg))
        assert cli.parse_config(p) == cfg


class TestBenchmarkCatalog:
    def test_required_names_shipped(self):
        for name in ("bench-free", "bench-sw1", "bench-coul-att",
                     "bench-coul-rep", "bench-nonlocal"):
            assert name in cli.BENCHMARKS

    def test_suite_size(self):
        assert len(cli.BENCHMARKS) >= 8

    def test_every_entry_tagged(self):
        listing = cli.list_benchmarks()
        for name, (desc, topic, _) in cli.BENCHMARKS.items():
            assert name in listing
            assert topic
            assert f"[{topic}]" in listing

    def test_unknown_benchmark_rejected(self):
        with pytest.raises(ConfigError, match="no-such-bench"):
            cli.benchmark_config("no-such-bench")


class TestRun:
    def test_free_spectrum_benchmark_passes(self, tmp_path):
        cfg = cli.benchmark_config("bench-free")
        report = cli.run(cfg, output_dir=tmp_path)
        assert report.overall_pass
        names = [c.name for c in report.checks]
        assert "free_momentum_defect" in names
        assert (tmp_path / "momenta.csv").exists()
        assert (tmp_path / "checks.csv").exists()
        assert (tmp_path / "effective_config.toml").exists()

    def test_csv_schema_header(self, tmp_path):
        cfg = cli.benchmark_config("bench-free")
        cli.run(cfg, output_dir=tmp_path)
        for name, data in read_csvs(tmp_path).items():
            assert data.decode().splitlines()[0] == "schema_version,1", name

    def test_report_numbers_appear_in_checks_csv(self, tmp_path):
        cfg = cli.benchmark_config("bench-free")
        report = cli.run(cfg, output_dir=tmp_path)
        text = (tmp_path / "checks.csv").read_text()
        for c in report.checks:
            assert cli.FMT % c.measured in text
            assert cli.FMT % c.threshold in text

    def test_exit_codes(self, tmp_path):
        ok = cli.main(
            ["bench", "bench-free", "--output-dir", str(tmp_path / "a")]
        )
        assert ok == 0
        bad = cli.main(["bench", "no-such-bench"])
        assert bad == 2

    def test_main_list(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out
        assert "bench-sw1" in out

    def test_specfun_probe_subcommand(self, capsys):
        assert cli.main(["specfun-probe", "riccati-j", "0", "1.5"]) == 0
        j, jp = capsys.readouterr().out.split()
        assert float(j) == pytest.approx(np.sin(1.5))
        assert float(jp) == pytest.approx(np.cos(1.5))


class TestDeterminism:
    def test_repeat_run_byte_identical(self, tmp_path):
        cfg = cli.benchmark_config("bench-specfun")
        cli.run(cfg, output_dir=tmp_path / "one")
        cli.run(cfg, output_dir=tmp_path / "two")
        a = read_csvs(tmp_path / "one")
        b = read_csvs(tmp_path / "two")
        assert a.keys() == b.keys() and a
        for name in a:
            assert a[name] == b[name], name

    def test_worker_count_invariant(self, tmp_path, monkeypatch):
        # the delta-kernel run parallelizes over quadrature panels
        cfg = cli.benchmark_config("bench-coul-rep")
        outputs = {}
        for workers in (1, 4):
            monkeypatch.setenv("COMPLETENESS_LAB_WORKERS", str(workers))
            cli.run(cfg, output_dir=tmp_path / f"w{workers}")
            outputs[workers] = read_csvs(tmp_path / f"w{workers}")
        assert outputs[1].keys() == outputs[4].keys() and outputs[1]
        for name in outputs[1]:
            assert outputs[1][name] == outputs[4][name], name
