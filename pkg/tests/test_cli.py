"""Tests for the graft-toy command line."""

import json

import numpy as np
import pytest

from src import cli
from src.config import Settings, resolve_seed
from src.models.report import CheckResult, SuiteReport
from tests.conftest import TINY_CONFIG

QUIET = ["--log-level", "ERROR"]


def _error_line(capsys):
    return capsys.readouterr().err.strip().splitlines()[-1]


class TestExitCodes:
    """Tests for verb dispatch and the exit-code contract."""

    def test_cost_text(self, tiny_config_file, capsys):
        """cost prints the per-block table and the complexity verdict."""
        code = cli.run([*QUIET, "cost", str(tiny_config_file), "--resolutions", "4,8"])
        out = capsys.readouterr().out

        assert code == cli.EXIT_OK
        assert out.startswith("block")
        assert "limiting ratio" in out

    def test_cost_json(self, tiny_config_file, capsys):
        """cost --format json emits parseable JSON documents."""
        argv = ["cost", str(tiny_config_file), "--format", "json", "--resolutions", ""]
        code = cli.run([*QUIET, *argv])

        assert code == cli.EXIT_OK
        assert "records" in json.loads(capsys.readouterr().out)

    def test_check_passes(self, tiny_config_file, capsys):
        """A passing suite exits 0."""
        code = cli.run([*QUIET, "check", "cost", str(tiny_config_file)])

        assert code == cli.EXIT_OK
        assert capsys.readouterr().out.startswith("suite cost: PASS")

    def test_check_failure_exits_one(self, tiny_config_file, monkeypatch, capsys):
        """A failed check exits 1."""
        failing = SuiteReport(suite="cost", checks=[CheckResult(name="x", passed=False)])
        monkeypatch.setattr(cli, "run_suite", lambda name, config: failing)

        assert cli.run([*QUIET, "check", "cost", str(tiny_config_file)]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_unknown_suite(self, tiny_config_file, capsys):
        """Test that an unknown suite exits 2 with its reason code."""
        code = cli.run([*QUIET, "check", "speed", str(tiny_config_file)])

        assert code == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("unknown_suite: ")

    def test_missing_config(self, tmp_path, capsys):
        """Test that an unreadable config exits 2."""
        code = cli.run([*QUIET, "cost", str(tmp_path / "absent.conf")])

        assert code == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("config_parse_error: cannot read")

    def test_bad_config_line(self, tmp_path, capsys):
        """Test that a malformed line reports its number."""
        path = tmp_path / "bad.conf"
        path.write_text("seed = 1\nmodel.depths 2\n", encoding="utf-8")

        assert cli.run([*QUIET, "cost", str(path)]) == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("config_parse_error: line 2:")

    def test_usage_error(self, capsys):
        """Test that a missing verb is a usage error."""
        assert cli.run([]) == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("usage_error: ")

    def test_bad_resolutions(self, tiny_config_file, capsys):
        """Test that a non-numeric resolution list is a usage error."""
        code = cli.run(["cost", str(tiny_config_file), "--resolutions", "4,big"])

        assert code == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("usage_error: ")

    def test_bad_env_seed(self, tiny_config_file, monkeypatch, capsys):
        """Test that an invalid GRAFT_SEED is a configuration error."""
        monkeypatch.setenv("GRAFT_SEED", "-4")

        assert cli.run(["cost", str(tiny_config_file)]) == cli.EXIT_CONFIG_ERROR
        assert _error_line(capsys).startswith("config_invalid: ")

    def test_runtime_error(self, tiny_config_file, monkeypatch, capsys):
        """Test that an unexpected failure exits 3 on one stderr line."""

        def boom(name, config):
            raise RuntimeError("disk\nfull")

        monkeypatch.setattr(cli, "run_suite", boom)

        assert cli.run([*QUIET, "check", "cost", str(tiny_config_file)]) == 3
        assert _error_line(capsys) == "runtime_error: disk full"


class TestVerbs:
    """Tests for train and dataset."""

    def test_train(self, tiny_config_file, tmp_path, capsys):
        """train writes metrics and a checkpoint to --output."""
        output = tmp_path / "out"
        code = cli.run([*QUIET, "train", str(tiny_config_file), "--output", str(output)])

        assert code == cli.EXIT_OK
        assert (output / "metrics.csv").exists()
        assert (output / "model.ckpt").exists()
        assert capsys.readouterr().out.startswith("step=3 ")

    def test_train_paired(self, tiny_config_file, tmp_path, capsys):
        """--paired --seeds 2 trains both arms for consecutive seeds."""
        output = tmp_path / "paired"
        argv = ["train", str(tiny_config_file), "--paired", "--seeds", "2", "--seed", "5"]
        code = cli.run([*QUIET, *argv, "--output", str(output)])

        assert code == cli.EXIT_OK
        assert (output / "paired.csv").exists()
        assert (output / "seed_6" / "grafted" / "model.ckpt").exists()
        assert capsys.readouterr().out.startswith("seeds=2 ")

    def test_dataset(self, tiny_config_file, tmp_path, capsys):
        """dataset --emit writes both splits and the oracle accuracy."""
        target = tmp_path / "data"
        code = cli.run([*QUIET, "dataset", str(tiny_config_file), "--emit", str(target)])

        assert code == cli.EXIT_OK
        with np.load(target / "train.npz") as stored:
            assert stored["images"].shape == (16, 16, 16, 3)
        assert "oracle accuracy" in capsys.readouterr().out


class TestSeedPrecedence:
    """CLI flag, then GRAFT_SEED, then the config value."""

    def test_cli_wins(self):
        """An explicit flag beats everything."""
        assert resolve_seed(1, cli_seed=2, env=Settings(seed=3)) == 2

    def test_env_beats_config(self):
        """GRAFT_SEED beats the config file."""
        assert resolve_seed(1, env=Settings(seed=3)) == 3

    def test_config_fallback(self, monkeypatch):
        """Without overrides the config seed is used."""
        monkeypatch.delenv("GRAFT_SEED", raising=False)

        assert resolve_seed(1, env=Settings(seed=None)) == 1

    @pytest.mark.parametrize("flag,expected", [([], 7), (["--seed", "9"], 9)])
    def test_env_seed_reaches_run(self, tiny_config_file, tmp_path, monkeypatch, flag, expected):
        """The effective seed determines the emitted data."""
        config = str(tiny_config_file)
        monkeypatch.setenv("GRAFT_SEED", "7")
        cli.run([*QUIET, "dataset", config, "--emit", str(tmp_path / "a"), *flag])
        monkeypatch.delenv("GRAFT_SEED")
        explicit = ["--emit", str(tmp_path / "b"), "--seed", str(expected)]
        cli.run([*QUIET, "dataset", config, *explicit])

        with np.load(tmp_path / "a" / "train.npz") as a, np.load(tmp_path / "b" / "train.npz") as b:
            assert np.array_equal(a["images"], b["images"])

    def test_env_precision_override(self, tiny_config_file, monkeypatch):
        """GRAFT_PRECISION replaces the config's precision."""
        monkeypatch.setenv("GRAFT_PRECISION", "train32")
        config = cli._load(tiny_config_file, None, Settings())

        assert config.precision == "train32"


class TestOutputDir:
    """Tests for where runs write when the config is silent."""

    def test_env_output_dir_for_config_without_one(self, tmp_path, monkeypatch):
        """GRAFT_OUTPUT_DIR/<stem> is used when the config names no output_dir."""
        path = tmp_path / "plain.conf"
        path.write_text(TINY_CONFIG, encoding="utf-8")
        monkeypatch.setenv("GRAFT_OUTPUT_DIR", str(tmp_path / "out"))

        config = cli._load(path, None, Settings())

        assert config.output_dir == str(tmp_path / "out" / "plain")

    def test_config_output_dir_beats_env(self, tiny_config_file, tmp_path, monkeypatch):
        """An output_dir in the config file is kept."""
        monkeypatch.setenv("GRAFT_OUTPUT_DIR", str(tmp_path / "elsewhere"))

        config = cli._load(tiny_config_file, None, Settings())

        assert config.output_dir == str(tmp_path / "run")
