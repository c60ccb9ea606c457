"""Tests for loading run defaults from YAML and pyproject.toml."""

import logging

import pytest

from molunfold.cli import main
from molunfold.config import ConfigError, UnfoldConfig, load_config


def test_defaults_when_nothing_is_found(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert load_config() == UnfoldConfig()


def test_missing_explicit_file_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="config file not found"):
        load_config(tmp_path / "absent.yaml")


def test_unsupported_suffix(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("d = 8\n")
    with pytest.raises(ConfigError, match="unsupported config file run.ini"):
        load_config(path)


def test_yaml_file(tmp_path):
    pytest.importorskip("yaml")
    path = tmp_path / "run.yaml"
    path.write_text("encoding: onehot\nd: 8\nsolver: sa\nwindows: [5, 20]\ncooling-factor: 0.9\n")
    cfg = load_config(path)
    assert cfg.encoding == "onehot"
    assert cfg.d == 8
    assert cfg.solver == "sa"
    assert cfg.windows == (5, 20)
    assert cfg.cooling_factor == 0.9
    assert cfg.steps == 100


def test_windows_as_comma_separated_text(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('[tool.molunfold]\nwindows = "10,40"\n')
    assert load_config(path).windows == (10, 40)


def test_empty_yaml_gives_defaults(tmp_path):
    pytest.importorskip("yaml")
    path = tmp_path / "run.yaml"
    path.write_text("")
    assert load_config(path) == UnfoldConfig()


class TestMalformedFiles:
    def test_yaml_syntax_error(self, tmp_path):
        pytest.importorskip("yaml")
        path = tmp_path / "run.yaml"
        path.write_text("d: [1,\n")
        with pytest.raises(ConfigError, match="run.yaml"):
            load_config(path)

    def test_yaml_must_be_a_mapping(self, tmp_path):
        pytest.importorskip("yaml")
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="expected a table of settings, got list"):
            load_config(path)

    def test_toml_syntax_error(self, tmp_path):
        path = tmp_path / "pyproject.toml"
        path.write_text("[tool.molunfold\n")
        with pytest.raises(ConfigError, match="pyproject.toml"):
            load_config(path)

    def test_discovery_skips_a_broken_file(self, tmp_path, monkeypatch, caplog):
        pytest.importorskip("yaml")
        (tmp_path / "molunfold.yaml").write_text("d: [1,\n")
        (tmp_path / "pyproject.toml").write_text("[tool.molunfold]\nd = 32\n")
        monkeypatch.chdir(tmp_path)
        with caplog.at_level(logging.WARNING, logger="molunfold.config"):
            cfg = load_config()
        assert cfg.d == 32
        assert "skipping" in caplog.text


def test_pyproject_section(tmp_path):
    path = tmp_path / "pyproject.toml"
    path.write_text('[project]\nname = "x"\n\n[tool.molunfold]\nseed = 42\nsamples = 5\n')
    cfg = load_config(path)
    assert cfg.seed == 42
    assert cfg.samples == 5


def test_explicit_pyproject_without_section_gives_defaults(tmp_path):
    path = tmp_path / "pyproject.toml"
    path.write_text('[project]\nname = "x"\n')
    assert load_config(path) == UnfoldConfig()


def test_discovery_prefers_yaml_in_cwd(tmp_path, monkeypatch):
    pytest.importorskip("yaml")
    (tmp_path / "molunfold.yaml").write_text("d: 4\n")
    (tmp_path / "pyproject.toml").write_text("[tool.molunfold]\nd = 32\n")
    monkeypatch.chdir(tmp_path)
    assert load_config().d == 4


def test_pyproject_without_section_is_skipped(tmp_path, monkeypatch):
    (tmp_path / "pyproject.toml").write_text('[project]\nname = "x"\n')
    monkeypatch.chdir(tmp_path)
    assert load_config() == UnfoldConfig()


def test_unknown_keys_are_ignored_with_a_warning(tmp_path, caplog):
    path = tmp_path / "pyproject.toml"
    path.write_text("[tool.molunfold]\nstepz = 3\nsteps = 7\n")
    with caplog.at_level(logging.WARNING, logger="molunfold.config"):
        cfg = load_config(path)
    assert cfg.steps == 7
    assert "stepz" in caplog.text


def test_updated_skips_none():
    cfg = UnfoldConfig(d=8).updated(d=None, steps=3, seed=None)
    assert cfg.d == 8
    assert cfg.steps == 3
    assert cfg.seed is None


def test_cli_reports_a_missing_config_file(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "butane.xyz").write_text("x")
    with pytest.raises(SystemExit) as exc_info:
        main(["hubo", "butane.xyz", "--config", str(tmp_path / "absent.toml")])
    assert exc_info.value.code == 1
    assert "error: config file not found" in capsys.readouterr().err
