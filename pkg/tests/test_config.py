"""Config parsing, strict key validation, and suite construction."""

import pytest

from fedbench.config import (
    BackendChoice,
    build_suite,
    config_hash,
    load_config,
)
from fedbench.errors import ConfigError


def test_defaults_without_file():
    config = load_config(None)
    assert config.metrics.sigma == 0.5
    assert config.metrics.bg_tau == 25.0
    assert len(config.classifiers) == 5
    assert config.editor.name == "patch"


def test_yaml_file_round_trip(tmp_path):
    path = tmp_path / "fed.yaml"
    path.write_text(
        """
backends:
  editor: identity
  judge:
    name: scripted
    params: {response: "SCORE: 9"}
  classifiers:
    - {name: scripted, params: {answer: negative}}
    - {name: scripted, params: {answer: negative}}
    - {name: scripted, params: {answer: neutral}}
metrics:
  sigma: 0.4
  bg_tau: 30
pipeline:
  granularity: fine
  rank_weights: [2, 1]
seed: 17
"""
    )
    config = load_config(path)
    assert config.editor.name == "identity"
    assert config.metrics.sigma == 0.4
    assert config.metrics.bg_tau == 30.0
    assert config.pipeline.voting.granularity == "fine"
    assert config.pipeline.rank_weights == (2.0, 1.0)
    assert config.seed == 17
    assert len(config.classifiers) == 3


def test_unknown_top_level_key_rejected(tmp_path):
    path = tmp_path / "fed.yaml"
    path.write_text("metricz: {}\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_unknown_nested_key_rejected(tmp_path):
    path = tmp_path / "fed.yaml"
    path.write_text("metrics: {sigmaa: 1}\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_invalid_sigma_rejected(tmp_path):
    path = tmp_path / "fed.yaml"
    path.write_text("metrics: {sigma: -1}\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_cache_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("FED_CACHE_DIR", str(tmp_path / "elsewhere"))
    config = load_config(None)
    assert config.cache_dir == str(tmp_path / "elsewhere")


def test_overrides_win(tmp_path):
    path = tmp_path / "fed.yaml"
    path.write_text("seed: 3\n")
    config = load_config(path, {"seed": 9})
    assert config.seed == 9


def test_config_hash_changes_with_content(tmp_path):
    base = load_config(None)
    other = load_config(None, {"seed": 123})
    assert config_hash(base) != config_hash(other)
    assert config_hash(base) == config_hash(load_config(None))


def test_build_suite_from_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv("FED_CACHE_DIR", str(tmp_path / "cache"))
    suite = build_suite(load_config(None))
    assert suite.editor.backend_id.kind == "editor"
    assert len(suite.classifiers) == 5


def test_unknown_backend_name(tmp_path, monkeypatch):
    monkeypatch.setenv("FED_CACHE_DIR", str(tmp_path / "cache"))
    config = load_config(None)
    bad = type(config)(**{**config.__dict__, "editor": BackendChoice("gpt-banana")})
    with pytest.raises(ConfigError):
        build_suite(bad)
