"""Run configuration parsing, validation and seed resolution."""

from __future__ import annotations

from pathlib import Path

import pytest

from belab.config import DEFAULT_SEED, SEED_ENV_VAR, SUITES
from belab.errors import ConfigError
from belab.runner.settings import config_from_dict, load_config, resolve_seed

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
RUN_CONFIGS = sorted(p for p in CONFIG_DIR.glob("*.toml") if p.name != "horizon-ring.toml")


def minimal(**overrides) -> dict:
    doc = {"scenario": "comparison", "manifold": "flat-torus", "params": {"m": 1.0}}
    doc.update(overrides)
    return doc


def config_error(doc: dict) -> ConfigError:
    with pytest.raises(ConfigError) as excinfo:
        config_from_dict(doc)
    return excinfo.value


class TestConfigFromDict:
    def test_defaults(self):
        config = config_from_dict(minimal())
        assert config.seed == DEFAULT_SEED
        assert config.params.delta == 0.0
        assert config.ladder is None
        assert config.checks == SUITES["comparison"]

    def test_single_check_scenario(self):
        assert config_from_dict(minimal(scenario="cheng-yau")).checks == ("cheng-yau",)

    def test_integers_widen_to_floats(self):
        config = config_from_dict(minimal(params={"m": 2, "delta": 0}, triangle={"L": 50}))
        assert config.params.m == 2.0
        assert isinstance(config.triangle.L, float)

    @pytest.mark.parametrize("key", ["scenario", "manifold", "params"])
    def test_missing_required_key(self, key):
        doc = minimal()
        del doc[key]
        assert config_error(doc).key == key

    def test_unknown_top_level_key(self):
        assert config_error(minimal(colour="blue")).key == "colour"

    def test_unknown_scenario(self):
        err = config_error(minimal(scenario="ricci-flow"))
        assert err.key == "scenario"
        assert "--list-suites" in err.message

    def test_unknown_section_key(self):
        assert config_error(minimal(triangle={"Lx": 3.0})).key == "triangle.Lx"

    def test_wrong_type(self):
        err = config_error(minimal(params={"m": "two"}))
        assert err.key == "params.m"

    def test_booleans_are_not_numbers(self):
        assert config_error(minimal(resolution={"rays": True})).key == "resolution.rays"

    def test_non_positive_m(self):
        assert config_error(minimal(params={"m": 0.0})).key == "params.m"

    def test_negative_delta(self):
        assert config_error(minimal(params={"m": 1.0, "delta": -0.1})).key == "params.delta"

    def test_short_ladder(self):
        assert config_error(minimal(ladder={"rungs": 2})).key == "ladder.rungs"

    def test_section_must_be_a_table(self):
        assert config_error(minimal(segment=3)).key == "segment"

    def test_manifold_file_resolves_against_the_config(self, tmp_path):
        config = config_from_dict(minimal(manifold="shapes/bump.toml"), base=tmp_path)
        assert config.manifold == str(tmp_path / "shapes" / "bump.toml")


class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="file not found"):
            load_config(tmp_path / "absent.toml")

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text('scenario = "comparison"\nmanifold = = "flat-torus"\n')
        with pytest.raises(ConfigError, match="TOML syntax error"):
            load_config(path)

    def test_source_is_reported(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('scenario = "comparison"\nmanifold = "flat-torus"\n')
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert excinfo.value.source == str(path)
        assert excinfo.value.key == "params"

    @pytest.mark.parametrize("path", RUN_CONFIGS, ids=lambda p: p.stem)
    def test_shipped_configs_load(self, path):
        config = load_config(path)
        assert config.source == str(path)
        assert config.checks


class TestResolveSeed:
    def test_config_seed(self, monkeypatch):
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        assert resolve_seed(config_from_dict(minimal(seed=11))) == 11

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "99")
        assert resolve_seed(config_from_dict(minimal(seed=11))) == 99

    def test_empty_environment_is_ignored(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "")
        assert resolve_seed(config_from_dict(minimal(seed=11))) == 11

    def test_bad_environment_seed(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "seven")
        with pytest.raises(ConfigError) as excinfo:
            resolve_seed(config_from_dict(minimal()))
        assert excinfo.value.key == SEED_ENV_VAR
