import json

import pytest
from pydantic import ValidationError

from framework.config import config_hash, load_config, load_environment, parse_tolerances
from models.config import DEFAULT_TOLERANCES, RunConfig


NO_ENV = {"config_path": None, "out": None, "log_level": "INFO"}


def test_defaults_describe_the_unit_interval():
    config = RunConfig()
    assert config.dimension == 1
    assert config.cells == [8]
    assert config.tolerances == DEFAULT_TOLERANCES
    assert config.resolved_seeds("check") == 2
    assert config.resolved_seeds("check", dimension=2) == 4
    assert config.resolved_seeds("poisson") == 0
    assert config.partition().h == pytest.approx(0.125)


def test_two_cell_counts_default_to_the_unit_square():
    config = RunConfig(cells=[3, 5])
    assert config.domain_lower == [0.0, 0.0]
    assert config.domain_upper == [1.0, 1.0]
    assert config.dimension == 2


def test_single_count_is_repeated_in_2d():
    config = RunConfig(domain_lower=[0.0, 0.0], domain_upper=[2.0, 1.0], cells=[4])
    assert config.cells == [4, 4]


@pytest.mark.parametrize("values", [
    {"degree": 0},
    {"levels": 0},
    {"seeds_per_cell": -1},
    {"gamma": 0.0},
    {"region": "square"},
    {"domain_lower": [0.0, 0.0, 0.0], "domain_upper": [1.0, 1.0, 1.0], "cells": [2]},
    {"domain_lower": [1.0], "domain_upper": [0.0]},
    {"cells": [0]},
    {"smooth_degree": 3},
    {"tolerances": {"gauss": -1.0}},
    {"unknown_field": 1},
])
def test_invalid_values_are_rejected(values):
    with pytest.raises(ValidationError):
        RunConfig(**values)


def test_tolerance_overrides_merge_with_the_defaults():
    config = RunConfig(tolerances={"gauss": 1e-6})
    assert config.tolerance("gauss") == 1e-6
    assert config.tolerance("ibp") == DEFAULT_TOLERANCES["ibp"]


def test_unknown_tolerance_is_rejected():
    with pytest.raises(ValidationError, match="unknown tolerances"):
        RunConfig(tolerances={"nonsense": 1.0})


def test_with_defaults_keeps_user_values():
    assert RunConfig().with_defaults(cells=[8, 8]).dimension == 2
    assert RunConfig(cells=[16]).with_defaults(cells=[64]).cells == [16]
    assert RunConfig(gamma=3.0).with_defaults(cells=[64]).gamma == 3.0


def test_load_config_layers_file_and_flags(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"degree": 3, "gamma": 5.0, "tolerances": {"gauss": 1e-7}}))
    config = load_config(str(path), {"gamma": 6.0, "levels": None, "tolerances": {"ibp": 1e-6}},
                         environment={**NO_ENV, "out": "env_out"})
    assert config.degree == 3
    assert config.gamma == 6.0
    assert config.levels == 3
    assert config.out == "env_out"
    assert config.tolerance("gauss") == 1e-7
    assert config.tolerance("ibp") == 1e-6


def test_load_config_rejects_unreadable_files(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_config(str(path), environment=NO_ENV)
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_config(str(path), environment=NO_ENV)


def test_parse_tolerances():
    assert parse_tolerances(["gauss=1e-10", "ibp = 2e-8"]) == {"gauss": 1e-10, "ibp": 2e-8}
    assert parse_tolerances(None) == {}
    with pytest.raises(ValueError):
        parse_tolerances(["gauss"])
    with pytest.raises(ValueError):
        parse_tolerances(["gauss=small"])


def test_load_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("ULTRAFUN_CONFIG", raising=False)
    monkeypatch.setenv("ULTRAFUN_LOG_LEVEL", "debug")
    monkeypatch.setenv("ULTRAFUN_OUT", str(tmp_path))
    environment = load_environment()
    assert environment == {"config_path": None, "out": str(tmp_path), "log_level": "DEBUG"}


def test_load_environment_errors(monkeypatch, tmp_path):
    monkeypatch.setenv("ULTRAFUN_LOG_LEVEL", "LOUD")
    with pytest.raises(EnvironmentError, match="ULTRAFUN_LOG_LEVEL"):
        load_environment()
    monkeypatch.setenv("ULTRAFUN_LOG_LEVEL", "INFO")
    monkeypatch.setenv("ULTRAFUN_CONFIG", str(tmp_path / "missing.json"))
    with pytest.raises(EnvironmentError, match="not found"):
        load_environment()


def test_config_hash_is_stable():
    assert config_hash(RunConfig(degree=3)) == config_hash(RunConfig(degree=3))
    assert config_hash(RunConfig(degree=3)) != config_hash(RunConfig(degree=2))
    assert len(config_hash(RunConfig())) == 16


def test_explicit_seed_count_carries_its_per_axis_count():
    config = RunConfig(cells=[4, 4], seeds_per_cell=4)
    assert config.resolved_seeds("check") == 4
    assert config.resolved_seeds("check", dimension=1) == 2
    assert RunConfig(seeds_per_cell=0).resolved_seeds("gauss", dimension=2) == 0
