import pytest
from pydantic import ValidationError

from app.config import Settings, available_parallelism
from app.models import DEFAULT_BLOCK_SIZE, ExperimentConfig


def test_defaults():
    config = Settings(_env_file=None)
    assert config.app_name == "mwvariance"
    assert config.bound_tolerance == 1e-12
    assert config.ci_level == 0.95


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("DEFAULT_NSIM", "500")
    monkeypatch.setenv("log_level", "DEBUG")
    config = Settings(_env_file=None)
    assert config.default_nsim == 500
    assert config.log_level == "DEBUG"


def test_block_size_is_not_an_environment_setting(monkeypatch):
    monkeypatch.setenv("BLOCK_SIZE", "250")
    assert not hasattr(Settings(_env_file=None), "block_size")
    config = ExperimentConfig(experiment="bias", specs=[{"name": "dmax", "params": {"theta": 0.5}}])
    assert config.block_size == DEFAULT_BLOCK_SIZE


@pytest.mark.parametrize("name, value", [("CI_LEVEL", "1.5"), ("DEFAULT_NSIM", "0"), ("DEFAULT_SEED", "-1")])
def test_invalid_environment(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_resolve_threads():
    assert Settings(_env_file=None, threads=3).resolve_threads() == 3
    assert Settings(_env_file=None, threads=3).resolve_threads(5) == 5
    assert Settings(_env_file=None, threads=0).resolve_threads() == available_parallelism()
    assert available_parallelism() >= 1


def test_experiment_defaults_follow_settings():
    config = ExperimentConfig(experiment="bias", specs=[{"name": "dmax", "params": {"theta": 0.5}}])
    assert config.nsim == 100_000
    assert config.estimators == ["N", "SHS", "DL", "PM", "HM"]
