import pytest

from config import Settings, get_settings, reset_settings, use_settings
from errors import TruncationError, UsageError, error_payload


def test_defaults():
    settings = Settings()
    assert settings.max_dim == 512
    assert settings.tail_tolerance == 1e-14
    assert settings.disk_limit == 0.95
    assert settings.output_format == "json"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("NLCS_MAX_DIM", "64")
    monkeypatch.setenv("NLCS_OUTPUT_FORMAT", "csv")
    reset_settings()
    settings = get_settings()
    assert settings.max_dim == 64
    assert settings.output_format == "csv"


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("NLCS_SEED", "abc")
    with pytest.raises(ValueError):
        Settings.from_env()


def test_with_overrides():
    settings = Settings().with_overrides({"eigen_tol": "1e-6", "grid_size": "7"})
    assert settings.eigen_tol == 1e-6
    assert settings.grid_size == 7
    with pytest.raises(KeyError):
        Settings().with_overrides({"nope": "1"})
    with pytest.raises(ValueError):
        Settings().with_overrides({"max_dim": "lots"})


def test_use_settings_replaces_global():
    custom = use_settings(Settings(start_dim=16))
    assert get_settings() is custom
    reset_settings()
    assert get_settings().start_dim == 32


def test_error_payloads():
    assert error_payload(UsageError("bad flag")) == {"error": "UsageError", "message": "bad flag", "exit_code": 2}
    payload = error_payload(TruncationError("tail", tail_mass=1e-3, dim=8))
    assert payload["exit_code"] == 1
    assert payload["error"] == "TruncationError"
