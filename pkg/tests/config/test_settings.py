from pathlib import Path

import pytest

from src.config.settings import Settings
from src.domain.errors import ValidationError

ENV_KEYS = ("ENV", "LOG_LEVEL", "URLLC_THREADS", "URLLC_QUAD_ORDER", "URLLC_RESULTS_DB", "URLLC_OUTPUT_DIR")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)


def test_defaults():
    settings = Settings.load()
    assert settings.env == "development"
    assert settings.threads >= 1
    assert settings.quadrature_order == 64
    assert settings.results_db is None
    assert settings.output_dir == Path(".")


def test_environment_values(monkeypatch, tmp_path):
    monkeypatch.setenv("URLLC_THREADS", "3")
    monkeypatch.setenv("URLLC_RESULTS_DB", str(tmp_path / "runs" / "results.sqlite"))
    monkeypatch.setenv("URLLC_OUTPUT_DIR", str(tmp_path / "out"))
    settings = Settings.load()
    assert settings.threads == 3
    assert settings.results_db.parent.is_dir()
    assert settings.output_dir == tmp_path / "out"


@pytest.mark.parametrize("value", ["many", "0"])
def test_invalid_threads(monkeypatch, value):
    monkeypatch.setenv("URLLC_THREADS", value)
    with pytest.raises(ValidationError):
        Settings.load()
