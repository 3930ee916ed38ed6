import pytest

from config import reset_settings


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    for name in ("NLCS_MAX_DIM", "NLCS_START_DIM", "NLCS_OUTPUT_FORMAT", "NLCS_SEED", "NLCS_GRID_SIZE"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()
