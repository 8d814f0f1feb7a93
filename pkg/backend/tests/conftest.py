# /backend/tests/conftest.py

"""
Fixtures compartidos de la suite.

Las simulaciones se ejecutan en el mismo proceso (MAX_WORKERS = 1) y escriben
sus reportes en un directorio temporal por prueba.
"""

import pytest

from app.core.config import settings


@pytest.fixture(autouse=True)
def in_process_workers(monkeypatch):
    monkeypatch.setattr(settings, "MAX_WORKERS", 1)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    path = tmp_path / "out"
    monkeypatch.setattr(settings, "OUTPUT_DIR", path)
    return path


@pytest.fixture
def fixtures_dir():
    return settings.FIXTURES_DIR
