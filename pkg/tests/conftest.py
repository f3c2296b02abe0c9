import pathlib

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def models_dir() -> pathlib.Path:
    path = REPO_ROOT / "models"
    if not path.is_dir():
        pytest.fail("models/ corpus missing; run tools/make_fixtures.py")
    return path
