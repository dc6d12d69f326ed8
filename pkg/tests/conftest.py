import json
from pathlib import Path

import pytest

from powcaptcha import demo_assets, image_bank

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # Expose per-phase outcomes so the acceptance suite can print its
    # PASS/FAIL line per criterion.
    outcome = yield
    setattr(item, f"rep_{call.when}", outcome.get_result())


@pytest.fixture(scope="session")
def pow_vectors():
    return json.loads((FIXTURES / "pow_vectors.json").read_text())


@pytest.fixture(scope="session")
def demo_manifest(tmp_path_factory):
    dest = tmp_path_factory.mktemp("catalog")
    return demo_assets.make_demo_catalog(dest)


@pytest.fixture(scope="session")
def catalog(demo_manifest):
    return image_bank.load_catalog(demo_manifest)
