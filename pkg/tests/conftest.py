import pathlib

import pytest

from compnull import deserialize

FIXTURE_DIR = pathlib.Path(__file__).resolve().parent.parent / "src" / "compnull" / "fixtures"


@pytest.fixture(scope="session")
def shipped_bayes_region():
    """The solved alpha=0.05, m=65 randomized region shipped with the package."""
    text = (FIXTURE_DIR / "bayes_alpha0.05_m65.region.json").read_text()
    return deserialize(text)
