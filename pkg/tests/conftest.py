import pytest
from hypothesis import HealthCheck, settings

from atdlab.fixtures import load_corpus
from atdlab.lexicon import load_default_pack

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def pack():
    return load_default_pack()


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()
