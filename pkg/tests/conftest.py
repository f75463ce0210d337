import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# The first call of a compiled kernel can take seconds; never time examples.
settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=100
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def acceptance_report(request):
    """Collect one summary line per acceptance criterion."""
    return request.config.stash[ACCEPTANCE].append


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[ACCEPTANCE]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
