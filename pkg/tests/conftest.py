import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cheapboot.rng import RandomStream

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = []


@pytest.fixture
def stream():
    return RandomStream(20240611, 1)


@pytest.fixture
def oracle_rng():
    # independent generator for oracles, deliberately not the package's streams
    return np.random.default_rng(987654321)


@pytest.fixture
def acceptance_log():
    """Call with ``(criterion, passed, detail)``; lines are echoed and repeated in the summary."""

    def record(criterion, passed, detail):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
