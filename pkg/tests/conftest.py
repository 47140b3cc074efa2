import hashlib
import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", derandomize=True, deadline=None, max_examples=100,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _sm3_available():
    try:
        hashlib.new("sm3")
    except ValueError:
        return False
    return True


HAVE_SM3 = _sm3_available()


@pytest.fixture(scope="session")
def calibrated():
    from cryptorv.config import default_config
    return default_config(calibrated=True)


@pytest.fixture(scope="session")
def uncalibrated():
    from cryptorv.config import default_config
    return default_config(calibrated=False)


# acceptance criteria report one verdict line each; collected here so the
# lines show up in the terminal summary even when output is captured
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, title, ok, detail=""):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
        if detail:
            line += f": {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
