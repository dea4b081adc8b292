import os

import pytest
from hypothesis import HealthCheck, settings

from layerspectra.layer import make_layer
from layerspectra.meridian import CurvatureProfile

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def bump_profile():
    return CurvatureProfile.gaussian_bump(0.3, 1.0)


@pytest.fixture(scope="session")
def bump_layer(bump_profile):
    # window 200 so the far-field diagnostics sit well past the bump
    return make_layer(bump_profile, 0.5, s_max=200.0, h=0.01)


@pytest.fixture(scope="session")
def flat_layer():
    return make_layer(CurvatureProfile.flat(), 1.0, s_max=40.0, h=0.02)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
