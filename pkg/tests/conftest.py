import warnings

import pytest
from scipy.integrate import IntegrationWarning

from passive_qkd.characterization import characterize
from passive_qkd.channel import ChannelParams
from passive_qkd.source import SourceConfig

# Reference geometry used wherever a "typical" source is needed.  The minimum
# test-region sizes are the pinned asymptotic ones.
REFERENCE = dict(w=0.05, nu_t=0.4, dtheta_key=0.6, dtheta_test=0.3, dphi_test=0.3)
PINNED = dict(w=5e-3, nu_t=0.4, dtheta_key=0.6, dtheta_test=0.1, dphi_test=0.1)


def make_config(p):
    return SourceConfig.consecutive(p["w"], p["nu_t"], p["dtheta_key"], p["dtheta_test"],
                                    p["dphi_test"])


@pytest.fixture(autouse=True)
def _quiet_oracle():
    # the nested scipy.quad oracle reports benign roundoff warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        yield


@pytest.fixture(scope="session")
def ref_config():
    return make_config(REFERENCE)


@pytest.fixture(scope="session")
def ref_source(ref_config):
    return characterize(ref_config)


@pytest.fixture(scope="session")
def pinned_source():
    return characterize(make_config(PINNED))


@pytest.fixture(scope="session")
def channel():
    return ChannelParams()


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
