import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modenets.synth import gen_tts
from modenets.tensor import TensorTS

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=30,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

# acceptance tests register one line each; printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])


@pytest.fixture(scope="session")
def small_tts() -> TensorTS:
    """Deterministic 2-mode series with two alternating regimes."""
    x, _ = gen_tts((4, 3), (1, 2, 1), seed=5)
    return x


@pytest.fixture(scope="session")
def small_truth():
    _, truth = gen_tts((4, 3), (1, 2, 1), seed=5)
    return truth


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
