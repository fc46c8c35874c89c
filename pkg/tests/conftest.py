import numpy as np
import pytest
from hypothesis import strategies as st

from crsmdp.model import random_model, random_policy

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def model_and_policy(seed, max_m=3, max_n=3, max_prefix=6):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, max_m + 1)), int(rng.integers(1, max_n + 1))
    model = random_model(rng, m, n)
    return model, random_policy(rng, m, n, max_prefix), rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
