import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ogm import ghz_state, load_observable  # noqa: E402

DATA = Path(__file__).parent / "data"
EXAMPLE_HAM = DATA / "ghz_example.ham"
# exact expectation on GHZ_3: <IZZ> = 1, <ZZI> = 1, every X-bearing term 0
EXAMPLE_TRUTH = 0.25 + 1 / 12


@pytest.fixture(scope="session")
def example_obs():
    return load_observable(EXAMPLE_HAM)


@pytest.fixture(scope="session")
def ghz3():
    return ghz_state(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
