import numpy as np
import pytest

from simtrack import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # jit-compile once so timing-sensitive tests never pay compile cost
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
