from pathlib import Path

import numpy as np
import pytest

from zonodual import kernels

DATA = Path(__file__).parent / "data"


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_paths():
    return DATA / "fixture_net.json", DATA / "fixture_problem.json"
