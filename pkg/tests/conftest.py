import numpy as np
import pytest

from vtergm import ValuedNetwork


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="run long statistical acceptance checks",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def random_network(rng, n, directed=False, max_val=6):
    v = rng.integers(0, max_val + 1, size=(n, n))
    if not directed:
        v = np.triu(v, k=1)
        v = v + v.T
    np.fill_diagonal(v, 0)
    return ValuedNetwork(v.astype(np.int64), directed=directed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
