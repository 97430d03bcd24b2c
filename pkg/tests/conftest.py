import numpy as np
import pytest

from xbardse import qnet

FIXTURE_SHAPE = (1, 16)
FIXTURE_CLASSES = 4


@pytest.fixture(scope="session")
def train_data():
    return qnet.generate_synthetic_dataset(0, 256, FIXTURE_CLASSES, FIXTURE_SHAPE)


@pytest.fixture(scope="session")
def test_data():
    return qnet.generate_synthetic_dataset(1, 200, FIXTURE_CLASSES, FIXTURE_SHAPE)


@pytest.fixture(scope="session")
def fixture_arch():
    return [qnet.conv1d(kernels=4, kernel_h=3), qnet.linear(FIXTURE_CLASSES)]


@pytest.fixture(scope="session")
def fixture_net(train_data, fixture_arch):
    return qnet.train_fixture(0, fixture_arch, train_data, l1=5e-4, bit_width=8)


@pytest.fixture(scope="session")
def linear_net(train_data):
    """Linear-only fixture; staggered and routed plans share logical spaces."""
    arch = [qnet.linear(8), qnet.linear(FIXTURE_CLASSES)]
    return qnet.train_fixture(0, arch, train_data, l1=5e-4, bit_width=8,
                              name="fixture-linear")
