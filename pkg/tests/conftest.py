import pytest

from pollnic.ixgbe import IxgbeDevice
from pollnic.kernels import available_modes, get_kernels, warmup
from pollnic.model import ModelNic
from pollnic.platform import ModelHost, open_device


@pytest.fixture(scope="session", autouse=True)
def _jit_warm():
    # compile the hot loops once so no individual test pays for it
    if "numba" in available_modes():
        warmup(get_kernels("numba"))


@pytest.fixture
def host():
    return ModelHost()


@pytest.fixture
def nic(host):
    return ModelNic(host)


@pytest.fixture
def nic_pair(host):
    return ModelNic(host), ModelNic(host)


def make_device(host, nic, **kwargs):
    return IxgbeDevice(open_device(nic.name, host), **kwargs)


@pytest.fixture
def dev(host, nic):
    return make_device(host, nic)


@pytest.fixture
def dev_pair(host, nic_pair):
    a, b = nic_pair
    return make_device(host, a), make_device(host, b)
