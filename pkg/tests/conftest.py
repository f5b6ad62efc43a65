import numpy as np
import pytest

from rpcap import rpchannel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def dephasing():
    return rpchannel.dephasing_parameter_channel()


@pytest.fixture
def stuck_half():
    return rpchannel.stuck_at_channel(0.5)


@pytest.fixture
def depolarizing():
    return rpchannel.depolarizing_parameter_channel(2)


@pytest.fixture
def identity_rp():
    return rpchannel.identity_parameter_channel(2)


@pytest.fixture
def precorrect_family():
    return rpchannel.EncoderFamily.from_matrices([np.eye(2), np.diag([1.0, -1.0])])


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Z = np.diag([1.0, -1.0]).astype(np.complex128)
