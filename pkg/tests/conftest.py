import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsledger import build_basis, build_tensor


@pytest.fixture(scope="session")
def basis40():
    return build_basis(40)


@pytest.fixture(scope="session")
def tensor40(basis40):
    return build_tensor(basis40)


@pytest.fixture(scope="session")
def basis52():
    # complete shells |k|^2 <= 3; smallest basis holding the vortex scenario
    return build_basis(52)


@pytest.fixture(scope="session")
def tensor52(basis52):
    return build_tensor(basis52)


@pytest.fixture(scope="session")
def basis100():
    return build_basis(100)


@pytest.fixture(scope="session")
def tensor100(basis100):
    return build_tensor(basis100)
