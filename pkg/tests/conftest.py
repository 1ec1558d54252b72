import numpy as np
import pytest

from cipseries.basis import Band, build_basis


@pytest.fixture(scope="session")
def band():
    return Band(1.0, 2.0)


@pytest.fixture(scope="session")
def basis10(band):
    return build_basis(band, 10)


@pytest.fixture(scope="session")
def basis5(band):
    return build_basis(band, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
