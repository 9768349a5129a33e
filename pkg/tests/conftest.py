import pytest
from hypothesis import settings

from stigmergy.config import KernelConfig

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def kernel():
    return KernelConfig().diffusion()


@pytest.fixture(scope="session")
def gaussian():
    return KernelConfig().gaussian()
