import pytest

from warehouse_layout.configs import desk_config, large_config, tiny_config
from warehouse_layout.domain import WarehouseConfig


@pytest.fixture(scope="session")
def desk():
    return desk_config()


@pytest.fixture(scope="session")
def tiny():
    return tiny_config()


@pytest.fixture(scope="session")
def large():
    return large_config()


@pytest.fixture(scope="session")
def six():
    """6x6 instance with one source, two holes and a single destination."""
    return WarehouseConfig(h=6, w=6, sources=((1, 1),), holes=((4, 3), (2, 5)), n_r=2, n_d=1, p=(1.0,), T=50)


@pytest.fixture(scope="session")
def six_multi():
    """6x6 instance with three holes, two destinations and four robots."""
    return WarehouseConfig(
        h=6, w=6, sources=((1, 1), (5, 6)), holes=((3, 3), (2, 5), (5, 3)), n_r=4, n_d=2, p=(0.6, 0.4), T=80
    )
