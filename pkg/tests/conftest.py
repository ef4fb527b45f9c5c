import importlib.resources

import pytest

from factsheet.agent import BlockStore
from factsheet.offline import OfflineTransport
from factsheet.pipeline import prepare_dataset


def _data(name: str) -> bytes:
    return (importlib.resources.files("factsheet") / "data" / name).read_bytes()


@pytest.fixture(scope="session")
def carsales_bytes() -> bytes:
    return _data("CarSales.csv")


@pytest.fixture(scope="session")
def movies_bytes() -> bytes:
    return _data("Movies.csv")


@pytest.fixture(scope="session")
def carsales_prepared(carsales_bytes):
    return prepare_dataset(carsales_bytes, "CarSales", seed=7)


@pytest.fixture(scope="session")
def movies_prepared(movies_bytes):
    return prepare_dataset(movies_bytes, "Movies", seed=3)


@pytest.fixture()
def offline():
    return OfflineTransport()


@pytest.fixture()
def blocks(tmp_path):
    return BlockStore(str(tmp_path / "blocks"))
