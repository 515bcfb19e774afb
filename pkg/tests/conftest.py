import pytest

from data.fixtures import FixtureCatalog
from src.cf_core import QuadraticSurd, Rational
from src.config import Settings, use_settings
from src.congruence import Constraint


@pytest.fixture(autouse=True)
def small_settings():
    """Single worker and a modest sieve so tests do not depend on the machine"""
    use_settings(Settings(precision_cap=4096, workers=1, sieve_limit=200_000))
    yield


@pytest.fixture(scope="session")
def catalog():
    return FixtureCatalog()


@pytest.fixture
def sqrt2():
    return QuadraticSurd(0, 2, 1)


@pytest.fixture
def golden():
    return QuadraticSurd(1, 5, 2)


@pytest.fixture
def sqrt3():
    return QuadraticSurd(0, 3, 1)


@pytest.fixture
def odd_odd():
    return Constraint(2, 2, 1, 1)


@pytest.fixture
def classical():
    return Constraint(1, 1, 0, 0)


@pytest.fixture
def zero():
    return Rational(0)
