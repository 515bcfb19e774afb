import pytest

from src.cf_core import Rational, convergents, expand
from src.enclosure import Enclosure
from src.errors import PreconditionError, RationalInputError
from src.three_distance import eta_form, gaps_direct, gaps_predicted, random_instances, verify


def total_length(spectrum) -> Enclosure:
    total = Enclosure.exact(0)
    for entry in spectrum.entries:
        total = total + entry.length * entry.count
    return total


@pytest.mark.parametrize("Q", [1, 2, 7, 50, 333])
def test_direct_spectrum_partitions_circle(sqrt2, Q):
    spectrum = gaps_direct(sqrt2, Q)
    assert spectrum.total == Q + 1
    assert len(spectrum.counts()) <= 3
    assert total_length(spectrum).contains(1)
    assert all(entry.length.lo > 0 for entry in spectrum.entries)
    assert spectrum.largest_is_sum()


def test_single_step(golden):
    spectrum = gaps_direct(golden, 1)
    assert sorted(spectrum.counts().values()) == [1, 1]


@pytest.mark.parametrize("name", ["sqrt2", "sqrt3", "golden", "golden_conjugate", "one_plus_sqrt7_over_3"])
def test_predicted_matches_direct(catalog, name):
    xi = catalog.get_real(name)
    for Q in range(1, 200):
        ok, report = verify(xi, Q)
        assert ok, report["problems"]


def test_adversarial_near_equal_gaps(catalog):
    xi = catalog.get_real("adversarial")
    for Q in (1, 49, 50, 51, 99, 100, 2551):
        assert gaps_direct(xi, Q).counts() == gaps_predicted(xi, Q).counts()


def test_random_instances_agree():
    for xi, Q in random_instances(30, 2024, 2000):
        ok, report = verify(xi, Q)
        assert ok, (xi.to_text(), Q, report["problems"])


def test_random_instances_are_reproducible():
    first = random_instances(5, 11, 100)
    assert first == random_instances(5, 11, 100)


def test_eta_form(sqrt2):
    table = convergents(expand(sqrt2), 3)
    assert eta_form(table, 0) == (1, -1)
    assert eta_form(table, 1) == (-2, 3)


def test_three_lengths_sum_rule(golden):
    spectrum = gaps_predicted(golden, 10)
    assert spectrum.total == 11
    assert spectrum.largest_is_sum()
    assert spectrum.to_dict()["total"] == 11


def test_preconditions(sqrt2):
    with pytest.raises(PreconditionError):
        gaps_direct(sqrt2, 0)
    with pytest.raises(RationalInputError):
        gaps_predicted(Rational(2, 3), 10)
    with pytest.raises(RationalInputError):
        gaps_direct(Rational(1, 3), 5)
