from fractions import Fraction

import pytest

from src.enclosure import (
    Enclosure,
    bits_for_width,
    ceil_fraction,
    decide,
    decimal_string,
    floor_fraction,
    log_enclosure,
    pi_enclosure,
    refine,
    sin_enclosure,
    sqrt_enclosure,
)
from src.errors import PrecisionCapError


def test_bits_for_width():
    assert bits_for_width(1) == 0
    assert bits_for_width(Fraction(1, 2)) == 1
    assert bits_for_width(Fraction(1, 3)) == 2
    assert bits_for_width(Fraction(1, 1024)) == 10


def test_floor_and_ceil():
    assert floor_fraction(Fraction(-7, 2)) == -4
    assert ceil_fraction(Fraction(-7, 2)) == -3
    assert floor_fraction(Fraction(6, 3)) == ceil_fraction(Fraction(6, 3)) == 2


def test_decimal_string_rounds_outward():
    assert decimal_string(Fraction(1, 3), 4) == "0.3333"
    assert decimal_string(Fraction(1, 3), 4, round_up=True) == "0.3334"
    assert decimal_string(Fraction(-1, 3), 2) == "-0.34"


def test_arithmetic_contains_exact_result():
    x = Enclosure(Fraction(1), Fraction(2))
    y = Enclosure(Fraction(-1), Fraction(3))
    assert (x + y) == Enclosure(0, 5)
    assert (x - y) == Enclosure(-2, 3)
    assert (x * y) == Enclosure(-2, 6)
    assert abs(y) == Enclosure(0, 3)
    assert y.square() == Enclosure(0, 9)
    assert (x / 2) == Enclosure(Fraction(1, 2), 1)


def test_division_by_straddling_enclosure():
    with pytest.raises(PrecisionCapError):
        Enclosure.exact(1) / Enclosure(-1, 1)


def test_out_of_order_endpoints():
    with pytest.raises(ValueError):
        Enclosure(2, 1)


def test_sign_and_comparisons():
    assert Enclosure(1, 2).sign() == 1
    assert Enclosure(-2, -1).sign() == -1
    assert Enclosure(0, 1).sign() == 0
    assert Enclosure(0, 1).certainly_le(1)
    assert not Enclosure(0, 1).certainly_less(1)


def test_pi_enclosure_is_tight():
    pi = pi_enclosure(128)
    assert Fraction(31415926535897932384, 10**19) < pi.lo
    assert pi.hi < Fraction(31415926535897932385, 10**19)
    assert pi.width < Fraction(1, 2**120)


def test_transcendental_kernels():
    assert log_enclosure(Enclosure.exact(1), 64).contains(0)
    assert sin_enclosure(Enclosure.exact(0), 64).contains(0)
    with pytest.raises(PrecisionCapError):
        log_enclosure(Enclosure(-1, 1), 64)


def test_sqrt_enclosure():
    root = sqrt_enclosure(Enclosure.exact(2), 40)
    assert root.lo * root.lo <= 2 <= root.hi * root.hi
    assert root.width <= Fraction(1, 2**40)
    assert sqrt_enclosure(Enclosure.exact(9)) == Enclosure.exact(3)


def test_refine_doubles_until_accepted():
    seen = []

    def evaluate(bits):
        seen.append(bits)
        return Enclosure(0, Fraction(1, bits))

    result = refine(evaluate, lambda e: e.hi < Fraction(1, 100), 16, 1024)
    assert seen == [16, 32, 64, 128]
    assert result.hi == Fraction(1, 128)


def test_decide_hits_cap():
    with pytest.raises(PrecisionCapError):
        decide(lambda bits: None, 16, 64)
