from fractions import Fraction

import numpy as np
import pytest

from src.cf_core import QuadraticSurd, Rational, refine_to
from src.lattice_scan import (
    FixedPoint,
    ResidueScan,
    admissible_denominators,
    fixed_point,
    residue_bounds,
    scan_bits,
)
from src.errors import PrecisionCapError


def exact_dist(x: Fraction, a: int, r: int) -> Fraction:
    t = (x - r) % a
    return min(t, a - t)


def test_exact_rational_bounds_collapse():
    lo, hi = residue_bounds(np.arange(1, 7), 1, 0, 3, 1, 0)
    assert list(lo) == [1, 1, 0, 1, 1, 0]
    assert list(lo) == list(hi)


def test_rational_shift_against_fractions():
    scan = ResidueScan(Rational(1, 3), 2, 1, alpha=Rational(1, 2))
    for N in range(1, 40):
        expected = exact_dist(Fraction(N, 3) + Fraction(1, 2), 2, 1)
        d = scan.distance(N, 32)
        assert d.lo == d.hi == expected


def test_bounds_bracket_true_distance(sqrt2):
    scan = ResidueScan(sqrt2, 3, 2)
    reference = refine_to(sqrt2, Fraction(1, 2**120))
    Ns = np.arange(1, 300)
    lo, hi, scale = scan.bounds(Ns, 24)
    for N, d_lo, d_hi in zip(Ns, lo, hi):
        truth = exact_dist(reference.mid * int(N), 3, 2)
        slack = Fraction(int(N), 2**120)
        assert Fraction(int(d_lo), scale) <= truth + slack
        assert truth - slack <= Fraction(int(d_hi), scale)


def test_big_denominators_use_exact_integers():
    N = np.array([10**20, 10**20 + 1], dtype=object)
    lo, hi = residue_bounds(N, 1, 0, 7, 1, 0)
    expected = [min(int(n) % 7, 7 - int(n) % 7) for n in N]
    assert [int(v) for v in lo] == expected
    assert [int(v) for v in lo] == [int(v) for v in hi]


def test_fixed_point_rescale_is_outward(golden):
    fp = fixed_point(golden, 40)
    coarse = fp.rescale(1 << 10)
    assert coarse.enclosure.lo <= fp.enclosure.lo
    assert fp.enclosure.hi <= coarse.enclosure.hi
    assert FixedPoint(3, 0, 4).exact


def test_certify_finds_nearest_numerator(sqrt2):
    scan = ResidueScan(sqrt2, 1, 0)
    found = scan.certify(5, Fraction(1, 10), 32)
    assert [m for m, _ in found] == [7]
    assert abs(found[0][1].mid - Fraction(7106781186547524, 10**17)) < Fraction(1, 10**8)
    assert scan.certify(5, Fraction(1, 100), 32) == []


def test_certify_on_exact_boundary():
    scan = ResidueScan(Rational(1, 4), 1, 0)
    assert scan.certify(1, Fraction(1, 4), 32) == [(0, scan.error(1, 0, 32))]
    assert scan.certify(1, Fraction(1, 4), 32, strict=True) == []


def test_certify_gives_up_at_cap():
    surd = QuadraticSurd(0, 2, 1)
    scan = ResidueScan(surd, 1, 0, cap_bits=32)
    reference = refine_to(surd, Fraction(1, 2**200))
    threshold = abs(reference.mid * 3 - 4)
    with pytest.raises(PrecisionCapError):
        scan.certify(3, threshold, 16)


@pytest.mark.parametrize("b, s, qmax, qmin, expected", [
    (3, 1, 20, 1, [1, 4, 7, 10, 13, 16, 19]),
    (2, 0, 10, 1, [2, 4, 6, 8, 10]),
    (3, 1, 20, 5, [7, 10, 13, 16, 19]),
    (5, 4, 3, 1, []),
])
def test_admissible_denominators(b, s, qmax, qmin, expected):
    assert list(admissible_denominators(b, s, qmax, qmin)) == expected


def test_scan_bits():
    assert scan_bits(1000, Fraction(1, 1000)) == 32
    assert scan_bits(10**9, Fraction(1, 10**9)) == (10**18).bit_length() + 8
