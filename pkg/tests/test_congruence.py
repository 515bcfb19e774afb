import math

import pytest

from src.cf_core import convergents, expand
from src.congruence import (
    Constraint,
    annihilating_pair,
    crt,
    ext_gcd,
    pair_solve,
    parse_constraint,
    solvable,
    target_reachable,
    uniform_conditions_met,
)
from src.errors import ConstraintError, ParseError


def brute(a1, b1, m1, a2, b2, m2):
    return [x for x in range(m1 * m2) if (a1 * x - b1) % m1 == 0 and (a2 * x - b2) % m2 == 0]


def test_constraint_validation():
    assert Constraint(2, 2, 1, 1).ab == 4
    assert Constraint(3, 4, 0, 0).homogeneous
    with pytest.raises(ConstraintError, match="constraint \\(2\\)"):
        Constraint(2, 2, 5, 1)
    with pytest.raises(ConstraintError):
        Constraint(0, 1)


def test_parse_constraint():
    assert parse_constraint("3, 4, 1, 2") == Constraint(3, 4, 1, 2)
    with pytest.raises(ParseError):
        parse_constraint("3,4,1")
    with pytest.raises(ConstraintError):
        parse_constraint("2,2,5,1")


def test_pair_solve_examples():
    assert pair_solve(1, 1, 2, 1, 0, 2) is None
    solution = pair_solve(1, 1, 2, 1, 1, 2)
    assert (solution.x0, solution.modulus) == (1, 2)
    solution = pair_solve(2, 2, 4, 3, 1, 5)
    assert (solution.x0, solution.modulus) == (7, 10)


def test_pair_solve_agrees_with_scan():
    for m1 in range(1, 6):
        for m2 in range(1, 6):
            for a1 in range(m1):
                for b1 in range(m1):
                    for a2 in range(m2):
                        for b2 in range(m2):
                            expected = brute(a1, b1, m1, a2, b2, m2)
                            solution = pair_solve(a1, b1, m1, a2, b2, m2)
                            assert solvable(a1, b1, m1, a2, b2, m2) == bool(expected)
                            if not expected:
                                assert solution is None
                            else:
                                found = [x for x in range(m1 * m2) if solution.contains(x)]
                                assert found == expected


def test_crt_and_ext_gcd():
    assert crt(2, 3, 3, 5) == (8, 15)
    assert crt(1, 4, 2, 6) is None
    for x, y in [(240, 46), (-12, 18), (7, 0), (0, 5)]:
        g, s, t = ext_gcd(x, y)
        assert g == math.gcd(x, y)
        assert s * x + t * y == g


@pytest.mark.parametrize("u, v, expected", [(1, 1, True), (2, 3, False)])
def test_target_reachable_examples(u, v, expected):
    assert target_reachable(u, v, Constraint(2, 2, 1, 1)) is expected


def test_target_reachable_agrees_with_scan():
    for a in range(1, 5):
        for b in range(1, 5):
            for r in range(a):
                for s in range(b):
                    c = Constraint(a, b, r, s)
                    for u in range(-6, 7):
                        for v in range(1, 8):
                            if math.gcd(u, v) != 1:
                                continue
                            reachable = any((k * u - r) % a == 0 and (k * v - s) % b == 0 for k in range(a * b))
                            assert target_reachable(u, v, c) == reachable


def test_uniform_conditions(sqrt2):
    table = convergents(expand(sqrt2), 5)
    c = Constraint(2, 2, 1, 1)
    assert uniform_conditions_met(1, table, c)
    assert not uniform_conditions_met(2, table, c)
    for k in range(1, 6):
        assert uniform_conditions_met(k, table, Constraint(3, 5, 0, 0))


def recurrence_vanishes(alpha, beta, b, i1, i2):
    u1 = i1 * beta + alpha
    return (i2 * u1 + beta) % b == 0


def test_annihilating_pair_special_cases():
    assert annihilating_pair(0, 3, 4) == (1, 3)
    assert annihilating_pair(3, 0, 4) == (4, 4)


def test_annihilating_pair_full_grid():
    for b in range(1, 19):
        for alpha in range(b):
            for beta in range(b):
                i1, i2 = annihilating_pair(alpha, beta, b)
                assert 1 <= i1 <= b and 1 <= i2 <= b
                assert recurrence_vanishes(alpha, beta, b, i1, i2)


def test_constraint_to_dict_round_trips_text():
    c = Constraint(5, 3, 2, 1)
    assert parse_constraint(c.to_text()) == c
    assert c.to_dict() == {"a": 5, "b": 3, "r": 2, "s": 1}
