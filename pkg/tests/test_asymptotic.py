import math
from fractions import Fraction

import pytest

from src.asymptotic import (
    AsymptoticSearch,
    approximation_constant,
    brute_hits,
    hit_counts,
    inhomogeneous_hits,
    trig_probe,
)
from src.cf_core import Rational, refine_to
from src.congruence import Constraint
from src.errors import PreconditionError
from src.lattice_scan import admissible_denominators

TIGHT = Fraction(1, 2**200)


def reference_hits(xi, c, factor, qmax, alpha=None):
    x = refine_to(xi, TIGHT).mid
    shift = refine_to(alpha, TIGHT).mid if alpha is not None else Fraction(0)
    found = set()
    for N in admissible_denominators(c.b, c.s, qmax):
        N = int(N)
        centre = N * x + shift
        bound = Fraction(factor) * c.ab / N
        m_lo = math.floor((centre - bound - c.r) / c.a)
        m_hi = math.ceil((centre + bound - c.r) / c.a)
        for m in range(m_lo, m_hi + 1):
            if abs(centre - (c.a * m + c.r)) <= bound:
                found.add((N, c.a * m + c.r))
    return found


@pytest.mark.parametrize("name, constraint", [
    ("golden", Constraint(1, 1)),
    ("sqrt2", Constraint(2, 2, 1, 1)),
    ("sqrt3", Constraint(3, 4, 1, 2)),
    ("one_plus_sqrt7_over_3", Constraint(5, 3, 2, 1)),
])
def test_brute_hits_match_reference(catalog, name, constraint):
    xi = catalog.get_real(name)
    hits = brute_hits(xi, constraint, 1, 600)
    assert {(h.N, h.numerator) for h in hits} == reference_hits(xi, constraint, 1, 600)
    assert [h.N for h in hits] == sorted(h.N for h in hits)
    for h in hits:
        assert h.N == constraint.b * h.n + constraint.s
        assert h.numerator == constraint.a * h.m + constraint.r
        assert h.quality.lo <= 1


def test_hit_errors_enclose_true_error(golden):
    x = refine_to(golden, TIGHT).mid
    for h in brute_hits(golden, Constraint(1, 1), 1, 300):
        truth = abs(x - Fraction(h.numerator, h.N))
        assert h.error.lo - TIGHT <= truth <= h.error.hi + TIGHT


def test_factor_edge_cases(sqrt2):
    assert brute_hits(sqrt2, Constraint(1, 1), 0, 100) == []
    with pytest.raises(PreconditionError):
        brute_hits(sqrt2, Constraint(1, 1), -1, 100)
    assert brute_hits(sqrt2, Constraint(5, 7, 0, 6), 1, 5) == []


def test_hit_counts_follow_distinct_denominators(sqrt2):
    c = Constraint(2, 2, 1, 1)
    hits = brute_hits(sqrt2, c, 1, 1000)
    grid = [10, 100, 1000]
    counts = hit_counts(sqrt2, c, 1, grid)
    assert [Q for Q, _ in counts] == grid
    for Q, count in counts:
        assert count == len({h.N for h in hits if h.N <= Q})
    values = [count for _, count in counts]
    assert values == sorted(values)


def test_hit_counts_need_ascending_grid(sqrt2):
    with pytest.raises(PreconditionError):
        hit_counts(sqrt2, Constraint(1, 1), 1, [100, 10])
    assert AsymptoticSearch(Constraint(1, 1)).hit_counts(sqrt2, 1, []) == []


def test_golden_approximation_constant(golden):
    value = approximation_constant(golden, Constraint(1, 1), 2000, qmin=20)
    assert abs(value.mid - Fraction(4472136, 10**7)) < Fraction(1, 1000)


def test_approximation_constant_without_hits(sqrt2):
    with pytest.raises(PreconditionError):
        approximation_constant(sqrt2, Constraint(1, 1), 10, qmin=11)


def test_inhomogeneous_hits(golden):
    c = Constraint(1, 1)
    alpha = Rational(1, 2)
    hits = inhomogeneous_hits(golden, alpha, c, 1, 200)
    assert hits
    assert {(h.N, h.numerator) for h in hits} == reference_hits(golden, c, 1, 200, alpha=alpha)


def test_trig_probe_running_extrema():
    probe = trig_probe(Rational(1, 1), Rational(0, 1), 5)
    assert len(probe.running_min) == len(probe.running_max) == 5
    assert abs(probe.first.mid - Fraction(841470984807896, 10**15)) < Fraction(1, 10**12)
    assert abs(probe.running_min[-1].mid - Fraction(-810815, 10**6)) < Fraction(1, 10**4)
    assert abs(probe.running_max[-1].mid - Fraction(841471, 10**6)) < Fraction(1, 10**5)
    for earlier, later in zip(probe.running_min, probe.running_min[1:]):
        assert later.hi <= earlier.hi
    summary = probe.summary()
    assert summary["function"] == "sin" and summary["nmax"] == 5


def test_trig_probe_rejects_bad_input():
    with pytest.raises(PreconditionError):
        trig_probe(Rational(1, 1), Rational(0, 1), 5, function="tan")
    with pytest.raises(PreconditionError):
        trig_probe(Rational(1, 1), Rational(0, 1), 0)
