from fractions import Fraction

import pytest

from src.cf_core import QuadraticSurd, Rational, refine_to
from src.congruence import Constraint
from src.enclosure import Enclosure
from src.errors import ParseError, PreconditionError, RationalInputError, UnboundedMError
from src.uniform import (
    PsiSpec,
    badly_witness,
    cns_report,
    dirichlet_scan,
    exponent_probe,
    scaled_digit_bound,
    witness,
)

TIGHT = Fraction(1, 2**200)


def dist_to_progression(x: Fraction, a: int, r: int) -> Fraction:
    t = (x - r) % a
    return min(t, a - t)


def running_min_distances(xi, c: Constraint, qmax: int):
    x = refine_to(xi, TIGHT).mid
    best, out = None, {}
    for Q in range(1, qmax + 1):
        if Q % c.b == c.s % c.b and Q >= 1:
            d = dist_to_progression(Q * x, c.a, c.r)
            best = d if best is None else min(best, d)
        out[Q] = best
    return out


def test_psi_spec_parse_and_flags():
    dirichlet = PsiSpec.parse("1,1,0")
    assert dirichlet == PsiSpec(1, 1, 0)
    assert dirichlet.exact and dirichlet.nonincreasing and dirichlet.tilde_nondecreasing
    assert dirichlet.value(4) == Enclosure.exact(Fraction(1, 4))
    assert dirichlet.kappa == 1 and dirichlet.gamma == 1
    assert PsiSpec.parse("1/2,1") == PsiSpec(Fraction(1, 2), 1, 0)
    assert PsiSpec(1, 1, 2).nonincreasing
    assert not PsiSpec(1, 0, 1).nonincreasing
    cubic = PsiSpec(1, 3, 0)
    assert not cubic.tilde_nondecreasing
    assert cubic.gamma == 0
    with pytest.raises(ParseError):
        PsiSpec.parse("1")
    with pytest.raises(ParseError):
        PsiSpec.parse("1,x,0")
    with pytest.raises(PreconditionError):
        PsiSpec(0, 1, 0)


def test_psi_log_value():
    value = PsiSpec(1, 1, 2).value(1)
    assert abs(value.mid - Fraction(172466, 10**5)) < Fraction(1, 10**4)


def test_dirichlet_holds_for_golden(golden):
    failing, undecided = dirichlet_scan(golden, Constraint(1, 1), PsiSpec(1, 1, 0), 1, 500)
    assert failing == [] and undecided == []


def test_dirichlet_scan_matches_reference(sqrt2):
    c = Constraint(1, 1)
    psi = PsiSpec(Fraction(1, 10), 1, 0)
    failing, undecided = dirichlet_scan(sqrt2, c, psi, 1, 300)
    assert undecided == []
    best = running_min_distances(sqrt2, c, 300)
    expected = [Q for Q in range(1, 301) if best[Q] > Fraction(1, 10 * Q)]
    assert failing == expected


def test_dirichlet_scan_rejects_increasing_psi(sqrt2):
    with pytest.raises(PreconditionError):
        dirichlet_scan(sqrt2, Constraint(1, 1), PsiSpec(1, 0, 1), 1, 10)
    with pytest.raises(PreconditionError):
        dirichlet_scan(sqrt2, Constraint(1, 1), PsiSpec(1, 1, 0), 5, 4)


def test_constructed_stream_breaks_dirichlet(catalog, odd_odd):
    failing, undecided = dirichlet_scan(catalog.get_real("constructed"), odd_odd, PsiSpec(1, 1, 0), 1, 2000)
    assert failing
    assert undecided == []


def test_exponent_probe_matches_reference(golden):
    c = Constraint(1, 1)
    value, at = exponent_probe(golden, c, 300)
    best = running_min_distances(golden, c, 300)
    reference = max(Q * best[Q] for Q in best)
    assert value.lo <= reference + Fraction(1, 10**9)
    assert reference - Fraction(1, 10**9) <= value.hi
    assert 1 <= at <= 300
    with pytest.raises(PreconditionError):
        exponent_probe(golden, Constraint(5, 7, 0, 6), 5)


def test_exponent_grows_on_constructed_stream(catalog, odd_odd):
    growth = [exponent_probe(catalog.get_real("constructed"), odd_odd, Q)[0] for Q in (10**2, 10**3, 10**4)]
    assert all(later.lo > earlier.hi for earlier, later in zip(growth, growth[1:]))


def test_cns_report_sqrt2(sqrt2, odd_odd):
    report = cns_report(sqrt2, odd_odd, PsiSpec(1, 1, 0), 10, M=2)
    assert report.reports[0].conditions_met
    assert not report.reports[1].conditions_met
    assert report.minimal_M == 2
    assert not report.unbounded
    assert report.Q0 == 4


def test_cns_report_constructed(catalog, odd_odd):
    report = cns_report(catalog.get_real("constructed"), odd_odd, PsiSpec(1, 1, 0), 10)
    assert report.unbounded
    assert report.to_dict()["minimal_M"] == "unbounded at horizon"
    with pytest.raises(PreconditionError):
        cns_report(catalog.get_real("sqrt2"), odd_odd, PsiSpec(1, 1, 0), 0)


@pytest.mark.parametrize("Q", [4, 10, 57, 100, 999])
def test_witness_sqrt2(sqrt2, odd_odd, Q):
    trace = witness(sqrt2, odd_odd, Q, PsiSpec(1, 1, 0), M=2)
    assert 0 <= trace.N <= Q
    assert trace.N % 2 == 1 and trace.numerator % 2 == 1
    assert trace.within_bound
    assert all(trace.checks.values()), trace.checks
    assert trace.to_dict()["M"] == "2"


def test_witness_classical_computes_M(golden, classical):
    trace = witness(golden, classical, 100, PsiSpec(1, 1, 0))
    assert trace.conditions_met
    assert trace.M == 1
    assert all(trace.checks.values())


@pytest.mark.parametrize("kmax", [6, 12])
def test_cns_report_surd_is_bounded_by_its_period(odd_odd, kmax):
    # sqrt(19) = [4; 2, 1, 3, 1, 2, 8]: failing digits rise 1 -> 2 -> 8 but stay periodic
    report = cns_report(QuadraticSurd(0, 19, 1), odd_odd, PsiSpec(1, 1, 0), kmax)
    assert not report.unbounded
    assert report.minimal_M == 8


@pytest.mark.parametrize(
    "radicand, M, Qs",
    [(3, 50, range(4, 8)), (7, 50, range(4, 8)), (19, 8, range(4, 12)), (19, None, range(4, 12))],
)
def test_witness_first_convergent_decides(odd_odd, radicand, M, Qs):
    xi = QuadraticSurd(0, radicand, 1)
    for Q in Qs:
        trace = witness(xi, odd_odd, Q, PsiSpec(1, 1, 0), M=M)
        assert 0 <= trace.N <= Q
        assert trace.within_bound
        assert all(trace.checks.values()), (Q, trace.checks)


def test_witness_preconditions(sqrt2, odd_odd, catalog):
    psi = PsiSpec(1, 1, 0)
    with pytest.raises(PreconditionError):
        witness(sqrt2, odd_odd, 3, psi)
    with pytest.raises(RationalInputError):
        witness(Rational(2, 3), odd_odd, 10, psi)
    with pytest.raises(PreconditionError):
        witness(sqrt2, odd_odd, 10, PsiSpec(1, 3, 0), M=1)
    with pytest.raises(UnboundedMError):
        witness(catalog.get_real("constructed"), odd_odd, 10**6, psi)


def test_scaled_digit_bound(sqrt2):
    assert scaled_digit_bound(sqrt2, Constraint(2, 2, 1, 1)) == (2, False)
    assert scaled_digit_bound(sqrt2, Constraint(1, 2)) == (4, False)


@pytest.mark.parametrize("alpha", [Rational(0), Rational(1, 3)])
@pytest.mark.parametrize("Q", [4, 50, 999])
def test_badly_witness_sqrt2(sqrt2, odd_odd, alpha, Q):
    result = badly_witness(sqrt2, alpha, odd_odd, Q)
    assert result.M == 2 and result.constant == 32
    assert result.within_bound
    assert result.N % 2 == 1 and result.N <= Q


def test_badly_witness_allows_zero_denominator(golden, classical):
    result = badly_witness(golden, Rational(0), classical, 10)
    assert result.N == 0
    assert result.distance.hi == 0
    with pytest.raises(PreconditionError):
        badly_witness(golden, Rational(0), Constraint(2, 2, 1, 1), 3)
