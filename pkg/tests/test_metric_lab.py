import math
from fractions import Fraction

import pytest

from src.congruence import annihilating_pair
from src.errors import PreconditionError
from src.metric_lab import (
    BBTrialSpec,
    DyadicSample,
    binomial_fraction,
    block_event_mass,
    borel_bernstein_trial,
    gauss_kuzmin_mass,
    gauss_measure,
    khintchine_block_trial,
    sample_rng,
    survival_curve,
    uniform_survival,
)
from src.uniform import PsiSpec


def test_gauss_measure():
    assert gauss_measure(0, 1).contains(1)
    assert gauss_measure(Fraction(1, 3), Fraction(1, 3)).hi == 0
    assert abs(gauss_kuzmin_mass(1).mid - Fraction(4150375, 10**7)) < Fraction(1, 10**6)
    assert abs(block_event_mass((1,), 2).mid - Fraction(2630344, 10**7)) < Fraction(1, 10**6)
    with pytest.raises(PreconditionError):
        gauss_measure(Fraction(1, 2), 2)
    with pytest.raises(PreconditionError):
        gauss_kuzmin_mass(0)


def test_gauss_masses_add_up():
    total = gauss_kuzmin_mass(1)
    for k in range(2, 6):
        total = total + gauss_kuzmin_mass(k)
    assert total.overlaps(gauss_measure(Fraction(1, 6), 1))


def test_dyadic_sample_is_reproducible():
    first = DyadicSample(sample_rng(5, 3))
    second = DyadicSample(sample_rng(5, 3))
    assert first.X == second.X
    top = first.mantissa(20)
    first.extend(100)
    assert first.mantissa(20) == top
    assert first.bits == 164
    assert first.enclosure().width == Fraction(1, 2**164)
    with pytest.raises(PreconditionError):
        DyadicSample(sample_rng(5, 3), interval=(1, 1))


def test_dyadic_sample_digits_are_certified():
    sample = DyadicSample(sample_rng(7, 0))
    a0, digits = sample.digits(30)
    assert a0 == 0 and len(digits) == 30
    stream = DyadicSample(sample_rng(7, 0)).stream(30)
    assert stream.digits == tuple(digits)


def test_binomial_fraction():
    assert binomial_fraction(5, 10) == (0.5, math.sqrt(0.025))
    assert all(math.isnan(v) for v in binomial_fraction(0, 0))


def test_khintchine_dirichlet_threshold_always_hits(classical):
    report = khintchine_block_trial(classical, PsiSpec(1, 1, 0), (10, 100), 32, seed=1)
    assert report.fractions["hit"] == (1.0, 0.0)
    assert report.undecided == 0
    gcd_report = khintchine_block_trial(classical, PsiSpec(1, 1, 0), (10, 100), 16, seed=1, require_gcd=True)
    assert gcd_report.fractions["hit"][0] == 1.0


def test_khintchine_convergent_block_is_rare(odd_odd):
    report = khintchine_block_trial(odd_odd, PsiSpec(1, 3, 0), (100, 200), 200, seed=3)
    assert report.fractions["hit"][0] < 0.1
    assert "block_sum" in report.extras
    assert report.to_frame().columns.tolist() == ["statistic", "fraction", "stderr"]


def test_khintchine_outcomes_depend_only_on_sample_index(classical):
    psi = PsiSpec(1, 2, 0)
    long = khintchine_block_trial(classical, psi, (5, 60), 300, seed=9)
    short = khintchine_block_trial(classical, psi, (5, 60), 10, seed=9)
    assert long.outcomes[:10] == short.outcomes
    assert long.outcomes == khintchine_block_trial(classical, psi, (5, 60), 300, seed=9).outcomes


def test_khintchine_preconditions(classical):
    with pytest.raises(PreconditionError):
        khintchine_block_trial(classical, PsiSpec(1, 1, 0), (5, 5), 4, seed=0)
    with pytest.raises(PreconditionError):
        khintchine_block_trial(classical, PsiSpec(1, 0, 1), (5, 10), 4, seed=0)


def test_uniform_survival_dirichlet_always_survives(classical):
    report = uniform_survival(classical, PsiSpec(1, 1, 0), 32, [10, 50], seed=2)
    assert report.outcomes == [0] * 32
    assert report.fractions["survival@10"] == (1.0, 0.0)
    assert report.fractions["survival@50"] == (1.0, 0.0)


def test_uniform_survival_decays_for_small_constant(odd_odd):
    report = uniform_survival(odd_odd, PsiSpec(Fraction(1, 10), 1, 0), 64, [10, 100, 400], seed=4)
    curve = survival_curve(report)
    assert curve["Q"].tolist() == [10, 100, 400]
    survival = curve["survival"].tolist()
    assert survival == sorted(survival, reverse=True)
    assert survival[-1] < 1.0
    for outcome in report.outcomes:
        assert outcome is None or outcome >= 0


def test_uniform_survival_preconditions(classical):
    with pytest.raises(PreconditionError):
        uniform_survival(classical, PsiSpec(1, 3, 0), 4, [10], seed=0)
    with pytest.raises(PreconditionError):
        uniform_survival(classical, PsiSpec(1, 1, 0), 4, [10], seed=0, q_start=20)
    with pytest.raises(PreconditionError):
        uniform_survival(classical, PsiSpec(1, 1, 0), 4, [], seed=0)


def test_bb_spec_validation():
    assert BBTrialSpec(A=2, d=1, c=2, block=(1,)).phi(7) == 7
    assert BBTrialSpec(A=2, d=1, c=2, block=(2,), phi_power=Fraction(1, 2)).phi(10) == 4
    assert BBTrialSpec(A=2, d=0, c=1).target(5, [0, 1]) == ()
    spec = BBTrialSpec(A=3, d=2, c=3, rule="annihilating", b=3)
    assert spec.target(2, [0, 1, 2]) == annihilating_pair(1, 2, 3)
    assert spec.lower_bound() == pytest.approx(math.log(2) / (4 * (2 * 36) ** 4))
    for kwargs in (
        dict(A=0, d=1, c=2, block=(1,)),
        dict(A=2, d=2, c=2, block=(1, 1)),
        dict(A=2, d=1, c=2, block=(3,)),
        dict(A=2, d=1, c=2, block=(1, 1)),
        dict(A=1, d=2, c=3, rule="annihilating", b=2),
        dict(A=2, d=1, c=2, rule="sliding"),
    ):
        with pytest.raises(PreconditionError):
            BBTrialSpec(**kwargs)


def recount_events(spec, seed, index, k_range):
    k1, k2 = k_range
    sample = DyadicSample(sample_rng(seed, index))
    _, digits = sample.digits(spec.c * k2 + spec.d)
    a = [0] + digits
    qs = [0, 1]
    for digit in digits:
        qs.append(digit * qs[-1] + qs[-2])
    hits = []
    for k in range(k1, k2 + 1):
        j = spec.c * k
        if tuple(a[j:j + spec.d]) == spec.target(j, qs) and a[j + spec.d] >= spec.phi(j):
            hits.append(j)
    return hits, qs


def test_borel_bernstein_fixed_block():
    spec = BBTrialSpec(A=2, d=1, c=2, block=(1,))
    report = borel_bernstein_trial(spec, 40, (1, 5), seed=6)
    assert report.undecided == 0
    for index, outcome in enumerate(report.outcomes[:15]):
        assert outcome == recount_events(spec, 6, index, (1, 5))[0]
    union = report.fractions["union"][0]
    assert all(report.fractions[f"event@{j}"][0] <= union for j in (2, 4, 6, 8, 10))
    assert report.extras["union_bound"] == pytest.approx(min(1.0, 2 * sum(1 / j for j in (2, 4, 6, 8, 10))))


def test_borel_bernstein_annihilating_events_zero_denominators():
    spec = BBTrialSpec(A=2, d=2, c=3, rule="annihilating", phi_scale=0, b=2)
    report = borel_bernstein_trial(spec, 60, (1, 4), seed=8)
    seen = 0
    for index, outcome in enumerate(report.outcomes):
        if not outcome:
            continue
        _, qs = recount_events(spec, 8, index, (1, 4))
        for j in outcome:
            seen += 1
            assert qs[j + 2] % 2 == 0
    assert seen > 0
    with pytest.raises(PreconditionError):
        borel_bernstein_trial(spec, 4, (0, 2), seed=8)
