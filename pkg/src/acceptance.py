"""
Acceptance Runner for the approximation toolkit
Fixture-driven pass/fail suites over every engine
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List

import numpy as np

from data.fixtures import FixtureCatalog
from data.random_fixtures import random_streams, random_surd
from src.arith_sums import ArithmeticSums
from src.asymptotic import AsymptoticSearch, trig_probe
from src.cf_core import QuadraticSurd, Rational, check_table_bounds, convergents, eta, eta_from_tail, expand, refine_to
from src.congruence import Constraint
from src.enclosure import Enclosure, floor_fraction, sqrt_enclosure
from src.errors import ApproximationError, PreconditionError
from src.metric_lab import khintchine_block_trial, uniform_survival
from src.orchard import OrchardScene, polya_baseline, visibility
from src.three_distance import gaps_direct, random_instances, verify
from src.uniform import PsiSpec, badly_witness, dirichlet_scan, exponent_probe, witness

logger = logging.getLogger(__name__)

SUITES = ("cf", "threedist", "asymptotic", "uniform", "badly", "sums", "metric", "orchard", "trig")
SEED = 2024


@dataclass
class Criterion:
    name: str
    passed: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class SuiteReport:
    suite: str
    quick: bool
    criteria: List[Criterion]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "quick": self.quick,
            "passed": self.passed,
            "criteria": [c.to_dict() for c in self.criteria],
        }


def log_grid(lo: int, hi: int, count: int) -> List[int]:
    """Distinct integers spaced logarithmically in [lo, hi]"""
    values = np.unique(np.round(np.geomspace(lo, hi, count)).astype(np.int64))
    return [int(v) for v in values]


def unit_slope(spec: QuadraticSurd) -> QuadraticSurd:
    """The surd shifted by an integer into (0, 1)"""
    shift = floor_fraction(refine_to(spec, Fraction(1, 1 << 32)).lo)
    return QuadraticSurd(spec.P - shift * spec.R, spec.D, spec.R)


class AcceptanceRunner:
    """Runs the named suites; quick mode shrinks sample sizes and ranges"""

    def __init__(self, quick: bool = False, workers: int = 1):
        self.quick = quick
        self.workers = workers
        self.catalog = FixtureCatalog()
        self.sums = ArithmeticSums()

    def run(self, suite: str) -> List[SuiteReport]:
        if suite == "all":
            return [self.run_one(name) for name in SUITES]
        return [self.run_one(suite)]

    def run_one(self, suite: str) -> SuiteReport:
        if suite not in SUITES:
            raise PreconditionError(f"unknown acceptance suite '{suite}'")
        handler: Callable[[], List[Criterion]] = getattr(self, f"suite_{suite}")
        logger.info("acceptance suite %s (%s)", suite, "quick" if self.quick else "full")
        try:
            criteria = handler()
        except ApproximationError as exc:
            criteria = [Criterion("suite raised", False, {"error": str(exc)})]
        report = SuiteReport(suite, self.quick, criteria)
        if not report.passed:
            logger.warning("acceptance suite %s failed", suite)
        return report

    # continued fractions

    def suite_cf(self) -> List[Criterion]:
        criteria = []
        for name, spec in self.catalog.named(["sqrt2", "sqrt3", "golden", "one_plus_sqrt7_over_3"]):
            cf = expand(spec)
            table = convergents(cf, 20)
            failures = check_table_bounds(cf, table)
            bracket = []
            for k in range(0, 20):
                value = eta(cf, k, table=table) * table.q(k + 1)
                if not (value.lo >= Fraction(1, 2) and value.hi <= 1):
                    bracket.append(k)
            criteria.append(Criterion(f"identities {name}", not failures and not bracket,
                                      {"failures": failures, "eta_bracket_failures": bracket}))
        count = 20 if self.quick else 200
        bad = []
        for index, stream in enumerate(random_streams(count, SEED)):
            cf = expand(stream)
            table = convergents(cf, stream.horizon)
            failures = check_table_bounds(cf, table)
            for k in range(0, stream.horizon):
                value = eta_from_tail(cf, k, table) * table.q(k + 1)
                if not (value.lo >= Fraction(1, 2) and value.hi <= 1):
                    failures.append(f"eta_bracket@{k}")
            if failures:
                bad.append({"index": index, "failures": failures[:5]})
        criteria.append(Criterion("random digit streams", not bad, {"count": count, "failing": bad}))
        return criteria

    # three distances

    def suite_threedist(self) -> List[Criterion]:
        count = 30 if self.quick else 300
        failed = []
        for index, (xi, Q) in enumerate(random_instances(count, SEED, 5000)):
            ok, report = verify(xi, Q)
            if not ok:
                failed.append({"index": index, "xi": xi.to_text(), "Q": Q, "problems": report["problems"]})
        spectrum = gaps_direct(self.catalog.get_real("golden_conjugate"), 4)
        observed = sorted((round(float(e.length.mid), 3), e.count) for e in spectrum.entries if e.count)
        adversarial, _ = verify(self.catalog.get_real("adversarial"), 2600)
        return [
            Criterion("random instances", not failed, {"count": count, "failed": failed}),
            Criterion("golden conjugate Q=4", observed == [(0.146, 2), (0.236, 3)], {"observed": observed}),
            Criterion("near-equal lengths", adversarial, {"Q": 2600}),
        ]

    # asymptotic hits

    def suite_asymptotic(self) -> List[Criterion]:
        grid = [10**2, 10**3] if self.quick else [10**3, 10**4, 10**5]
        factor = Fraction(1, 4)
        criteria = []
        for xi_name in ("sqrt2", "golden", "sqrt3"):
            xi = self.catalog.get_real(xi_name)
            for c_name in ("odd_odd", "c3412", "c5321"):
                c = self.catalog.constraints[c_name]
                search = AsymptoticSearch(c, workers=self.workers)
                hits = search.brute_hits(xi, factor, grid[-1])
                counts = [sum(1 for h in hits if h.N <= Q) for Q in grid]
                increasing = all(x < y for x, y in zip(counts, counts[1:]))
                certified = all(h.quality.hi <= factor for h in hits)
                criteria.append(Criterion(f"hits {xi_name} {c_name}", increasing and certified,
                                          {"grid": grid, "counts": counts}))
        qmax = 10**4 if self.quick else 10**5
        search = AsymptoticSearch(self.catalog.constraints["classical"])
        value = search.approximation_constant(self.catalog.get_real("golden"), qmax, qmax // 100)
        target = 1 / sqrt_enclosure(Enclosure.exact(5))
        close = value.lo >= target.hi - Fraction(1, 1000) and value.hi <= target.lo + Fraction(1, 1000)
        criteria.append(Criterion("golden constant near 1/sqrt(5)", close,
                                  {"value": value.to_dict(8), "qmax": qmax}))
        return criteria

    # uniform witnesses

    def suite_uniform(self) -> List[Criterion]:
        xi = self.catalog.get_real("sqrt2")
        c = self.catalog.constraints["odd_odd"]
        psi = PsiSpec(1, 1, 0)
        Qs = log_grid(4, 10**3 if self.quick else 10**4, 50)
        bad = []
        for Q in Qs:
            trace = witness(xi, c, Q, psi, M=2)
            ok = (0 <= trace.N <= Q and trace.within_bound and trace.bound_value.hi <= 1024
                  and all(trace.checks.values()))
            if not ok:
                bad.append({"Q": Q, "checks": trace.checks, "bound": trace.bound_value.to_dict(6)})
        constructed = self.catalog.get_real("constructed")
        failing, undecided = dirichlet_scan(constructed, c, psi, 1, 2000 if self.quick else 20000)
        growth = [exponent_probe(constructed, c, Q)[0] for Q in (10**2, 10**3, 10**4)]
        return [
            Criterion("witness sqrt2 (2,2,1,1)", not bad, {"Q_count": len(Qs), "failing": bad}),
            Criterion("constructed stream fails", bool(failing) and not undecided,
                      {"failing_sample": failing[:10], "undecided": len(undecided)}),
            Criterion("exponent grows on constructed stream",
                      all(later.lo > earlier.hi for earlier, later in zip(growth, growth[1:])),
                      {"D_max": [g.to_dict(6) for g in growth]}),
        ]

    def suite_badly(self) -> List[Criterion]:
        c = self.catalog.constraints["odd_odd"]
        Qs = log_grid(2 * c.b, 10**3, 30)
        criteria = []
        for xi_name in ("sqrt2", "golden"):
            xi = self.catalog.get_real(xi_name)
            for alpha in (Rational(0), Rational(1, 3)):
                bad = [Q for Q in Qs if not badly_witness(xi, alpha, c, Q).within_bound]
                criteria.append(Criterion(f"badly {xi_name} alpha={alpha.to_text()}", not bad, {"failing": bad}))
        return criteria

    # arithmetic sums

    def suite_sums(self) -> List[Criterion]:
        qmax = 500 if self.quick else 5000
        x = 10**5
        constant = self.catalog.thresholds["coprime_error_constant"]
        criteria = []
        for a, r in ((2, 1), (3, 2), (4, 1)):
            violations = []
            for q in range(1, qmax + 1):
                if math.gcd(math.gcd(a, r), q) != 1:
                    continue
                error = abs(self.sums.coprime_progression_count(x, q, a, r) - self.sums.coprime_main_term(x, q, a, r))
                if error > constant * a * 2 ** self.sums.sieve.distinct_primes(q):
                    violations.append(q)
            criteria.append(Criterion(f"coprime counts a={a} r={r}", not violations,
                                      {"qmax": qmax, "violations": violations[:10]}))
        Q = 10**5 if self.quick else 10**6
        for u, v in ((1, 0), (2, 0), (2, 1), (4, 2), (6, 3)):
            ratio = Fraction(self.sums.phi_progression_sum(u, v, Q), Q * Q)
            C = self.sums.c_constant(u, v)
            gap = max(abs(ratio - C.lo), abs(ratio - C.hi))
            criteria.append(Criterion(f"totient sum u={u} v={v}", gap <= Fraction(1, 100),
                                      {"ratio": float(ratio), "C": C.to_dict(8)}))
        C10 = self.sums.c_constant(1, 0)
        criteria.append(Criterion("C(1,0) = 3/pi^2", abs(C10.mid - Fraction(30396355, 10**8)) < Fraction(1, 10**8),
                                  {"C": C10.to_dict(10)}))
        c = self.catalog.constraints["odd_odd"]
        counts = [self.sums.regular_system_count(c, (Fraction(0), Fraction(1)), Q) for Q in (200, 400, 800)]
        ratios = [Fraction(y, x) for x, y in zip(counts, counts[1:])]
        low, high = self.catalog.thresholds["regular_growth_low"], self.catalog.thresholds["regular_growth_high"]
        floor = self.catalog.thresholds["regular_density_floor"]
        growth_ok = all(low <= r <= high for r in ratios)
        dense_ok = all(n > floor * Q * Q for n, Q in zip(counts, (200, 400, 800)))
        criteria.append(Criterion("regular system growth", growth_ok and dense_ok,
                                  {"counts": counts, "ratios": [float(r) for r in ratios]}))
        return criteria

    # Monte-Carlo

    def suite_metric(self) -> List[Criterion]:
        c = self.catalog.constraints["odd_odd"]
        samples = 100 if self.quick else 2000
        Q = 10**3 if self.quick else 10**4
        thresholds = self.catalog.thresholds
        dirichlet = uniform_survival(c, PsiSpec(*self.catalog.psi_families["dirichlet"]), samples, [Q], SEED,
                                     workers=self.workers)
        logsq = uniform_survival(c, PsiSpec(*self.catalog.psi_families["log_squared"]), samples, [Q], SEED,
                                 workers=self.workers)
        low = dirichlet.fractions[f"survival@{Q}"][0]
        high = logsq.fractions[f"survival@{Q}"][0]
        ordered = (dirichlet.undecided == 0 and logsq.undecided == 0
                   and low < thresholds["survival_dirichlet_max"] and high > thresholds["survival_log_squared_min"])
        if not self.quick:
            ordered = ordered and high - low >= thresholds["survival_gap_min"]
        criteria = [Criterion("survival dichotomy", ordered, {"Q": Q, "dirichlet": low, "log_squared": high})]

        js = range(6, 9) if self.quick else range(6, 13)
        cubic = PsiSpec(*self.catalog.psi_families["cubic"])
        plain = [khintchine_block_trial(c, cubic, (2**j, 2**(j + 1)), samples, SEED, workers=self.workers) for j in js]
        fractions = [r.fractions["hit"][0] for r in plain]
        decreasing = all(y < x or x == 0 for x, y in zip(fractions, fractions[1:]))
        criteria.append(Criterion("convergent block fractions decrease", decreasing, {"fractions": fractions}))

        divergent = PsiSpec(*self.catalog.psi_families["divergent"])
        floor = thresholds["khintchine_divergent_floor"]
        hits = [khintchine_block_trial(c, divergent, (2**j, 2**(j + 1)), samples, SEED, workers=self.workers)
                for j in js]
        divergent_fractions = [r.fractions["hit"][0] for r in hits]
        criteria.append(Criterion("divergent block fractions stay above floor",
                                  all(f > floor for f in divergent_fractions),
                                  {"fractions": divergent_fractions, "floor": floor}))
        last = 2 ** js[-1]
        gcd = khintchine_block_trial(c, divergent, (last, 2 * last), samples, SEED, require_gcd=True,
                                     workers=self.workers)
        (f1, e1), (f2, e2) = hits[-1].fractions["hit"], gcd.fractions["hit"]
        criteria.append(Criterion("gcd variant agrees", abs(f1 - f2) <= 3 * math.hypot(e1, e2) + 1e-12,
                                  {"plain": f1, "gcd": f2}))
        return criteria

    # orchard

    def suite_orchard(self) -> List[Criterion]:
        c = self.catalog.constraints["odd_odd"]
        depth = 10**3 if self.quick else 10**4
        count = 20 if self.quick else 100
        scene = OrchardScene(c, depth)
        unblocked = []
        for i in range(count):
            slope = unit_slope(random_surd(np.random.default_rng([SEED, i])))
            if visibility(scene, slope).visible:
                unblocked.append(slope.to_text())
        glade = OrchardScene(c, depth, glade=Fraction(5), mode="vertical")
        rational = visibility(glade, Rational(2, 3))
        polya = polya_baseline(Constraint(1, 1, 0, 0), 10)
        return [
            Criterion("irrational slopes blocked", not unblocked, {"count": count, "unblocked": unblocked}),
            Criterion("slope 2/3 visible past the glade", rational.visible, rational.to_dict()),
            Criterion("polya baseline blocked", polya.all_blocked, polya.to_dict()),
        ]

    def suite_trig(self) -> List[Criterion]:
        nmax = 10**3 if self.quick else 10**5
        probe = trig_probe(Rational(1), Rational(0), nmax)
        low, high = probe.running_min[-1], probe.running_max[-1]
        monotone = all(y.hi <= x.hi for x, y in zip(probe.running_min, probe.running_min[1:]))
        extreme = self.quick or (low.hi < Fraction(-99, 100) and high.lo > Fraction(99, 100))
        return [Criterion("running extrema of sin(n)^n", monotone and extreme, probe.summary())]


def run_acceptance(suite: str, quick: bool = False, workers: int = 1) -> List[SuiteReport]:
    return AcceptanceRunner(quick, workers).run(suite)
