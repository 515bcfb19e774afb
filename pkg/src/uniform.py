"""
Uniform Approximation Engine for the approximation toolkit
Dirichlet-type scans, the digit-growth classification, the constructive witness and the inhomogeneous badly-approximable witness
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.cf_core import (
    DigitStream,
    GreedyDecomp,
    QuadraticSurd,
    Rational,
    RealSpec,
    convergents,
    eta,
    expand,
    greedy_decompose,
    phi_ratio,
    refine_to,
    require_irrational,
    table_until,
)
from src.config import default_precision_cap
from src.congruence import Constraint, ext_gcd, pair_solve, uniform_conditions_met
from src.enclosure import (
    Enclosure,
    ceil_fraction,
    e_enclosure,
    floor_fraction,
    log_enclosure,
    power_enclosure,
)
from src.errors import ParseError, PrecisionCapError, PreconditionError, UnboundedMError
from src.lattice_scan import ResidueScan, admissible_denominators, scan_bits

logger = logging.getLogger(__name__)

PSI_PRECISION = 128
# log grid 2**(j/4), j < GRID_STEPS, for heuristic suprema
GRID_STEPS = 4 * 64


@dataclass(frozen=True)
class PsiSpec:
    """Psi(Q) = cc * log(Q + e)**beta * Q**(-mu)"""

    cc: Fraction
    mu: Fraction = Fraction(1)
    beta: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("cc", "mu", "beta"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.cc <= 0:
            raise PreconditionError("psi needs a positive constant cc")

    @classmethod
    def parse(cls, text: str) -> "PsiSpec":
        """'cc,mu,beta' with rational entries"""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) not in (2, 3):
            raise ParseError(f"cannot parse psi '{text}': expected cc,mu,beta")
        try:
            values = [Fraction(p) for p in parts]
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse psi '{text}': {exc}") from exc
        return cls(*values)

    @property
    def exact(self) -> bool:
        return self.beta == 0 and self.mu.denominator == 1

    def value(self, Q, prec: int = PSI_PRECISION) -> Enclosure:
        Q = Fraction(Q)
        if Q <= 0:
            raise PreconditionError("psi is evaluated at Q > 0")
        if self.exact:
            return Enclosure.exact(self.cc * Q ** (-int(self.mu)))
        if self.mu.denominator == 1:
            power = Enclosure.exact(Q ** (-int(self.mu)))
        else:
            power = power_enclosure(Enclosure.exact(Q), -self.mu, prec)
        if self.beta == 0:
            return power * self.cc
        logarithm = log_enclosure(e_enclosure(prec) + Q, prec)
        return power_enclosure(logarithm, self.beta, prec) * power * self.cc

    def tilde(self, Q, prec: int = PSI_PRECISION) -> Enclosure:
        """Q * Psi(Q)"""
        return self.value(Q, prec) * Fraction(Q)

    @property
    def nonincreasing(self) -> bool:
        # (Q+e)log(Q+e)/Q stays above 3 on [1, inf)
        if self.beta <= 0 and self.mu >= 0:
            return True
        return self.beta > 0 and self.mu > 0 and self.beta <= 3 * self.mu

    @property
    def tilde_nondecreasing(self) -> bool:
        nu = 1 - self.mu
        if self.beta >= 0 and nu >= 0:
            return True
        return self.beta < 0 and nu > 0 and -self.beta <= 3 * nu

    def _grid(self) -> List[Fraction]:
        return [Fraction(2 ** (j / 4)) for j in range(GRID_STEPS)]

    def _tail_power(self, base: int) -> Fraction:
        """Upper bound for base**(mu - 1)"""
        exponent = self.mu - 1
        if exponent.denominator == 1:
            return Fraction(base) ** int(exponent)
        return power_enclosure(Enclosure.exact(base), exponent, PSI_PRECISION).hi

    def _grid_sup(self, ratio: Callable[[Fraction], Enclosure], tail: Fraction, what: str) -> Fraction:
        logger.warning("%s for %s is a grid supremum, not a proof", what, self.to_text())
        best = max(ratio(Q).hi for Q in self._grid())
        return max(Fraction(1), best, tail)

    @cached_property
    def kappa(self) -> Fraction:
        """Psi~(Q) <= kappa * Psi~(2Q)"""
        if self.tilde_nondecreasing:
            return Fraction(1)
        return self._grid_sup(lambda Q: self.tilde(Q) / self.tilde(2 * Q), self._tail_power(2), "kappa")

    def eta(self, ab: int) -> Fraction:
        """Psi~(Q) <= eta * Psi~(ab(Q+1))"""
        if self.tilde_nondecreasing:
            return Fraction(1)
        return self._grid_sup(lambda Q: self.tilde(Q) / self.tilde(ab * (Q + 1)), self._tail_power(ab), "eta")

    @cached_property
    def gamma(self) -> Fraction:
        """Lower bound for inf Psi~ on [1, inf); 0 when Psi~ decays"""
        if self.tilde_nondecreasing:
            return self.tilde(1).lo
        if self.mu > 1 or (self.mu == 1 and self.beta < 0):
            return Fraction(0)
        logger.warning("gamma for %s is a grid infimum, not a proof", self.to_text())
        return min(self.tilde(Q).lo for Q in self._grid())

    def to_text(self) -> str:
        return f"{self.cc},{self.mu},{self.beta}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "text": self.to_text(),
            "cc": str(self.cc),
            "mu": str(self.mu),
            "beta": str(self.beta),
            "nonincreasing": self.nonincreasing,
            "tilde_nondecreasing": self.tilde_nondecreasing,
        }


@dataclass
class DistanceProfile:
    """Running minimum of scale * dist(N xi, aZ + r) over admissible N <= Q"""

    Q: np.ndarray
    min_lo: np.ndarray
    min_hi: np.ndarray
    defined: np.ndarray
    scale: int


def distance_profile(scan: ResidueScan, c: Constraint, qmin: int, qmax: int, bits: int) -> DistanceProfile:
    Qs = np.arange(qmin, qmax + 1, dtype=np.int64)
    N = admissible_denominators(c.b, c.s, qmax)
    if N.size == 0:
        empty = np.zeros(Qs.size, dtype=np.int64)
        return DistanceProfile(Qs, empty, empty, np.zeros(Qs.size, dtype=bool), 1)
    lo, hi, scale = scan.bounds(N, bits)
    acc_lo = np.minimum.accumulate(lo)
    acc_hi = np.minimum.accumulate(hi)
    index = np.searchsorted(N, Qs, side="right") - 1
    defined = index >= 0
    index = np.maximum(index, 0)
    return DistanceProfile(Qs, acc_lo[index], acc_hi[index], defined, scale)


def dirichlet_scan(
    xi: RealSpec, c: Constraint, psi: PsiSpec, qmin: int, qmax: int, cap_bits: Optional[int] = None
) -> Tuple[List[int], List[int]]:
    """(failing, undecided): integer Q with no admissible N <= Q inside Psi(Q)"""
    if not psi.nonincreasing:
        raise PreconditionError(f"psi {psi.to_text()} is not nonincreasing")
    if qmin < 1 or qmax < qmin:
        raise PreconditionError("dirichlet scan needs 1 <= qmin <= qmax")
    cap_bits = cap_bits or default_precision_cap()
    scan = ResidueScan(xi, c.a, c.r, cap_bits=cap_bits)
    bits = scan_bits(qmax, psi.value(qmax).lo)
    logger.info("dirichlet scan of %s on [%d, %d] at %d bits", c.to_text(), qmin, qmax, bits)

    pending = list(range(qmin, qmax + 1))
    failing: List[int] = []
    while True:
        profile = distance_profile(scan, c, qmin, qmax, bits)
        prec = max(PSI_PRECISION, bits)
        undecided: List[int] = []
        for Q in pending:
            i = Q - qmin
            if not profile.defined[i]:
                failing.append(Q)
                continue
            bound = psi.value(Q, prec)
            low, high = int(profile.min_lo[i]), int(profile.min_hi[i])
            if low > floor_fraction(bound.hi * profile.scale):
                failing.append(Q)
            elif high > floor_fraction(bound.lo * profile.scale):
                undecided.append(Q)
        if not undecided or (scan.exact and psi.exact):
            break
        if bits >= cap_bits:
            logger.warning("dirichlet scan: %d Q undecided at the %d-bit cap", len(undecided), cap_bits)
            break
        logger.debug("dirichlet scan: %d undecided, %d -> %d bits", len(undecided), bits, 2 * bits)
        pending = undecided
        bits = min(2 * bits, cap_bits)
    failing.sort()
    return failing, sorted(undecided)


def exponent_probe(xi: RealSpec, c: Constraint, qmax: int, cap_bits: Optional[int] = None) -> Tuple[Enclosure, int]:
    """max over Q <= qmax of Q * min_{N <= Q} dist(N xi, aZ + r), with its argmax"""
    scan = ResidueScan(xi, c.a, c.r, cap_bits=cap_bits or default_precision_cap())
    bits = scan_bits(qmax, Fraction(1, qmax)) + 16
    profile = distance_profile(scan, c, 1, qmax, bits)
    if not profile.defined.any():
        raise PreconditionError(f"no admissible denominator up to {qmax}")
    keep = profile.defined
    Qs = np.asarray(profile.Q[keep], dtype=object)
    D_lo = Qs * np.asarray(profile.min_lo[keep], dtype=object)
    D_hi = Qs * np.asarray(profile.min_hi[keep], dtype=object)
    best = int(np.argmax(D_lo))
    value = Enclosure(Fraction(int(D_lo.max()), profile.scale), Fraction(int(D_hi.max()), profile.scale))
    logger.info("exponent probe to %d: %s at Q=%d", qmax, value, int(Qs[best]))
    return value, int(Qs[best])


@dataclass(frozen=True)
class IndexReport:
    k: int
    conditions_met: bool
    a_k: int
    q_k: int
    ratio: Enclosure

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "conditions_met": self.conditions_met,
            "a_k": str(self.a_k),
            "q_k": str(self.q_k),
            "ratio": self.ratio.to_dict(),
        }


@dataclass
class CnsReport:
    """Per-index classification; minimal_M is None when it looks unbounded at the horizon"""

    reports: List[IndexReport]
    minimal_M: Optional[int]
    M: Optional[int] = None
    Q0: Optional[int] = None

    @property
    def unbounded(self) -> bool:
        return self.minimal_M is None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "minimal_M": "unbounded at horizon" if self.minimal_M is None else str(self.minimal_M),
            "M": None if self.M is None else str(self.M),
            "Q0": None if self.Q0 is None else str(self.Q0),
        }


def _looks_unbounded(ratios: List[Enclosure]) -> bool:
    if len(ratios) < 3:
        return False
    last = ratios[-3:]
    rising = last[0].hi < last[1].lo and last[1].hi < last[2].lo
    record = all(r.hi < last[2].lo for r in ratios[:-1])
    return rising and record


def cns_report(xi: RealSpec, c: Constraint, psi: PsiSpec, kmax: int, M: Optional[int] = None) -> CnsReport:
    """Check a_k <= M * Psi~(q_k) on every k <= kmax where the conditions fail"""
    if kmax < 1:
        raise PreconditionError("cns report needs kmax >= 1")
    table = convergents(expand(xi), kmax)
    reports = []
    for k in range(1, kmax + 1):
        a_k, q_k = table.digit(k), table.q(k)
        reports.append(
            IndexReport(
                k=k,
                conditions_met=uniform_conditions_met(k, table, c),
                a_k=a_k,
                q_k=q_k,
                ratio=Enclosure.exact(a_k) / psi.tilde(q_k),
            )
        )
    failing = [r for r in reports if not r.conditions_met]
    if not failing:
        minimal = 0
    elif isinstance(xi, (Rational, QuadraticSurd)) and psi.tilde_nondecreasing:
        # bounded digits and psi~ >= gamma > 0: the exact maximum is final
        minimal = max(ceil_fraction(r.ratio.hi) for r in failing)
    elif _looks_unbounded([r.ratio for r in failing]):
        logger.warning("a_k / psi~(q_k) keeps growing on failing indices up to k=%d", kmax)
        minimal = None
    else:
        minimal = max(ceil_fraction(r.ratio.hi) for r in failing)

    Q0 = None
    if M is not None:
        above = [r.k for r in failing if r.ratio.hi > M]
        k0 = above[-1] + 1 if above else 1
        if k0 - 1 > table.n:
            table = convergents(expand(xi), k0 - 1)
        Q0 = c.ab * (table.q(k0 - 1) + table.q(k0 - 2))
    return CnsReport(reports, minimal, M, Q0)


@dataclass
class WitnessTrace:
    """One run of the constructive argument at a given Q"""

    Q: Fraction
    Qprime: int
    decomp: GreedyDecomp
    conditions_met: bool
    d: int
    u: int
    v: int
    m: int
    n: int
    N: int
    numerator: int
    distance: Enclosure
    bound_value: Enclosure
    constant: Fraction
    M: int
    within_bound: bool
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.decomp.k

    def to_dict(self) -> Dict[str, Any]:
        return {
            "Q": str(self.Q),
            "Qprime": str(self.Qprime),
            "decomp": self.decomp.to_dict(),
            "conditions_met": self.conditions_met,
            "d": str(self.d),
            "u": str(self.u),
            "v": str(self.v),
            "m": str(self.m),
            "n": str(self.n),
            "N": str(self.N),
            "numerator": str(self.numerator),
            "distance": self.distance.to_dict(),
            "bound_value": self.bound_value.to_dict(),
            "constant": str(self.constant),
            "M": str(self.M),
            "within_bound": self.within_bound,
            "checks": dict(self.checks),
        }


def _solve_homogeneous_case(c: Constraint, p: int, q: int) -> Tuple[int, int, int, int]:
    """(u, v, m, n) with u = 0 and v p = am + r, v q = bn + s"""
    solution = pair_solve(p, c.r, c.a, q, c.s, c.b)
    if solution is None:
        raise PreconditionError(f"no v with v*{p} = r (mod a) and v*{q} = s (mod b)")
    v = solution.x0 or solution.modulus
    return 0, v, (v * p - c.r) // c.a, (v * q - c.s) // c.b


def _solve_shifted_case(c: Constraint, p: int, q: int, sigma: int, d: int) -> Tuple[int, int, int]:
    """(u, m, n) with a q m - b p n = sigma*u - (r q - s p) and 0 <= n < a q / d"""
    offset = c.r * q - c.s * p
    u = (sigma * offset) % d
    target = sigma * u - offset
    g, x, y = ext_gcd(c.a * q, -c.b * p)
    m0, n0 = x * (target // g), y * (target // g)
    period_n = c.a * q // g
    n = n0 % period_n
    t = (n0 - n) // period_n
    m = m0 + (-c.b * p // g) * t
    return u, m, n


def witness(
    xi: RealSpec,
    c: Constraint,
    Q,
    psi: PsiSpec,
    M: Optional[int] = None,
    cap_bits: Optional[int] = None,
) -> WitnessTrace:
    """Build (m, n) with 0 <= bn+s <= Q and |xi(bn+s) - (am+r)| <= C * Psi(Q)"""
    Q = Fraction(Q)
    if not psi.nonincreasing:
        raise PreconditionError(f"psi {psi.to_text()} is not nonincreasing")
    if Q < c.ab:
        raise PreconditionError(f"witness needs Q >= ab = {c.ab}, got {Q}")
    require_irrational(xi)
    cap_bits = cap_bits or default_precision_cap()
    cf = expand(xi)
    Qprime = floor_fraction(Q / c.ab)
    table = table_until(cf, Qprime)
    decomp = greedy_decompose(cf, Qprime, table)
    k = decomp.k
    if table.n < k:
        table = convergents(cf, k)

    if M is None:
        report = cns_report(xi, c, psi, k)
        if report.minimal_M is None:
            raise UnboundedMError(f"no finite M bounds a_j / psi~(q_j) for j <= {k}")
        M = report.minimal_M
    M = max(M, 1)
    gamma = psi.gamma
    if gamma <= 0:
        raise PreconditionError(f"psi~ for {psi.to_text()} has infimum 0")
    constant = 8 * c.ab**2 * psi.kappa * psi.eta(c.ab) * max(Fraction(4 * M), 1 / gamma)

    p1, q1 = table.p(k - 1), table.q(k - 1)
    p2, q2 = table.p(k - 2), table.q(k - 2)
    sigma = 1 if (k - 1) % 2 == 0 else -1
    d = math.gcd(c.b * p1, c.a * q1)
    conditions_met = uniform_conditions_met(k, table, c)
    if conditions_met:
        u, v, m, n = _solve_homogeneous_case(c, p1, q1)
    else:
        u, m, n = _solve_shifted_case(c, p1, q1, sigma, d)
        v = sigma * ((c.b * n + c.s) * p2 - (c.a * m + c.r) * q2)
    numerator, N = c.a * m + c.r, c.b * n + c.s

    checks: Dict[str, bool] = {
        "congruence": (u - sigma * (c.r * q1 - c.s * p1)) % d == 0,
        "u_range": 0 <= u <= c.ab,
        "reconstruction": (
            sigma * (numerator * q1 - N * p1) == u and sigma * (N * p2 - numerator * q2) == v
        ),
        "N_range": 0 <= N <= Q,
    }

    bits = 64
    while True:
        precision = Fraction(1, 1 << bits)
        xi_enc = refine_to(xi, precision / max(N, 1))
        distance = abs(xi_enc * N - numerator)
        bound_value = distance / psi.value(Q, max(PSI_PRECISION, bits))
        phi = phi_ratio(cf, k - 1, precision, table)
        eta_prev = eta(cf, k - 2, precision, table)
        form = abs(phi * v + u)
        verdicts = {
            "within_bound": _three_valued(bound_value.hi <= constant, bound_value.lo > constant),
            "sandwich_lower": _three_valued((form / (2 * q1)).hi < distance.lo, (form / (2 * q1)).lo >= distance.hi),
            "sandwich_upper": _three_valued(distance.hi <= (form / q1).lo, distance.lo > (form / q1).hi),
            "distance_identity": distance.overlaps(eta_prev * form),
        }
        if k <= 1:
            # eta_{-1} q_0 = 1 exactly, so the upper side is the distance identity itself
            verdicts["sandwich_upper"] = verdicts["distance_identity"]
        if u != 0:
            verdicts["form_below_4ab"] = _three_valued(form.hi < 4 * c.ab, form.lo >= 4 * c.ab)
        if all(value is not None for value in verdicts.values()):
            break
        if bits >= cap_bits:
            raise PrecisionCapError(f"indeterminate sign in witness checks at Q={Q} after {bits} bits")
        logger.debug("witness checks undecided at %d bits", bits)
        bits = min(2 * bits, cap_bits)

    within_bound = verdicts.pop("within_bound")
    checks.update(verdicts)
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning("witness at Q=%s fails %s", Q, ", ".join(failed))
    return WitnessTrace(
        Q=Q,
        Qprime=Qprime,
        decomp=decomp,
        conditions_met=conditions_met,
        d=d,
        u=u,
        v=v,
        m=m,
        n=n,
        N=N,
        numerator=numerator,
        distance=distance,
        bound_value=bound_value,
        constant=constant,
        M=M,
        within_bound=within_bound,
        checks=checks,
    )


def _three_valued(yes: bool, no: bool) -> Optional[bool]:
    if yes:
        return True
    if no:
        return False
    return None


@dataclass(frozen=True)
class BadlyWitness:
    """Best admissible (m, n) at Q for |xi(bn+s) - (am+r) + alpha|"""

    m: int
    n: int
    N: int
    numerator: int
    distance: Enclosure
    bound_value: Enclosure
    constant: int
    M: int
    surrogate: bool
    within_bound: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": str(self.m),
            "n": str(self.n),
            "N": str(self.N),
            "numerator": str(self.numerator),
            "distance": self.distance.to_dict(),
            "bound_value": self.bound_value.to_dict(),
            "constant": str(self.constant),
            "M": str(self.M),
            "surrogate": self.surrogate,
            "within_bound": self.within_bound,
        }


def scaled_digit_bound(xi: RealSpec, c: Constraint) -> Tuple[int, bool]:
    """(max partial quotient a_k, k >= 1, of b xi / a; surrogate flag)"""
    scaled = xi.scaled(c.b, c.a)
    require_irrational(scaled)
    cf = expand(scaled)
    digits = list(cf.head) + list(cf.period)
    if not digits:
        raise PreconditionError(f"no partial quotients known for {scaled.to_text()}")
    return max(digits), isinstance(scaled, DigitStream) and scaled.surrogate


def badly_witness(
    xi: RealSpec,
    alpha: RealSpec,
    c: Constraint,
    Q,
    M: Optional[int] = None,
    cap_bits: Optional[int] = None,
) -> BadlyWitness:
    """Minimise |xi N - (am+r) + alpha| over admissible 0 <= N <= Q and compare with 2ab(M+2)/Q"""
    Q = Fraction(Q)
    if Q < 2 * c.b:
        raise PreconditionError(f"badly witness needs Q >= 2b = {2 * c.b}, got {Q}")
    surrogate = False
    if M is None:
        M, surrogate = scaled_digit_bound(xi, c)
    constant = 2 * c.ab * (M + 2)
    cap_bits = cap_bits or default_precision_cap()
    qmax = floor_fraction(Q)
    denominators = admissible_denominators(c.b, c.s, qmax)
    if c.s == 0:
        denominators = np.concatenate([np.zeros(1, dtype=np.int64), denominators])
    scan = ResidueScan(xi, c.a, c.r, alpha, cap_bits=cap_bits)
    bits = scan_bits(qmax, Fraction(1, 4 * qmax))
    while True:
        _, dist_hi, _ = scan.bounds(denominators, bits)
        N = int(denominators[int(np.argmin(dist_hi))])
        value = scan.value(N, bits)
        m = round((value.mid - c.r) / c.a)
        distance = scan.error(N, m, bits)
        bound_value = distance * Q
        verdict = _three_valued(bound_value.hi <= constant, bound_value.lo > constant)
        if verdict is not None:
            break
        if bits >= cap_bits:
            raise PrecisionCapError(f"indeterminate sign in badly witness at Q={Q} after {bits} bits")
        bits = min(2 * bits, cap_bits)
    return BadlyWitness(
        m=m,
        n=(N - c.s) // c.b,
        N=N,
        numerator=c.a * m + c.r,
        distance=distance,
        bound_value=bound_value,
        constant=constant,
        M=M,
        surrogate=surrogate,
        within_bound=verdict,
    )
