"""
Continued Fraction Core for the approximation toolkit
Exact expansions, convergents, eta/phi quantities, cylinders and greedy decompositions
"""
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from src.config import default_precision_cap
from src.enclosure import Enclosure, bits_for_width, floor_fraction
from src.errors import (
    ApproximationError,
    HorizonError,
    ParseError,
    PreconditionError,
    RationalInputError,
)

logger = logging.getLogger(__name__)

_SURD_PATTERN = re.compile(
    r"^\(\s*(?P<P>[+-]?\d+)\s*(?P<sign>[+-])\s*sqrt\(\s*(?P<D>\d+)\s*\)\s*\)\s*/\s*(?P<R>[+-]?\d+)$"
)
_SQRT_PATTERN = re.compile(r"^sqrt\(\s*(?P<D>\d+)\s*\)$")


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class Rational:
    """p/q stored reduced with q >= 1"""

    p: int
    q: int = 1

    def __post_init__(self):
        if self.q == 0:
            raise PreconditionError("rational with zero denominator")
        value = Fraction(self.p, self.q)
        object.__setattr__(self, "p", value.numerator)
        object.__setattr__(self, "q", value.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def scaled(self, b: int, a: int) -> "Rational":
        return Rational(b * self.p, a * self.q)

    def to_text(self) -> str:
        return f"rat:{self.p}/{self.q}"


@dataclass(frozen=True)
class QuadraticSurd:
    """(P + sqrt(D)) / R with D positive and not a perfect square"""

    P: int
    D: int
    R: int = 1

    def __post_init__(self):
        if self.R == 0:
            raise PreconditionError("quadratic surd with zero denominator")
        if self.D <= 0:
            raise PreconditionError("quadratic surd needs a positive discriminant")
        if is_square(self.D):
            raise RationalInputError(f"rational input: D={self.D} is a perfect square")

    def scaled(self, b: int, a: int) -> "QuadraticSurd":
        return QuadraticSurd(b * self.P, b * b * self.D, a * self.R)

    def to_text(self) -> str:
        return f"surd:({self.P}+sqrt({self.D}))/{self.R}"


@dataclass(frozen=True)
class DigitStream:
    """[a0; a1, ..., a_h] known up to the horizon h = len(digits)"""

    a0: int
    digits: Tuple[int, ...] = ()
    surrogate: bool = False

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        if any(d < 1 for d in digits):
            raise PreconditionError("digit stream partial quotients must be >= 1")
        object.__setattr__(self, "digits", digits)

    @property
    def horizon(self) -> int:
        return len(self.digits)

    def scaled(self, b: int, a: int) -> "DigitStream":
        lo, hi = cylinder(self.a0, self.digits).closure()
        a0, digits = certified_digits(lo * b / a, hi * b / a)
        logger.warning("digit stream scaled by %d/%d: surrogate keeps %d certified digits", b, a, len(digits))
        return DigitStream(a0, tuple(digits), surrogate=True)

    def to_text(self) -> str:
        return f"digits:{self.a0};" + ",".join(str(d) for d in self.digits)


RealSpec = Union[Rational, QuadraticSurd, DigitStream]


def parse_real(text: str) -> RealSpec:
    """Parse 'rat:p/q', 'surd:(P+sqrt(D))/R' or 'digits:a0;a1,a2,...'"""
    if ":" not in text:
        raise ParseError(f"cannot parse real '{text}': expected rat:, surd: or digits: prefix")
    kind, body = text.split(":", 1)
    kind = kind.strip().lower()
    body = body.strip()
    try:
        if kind == "rat":
            if "/" in body:
                p, q = body.split("/", 1)
                return Rational(int(p), int(q))
            return Rational(int(body), 1)
        if kind == "surd":
            match = _SQRT_PATTERN.match(body)
            if match:
                return QuadraticSurd(0, int(match["D"]), 1)
            match = _SURD_PATTERN.match(body)
            if not match:
                raise ParseError(f"cannot parse surd '{body}': expected (P+sqrt(D))/R")
            P, D, R = int(match["P"]), int(match["D"]), int(match["R"])
            if match["sign"] == "-":
                P, R = -P, -R
            return QuadraticSurd(P, D, R)
        if kind == "digits":
            head, _, tail = body.partition(";")
            digits = tuple(int(d) for d in tail.split(",") if d.strip())
            return DigitStream(int(head), digits)
    except ValueError as exc:
        raise ParseError(f"cannot parse real '{text}': {exc}") from exc
    raise ParseError(f"unknown real kind '{kind}'")


@dataclass(frozen=True)
class ContinuedFraction:
    """Expansion [a0; head..., (period)...] of a RealSpec"""

    a0: int
    head: Tuple[int, ...] = ()
    period: Tuple[int, ...] = ()
    terminating: bool = False
    source: Optional[RealSpec] = field(default=None, compare=False)

    @property
    def horizon(self) -> Optional[int]:
        """Largest valid index, or None for an eventually periodic expansion"""
        if self.period:
            return None
        return len(self.head)

    @property
    def is_irrational(self) -> bool:
        return not self.terminating

    def digit(self, k: int) -> int:
        if k == 0:
            return self.a0
        if k < 0:
            raise PreconditionError("partial quotients are indexed from 0")
        if k <= len(self.head):
            return self.head[k - 1]
        if self.period:
            return self.period[(k - 1 - len(self.head)) % len(self.period)]
        if self.terminating:
            raise HorizonError(f"index {k} beyond the end of a terminating expansion (last index {len(self.head)})")
        raise HorizonError(f"index {k} beyond digit-stream horizon {len(self.head)}")

    def digits(self, n: int) -> List[int]:
        """a_1 .. a_n"""
        return [self.digit(k) for k in range(1, n + 1)]

    def check_index(self, k: int) -> None:
        horizon = self.horizon
        if horizon is not None and k > horizon:
            raise HorizonError(f"index {k} beyond horizon {horizon}")

    def table(self, n: int) -> "ConvergentTable":
        return convergents(self, n)

    def to_dict(self) -> dict:
        return {
            "a0": str(self.a0),
            "head": [str(d) for d in self.head],
            "period": [str(d) for d in self.period],
            "terminating": self.terminating,
            "horizon": self.horizon,
        }


def expand_rational(p: int, q: int) -> ContinuedFraction:
    """Euclidean algorithm; the last digit is >= 2 unless the expansion is [a0]"""
    if q < 1:
        raise PreconditionError("expand_rational needs q >= 1")
    value = Fraction(p, q)
    num, den = value.numerator, value.denominator
    a0, num = divmod(num, den)
    digits = []
    while num:
        num, den = den, num
        digit, num = divmod(num, den)
        digits.append(digit)
    return ContinuedFraction(a0, tuple(digits), terminating=True, source=Rational(value.numerator, value.denominator))


def expand_surd(P: int, D: int, R: int) -> ContinuedFraction:
    """Periodic expansion of (P + sqrt(D)) / R"""
    source = QuadraticSurd(P, D, R)
    if (D - P * P) % R != 0:
        P, D, R = P * abs(R), D * R * R, R * abs(R)
    root = math.isqrt(D)

    def step(P: int, R: int) -> Tuple[int, int, int]:
        if R > 0:
            a = (P + root) // R
        else:
            a = -((P + root) // -R) - 1
        P_next = a * R - P
        return a, P_next, (D - P_next * P_next) // R

    a0, P, R = step(P, R)
    digits: List[int] = []
    seen = {}
    index = 1
    while (P, R) not in seen:
        seen[(P, R)] = index
        digit, P, R = step(P, R)
        digits.append(digit)
        index += 1
    start = seen[(P, R)]
    head = tuple(digits[: start - 1])
    period = tuple(digits[start - 1 :])
    logger.debug("surd %s: preperiod %d, period %d", source.to_text(), len(head), len(period))
    return ContinuedFraction(a0, head, period, source=source)


def expand(spec: RealSpec) -> ContinuedFraction:
    if isinstance(spec, Rational):
        return expand_rational(spec.p, spec.q)
    if isinstance(spec, QuadraticSurd):
        return expand_surd(spec.P, spec.D, spec.R)
    if isinstance(spec, DigitStream):
        return ContinuedFraction(spec.a0, spec.digits, source=spec)
    raise PreconditionError(f"unsupported real specification {spec!r}")


def require_irrational(spec: RealSpec) -> None:
    if isinstance(spec, Rational):
        raise RationalInputError(f"rational input {spec.to_text()} where an irrational is required")


@dataclass(frozen=True)
class ConvergentTable:
    """p_k, q_k for k = -1..n with p_{-1}=1, q_{-1}=0"""

    a: Tuple[int, ...]
    ps: Tuple[int, ...]
    qs: Tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.ps) - 2

    def p(self, k: int) -> int:
        if k == -2:
            return 0
        self._check(k)
        return self.ps[k + 1]

    def q(self, k: int) -> int:
        if k == -2:
            return 1
        self._check(k)
        return self.qs[k + 1]

    def digit(self, k: int) -> int:
        self._check(k)
        return self.a[k]

    def convergent(self, k: int) -> Fraction:
        return Fraction(self.p(k), self.q(k))

    def _check(self, k: int) -> None:
        if k < -1 or k > self.n:
            raise HorizonError(f"convergent index {k} outside table range [-1, {self.n}]")

    def rows(self) -> List[Tuple[int, int, int]]:
        return [(k, self.p(k), self.q(k)) for k in range(-1, self.n + 1)]


def convergents(cf: ContinuedFraction, n: int) -> ConvergentTable:
    """Table up to index n via p_k = a_k p_{k-1} + p_{k-2}"""
    if n < 0:
        raise PreconditionError("convergent table needs n >= 0")
    cf.check_index(n)
    digits = [cf.a0] + cf.digits(n)
    ps = [1, cf.a0]
    qs = [0, 1]
    for a in digits[1:]:
        ps.append(a * ps[-1] + ps[-2])
        qs.append(a * qs[-1] + qs[-2])
    return ConvergentTable(tuple(digits), tuple(ps), tuple(qs))


def table_until(cf: ContinuedFraction, q_bound: int) -> ConvergentTable:
    """Shortest table whose last denominator exceeds q_bound (or the whole expansion)"""
    n = 1
    while True:
        horizon = cf.horizon
        if horizon is not None and n >= horizon:
            return convergents(cf, horizon)
        table = convergents(cf, n)
        if table.q(n) > q_bound:
            return table
        n *= 2


@dataclass(frozen=True)
class Cylinder:
    """Set of reals whose expansion starts with the given digits"""

    a0: int
    digits: Tuple[int, ...]
    left: Fraction
    right: Fraction
    left_closed: bool

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def closure(self) -> Tuple[Fraction, Fraction]:
        return self.left, self.right

    def contains(self, x: Fraction) -> bool:
        if self.left_closed:
            return self.left <= x < self.right
        return self.left < x <= self.right


def cylinder(a0: int, digits) -> Cylinder:
    digits = tuple(digits)
    if any(d < 1 for d in digits):
        raise PreconditionError("cylinder digits must be >= 1")
    table = convergents(ContinuedFraction(a0, digits), len(digits))
    k = len(digits)
    p, q = table.p(k), table.q(k)
    p1, q1 = table.p(k - 1), table.q(k - 1)
    end = Fraction(p, q)
    other = Fraction(p + p1, q + q1)
    if k % 2 == 0:
        return Cylinder(a0, digits, end, other, left_closed=True)
    return Cylinder(a0, digits, other, end, left_closed=False)


def cylinder_ratio(a0: int, digits, u: int) -> Fraction:
    """Relative length of the sub-cylinder with next digit u"""
    if u < 1:
        raise PreconditionError("next digit must be >= 1")
    outer = cylinder(a0, digits).length
    inner = cylinder(a0, tuple(digits) + (u,)).length
    ratio = inner / outer
    if not Fraction(1, 3 * u * u) < ratio < Fraction(2, u * u):
        raise ApproximationError(f"cylinder ratio {ratio} outside (1/(3u^2), 2/u^2) for u={u}")
    return ratio


def certified_digits(lo: Fraction, hi: Fraction, limit: Optional[int] = None) -> Tuple[int, List[int]]:
    """Leading partial quotients shared by every real in [lo, hi]"""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise PreconditionError("certified_digits needs lo <= hi")
    a0 = floor_fraction(lo)
    if not hi < a0 + 1:
        raise PreconditionError(f"interval [{lo}, {hi}] does not determine the integer part")
    digits: List[int] = []
    while limit is None or len(digits) < limit:
        frac_lo, frac_hi = lo - floor_fraction(lo), hi - floor_fraction(lo)
        if frac_lo == 0:
            break
        lo, hi = 1 / frac_hi, 1 / frac_lo
        digit = floor_fraction(lo)
        if not hi < digit + 1:
            break
        digits.append(digit)
    return a0, digits


def refine_to(spec: RealSpec, width) -> Enclosure:
    """Enclosure of xi with width <= width"""
    width = Fraction(width)
    if width <= 0:
        raise PreconditionError("refine_to needs a positive width")
    if isinstance(spec, Rational):
        return Enclosure.exact(spec.value)
    if isinstance(spec, QuadraticSurd):
        bits = bits_for_width(width)
        root = math.isqrt(spec.D << (2 * bits))
        scale = 1 << bits
        lo = (spec.P * scale + root) / Fraction(scale * spec.R)
        hi = (spec.P * scale + root + 1) / Fraction(scale * spec.R)
        return Enclosure(min(lo, hi), max(lo, hi))
    if isinstance(spec, DigitStream):
        lo, hi = cylinder(spec.a0, spec.digits).closure()
        if hi - lo > width:
            raise HorizonError(
                f"digit stream horizon {spec.horizon} only reaches width {float(hi - lo):.3g} > {float(width):.3g}"
            )
        return Enclosure(lo, hi)
    raise PreconditionError(f"unsupported real specification {spec!r}")


def exact_value(cf: ContinuedFraction) -> Fraction:
    return Fraction(cf.source.p, cf.source.q)


def eta(cf: ContinuedFraction, k: int, precision=Fraction(1, 1 << 64), table: Optional[ConvergentTable] = None) -> Enclosure:
    """Enclosure of eta_k = |q_k xi - p_k| with width <= precision"""
    if k == -1:
        return Enclosure.exact(1)
    cf.check_index(k)
    if table is None or table.n < k:
        table = convergents(cf, k)
    p, q = table.p(k), table.q(k)
    sign = 1 if k % 2 == 0 else -1
    if cf.terminating:
        return Enclosure.exact(sign * (q * exact_value(cf) - p))
    precision = Fraction(precision)
    source = cf.source
    if isinstance(source, DigitStream):
        value = eta_from_tail(cf, k, table)
        if value.width > precision:
            raise HorizonError(f"eta_{k} reaches only width {float(value.width):.3g} within horizon {cf.horizon}")
        return value
    xi = refine_to(source, precision / q)
    return (xi * q - p) * sign


def eta_from_tail(cf: ContinuedFraction, k: int, table: ConvergentTable) -> Enclosure:
    """Best enclosure of eta_k a digit stream's horizon allows"""
    # eta_k = 1 / (q_k xi_{k+1} + q_{k-1}) with xi_{k+1} = [a_{k+1}; a_{k+2}, ...]
    horizon = cf.horizon
    if horizon is not None and k + 1 > horizon:
        raise HorizonError(f"eta_{k} needs a_{k+1}, beyond horizon {horizon}")
    tail = cylinder(cf.digit(k + 1), tuple(cf.digit(j) for j in range(k + 2, horizon + 1)))
    lo, hi = tail.closure()
    q, q1 = table.q(k), table.q(k - 1)
    return Enclosure(Fraction(1) / (q * hi + q1), Fraction(1) / (q * lo + q1))


def phi_ratio(cf: ContinuedFraction, k: int, precision=Fraction(1, 1 << 64), table: Optional[ConvergentTable] = None) -> Enclosure:
    """Enclosure of phi_k = -eta_k / eta_{k-1}"""
    if k < 0:
        raise PreconditionError("phi_k is defined for k >= 0")
    cf.check_index(k)
    if table is None or table.n < k:
        table = convergents(cf, k)
    precision = Fraction(precision)
    if cf.terminating:
        return -(eta(cf, k, table=table) / eta(cf, k - 1, table=table))
    if isinstance(cf.source, DigitStream):
        previous = Enclosure.exact(1) if k == 0 else eta_from_tail(cf, k - 1, table)
        value = -(eta_from_tail(cf, k, table) / previous)
        if value.width > precision:
            raise HorizonError(f"phi_{k} reaches only width {float(value.width):.3g} within horizon {cf.horizon}")
        return value
    step = precision / (4 * table.q(k))
    cap = default_precision_cap()
    while True:
        value = -(eta(cf, k, step, table) / eta(cf, k - 1, step, table))
        if value.width <= precision:
            return value
        if step < Fraction(1, 1 << cap):
            raise HorizonError(f"phi_{k} cannot reach width {float(precision):.3g}")
        step /= 16


@dataclass(frozen=True)
class GreedyDecomp:
    """Q = p q_{k-1} + q_{k-2} + w with 1 <= p <= a_k and 0 <= w < q_{k-1}"""

    Q: int
    k: int
    p: int
    w: int

    def to_dict(self) -> dict:
        return {"Q": str(self.Q), "k": self.k, "p": str(self.p), "w": str(self.w)}


def greedy_decompose(cf: ContinuedFraction, Q: int, table: Optional[ConvergentTable] = None) -> GreedyDecomp:
    if Q < 1:
        raise PreconditionError("greedy decomposition needs Q >= 1")
    if table is None or table.q(table.n) + table.q(table.n - 1) <= Q:
        table = table_until(cf, Q)
    k = 1
    while k <= table.n:
        if table.q(k - 1) + table.q(k - 2) <= Q < table.q(k) + table.q(k - 1):
            p, w = divmod(Q - table.q(k - 2), table.q(k - 1))
            return GreedyDecomp(Q, k, p, w)
        k += 1
    raise HorizonError(f"expansion too short to decompose Q={Q}")


def check_table_bounds(cf: ContinuedFraction, table: ConvergentTable) -> List[str]:
    """Names of the exact identities that fail on the table (empty when all hold)"""
    failures: List[str] = []
    for k in range(0, table.n + 1):
        p, q = table.p(k), table.q(k)
        if q * table.p(k - 1) - p * table.q(k - 1) != (-1) ** k:
            failures.append(f"determinant@{k}")
        if math.gcd(p, q) != 1:
            failures.append(f"gcd@{k}")
        if k >= 1 and k < table.n and q >= table.q(k + 1):
            failures.append(f"increasing@{k}")
        if k < table.n:
            a_next, q_next, q_prev = table.digit(k + 1), table.q(k + 1), table.q(k - 1)
            # strict unless q_{k-1} = 0 (k = 0) or q_{k-1} = q_k (k = 1, a_1 = 1)
            lower = a_next * q < q_next or (q_prev == 0 and a_next * q == q_next)
            upper = q_next < (a_next + 1) * q or (q_prev == q and q_next == (a_next + 1) * q)
            if not (lower and upper):
                failures.append(f"ratio_bracket@{k}")
        digits = table.a[1 : k + 1]
        low_q = math.prod(digits)
        high_q = math.prod(d + 1 for d in digits)
        if not (low_q <= q <= high_q):
            failures.append(f"q_product@{k}")
        if table.a[0] >= 0:
            low_p = math.prod(table.a[: k + 1])
            high_p = math.prod(d + 1 for d in table.a[: k + 1])
            if not (low_p <= p <= high_p):
                failures.append(f"p_product@{k}")
        length = cylinder(cf.a0, table.a[1 : k + 1]).length
        if not (Fraction(1, 2 * q * q) <= length <= Fraction(1, q * q)):
            failures.append(f"cylinder_length@{k}")
    return failures
