"""
Congruence Engine for the approximation toolkit
Paired linear congruences, reachability of rational targets and annihilating digit pairs
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from src.errors import ConstraintError, ParseError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Constraint:
    """Numerators in aZ + r, denominators in bZ + s"""

    a: int
    b: int
    r: int = 0
    s: int = 0

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ConstraintError(f"constraint needs a, b >= 1, got a={self.a}, b={self.b}")
        if not 0 <= self.r <= self.a - 1:
            raise ConstraintError(f"constraint needs 0 <= r <= a-1, got r={self.r} with a={self.a}")
        if not 0 <= self.s <= self.b - 1:
            raise ConstraintError(f"constraint needs 0 <= s <= b-1, got s={self.s} with b={self.b}")

    @property
    def homogeneous(self) -> bool:
        return self.r == 0 and self.s == 0

    @property
    def ab(self) -> int:
        return self.a * self.b

    @property
    def content(self) -> int:
        """gcd(a, b, r, s)"""
        return math.gcd(self.a, self.b, self.r, self.s)

    def to_text(self) -> str:
        return f"{self.a},{self.b},{self.r},{self.s}"

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "r": self.r, "s": self.s}


def parse_constraint(text: str) -> Constraint:
    """'a,b,r,s'"""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ParseError(f"cannot parse constraint '{text}': expected a,b,r,s")
    try:
        a, b, r, s = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"cannot parse constraint '{text}': {exc}") from exc
    return Constraint(a, b, r, s)


@dataclass(frozen=True)
class CongruenceSolution:
    """x = x0 + modulus * Z"""

    x0: int
    modulus: int

    def contains(self, x: int) -> bool:
        return (x - self.x0) % self.modulus == 0


def divides(d: int, n: int) -> bool:
    if d == 0:
        return n == 0
    return n % d == 0


def ext_gcd(x: int, y: int) -> Tuple[int, int, int]:
    """(g, s, t) with s*x + t*y = g = gcd(x, y) >= 0"""
    old_r, r = x, y
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        quotient = old_r // r
        old_r, r = r, old_r - quotient * r
        old_s, s = s, old_s - quotient * s
        old_t, t = t, old_t - quotient * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _reduce(a: int, b: int, m: int) -> Optional[Tuple[int, int]]:
    """a x = b (mod m) as x = x0 (mod m') or None"""
    g = math.gcd(a, m)
    if not divides(g, b):
        return None
    modulus = m // g
    if modulus == 1:
        return 0, 1
    inverse = pow((a // g) % modulus, -1, modulus)
    return (b // g) * inverse % modulus, modulus


def crt(x1: int, m1: int, x2: int, m2: int) -> Optional[Tuple[int, int]]:
    """Combine x = x1 (mod m1) and x = x2 (mod m2) for arbitrary moduli"""
    g = math.gcd(m1, m2)
    if (x2 - x1) % g:
        return None
    lcm = m1 // g * m2
    step = m2 // g
    if step == 1:
        return x1 % lcm, lcm
    t = (x2 - x1) // g * pow((m1 // g) % step, -1, step) % step
    return (x1 + m1 * t) % lcm, lcm


def pair_solve(a1: int, b1: int, m1: int, a2: int, b2: int, m2: int) -> Optional[CongruenceSolution]:
    """Solve a1 x = b1 (mod m1) and a2 x = b2 (mod m2)"""
    if m1 < 1 or m2 < 1:
        raise PreconditionError("pair_solve needs positive moduli")
    first = _reduce(a1, b1, m1)
    second = _reduce(a2, b2, m2)
    if first is None or second is None:
        return None
    combined = crt(first[0], first[1], second[0], second[1])
    if combined is None:
        return None
    return CongruenceSolution(*combined)


def solvable(a1: int, b1: int, m1: int, a2: int, b2: int, m2: int) -> bool:
    """The gcd criterion for the paired system"""
    return (
        divides(math.gcd(m1, a1), b1)
        and divides(math.gcd(m2, a2), b2)
        and divides(math.gcd(a1 * m2, a2 * m1), a1 * b2 - a2 * b1)
    )


def target_reachable(u: int, v: int, c: Constraint) -> bool:
    """Is some multiple alpha*(u, v) congruent to (r, s) mod (a, b)?"""
    if v < 1:
        raise PreconditionError("target_reachable needs v >= 1")
    if math.gcd(u, v) != 1:
        raise PreconditionError(f"target {u}/{v} is not reduced")
    return (
        divides(math.gcd(u, c.a), c.r)
        and divides(math.gcd(v, c.b), c.s)
        and divides(math.gcd(c.b * u, c.a * v), u * c.s - v * c.r)
    )


def uniform_conditions_met(k: int, table, c: Constraint) -> bool:
    """Conditions on p_{k-1}, q_{k-1} deciding whether index k needs a digit bound"""
    if k < 1:
        raise PreconditionError("uniform conditions are indexed from k >= 1")
    p, q = table.p(k - 1), table.q(k - 1)
    return (
        divides(math.gcd(p, c.a), c.r)
        and divides(math.gcd(q, c.b), c.s)
        and divides(math.gcd(c.b * p, c.a * q), c.s * p - c.r * q)
    )


def annihilating_pair(alpha: int, beta: int, b: int) -> Tuple[int, int]:
    """Digits (i1, i2) in [1, b] with u_2 = 0 mod b for u_{-1}=alpha, u_0=beta"""
    if b < 1:
        raise PreconditionError("annihilating_pair needs b >= 1")
    alpha %= b
    beta %= b
    if alpha == 0:
        pair = (1, b - 1)
    elif beta == 0:
        pair = (0, 0)
    else:
        pair = _invertible_pair(alpha, beta, b) or _brute_pair(alpha, beta, b)
    i1, i2 = (i if i > 0 else b for i in pair)
    u1 = i1 * beta + alpha
    if (i2 * u1 + beta) % b:
        raise PreconditionError(f"no annihilating pair for ({alpha}, {beta}) mod {b}")
    return i1, i2


def _invertible_pair(alpha: int, beta: int, b: int) -> Optional[Tuple[int, int]]:
    g = math.gcd(alpha, beta)
    alpha_r, beta_r = alpha // g, beta // g
    for i in range(1, b + 1):
        u = alpha_r + i * beta_r
        if math.gcd(u, b) == 1:
            i2 = (-beta_r * pow(u, -1, b)) % b if b > 1 else 0
            return i, i2
    return None


def _brute_pair(alpha: int, beta: int, b: int) -> Tuple[int, int]:
    logger.debug("annihilating pair for (%d, %d) mod %d by exhaustive scan", alpha, beta, b)
    for i1 in range(1, b + 1):
        u1 = i1 * beta + alpha
        for i2 in range(1, b + 1):
            if (i2 * u1 + beta) % b == 0:
                return i1, i2
    raise PreconditionError(f"no annihilating pair for ({alpha}, {beta}) mod {b}")
