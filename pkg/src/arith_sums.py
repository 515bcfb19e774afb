"""
Arithmetic Sums Engine for the approximation toolkit
Sieved totient/Moebius tables, coprime counts in progressions and totient sums along progressions
"""
import logging
import math
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import get_settings
from src.congruence import Constraint, crt
from src.enclosure import Enclosure, ceil_fraction, floor_fraction, pi_enclosure
from src.errors import PreconditionError

logger = logging.getLogger(__name__)

SEGMENT = 1 << 20


class SieveTable:
    """Smallest prime factor, phi, mu and omega up to ``limit``"""

    def __init__(self, limit: int):
        if limit < 1:
            raise PreconditionError("sieve limit must be positive")
        self.limit = limit
        n = limit + 1
        self.spf = np.zeros(n, dtype=np.int64)
        self.phi = np.arange(n, dtype=np.int64)
        self.mu = np.ones(n, dtype=np.int8)
        self.omega = np.zeros(n, dtype=np.int8)
        for p in range(2, n):
            if self.spf[p]:
                continue
            multiples = self.spf[p::p]
            multiples[multiples == 0] = p
            self.phi[p::p] -= self.phi[p::p] // p
            self.mu[p::p] *= -1
            self.omega[p::p] += 1
            if p * p < n:
                self.mu[p * p :: p * p] = 0
        logger.info("sieve built up to %d", limit)

    def primes(self) -> np.ndarray:
        index = np.arange(self.limit + 1)
        return index[(self.spf == index) & (index >= 2)]

    def factor(self, q: int) -> List[int]:
        """Distinct prime factors"""
        if q <= self.limit:
            found = []
            while q > 1:
                p = int(self.spf[q])
                found.append(p)
                while q % p == 0:
                    q //= p
            return found
        return prime_factors(q)

    def totient(self, q: int) -> int:
        if q <= self.limit:
            return int(self.phi[q])
        result = q
        for p in self.factor(q):
            result -= result // p
        return result

    def mobius(self, q: int) -> int:
        if q <= self.limit:
            return int(self.mu[q])
        factors = self.factor(q)
        for p in factors:
            if q % (p * p) == 0:
                return 0
        return -1 if len(factors) % 2 else 1

    def distinct_primes(self, q: int) -> int:
        if q <= self.limit:
            return int(self.omega[q])
        return len(self.factor(q))


def prime_factors(q: int) -> List[int]:
    """Distinct primes of q by trial division"""
    found = []
    p = 2
    while p * p <= q:
        if q % p == 0:
            found.append(p)
            while q % p == 0:
                q //= p
        p += 1 if p == 2 else 2
    if q > 1:
        found.append(q)
    return found


def segmented_totients(start: int, stop: int, primes: np.ndarray) -> np.ndarray:
    """phi(n) for 1 <= start <= n < stop given every prime up to sqrt(stop)"""
    values = np.arange(start, stop, dtype=np.int64)
    rest = values.copy()
    phi = values.copy()
    for p in primes:
        p = int(p)
        if p * p >= stop:
            break
        first = (-start) % p
        phi[first::p] -= phi[first::p] // p
        block = rest[first::p]
        while True:
            divisible = block % p == 0
            if not divisible.any():
                break
            block[divisible] //= p
        rest[first::p] = block
    # one prime factor above sqrt(stop) may remain
    big = rest > 1
    phi[big] -= phi[big] // rest[big]
    return phi


class ArithmeticSums:
    """Exact counts and sums over arithmetic progressions"""

    def __init__(self, limit: Optional[int] = None):
        self.limit = limit or get_settings().sieve_limit
        self._sieve: Optional[SieveTable] = None

    @property
    def sieve(self) -> SieveTable:
        if self._sieve is None:
            self._sieve = SieveTable(self.limit)
        return self._sieve

    def coprime_progression_count(self, x: int, q: int, a: int, r: int) -> int:
        """#{m >= 0 : 0 <= am+r <= x, gcd(am+r, q) = 1}"""
        _check_coprime_hypothesis(q, a, r)
        if x < r:
            return 0
        total = 0
        primes = [p for p in self.sieve.factor(q) if a % p]
        for size in range(len(primes) + 1):
            for subset in combinations(primes, size):
                d = math.prod(subset)
                total += (-1) ** size * _progression_multiples(x, a, r, d)
        return total

    def coprime_main_term(self, x, q: int, a: int, r: int) -> Fraction:
        """(x/a) * prod over p | q, p not dividing a, of (1 - 1/p)"""
        _check_coprime_hypothesis(q, a, r)
        density = Fraction(1)
        for p in self.sieve.factor(q):
            if a % p:
                density *= Fraction(p - 1, p)
        return Fraction(x) / a * density

    def main_term_error_ratio(self, x: int, q: int, a: int, r: int) -> Fraction:
        """|count - main term| / 2**omega(q)"""
        error = abs(self.coprime_progression_count(x, q, a, r) - self.coprime_main_term(x, q, a, r))
        return error / 2 ** self.sieve.distinct_primes(q)

    def phi_progression_sum(self, u: int, v: int, Q: int) -> int:
        """Sum of phi(uk + v) over k >= 0 with 1 <= uk + v <= Q"""
        if u < 1 or v < 0:
            raise PreconditionError("phi_progression_sum needs u >= 1 and v >= 0")
        first = v if v >= 1 else u
        if Q < first:
            return 0
        if Q <= self.limit:
            return int(self.sieve.phi[first : Q + 1 : u].sum(dtype=np.int64))
        return self._segmented_sum(u, first, Q)

    def _segmented_sum(self, u: int, first: int, Q: int) -> int:
        root = math.isqrt(Q) + 1
        primes = self.sieve.primes() if root <= self.limit else SieveTable(root).primes()
        total = 0
        logger.info("segmented totient sum up to %d", Q)
        for start in range(1, Q + 1, SEGMENT):
            stop = min(start + SEGMENT, Q + 1)
            offset = (first - start) % u
            lo = max(start + offset, first)
            if lo >= stop:
                continue
            phi = segmented_totients(start, stop, primes)
            total += int(phi[lo - start :: u].sum(dtype=np.int64))
        return total

    def c_constant(self, u: int, v: int, prec: int = 128) -> Enclosure:
        """C(u, v) = 3 phi(g) / (g u pi^2 prod_{p | u} (1 - 1/p^2)) with g = gcd(u, v)"""
        if u < 1 or v < 0:
            raise PreconditionError("c_constant needs u >= 1 and v >= 0")
        g = math.gcd(u, v)
        local = Fraction(1)
        for p in self.sieve.factor(u):
            local *= 1 - Fraction(1, p * p)
        rational = Fraction(3 * self.sieve.totient(g), g * u) / local
        return rational / pi_enclosure(prec).square()

    def totient_identity_check(self, limit: int) -> List[int]:
        """q <= limit where sum_{d | q} mu(d) (q/d) != phi(q); empty when the identity holds"""
        if limit > self.limit:
            raise PreconditionError(f"identity check limited to the sieve ({self.limit})")
        n = limit + 1
        total = np.zeros(n, dtype=np.int64)
        mu = self.sieve.mu[:n].astype(np.int64)
        for d in range(1, n):
            if mu[d]:
                total[d::d] += mu[d] * (np.arange(d, n, d, dtype=np.int64) // d)
        bad = np.nonzero(total[1:] != self.sieve.phi[1:n])[0] + 1
        return [int(q) for q in bad]

    def regular_subsequence(self, c: Constraint) -> Tuple[int, int]:
        """(u, v) such that every N = uk + v is admissible and gcd(am + r, N) = 1 is reachable"""
        if c.content != 1:
            raise PreconditionError(f"regular systems need gcd(a, b, r, s) = 1, got {c.content}")
        delta = math.gcd(c.a, c.r)
        if delta == 1:
            return c.b, c.s
        residue, modulus = 0, 1
        for p in self.sieve.factor(delta):
            if c.b % p:
                target = (1 - c.s) * pow(c.b, -1, p) % p
            else:
                target = 1
            residue, modulus = crt(residue, modulus, target, p)
        return c.b * modulus, c.b * residue + c.s

    def regular_system_count(self, c: Constraint, interval: Tuple[Fraction, Fraction], Q: int) -> int:
        """#{(am+r)/N in (lo, hi) : N = uk+v, ceil(Q/2) <= N <= Q, gcd(am+r, N) = 1}"""
        lo, hi = (Fraction(x) for x in interval)
        if not 0 <= lo <= hi <= c.a:
            raise PreconditionError("interval must lie in [0, a]")
        if lo == hi:
            return 0
        u, v = self.regular_subsequence(c)
        first = max(v, -(-Q // 2))
        first += (v - first) % u
        total = 0
        for N in range(first, Q + 1, u):
            if N < 1:
                continue
            upper = ceil_fraction(hi * N) - 1
            lower = floor_fraction(lo * N)
            total += self._coprime_between(lower, upper, N, c.a, c.r)
        return total

    def _coprime_between(self, lower: int, upper: int, q: int, a: int, r: int) -> int:
        """#{m : lower < am+r <= upper, gcd(am+r, q) = 1}"""
        if upper <= lower or upper < r:
            return 0
        # gcd(a, r, q) may exceed 1 here; then nothing is coprime
        if math.gcd(math.gcd(a, r), q) != 1:
            return 0
        below = self.coprime_progression_count(lower, q, a, r) if lower >= r else 0
        return self.coprime_progression_count(upper, q, a, r) - below

    def farey_count(self, Q: int) -> int:
        """Sum of phi(q) for ceil(Q/2) <= q <= Q"""
        start = -(-Q // 2)
        return sum(self.sieve.totient(q) for q in range(start, Q + 1))


def _check_coprime_hypothesis(q: int, a: int, r: int) -> None:
    if q < 1 or a < 1:
        raise PreconditionError("coprime counts need q >= 1 and a >= 1")
    if math.gcd(math.gcd(a, r), q) != 1:
        raise PreconditionError(f"gcd(a, r, q) = gcd({a}, {r}, {q}) must be 1")


def _progression_multiples(x: int, a: int, r: int, d: int) -> int:
    """#{m >= 0 : am+r <= x, d | am+r} for d coprime to a"""
    if x < r:
        return 0
    m_max = (x - r) // a
    if d == 1:
        return m_max + 1
    m0 = (-r) * pow(a, -1, d) % d
    if m0 > m_max:
        return 0
    return (m_max - m0) // d + 1


_default: Dict[int, ArithmeticSums] = {}


def engine(limit: Optional[int] = None) -> ArithmeticSums:
    limit = limit or get_settings().sieve_limit
    if limit not in _default:
        _default[limit] = ArithmeticSums(limit)
    return _default[limit]


def coprime_progression_count(x: int, q: int, a: int, r: int) -> int:
    return engine().coprime_progression_count(x, q, a, r)


def coprime_main_term(x, q: int, a: int, r: int) -> Fraction:
    return engine().coprime_main_term(x, q, a, r)


def phi_progression_sum(u: int, v: int, Q: int) -> int:
    return engine().phi_progression_sum(u, v, Q)


def c_constant(u: int, v: int) -> Enclosure:
    return engine().c_constant(u, v)


def regular_system_count(c: Constraint, interval: Tuple[Fraction, Fraction], Q: int) -> int:
    return engine().regular_system_count(c, interval, Q)


def totient_identity_check(limit: int) -> List[int]:
    return engine().totient_identity_check(limit)
