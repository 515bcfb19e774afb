"""Certified enclosures of real numbers.

An :class:`Enclosure` is a closed interval with exact rational endpoints that
is guaranteed to contain the value it stands for. Arithmetic on enclosures is
exact (``fractions.Fraction``); transcendental functions go through mpmath's
interval kernels at an explicit working precision, so nothing here touches the
global mpmath context.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

from mpmath import libmp

from src.errors import PrecisionCapError

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]

_INFINITIES = (libmp.finf, libmp.fninf, libmp.fnan)


def bits_for_width(width: Number) -> int:
    """Smallest b >= 0 with 2**-b <= width."""
    width = Fraction(width)
    if width <= 0:
        raise ValueError("width must be positive")
    if width >= 1:
        return 0
    inverse = 1 / width
    ceiling = -((-inverse.numerator) // inverse.denominator)
    return (ceiling - 1).bit_length()


def floor_fraction(x: Fraction) -> int:
    return x.numerator // x.denominator


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def decimal_string(x: Fraction, digits: int = 20, round_up: bool = False) -> str:
    """Fixed-point rendering of x rounded toward -inf (or +inf)."""
    scaled = x * 10**digits
    value = ceil_fraction(scaled) if round_up else floor_fraction(scaled)
    sign = "-" if value < 0 else ""
    value = abs(value)
    whole, frac = divmod(value, 10**digits)
    if digits == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{digits}d}"


@dataclass(frozen=True)
class Enclosure:
    """Closed interval [lo, hi] known to contain a real value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo = Fraction(self.lo)
        hi = Fraction(self.hi)
        if lo > hi:
            raise ValueError(f"enclosure endpoints out of order: {lo} > {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def exact(cls, value: Number) -> "Enclosure":
        value = Fraction(value)
        return cls(value, value)

    @classmethod
    def hull(cls, items: Iterable["Enclosure"]) -> "Enclosure":
        items = list(items)
        return cls(min(e.lo for e in items), max(e.hi for e in items))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: Union[Number, "Enclosure"]) -> bool:
        if isinstance(value, Enclosure):
            return self.lo <= value.lo and value.hi <= self.hi
        value = Fraction(value)
        return self.lo <= value <= self.hi

    def overlaps(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def is_positive(self) -> bool:
        return self.lo > 0

    def is_negative(self) -> bool:
        return self.hi < 0

    def sign(self) -> int:
        """+1 / -1 when certain, 0 when the enclosure straddles or touches zero."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        return 0

    def certainly_less(self, other: Union[Number, "Enclosure"]) -> bool:
        other = _lift(other)
        return self.hi < other.lo

    def certainly_le(self, other: Union[Number, "Enclosure"]) -> bool:
        other = _lift(other)
        return self.hi <= other.lo

    # arithmetic
    def __neg__(self) -> "Enclosure":
        return Enclosure(-self.hi, -self.lo)

    def __add__(self, other) -> "Enclosure":
        other = _lift(other)
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> "Enclosure":
        other = _lift(other)
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other) -> "Enclosure":
        return _lift(other) - self

    def __mul__(self, other) -> "Enclosure":
        other = _lift(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Enclosure(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Enclosure":
        other = _lift(other)
        if other.lo <= 0 <= other.hi:
            raise PrecisionCapError("division by an enclosure that contains zero")
        return self * Enclosure(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other) -> "Enclosure":
        return _lift(other) / self

    def __abs__(self) -> "Enclosure":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Enclosure(0, max(-self.lo, self.hi))

    def square(self) -> "Enclosure":
        a = abs(self)
        return Enclosure(a.lo * a.lo, a.hi * a.hi)

    def round_out(self, bits: int) -> "Enclosure":
        """Widen to dyadic endpoints with denominator 2**bits."""
        scale = 1 << bits
        return Enclosure(
            Fraction(floor_fraction(self.lo * scale), scale),
            Fraction(ceil_fraction(self.hi * scale), scale),
        )

    def to_dict(self, digits: int = 20) -> Dict[str, str]:
        return {
            "lo": decimal_string(self.lo, digits),
            "hi": decimal_string(self.hi, digits, round_up=True),
        }

    def __str__(self) -> str:
        return f"[{decimal_string(self.lo, 12)}, {decimal_string(self.hi, 12, round_up=True)}]"


def _lift(value) -> Enclosure:
    if isinstance(value, Enclosure):
        return value
    return Enclosure.exact(value)


def enclosure_min(items: Iterable[Enclosure]) -> Enclosure:
    items = list(items)
    return Enclosure(min(e.lo for e in items), min(e.hi for e in items))


def enclosure_max(items: Iterable[Enclosure]) -> Enclosure:
    items = list(items)
    return Enclosure(max(e.lo for e in items), max(e.hi for e in items))


# mpmath bridge
def to_mpi(value: Enclosure, prec: int) -> Tuple[tuple, tuple]:
    lo = libmp.from_rational(value.lo.numerator, value.lo.denominator, prec, libmp.round_floor)
    hi = libmp.from_rational(value.hi.numerator, value.hi.denominator, prec, libmp.round_ceiling)
    return lo, hi


def from_mpi(interval: Tuple[tuple, tuple]) -> Enclosure:
    lo, hi = interval
    if lo in _INFINITIES or hi in _INFINITIES:
        raise PrecisionCapError("interval kernel returned an unbounded enclosure")
    return Enclosure(Fraction(*libmp.to_rational(lo)), Fraction(*libmp.to_rational(hi)))


def pi_enclosure(prec: int) -> Enclosure:
    return from_mpi((libmp.mpf_pi(prec, libmp.round_floor), libmp.mpf_pi(prec, libmp.round_ceiling)))


def e_enclosure(prec: int) -> Enclosure:
    return from_mpi((libmp.mpf_e(prec, libmp.round_floor), libmp.mpf_e(prec, libmp.round_ceiling)))


def log_enclosure(value: Enclosure, prec: int) -> Enclosure:
    if value.lo <= 0:
        raise PrecisionCapError("log of an enclosure that is not certainly positive")
    return from_mpi(libmp.mpi_log(to_mpi(value, prec), prec))


def exp_enclosure(value: Enclosure, prec: int) -> Enclosure:
    return from_mpi(libmp.mpi_exp(to_mpi(value, prec), prec))


def sin_enclosure(value: Enclosure, prec: int) -> Enclosure:
    return from_mpi(libmp.mpi_sin(to_mpi(value, prec), prec))


def cos_enclosure(value: Enclosure, prec: int) -> Enclosure:
    return from_mpi(libmp.mpi_cos(to_mpi(value, prec), prec))


def power_enclosure(value: Enclosure, exponent: Fraction, prec: int) -> Enclosure:
    """value**exponent for value > 0 and rational exponent."""
    exponent = Fraction(exponent)
    if exponent.denominator == 1 and exponent >= 0:
        return from_mpi(libmp.mpi_pow_int(to_mpi(value, prec), int(exponent), prec))
    return exp_enclosure(log_enclosure(value, prec) * exponent, prec)


def sqrt_enclosure(value: Enclosure, bits: int = 64) -> Enclosure:
    """Square root with dyadic endpoints, outward rounded"""
    if value.lo < 0:
        raise PrecisionCapError("square root of an enclosure that may be negative")
    scale = 1 << bits
    lo = math.isqrt(floor_fraction(value.lo * scale * scale))
    hi = math.isqrt(ceil_fraction(value.hi * scale * scale))
    if hi * hi < value.hi * scale * scale:
        hi += 1
    return Enclosure(Fraction(lo, scale), Fraction(hi, scale))


def refine(
    evaluate: Callable[[int], Enclosure],
    accept: Callable[[Enclosure], bool],
    start_bits: int,
    cap_bits: int,
    what: str = "value",
) -> Enclosure:
    """Double the working precision until ``accept`` holds or the cap is hit."""
    bits = max(16, start_bits)
    while True:
        value = evaluate(bits)
        if accept(value):
            return value
        if bits >= cap_bits:
            raise PrecisionCapError(f"indeterminate sign for {what} at {bits} bits")
        logger.debug("refining %s: %d -> %d bits", what, bits, 2 * bits)
        bits = min(2 * bits, cap_bits)


def decide(
    verdict: Callable[[int], Optional[bool]],
    start_bits: int,
    cap_bits: int,
    what: str = "comparison",
) -> bool:
    """Run a three-valued test at doubling precision; None means undecided."""
    bits = max(16, start_bits)
    while True:
        answer = verdict(bits)
        if answer is not None:
            return answer
        if bits >= cap_bits:
            raise PrecisionCapError(f"indeterminate sign for {what} at {bits} bits")
        logger.debug("undecided %s at %d bits", what, bits)
        bits = min(2 * bits, cap_bits)


def bit_length_of(value: Fraction) -> int:
    """Crude magnitude: number of bits of ceil(|value|)."""
    return max(1, ceil_fraction(abs(Fraction(value)))).bit_length()


def log2_floor(value: Number) -> int:
    value = Fraction(value)
    return int(math.floor(math.log2(value.numerator) - math.log2(value.denominator)))
