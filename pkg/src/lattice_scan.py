"""
Vectorised residue scans for the approximation toolkit
Certified bounds on dist(N*xi + alpha, aZ + r) over arrays of denominators N
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from src.cf_core import Rational, RealSpec, refine_to
from src.enclosure import Enclosure, ceil_fraction, floor_fraction
from src.errors import PrecisionCapError

logger = logging.getLogger(__name__)

INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class FixedPoint:
    """x in [mantissa, mantissa + spread] / scale"""

    mantissa: int
    spread: int
    scale: int

    @property
    def exact(self) -> bool:
        return self.spread == 0

    @property
    def enclosure(self) -> Enclosure:
        return Enclosure(Fraction(self.mantissa, self.scale), Fraction(self.mantissa + self.spread, self.scale))

    def rescale(self, scale: int) -> "FixedPoint":
        """Outward-rounded copy at another scale"""
        if scale == self.scale:
            return self
        lo = floor_fraction(Fraction(self.mantissa * scale, self.scale))
        hi = ceil_fraction(Fraction((self.mantissa + self.spread) * scale, self.scale))
        return FixedPoint(lo, hi - lo, scale)


def fixed_point(spec: RealSpec, bits: int) -> FixedPoint:
    """Exact for rationals, otherwise a dyadic enclosure of width about 2**-bits"""
    if isinstance(spec, Rational):
        return FixedPoint(spec.p, 0, spec.q)
    return from_enclosure(refine_to(spec, Fraction(1, 1 << bits)), bits)


def from_enclosure(value: Enclosure, bits: int) -> FixedPoint:
    scale = 1 << bits
    lo = floor_fraction(value.lo * scale)
    hi = ceil_fraction(value.hi * scale)
    return FixedPoint(lo, hi - lo, scale)


def align(xi: FixedPoint, alpha: Optional[FixedPoint], bits: int) -> Tuple[FixedPoint, FixedPoint]:
    """Bring xi and alpha to a common scale"""
    if alpha is None:
        alpha = FixedPoint(0, 0, xi.scale)
    if xi.exact and alpha.exact:
        scale = xi.scale * alpha.scale // math.gcd(xi.scale, alpha.scale)
        return (
            FixedPoint(xi.mantissa * (scale // xi.scale), 0, scale),
            FixedPoint(alpha.mantissa * (scale // alpha.scale), 0, scale),
        )
    scale = 1 << bits
    return xi.rescale(scale), alpha.rescale(scale)


def _magnitude(values) -> int:
    array = np.asarray(values)
    if array.size == 0:
        return 0
    if array.dtype.kind in "iu":
        return int(np.abs(array).max())
    return max(abs(int(v)) for v in array.ravel())


def _as_array(values, big: bool) -> np.ndarray:
    if big:
        return np.array([int(v) for v in np.ravel(values)], dtype=object).reshape(np.shape(values))
    return np.asarray(values, dtype=np.int64)


def residue_bounds(N, X, spread, scale: int, a: int, r: int, Y=0, alpha_spread: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Integer bounds (dist_lo, dist_hi) on scale * dist(N xi + alpha, aZ + r).

    ``N`` and ``X`` broadcast against each other, so one call covers a block of
    denominators for one real or a (samples x denominators) grid. Magnitudes
    that do not fit in int64 fall back to exact object arrays.
    """
    N = np.asarray(N)
    X = np.asarray(X)
    A = a * scale
    bound = (
        _magnitude(N) * (_magnitude(X) + _magnitude(spread))
        + _magnitude(Y)
        + alpha_spread
        + (r + 2 * a) * scale
    )
    big = bound >= INT64_SAFE
    N = _as_array(N, big)
    X = _as_array(X, big)
    spread_arr = _as_array(spread, big)
    Y_arr = _as_array(Y, big)

    t_lo = N * X + Y_arr - r * scale
    width = N * spread_arr + alpha_spread
    lo = t_lo % A
    hi = lo + width

    dist_lo = np.where(hi >= A, 0, np.minimum(lo, A - hi))

    peak = (A + 1) // 2
    tent_lo = np.minimum(lo, A - lo)
    hi_mod = hi % A
    tent_hi = np.minimum(hi_mod, A - hi_mod)
    contains_peak = (width >= A) | ((2 * lo <= A) & (A <= 2 * hi)) | ((2 * lo <= 3 * A) & (3 * A <= 2 * hi))
    dist_hi = np.where(contains_peak, peak, np.maximum(tent_lo, tent_hi))
    return dist_lo, dist_hi


def floor_scaled(value, scale: int) -> int:
    """floor(value * scale) for a Fraction or the lower end of an Enclosure"""
    if isinstance(value, Enclosure):
        value = value.lo
    return floor_fraction(Fraction(value) * scale)


def ceil_scaled(value, scale: int) -> int:
    if isinstance(value, Enclosure):
        value = value.hi
    return ceil_fraction(Fraction(value) * scale)


class ResidueScan:
    """Certified distances from N*xi + alpha to the progression aZ + r"""

    def __init__(self, xi: RealSpec, a: int, r: int, alpha: Optional[RealSpec] = None, cap_bits: int = 16384):
        self.xi = xi
        self.alpha = alpha
        self.a = a
        self.r = r
        self.cap_bits = cap_bits

    def fixed(self, bits: int) -> Tuple[FixedPoint, FixedPoint]:
        xi_fp = fixed_point(self.xi, bits)
        alpha_fp = fixed_point(self.alpha, bits) if self.alpha is not None else None
        return align(xi_fp, alpha_fp, bits)

    @property
    def exact(self) -> bool:
        return isinstance(self.xi, Rational) and (self.alpha is None or isinstance(self.alpha, Rational))

    def bounds(self, N: np.ndarray, bits: int) -> Tuple[np.ndarray, np.ndarray, int]:
        """(dist_lo, dist_hi, scale) for every N"""
        xi_fp, alpha_fp = self.fixed(bits)
        lo, hi = residue_bounds(
            N, xi_fp.mantissa, xi_fp.spread, xi_fp.scale, self.a, self.r, alpha_fp.mantissa, alpha_fp.spread
        )
        return lo, hi, xi_fp.scale

    def value(self, N: int, bits: int) -> Enclosure:
        """Enclosure of N*xi + alpha"""
        xi_fp, alpha_fp = self.fixed(bits)
        return xi_fp.enclosure * N + alpha_fp.enclosure

    def distance(self, N: int, bits: int) -> Enclosure:
        """Enclosure of dist(N*xi + alpha, aZ + r)"""
        lo, hi, scale = self.bounds(np.array([N]), bits)
        return Enclosure(Fraction(int(lo[0]), scale), Fraction(int(hi[0]), scale))

    def numerators_near(self, N: int, threshold: Fraction, bits: int) -> List[int]:
        """Every m with |N xi + alpha - (a m + r)| possibly <= threshold"""
        v = self.value(N, bits)
        m_lo = ceil_fraction((v.lo - threshold - self.r) / self.a)
        m_hi = floor_fraction((v.hi + threshold - self.r) / self.a)
        return list(range(m_lo, m_hi + 1))

    def error(self, N: int, m: int, bits: int) -> Enclosure:
        """Enclosure of |N xi + alpha - (a m + r)|"""
        return abs(self.value(N, bits) - (self.a * m + self.r))

    def certify(self, N: int, threshold: Fraction, bits: int, strict: bool = False) -> List[Tuple[int, Enclosure]]:
        """All (m, error) with error <= threshold (or < when strict), decided exactly"""
        threshold = Fraction(threshold)
        while True:
            found: List[Tuple[int, Enclosure]] = []
            undecided = False
            for m in self.numerators_near(N, threshold, bits):
                err = self.error(N, m, bits)
                inside = err.hi < threshold if strict else err.hi <= threshold
                outside = err.lo >= threshold if strict else err.lo > threshold
                if inside:
                    found.append((m, err))
                elif not outside:
                    undecided = True
                    break
            if not undecided:
                return found
            if bits >= self.cap_bits or self.exact:
                raise PrecisionCapError(f"indeterminate sign at N={N} after {bits} bits")
            logger.debug("certify N=%d: %d -> %d bits", N, bits, 2 * bits)
            bits = min(2 * bits, self.cap_bits)


def scan_bits(qmax: int, threshold_floor: Fraction) -> int:
    """Starting precision so that N * 2**-bits sits well below the smallest threshold"""
    threshold_floor = max(Fraction(threshold_floor), Fraction(1, 1 << 1024))
    need = Fraction(qmax) / threshold_floor
    return max(32, ceil_fraction(need).bit_length() + 8)


def admissible_denominators(b: int, s: int, qmax: int, qmin: int = 1) -> np.ndarray:
    """All N = bn + s with qmin <= N <= qmax and N >= 1"""
    start = max(qmin, 1)
    first = s + b * (-((s - start) // b)) if start > s else s
    if first > qmax:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, qmax + 1, b, dtype=np.int64)
