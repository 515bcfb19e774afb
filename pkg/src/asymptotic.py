"""
Asymptotic Search Engine for the approximation toolkit
Certified hits |xi - (am+r)/(bn+s)| <= factor*ab/(bn+s)^2, hit statistics and the trigonometric probe
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from mpmath import libmp

from src.cf_core import RealSpec, refine_to
from src.config import default_precision_cap
from src.congruence import Constraint
from src.enclosure import Enclosure, enclosure_min, from_mpi, to_mpi
from src.errors import PreconditionError
from src.lattice_scan import ResidueScan, admissible_denominators, scan_bits

logger = logging.getLogger(__name__)

CHUNK = 1 << 15


@dataclass(frozen=True)
class Hit:
    """Certified solution (m, n) with N = bn+s and numerator am+r"""

    m: int
    n: int
    N: int
    numerator: int
    error: Enclosure
    quality: Enclosure

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": str(self.m),
            "n": str(self.n),
            "N": str(self.N),
            "numerator": str(self.numerator),
            "error": self.error.to_dict(),
            "quality": self.quality.to_dict(),
        }


def _hits_chunk(args) -> List[Hit]:
    xi, alpha, c, factor, denominators, bits, cap = args
    scan = ResidueScan(xi, c.a, c.r, alpha, cap_bits=cap)
    N = np.asarray(denominators, dtype=np.int64)
    dist_lo, _, scale = scan.bounds(N, bits)
    # floor(factor*ab*scale/N) as exact integers
    numer = factor.numerator * c.ab * scale
    thresholds = np.array([numer // (factor.denominator * int(n)) for n in N], dtype=object)
    candidates = np.nonzero(np.asarray(dist_lo, dtype=object) <= thresholds)[0]
    hits: List[Hit] = []
    for index in candidates:
        N_i = int(N[index])
        threshold = factor * c.ab / N_i
        for m, err in scan.certify(N_i, threshold, bits):
            hits.append(
                Hit(
                    m=m,
                    n=(N_i - c.s) // c.b,
                    N=N_i,
                    numerator=c.a * m + c.r,
                    error=err / N_i,
                    quality=err * Fraction(N_i, c.ab),
                )
            )
    return hits


class AsymptoticSearch:
    """Hit enumeration for a fixed constraint (a, b, r, s)"""

    def __init__(self, constraint: Constraint, workers: int = 1, cap_bits: Optional[int] = None):
        self.constraint = constraint
        self.workers = max(1, workers)
        self.cap_bits = cap_bits or default_precision_cap()

    def brute_hits(self, xi: RealSpec, factor, qmax: int, alpha: Optional[RealSpec] = None) -> List[Hit]:
        """Every certified hit with 1 <= bn+s <= qmax, sorted by N"""
        factor = Fraction(factor)
        if factor < 0:
            raise PreconditionError("factor must be nonnegative")
        c = self.constraint
        if factor == 0:
            return []
        denominators = admissible_denominators(c.b, c.s, qmax)
        if denominators.size == 0:
            return []
        bits = scan_bits(qmax, factor * c.ab / qmax)
        logger.info("hit scan: %d denominators up to %d at %d bits", denominators.size, qmax, bits)
        chunks = [
            (xi, alpha, c, factor, denominators[i : i + CHUNK], bits, self.cap_bits)
            for i in range(0, denominators.size, CHUNK)
        ]
        if self.workers > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(_hits_chunk, chunks))
        else:
            parts = [_hits_chunk(chunk) for chunk in chunks]
        hits = [hit for part in parts for hit in part]
        hits.sort(key=lambda h: (h.N, h.m))
        return hits

    def hit_counts(self, xi: RealSpec, factor, qgrid: List[int]) -> List[Tuple[int, int]]:
        """Number of distinct denominators N <= Q carrying at least one hit, per grid point"""
        if list(qgrid) != sorted(qgrid):
            raise PreconditionError("Q grid must be ascending")
        if not qgrid:
            return []
        hits = self.brute_hits(xi, factor, max(qgrid))
        denominators = np.array(sorted({h.N for h in hits}), dtype=np.int64)
        return [(Q, int(np.searchsorted(denominators, Q, side="right"))) for Q in qgrid]

    def inhomogeneous_hits(self, xi: RealSpec, alpha: RealSpec, factor, qmax: int) -> List[Hit]:
        """Hits of |xi(bn+s) - (am+r) + alpha| <= factor*ab/(bn+s)"""
        return self.brute_hits(xi, factor, qmax, alpha=alpha)

    def approximation_constant(self, xi: RealSpec, qmax: int, qmin: int = 1) -> Enclosure:
        """Smallest hit quality with qmin <= N <= qmax at factor 1"""
        hits = [h for h in self.brute_hits(xi, 1, qmax) if h.N >= qmin]
        if not hits:
            raise PreconditionError(f"no hits with {qmin} <= N <= {qmax}")
        return enclosure_min(h.quality for h in hits)


def brute_hits(xi: RealSpec, c: Constraint, factor, qmax: int, workers: int = 1) -> List[Hit]:
    return AsymptoticSearch(c, workers).brute_hits(xi, factor, qmax)


def hit_counts(xi: RealSpec, c: Constraint, factor, qgrid: List[int]) -> List[Tuple[int, int]]:
    return AsymptoticSearch(c).hit_counts(xi, factor, qgrid)


def inhomogeneous_hits(xi: RealSpec, alpha: RealSpec, c: Constraint, factor, qmax: int) -> List[Hit]:
    return AsymptoticSearch(c).inhomogeneous_hits(xi, alpha, factor, qmax)


def approximation_constant(xi: RealSpec, c: Constraint, qmax: int, qmin: int = 1) -> Enclosure:
    return AsymptoticSearch(c).approximation_constant(xi, qmax, qmin)


@dataclass
class TrigProbe:
    """Running extrema of f(n xi + alpha)**n for n = 1..nmax"""

    function: str
    running_min: List[Enclosure]
    running_max: List[Enclosure]
    first: Enclosure

    def summary(self) -> Dict[str, Any]:
        return {
            "function": self.function,
            "nmax": len(self.running_min),
            "first": self.first.to_dict(),
            "running_min": self.running_min[-1].to_dict() if self.running_min else None,
            "running_max": self.running_max[-1].to_dict() if self.running_max else None,
        }


def trig_probe(xi: RealSpec, alpha: RealSpec, nmax: int, function: str = "sin") -> TrigProbe:
    """Certified running min/max of (sin(n xi + alpha))**n (or cos).

    The liminf/limsup statements need xi outside Q*pi; that hypothesis is the
    caller's responsibility and is not checked.
    """
    if function not in ("sin", "cos"):
        raise PreconditionError(f"unknown function '{function}'")
    if nmax < 1:
        raise PreconditionError("nmax must be positive")
    kernel = libmp.mpi_sin if function == "sin" else libmp.mpi_cos
    prec = 64 + 2 * nmax.bit_length()
    width = Fraction(1, 1 << (prec + nmax.bit_length()))
    xi_enc = refine_to(xi, width)
    alpha_enc = refine_to(alpha, width)
    lt = libmp.mpf_lt

    low = high = None
    min_lo = min_hi = max_lo = max_hi = None
    running_min: List[Enclosure] = []
    running_max: List[Enclosure] = []
    first = None
    for n in range(1, nmax + 1):
        x = to_mpi(xi_enc * n + alpha_enc, prec)
        value = libmp.mpi_pow_int(kernel(x, prec), n, prec)
        if first is None:
            first = from_mpi(kernel(x, prec))
        lo, hi = value
        changed_min = min_lo is None or lt(lo, min_lo) or lt(hi, min_hi)
        changed_max = max_lo is None or lt(max_lo, lo) or lt(max_hi, hi)
        if changed_min:
            min_lo = lo if min_lo is None or lt(lo, min_lo) else min_lo
            min_hi = hi if min_hi is None or lt(hi, min_hi) else min_hi
            low = from_mpi((min_lo, min_hi))
        if changed_max:
            max_lo = lo if max_lo is None or lt(max_lo, lo) else max_lo
            max_hi = hi if max_hi is None or lt(max_hi, hi) else max_hi
            high = from_mpi((max_lo, max_hi))
        running_min.append(low)
        running_max.append(high)
    logger.info("%s probe to n=%d: min %s, max %s", function, nmax, low, high)
    return TrigProbe(function, running_min, running_max, first)
