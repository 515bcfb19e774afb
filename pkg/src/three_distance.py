"""
Three Distance Engine for the approximation toolkit
Gap spectrum of the points {i xi}, 0 <= i <= Q, computed directly and from the greedy decomposition
"""
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.cf_core import RealSpec, expand, greedy_decompose, refine_to, require_irrational, table_until
from src.config import default_precision_cap
from src.enclosure import Enclosure
from src.errors import PrecisionCapError, PreconditionError
from src.lattice_scan import INT64_SAFE

logger = logging.getLogger(__name__)

# (c, d) stands for the length c*xi + d
Form = Tuple[int, int]


@dataclass(frozen=True)
class GapEntry:
    form: Form
    count: int
    length: Enclosure

    def to_dict(self) -> Dict[str, Any]:
        return {
            "form": [str(self.form[0]), str(self.form[1])],
            "count": self.count,
            "length": self.length.to_dict(),
        }


@dataclass
class GapSpectrum:
    """Distinct gap lengths on R/Z with their multiplicities"""

    Q: int
    entries: List[GapEntry]

    @property
    def total(self) -> int:
        return sum(e.count for e in self.entries)

    def counts(self) -> Dict[Form, int]:
        return {e.form: e.count for e in self.entries if e.count > 0}

    def largest_is_sum(self) -> bool:
        """With three lengths present, the largest form is the sum of the other two"""
        present = [e for e in self.entries if e.count > 0]
        if len(present) < 3:
            return True
        present.sort(key=lambda e: e.length.mid)
        (c1, d1), (c2, d2), (c3, d3) = (e.form for e in present)
        return (c1 + c2, d1 + d2) == (c3, d3)

    def to_dict(self) -> Dict[str, Any]:
        return {"Q": self.Q, "total": self.total, "entries": [e.to_dict() for e in self.entries]}


def _length(form: Form, xi: Enclosure) -> Enclosure:
    return xi * form[0] + form[1]


def _spectrum(Q: int, forms: Counter, xi: Enclosure) -> GapSpectrum:
    entries = [GapEntry(form, count, _length(form, xi)) for form, count in forms.items()]
    entries.sort(key=lambda e: e.length.mid)
    return GapSpectrum(Q, entries)


def _sorted_forms(xi: RealSpec, Q: int, bits: int) -> Optional[List[Form]]:
    """Forms (i, -floor(i xi)) ordered along the circle, or None if undecided at this precision"""
    enclosure = refine_to(xi, Fraction(1, 1 << bits))
    scale = 1 << bits
    X_lo = enclosure.lo.numerator * scale // enclosure.lo.denominator
    X_hi = -((-enclosure.hi.numerator * scale) // enclosure.hi.denominator)
    big = Q * (abs(X_lo) + abs(X_hi) + 2) >= INT64_SAFE
    i = np.arange(Q + 1, dtype=object if big else np.int64)
    lo = i * X_lo
    hi = i * X_hi
    floor_lo = lo // scale
    # i xi is never an integer for i >= 1, so hi itself may sit on one
    floor_hi = np.where(hi == lo, lo // scale, (hi - 1) // scale)
    if not np.all(floor_lo == floor_hi):
        return None
    frac_lo = lo - floor_lo * scale
    frac_hi = hi - floor_lo * scale
    order = np.argsort(frac_lo, kind="stable")
    if not np.all(frac_hi[order][:-1] < frac_lo[order][1:]):
        return None
    return [(int(i[j]), -int(floor_lo[j])) for j in order]


def gaps_direct(xi: RealSpec, Q: int, cap_bits: Optional[int] = None) -> GapSpectrum:
    """Circular gaps of {frac(i xi) : 0 <= i <= Q} grouped by exact length"""
    if Q < 1:
        raise PreconditionError("gap spectrum needs Q >= 1")
    require_irrational(xi)
    cap_bits = cap_bits or default_precision_cap()
    bits = 2 * Q.bit_length() + 16
    while True:
        forms = _sorted_forms(xi, Q, bits)
        if forms is not None:
            break
        if bits >= cap_bits:
            raise PrecisionCapError(f"indeterminate ordering of {{i xi}} for Q={Q} after {bits} bits")
        logger.debug("gaps_direct Q=%d: %d -> %d bits", Q, bits, 2 * bits)
        bits = min(2 * bits, cap_bits)
    gaps: Counter = Counter()
    for (c0, d0), (c1, d1) in zip(forms, forms[1:]):
        gaps[(c1 - c0, d1 - d0)] += 1
    (c_first, d_first), (c_last, d_last) = forms[0], forms[-1]
    gaps[(c_first - c_last, d_first - d_last + 1)] += 1
    return _spectrum(Q, gaps, refine_to(xi, Fraction(1, 1 << bits)))


def eta_form(table, j: int) -> Form:
    """eta_j = |q_j xi - p_j| as a linear form"""
    sign = 1 if j % 2 == 0 else -1
    return sign * table.q(j), -sign * table.p(j)


def gaps_predicted(xi: RealSpec, Q: int) -> GapSpectrum:
    """Lengths and counts read off Q = p q_{k-1} + q_{k-2} + w"""
    if Q < 1:
        raise PreconditionError("gap spectrum needs Q >= 1")
    require_irrational(xi)
    cf = expand(xi)
    table = table_until(cf, Q)
    decomp = greedy_decompose(cf, Q, table)
    k, p, w = decomp.k, decomp.p, decomp.w
    c1, d1 = eta_form(table, k - 1)
    c2, d2 = eta_form(table, k - 2)
    q1 = table.q(k - 1)
    forms = Counter()
    forms[(c1, d1)] += Q + 1 - q1
    forms[(c2 - p * c1, d2 - p * d1)] += w + 1
    forms[(c2 - (p - 1) * c1, d2 - (p - 1) * d1)] += q1 - w - 1
    width = Fraction(1, 1 << (2 * table.q(k).bit_length() + 64))
    return _spectrum(Q, forms, refine_to(xi, width))


def verify(xi: RealSpec, Q: int) -> Tuple[bool, Dict[str, Any]]:
    direct = gaps_direct(xi, Q)
    predicted = gaps_predicted(xi, Q)
    problems = []
    if direct.counts() != predicted.counts():
        problems.append("spectra differ")
    if direct.total != Q + 1:
        problems.append(f"direct total {direct.total} != {Q + 1}")
    if len(direct.counts()) > 3:
        problems.append("more than three lengths")
    if not direct.largest_is_sum():
        problems.append("largest length is not the sum of the other two")
    if problems:
        logger.warning("three-distance check failed for Q=%d: %s", Q, "; ".join(problems))
    report = {
        "Q": Q,
        "ok": not problems,
        "problems": problems,
        "direct": direct.to_dict(),
        "predicted": predicted.to_dict(),
    }
    return not problems, report


def random_instances(count: int, seed: int, qmax: int) -> List[Tuple[RealSpec, int]]:
    """Seeded (surd, Q) pairs for the fuzz suite"""
    from data.random_fixtures import random_surd

    instances = []
    for index in range(count):
        rng = np.random.default_rng([seed, index])
        instances.append((random_surd(rng), int(rng.integers(1, qmax + 1))))
    return instances
