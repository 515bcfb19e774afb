"""
Metric Lab Engine for the approximation toolkit
Seeded Monte-Carlo probes of the metric dichotomies with certified per-sample verdicts
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.cf_core import ContinuedFraction, DigitStream, certified_digits, convergents
from src.config import default_precision_cap
from src.congruence import Constraint, annihilating_pair
from src.enclosure import Enclosure, ceil_fraction, floor_fraction, log_enclosure
from src.errors import PrecisionCapError, PreconditionError
from src.lattice_scan import INT64_SAFE, admissible_denominators, residue_bounds
from src.uniform import PsiSpec

logger = logging.getLogger(__name__)

CHUNK_SAMPLES = 256
DIGIT_PREC = 128


class DyadicSample:
    """Uniform draw from [lo, hi] known as [X, X+1] / 2**bits, refined from its own generator"""

    def __init__(self, rng: np.random.Generator, interval: Tuple = (0, 1), bits: int = 64):
        self.rng = rng
        self.lo, self.hi = Fraction(interval[0]), Fraction(interval[1])
        if not self.lo < self.hi:
            raise PreconditionError("sample interval must be nonempty")
        self.X = 0
        self.bits = 0
        self.extend(bits)

    def extend(self, bits: int) -> None:
        while bits > 0:
            step = min(bits, 62)
            self.X = (self.X << step) | int(self.rng.integers(0, 1 << step))
            self.bits += step
            bits -= step

    def mantissa(self, bits: int) -> int:
        """Top ``bits`` bits of the draw (unit interval samples)"""
        if self.bits < bits:
            self.extend(bits - self.bits)
        return self.X >> (self.bits - bits)

    def enclosure(self) -> Enclosure:
        width = self.hi - self.lo
        scale = 1 << self.bits
        return Enclosure(self.lo + width * Fraction(self.X, scale), self.lo + width * Fraction(self.X + 1, scale))

    def digits(self, n: int, cap_bits: Optional[int] = None) -> Tuple[int, List[int]]:
        """a0 and the first n partial quotients, extending the draw until they are certain"""
        cap_bits = cap_bits or default_precision_cap()
        while True:
            value = self.enclosure()
            try:
                a0, digits = certified_digits(value.lo, value.hi, n)
            except PreconditionError:
                digits = []
            else:
                if len(digits) >= n:
                    return a0, digits
            if self.bits >= cap_bits:
                raise PrecisionCapError(f"{n} digits not certified within {cap_bits} bits")
            self.extend(max(self.bits, 32))

    def stream(self, n: int) -> DigitStream:
        a0, digits = self.digits(n)
        return DigitStream(a0, tuple(digits))


def sample_real(rng: np.random.Generator, interval: Tuple = (0, 1), bits: int = 64) -> DyadicSample:
    return DyadicSample(rng, interval, bits)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Stream of sample ``index``; depends on nothing else"""
    return np.random.default_rng([seed, index])


def gauss_measure(lo, hi, prec: int = DIGIT_PREC) -> Enclosure:
    """log((1 + hi) / (1 + lo)) / log 2"""
    lo, hi = Fraction(lo), Fraction(hi)
    if not 0 <= lo <= hi <= 1:
        raise PreconditionError("gauss_measure needs 0 <= lo <= hi <= 1")
    if lo == hi:
        return Enclosure.exact(0)
    return log_enclosure(Enclosure.exact((1 + hi) / (1 + lo)), prec) / log_enclosure(Enclosure.exact(2), prec)


def gauss_kuzmin_mass(k: int) -> Enclosure:
    """Gauss measure of {a_1 = k}"""
    if k < 1:
        raise PreconditionError("partial quotients are >= 1")
    return gauss_measure(Fraction(1, k + 1), Fraction(1, k))


def block_event_mass(block: Tuple[int, ...], phi: int) -> Enclosure:
    """Gauss measure of {(a_1..a_d) = block, a_{d+1} >= phi}"""
    d = len(block)
    table = convergents(ContinuedFraction(0, tuple(block)), d)
    p, q = table.p(d), table.q(d)
    p1, q1 = table.p(d - 1), table.q(d - 1)
    ends = sorted((Fraction(p, q), Fraction(phi * p + p1, phi * q + q1)))
    return gauss_measure(*ends)


@dataclass
class TrialReport:
    """Outcome of one seeded experiment"""

    experiment: str
    seed: int
    sample_count: int
    parameters: Dict[str, Any]
    outcomes: List[Any]
    fractions: Dict[str, Tuple[float, float]]
    undecided: int = 0
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "sample_count": self.sample_count,
            "parameters": self.parameters,
            "undecided": self.undecided,
            "fractions": {k: {"fraction": f, "stderr": e} for k, (f, e) in self.fractions.items()},
            "extras": self.extras,
            "outcomes": self.outcomes,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [{"statistic": k, "fraction": f, "stderr": e} for k, (f, e) in self.fractions.items()]
        return pd.DataFrame(rows, columns=["statistic", "fraction", "stderr"])


def binomial_fraction(hits: int, total: int) -> Tuple[float, float]:
    if total == 0:
        return float("nan"), float("nan")
    p = hits / total
    return p, math.sqrt(p * (1 - p) / total)


def _run_chunks(worker: Callable, jobs: List[tuple], workers: int) -> List[Any]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(worker, jobs))
    else:
        parts = [worker(job) for job in jobs]
    return [item for part in parts for item in part]


def _sample_jobs(samples: int, *common) -> List[tuple]:
    return [(start, min(start + CHUNK_SAMPLES, samples)) + common for start in range(0, samples, CHUNK_SAMPLES)]


def _scaled_array(values: List[int]) -> np.ndarray:
    big = any(abs(v) >= INT64_SAFE for v in values)
    return np.array(values, dtype=object if big else np.int64)


class ThresholdTable:
    """Enclosures T(N) with their integer images at scale 2**bits, cached per precision"""

    def __init__(self, values: List[Enclosure]):
        self.values = values
        self._cache: Dict[Tuple[int, str], np.ndarray] = {}

    def scaled(self, bits: int, mode: str) -> np.ndarray:
        key = (bits, mode)
        if key not in self._cache:
            scale = 1 << bits
            if mode == "ceil_lo":
                ints = [ceil_fraction(t.lo * scale) for t in self.values]
            elif mode == "ceil_hi":
                ints = [ceil_fraction(t.hi * scale) for t in self.values]
            elif mode == "floor_lo":
                ints = [floor_fraction(t.lo * scale) for t in self.values]
            else:
                ints = [floor_fraction(t.hi * scale) for t in self.values]
            self._cache[key] = _scaled_array(ints)
        return self._cache[key]


def _start_bits(qmax: int, smallest: Fraction) -> int:
    smallest = max(Fraction(smallest), Fraction(1, 1 << 512))
    return max(32, qmax.bit_length() + ceil_fraction(1 / smallest).bit_length() + 8)


# Khintchine-type blocks


def _block_hit(sample: DyadicSample, c: Constraint, N: np.ndarray, table: ThresholdTable,
               require_gcd: bool, bits: int, cap_bits: int) -> Optional[int]:
    """1 / 0 for a certified hit / miss in the block, None when undecided at the cap"""
    while True:
        X = sample.mantissa(bits)
        scale = 1 << bits
        dist_lo, _ = residue_bounds(N, X, 1, scale, c.a, c.r)
        possible = np.nonzero(dist_lo < table.scaled(bits, "ceil_hi"))[0]
        if possible.size == 0:
            return 0
        xi = Enclosure(Fraction(X, scale), Fraction(X + 1, scale))
        undecided = False
        for index in possible:
            n_val = int(N[index])
            bound = table.values[index]
            value = xi * n_val
            m_lo = ceil_fraction((value.lo - bound.hi - c.r) / c.a)
            m_hi = floor_fraction((value.hi + bound.hi - c.r) / c.a)
            for m in range(m_lo, m_hi + 1):
                numerator = c.a * m + c.r
                if require_gcd and math.gcd(numerator, n_val) != c.content:
                    continue
                err = abs(value - numerator)
                if err.hi < bound.lo:
                    return 1
                if err.lo < bound.hi:
                    undecided = True
        if not undecided:
            return 0
        if bits >= cap_bits:
            return None
        bits = min(2 * bits, cap_bits)


def _khintchine_chunk(job) -> List[Optional[int]]:
    start, stop, seed, c, N, values, require_gcd, bits, cap_bits = job
    table = ThresholdTable(values)
    samples = [DyadicSample(sample_rng(seed, i), bits=bits) for i in range(start, stop)]
    scale = 1 << bits
    X = np.array([s.mantissa(bits) for s in samples], dtype=np.int64 if bits <= 62 else object)[:, None]
    dist_lo, dist_hi = residue_bounds(N[None, :], X, 1, scale, c.a, c.r)
    sure_hit = np.any(dist_hi < table.scaled(bits, "ceil_lo"), axis=1)
    sure_miss = np.all(dist_lo >= table.scaled(bits, "ceil_hi"), axis=1)
    outcomes: List[Optional[int]] = []
    for j, sample in enumerate(samples):
        if sure_miss[j]:
            outcomes.append(0)
        elif sure_hit[j] and not require_gcd:
            outcomes.append(1)
        else:
            outcomes.append(_block_hit(sample, c, N, table, require_gcd, 2 * bits, cap_bits))
    return outcomes


def khintchine_block_trial(
    c: Constraint,
    psi: PsiSpec,
    block: Tuple[int, int],
    samples: int,
    seed: int,
    require_gcd: bool = False,
    workers: int = 1,
    cap_bits: Optional[int] = None,
) -> TrialReport:
    """Fraction of xi in (0, 1) with |xi - (am+r)/N| < Psi(N) for some admissible N in the block"""
    N1, N2 = block
    if not 1 <= N1 < N2:
        raise PreconditionError("block needs 1 <= N1 < N2")
    if not psi.nonincreasing:
        raise PreconditionError(f"psi {psi.to_text()} is not nonincreasing")
    cap_bits = cap_bits or default_precision_cap()
    N = admissible_denominators(c.b, c.s, N2, N1)
    values = [psi.tilde(int(n)) for n in N]
    block_sum = sum((psi.value(int(n)) * ((int(n) - c.s) // c.b) for n in N), Enclosure.exact(0))
    if N.size == 0:
        outcomes: List[Optional[int]] = [0] * samples
    else:
        bits = _start_bits(N2, min(v.lo for v in values))
        logger.info("khintchine block %s: %d samples, %d denominators", block, samples, N.size)
        jobs = _sample_jobs(samples, seed, c, N, values, require_gcd, bits, cap_bits)
        outcomes = _run_chunks(_khintchine_chunk, jobs, workers)
    decided = [o for o in outcomes if o is not None]
    undecided = len(outcomes) - len(decided)
    if undecided:
        logger.warning("khintchine block %s: %d undecided samples", block, undecided)
    return TrialReport(
        experiment="khintchine_block",
        seed=seed,
        sample_count=samples,
        parameters={
            "constraint": c.to_dict(),
            "psi": psi.to_dict(),
            "block": [N1, N2],
            "require_gcd": require_gcd,
        },
        outcomes=outcomes,
        fractions={"hit": binomial_fraction(sum(decided), len(decided))},
        undecided=undecided,
        extras={"block_sum": block_sum.to_dict(12)},
    )


# uniform survival


def _first_failures(X: np.ndarray, bits: int, c: Constraint, N: np.ndarray, Qs: np.ndarray,
                    table: ThresholdTable) -> List[Tuple[str, int]]:
    """Per row: ('fail', Q) at the first failing Q, ('survive', 0) or ('undecided', Q)"""
    scale = 1 << bits
    dist_lo, dist_hi = residue_bounds(N[None, :], X, 1, scale, c.a, c.r)
    acc_lo = np.minimum.accumulate(dist_lo, axis=1)
    acc_hi = np.minimum.accumulate(dist_hi, axis=1)
    index = np.searchsorted(N, Qs, side="right") - 1
    defined = index >= 0
    index = np.maximum(index, 0)
    min_lo, min_hi = acc_lo[:, index], acc_hi[:, index]
    fails = (min_lo > table.scaled(bits, "floor_hi")) | ~defined[None, :]
    passes = (min_hi <= table.scaled(bits, "floor_lo")) & defined[None, :]
    verdicts = []
    for row in range(X.shape[0]):
        open_ = np.nonzero(~passes[row])[0]
        if open_.size == 0:
            verdicts.append(("survive", 0))
            continue
        first = int(open_[0])
        status = "fail" if fails[row, first] else "undecided"
        verdicts.append((status, int(Qs[first])))
    return verdicts


def _survival_chunk(job) -> List[Optional[int]]:
    start, stop, seed, c, N, Qs, values, bits, cap_bits = job
    table = ThresholdTable(values)
    samples = [DyadicSample(sample_rng(seed, i), bits=bits) for i in range(start, stop)]
    X = np.array([s.mantissa(bits) for s in samples], dtype=np.int64 if bits <= 62 else object)[:, None]
    outcomes: List[Optional[int]] = []
    for sample, (status, Q) in zip(samples, _first_failures(X, bits, c, N, Qs, table)):
        level = bits
        while status == "undecided" and level < cap_bits:
            level = min(2 * level, cap_bits)
            X_row = np.array([[sample.mantissa(level)]], dtype=object)
            status, Q = _first_failures(X_row, level, c, N, Qs, table)[0]
        if status == "undecided":
            outcomes.append(None)
        else:
            # 0 marks a sample that never fails on the grid range
            outcomes.append(Q if status == "fail" else 0)
    return outcomes


def uniform_survival(
    c: Constraint,
    psi: PsiSpec,
    samples: int,
    qgrid: List[int],
    seed: int,
    q_start: int = 1,
    workers: int = 1,
    cap_bits: Optional[int] = None,
) -> TrialReport:
    """Fraction of xi in (0, 1) with no Dirichlet failure on [q_start, Q], for each Q in the grid"""
    if not psi.nonincreasing or not psi.tilde_nondecreasing:
        raise PreconditionError(f"psi {psi.to_text()} must be nonincreasing with Q*psi nondecreasing")
    qgrid = sorted(int(q) for q in qgrid)
    if not qgrid or qgrid[0] < q_start or q_start < 1:
        raise PreconditionError("grid must be nonempty with q_start <= min(grid)")
    cap_bits = cap_bits or default_precision_cap()
    qmax = qgrid[-1]
    N = admissible_denominators(c.b, c.s, qmax)
    Qs = np.arange(q_start, qmax + 1, dtype=np.int64)
    values = [psi.value(int(Q)) for Q in Qs]
    bits = _start_bits(qmax, values[-1].lo)
    logger.info("uniform survival: %d samples up to Q=%d at %d bits", samples, qmax, bits)
    jobs = _sample_jobs(samples, seed, c, N, Qs, values, bits, cap_bits)
    outcomes = _run_chunks(_survival_chunk, jobs, workers)
    decided = [o for o in outcomes if o is not None]
    undecided = len(outcomes) - len(decided)
    if undecided:
        logger.warning("uniform survival: %d undecided samples", undecided)
    fractions = {}
    for Q in qgrid:
        alive = sum(1 for o in decided if o == 0 or o > Q)
        fractions[f"survival@{Q}"] = binomial_fraction(alive, len(decided))
    return TrialReport(
        experiment="uniform_survival",
        seed=seed,
        sample_count=samples,
        parameters={"constraint": c.to_dict(), "psi": psi.to_dict(), "qgrid": qgrid, "q_start": q_start},
        outcomes=outcomes,
        fractions=fractions,
        undecided=undecided,
    )


def survival_curve(report: TrialReport) -> pd.DataFrame:
    rows = []
    for name, (fraction, stderr) in report.fractions.items():
        rows.append({"Q": int(name.split("@")[1]), "survival": fraction, "stderr": stderr})
    return pd.DataFrame(rows, columns=["Q", "survival", "stderr"])


# Borel-Bernstein events


@dataclass(frozen=True)
class BBTrialSpec:
    """Events (a_j..a_{j+d-1}) = f_j(xi), a_{j+d} >= phi_j at j = c*k"""

    A: int
    d: int
    c: int
    phi_scale: Fraction = Fraction(1)
    phi_power: Fraction = Fraction(1)
    rule: str = "fixed"
    block: Tuple[int, ...] = ()
    b: int = 2

    def __post_init__(self):
        object.__setattr__(self, "phi_scale", Fraction(self.phi_scale))
        object.__setattr__(self, "phi_power", Fraction(self.phi_power))
        object.__setattr__(self, "block", tuple(self.block))
        if self.A < 1 or self.d < 0:
            raise PreconditionError("block rules need A >= 1 and d >= 0")
        if self.d >= 1 and self.c < self.d + 1:
            raise PreconditionError(f"spacing c={self.c} must be at least d+1={self.d + 1}")
        if self.c < 1:
            raise PreconditionError("spacing c must be positive")
        if self.rule == "fixed":
            if len(self.block) != self.d or any(not 1 <= x <= self.A for x in self.block):
                raise PreconditionError(f"fixed block must lie in [1, {self.A}]^{self.d}")
        elif self.rule == "annihilating":
            if self.d != 2 or self.A < self.b:
                raise PreconditionError("annihilating rule needs d = 2 and A >= b")
        else:
            raise PreconditionError(f"unknown block rule '{self.rule}'")

    def phi(self, j: int) -> int:
        if self.phi_power.denominator == 1:
            value = self.phi_scale * Fraction(j) ** int(self.phi_power)
        else:
            value = self.phi_scale * Fraction(j ** float(self.phi_power))
        return max(1, ceil_fraction(value))

    def target(self, j: int, qs: List[int]) -> Tuple[int, ...]:
        """f_j given q_{-1}, q_0, q_1, ... (qs[i] = q_{i-1})"""
        if self.rule == "fixed":
            return self.block
        return annihilating_pair(qs[j - 1], qs[j], self.b)

    def lower_bound(self) -> float:
        """log 2 / (4 (2 (2A)^d)^4)"""
        return math.log(2) / (4 * (2 * (2 * self.A) ** self.d) ** 4)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "A": self.A,
            "d": self.d,
            "c": self.c,
            "phi_scale": str(self.phi_scale),
            "phi_power": str(self.phi_power),
            "rule": self.rule,
            "block": list(self.block),
            "b": self.b,
        }


def _bb_chunk(job) -> List[Optional[List[int]]]:
    start, stop, seed, spec, k1, k2, cap_bits = job
    depth = spec.c * k2 + spec.d
    outcomes: List[Optional[List[int]]] = []
    for i in range(start, stop):
        sample = DyadicSample(sample_rng(seed, i))
        try:
            _, digits = sample.digits(depth, cap_bits)
        except PrecisionCapError:
            outcomes.append(None)
            continue
        a = [0] + digits
        qs = [0, 1]
        for digit in digits:
            qs.append(digit * qs[-1] + qs[-2])
        hits = []
        for k in range(k1, k2 + 1):
            j = spec.c * k
            if tuple(a[j : j + spec.d]) == tuple(spec.target(j, qs)) and a[j + spec.d] >= spec.phi(j):
                hits.append(j)
        outcomes.append(hits)
    return outcomes


def borel_bernstein_trial(
    spec: BBTrialSpec,
    samples: int,
    k_range: Tuple[int, int],
    seed: int,
    workers: int = 1,
    cap_bits: Optional[int] = None,
) -> TrialReport:
    """Frequency of at least one event E_{ck} with k in k_range, plus per-index frequencies"""
    k1, k2 = k_range
    if not 1 <= k1 <= k2:
        raise PreconditionError("k_range needs 1 <= k1 <= k2")
    if spec.rule == "annihilating" and spec.c * k1 < 2:
        raise PreconditionError("annihilating rule needs c*k >= 2")
    cap_bits = cap_bits or default_precision_cap()
    jobs = _sample_jobs(samples, seed, spec, k1, k2, cap_bits)
    outcomes = _run_chunks(_bb_chunk, jobs, workers)
    decided = [o for o in outcomes if o is not None]
    undecided = len(outcomes) - len(decided)
    if undecided:
        logger.warning("borel-bernstein trial: %d undecided samples", undecided)
    indices = [spec.c * k for k in range(k1, k2 + 1)]
    fractions = {"union": binomial_fraction(sum(1 for o in decided if o), len(decided))}
    for j in indices:
        fractions[f"event@{j}"] = binomial_fraction(sum(1 for o in decided if j in o), len(decided))
    union_bound = min(1.0, 2 * sum(1 / spec.phi(j) for j in indices))
    return TrialReport(
        experiment="borel_bernstein",
        seed=seed,
        sample_count=samples,
        parameters={"spec": spec.to_dict(), "k_range": [k1, k2]},
        outcomes=outcomes,
        fractions=fractions,
        undecided=undecided,
        extras={"union_bound": union_bound, "event_lower_bound": spec.lower_bound()},
    )
