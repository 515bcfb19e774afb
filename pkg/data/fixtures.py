from fractions import Fraction
from typing import Dict, List, Tuple

from src.cf_core import ConvergentTable, DigitStream, QuadraticSurd, Rational, RealSpec
from src.congruence import Constraint, uniform_conditions_met


class FixtureCatalog:
    """Named reals, constraints, psi families and recorded thresholds used by the acceptance suites"""

    def __init__(self):
        self.reals = self.load_reals()
        self.constraints = self.load_constraints()
        self.psi_families = self.load_psi_families()
        self.thresholds = self.load_thresholds()

    def load_reals(self) -> Dict[str, RealSpec]:
        """Quadratic surds plus the constructed counterexample stream"""
        return {
            "sqrt2": QuadraticSurd(0, 2, 1),
            "sqrt3": QuadraticSurd(0, 3, 1),
            "golden": QuadraticSurd(1, 5, 2),
            "golden_conjugate": QuadraticSurd(-1, 5, 2),
            "one_plus_sqrt7_over_3": QuadraticSurd(1, 7, 3),
            # [0; 50, 50, ...] keeps two gap lengths nearly equal
            "adversarial": QuadraticSurd(-25, 626, 1),
            "constructed": constructed_stream(Constraint(2, 2, 1, 1)),
            "one": Rational(1),
            "two_thirds": Rational(2, 3),
            "third": Rational(1, 3),
        }

    def load_constraints(self) -> Dict[str, Constraint]:
        return {
            "odd_odd": Constraint(2, 2, 1, 1),
            "c3412": Constraint(3, 4, 1, 2),
            "c5321": Constraint(5, 3, 2, 1),
            "classical": Constraint(1, 1, 0, 0),
        }

    def load_psi_families(self) -> Dict[str, Tuple[Fraction, Fraction, Fraction]]:
        """(cc, mu, beta) for Psi(Q) = cc log(Q+e)**beta / Q**mu"""
        return {
            "dirichlet": (Fraction(1), Fraction(1), Fraction(0)),
            "log_squared": (Fraction(1), Fraction(1), Fraction(2)),
            "cubic": (Fraction(1), Fraction(3), Fraction(0)),
            "divergent": (Fraction(1), Fraction(2), Fraction(0)),
        }

    def load_thresholds(self) -> Dict[str, float]:
        """Acceptance thresholds with a wide margin around the expected Monte-Carlo values"""
        return {
            # 1/q survivors shrink toward [1 - 1/Q, 1)
            "survival_dirichlet_max": 0.1,
            "survival_log_squared_min": 0.5,
            "survival_gap_min": 0.3,
            "coprime_error_constant": 4.0,
            "regular_growth_low": 3.0,
            "regular_growth_high": 5.0,
            "regular_density_floor": 0.05,
            # a dyadic block of 1/N**2 expects about ln(2)/2 hits
            "khintchine_divergent_floor": 0.1,
        }

    def get_real(self, name: str) -> RealSpec:
        if name not in self.reals:
            raise KeyError(f"unknown fixture real '{name}'")
        return self.reals[name]

    def named(self, names: List[str]) -> List[Tuple[str, RealSpec]]:
        return [(name, self.get_real(name)) for name in names]


def constructed_stream(c: Constraint, horizon: int = 24, base_digit: int = 1) -> DigitStream:
    """Digits a_k = 2**k wherever the uniform conditions fail at k, base_digit elsewhere"""
    digits: List[int] = []
    ps, qs = [1, 0], [0, 1]
    for k in range(1, horizon + 1):
        table = ConvergentTable(tuple([0] + digits), tuple(ps), tuple(qs))
        digit = base_digit if uniform_conditions_met(k, table, c) else 2 ** k
        digits.append(digit)
        ps.append(digit * ps[-1] + ps[-2])
        qs.append(digit * qs[-1] + qs[-2])
    return DigitStream(0, tuple(digits))
