"""
Orchard Engine for the approximation toolkit
Visibility through trees planted on (bZ+s) x (aZ+r), blocking radii, the Polya baseline and SVG scenes
"""
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from src.cf_core import Rational, RealSpec, refine_to
from src.config import default_precision_cap
from src.congruence import Constraint
from src.enclosure import Enclosure, ceil_fraction, enclosure_min, floor_fraction, sqrt_enclosure
from src.errors import ApproximationError, PrecisionCapError, PreconditionError
from src.lattice_scan import ResidueScan, admissible_denominators, scan_bits

logger = logging.getLogger(__name__)

RENDER_CAP = 400
PIXELS = 12

MODELS = ("asymptotic", "uniform")
MODES = ("euclid", "vertical")


@dataclass(frozen=True)
class OrchardScene:
    """Trees at (bn+s, am+r) with 0 < x <= depth, outside the glade"""

    constraint: Constraint
    depth: int
    model: str = "asymptotic"
    uniform_radius: Fraction = Fraction(0)
    glade: Fraction = Fraction(0)
    mode: str = "euclid"
    sector: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "uniform_radius", Fraction(self.uniform_radius))
        object.__setattr__(self, "glade", Fraction(self.glade))
        if self.sector is not None:
            object.__setattr__(self, "sector", Fraction(self.sector))
        if self.model not in MODELS:
            raise PreconditionError(f"unknown radius model '{self.model}'")
        if self.mode not in MODES:
            raise PreconditionError(f"unknown distance mode '{self.mode}'")
        if self.depth < 1:
            raise PreconditionError("orchard depth must be positive")
        if self.model == "uniform" and self.uniform_radius <= 0:
            raise PreconditionError("uniform model needs a positive radius")
        if self.glade < 0:
            raise PreconditionError("glade radius must be nonnegative")
        self._check_origin()

    def radius(self, x: int) -> Fraction:
        if self.model == "uniform":
            return self.uniform_radius
        return Fraction(self.constraint.ab, 4 * x)

    def in_glade(self, x: int, y: int) -> bool:
        return x * x + y * y <= self.glade * self.glade

    def column(self, x: int, lo: Fraction, hi: Fraction) -> Iterator[int]:
        """Tree heights am + r in [lo, hi] outside the glade"""
        c = self.constraint
        for m in range(ceil_fraction((lo - c.r) / c.a), floor_fraction((hi - c.r) / c.a) + 1):
            y = c.a * m + c.r
            if not self.in_glade(x, y):
                yield y

    def _check_origin(self) -> None:
        c = self.constraint
        for x in admissible_denominators(c.b, c.s, self.depth):
            x = int(x)
            R = self.radius(x)
            if x >= R:
                if self.model == "asymptotic":
                    break
                continue
            for y in self.column(x, -R, R):
                if x * x + y * y < R * R:
                    raise PreconditionError(f"tree at ({x}, {y}) covers the origin")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraint": self.constraint.to_dict(),
            "depth": self.depth,
            "model": self.model,
            "uniform_radius": str(self.uniform_radius),
            "glade": str(self.glade),
            "mode": self.mode,
            "sector": None if self.sector is None else str(self.sector),
        }


@dataclass(frozen=True)
class VisibilityResult:
    visible: bool
    scanned_count: int
    mode: str
    point: Optional[Tuple[int, int]] = None
    distance: Optional[Enclosure] = None
    radius: Optional[Fraction] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "verdict": "visible" if self.visible else "blocked",
            "scanned_count": self.scanned_count,
            "mode": self.mode,
        }
        if not self.visible:
            out["point"] = [str(self.point[0]), str(self.point[1])]
            out["distance"] = self.distance.to_dict()
            out["radius"] = str(self.radius)
        return out


def _slope_factor(xi: Enclosure, bits: int) -> Enclosure:
    """sqrt(1 + xi^2)"""
    return sqrt_enclosure(xi.square() + 1, bits)


def _distance(scene: OrchardScene, vertical: Enclosure, xi: Enclosure, bits: int) -> Enclosure:
    if scene.mode == "vertical":
        return vertical
    return vertical / _slope_factor(xi, bits)


def _blocks(scene: OrchardScene, vertical: Enclosure, xi: Enclosure, R: Fraction) -> Optional[bool]:
    """Certified 'distance <= R' in the scene's mode; None when undecided"""
    if scene.mode == "vertical":
        left, right = vertical, Enclosure.exact(R)
    else:
        left, right = vertical.square(), (xi.square() + 1) * (R * R)
    if left.hi <= right.lo:
        return True
    if left.lo > right.hi:
        return False
    return None


def _check_slope(scene: OrchardScene, slope: RealSpec, bits: int) -> None:
    if scene.sector is None:
        return
    if abs(refine_to(slope, Fraction(1, 1 << bits))).hi > scene.sector:
        raise PreconditionError(f"slope lies outside the sector |y| <= {scene.sector} x")


def _scan(scene: OrchardScene, slope: RealSpec, bits: int, cap_bits: int) -> VisibilityResult:
    c = scene.constraint
    xs = admissible_denominators(c.b, c.s, scene.depth)
    scan = ResidueScan(slope, c.a, c.r, cap_bits=cap_bits)
    dist_lo, _, scale = scan.bounds(xs, bits)
    xi = refine_to(slope, Fraction(1, 1 << bits))
    stretch = 1 if scene.mode == "vertical" else 1 + ceil_fraction(abs(xi).hi)
    # thresholds over-cover both modes; every tree beyond them is certainly clear
    thresholds = [floor_fraction(scene.radius(int(x)) * stretch * scale) for x in xs]
    candidates = np.nonzero(np.asarray(dist_lo, dtype=object) <= np.array(thresholds, dtype=object))[0]
    glade_cut = floor_fraction(scene.glade)
    candidates = sorted(set(candidates.tolist()) | {i for i, x in enumerate(xs) if x <= glade_cut})
    scanned = 0
    for index in candidates:
        x = int(xs[index])
        R = scene.radius(x)
        window = R * stretch + 1
        while True:
            value = xi * x
            verdicts = []
            for y in scene.column(x, value.lo - window, value.hi + window):
                vertical = abs(value - y)
                verdicts.append((y, vertical, _blocks(scene, vertical, xi, R)))
            if all(v is not None for _, _, v in verdicts):
                break
            if bits >= cap_bits or isinstance(slope, Rational):
                raise PrecisionCapError(f"indeterminate blocking at x={x} after {bits} bits")
            bits = min(2 * bits, cap_bits)
            xi = refine_to(slope, Fraction(1, 1 << bits))
        scanned += len(verdicts)
        for y, vertical, blocked in verdicts:
            if blocked:
                return VisibilityResult(False, scanned, scene.mode, (x, y), _distance(scene, vertical, xi, bits), R)
    return VisibilityResult(True, scanned, scene.mode)


def visibility(scene: OrchardScene, slope: RealSpec, cap_bits: Optional[int] = None) -> VisibilityResult:
    """First tree (by x) meeting the ray of the given slope, or Visible"""
    cap_bits = cap_bits or default_precision_cap()
    smallest = min(scene.radius(scene.depth), scene.radius(1))
    bits = scan_bits(scene.depth, smallest)
    _check_slope(scene, slope, bits)
    logger.info("visibility scan to depth %d (%s, %s)", scene.depth, scene.model, scene.mode)
    result = _scan(scene, slope, bits, cap_bits)
    if result.visible:
        again = _scan(scene, slope, min(2 * bits, cap_bits), cap_bits)
        if not again.visible:
            raise ApproximationError("visibility rescan at doubled precision disagrees")
    return result


def min_blocking_radius(scene: OrchardScene, slope: RealSpec, cap_bits: Optional[int] = None) -> Enclosure:
    """Smallest tree distance from the ray; uniform radii below it leave the horizon visible"""
    if scene.model != "uniform":
        raise PreconditionError("min_blocking_radius needs the uniform radius model")
    cap_bits = cap_bits or default_precision_cap()
    c = scene.constraint
    bits = scan_bits(scene.depth, Fraction(1, scene.depth * scene.depth))
    _check_slope(scene, slope, bits)
    xi = refine_to(slope, Fraction(1, 1 << bits))
    glade_cut = floor_fraction(scene.glade)
    parts: List[Enclosure] = []
    open_xs = admissible_denominators(c.b, c.s, scene.depth, glade_cut + 1)
    if open_xs.size:
        scan = ResidueScan(slope, c.a, c.r, cap_bits=cap_bits)
        lo, hi, scale = scan.bounds(open_xs, bits)
        parts.append(Enclosure(Fraction(int(np.min(lo)), scale), Fraction(int(np.min(hi)), scale)))
    for x in admissible_denominators(c.b, c.s, min(glade_cut, scene.depth)):
        x = int(x)
        value = xi * x
        window = abs(value).hi + scene.glade + c.a + 1
        distances = [abs(value - y) for y in scene.column(x, value.lo - window, value.hi + window)]
        if distances:
            parts.append(enclosure_min(distances))
    if not parts:
        raise PreconditionError("scene has no trees")
    vertical = enclosure_min(parts)
    return _distance(scene, vertical, xi, bits)


@dataclass
class PolyaReport:
    constraint: Constraint
    N: int
    radius: Fraction
    blocked: List[Tuple[Fraction, bool]]
    worst_margin: Enclosure

    @property
    def all_blocked(self) -> bool:
        return all(flag for _, flag in self.blocked)

    def unblocked(self) -> List[Fraction]:
        return [slope for slope, flag in self.blocked if not flag]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraint": self.constraint.to_dict(),
            "N": self.N,
            "radius": str(self.radius),
            "all_blocked": self.all_blocked,
            "unblocked": [str(s) for s in self.unblocked()],
            "worst_margin": self.worst_margin.to_dict(),
        }


def default_slope_grid(count: int = 100) -> List[Fraction]:
    return [Fraction(j, count + 1) for j in range(1, count + 1)]


def polya_baseline(c: Constraint, N: int, slopes: Optional[List[Fraction]] = None,
                   radius_factor=Fraction(1)) -> PolyaReport:
    """Does some tree of radius (ab/N)*factor inside the disk of radius N block each ray?"""
    if not c.homogeneous:
        raise PreconditionError("the Polya baseline needs r = s = 0")
    if N < c.ab:
        raise PreconditionError(f"disk radius N={N} must be at least ab={c.ab}")
    slopes = [Fraction(s) for s in (slopes or default_slope_grid())]
    radius = Fraction(c.ab, N) * Fraction(radius_factor)
    blocked: List[Tuple[Fraction, bool]] = []
    margins: List[Enclosure] = []
    for slope in slopes:
        best: Optional[Fraction] = None
        for x in range(c.b, N + 1, c.b):
            centre = slope * x
            for m in range(floor_fraction(centre / c.a) - 1, ceil_fraction(centre / c.a) + 2):
                y = c.a * m
                if x * x + y * y > N * N:
                    continue
                gap = (centre - y) ** 2
                if best is None or gap < best:
                    best = gap
        if best is None:
            blocked.append((slope, False))
            continue
        # squared distance is best / (1 + slope^2)
        squared = best / (1 + slope * slope)
        blocked.append((slope, squared <= radius * radius))
        margins.append(Enclosure.exact(radius) - sqrt_enclosure(Enclosure.exact(squared)))
    worst = enclosure_min(margins) if margins else Enclosure.exact(-radius)
    if not all(flag for _, flag in blocked):
        logger.info("polya baseline: %d of %d rays unblocked", sum(1 for _, f in blocked if not f), len(slopes))
    return PolyaReport(c, N, radius, blocked, worst)


def scene_trees(scene: OrchardScene) -> List[Tuple[int, int]]:
    """Trees drawn in the window 0 < x <= depth, |y| <= depth (and inside the sector if any)"""
    c = scene.constraint
    trees = []
    for x in admissible_denominators(c.b, c.s, scene.depth):
        x = int(x)
        for y in scene.column(x, Fraction(-scene.depth), Fraction(scene.depth)):
            if scene.sector is not None and abs(y) > scene.sector * x:
                continue
            trees.append((x, y))
    return trees


def _fmt(value) -> str:
    return f"{float(value):.6g}"


def render(scene: OrchardScene, slopes: Optional[List[RealSpec]] = None) -> str:
    """Deterministic SVG document of the scene"""
    if scene.depth > RENDER_CAP:
        raise PreconditionError(f"render depth {scene.depth} above cap {RENDER_CAP}")
    Q = scene.depth
    size = (Q + 2) * PIXELS
    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        version="1.1",
        width=str(size),
        height=str(2 * size),
        viewBox=f"-1 {-(Q + 1)} {Q + 2} {2 * Q + 2}",
    )
    world = ET.SubElement(svg, "g", transform="scale(1,-1)")
    trees = ET.SubElement(world, "g", id="trees", fill="#2f7d32")
    for x, y in scene_trees(scene):
        ET.SubElement(trees, "circle", cx=str(x), cy=str(y), r=_fmt(scene.radius(x)))
    if scene.glade > 0:
        ET.SubElement(world, "circle", id="glade", cx="0", cy="0", r=_fmt(scene.glade),
                      fill="none", stroke="#8d6e63", **{"stroke-width": "0.05"})
    if scene.sector is not None:
        sector = ET.SubElement(world, "g", id="sector", stroke="#9e9e9e", **{"stroke-width": "0.03"})
        for sign in (1, -1):
            ET.SubElement(sector, "line", x1="0", y1="0", x2=str(Q), y2=_fmt(sign * scene.sector * Q))
    rays = ET.SubElement(world, "g", id="rays", stroke="#c62828", **{"stroke-width": "0.04"})
    for slope in slopes or []:
        xi = refine_to(slope, Fraction(1, 1 << 32)).mid
        ET.SubElement(rays, "line", x1="0", y1="0", x2=str(Q), y2=_fmt(xi * Q))
    return ET.tostring(svg, encoding="unicode")


def count_circles(document: str) -> int:
    root = ET.fromstring(document)
    group = root.find(".//{http://www.w3.org/2000/svg}g[@id='trees']")
    return 0 if group is None else len(list(group))
