import math
from fractions import Fraction

import pytest

from src.cf_core import Rational, refine_to
from src.congruence import Constraint
from src.errors import PreconditionError
from src.orchard import (
    RENDER_CAP,
    OrchardScene,
    count_circles,
    default_slope_grid,
    min_blocking_radius,
    polya_baseline,
    render,
    scene_trees,
    visibility,
)


def test_scene_validation(classical):
    for kwargs in (
        dict(model="gaussian"),
        dict(mode="taxicab"),
        dict(depth=0),
        dict(model="uniform"),
        dict(glade=-1),
    ):
        params = dict(constraint=classical, depth=10)
        params.update(kwargs)
        with pytest.raises(PreconditionError):
            OrchardScene(**params)


def test_scene_rejects_tree_over_origin(classical):
    with pytest.raises(PreconditionError, match="covers the origin"):
        OrchardScene(classical, 10, model="uniform", uniform_radius=2)
    scene = OrchardScene(classical, 10, model="uniform", uniform_radius=2, glade=3)
    assert not any(scene.in_glade(x, y) for x, y in scene_trees(scene))


def test_radius_models(odd_odd):
    assert OrchardScene(odd_odd, 10).radius(5) == Fraction(4, 20)
    assert OrchardScene(odd_odd, 10, model="uniform", uniform_radius=Fraction(1, 7)).radius(5) == Fraction(1, 7)


def test_golden_ray_is_blocked_by_first_column(golden, classical):
    result = visibility(OrchardScene(classical, 50), golden)
    assert not result.visible
    assert result.point == (1, 2)
    assert result.radius == Fraction(1, 4)
    assert result.to_dict()["verdict"] == "blocked"


def test_golden_ray_passes_in_vertical_mode(golden, classical):
    result = visibility(OrchardScene(classical, 200, mode="vertical"), golden)
    assert result.visible
    assert result.to_dict() == {"verdict": "visible", "scanned_count": result.scanned_count, "mode": "vertical"}


def test_rational_ray_hits_lattice_point(classical):
    result = visibility(OrchardScene(classical, 10), Rational(1, 2))
    assert not result.visible
    assert result.point == (2, 1)
    assert result.distance.hi == 0


def test_shifted_orchard_blocks_only_admissible_trees(sqrt2, odd_odd):
    result = visibility(OrchardScene(odd_odd, 100), sqrt2)
    if not result.visible:
        x, y = result.point
        assert x % 2 == 1 and y % 2 == 1


def test_sector_rejects_steep_slopes(golden, classical):
    with pytest.raises(PreconditionError, match="sector"):
        visibility(OrchardScene(classical, 10, sector=1), golden)


def test_min_blocking_radius_separates_verdicts(golden, classical):
    scene = OrchardScene(classical, 100, model="uniform", uniform_radius=Fraction(1, 1000))
    radius = min_blocking_radius(scene, golden)
    x = refine_to(golden, Fraction(1, 2**200)).mid
    vertical = min(abs(n * x - round(n * x)) for n in range(1, 101))
    expected = float(vertical) / math.sqrt(1 + float(x) ** 2)
    assert abs(float(radius.mid) - expected) < 1e-9
    below = OrchardScene(classical, 100, model="uniform", uniform_radius=radius.lo * Fraction(99, 100))
    above = OrchardScene(classical, 100, model="uniform", uniform_radius=radius.hi * Fraction(101, 100))
    assert visibility(below, golden).visible
    assert not visibility(above, golden).visible
    with pytest.raises(PreconditionError):
        min_blocking_radius(OrchardScene(classical, 10), golden)


def test_polya_baseline(classical):
    report = polya_baseline(classical, 10)
    assert report.all_blocked
    assert report.unblocked() == []
    assert report.worst_margin.lo >= 0
    slope = Fraction(618, 1000)
    thin = polya_baseline(classical, 10, slopes=[slope], radius_factor=Fraction(1, 4))
    assert thin.unblocked() == [slope]
    assert thin.worst_margin.hi < 0
    assert thin.to_dict()["all_blocked"] is False


def test_polya_preconditions(odd_odd):
    with pytest.raises(PreconditionError):
        polya_baseline(odd_odd, 10)
    with pytest.raises(PreconditionError):
        polya_baseline(Constraint(2, 3), 5)


def test_default_slope_grid():
    assert default_slope_grid(3) == [Fraction(1, 4), Fraction(2, 4), Fraction(3, 4)]
    assert len(default_slope_grid()) == 100


def test_render_is_deterministic(classical, golden):
    scene = OrchardScene(classical, 5)
    document = render(scene, [golden])
    assert document == render(scene, [golden])
    assert count_circles(document) == 55
    assert 'id="rays"' in document


def test_render_extras(odd_odd):
    scene = OrchardScene(odd_odd, 20, glade=Fraction(3), sector=Fraction(1, 2))
    document = render(scene)
    assert 'id="glade"' in document and 'id="sector"' in document
    trees = scene_trees(scene)
    assert count_circles(document) == len(trees)
    assert all(abs(y) * 2 <= x for x, y in trees)
    with pytest.raises(PreconditionError):
        render(OrchardScene(odd_odd, RENDER_CAP + 1))
