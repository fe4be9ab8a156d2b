# -*- coding: utf-8 -*-
"""构型空间测试：度量、插值、直径、测度与 JSON 描述符"""
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
import pytest

from lib.errors import DomainError, StructuralError
from lib.spaces import (
    SO3,
    Circle,
    Compound,
    EuclideanL1,
    EuclideanL2,
    Sphere2,
    StateSpace,
    distance,
    euclidean_slice,
    interpolate,
    make_point,
    parse_space,
    se2,
    se3,
    space_hash,
    strip_compound,
    torus,
    weighted_measure,
)


# ============================================================================
# 测试用例数据
# ============================================================================

@dataclass
class DistanceCase:
    """两点距离用例"""
    name: str
    space: Callable[[], StateSpace]
    x: List[float]
    y: List[float]
    expected: float


QUARTER = math.pi / 4.0

DISTANCE_CASES: List[DistanceCase] = [
    DistanceCase("l2", lambda: EuclideanL2(2, [(0, 10), (0, 10)]), [0, 0], [3, 4], 5.0),
    DistanceCase("l1", lambda: EuclideanL1(2, [(0, 10), (0, 10)]), [0, 0], [3, 4], 7.0),
    DistanceCase("circle_wrap", Circle, [0.1], [2 * math.pi - 0.1], 0.2),
    DistanceCase("sphere2_orthogonal", Sphere2, [1, 0, 0], [0, 1, 0], math.pi / 2),
    DistanceCase("so3_antipodal", SO3, [1, 0, 0, 0], [-1, 0, 0, 0], 0.0),
    DistanceCase("so3_quarter", SO3, [1, 0, 0, 0], [math.cos(QUARTER), 0, 0, math.sin(QUARTER)], QUARTER),
    DistanceCase("se2_weighted", lambda: se2(weights=(1.0, 0.5)), [0, 0, 0], [0.3, 0.4, math.pi],
                 0.5 + 0.5 * math.pi),
    DistanceCase("compound_p2", lambda: Compound([EuclideanL2(1, [(0, 10)]), Circle()], p=2.0), [0, 0], [3, 1],
                 math.sqrt(10.0)),
]


@dataclass
class ExtentCase:
    name: str
    space: Callable[[], StateSpace]
    extent: float
    measure: float


EXTENT_CASES: List[ExtentCase] = [
    ExtentCase("l2_cube", lambda: EuclideanL2(3), math.sqrt(3.0), 1.0),
    ExtentCase("l1_cube", lambda: EuclideanL1(3), 3.0, 1.0),
    ExtentCase("circle", Circle, math.pi, 2 * math.pi),
    ExtentCase("sphere2", Sphere2, math.pi, 4 * math.pi),
    ExtentCase("so3", SO3, math.pi / 2, math.pi ** 2),
    ExtentCase("se2", lambda: se2(weights=(1.0, 0.5)), math.sqrt(2.0) + math.pi / 2, 2 * math.pi),
    ExtentCase("torus3", lambda: torus(3), 3 * math.pi, (2 * math.pi) ** 3),
    ExtentCase("strip", lambda: strip_compound(10.0, 1e-3), math.sqrt(101.0) + 1e-3 * math.pi, 20 * math.pi),
]

SAMPLED_SPACES: List[Callable[[], StateSpace]] = [
    lambda: EuclideanL2(3),
    lambda: EuclideanL1(2),
    Circle,
    Sphere2,
    SO3,
    lambda: se2(weights=(1.0, 0.3)),
    lambda: se3(weights=(2.0, 0.5)),
    lambda: torus(2, [1.0, 2.0]),
    lambda: Compound([EuclideanL2(2), SO3()], [1.0, 0.7], p=2.0),
]


# ============================================================================
# 度量
# ============================================================================

@pytest.mark.parametrize("case", DISTANCE_CASES, ids=lambda c: c.name)
def test_distance_values(case: DistanceCase):
    space = case.space()
    x = make_point(space, case.x)
    y = make_point(space, case.y)
    assert distance(space, x, y) == pytest.approx(case.expected, abs=1e-12)


@pytest.mark.parametrize("factory", SAMPLED_SPACES)
def test_metric_axioms(factory, rng):
    space = factory()
    pts = space.sample_many(rng, 30)
    for i in range(0, 30, 3):
        x, y, z = pts[i], pts[i + 1], pts[i + 2]
        dxy = space.distance(x, y)
        assert space.distance(x, x) == pytest.approx(0.0, abs=1e-7)
        assert dxy == pytest.approx(space.distance(y, x), abs=1e-12)
        assert dxy <= space.distance(x, z) + space.distance(z, y) + 1e-12
        assert dxy <= space.extent() + 1e-12


@pytest.mark.parametrize("factory", SAMPLED_SPACES)
def test_distance_many_matches_distance(factory, rng):
    space = factory()
    pts = space.sample_many(rng, 20)
    batch = space.distance_many(pts[0], pts)
    for j in range(20):
        assert batch[j] == pytest.approx(space.distance(pts[0], pts[j]), abs=1e-12)


# ============================================================================
# 插值
# ============================================================================

@pytest.mark.parametrize("factory", SAMPLED_SPACES)
def test_interpolate_is_geodesic(factory, rng):
    space = factory()
    pts = space.sample_many(rng, 10)
    for i in range(0, 10, 2):
        x, y = make_point(space, pts[i]), make_point(space, pts[i + 1])
        total = space.distance(x, y)
        for t in (0.25, 0.5, 0.9):
            mid = interpolate(space, x, y, t)
            assert space.distance(x, mid) == pytest.approx(t * total, abs=1e-9)
            assert space.distance(mid, y) == pytest.approx((1 - t) * total, abs=1e-9)


def test_interpolate_endpoints_and_domain():
    space = se2()
    x = make_point(space, [0.1, 0.2, 0.3])
    y = make_point(space, [0.7, 0.9, 6.0])
    assert interpolate(space, x, y, 0.0) is x
    assert np.array_equal(interpolate(space, x, y, 1.0), y)
    with pytest.raises(DomainError):
        interpolate(space, x, y, 1.5)
    with pytest.raises(DomainError):
        interpolate(space, x, y, -0.1)


def test_circle_interpolates_across_zero():
    space = Circle()
    x = make_point(space, [0.1])
    y = make_point(space, [2 * math.pi - 0.1])
    mid = interpolate(space, x, y, 0.5)
    assert space.distance(mid, make_point(space, [0.0])) == pytest.approx(0.0, abs=1e-12)


# ============================================================================
# 直径与测度
# ============================================================================

@pytest.mark.parametrize("case", EXTENT_CASES, ids=lambda c: c.name)
def test_extent_and_measure(case: ExtentCase):
    space = case.space()
    assert space.extent() == pytest.approx(case.extent, rel=1e-12)
    assert space.measure() == pytest.approx(case.measure, rel=1e-12)


def test_weighted_measure_scales_by_weight_powers():
    space = se2(weights=(2.0, 0.5))
    assert space.measure() == pytest.approx(2 * math.pi)
    # 2² · 0.5¹ · 2π
    assert weighted_measure(space) == pytest.approx(4 * math.pi)
    assert weighted_measure(Circle()) == pytest.approx(2 * math.pi)


def test_saturation_radius():
    assert Circle().saturation_radius == pytest.approx(math.pi)
    assert SO3().saturation_radius == pytest.approx(math.pi / 2)
    assert torus(2, [1.0, 0.5]).saturation_radius == pytest.approx(1.5 * math.pi)
    assert se2().saturation_radius is None
    assert EuclideanL2(2).saturation_radius is None


# ============================================================================
# 点的构造
# ============================================================================

def test_make_point_normalizes_angles():
    p = make_point(Circle(), [2 * math.pi + 0.5])
    assert p[0] == pytest.approx(0.5)
    assert not p.flags.writeable


def test_make_point_rejects_bad_layout():
    with pytest.raises(StructuralError):
        make_point(se2(), [0.1, 0.2])
    with pytest.raises(StructuralError):
        make_point(EuclideanL2(2), [0.5, 1.5])
    with pytest.raises(StructuralError):
        make_point(Sphere2(), [1.0, 1.0, 0.0])
    with pytest.raises(StructuralError):
        distance(EuclideanL2(2), np.zeros(3), np.zeros(2))


def test_samples_stay_in_space(rng):
    space = Compound([EuclideanL2(2, [(-1, 1), (2, 5)]), SO3()], [1.0, 1.0])
    pts = space.sample_many(rng, 200)
    assert pts.shape == (200, 6)
    assert np.all(pts[:, 0] >= -1) and np.all(pts[:, 0] <= 1)
    assert np.all(pts[:, 1] >= 2) and np.all(pts[:, 1] <= 5)
    assert np.allclose(np.linalg.norm(pts[:, 2:], axis=1), 1.0)


# ============================================================================
# JSON 描述符
# ============================================================================

@pytest.mark.parametrize("factory", SAMPLED_SPACES)
def test_describe_parse_roundtrip(factory):
    space = factory()
    again = parse_space(space.describe())
    assert again == space
    assert space_hash(again) == space_hash(space)
    assert len(space_hash(space)) == 12


def test_parse_shorthands():
    assert parse_space('{"se2": {}}') == se2()
    assert parse_space({"torus": {"d": 3}}) == torus(3)
    assert parse_space({"strip": {"length": 10, "w2": 0.001}}) == strip_compound(10.0, 1e-3)
    power = parse_space({"power": {"space": {"se2": {}}, "m": 2}})
    assert power.dimension == 6
    assert space_hash(se2(weights=(1.0, 0.5))) != space_hash(se2())


@pytest.mark.parametrize("descriptor", [
    "not json",
    {"klein_bottle": {}},
    {"l2": {"d": 0}},
    {"l2": {"d": 2, "bounds": [[0, 1], [1, 0]]}},
    {"compound": {"children": [{"circle": {}}]}},
    {"torus": {}},
    {"l2": {"d": 2}, "circle": {}},
])
def test_parse_space_errors(descriptor):
    with pytest.raises(StructuralError):
        parse_space(descriptor)


def test_compound_validation():
    with pytest.raises(StructuralError):
        Compound([Circle(), Circle()], [1.0, -1.0])
    with pytest.raises(StructuralError):
        Compound([Circle(), Circle()], [1.0])
    with pytest.raises(StructuralError):
        Compound([Circle(), Circle()], p=0.5)


def test_euclidean_slice():
    sl, leaf = euclidean_slice(se3())
    assert (sl.start, sl.stop) == (0, 3)
    assert leaf.d == 3
    sl, leaf = euclidean_slice(Compound([Circle(), EuclideanL2(2)]))
    assert (sl.start, sl.stop) == (1, 3)
    assert euclidean_slice(torus(2)) is None
