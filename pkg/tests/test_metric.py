import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collar_forge.curves import CircleCurve, Polyline
from collar_forge.metric import (Ball, Box, Complement, CurveSet, Empty, HalfSpace, MetricDomain, PointCloud,
                                 dist_to_set, metric_distance, product_distance, quasi_random_sample,
                                 region_from_json)

coord = st.floats(-10, 10, allow_nan=False)
height = st.floats(0, 1, allow_nan=False)
collar_point = st.tuples(coord, coord, height)


def test_product_distance_identical_points():
    assert product_distance([0.3, -1.0, 0.0], [0.3, -1.0, 0.0]) == 0.0


@pytest.mark.parametrize("x", [(0.0, 0.0), (3.0, -2.0), (1e6, 1e-6)])
def test_product_distance_height_gap(x):
    assert product_distance([*x, 0.0], [*x, 1.0]) == 1.0


def test_product_distance_hand_value():
    assert product_distance([0, 0, 0.2], [3, 4, 0.5]) == pytest.approx(5.3, abs=1e-12)


def test_product_distance_manhattan():
    assert product_distance([0, 0, 0.2], [3, 4, 0.5], metric="manhattan") == pytest.approx(7.3, abs=1e-12)


def test_product_distance_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        product_distance([0, 0, 0], [0, 0, 0, 0])


def test_product_distance_checks_domain_dimension():
    dom = MetricDomain(2, Polyline([[0, 0], [1, 0]]), ((0, 0), (1, 1)))
    with pytest.raises(ValueError):
        product_distance([0, 0], [1, 0], dom)


@settings(max_examples=200, deadline=None)
@given(collar_point, collar_point, collar_point)
def test_product_distance_is_a_metric(p, q, r):
    d = product_distance
    assert d(p, q) == d(q, p)
    assert d(p, p) == 0
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-12


def test_ball_complement_distance_at_center():
    assert dist_to_set([0.0, 0.0], Complement(Ball((0.0, 0.0), 1.0))) == 1.0


def test_point_inside_set_has_zero_distance():
    assert dist_to_set([0.2, 0.3], Ball((0.0, 0.0), 1.0)) == 0.0
    assert dist_to_set([0.2, 0.3], Box((0, 0), (1, 1))) == 0.0


def test_distance_to_unit_disk():
    assert dist_to_set([2.0, 0.0], Ball((0.0, 0.0), 1.0)) == pytest.approx(1.0, abs=1e-15)


def test_empty_set_is_infinitely_far():
    assert dist_to_set([1.0, 2.0], Empty()) == np.inf


@pytest.mark.parametrize("metric, expected", [("euclidean", np.hypot(1, 2)), ("manhattan", 3.0)])
def test_box_distance_per_metric(metric, expected):
    assert dist_to_set([2.0, 3.0], Box((0, 0), (1, 1)), metric=metric) == pytest.approx(expected, abs=1e-15)


def test_box_complement_distance():
    d = Box((0, 0), (1, 2)).dist_to_complement(np.array([[0.25, 1.0]]))
    assert d[0] == pytest.approx(0.25)


def test_halfspace_uses_dual_norm():
    H = HalfSpace((1.0, 1.0), 2.0)
    assert dist_to_set([0.0, 0.0], H, metric="euclidean") == pytest.approx(np.sqrt(2))
    assert dist_to_set([0.0, 0.0], H, metric="manhattan") == pytest.approx(2.0)


def test_point_cloud_is_an_upper_bound():
    circle = CircleCurve((0, 0), 1.0)
    cloud = PointCloud(circle.sample(64, 0), resolution=2 * np.pi / 64)
    P = np.array([[0.0, 0.0], [2.0, 0.5]])
    exact = CurveSet(circle).dist(P)
    approx = cloud.dist(P)
    assert np.all(approx >= exact - 1e-12)
    assert np.all(approx <= exact + cloud.resolution)


@pytest.mark.parametrize("region", [Ball((0.0, 0.0), 1.0), Box((0, 0), (2, 1)), HalfSpace((0.0, 1.0), 0.5)])
def test_zero_distance_exactly_on_closure(region):
    probes = {
        "ball": ([[0.0, 1.0], [0.1, 0.1]], [[0.0, 1.0 + 1e-9]]),
        "box": ([[2.0, 0.5], [1.0, 1.0]], [[2.0 + 1e-9, 0.5]]),
        "halfplane": ([[3.0, 0.5], [0.0, 7.0]], [[0.0, 0.5 - 1e-9]]),
    }[region.kind]
    inside, outside = probes
    assert np.all(region.dist(np.array(inside)) == 0)
    assert np.all(region.dist(np.array(outside)) > 0)


def test_sampler_single_point_repeats():
    a = quasi_random_sample(Box((0, 0), (1, 1)), 1, seed=0)
    b = quasi_random_sample(Box((0, 0), (1, 1)), 1, seed=0)
    assert a.shape == (1, 2)
    np.testing.assert_array_equal(a, b)


def test_sampler_stays_in_unit_box():
    P = quasi_random_sample(Box((0, 0, 0), (1, 1, 1)), 1000, seed=0)
    assert P.shape == (1000, 3)
    assert np.all((P >= 0) & (P <= 1))


@pytest.mark.parametrize("r", [0.01, 1.0, 7.5])
def test_sampler_on_circle(r):
    P = quasi_random_sample(CircleCurve((0.0, 0.0), r), 4, seed=1)
    assert P.shape == (4, 2)
    np.testing.assert_allclose(np.hypot(P[:, 0], P[:, 1]), r, atol=1e-12)


def test_sampler_rejects_degenerate_box():
    with pytest.raises(ValueError, match="degenerate"):
        quasi_random_sample(Box((0, 0), (1, 0)), 10)


def test_sampler_rejects_bad_count():
    with pytest.raises(ValueError):
        quasi_random_sample(Box((0, 0), (1, 1)), 0)


def test_sampler_differs_by_seed():
    a = quasi_random_sample(Box((0, 0), (1, 1)), 8, seed=0)
    b = quasi_random_sample(Box((0, 0), (1, 1)), 8, seed=1)
    assert not np.array_equal(a, b)


def test_domain_metric_checks():
    dom = MetricDomain(2, CircleCurve((0, 0), 1.0), ((-1, -1), (1, 1)))
    assert dom.check_metric()
    assert np.all(dom.base_membership(dom.base_sampler(100, 3)))


def test_callable_metric():
    cheb = lambda P, Q: np.max(np.abs(np.asarray(P) - np.asarray(Q)), axis=-1)  # noqa: E731
    assert metric_distance([0, 0], [3, -4], cheb) == 4


@pytest.mark.parametrize("region", [Ball((1.0, 2.0), 0.5), Box((0.0, 0.0), (1.0, 2.0)),
                                    HalfSpace((0.0, 1.0), 0.25), Complement(Ball((0.0, 0.0), 1.0))])
def test_region_json_roundtrip(region):
    back = region_from_json(region.to_json())
    P = np.array([[0.3, 0.4], [2.0, -1.0], [1.0, 2.5]])
    np.testing.assert_array_equal(back.dist(P), region.dist(P))
