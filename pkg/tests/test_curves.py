import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collar_forge.curves import Arc, CircleCurve, Polyline, merge_intervals, point_segment_distance
from collar_forge.metric import curve_from_json

SQUARE = Polyline([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True)
ZIGZAG = Polyline([[0, 0], [1, 0], [1.5, 0.7], [2.5, 0.2]])


def _dense(curve, lo, hi, n=20001):
    return curve.point_at(np.linspace(lo, hi, n))


@pytest.mark.parametrize("metric", ["euclidean", "manhattan"])
def test_segment_distance_matches_dense_oracle(metric):
    rng = np.random.default_rng(3)
    P = rng.uniform(-1, 2, (50, 2))
    A, B = np.array([[0.0, 0.0]]), np.array([[1.0, 0.6]])
    exact = point_segment_distance(P, A, B, metric)[:, 0]
    seg = A + np.linspace(0, 1, 20001)[:, None] * (B - A)
    if metric == "euclidean":
        brute = np.sqrt(((P[:, None] - seg[None]) ** 2).sum(-1)).min(1)
    else:
        brute = np.abs(P[:, None] - seg[None]).sum(-1).min(1)
    assert np.all(exact <= brute + 1e-15)
    assert np.all(brute - exact <= 2e-4)


def test_merge_intervals():
    assert merge_intervals([(2, 3), (0, 1), (1, 1.5), (2.5, 4)]) == [(0.0, 1.5), (2.0, 4.0)]


@pytest.mark.parametrize("curve", [SQUARE, ZIGZAG, CircleCurve((1.0, -2.0), 0.7)])
def test_param_roundtrip(curve):
    s = np.linspace(0, curve.length, 37)[:-1]
    np.testing.assert_allclose(curve.param_of(curve.point_at(s)), s, atol=1e-12)


def test_closed_polyline_wraps():
    np.testing.assert_allclose(SQUARE.point_at(np.array([4.25])), [[0.25, 0.0]], atol=1e-15)


def test_distance_inside_interval_is_exactly_zero():
    x = ZIGZAG.point_at(np.linspace(0.1, 1.9, 101))
    assert np.all(ZIGZAG.intervals_distance(x, [(0.0, 2.0)]) == 0.0)


@pytest.mark.parametrize("metric", ["euclidean", "manhattan"])
@pytest.mark.parametrize("rho", [0.05, 0.3, 0.8])
def test_expand_matches_dense_oracle(metric, rho):
    K = [(0.4, 0.9)]
    grown = ZIGZAG.expand(K, rho, metric)
    s = np.linspace(0, ZIGZAG.length, 4001)
    d = ZIGZAG.intervals_distance(ZIGZAG.point_at(s), K, metric)
    inside = np.zeros(len(s), dtype=bool)
    for a, b in grown:
        inside |= (s >= a) & (s <= b)
    assert np.all(inside[d <= rho - 1e-9])
    assert not np.any(inside[d >= rho + 1e-9])


def test_circle_expand_grows_by_chord_angle():
    c = CircleCurve((0.0, 0.0), 1.0)
    (a, b), = c.expand([(1.0, 2.0)], 0.5)
    grow = 2 * np.arcsin(0.25)
    assert a == pytest.approx(1.0 - grow)
    assert b == pytest.approx(2.0 + grow)


def test_arc_membership_on_open_curve():
    line = Polyline([[0, 0], [3, 0]])
    s = np.array([0.0, 1.0, 2.0, 3.0])
    np.testing.assert_array_equal(Arc(-1, 2).contains_param(line, s), [True, True, False, False])
    np.testing.assert_array_equal(Arc(1, 4).contains_param(line, s), [False, False, True, True])


def test_arc_complement_and_closure_on_closed_curve():
    arc = Arc(3.5, 4.5)
    assert sorted(SQUARE.normalize(*arc.closure(SQUARE))) == [(0.0, 0.5), (3.5, 4.0)]
    assert arc.complement(SQUARE) == [(0.5, 3.5)]


def test_arc_rejects_empty():
    with pytest.raises(ValueError):
        Arc(1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 3.9), st.floats(0.01, 2.0))
def test_subcurve_matches_parent(lo, width):
    sub = SQUARE.subcurve(lo, lo + width)
    assert sub.length == pytest.approx(width, abs=1e-12)
    u = np.linspace(0, width, 9)
    np.testing.assert_allclose(sub.point_at(u), SQUARE.point_at(lo + u), atol=1e-12)


@pytest.mark.parametrize("curve", [SQUARE, ZIGZAG, CircleCurve((0.5, 0.5), 2.0)])
def test_curve_json_roundtrip(curve):
    back = curve_from_json(curve.to_json())
    s = np.linspace(0, curve.length, 11)
    np.testing.assert_allclose(back.point_at(s), curve.point_at(s), atol=1e-14)
