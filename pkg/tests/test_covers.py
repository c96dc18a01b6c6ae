import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from collar_forge.covers import (Cover, NotACoverError, PartitionOfUnity, compute_order,
                                 estimate_lebesgue, greedy_maximal_net, net_constants)
from collar_forge.curves import Arc, CircleCurve, Polyline
from collar_forge.metric import MetricDomain

SEG = Polyline([[0, 0], [3, 0]])
TWO = Cover(SEG, (Arc(-1, 2), Arc(1, 4)))


def _pts(s):
    return SEG.point_at(np.asarray(s, dtype=float))


def test_lebesgue_two_arcs():
    # best margin is 1/2 at x = 1.5; the dyadic grid below diameter 3 gives 3/8
    assert estimate_lebesgue(TWO) == pytest.approx(0.375)
    assert 0 < estimate_lebesgue(TWO) <= 0.5


def test_lebesgue_single_member_is_diameter():
    assert estimate_lebesgue(Cover(SEG, (Arc(-1, 4),))) == pytest.approx(3.0)


def test_gap_is_not_a_cover():
    with pytest.raises(NotACoverError, match="not a cover"):
        estimate_lebesgue(Cover(SEG, (Arc(-1, 1), Arc(2, 4))))


@pytest.mark.parametrize("cover, order", [
    (Cover(SEG, (Arc(-1, 4),)), 1),
    (TWO, 2),
    (Cover(CircleCurve((0, 0), 1.0), (Arc(0, 3), Arc(2, 5), Arc(2.5, 6.5))), 3),
])
def test_order(cover, order):
    assert compute_order(cover) == order


def test_pou_values():
    pou = PartitionOfUnity(TWO, 1.0, 0.75).fit()
    np.testing.assert_allclose(pou.transform(_pts([1.5])), [[0.5, 0.5]])
    np.testing.assert_allclose(pou.transform(_pts([0.5])), [[1.0, 0.0]])


def test_pou_matches_hand_oracle():
    # shrink delta - delta0 = 1/4: V_1 = [0, 1.75), V_2 = (1.25, 3]
    s = np.linspace(0, 3, 301)
    f1 = np.minimum(1, np.maximum(0, 1.75 - s))
    f2 = np.minimum(1, np.maximum(0, s - 1.25))
    want = np.stack([f1, f2], 1) / (f1 + f2)[:, None]
    pou = PartitionOfUnity(TWO, 1.0, 0.75).fit()
    np.testing.assert_allclose(pou.transform(_pts(s)), want, atol=1e-12)
    assert pou.bound_member_ == pytest.approx(1 / 0.75)
    assert pou.bound_partial_ == pytest.approx(2 / 0.75)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95))
def test_pou_sums_to_one_and_respects_bound(frac):
    pou = PartitionOfUnity(TWO, 0.5, 0.5 * frac).fit()
    s = np.linspace(0, 3, 601)
    lam = pou.transform(_pts(s))
    np.testing.assert_allclose(lam.sum(1), 1.0, atol=1e-12)
    slope = np.abs(np.diff(lam, axis=0)).max() / (s[1] - s[0])
    assert slope <= pou.bound_member_ + 1e-9


def test_shrunken_cover_failure_reported():
    with pytest.raises(NotACoverError, match="shrunken"):
        PartitionOfUnity(TWO, 2.0, 0.5).fit()


@pytest.mark.parametrize("delta, delta0", [(0, None), (1.0, 1.0), (1.0, -0.1)])
def test_bad_delta(delta, delta0):
    with pytest.raises(ValueError):
        PartitionOfUnity(TWO, delta, delta0).fit()


def test_sklearn_protocol():
    pou = PartitionOfUnity(TWO, 1.0, 0.5)
    assert pou.get_params()["delta0"] == 0.5
    twin = clone(pou).set_params(delta0=0.75)
    assert twin.delta0 == 0.75 and pou.delta0 == 0.5
    with pytest.raises(NotFittedError):
        pou.transform(_pts([1.0]))


def _line_domain(length):
    base = Polyline([[0, 0], [length, 0]])
    return MetricDomain(2, base, ((-1.0, -1.0), (length + 1.0, 1.0)))


def test_net_on_segment():
    net = greedy_maximal_net(_line_domain(3.0), 1.0)
    np.testing.assert_allclose(net.points[:, 0], [0, 1, 2, 3])
    assert net.min_separation() >= 1.0
    assert net.covering_radius() <= 1.0


def test_net_single_point():
    net = greedy_maximal_net(_line_domain(0.5), 1.0)
    assert len(net.points) == 1
    assert net.min_separation() == np.inf


def test_net_rejects_bad_tau():
    with pytest.raises(ValueError):
        greedy_maximal_net(_line_domain(1.0), 0.0)


@pytest.mark.parametrize("n, C, want", [
    (1, 1, (5, 17, 8, 10, 0.25)),
    (2, 1, (25, 289, 48, 50, 0.25)),
    (1, 2, (5, 25, 8, 10, 0.125)),
])
def test_net_constants(n, C, want):
    assert tuple(net_constants(n, C)) == pytest.approx(want)


@pytest.mark.parametrize("n, C", [(0, 1), (1, 0.5)])
def test_net_constants_errors(n, C):
    with pytest.raises(ValueError):
        net_constants(n, C)
