import numpy as np
import pytest

from collar_forge.collar import (CollarValidationError, GlobalCollar, LocalCollar, build_global_collar,
                                 merge_discrete_collars, push_map, restrict_collar, xi_transform)
from collar_forge.covers import Cover, NotACoverError, PartitionOfUnity
from collar_forge.curves import Arc, Polyline
from collar_forge.fixtures import _shear_collar, make_strip_two_collar
from collar_forge.metric import Box, HalfSpace

SEG = Polyline([[0, 0], [3, 0]])


def _x(s):
    return SEG.point_at(np.atleast_1d(np.asarray(s, dtype=float)))


@pytest.mark.parametrize("lam, t, want", [
    (0.0, 0.3, 0.3),
    (1.0, 0.0, 0.5),
    (0.4, 0.75, 0.75),
    (0.5, 0.375, 0.5),
    (1.0, 0.9, 0.9),
])
def test_xi_values(lam, t, want):
    assert xi_transform(lam, t) == pytest.approx(want, abs=1e-15)


def test_xi_zero_weight_is_bitwise_identity():
    t = np.linspace(0, 1, 1001)
    assert np.array_equal(xi_transform(np.zeros_like(t), t), t)


def test_xi_monotone_and_fixes_top():
    t = np.linspace(0, 1, 501)
    for lam in (0.0, 0.3, 1.0):
        v = xi_transform(np.full_like(t, lam), t)
        assert np.all(np.diff(v) >= 0)
        assert v[-1] == 1.0


@pytest.mark.parametrize("lam, t", [(1.5, 0.2), (0.2, -0.1), (0.2, np.nan)])
def test_xi_rejects_out_of_range(lam, t):
    with pytest.raises(ValueError):
        xi_transform(lam, t)


def test_push_map_cases():
    c = _shear_collar(SEG, 0.0, 2.0, 0.0, "v")
    one = lambda b: np.ones(len(b))
    zero = lambda b: np.zeros(len(b))
    base = _x([1.0])
    np.testing.assert_allclose(push_map(c, one, base), [[1.0, 0.5]])
    np.testing.assert_array_equal(push_map(c, zero, [[1.0, 0.3]]), [[1.0, 0.3]])
    np.testing.assert_array_equal(push_map(c, one, [[1.0, 0.8]]), [[1.0, 0.8]])
    outside = np.array([[2.5, 0.2]])
    np.testing.assert_array_equal(push_map(c, one, outside), outside)


@pytest.fixture(scope="module")
def strip_gc():
    return make_strip_two_collar(0.2).global_collar(n_check=2000)


@pytest.mark.parametrize("s, t, j", [
    (0.5, 0.0, 0), (0.5, 0.3, 1), (0.5, 1.0, 1),
    (1.5, 0.5, 1), (1.5, 0.5 + 1e-13, 1), (1.5, 0.6, 2),
    (2.5, 0.1, 2),
])
def test_region_index(strip_gc, s, t, j):
    assert strip_gc.region_index(_x(s), t)[0] == j


def test_single_collar_halves_height():
    c = _shear_collar(SEG, 0.0, 3.0, 0.3, "only")
    pou = PartitionOfUnity(Cover(SEG, (Arc(-1, 4),)), 3.0)
    gc = build_global_collar([c], pou, n_check=500)
    x = _x(np.linspace(0, 3, 31))
    for t in (0.0, 0.2, 0.7, 1.0):
        np.testing.assert_allclose(gc.evaluate(x, t), c.forward(x, t / 2), atol=1e-15)


def test_first_collar_alone_where_its_weight_is_one(strip_gc):
    c1 = strip_gc.collars_[0]
    x = _x(np.linspace(0, 1.2, 13))
    for t in (0.1, 0.5, 1.0):
        np.testing.assert_allclose(strip_gc.evaluate(x, t), c1.forward(x, t / 2), atol=1e-15)


def test_truncation_agrees_where_later_weights_vanish(strip_gc):
    x = _x(np.linspace(0, 1.2, 13))
    trunc = strip_gc.truncated(1)
    for t in (0.0, 0.4, 1.0):
        np.testing.assert_array_equal(trunc.evaluate(x, t), strip_gc.evaluate(x, t))
    full = strip_gc.truncated(2)
    xx = _x(np.linspace(0, 3, 31))
    np.testing.assert_array_equal(full.evaluate(xx, 0.6), strip_gc.evaluate(xx, 0.6))


def test_fiber_heights_increase(strip_gc):
    t = np.linspace(0, 1, 201)
    for s in np.linspace(0, 3, 13):
        y = strip_gc.evaluate(np.repeat(_x(s), len(t), 0), t)[:, 1]
        assert np.all(np.diff(y) > 0)


def test_transform_matches_evaluate(strip_gc):
    x = _x([0.3, 1.6, 2.9])
    t = np.array([0.2, 0.55, 0.9])
    np.testing.assert_array_equal(strip_gc.transform(np.column_stack([x, t])), strip_gc.evaluate(x, t))


def test_evaluate_rejects_bad_inputs(strip_gc):
    with pytest.raises(ValueError):
        strip_gc.evaluate(_x(1.0), 1.5)
    with pytest.raises(ValueError, match="not on the base"):
        strip_gc.evaluate([[1.0, 0.5]], 0.2)


def test_gap_is_not_a_cover():
    c1 = _shear_collar(SEG, 0.0, 1.0, 0.0, "a")
    c2 = _shear_collar(SEG, 2.0, 3.0, 0.0, "b")
    pou = PartitionOfUnity(Cover(SEG, (Arc(-1, 1), Arc(2, 4))), 0.5)
    with pytest.raises(NotACoverError, match="not a cover"):
        build_global_collar([c1, c2], pou)


def test_wrong_collar_count():
    c = _shear_collar(SEG, 0.0, 3.0, 0.0, "a")
    pou = PartitionOfUnity(Cover(SEG, (Arc(-1, 2), Arc(1, 4))), 0.5)
    with pytest.raises(ValueError, match="collars but the cover"):
        GlobalCollar([c], pou).fit()


def test_restrict_without_obstacle_is_identity():
    c = _shear_collar(SEG, 0.0, 2.0, 0.2, "v")
    rc = restrict_collar(c, None)
    x = c.sample_base(50)
    t = np.linspace(0, 1, 50)
    np.testing.assert_array_equal(rc.forward(x, t), c.forward(x, t))


def test_restrict_avoids_halfplane():
    c = _shear_collar(SEG, 0.0, 2.0, 0.0, "v")
    A = HalfSpace((0.0, 1.0), 0.5)
    rc = restrict_collar(c, A, n_samples=16, resolution=1e-4)
    x = c.sample_base(200)
    np.testing.assert_array_equal(rc.forward(x, 0.0), x)
    img = rc.forward(np.repeat(x, 5, 0), np.tile(np.linspace(0.2, 1, 5), len(x)))
    assert np.all(img[:, 1] < 0.5)
    b, t = rc.inverse(img)
    np.testing.assert_allclose(rc.forward(b, t), img, atol=1e-12)


def test_restrict_rejects_obstacle_on_base():
    c = _shear_collar(SEG, 0.0, 2.0, 0.0, "v")
    with pytest.raises(ValueError, match="intersects"):
        restrict_collar(c, HalfSpace((0.0, 1.0), -0.5))


def test_merge_discrete_collars():
    c1 = _shear_collar(SEG, 0.0, 1.0, 0.0, "a")
    c2 = _shear_collar(SEG, 2.0, 3.0, 0.0, "b")
    O1 = Box((-0.5, -1.0), (1.5, 2.0))
    O2 = Box((1.5, -1.0), (3.5, 2.0))
    m = merge_discrete_collars([c1, c2], [O1, O2], n_check=64)
    x = _x([0.25, 0.75, 2.25, 2.75])
    img = m.forward(x, np.full(4, 0.5))
    assert np.all(O1.dist_to_complement(img[:2]) > 0)
    assert np.all(O2.dist_to_complement(img[2:]) > 0)
    np.testing.assert_array_equal(m.forward(x, np.zeros(4)), x)
    b, t = m.inverse(img)
    np.testing.assert_allclose(b, x, atol=1e-12)
    np.testing.assert_allclose(t, 0.5, atol=1e-12)
    with pytest.raises(ValueError, match="outside base"):
        m.forward(_x(1.5), np.array([0.5]))


def test_base_identity_violation_is_named():
    def fwd(x, t):
        return x + np.column_stack([np.full(len(x), 1e-6), t])

    def inv(p):
        return np.column_stack([p[:, 0] - 1e-6, np.zeros(len(p))]), p[:, 1]

    bad = LocalCollar.on_arc(SEG, 0.0, 3.0, fwd, inv, label="bad")
    with pytest.raises(CollarValidationError) as err:
        bad.validate(100)
    assert err.value.check == "base_identity"
    assert err.value.witness is not None
