"""Ambient metric primitives: distances, product metric, distance-to-set, sampling."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .curves import Arc, CircleCurve, Curve, Polyline, norm

INF = np.inf


def as_points(P, dim=None):
    """Validate an array of points, returning a float (n, d) array."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2:
        raise ValueError(f"points must be a 1-D or 2-D array, got shape {P.shape}")
    if dim is not None and P.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {P.shape[1]}")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must have finite coordinates")
    return P


def metric_distance(P, Q, metric="euclidean"):
    """Row-wise distance between point arrays under a named metric or a callable."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape[-1] != Q.shape[-1]:
        raise ValueError(f"dimension mismatch: {P.shape[-1]} vs {Q.shape[-1]}")
    if callable(metric):
        return np.asarray(metric(P, Q), dtype=float)
    return norm(P - Q, metric)


def _dual_norm(v, metric):
    if metric == "euclidean":
        return float(np.linalg.norm(v))
    if metric == "manhattan":
        return float(np.max(np.abs(v)))
    raise NotImplementedError(f"no exact half-space distance for metric {metric!r}")


@dataclass(frozen=True)
class MetricDomain:
    """Ambient space R^dim with a metric, a closed base curve B and a region X.

    ``ambient`` is the membership predicate of X (everything when omitted);
    balls of X are intersected with X when checking interior margins.
    """

    dim: int
    base: Curve
    region_bounds: tuple
    metric: object = "euclidean"
    ambient: Callable = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        lo, hi = (np.asarray(b, dtype=float) for b in self.region_bounds)
        if lo.shape != (self.dim,) or hi.shape != (self.dim,):
            raise ValueError("region_bounds must be a pair of dim-vectors")

    def ambient_dist(self, P, Q):
        return metric_distance(P, Q, self.metric)

    def base_membership(self, P, tol=1e-12):
        return self.base.contains(as_points(P, self.dim), tol=tol)

    def base_sampler(self, count, seed=0):
        return self.base.sample(count, seed)

    def contains(self, P):
        P = as_points(P, self.dim)
        if self.ambient is None:
            return np.ones(len(P), dtype=bool)
        return np.asarray(self.ambient(P), dtype=bool)

    def diameter(self):
        lo, hi = (np.asarray(b, dtype=float) for b in self.region_bounds)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            return INF
        return float(self.ambient_dist(lo, hi))

    def check_metric(self, n=64, seed=0, tol=1e-12):
        """Check symmetry, identity and the triangle inequality on sampled triples."""
        lo, hi = (np.asarray(b, dtype=float) for b in self.region_bounds)
        X = qmc.scale(qmc.Halton(d=self.dim, scramble=True, seed=seed).random(3 * n), lo, hi)
        P, Q, R = X[:n], X[n:2 * n], X[2 * n:]
        dpq, dqp = self.ambient_dist(P, Q), self.ambient_dist(Q, P)
        ok_sym = np.array_equal(dpq, dqp)
        ok_zero = np.all(self.ambient_dist(P, P) == 0) and np.all(dpq[np.any(P != Q, axis=1)] > 0)
        ok_tri = np.all(self.ambient_dist(P, R) <= dpq + self.ambient_dist(Q, R) + tol)
        return bool(ok_sym and ok_zero and ok_tri)


def product_distance(p, q, dom=None, metric="euclidean"):
    """dist((x,s),(y,t)) = dist(x,y) + |s - t| on B x [0,1].

    ``p`` and ``q`` are rows ``[coords..., height]`` (or arrays of such rows).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    if dom is not None:
        if p.shape[-1] != dom.dim + 1:
            raise ValueError(f"collar points need {dom.dim} coordinates plus a height")
        metric = dom.metric
    d = metric_distance(p[..., :-1], q[..., :-1], metric) + np.abs(p[..., -1] - q[..., -1])
    return float(d) if np.ndim(d) == 0 else d


# region descriptors -------------------------------------------------------


class Region:
    """Closed subset of R^d with an exact distance function."""

    kind = ""

    def dist(self, P, metric="euclidean"):
        raise NotImplementedError

    def contains(self, P, metric="euclidean"):
        return self.dist(P, metric) == 0

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(Region):
    center: tuple
    radius: float
    kind = "ball"

    def dist(self, P, metric="euclidean"):
        _euclidean_only(metric, "ball")
        P = as_points(P, len(self.center))
        return np.maximum(0.0, norm(P - np.asarray(self.center), "euclidean") - self.radius)

    def dist_to_complement(self, P, metric="euclidean"):
        _euclidean_only(metric, "ball")
        P = as_points(P, len(self.center))
        return np.maximum(0.0, self.radius - norm(P - np.asarray(self.center), "euclidean"))

    def to_json(self):
        return {"kind": "ball", "center": list(map(float, self.center)), "radius": float(self.radius)}


@dataclass(frozen=True)
class Box(Region):
    lo: tuple
    hi: tuple
    kind = "box"

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise ValueError("box needs lo <= hi coordinatewise")

    def dist(self, P, metric="euclidean"):
        P = as_points(P, len(self.lo))
        gap = np.maximum(0.0, np.maximum(np.asarray(self.lo) - P, P - np.asarray(self.hi)))
        if callable(metric):
            raise NotImplementedError("no exact box distance for a callable metric")
        return norm(gap, metric)

    def dist_to_complement(self, P, metric="euclidean"):
        # valid for norms with unit coordinate vectors, which covers both named metrics
        P = as_points(P, len(self.lo))
        margin = np.minimum(P - np.asarray(self.lo), np.asarray(self.hi) - P).min(axis=1)
        return np.maximum(0.0, margin)

    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def to_json(self):
        return {"kind": "box", "lo": list(map(float, self.lo)), "hi": list(map(float, self.hi))}


@dataclass(frozen=True)
class HalfSpace(Region):
    """The closed half-space {p : normal . p >= offset}."""

    normal: tuple
    offset: float
    kind = "halfplane"

    def dist(self, P, metric="euclidean"):
        P = as_points(P, len(self.normal))
        n = np.asarray(self.normal, dtype=float)
        return np.maximum(0.0, self.offset - P @ n) / _dual_norm(n, metric)

    def dist_to_complement(self, P, metric="euclidean"):
        P = as_points(P, len(self.normal))
        n = np.asarray(self.normal, dtype=float)
        return np.maximum(0.0, P @ n - self.offset) / _dual_norm(n, metric)

    def to_json(self):
        return {"kind": "halfplane", "normal": list(map(float, self.normal)), "offset": float(self.offset)}


@dataclass(frozen=True)
class CurveSet(Region):
    """A curve, or a union of closed arcs of it, as a subset of the plane."""

    curve: Curve
    intervals: tuple = None
    kind = "curve"

    def pieces(self):
        return [(0.0, self.curve.length)] if self.intervals is None else list(self.intervals)

    def dist(self, P, metric="euclidean"):
        return self.curve.intervals_distance(as_points(P, self.curve.dim), self.pieces(), metric)

    def dist_to_complement(self, P, metric="euclidean"):
        # a curve has empty interior in the plane
        return np.zeros(len(as_points(P, self.curve.dim)))

    def to_json(self):
        d = self.curve.to_json()
        if self.intervals is not None:
            d["intervals"] = [list(map(float, iv)) for iv in self.intervals]
        return d


@dataclass(frozen=True, eq=False)
class PointCloud(Region):
    """Sampled set; distances are upper bounds of the true infimum up to ``resolution``."""

    points: np.ndarray = field(repr=False)
    resolution: float = 0.0
    kind = "points"

    def dist(self, P, metric="euclidean"):
        P = as_points(P)
        S = as_points(self.points, P.shape[1])
        out = np.empty(len(P))
        for i in range(0, len(P), 1024):
            blk = P[i:i + 1024]
            out[i:i + 1024] = metric_distance(blk[:, None, :], S[None, :, :], metric).min(axis=1)
        return out

    def dist_to_complement(self, P, metric="euclidean"):
        return np.zeros(len(as_points(P)))

    def to_json(self):
        return {"kind": "points", "points": np.asarray(self.points).tolist(), "resolution": self.resolution}


@dataclass(frozen=True)
class Complement(Region):
    """Closure of the complement of an analytic region."""

    inner: Region
    kind = "complement"

    def dist(self, P, metric="euclidean"):
        return self.inner.dist_to_complement(P, metric)

    def to_json(self):
        return {"kind": "complement", "of": self.inner.to_json()}


@dataclass(frozen=True)
class Empty(Region):
    kind = "empty"

    def dist(self, P, metric="euclidean"):
        return np.full(len(as_points(P)), INF)

    def to_json(self):
        return {"kind": "empty"}


def _euclidean_only(metric, what):
    if metric != "euclidean":
        raise NotImplementedError(f"{what} distances are implemented for the Euclidean metric")


def dist_to_set(p, S, dom=None, metric="euclidean"):
    """Exact distance from p to the closed set S; ``inf`` when S is empty.

    Returns a float for a single point and an array for a stack of points.
    """
    if dom is not None:
        metric = dom.metric
    single = np.asarray(p).ndim == 1
    d = S.dist(as_points(p), metric)
    return float(d[0]) if single else d


def quasi_random_sample(region, n, seed=0):
    """Scrambled Halton points in a box, or along a curve by arclength."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(region, Curve):
        return region.sample(n, seed)
    if isinstance(region, CurveSet):
        return region.curve.sample(n, seed)
    if isinstance(region, Box):
        lo, hi = np.asarray(region.lo, float), np.asarray(region.hi, float)
        if np.any(hi <= lo):
            raise ValueError("degenerate region: box has zero volume")
        u = qmc.Halton(d=len(lo), scramble=True, seed=seed).random(n)
        return lo + u * (hi - lo)
    raise ValueError(f"cannot sample region of kind {getattr(region, 'kind', type(region).__name__)!r}")


def region_from_json(d):
    """Rebuild a geometry descriptor from its JSON form."""
    kind = d.get("kind")
    if kind == "circle":
        c = CircleCurve(d.get("center", (0.0, 0.0)), d["radius"], d.get("theta0", 0.0), d.get("span", 2 * np.pi))
        return CurveSet(c, _intervals(d))
    if kind == "polyline":
        return CurveSet(Polyline(d["vertices"], d.get("closed", False)), _intervals(d))
    if kind == "box":
        return Box(tuple(d["lo"]), tuple(d["hi"]))
    if kind == "halfplane":
        return HalfSpace(tuple(d["normal"]), float(d["offset"]))
    if kind == "ball":
        return Ball(tuple(d["center"]), float(d["radius"]))
    if kind == "points":
        return PointCloud(np.asarray(d["points"], dtype=float), float(d.get("resolution", 0.0)))
    if kind == "complement":
        return Complement(region_from_json(d["of"]))
    if kind == "empty":
        return Empty()
    if kind == "arc":
        return Arc(d["lo"], d["hi"])
    raise ValueError(f"unknown geometry kind {kind!r}")


def _intervals(d):
    iv = d.get("intervals")
    return None if iv is None else tuple(tuple(map(float, x)) for x in iv)


def curve_from_json(d):
    region = region_from_json(d)
    if not isinstance(region, CurveSet):
        raise ValueError("descriptor is not a curve")
    return region.curve
