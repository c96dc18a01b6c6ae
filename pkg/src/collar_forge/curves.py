"""Planar base curves with exact distance-to-arc computations.

A curve is parametrized by arclength ``s`` in ``[0, length]``. Closed subsets of
a curve are unions of parameter intervals; the distance from any ambient point
to such a subset is computed exactly (up to rounding), which keeps the bump
functions of a partition of unity exactly 1-Lipschitz.
"""
import numpy as np
from scipy.stats import qmc

METRICS = ("euclidean", "manhattan")

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _as_points(P, dim):
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or P.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {P.shape}")
    return P


def norm(V, metric):
    if metric == "euclidean":
        return np.sqrt(np.sum(V * V, axis=-1))
    if metric == "manhattan":
        return np.sum(np.abs(V), axis=-1)
    raise ValueError(f"unknown metric {metric!r}")


def point_segment_distance(P, A, B, metric="euclidean"):
    """Distance from each point in P (n,d) to each segment [A_k, B_k]; returns (n,k)."""
    P = np.asarray(P, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    V = B - A
    W = P[:, None, :] - A[None, :, :]
    if metric == "euclidean":
        vv = np.sum(V * V, axis=-1)
        safe = np.where(vv > 0, vv, 1.0)
        tt = np.clip(np.sum(W * V[None], axis=-1) / safe, 0.0, 1.0)
        tt = np.where(vv > 0, tt, 0.0)
        return norm(W - tt[..., None] * V[None], metric)
    if metric == "manhattan":
        # the l1 distance along a segment is convex and piecewise linear, so its
        # minimum sits at an endpoint or where one coordinate difference vanishes
        cands = [np.zeros(W.shape[:2]), np.ones(W.shape[:2])]
        for i in range(P.shape[1]):
            vi = V[None, :, i]
            with np.errstate(divide="ignore", invalid="ignore"):
                ti = np.where(vi != 0, W[..., i] / np.where(vi != 0, vi, 1.0), 0.0)
            cands.append(np.clip(ti, 0.0, 1.0))
        best = np.full(W.shape[:2], np.inf)
        for tt in cands:
            best = np.minimum(best, norm(W - tt[..., None] * V[None], metric))
        return best
    raise ValueError(f"unknown metric {metric!r}")


def merge_intervals(intervals):
    """Sort and merge touching or overlapping closed intervals."""
    ivs = sorted((float(a), float(b)) for a, b in intervals if a <= b)
    merged = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


class Curve:
    """Common interface of arclength-parametrized base curves."""

    dim = 2
    closed = False
    length = 0.0

    def point_at(self, s):
        raise NotImplementedError

    def param_of(self, P):
        raise NotImplementedError

    def distance(self, P, metric="euclidean"):
        return self.intervals_distance(P, [(0.0, self.length)], metric)

    def contains(self, P, tol=1e-12):
        P = _as_points(P, self.dim)
        scale = max(1.0, float(np.max(np.abs(self.bounds()))))
        return self.distance(P) <= tol * scale

    def sample(self, n, seed=0):
        if n < 1:
            raise ValueError("n must be at least 1")
        u = qmc.Halton(d=1, scramble=True, seed=seed).random(n)[:, 0]
        return self.point_at(u * self.length)

    def normalize(self, lo, hi):
        """Split the closed parameter interval [lo, hi] into pieces inside [0, length]."""
        L = self.length
        if hi < lo:
            return []
        if not self.closed:
            a, b = max(lo, 0.0), min(hi, L)
            return [(a, b)] if a <= b else []
        if hi - lo >= L:
            return [(0.0, L)]
        a = lo % L
        b = a + (hi - lo)
        if b <= L:
            return [(a, b)]
        return [(a, L), (0.0, b - L)]

    def intervals_distance(self, P, intervals, metric="euclidean"):
        raise NotImplementedError

    def expand(self, intervals, rho, metric="euclidean"):
        raise NotImplementedError

    def subcurve(self, lo, hi):
        raise NotImplementedError

    def bounds(self):
        raise NotImplementedError

    def _zero_inside(self, P, d, intervals):
        """Exact zero for points of the curve whose parameter lies in one of the intervals."""
        scale = max(1.0, float(np.max(np.abs(self.bounds()))))
        near = (d > 0) & (d <= 1e-12 * scale)
        if not near.any() or not intervals:
            return d
        idx = np.nonzero(near)[0]
        s = self.param_of(P[idx])
        hit = np.zeros(len(idx), dtype=bool)
        for lo, hi in intervals:
            hit |= self.in_interval(s, lo, hi)
        d[idx[hit]] = 0.0
        return d

    def in_interval(self, s, lo, hi, tol=0.0):
        """Parameter membership in the closed interval [lo, hi], modulo length when closed."""
        s = np.asarray(s, dtype=float)
        if not self.closed:
            return (s >= lo - tol) & (s <= hi + tol)
        if hi - lo >= self.length:
            return np.ones(s.shape, dtype=bool)
        off = np.mod(s - lo, self.length)
        return (off <= (hi - lo) + tol) | (off >= self.length - tol)


class Polyline(Curve):
    """Open or closed polygonal chain in R^d."""

    def __init__(self, vertices, closed=False):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 2:
            raise ValueError("a polyline needs at least two vertices")
        if not np.all(np.isfinite(V)):
            raise ValueError("polyline vertices must be finite")
        self.vertices = V
        self.closed = bool(closed)
        self.dim = V.shape[1]
        ends = np.vstack([V[1:], V[:1]]) if self.closed else V[1:]
        self.seg_a = V[: len(ends)]
        self.seg_b = ends
        lens = norm(self.seg_b - self.seg_a, "euclidean")
        if np.any(lens <= 0):
            raise ValueError("polyline has a zero-length segment")
        self.seg_len = lens
        self.cum = np.concatenate([[0.0], np.cumsum(lens)])
        self.length = float(self.cum[-1])

    def __repr__(self):
        return f"Polyline({self.vertices.tolist()}, closed={self.closed})"

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def point_at(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.mod(s, self.length) if self.closed else np.clip(s, 0.0, self.length)
        k = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.seg_len) - 1)
        frac = (s - self.cum[k]) / self.seg_len[k]
        return self.seg_a[k] + frac[:, None] * (self.seg_b[k] - self.seg_a[k])

    def param_of(self, P):
        P = _as_points(P, self.dim)
        V = self.seg_b - self.seg_a
        W = P[:, None, :] - self.seg_a[None]
        vv = np.sum(V * V, axis=-1)
        tt = np.clip(np.sum(W * V[None], axis=-1) / vv, 0.0, 1.0)
        d = norm(W - tt[..., None] * V[None], "euclidean")
        k = np.argmin(d, axis=1)
        s = self.cum[k] + tt[np.arange(len(P)), k] * self.seg_len[k]
        if self.closed:
            s = np.where(s >= self.length, s - self.length, s)
        return s

    def interval_segments(self, intervals):
        """Break closed parameter intervals into straight pieces (A, B)."""
        A, B = [], []
        for lo, hi in intervals:
            for a, b in self.normalize(lo, hi):
                inner = self.cum[(self.cum > a) & (self.cum < b)]
                knots = np.concatenate([[a], inner, [b]])
                pts = self.point_at(knots)
                if len(knots) == 2 and a == b:
                    A.append(pts[0])
                    B.append(pts[0])
                    continue
                A.extend(pts[:-1])
                B.extend(pts[1:])
        if not A:
            return np.empty((0, self.dim)), np.empty((0, self.dim))
        return np.array(A), np.array(B)

    def intervals_distance(self, P, intervals, metric="euclidean"):
        P = _as_points(P, self.dim)
        A, B = self.interval_segments(intervals)
        if len(A) == 0:
            return np.full(len(P), np.inf)
        out = np.empty(len(P))
        for i in range(0, len(P), 2048):
            out[i:i + 2048] = point_segment_distance(P[i:i + 2048], A, B, metric).min(axis=1)
        return self._zero_inside(P, out, intervals)

    def expand(self, intervals, rho, metric="euclidean"):
        """Parameter intervals of {y on the curve : dist(y, K) <= rho}, K given by intervals.

        Along each straight edge the distance to a convex piece of K is convex, so
        each sublevel set is an interval; its ends are located by bisection and
        rounded outward.
        """
        A, B = self.interval_segments(intervals)
        if len(A) == 0:
            return []
        if rho <= 0:
            return merge_intervals([iv for lo, hi in intervals for iv in self.normalize(lo, hi)])
        ne, nk = len(self.seg_len), len(A)
        e = np.repeat(np.arange(ne), nk)
        q = np.tile(np.arange(nk), ne)
        EA, EB = self.seg_a[e], self.seg_b[e]
        QA, QB = A[q], B[q]

        def F(u):
            return _pairwise_diag(EA + u[:, None] * (EB - EA), QA, QB, metric)

        lo = np.zeros(len(e))
        hi = np.ones(len(e))
        for _ in range(90):
            m1 = hi - _GOLDEN * (hi - lo)
            m2 = lo + _GOLDEN * (hi - lo)
            f1, f2 = F(m1), F(m2)
            left = f1 <= f2
            hi = np.where(left, m2, hi)
            lo = np.where(left, lo, m1)
        ustar = 0.5 * (lo + hi)
        fstar = np.minimum(F(ustar), np.minimum(F(np.zeros(len(e))), F(np.ones(len(e)))))
        u0 = np.zeros(len(e))
        u1 = np.ones(len(e))
        ustar = np.where(F(u0) <= fstar, u0, np.where(F(u1) <= fstar, u1, ustar))
        hit = fstar <= rho

        def boundary(inside, outside):
            # returns the outside end of a bracket [inside (F <= rho), outside (F > rho)]
            for _ in range(64):
                mid = 0.5 * (inside + outside)
                ok = F(mid) <= rho
                inside = np.where(ok, mid, inside)
                outside = np.where(ok, outside, mid)
            return outside

        left_in = F(u0) <= rho
        right_in = F(u1) <= rho
        ul = np.where(left_in, 0.0, boundary(ustar.copy(), u0.copy()))
        ur = np.where(right_in, 1.0, boundary(ustar.copy(), u1.copy()))
        out = []
        for k in np.nonzero(hit)[0]:
            edge = e[k]
            a = self.cum[edge] + ul[k] * self.seg_len[edge]
            b = self.cum[edge] + ur[k] * self.seg_len[edge]
            out.append((max(self.cum[edge], a), min(self.cum[edge + 1], b)))
        for lo_, hi_ in intervals:
            out.extend(self.normalize(lo_, hi_))
        return _merge_closed(self, out)

    def subcurve(self, lo, hi):
        if self.closed and hi - lo >= self.length:
            return self
        if not self.closed:
            lo, hi = max(lo, 0.0), min(hi, self.length)
            inner = self.cum[(self.cum > lo) & (self.cum < hi)]
        else:
            shifted = np.concatenate([self.cum[:-1] + k * self.length for k in (-1, 0, 1, 2)])
            inner = np.sort(shifted[(shifted > lo) & (shifted < hi)])
        knots = np.concatenate([[lo], inner, [hi]])
        return Polyline(self.point_at(knots), closed=False)

    def to_json(self):
        return {"kind": "polyline", "vertices": self.vertices.tolist(), "closed": self.closed}


def _pairwise_diag(P, A, B, metric):
    V = B - A
    W = P - A
    if metric == "euclidean":
        vv = np.sum(V * V, axis=-1)
        safe = np.where(vv > 0, vv, 1.0)
        tt = np.where(vv > 0, np.clip(np.sum(W * V, axis=-1) / safe, 0.0, 1.0), 0.0)
        return norm(W - tt[:, None] * V, metric)
    if metric == "manhattan":
        best = np.minimum(norm(W, metric), norm(W - V, metric))
        for i in range(P.shape[1]):
            vi = V[:, i]
            with np.errstate(divide="ignore", invalid="ignore"):
                ti = np.where(vi != 0, W[:, i] / np.where(vi != 0, vi, 1.0), 0.0)
            ti = np.clip(ti, 0.0, 1.0)
            best = np.minimum(best, norm(W - ti[:, None] * V, metric))
        return best
    raise ValueError(f"unknown metric {metric!r}")


def _merge_closed(curve, pieces):
    merged = merge_intervals(pieces)
    if curve.closed and len(merged) > 1 and merged[0][0] <= 0.0 and merged[-1][1] >= curve.length:
        first = merged.pop(0)
        last = merged.pop()
        merged.append((last[0], curve.length + first[1]))
    return merged


class CircleCurve(Curve):
    """Circle (or circular arc) of given center and radius; Euclidean metric only."""

    def __init__(self, center=(0.0, 0.0), radius=1.0, theta0=0.0, span=2 * np.pi):
        if not radius > 0:
            raise ValueError("radius must be positive")
        if not 0 < span <= 2 * np.pi:
            raise ValueError("arc span must lie in (0, 2*pi]")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.theta0 = float(theta0)
        self.span = float(span)
        self.closed = span == 2 * np.pi
        self.dim = 2
        self.length = self.radius * self.span

    def __repr__(self):
        return f"CircleCurve(center={self.center.tolist()}, radius={self.radius})"

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def point_at(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.mod(s, self.length) if self.closed else np.clip(s, 0.0, self.length)
        th = self.theta0 + s / self.radius
        return self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=1)

    def _angle(self, P):
        D = P - self.center
        return np.mod(np.arctan2(D[:, 1], D[:, 0]) - self.theta0, 2 * np.pi)

    def param_of(self, P):
        P = _as_points(P, 2)
        a = self._angle(P)
        if not self.closed:
            past = a > self.span
            to_end = a - self.span
            to_start = 2 * np.pi - a
            a = np.where(past, np.where(to_end <= to_start, self.span, 0.0), a)
        return a * self.radius

    def _check_metric(self, metric):
        if metric != "euclidean":
            raise NotImplementedError("circle distances are implemented for the Euclidean metric")

    def intervals_distance(self, P, intervals, metric="euclidean"):
        self._check_metric(metric)
        P = _as_points(P, 2)
        pieces = [iv for lo, hi in intervals for iv in self.normalize(lo, hi)]
        if not pieces:
            return np.full(len(P), np.inf)
        ang = self._angle(P)
        radial = np.abs(norm(P - self.center, "euclidean") - self.radius)
        best = np.full(len(P), np.inf)
        for a, b in pieces:
            ta, tb = a / self.radius, b / self.radius
            inside = (ang >= ta) & (ang <= tb)
            ends = self.point_at(np.array([a, b]))
            d_end = np.minimum(norm(P - ends[0], "euclidean"), norm(P - ends[1], "euclidean"))
            best = np.minimum(best, np.where(inside, radial, d_end))
        return self._zero_inside(P, best, intervals)

    def expand(self, intervals, rho, metric="euclidean"):
        self._check_metric(metric)
        pieces = [iv for lo, hi in intervals for iv in self.normalize(lo, hi)]
        if not pieces:
            return []
        if rho >= 2 * self.radius:
            return [(0.0, self.length)]
        grow = self.radius * 2.0 * np.arcsin(max(rho, 0.0) / (2.0 * self.radius))
        grown = []
        for a, b in pieces:
            grown.extend(self.normalize(a - grow, b + grow))
        return _merge_closed(self, grown)

    def subcurve(self, lo, hi):
        if self.closed and hi - lo >= self.length:
            return self
        if not self.closed:
            lo, hi = max(lo, 0.0), min(hi, self.length)
        return CircleCurve(self.center, self.radius, self.theta0 + lo / self.radius, (hi - lo) / self.radius)

    def to_json(self):
        d = {"kind": "circle", "center": self.center.tolist(), "radius": self.radius}
        if not self.closed:
            d.update(theta0=self.theta0, span=self.span)
        return d


class Arc:
    """Relatively open arc {s : lo < s < hi} of a curve.

    On an open curve a bound beyond the curve's end includes that end, so
    ``Arc(-1, 2)`` on [0, 3] is the half-open set [0, 2).
    """

    def __init__(self, lo, hi):
        if not hi > lo:
            raise ValueError("arc needs lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)

    def __repr__(self):
        return f"Arc({self.lo}, {self.hi})"

    def __eq__(self, other):
        return isinstance(other, Arc) and (self.lo, self.hi) == (other.lo, other.hi)

    def __hash__(self):
        return hash((self.lo, self.hi))

    def contains_param(self, curve, s):
        s = np.asarray(s, dtype=float)
        if not curve.closed:
            return (s > self.lo) & (s < self.hi) | ((s == 0) & (self.lo < 0)) | (
                (s == curve.length) & (self.hi > curve.length))
        if self.hi - self.lo > curve.length:
            return np.ones(s.shape, dtype=bool)
        off = np.mod(s - self.lo, curve.length)
        return (off > 0) & (off < self.hi - self.lo)

    def complement(self, curve):
        """Closed parameter intervals of the curve outside this arc."""
        L = curve.length
        if curve.closed:
            if self.hi - self.lo > L:
                return []
            return curve.normalize(self.hi, self.lo + L)
        out = []
        if self.lo >= 0:
            out.append((0.0, min(self.lo, L)))
        if self.hi <= L:
            out.append((max(self.hi, 0.0), L))
        return merge_intervals(out)

    def closure(self, curve):
        """Closed parameter interval [lo, hi] clipped to the curve."""
        if curve.closed:
            if self.hi - self.lo >= curve.length:
                return (0.0, curve.length)
            return (self.lo, self.hi)
        return (max(self.lo, 0.0), min(self.hi, curve.length))

    def to_json(self):
        return {"kind": "arc", "lo": self.lo, "hi": self.hi}
