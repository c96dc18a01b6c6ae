"""Analytic fixtures: exact charts, inverses, image and side predicates."""
from dataclasses import dataclass, field, replace

import numpy as np

from .collar import GlobalCollar, LocalCollar, build_global_collar
from .covers import Cover, PartitionOfUnity, greedy_maximal_net
from .curves import Arc, CircleCurve, Polyline
from .metric import MetricDomain, as_points

SIDE_TOL = 1e-12


@dataclass(frozen=True)
class Fixture:
    """A base curve in a region X, a cover, one collar per member, and optional exterior side.

    ``charts`` are two-sided maps (x, t in [-1, 1]) per cover member; ``side``
    classifies points as +1 (interior side), -1 (exterior side) or 0 (on the base).
    """

    name: str
    params: dict
    dom: MetricDomain
    cover: Cover
    collars: tuple
    delta: float
    delta0: float
    declared: dict = field(default_factory=dict)
    exterior: tuple = None
    charts: tuple = None
    side: object = None
    tag: str = ""
    order: tuple = None

    @property
    def curve(self):
        return self.dom.base

    def pou(self):
        return PartitionOfUnity(self.cover, self.delta, self.delta0).fit()

    def global_collar(self, order=None, validate=True, n_check=10_000, seed=0):
        order = self.order if order is None else order
        if validate:
            return build_global_collar(list(self.collars), self.pou(), order=order, n_check=n_check, seed=seed)
        return GlobalCollar(list(self.collars), self.pou(), order=order, validate=False).fit()

    def exterior_collar(self, order=None, validate=True, n_check=10_000, seed=0):
        if self.exterior is None:
            raise ValueError(f"fixture {self.name!r} has no exterior side")
        order = self.order if order is None else order
        if validate:
            return build_global_collar(list(self.exterior), self.pou(), order=order, n_check=n_check, seed=seed)
        return GlobalCollar(list(self.exterior), self.pou(), order=order, validate=False).fit()

    def local_bicollars(self):
        """Two-sided charts restricted to the closed cover members."""
        from .bicollar import Bicollar

        if self.charts is None:
            raise ValueError(f"fixture {self.name!r} has no two-sided charts")
        out = []
        for k, (ch, m) in enumerate(zip(self.charts, self.cover.members)):
            lo, hi = m.closure(self.curve)
            c = self.collars[k]
            out.append(Bicollar(ch, c.sample_base, self.side, curve=self.curve, arc=(lo, hi), in_base=c.in_base,
                                label=f"chart{k}", kind="chart", dim=self.dom.dim, metric=self.dom.metric))
        return out

    def bicollar(self, order=None, n_check=10_000, seed=0):
        """Glue the interior and exterior global collars into one bicollar of the whole base."""
        from .bicollar import glue_bicollar

        plus = self.global_collar(order, n_check=n_check, seed=seed)
        minus = self.exterior_collar(order, n_check=n_check, seed=seed)
        return glue_bicollar(plus, minus, side=self.side, metric=self.dom.metric, label=f"{self.name}-bicollar")

    def with_declared(self, **declared):
        merged = dict(self.declared)
        merged.update(declared)
        return replace(self, declared=merged)

    def with_order(self, order):
        return replace(self, order=None if order is None else tuple(int(i) for i in order))

    def to_json(self):
        order = list(self.order) if self.order is not None else list(range(len(self.collars)))
        rank = {c: k for k, c in enumerate(order)}
        d = {
            "fixture": self.name,
            "params": self.params,
            "tag": self.tag,
            "metric": self.dom.metric,
            "base": self.curve.to_json(),
            "cover": self.cover.to_json(self.delta, self.delta0),
            "collars": [c.to_json(rank[i]) for i, c in enumerate(self.collars)],
            "declared": self.declared,
            "height_range": [-1.0, 1.0] if self.charts is not None else [0.0, 1.0],
        }
        return d


# circle -------------------------------------------------------------------------


def make_circle_in_disk(r=1.0):
    """Circle of radius r in the closed disk with the radial collar c(x, t) = (1 - t/2) x."""
    r = float(r)
    if not r > 0 or not np.isfinite(r):
        raise ValueError("r must be positive")
    curve = CircleCurve((0.0, 0.0), r)
    dom = MetricDomain(2, curve, ((-r, -r), (r, r)),
                       ambient=lambda P: np.sqrt(np.sum(P * P, axis=1)) <= r * (1 + 1e-12), name="disk")

    def chart(x, t):
        return (1 - t / 2)[:, None] * x

    def chart_inv(p):
        rho = np.sqrt(np.sum(p * p, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            b = r * p / rho[:, None]
            t = 2 * (1 - rho / r)
        return b, t

    interior = LocalCollar(chart, chart_inv, _on_curve(curve), curve.sample, label="radial",
                           L=max(1.0, r / 2), kind="radial", params={"r": r})
    interior.curve, interior.arc = curve, (0.0, curve.length)

    def ext(x, t):
        return (1 + t / 2)[:, None] * x

    def ext_inv(p):
        rho = np.sqrt(np.sum(p * p, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            return r * p / rho[:, None], 2 * (rho / r - 1)

    exterior = LocalCollar(ext, ext_inv, _on_curve(curve), curve.sample, label="radial-out",
                           kind="radial_out", params={"r": r})
    exterior.curve, exterior.arc = curve, (0.0, curve.length)

    def two_sided(x, t):
        return (1 - t / 2)[:, None] * x

    def side(P):
        rho = np.sqrt(np.sum(as_points(P) ** 2, axis=1))
        return np.where(np.abs(rho - r) <= SIDE_TOL * max(1.0, r), 0, np.where(rho < r, 1, -1))

    cover = Cover(curve, (Arc(0.0, 2 * curve.length),))
    return Fixture("circle", {"r": r}, dom, cover, (interior,), delta=r, delta0=r / 2,
                   declared={"C": max(1.0, r / 2)}, exterior=(exterior,), charts=(two_sided,),
                   side=side, tag="radial collar of a circle; inverse constant grows like 2/r")


def _on_curve(curve):
    def in_base(x):
        return curve.contains(as_points(x, curve.dim), tol=1e-9)
    return in_base


# strip --------------------------------------------------------------------------


def make_strip_two_collar(tilt=0.2):
    """B = [0,3] x {0} with a vertical collar over [0,2] and a sheared one over [1,3]."""
    tilt = float(tilt)
    if not abs(tilt) < 0.5:
        raise ValueError("tilt must satisfy |tilt| < 0.5")
    curve = Polyline([[0.0, 0.0], [3.0, 0.0]])

    def ambient(P):
        y = P[:, 1]
        return (y >= -1e-12) & (y <= 1 + 1e-12) & (P[:, 0] >= -1e-12) & (P[:, 0] <= 3 + tilt * y + 1e-12)

    dom = MetricDomain(2, curve, ((0.0, 0.0), (3.0 + max(tilt, 0.0), 1.0)), ambient=ambient, name="strip")
    c1 = _shear_collar(curve, 0.0, 2.0, 0.0, "vertical")
    c2 = _shear_collar(curve, 1.0, 3.0, tilt, "sheared")
    cover = Cover(curve, (Arc(-1.0, 2.0), Arc(1.0, 4.0)))
    declared = {"L_c1": 1.0, "iL_c1": float(np.sqrt(2.0)), "L_c2": float(np.sqrt(1 + tilt ** 2)),
                "iL_c2": float(np.sqrt(1 + (1 + abs(tilt)) ** 2))}
    return Fixture("strip", {"tilt": tilt}, dom, cover, (c1, c2), delta=0.5, delta0=0.25,
                   declared=declared, tag="two overlapping collars over [0,3], one sheared")


def _shear_collar(curve, lo, hi, tilt, label, height=1.0):
    """c(x, t) = x + t * height * (tilt, 1) over the segment [lo, hi] of the x-axis."""

    def fwd(x, t):
        return np.column_stack([x[:, 0] + tilt * height * t, height * t])

    def inv(p):
        t = p[:, 1] / height
        return np.column_stack([p[:, 0] - tilt * p[:, 1], np.zeros(len(p))]), t

    return LocalCollar.on_arc(curve, lo, hi, fwd, inv, label=label, kind="shear",
                              params={"lo": lo, "hi": hi, "tilt": tilt, "height": height})


# net segment --------------------------------------------------------------------


def make_net_segment(length=3.0, tau=0.5):
    """B = [0, length] x {0} under the l1 metric, covered by unit balls around a tau-net.

    Every collar is the vertical isometry c(x, t) = x + t e2, so C = 1 exactly.
    """
    length = float(length)
    if not length > 0:
        raise ValueError("length must be positive")
    curve = Polyline([[0.0, 0.0], [length, 0.0]])

    def ambient(P):
        return ((P[:, 1] >= -1e-12) & (P[:, 1] <= 1 + 1e-12) & (P[:, 0] >= -1e-12)
                & (P[:, 0] <= length + 1e-12))

    dom = MetricDomain(2, curve, ((0.0, 0.0), (length, 1.0)), metric="manhattan", ambient=ambient, name="net")
    net = greedy_maximal_net(dom, tau)
    centers = net.points[:, 0]
    members = tuple(Arc(c - 1.0, c + 1.0) for c in centers)
    collars = tuple(_shear_collar(curve, max(c - 1.0, 0.0), min(c + 1.0, length), 0.0, f"net{k}")
                    for k, c in enumerate(centers))
    for c in collars:
        c.L, c.iL = 1.0, 1.0
    cover = Cover(curve, members, metric="manhattan")
    return Fixture("net", {"length": length, "tau": float(tau)}, dom, cover, collars,
                   delta=1.0 - tau, delta0=(1.0 - tau) / 2, declared={"C": 1.0, "iL_c": 1.0},
                   tag="unit-ball cover around a greedy net, isometric collars")


# square -------------------------------------------------------------------------


class SquareChart:
    """Two-sided chart of the boundary of [0,a]^2: x + t * scale * nu(x).

    nu is the inward normal away from the corners; within ``corner`` of a corner
    the neighbouring edge's normal is blended in linearly, reaching the diagonal
    n_k + n_{k-1} at the corner itself. Positive heights point inward.
    """

    def __init__(self, side, corner, scale):
        if not 0 < corner <= side / 2:
            raise ValueError("corner width must lie in (0, side/2]")
        if not 0 < scale <= corner / 2:
            raise ValueError("scale must lie in (0, corner/2]")
        a = float(side)
        self.side, self.corner, self.scale = a, float(corner), float(scale)
        self.P = np.array([[0.0, 0.0], [a, 0.0], [a, a], [0.0, a]])
        self.d = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        self.n = np.array([[0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]])
        self.curve = Polyline(self.P, closed=True)

    def _blend(self, ell):
        a, w = self.side, self.corner
        return np.maximum(0.0, 1 - ell / w) - np.maximum(0.0, 1 - (a - ell) / w)

    def forward(self, x, t):
        s = self.curve.param_of(x)
        k = np.minimum((s // self.side).astype(int), 3)
        ell = s - k * self.side
        tau = t * self.scale
        along = ell + tau * self._blend(ell)
        return self.P[k] + along[:, None] * self.d[k] + tau[:, None] * self.n[k]

    def inverse(self, p):
        """Exact inverse on the chart image; NaN where no edge candidate applies."""
        a, w = self.side, self.corner
        B = np.full(p.shape, np.nan)
        T = np.full(len(p), np.nan)
        for k in range(4):
            rel = p - self.P[k]
            tau = rel @ self.n[k]
            m = rel @ self.d[k]
            ok = (np.abs(tau) <= self.scale * (1 + 1e-12)) & (m >= tau - 1e-12) & (m <= a - tau + 1e-12)
            ok &= np.isnan(T)
            if not ok.any():
                continue
            tk, mk = tau[ok], m[ok]
            slope = 1 - tk / w
            ell = np.where(mk <= w, (mk - tk) / slope,
                           np.where(mk >= a - w, a - (a - tk - mk) / slope, mk))
            ell = np.clip(ell, 0.0, a)
            B[ok] = self.P[k] + ell[:, None] * self.d[k]
            T[ok] = tk / self.scale
        return B, T


def square_side(side):
    def classify(P):
        P = as_points(P, 2)
        inside = np.all((P > SIDE_TOL) & (P < side - SIDE_TOL), axis=1)
        on = np.all((P >= -SIDE_TOL) & (P <= side + SIDE_TOL), axis=1) & ~inside
        return np.where(inside, 1, np.where(on, 0, -1))
    return classify


_SCALES = (0.40, 0.50, 0.45, 0.35, 0.42, 0.48, 0.38, 0.44)


def make_square_boundary(side=1.0, n_collars=4, overlap=None):
    """Boundary of [0, side]^2 covered by 4 edge arcs or 4 corner plus 4 edge arcs.

    ``overlap`` is the width w of each pairwise overlap; the Lebesgue number of
    the cover is w/2. Charts share the corner-blended normal field but use
    different normal scales, so the local collars genuinely differ.
    """
    side = float(side)
    if not side > 0 or not np.isfinite(side):
        raise ValueError("side must be positive")
    if n_collars not in (4, 8):
        raise ValueError("n_collars must be 4 or 8")
    a = side
    w = (0.2 if n_collars == 4 else 0.1) * a if overlap is None else float(overlap)
    corner = a / 4
    if n_collars == 4:
        if not 0 < w < a / 2:
            raise ValueError("overlap must lie in (0, side/2)")
        arcs = [(k * a - w / 2, (k + 1) * a + w / 2) for k in range(4)]
    else:
        if not 0 < w < a / 4:
            raise ValueError("overlap must lie in (0, side/4)")
        c = a / 4
        arcs = []
        for k in range(4):
            arcs.append((k * a - c, k * a + c))
            arcs.append((k * a + c - w, (k + 1) * a - c + w))
    charts = [SquareChart(a, corner, _SCALES[i] * corner) for i in range(n_collars)]
    curve = charts[0].curve

    def ambient(P):
        return np.all((P >= -SIDE_TOL * a) & (P <= a * (1 + SIDE_TOL)), axis=1)

    dom = MetricDomain(2, curve, ((0.0, 0.0), (a, a)), ambient=ambient, name="square")
    inner, outer, two = [], [], []
    for i, ((lo, hi), ch) in enumerate(zip(arcs, charts)):
        params = {"side": a, "corner": corner, "scale": ch.scale, "lo": lo, "hi": hi}
        inner.append(LocalCollar.on_arc(curve, lo, hi, ch.forward, ch.inverse, label=f"in{i}",
                                        kind="square_chart", params=params))
        outer.append(LocalCollar.on_arc(curve, lo, hi, _negated(ch.forward), _negated_inverse(ch.inverse),
                                        label=f"out{i}", kind="square_chart_out", params=params))
        two.append(ch.forward)
    cover = Cover(curve, tuple(Arc(lo, hi) for lo, hi in arcs))
    return Fixture(f"square{n_collars}", {"side": a, "n_collars": n_collars, "overlap": w}, dom, cover,
                   tuple(inner), delta=w / 2, delta0=w / 4, exterior=tuple(outer), charts=tuple(two),
                   side=square_side(a), tag="square boundary with corner-blended normal charts")


def _negated(fwd):
    return lambda x, t: fwd(x, -t)


def _negated_inverse(inv):
    def f(p):
        b, t = inv(p)
        return b, -t
    return f


# registry -----------------------------------------------------------------------

FIXTURES = {
    "circle": make_circle_in_disk,
    "strip": make_strip_two_collar,
    "square": make_square_boundary,
    "net": make_net_segment,
}


def load_fixture(name, **params):
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    params = {k: v for k, v in params.items() if v is not None}
    return FIXTURES[name](**params)


def fixture_from_json(d):
    """Rebuild a fixture from its JSON form (name, parameters, collar order, declarations)."""
    name = d["fixture"]
    base = "square" if name.startswith("square") else name
    fx = load_fixture(base, **d.get("params", {}))
    collars = d.get("collars")
    if collars:
        ranks = [c.get("order", i) for i, c in enumerate(collars)]
        order = [i for _, i in sorted(zip(ranks, range(len(ranks))))]
        fx = fx.with_order(order)
    if d.get("declared"):
        fx = replace(fx, declared=dict(d["declared"]))
    return fx
