"""Finite covers of a base curve, Lipschitz partitions of unity and separated nets."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .curves import Arc, Curve
from .metric import as_points, metric_distance


class NotACoverError(ValueError):
    pass


@dataclass(frozen=True)
class Cover:
    """Finite family of relatively open arcs of a base curve."""

    curve: Curve
    members: tuple
    labels: tuple = None
    metric: str = "euclidean"

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("a cover needs at least one member")
        for m in self.members:
            if not isinstance(m, Arc):
                raise TypeError("cover members must be Arc instances")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(len(self.members))))
        if len(self.labels) != len(self.members):
            raise ValueError("one label per member")

    def __len__(self):
        return len(self.members)

    def membership(self, X):
        """Boolean matrix (n, m): point i lies in member j."""
        s = self.curve.param_of(as_points(X, self.curve.dim))
        return self.membership_params(s)

    def membership_params(self, s):
        return np.stack([m.contains_param(self.curve, s) for m in self.members], axis=1)

    def complement_distance(self, X):
        """dist(x, B \\ U_a) for every member; ``inf`` when U_a = B."""
        X = as_points(X, self.curve.dim)
        return np.stack([self.curve.intervals_distance(X, m.complement(self.curve), self.metric)
                         for m in self.members], axis=1)

    def critical_params(self):
        """Midpoints between consecutive arc endpoints: every overlap pattern shows up there."""
        L = self.curve.length
        ends = []
        for m in self.members:
            for v in (m.lo, m.hi):
                ends.append(v % L if self.curve.closed else min(max(v, 0.0), L))
        ends = np.unique(np.concatenate([ends, [0.0, L]]))
        mids = 0.5 * (ends[:-1] + ends[1:])
        return np.concatenate([ends, mids])

    def to_json(self, delta=None, delta0=None):
        d = {"base": self.curve.to_json(), "members": [m.to_json() for m in self.members],
             "labels": list(self.labels), "metric": self.metric}
        if delta is not None:
            d["delta"] = float(delta)
        if delta0 is not None:
            d["delta0"] = float(delta0)
        return d


def cover_from_json(d):
    from .metric import curve_from_json

    curve = curve_from_json(d["base"])
    members = tuple(Arc(m["lo"], m["hi"]) for m in d["members"])
    labels = tuple(d["labels"]) if "labels" in d else None
    return Cover(curve, members, labels, d.get("metric", "euclidean"))


def _cover_samples(cover, resolution, seed):
    curve = cover.curve
    X = curve.sample(resolution, seed)
    crit = curve.point_at(cover.critical_params())
    return np.vstack([X, crit])


def estimate_lebesgue(cover, dom=None, resolution=2048, seed=0, delta_max=None):
    """Largest delta_max * 2**-k such that every sample's delta-ball sits in one member.

    B(x, d) ∩ B lies inside U exactly when dist(x, B \\ U) >= d, so the check
    is an exact distance computation per sample.
    """
    X = _cover_samples(cover, resolution, seed)
    if not np.all(cover.membership(X).any(axis=1)):
        raise NotACoverError("not a cover")
    if delta_max is None:
        if dom is not None:
            delta_max = dom.diameter()
        else:
            lo, hi = cover.curve.bounds()
            delta_max = float(metric_distance(lo, hi, cover.metric))
    best = cover.complement_distance(X).max(axis=1).min()
    if best >= delta_max:
        return float(delta_max)
    for k in range(1, 64):
        cand = delta_max * 2.0 ** -k
        if cand <= best:
            return float(cand)
    raise NotACoverError("Lebesgue number below the grid floor")


def compute_order(cover, dom=None, samples=2048, seed=0):
    """Max number of members containing one point, on samples plus all overlap cells."""
    s = np.concatenate([cover.curve.param_of(cover.curve.sample(samples, seed)), cover.critical_params()])
    counts = cover.membership_params(s).sum(axis=1)
    return int(max(1, counts.max()))


class PartitionOfUnity(TransformerMixin, BaseEstimator):
    """Lipschitz partition of unity subordinate to a finite cover.

    V_a = {x in U_a : dist(x, B \\ U_a) > delta - delta0},
    f_a = min(1, dist(x, B \\ V_a)),  lambda_a = f_a / sum_b f_b.

    Parameters
    ----------
    cover : Cover
    delta : float
        A Lebesgue number of the cover, certified by the caller.
    delta0 : float, optional
        Shrink margin in (0, delta); defaults to delta / 2.
    """

    def __init__(self, cover, delta, delta0=None):
        self.cover = cover
        self.delta = delta
        self.delta0 = delta0

    def fit(self, X=None, y=None):
        delta = float(self.delta)
        delta0 = delta / 2 if self.delta0 is None else float(self.delta0)
        if not delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < delta0 < delta:
            raise ValueError("delta0 must lie in (0, delta)")
        cover = self.cover
        curve = cover.curve
        self.delta0_ = delta0
        self.shrink_ = delta - delta0
        self.complements_ = [m.complement(curve) for m in cover.members]
        self.shrunk_complements_ = [curve.expand(K, self.shrink_, cover.metric) if K else []
                                    for K in self.complements_]
        self.n_members_ = len(cover)
        self.order_ = compute_order(cover)
        N = self.order_
        self.bound_member_ = (N - 1) / delta0
        self.bound_ = N / delta0
        self.bound_partial_ = N / delta0
        check = curve.sample(1024, 0) if X is None else as_points(X, curve.dim)
        total = self.bumps(check).sum(axis=1)
        if np.any(total <= 0):
            bad = check[np.argmin(total)]
            raise NotACoverError(f"shrunken cover fails to cover at {bad.tolist()}")
        return self

    def bumps(self, X):
        check_is_fitted(self, "shrunk_complements_")
        X = as_points(X, self.cover.curve.dim)
        curve = self.cover.curve
        cols = []
        for K in self.shrunk_complements_:
            d = curve.intervals_distance(X, K, self.cover.metric) if K else np.full(len(X), np.inf)
            cols.append(np.minimum(1.0, d))
        return np.stack(cols, axis=1)

    def transform(self, X):
        F = self.bumps(X)
        total = F.sum(axis=1, keepdims=True)
        if np.any(total <= 0):
            raise NotACoverError("point outside the shrunken cover")
        return F / total

    def partial_sums(self, X, order=None):
        """Cumulative sums lambda_1 + ... + lambda_i in the given member order; (n, m + 1)."""
        lam = self.transform(X)
        if order is not None:
            lam = lam[:, list(order)]
        return np.concatenate([np.zeros((len(lam), 1)), np.cumsum(lam, axis=1)], axis=1)

    def support_margin(self, X):
        """dist(x, B \\ U_a) for each member, to check the shrunken-support condition."""
        return self.cover.complement_distance(X)

    def to_json(self):
        return self.cover.to_json(self.delta, self.delta0_ if hasattr(self, "delta0_") else self.delta0)


def build_pou(cover, delta, delta0=None, dom=None, samples=None):
    """Fit a PartitionOfUnity; ``samples`` are the base points checked for coverage."""
    return PartitionOfUnity(cover, delta, delta0).fit(samples)


@dataclass(frozen=True)
class SeparatedNet:
    tau: float
    points: np.ndarray
    candidates: np.ndarray
    metric: str = "euclidean"

    def min_separation(self):
        P = self.points
        if len(P) < 2:
            return np.inf
        D = metric_distance(P[:, None, :], P[None, :, :], self.metric)
        return float(D[np.triu_indices(len(P), 1)].min())

    def covering_radius(self, X=None):
        X = self.candidates if X is None else as_points(X)
        out = np.empty(len(X))
        for i in range(0, len(X), 2048):
            blk = X[i:i + 2048]
            out[i:i + 2048] = metric_distance(blk[:, None, :], self.points[None], self.metric).min(axis=1)
        return float(out.max())

    def to_csv_rows(self):
        return [[i, *map(float, p)] for i, p in enumerate(self.points)]


def default_candidates(curve, n_candidates=10_000):
    """Arclength grid with a power-of-two step, so dyadic parameters are hit exactly."""
    step = 2.0 ** np.floor(np.log2(curve.length / n_candidates))
    s = np.arange(0.0, curve.length, step)
    if not curve.closed and s[-1] < curve.length:
        s = np.append(s, curve.length)
    return curve.point_at(s)


def greedy_maximal_net(dom, tau, seed=0, candidates=None, n_candidates=10_000, n_random=0):
    """Greedy tau-separated net, maximal on the candidate set.

    Candidates are swept in arclength order; ``n_random`` extra quasi-random
    points (drawn with ``seed``) are appended to the sweep.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if not np.isfinite(dom.diameter()):
        raise ValueError("unbounded region_bounds")
    curve = dom.base
    if candidates is None:
        C = default_candidates(curve, n_candidates)
        if n_random:
            R = curve.sample(n_random, seed)
            C = np.vstack([C, R])
            C = C[np.argsort(curve.param_of(C), kind="stable")]
    else:
        C = as_points(candidates, dom.dim)
    chosen = []
    dmin = np.full(len(C), np.inf)
    for i in range(len(C)):
        if dmin[i] >= tau:
            chosen.append(i)
            dmin = np.minimum(dmin, dom.ambient_dist(C, C[i]))
    return SeparatedNet(float(tau), C[chosen], C, dom.metric)


class NetConstants(NamedTuple):
    N_prime: int
    N: float
    L: int
    L_sigma: int
    zeta: float


def net_constants(n, C):
    """Overlap, Lipschitz and margin constants for a tau = 1/2 net with collar constant C."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if C < 1:
        raise ValueError("C must be at least 1")
    Np = 5 ** n
    N = (8 * C + 9) ** n
    if float(N).is_integer():
        N = int(N)
    return NetConstants(Np, N, 2 * (Np - 1), 2 * Np, 0.25 / C)
