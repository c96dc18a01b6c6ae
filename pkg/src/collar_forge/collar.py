"""Local collars, the push maps and the recursive global collar construction."""
import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from scipy.stats import qmc
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .covers import Cover, NotACoverError, PartitionOfUnity
from .curves import Arc
from .metric import Complement, as_points, metric_distance

TIE_TOL = 1e-12
HEIGHT_TOL = 1e-12


class CollarValidationError(ValueError):
    """A named validation check failed; ``witness`` holds the offending inputs."""

    def __init__(self, check, message, witness=None):
        super().__init__(f"{check}: {message}")
        self.check = check
        self.witness = witness


class InverseError(ValueError):
    pass


def _heights(t, n):
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = np.full(n, float(t))
    if t.shape != (n,):
        raise ValueError(f"expected {n} heights, got shape {t.shape}")
    return t


class LocalCollar:
    """An embedding c: U x [0,1] -> X with c(x, 0) = x, given with its inverse on the image.

    ``forward(x, t)`` maps points (n, d) and heights (n,) to points; ``inverse(p)``
    returns ``(base, height)`` for image points (NaN rows where it has no answer);
    ``in_base`` and ``sample_base`` describe the closed base U. When ``in_image`` is
    omitted it is derived from the inverse with a round-trip residual check.
    """

    def __init__(self, forward, inverse, in_base, sample_base, in_image=None, *, label="",
                 L=None, iL=None, exact_inverse=True, dim=2, kind="", params=None):
        self._forward = forward
        self._inverse = inverse
        self._in_base = in_base
        self._sample_base = sample_base
        self._in_image = in_image
        self.label = label
        self.L = L
        self.iL = iL
        self.exact_inverse = exact_inverse
        self.dim = dim
        self.kind = kind
        self.params = params or {}

    def __repr__(self):
        return f"LocalCollar({self.label or self.kind!r})"

    @property
    def bL(self):
        if self.L is None or self.iL is None:
            return None
        return self.L * self.iL

    @classmethod
    def on_arc(cls, curve, lo, hi, forward, inverse, **kw):
        """Collar over the closed arc [lo, hi] of a curve."""

        def in_base(x, tol=1e-12):
            x = as_points(x, curve.dim)
            on = curve.contains(x, tol=1e-9)
            return on & curve.in_interval(curve.param_of(x), lo, hi, tol)

        def sample_base(n, seed=0):
            u = qmc.Halton(d=1, scramble=True, seed=seed).random(n)[:, 0]
            return curve.point_at(lo + u * (hi - lo))

        c = cls(forward, inverse, in_base, sample_base, dim=curve.dim, **kw)
        c.curve, c.arc = curve, (lo, hi)
        return c

    def forward(self, x, t):
        x = as_points(x, self.dim)
        return np.asarray(self._forward(x, _heights(t, len(x))), dtype=float)

    def inverse(self, p):
        p = as_points(p, self.dim)
        b, t = self._inverse(p)
        return np.asarray(b, dtype=float), np.asarray(t, dtype=float)

    def in_base(self, x):
        return np.asarray(self._in_base(as_points(x, self.dim)), dtype=bool)

    def sample_base(self, n, seed=0):
        return as_points(self._sample_base(n, seed), self.dim)

    def in_image(self, p):
        p = as_points(p, self.dim)
        if self._in_image is not None:
            return np.asarray(self._in_image(p), dtype=bool)
        b, t = self.inverse(p)
        ok = np.all(np.isfinite(b), axis=1) & np.isfinite(t)
        ok &= (t >= -HEIGHT_TOL) & (t <= 1 + HEIGHT_TOL)
        if ok.any():
            idx = np.nonzero(ok)[0]
            ok[idx] = self.in_base(b[idx])
        if ok.any():
            idx = np.nonzero(ok)[0]
            back = self.forward(b[idx], np.clip(t[idx], 0.0, 1.0))
            scale = np.maximum(1.0, np.abs(p[idx]).max(axis=1))
            ok[idx] = np.max(np.abs(back - p[idx]), axis=1) <= 1e-9 * scale
        return ok

    def validate(self, n=1000, seed=0, heights=None):
        """Check base identity, inverse round trip and image membership on samples."""
        x = self.sample_base(n, seed)
        t = qmc.Halton(d=1, scramble=True, seed=seed + 1).random(n)[:, 0] if heights is None else heights
        dev0 = float(np.max(np.abs(self.forward(x, 0.0) - x)))
        p = self.forward(x, t)
        b, s = self.inverse(p)
        dev_inv = float(np.max(np.abs(b - x)) + np.max(np.abs(s - t)))
        img = self.in_image(p)
        report = {"base_identity": dev0, "inverse_roundtrip": dev_inv, "in_image": bool(img.all())}
        if dev0 > 1e-12:
            raise CollarValidationError("base_identity", f"forward(x,0) deviates by {dev0:.3e}",
                                        x[np.argmax(np.abs(self.forward(x, 0.0) - x).max(axis=1))])
        if not dev_inv <= 1e-10:
            raise CollarValidationError("inverse_roundtrip", f"inverse(forward) deviates by {dev_inv:.3e}")
        if not img.all():
            raise CollarValidationError("in_image", "forward image point rejected by in_image",
                                        (x[~img][0], t[~img][0]))
        return report

    def to_json(self, order=None):
        d = {"kind": self.kind, "params": self.params, "label": self.label}
        if order is not None:
            d["order"] = int(order)
        return d


def numeric_inverse(curve, lo, hi, forward, n_starts=8, residual_tol=1e-9, seed=0):
    """Inverse on the image by bounded multi-start minimization of |c(s, t) - p|.

    Returns NaN rows when the best residual exceeds ``residual_tol``; the
    result is a fallback and should be flagged as unverified.
    """
    starts = qmc.Halton(d=2, scramble=True, seed=seed).random(n_starts)

    def inverse(P):
        P = np.atleast_2d(P)
        B = np.full(P.shape, np.nan)
        T = np.full(len(P), np.nan)
        for i, p in enumerate(P):
            def obj(z):
                q = forward(curve.point_at(np.array([z[0]])), np.array([z[1]]))[0]
                return float(np.sum((q - p) ** 2))

            best = None
            for u, v in starts:
                r = minimize(obj, [lo + u * (hi - lo), v], method="L-BFGS-B",
                             bounds=[(lo, hi), (0.0, 1.0)], options={"ftol": 1e-30, "gtol": 1e-14})
                if best is None or r.fun < best.fun:
                    best = r
            if np.sqrt(best.fun) <= residual_tol:
                B[i] = curve.point_at(np.array([best.x[0]]))[0]
                T[i] = best.x[1]
        return B, T

    return inverse


def xi_transform(lam, t):
    """Reparametrize a fiber so that height 0 moves to lam/2 while [3/4, 1] stays fixed.

    Equals lam/2 + (3/4 - lam/2)(4/3)t below 3/4 and t above, written as
    t + (lam/2)(1 - t/(3/4)) so that lam = 0 returns t bit-for-bit.
    """
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    for name, v in (("lambda", lam), ("t", t)):
        if np.any(v < -HEIGHT_TOL) or np.any(v > 1 + HEIGHT_TOL) or not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must lie in [0, 1]")
    lam = np.clip(lam, 0.0, 1.0)
    t = np.clip(t, 0.0, 1.0)
    out = np.where(t < 0.75, t + (lam / 2) * (1 - t / 0.75), t)
    return float(out) if out.ndim == 0 else out


def push_map(collar, lam, y):
    """g(y) = c(xi(lam(b), s)) where (b, s) = c^-1(y) for y in the image, else y."""
    y = as_points(y, collar.dim)
    out = y.copy()
    inside = collar.in_image(y)
    if inside.any():
        b, s = collar.inverse(y[inside])
        if not collar.exact_inverse:
            back = collar.forward(b, np.clip(s, 0, 1))
            res = np.max(np.abs(back - y[inside]))
            if not res <= 1e-9:
                raise InverseError(f"inverse residual {res:.3e} exceeds 1e-9")
        lb = np.clip(np.asarray(lam(b), dtype=float), 0.0, 1.0)
        out[inside] = collar.forward(b, xi_transform(lb, np.clip(s, 0.0, 1.0)))
    return out


class GlobalCollar(TransformerMixin, BaseEstimator):
    """Collar of the whole base assembled from local collars and a partition of unity.

    On the region lambda_S,j-1(x) < t <= lambda_S,j(x),

        h(x, t) = G_{j-1}(c_j(x, (t - lambda_S,j-1(x)) / 2)),   G_k = g_1 o ... o g_k,

    and h(x, 0) = x. ``transform`` takes rows ``[coords..., t]``.

    Parameters
    ----------
    collars : list of LocalCollar
        One collar per cover member, in cover order.
    pou : PartitionOfUnity
        Fitted or unfitted partition of unity of the same cover.
    order : sequence of int, optional
        Enumeration of the collars used by the construction.
    validate : bool
        Run the validation suite during ``fit``.
    """

    def __init__(self, collars, pou, order=None, validate=True, n_check=10_000, seed=0):
        self.collars = collars
        self.pou = pou
        self.order = order
        self.validate = validate
        self.n_check = n_check
        self.seed = seed

    def fit(self, X=None, y=None):
        collars = list(self.collars)
        pou = self.pou
        if not hasattr(pou, "shrunk_complements_"):
            pou.fit()
        m = len(collars)
        if m == 0:
            raise ValueError("at least one collar is required")
        if len(pou.cover) != m:
            raise ValueError(f"{m} collars but the cover has {len(pou.cover)} members")
        order = list(range(m)) if self.order is None else [int(i) for i in self.order]
        if sorted(order) != list(range(m)):
            raise ValueError(f"order must be a permutation of 0..{m - 1}")
        self.order_ = order
        self.collars_ = [collars[i] for i in order]
        self.n_collars_ = m
        self.dim_ = collars[0].dim
        self.curve_ = pou.cover.curve
        self.metric_ = pou.cover.metric
        if self.validate:
            self.validation_ = validate_global_collar(self, X, n_inject=self.n_check, seed=self.seed)
        return self

    # weights ---------------------------------------------------------------

    def lambdas(self, x):
        """lambda_i(x) in construction order, shape (n, m)."""
        check_is_fitted(self, "collars_")
        return self.pou.transform(x)[:, self.order_]

    def lambda_sums(self, x):
        """Cumulative weights with a leading zero column, shape (n, m + 1)."""
        lam = self.lambdas(x)
        return np.concatenate([np.zeros((len(lam), 1)), np.cumsum(lam, axis=1)], axis=1)

    def locality_index(self, x):
        """i(x) = max{i : lambda_i(x) > 0}, 1-based."""
        lam = self.lambdas(x)
        return lam.shape[1] - np.argmax((lam > 0)[:, ::-1], axis=1)

    def _lam_fn(self, k):
        col = self.order_[k - 1]
        return lambda b: self.pou.transform(b)[:, col]

    # construction ----------------------------------------------------------

    def _check_inputs(self, x, t):
        x = as_points(x, self.dim_)
        t = _heights(t, len(x))
        if np.any(t < -HEIGHT_TOL) or np.any(t > 1 + HEIGHT_TOL) or not np.all(np.isfinite(t)):
            raise ValueError("heights must lie in [0, 1]")
        return x, np.clip(t, 0.0, 1.0)

    def region_index(self, x, t, _lam=None):
        """Smallest j >= 1 with lambda_j(x) > 0 and t <= lambda_S,j(x) + 1e-12; 0 when t = 0."""
        x, t = self._check_inputs(x, t)
        lam = self.lambdas(x) if _lam is None else _lam
        sums = np.cumsum(lam, axis=1)
        ok = (lam > 0) & (t[:, None] <= sums + TIE_TOL)
        if not np.all(ok.any(axis=1) | (t == 0)):
            raise ValueError("height beyond the last region")
        j = np.argmax(ok, axis=1) + 1
        return np.where(t == 0, 0, j)

    def push(self, k, y):
        """The push map g_k (1-based)."""
        return push_map(self.collars_[k - 1], self._lam_fn(k), y)

    def compose_push(self, j, y):
        """G_j(y) = g_1(g_2(... g_j(y)))."""
        y = as_points(y, self.dim_)
        for k in range(j, 0, -1):
            y = self.push(k, y)
        return y

    def evaluate_region(self, x, t, j, _sums=None):
        """The region-j formula G_{j-1}(c_j(x, (t - lambda_S,j-1(x)) / 2)) for j >= 1."""
        x, t = self._check_inputs(x, t)
        sums = self.lambda_sums(x) if _sums is None else _sums
        j = np.broadcast_to(np.asarray(j, dtype=int), (len(x),))
        out = x.copy()
        for jj in np.unique(j):
            rows = np.nonzero(j == jj)[0]
            if jj == 0:
                continue
            s = (t[rows] - sums[rows, jj - 1]) / 2
            y = self.collars_[jj - 1].forward(x[rows], np.clip(s, 0.0, 1.0))
            out[rows] = self.compose_push(jj - 1, y)
        return out

    def evaluate(self, x, t):
        """h(x, t) for base points x (n, d) and heights t (n,) or a scalar."""
        check_is_fitted(self, "collars_")
        x, t = self._check_inputs(x, t)
        if not np.all(self.curve_.contains(x, tol=1e-9)):
            bad = x[~self.curve_.contains(x, tol=1e-9)][0]
            raise ValueError(f"point {bad.tolist()} is not on the base")
        lam = self.lambdas(x)
        j = self.region_index(x, t, _lam=lam)
        sums = np.concatenate([np.zeros((len(lam), 1)), np.cumsum(lam, axis=1)], axis=1)
        return self.evaluate_region(x, t, j, _sums=sums)

    def transform(self, X):
        X = check_array(X)
        if X.shape[1] != self.dim_ + 1:
            raise ValueError(f"expected rows of {self.dim_} coordinates plus a height")
        return self.evaluate(X[:, :-1], X[:, -1])

    def truncated(self, k):
        """The construction restricted to the first k collars of the enumeration."""
        gc = GlobalCollar(self.collars, self.pou, self.order, validate=False)
        gc.fit()
        gc.collars_ = gc.collars_[:k]
        gc.n_collars_ = k
        full = gc.order_
        gc.order_ = full[:k]
        return gc

    def to_json(self):
        return {"order": list(self.order_), "collars": [c.to_json(i) for i, c in enumerate(self.collars)],
                "cover": self.pou.to_json()}


def build_global_collar(collars, pou, samples=None, order=None, n_check=10_000, seed=0):
    """Fit and validate a GlobalCollar, raising CollarValidationError on failure."""
    if not hasattr(pou, "shrunk_complements_"):
        try:
            pou.fit(samples)
        except NotACoverError as e:
            raise NotACoverError(f"not a cover ({e})") from e
    cover = pou.cover
    X = cover.curve.sample(1024, seed) if samples is None else as_points(samples)
    if not np.all(cover.membership(X).any(axis=1)):
        raise NotACoverError("not a cover")
    return GlobalCollar(collars, pou, order=order, n_check=n_check, seed=seed).fit(X)


def validate_global_collar(gc, X=None, n_inject=10_000, seed=0):
    """Base identity, region-boundary continuity and sampled injectivity."""
    curve = gc.curve_
    X = curve.sample(1000, seed) if X is None else as_points(X, gc.dim_)
    report = {}
    for i, c in enumerate(gc.collars_):
        report[f"collar_{i + 1}"] = c.validate(200, seed + i)

    h0 = gc.evaluate(X, 0.0)
    dev = metric_distance(h0, X, gc.metric_)
    report["base_identity"] = float(dev.max())
    if dev.max() > 1e-10:
        k = int(np.argmax(dev))
        raise CollarValidationError("base_identity", f"h(x,0) moved by {dev[k]:.3e}", X[k])

    lam = gc.lambdas(X)
    sums = np.concatenate([np.zeros((len(X), 1)), np.cumsum(lam, axis=1)], axis=1)
    worst = 0.0
    for a in range(1, gc.n_collars_):
        nxt = np.full(len(X), -1)
        later = lam[:, a:] > 0
        has = later.any(axis=1) & (lam[:, a - 1] > 0)
        nxt[has] = a + 1 + np.argmax(later[has], axis=1)
        rows = np.nonzero(has)[0]
        if len(rows) == 0:
            continue
        t = np.clip(sums[rows, a], 0.0, 1.0)
        lo = gc.evaluate_region(X[rows], t, a, _sums=sums[rows])
        hi = gc.evaluate_region(X[rows], t, nxt[rows], _sums=sums[rows])
        d = metric_distance(lo, hi, gc.metric_)
        worst = max(worst, float(d.max()))
        if d.max() > 1e-9:
            k = int(np.argmax(d))
            raise CollarValidationError("boundary_continuity",
                                        f"regions {a} and {nxt[rows][k]} disagree by {d[k]:.3e}",
                                        (X[rows][k], t[k]))
    report["boundary_continuity"] = worst

    n = int(n_inject)
    if n > 0:
        u = qmc.Halton(d=2, scramble=True, seed=seed + 7).random(n)
        xs = curve.point_at(u[:, 0] * curve.length)
        ts = u[:, 1]
        img = gc.evaluate(xs, ts)
        pairs = cKDTree(img).query_pairs(1e-12, output_type="ndarray")
        for i, k in pairs:
            din = metric_distance(xs[i], xs[k], gc.metric_) + abs(ts[i] - ts[k])
            if din > 1e-10:
                raise CollarValidationError("injectivity", "distinct inputs share an image",
                                            ((xs[i], ts[i]), (xs[k], ts[k])))
        report["injectivity_pairs_checked"] = n
    return report


# restriction and discrete unions -----------------------------------------------


class RestrictedCollar(LocalCollar):
    """c_d(x, t) = c(x, t d(x)) for a positive cut function d on the base."""

    def __init__(self, parent, cut):
        self.parent = parent
        self.cut = cut

        def fwd(x, t):
            return parent.forward(x, t * cut(x))

        def inv(p):
            b, s = parent.inverse(p)
            t = np.full(len(p), np.nan)
            ok = np.all(np.isfinite(b), axis=1)
            if ok.any():
                t[ok] = s[ok] / cut(b[ok])
            return b, t

        super().__init__(fwd, inv, parent.in_base, parent.sample_base, label=parent.label + "|cut",
                         exact_inverse=parent.exact_inverse, dim=parent.dim, kind="restricted",
                         params={"parent": parent.to_json()})
        for attr in ("curve", "arc"):
            if hasattr(parent, attr):
                setattr(self, attr, getattr(parent, attr))


def _fiber_avoids(collar, x, r, A, metric, n_fiber=64):
    t = np.linspace(0.0, r, n_fiber + 1)[1:]
    P = collar.forward(np.repeat(x[None], len(t), axis=0), t)
    return bool(np.all(A.dist(P, metric) > 0))


def restrict_collar(collar, A=None, n_samples=64, resolution=1e-6, seed=0, metric="euclidean",
                    safety=0.5):
    """Shrink a local collar so its image avoids the closed set A.

    For each of ``n_samples`` base points the largest safe height r_k is found by
    bisection; the cut function blends ``safety`` times the local minimum of the
    r_k through a partition of unity subordinate to arcs around the samples.
    """
    if A is None:
        return RestrictedCollar(collar, lambda x: np.ones(len(np.atleast_2d(x))))
    if not hasattr(collar, "curve"):
        raise ValueError("restriction needs a collar built on an arc")
    curve, (lo, hi) = collar.curve, collar.arc
    probe = collar.sample_base(max(n_samples, 256), seed)
    if np.any(A.dist(probe, metric) <= 0):
        raise ValueError("A intersects the collar base")
    base = curve.subcurve(lo, hi)
    n = max(2, int(n_samples))
    if base.closed:
        params = np.arange(n) * (base.length / n)
        h = base.length / n
    else:
        params = np.linspace(0.0, base.length, n)
        h = base.length / (n - 1)
    centers = base.point_at(params)
    radii = np.empty(n)
    for k, x in enumerate(centers):
        if _fiber_avoids(collar, x, 1.0, A, metric):
            radii[k] = 1.0
            continue
        a, b = 0.0, 1.0
        while b - a > resolution:
            mid = 0.5 * (a + b)
            if _fiber_avoids(collar, x, mid, A, metric):
                a = mid
            else:
                b = mid
        if a <= 0:
            raise ValueError(f"no positive safe height at {x.tolist()}")
        radii[k] = a
    nb = np.minimum(radii, np.minimum(np.roll(radii, 1), np.roll(radii, -1)))
    if not base.closed:
        nb[0] = min(radii[0], radii[1])
        nb[-1] = min(radii[-1], radii[-2])
    safe = safety * nb
    cover = Cover(base, tuple(Arc(s - 1.5 * h, s + 1.5 * h) for s in params), metric=metric)
    pou = PartitionOfUnity(cover, h, h / 2).fit()

    def cut(x):
        return pou.transform(x) @ safe

    rc = RestrictedCollar(collar, cut)
    img = rc.forward(np.repeat(probe, 8, axis=0), np.tile(np.linspace(0.125, 1.0, 8), len(probe)))
    if np.any(A.dist(img, metric) <= 0):
        raise CollarValidationError("restriction", "restricted image meets A; increase n_samples")
    rc.radii_ = radii
    rc.cut_pou_ = pou
    return rc


def merge_discrete_collars(collars, separations, metric="euclidean", n_check=512, seed=0):
    """Union collar over pairwise disjoint bases, each first cut down into its own region.

    ``separations`` are open analytic regions O_a containing the bases (a region's
    closed complement is what the restricted collar must avoid).
    """
    collars = list(collars)
    if len(collars) != len(separations):
        raise ValueError("one separating region per collar")
    if len(collars) == 1 and separations[0] is None:
        return collars[0]
    bases = [c.sample_base(n_check, seed) for c in collars]
    for i in range(len(collars)):
        for k in range(i + 1, len(collars)):
            gap = metric_distance(bases[i][:, None], bases[k][None], metric).min()
            if not gap > 0:
                raise ValueError(f"bases {i} and {k} overlap")
    restricted = []
    for c, O, B in zip(collars, separations, bases):
        if np.any(O.dist_to_complement(B, metric) <= 0):
            raise ValueError("separating region does not contain its base")
        restricted.append(restrict_collar(c, Complement(O), metric=metric, seed=seed))
    for i, rc in enumerate(restricted):
        x = rc.sample_base(n_check, seed)
        img = rc.forward(np.repeat(x, 4, axis=0), np.tile([0.25, 0.5, 0.75, 1.0], len(x)))
        for k, O in enumerate(separations):
            if k != i and np.any(O.dist_to_complement(img, metric) > 0):
                raise ValueError(f"separating regions {i} and {k} overlap on the collar images")
        for k, O in enumerate(separations):
            if k != i and np.any(O.dist_to_complement(bases[i], metric) > 0):
                raise ValueError(f"separating regions {i} and {k} overlap")

    def which_base(x):
        idx = np.full(len(x), -1)
        for i, rc in enumerate(restricted):
            idx[(idx < 0) & rc.in_base(x)] = i
        return idx

    def fwd(x, t):
        idx = which_base(x)
        if np.any(idx < 0):
            raise ValueError("outside base")
        out = np.empty_like(x)
        for i, rc in enumerate(restricted):
            r = idx == i
            if r.any():
                out[r] = rc.forward(x[r], t[r])
        return out

    def inv(p):
        B = np.full(p.shape, np.nan)
        T = np.full(len(p), np.nan)
        for rc in restricted:
            r = np.isnan(T) & rc.in_image(p)
            if r.any():
                B[r], T[r] = rc.inverse(p[r])
        return B, T

    def in_base(x):
        return which_base(x) >= 0

    def sample_base(n, seed=0):
        parts = np.array_split(np.arange(n), len(restricted))
        return np.vstack([rc.sample_base(len(p), seed) for rc, p in zip(restricted, parts) if len(p)])

    merged = LocalCollar(fwd, inv, in_base, sample_base, label="union",
                         exact_inverse=all(c.exact_inverse for c in collars), dim=collars[0].dim,
                         kind="union")
    merged.parts = restricted
    return merged


def trajectories(gc, x, t_grid):
    """Rows (point id, t, image coords) for each base point over the height grid."""
    x = as_points(x, gc.dim_)
    t_grid = np.asarray(t_grid, dtype=float)
    X = np.repeat(x, len(t_grid), axis=0)
    T = np.tile(t_grid, len(x))
    img = gc.evaluate(X, T)
    ids = np.repeat(np.arange(len(x)), len(t_grid))
    return np.column_stack([ids, T, img])

