"""Two-sided collars: orientation, gluing, the epsilon restriction and the midpoint test.

Heights run over [-h, h] (h = 1 unless restricted). The ``plus`` and ``minus``
views are one-sided collars on [0, h]; ``minus(x, t) = forward(x, -t)``.
Side predicates return +1 (plus side), -1 (minus side) or 0 (on the base).
"""
import warnings

import numpy as np
from scipy.stats import qmc

from .collar import CollarValidationError, InverseError, LocalCollar
from .lipschitz import (DEGENERATE, SLACK, CollarDomain, _lex_argmax, _num, apply_map, quotients,
                        sample_pairs)
from .metric import as_points, metric_distance

DECADES = (-4.0, 0.0)


def _no_inverse(p):
    raise InverseError("this bicollar has no inverse")


class Bicollar:
    """An embedding c: U x [-h, h] -> X with c(x, 0) = x.

    Parameters
    ----------
    forward : callable (x (n, d), t (n,)) -> (n, d)
    sample_base : callable (n, seed) -> base points
    side : callable points -> {+1, -1, 0}, optional
    curve, arc : the base curve and the closed arc (lo, hi) the base occupies
    height : half-width h of the height range
    """

    def __init__(self, forward, sample_base, side=None, *, curve=None, arc=None, height=1.0, in_base=None,
                 inverse=None, label="", kind="", dim=2, metric="euclidean", parts=None):
        if not height > 0:
            raise ValueError("height must be positive")
        self._forward = forward
        self._sample_base = sample_base
        self.side = side
        self.curve = curve
        self.arc = arc if arc is not None or curve is None else (0.0, curve.length)
        self.height = float(height)
        self._in_base = in_base
        self._inverse = inverse
        self.label = label
        self.kind = kind
        self.dim = dim
        self.metric = metric
        self.parts = parts

    def __repr__(self):
        return f"Bicollar({self.label or self.kind!r}, height={self.height:g})"

    @property
    def height_range(self):
        return (-self.height, self.height)

    def forward(self, x, t):
        x = as_points(x, self.dim)
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            t = np.full(len(x), float(t))
        if np.any(np.abs(t) > self.height * (1 + 1e-12)):
            raise ValueError(f"heights must lie in [-{self.height:g}, {self.height:g}]")
        return np.asarray(self._forward(x, t), dtype=float)

    def map(self, X):
        """Evaluate on rows [coords..., t]."""
        X = np.asarray(X, dtype=float)
        return self.forward(X[:, :-1], X[:, -1])

    def sample_base(self, n, seed=0):
        return as_points(self._sample_base(n, seed), self.dim)

    def in_base(self, x):
        x = as_points(x, self.dim)
        if self._in_base is not None:
            return np.asarray(self._in_base(x), dtype=bool)
        if self.curve is None:
            raise ValueError("bicollar has no base description")
        lo, hi = self.arc
        return self.curve.contains(x, tol=1e-9) & self.curve.in_interval(self.curve.param_of(x), lo, hi, 1e-12)

    def _view(self, sign, suffix):
        inv = self._inverse or _no_inverse

        def fwd(x, t):
            return self._forward(x, sign * t)

        def view_inv(p):
            b, t = inv(p)
            return b, sign * t

        c = LocalCollar(fwd, view_inv, self.in_base, self.sample_base, label=f"{self.label}{suffix}",
                        dim=self.dim, kind=f"{self.kind}{suffix}")
        c.curve, c.arc = self.curve, self.arc
        return c

    @property
    def plus(self):
        """One-sided collar (x, t) -> c(x, t) for t in [0, h]."""
        return self._view(1.0, "+")

    @property
    def minus(self):
        """One-sided collar (x, t) -> c(x, -t) for t in [0, h]."""
        return self._view(-1.0, "-")

    def domain(self, t_lo=None, t_hi=None):
        """Pair domain (arc) x [t_lo, t_hi] under the product metric."""
        lo, hi = self.arc
        t_lo = -self.height if t_lo is None else t_lo
        t_hi = self.height if t_hi is None else t_hi
        return CollarDomain(self.curve, lo, hi, self.metric, t_lo, t_hi)

    def with_height(self, height):
        if height > self.height * (1 + 1e-12):
            raise ValueError("cannot enlarge the height range")
        return Bicollar(self._forward, self._sample_base, self.side, curve=self.curve, arc=self.arc,
                        height=height, in_base=self._in_base, inverse=self._inverse, label=self.label,
                        kind=self.kind, dim=self.dim, metric=self.metric, parts=self.parts)

    def check_sides(self, n=1000, seed=0, side=None):
        """Positive heights must land on side +1, negative heights on side -1."""
        side = side or self.side
        if side is None:
            raise ValueError("no side predicate")
        x = self.sample_base(n, seed)
        u = qmc.Halton(d=1, scramble=True, seed=seed + 1).random(n)[:, 0]
        t = self.height * np.maximum(u, 1e-3)
        dev0 = float(np.max(np.abs(self.forward(x, 0.0) - x)))
        sp = np.asarray(side(self.forward(x, t)))
        sm = np.asarray(side(self.forward(x, -t)))
        bad = np.nonzero((sp != 1) | (sm != -1))[0]
        if len(bad):
            i = bad[0]
            raise CollarValidationError("sides", f"height {t[i]:g} lands on the wrong side at x={x[i].tolist()}",
                                        (x[i], t[i]))
        return {"base_identity": dev0, "n": int(n)}

    def to_json(self):
        d = {"kind": self.kind, "label": self.label, "height_range": [-self.height, self.height]}
        if self.arc is not None:
            d["arc"] = [float(self.arc[0]), float(self.arc[1])]
        return d


def _forward_of(c):
    """Uniform (x, t) -> point access for LocalCollar, GlobalCollar or plain callables."""
    if hasattr(c, "evaluate"):
        return c.evaluate
    if hasattr(c, "forward"):
        return c.forward
    return c


def _base_sampler(c):
    if hasattr(c, "sample_base"):
        return c.sample_base
    if hasattr(c, "curve_"):
        return c.curve_.sample
    raise TypeError(f"cannot sample the base of {c!r}")


def _base_test(c):
    if hasattr(c, "in_base"):
        return c.in_base
    if hasattr(c, "curve_"):
        return lambda x: c.curve_.contains(as_points(x, c.curve_.dim), tol=1e-9)
    return None


def _curve_of(c):
    return getattr(c, "curve_", None) or getattr(c, "curve", None)


def _arc_of(c, curve):
    arc = getattr(c, "arc", None)
    return arc if arc is not None else (0.0, curve.length)


# orientation ----------------------------------------------------------------------

PROBE = 0.5


def _fiber_signs(raw, side, x, heights):
    S = np.stack([np.asarray(side(raw.forward(x, np.full(len(x), h)))) for h in heights], axis=1)
    return S


def orient_bicollar(raw, side=None, n=1000, seed=0, heights=(0.125, 0.25, 0.5, 0.75, 1.0)):
    """Flip the height of a raw two-sided chart wherever its positive fiber points to the minus side.

    Every sampled base point must have its positive fiber on one side and its
    negative fiber on the other; otherwise ``"not two-sided at x"`` is raised.
    The orientation of a point is read off at height ``PROBE * h``.
    """
    side = side or raw.side
    if side is None:
        raise ValueError("a side predicate is required")
    h = raw.height
    hs = [h * v for v in heights]
    x = raw.sample_base(n, seed)
    Sp = _fiber_signs(raw, side, x, hs)
    Sm = _fiber_signs(raw, side, x, [-v for v in hs])
    sigma = Sp[:, 0]
    ok = (sigma != 0) & np.all(Sp == sigma[:, None], axis=1) & np.all(Sm == -sigma[:, None], axis=1)
    if not ok.all():
        bad = x[np.argmin(ok)]
        raise ValueError(f"not two-sided at x={bad.tolist()}")

    def orientation(x):
        x = as_points(x, raw.dim)
        s = np.asarray(side(raw.forward(x, np.full(len(x), PROBE * h))))
        if np.any(s == 0):
            raise ValueError(f"not two-sided at x={x[np.argmin(s != 0)].tolist()}")
        return s.astype(float)

    def fwd(x, t):
        return raw._forward(x, orientation(x) * t)

    inv = None
    if raw._inverse is not None:
        def inv(p):
            b, t = raw._inverse(p)
            ok = np.all(np.isfinite(b), axis=1)
            s = np.ones(len(p))
            if ok.any():
                s[ok] = orientation(b[ok])
            return b, s * t

    out = Bicollar(fwd, raw._sample_base, side, curve=raw.curve, arc=raw.arc, height=h, in_base=raw._in_base,
                   inverse=inv, label=raw.label, kind=f"{raw.kind}:oriented", dim=raw.dim, metric=raw.metric)
    out.orientation = orientation
    return out


# gluing ---------------------------------------------------------------------------


def glue_bicollar(c_plus, c_minus, side=None, n_check=1000, seed=0, metric=None, label="glued"):
    """c(x, t) = c+(x, t) for t >= 0 and c-(x, -t) for t < 0.

    Components may be LocalCollar or GlobalCollar instances. Both must fix
    the same base: samples from either base are checked against the other and
    against forward(x, 0) = x.
    """
    fp, fm = _forward_of(c_plus), _forward_of(c_minus)
    curve = _curve_of(c_plus)
    if curve is None:
        raise ValueError("c_plus has no base curve")
    metric = metric or getattr(c_plus, "metric_", None) or "euclidean"
    sp, sm = _base_sampler(c_plus), _base_sampler(c_minus)
    tp, tm = _base_test(c_plus), _base_test(c_minus)
    xp, xm = as_points(sp(n_check, seed), curve.dim), as_points(sm(n_check, seed + 1), curve.dim)
    if tm is not None and not np.all(tm(xp)):
        raise ValueError(f"base mismatch: {xp[np.argmin(tm(xp))].tolist()} is not in the minus base")
    if tp is not None and not np.all(tp(xm)):
        raise ValueError(f"base mismatch: {xm[np.argmin(tp(xm))].tolist()} is not in the plus base")
    X = np.vstack([xp, xm])
    z = np.zeros(len(X))
    dev = max(float(np.max(np.abs(fp(X, z) - X))), float(np.max(np.abs(fm(X, z) - X))))
    if dev > 1e-10:
        raise ValueError(f"base mismatch: forward(x, 0) deviates from x by {dev:.3e}")

    def fwd(x, t):
        out = np.empty_like(x, dtype=float)
        pos = t >= 0
        if pos.any():
            out[pos] = fp(x[pos], t[pos])
        if (~pos).any():
            out[~pos] = fm(x[~pos], -t[~pos])
        return out

    inv = None
    if hasattr(c_plus, "inverse") and hasattr(c_minus, "inverse"):
        def inv(p):
            b, t = c_plus.inverse(p)
            miss = ~(np.all(np.isfinite(b), axis=1) & np.isfinite(t))
            if miss.any():
                b2, t2 = c_minus.inverse(p[miss])
                b[miss], t[miss] = b2, -t2
            return b, t

    return Bicollar(fwd, sp, side, curve=curve, arc=_arc_of(c_plus, curve), in_base=tp, inverse=inv,
                    label=label, kind="glued", dim=curve.dim, metric=metric, parts=(c_plus, c_minus))


# pair sets ------------------------------------------------------------------------


def cross_pairs(bic, n, seed=0, decades=DECADES, perturb_scales=(1e-2, 1e-4)):
    """Pairs (x, s), (y, t) with s < 0 < t, stratified by |s| + |t| over decades of the height.

    Half the pairs take y independent of x, half take y near x.
    """
    rng = np.random.default_rng(seed)
    dom = bic.domain(0.0, bic.height)
    u = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
    lo, hi = bic.arc
    x = bic.curve.point_at(lo + u[:, 0] * (hi - lo))
    n_far = n - n // 2
    y_far = x[rng.permutation(n)][:n_far]
    near = [dom.perturb(np.column_stack([x[n_far:], np.zeros(n - n_far)]), sc, rng)[:, :-1]
            for sc in perturb_scales]
    pick = rng.integers(0, len(perturb_scales), n - n_far)
    y_near = np.stack(near, axis=0)[pick, np.arange(n - n_far)] if n - n_far else np.empty((0, x.shape[1]))
    y = np.vstack([y_far, y_near])
    total = bic.height * 10.0 ** (decades[0] + u[:, 1] * (decades[1] - decades[0]))
    frac = rng.uniform(0.02, 0.98, n)
    s = -np.minimum(total * frac, bic.height)
    t = np.minimum(total * (1 - frac), bic.height)
    return np.column_stack([x, s]), np.column_stack([y, t])


def _split_pairs(P, Q):
    """Same-side pairs per side and pivot pairs through the base for cross pairs.

    Rows with t >= 0 belong to the plus side. Returns plus and minus pair
    lists in view coordinates (minus heights negated) and the cross mask.
    """
    sp, sq = P[:, -1] >= 0, Q[:, -1] >= 0
    cross = sp != sq
    m = P[:, -1] < 0
    A = np.where(m[:, None], P, Q)[cross]
    Bp = np.where(m[:, None], Q, P)[cross]
    pivot = np.column_stack([Bp[:, :-1], np.zeros(len(Bp))])
    neg = np.array([1.0] * (P.shape[1] - 1) + [-1.0])
    plus = (np.vstack([P[sp & sq], pivot]), np.vstack([Q[sp & sq], Bp]))
    minus = (np.vstack([P[~sp & ~sq] * neg, A * neg]), np.vstack([Q[~sp & ~sq] * neg, pivot]))
    return plus, minus, cross


def _pair_estimate(fmap, dom, P, Q, metric, inverse=False):
    din = dom.dist(P, Q)
    keep = din >= DEGENERATE
    P, Q, din = P[keep], Q[keep], din[keep]
    if len(P) == 0:
        return 0.0 if not inverse else 1.0, None
    q = quotients(apply_map(fmap, P), apply_map(fmap, Q), din, metric, inverse)
    k = _lex_argmax(q, P, Q)
    return float(q[k]), (P[k].copy(), Q[k].copy())


def pasting_check(bic, n_pairs=10_000, n_cross=1_000, seed=0, perturb_scales=(1e-2, 1e-4)):
    """Compare the glued forward quotient with the one-sided ones.

    The glued pair set is ``n_pairs - n_cross`` ordinary pairs over the full
    height range plus ``n_cross`` stratified cross-side pairs. Each cross pair
    (x, s), (y, t) contributes the pivots ((x, |s|), (y, 0)) to the minus view
    and ((y, 0), (y, t)) to the plus view, so the sampled inequality follows
    from the triangle inequality through y.
    """
    dom = bic.domain()
    P0, Q0 = sample_pairs(dom, n_pairs - n_cross, perturb_scales, seed)
    Pc, Qc = cross_pairs(bic, n_cross, seed + 7, perturb_scales=perturb_scales)
    P, Q = np.vstack([P0, Pc]), np.vstack([Q0, Qc])
    plus, minus, cross = _split_pairs(P, Q)
    one = bic.domain(0.0, bic.height)
    L_glued, w = _pair_estimate(bic.map, dom, P, Q, bic.metric)
    L_plus, wp = _pair_estimate(_view_map(bic, 1.0), one, *plus, bic.metric)
    L_minus, wm = _pair_estimate(_view_map(bic, -1.0), one, *minus, bic.metric)
    bound = max(L_plus, L_minus)
    return {"L_glued": L_glued, "L_plus": L_plus, "L_minus": L_minus, "bound": bound,
            "pass": bool(L_glued <= bound + SLACK), "n_pairs": int(len(P)), "n_cross": int(cross.sum()),
            "witness": _wjson(w), "witness_plus": _wjson(wp), "witness_minus": _wjson(wm)}


def _view_map(bic, sign):
    return lambda X: bic._forward(X[:, :-1], sign * X[:, -1])


def _wjson(w):
    return None if w is None else [np.asarray(w[0]).tolist(), np.asarray(w[1]).tolist()]


# epsilon restriction --------------------------------------------------------------


def bicollar_epsilon(L_c, iL_alpha_max, delta):
    """Largest eps in (0, 1] with L_c iL eps <= delta and 4 L_c eps <= delta.

    The result is nudged down by ulps if rounding would break either
    inequality in floating point.
    """
    for name, v in (("L_c", L_c), ("iL_alpha_max", iL_alpha_max), ("delta", delta)):
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be positive and finite")
    L_c, iL, delta = float(L_c), float(iL_alpha_max), float(delta)
    eps = min(1.0, delta / (L_c * iL), delta / (4 * L_c))
    while L_c * iL * eps > delta or 4 * L_c * eps > delta:
        eps = np.nextafter(eps, 0.0)
    return float(eps)


def epsilon_binding(L_c, iL_alpha_max, delta):
    """The epsilon together with which constraint decides it."""
    eps = bicollar_epsilon(L_c, iL_alpha_max, delta)
    cands = {"cap": 1.0, "cover": delta / (L_c * iL_alpha_max), "separation": delta / (4 * L_c)}
    low = min(cands.values())
    binding = sorted(k for k, v in cands.items() if v == low)
    return {"epsilon": eps, "binding": binding, "candidates": cands,
            "cover_lhs": L_c * iL_alpha_max * eps, "separation_lhs": 4 * L_c * eps, "delta": float(delta)}


def restriction_bounds(eps, delta, iL_plus, iL_minus, bL_alpha):
    """Inverse bound on [-eps, eps]: the formula as stated, and with max bL in place of max 1/bL."""
    bL = np.atleast_1d(np.asarray(bL_alpha, dtype=float))
    base = 2 * (1 + 2 * eps / delta) * max(iL_plus, iL_minus)
    return {"verbatim": float(base * np.max(1.0 / bL)), "with_max_bL": float(base * np.max(bL))}


def restrict_bicollar(c, eps, delta, constants):
    """Restrict a bicollar to heights [-eps, eps].

    ``constants`` holds L_c, iL_alpha (max or list), bL_alpha (list),
    iL_plus and iL_minus. eps above ``bicollar_epsilon`` is an error. The
    result carries ``restriction`` with both inverse bounds and the binding
    constraint.
    """
    iL_alpha = float(np.max(np.atleast_1d(constants["iL_alpha"])))
    eps_max = bicollar_epsilon(constants["L_c"], iL_alpha, delta)
    if not 0 < eps <= eps_max:
        raise ValueError(f"epsilon {eps!r} exceeds the admissible maximum {eps_max!r}")
    out = c.with_height(eps)
    info = epsilon_binding(constants["L_c"], iL_alpha, delta)
    info.update(epsilon=float(eps), epsilon_max=eps_max,
                cover_lhs=constants["L_c"] * iL_alpha * eps, separation_lhs=4 * constants["L_c"] * eps)
    info["conditions_hold"] = bool(info["cover_lhs"] <= delta and info["separation_lhs"] <= delta)
    info["bounds"] = restriction_bounds(eps, delta, constants["iL_plus"], constants["iL_minus"],
                                        constants["bL_alpha"])
    out.restriction = info
    return out


def measure_bicollar_constants(bic, local, n_pairs=10_000, seed=0, perturb_scales=(1e-2, 1e-4)):
    """Sampled L_c, iL_plus, iL_minus of a bicollar and iL, bL of its local bicollars."""
    dom = bic.domain()
    P, Q = sample_pairs(dom, n_pairs, perturb_scales, seed)
    L_c, _ = _pair_estimate(bic.map, dom, P, Q, bic.metric)
    one = bic.domain(0.0, bic.height)
    P1, Q1 = sample_pairs(one, n_pairs, perturb_scales, seed + 1)
    iL_plus, _ = _pair_estimate(_view_map(bic, 1.0), one, P1, Q1, bic.metric, inverse=True)
    iL_minus, _ = _pair_estimate(_view_map(bic, -1.0), one, P1, Q1, bic.metric, inverse=True)
    iL_a, bL_a = [], []
    for k, c in enumerate(local):
        d = c.domain()
        Pa, Qa = sample_pairs(d, n_pairs, perturb_scales, seed + 10 + k)
        La, _ = _pair_estimate(c.map, d, Pa, Qa, c.metric)
        ia, _ = _pair_estimate(c.map, d, Pa, Qa, c.metric, inverse=True)
        iL_a.append(ia)
        bL_a.append(La * ia)
    return {"L_c": L_c, "iL_plus": iL_plus, "iL_minus": iL_minus, "iL_alpha": iL_a, "bL_alpha": bL_a}


def restricted_inverse_check(bic, n_pairs=10_000, n_cross=1_000, seed=0, perturb_scales=(1e-2, 1e-4)):
    """Sampled inverse constant over [-h, h] including stratified cross-side pairs."""
    dom = bic.domain()
    P0, Q0 = sample_pairs(dom, n_pairs - n_cross, perturb_scales, seed)
    Pc, Qc = cross_pairs(bic, n_cross, seed + 7, perturb_scales=perturb_scales)
    P, Q = np.vstack([P0, Pc]), np.vstack([Q0, Qc])
    iL, w = _pair_estimate(bic.map, dom, P, Q, bic.metric, inverse=True)
    return {"iL": iL, "witness": _wjson(w), "n_pairs": int(len(P))}


# midpoint criterion ---------------------------------------------------------------


def midpoint_alpha(dom, c, samples=2048, seed=0, n_pairs=1000, pairs=None, n_between=33):
    """Smallest sampled alpha with d(p, z) + d(z, q) <= alpha d(p, q) for some pooled z in B.

    p = c(x, s), q = c(y, t) range over cross-side pairs (s < 0 < t). The
    witness pool is ``samples`` base points, both base points of every pair
    and ``n_between`` points on the base arc joining them. Coincident images are skipped with a warning. Returns a dict with
    alpha, the worst pair, its best z, and the per-pair data.
    """
    metric = dom.metric if dom is not None else c.metric
    P, Q = cross_pairs(c, n_pairs, seed) if pairs is None else pairs
    FP, FQ = c.map(P), c.map(Q)
    dpq = metric_distance(FP, FQ, metric)
    ok = dpq > DEGENERATE
    if not ok.all():
        warnings.warn(f"midpoint_alpha: skipped {int((~ok).sum())} pairs with coincident images", stacklevel=2)
    P, Q, FP, FQ, dpq = P[ok], Q[ok], FP[ok], FQ[ok], dpq[ok]
    if len(P) == 0:
        return {"alpha": 1.0, "pairs": (P, Q), "z": np.empty((0, c.dim)), "alpha_pair": np.empty(0),
                "n_skipped": int((~ok).sum()), "witness": None}
    pool = np.vstack([c.sample_base(samples, seed + 3), P[:, :-1], Q[:, :-1]])
    alpha = np.empty(len(P))
    Z = np.empty((len(P), c.dim))
    for i in range(0, len(P), 256):
        sl = slice(i, i + 256)
        D = (metric_distance(FP[sl, None, :], pool[None], metric)
             + metric_distance(pool[None], FQ[sl, None, :], metric))
        j = np.argmin(D, axis=1)
        Z[sl] = pool[j]
        alpha[sl] = D[np.arange(len(j)), j] / dpq[sl]
    local = _between(c, P[:, :-1], Q[:, :-1], n_between)
    if local is not None:
        D = metric_distance(FP[:, None, :], local, metric) + metric_distance(local, FQ[:, None, :], metric)
        j = np.argmin(D, axis=1)
        a = D[np.arange(len(j)), j] / dpq
        better = a < alpha
        alpha[better] = a[better]
        Z[better] = local[better, j[better]]
    alpha = np.maximum(alpha, 1.0)
    k = _lex_argmax(alpha, P, Q)
    return {"alpha": float(alpha[k]), "pairs": (P, Q), "z": Z, "alpha_pair": alpha,
            "n_skipped": int((~ok).sum()), "witness": [P[k].tolist(), Q[k].tolist(), Z[k].tolist()]}


def _between(c, X, Y, k):
    """k base points along the shorter arc from each x to its y, shape (n, k, d); None without a curve."""
    if k <= 0 or c.curve is None or len(X) == 0:
        return None
    curve = c.curve
    sx, sy = curve.param_of(X), curve.param_of(Y)
    ds = sy - sx
    if curve.closed:
        L = curve.length
        ds = (ds + L / 2) % L - L / 2
    u = np.linspace(0.0, 1.0, k)
    S = sx[:, None] + ds[:, None] * u[None]
    return curve.point_at(S.ravel()).reshape(len(X), k, -1)


def midpoint_check(dom, c, samples=2048, seed=0, n_pairs=1000, n_same=4000, perturb_scales=(1e-2, 1e-4)):
    """Check sampled iL(c) <= alpha max(iL-, iL+) on a shared pair pool.

    The one-sided sets contain every same-side pair and, for each cross pair,
    the pivots ((x, |s|), (z, 0)) and ((z, 0), (y, t)) through its midpoint
    witness z.
    """
    res = midpoint_alpha(dom, c, samples, seed, n_pairs)
    Pc, Qc = res["pairs"]
    Z = np.column_stack([res["z"], np.zeros(len(Pc))])
    full = c.domain()
    P0, Q0 = sample_pairs(full, n_same, perturb_scales, seed + 11)
    same = (P0[:, -1] >= 0) == (Q0[:, -1] >= 0)
    P0, Q0 = P0[same], Q0[same]
    P, Q = np.vstack([P0, Pc]), np.vstack([Q0, Qc])
    iL, w = _pair_estimate(c.map, full, P, Q, c.metric, inverse=True)
    neg = np.array([1.0] * c.dim + [-1.0])
    pos = P0[:, -1] >= 0
    plus = (np.vstack([P0[pos], Z]), np.vstack([Q0[pos], Qc]))
    minus = (np.vstack([P0[~pos] * neg, Pc * neg]), np.vstack([Q0[~pos] * neg, Z]))
    one = c.domain(0.0, c.height)
    iL_plus, _ = _pair_estimate(_view_map(c, 1.0), one, *plus, c.metric, inverse=True)
    iL_minus, _ = _pair_estimate(_view_map(c, -1.0), one, *minus, c.metric, inverse=True)
    bound = res["alpha"] * max(iL_plus, iL_minus)
    return {"alpha": res["alpha"], "iL": iL, "iL_plus": iL_plus, "iL_minus": iL_minus, "bound": bound,
            "pass": bool(iL <= bound + 1e-6), "witness": _wjson(w), "alpha_witness": res["witness"],
            "n_skipped": res["n_skipped"]}


def bicollar_report(bic, local, delta, eps=None, n_pairs=10_000, n_cross=1_000, seed=0):
    """Pasting check, constants, epsilon restriction and its inverse check, as JSON-ready data."""
    paste = pasting_check(bic, n_pairs, n_cross, seed)
    consts = measure_bicollar_constants(bic, local, n_pairs, seed + 100)
    eps_max = bicollar_epsilon(consts["L_c"], max(consts["iL_alpha"]), delta)
    eps = eps_max if eps is None else float(eps)
    r = restrict_bicollar(bic, eps, delta, consts)
    inv = restricted_inverse_check(r, n_pairs, n_cross, seed + 200)
    b = r.restriction["bounds"]
    verdicts = {
        "pasting": {"estimate": _num(paste["L_glued"]), "bound": _num(paste["bound"]), "pass": paste["pass"]},
        "restricted_iL_finite": {"estimate": _num(inv["iL"]), "pass": bool(np.isfinite(inv["iL"]))},
        "epsilon_conditions": {"pass": r.restriction["conditions_hold"]},
    }
    formula_checks = {
        "restricted_iL_verbatim": {"estimate": _num(inv["iL"]), "bound": _num(b["verbatim"]),
                                   "holds": bool(inv["iL"] <= b["verbatim"] + SLACK)},
        "restricted_iL_with_max_bL": {"estimate": _num(inv["iL"]), "bound": _num(b["with_max_bL"]),
                                      "holds": bool(inv["iL"] <= b["with_max_bL"] + SLACK)},
    }
    notes = ["the stated inverse bound uses max(1/bL) over the local bicollars; the variant with max(bL) "
             "is reported alongside; both are listed under formula_checks and do not enter the verdicts"]
    restr = {k: (_num(v) if isinstance(v, float) else v) for k, v in r.restriction.items() if k != "bounds"}
    restr["candidates"] = {k: _num(v) for k, v in r.restriction["candidates"].items()}
    restr["bounds"] = {k: _num(v) for k, v in b.items()}
    return {"pasting": paste, "constants": {k: ([_num(x) for x in v] if isinstance(v, list) else _num(v))
                                            for k, v in consts.items()},
            "restriction": restr, "restricted_iL": inv, "verdicts": verdicts, "formula_checks": formula_checks, "notes": notes}
