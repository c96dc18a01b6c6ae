"""Sampled Lipschitz constants, interior margins, overlap counts and certified bounds.

Every estimate is a maximum of difference quotients over a finite pair set, so
it is a lower bound of the true constant. Comparing it against a closed-form
upper bound is therefore a sound (one-sided) check.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .metric import metric_distance

DEGENERATE = 1e-12
SLACK = 1e-9


def n_threads():
    """Sweep parallelism from COLLAR_FORGE_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("COLLAR_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def apply_map(fmap, X, chunk=4096):
    """Evaluate fmap on rows of X, in parallel chunks when threads are enabled."""
    k = n_threads()
    if k == 1 or len(X) <= chunk:
        return np.asarray(fmap(X), dtype=float)
    parts = [X[i:i + chunk] for i in range(0, len(X), chunk)]
    with ThreadPoolExecutor(max_workers=k) as ex:
        out = list(ex.map(lambda P: np.asarray(fmap(P), dtype=float), parts))
    return np.concatenate(out, axis=0)


# pair domains ---------------------------------------------------------------------


class BoxDomain:
    """Axis-aligned box of R^d."""

    def __init__(self, lo, hi, metric="euclidean"):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self.metric = metric

    def sample(self, n, seed):
        return self.lo + qmc.Halton(d=len(self.lo), scramble=True, seed=seed).random(n) * (self.hi - self.lo)

    def perturb(self, X, scale, rng):
        U = rng.uniform(-1, 1, X.shape)
        return np.clip(X + scale * U, self.lo, self.hi)

    def dist(self, P, Q):
        return metric_distance(P, Q, self.metric)


class ArcDomain:
    """Points of the closed arc [lo, hi] of a curve."""

    def __init__(self, curve, lo=None, hi=None, metric="euclidean"):
        self.curve = curve
        self.lo = 0.0 if lo is None else float(lo)
        self.hi = curve.length if hi is None else float(hi)
        self.metric = metric
        self.whole = curve.closed and self.hi - self.lo >= curve.length

    def _params(self, n, seed):
        u = qmc.Halton(d=1, scramble=True, seed=seed).random(n)[:, 0]
        return self.lo + u * (self.hi - self.lo)

    def _shift(self, s, ds):
        s2 = s + ds
        return s2 if self.whole else np.clip(s2, self.lo, self.hi)

    def sample(self, n, seed):
        return self.curve.point_at(self._params(n, seed))

    def perturb(self, X, scale, rng):
        s = self._unwrap(self.curve.param_of(X))
        return self.curve.point_at(self._shift(s, scale * rng.uniform(-1, 1, len(s))))

    def _unwrap(self, s):
        if self.curve.closed and not self.whole:
            return self.lo + np.mod(s - self.lo, self.curve.length)
        return s

    def dist(self, P, Q):
        return metric_distance(P, Q, self.metric)


class CollarDomain(ArcDomain):
    """Rows [coords..., t] of (arc) x [t_lo, t_hi] under the product metric."""

    def __init__(self, curve, lo=None, hi=None, metric="euclidean", t_lo=0.0, t_hi=1.0):
        super().__init__(curve, lo, hi, metric)
        self.t_lo, self.t_hi = float(t_lo), float(t_hi)

    def sample(self, n, seed):
        u = qmc.Halton(d=2, scramble=True, seed=seed).random(n)
        x = self.curve.point_at(self.lo + u[:, 0] * (self.hi - self.lo))
        return np.column_stack([x, self.t_lo + u[:, 1] * (self.t_hi - self.t_lo)])

    def perturb(self, X, scale, rng):
        s = self._unwrap(self.curve.param_of(X[:, :-1]))
        x = self.curve.point_at(self._shift(s, scale * rng.uniform(-1, 1, len(s))))
        t = np.clip(X[:, -1] + scale * rng.uniform(-1, 1, len(s)), self.t_lo, self.t_hi)
        return np.column_stack([x, t])

    def dist(self, P, Q):
        return metric_distance(P[:, :-1], Q[:, :-1], self.metric) + np.abs(P[:, -1] - Q[:, -1])


def sample_pairs(domain, n_pairs, perturb_scales=(1e-2, 1e-4), seed=0):
    """Half global pairs, half local perturbation pairs split across the scales."""
    rng = np.random.default_rng(seed)
    n_local = n_pairs // 2 if perturb_scales else 0
    n_global = n_pairs - n_local
    X = domain.sample(n_global, seed)
    P, Q = [X], [X[rng.permutation(n_global)]]
    if n_local:
        counts = np.full(len(perturb_scales), n_local // len(perturb_scales))
        counts[: n_local % len(perturb_scales)] += 1
        for k, (scale, cnt) in enumerate(zip(perturb_scales, counts)):
            Y = domain.sample(int(cnt), seed + 1 + k)
            P.append(Y)
            Q.append(domain.perturb(Y, scale, rng))
    return np.vstack(P), np.vstack(Q)


# quotient estimation --------------------------------------------------------------


@dataclass
class QuotientEstimate:
    value: float
    witness: tuple
    n_pairs: int
    quotients: np.ndarray = field(default=None, repr=False)
    pairs: tuple = field(default=None, repr=False)

    def to_json(self):
        p, q = self.witness
        return {"value": _num(self.value), "witness": [np.asarray(p).tolist(), np.asarray(q).tolist()],
                "n_pairs": int(self.n_pairs)}


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else str(v)


def _lex_argmax(q, P, Q):
    best = np.max(q)
    idx = np.nonzero(q == best)[0]
    if len(idx) == 1:
        return int(idx[0])
    keys = np.hstack([P[idx], Q[idx]])
    order = np.lexsort(keys.T[::-1])
    return int(idx[order[0]])


def quotients(FP, FQ, din, out_metric="euclidean", inverse=False):
    """Difference quotients of outputs over inputs (or the reverse when ``inverse``)."""
    FP = np.asarray(FP, dtype=float)
    FQ = np.asarray(FQ, dtype=float)
    if FP.ndim == 1:
        dout = np.abs(FP - FQ)
    else:
        dout = metric_distance(FP, FQ, out_metric)
    with np.errstate(divide="ignore", invalid="ignore"):
        if inverse:
            return np.where(dout > 0, din / np.where(dout > 0, dout, 1.0), np.inf)
        return dout / din


def estimate_lipschitz(fmap, domain, n_pairs=10_000, perturb_scales=(1e-2, 1e-4), seed=0,
                       out_metric="euclidean", inverse=False, pairs=None, keep=False, mask=None):
    """max dist(f(x), f(y)) / dist(x, y) over sampled pairs, with a witness pair.

    Pairs closer than 1e-12 are skipped. ``mask(P, Q)`` may drop further pairs.
    With ``inverse=True`` the reciprocal quotient is maximized instead.
    """
    P, Q = sample_pairs(domain, n_pairs, perturb_scales, seed) if pairs is None else pairs
    din = domain.dist(P, Q)
    keep_rows = din >= DEGENERATE
    if mask is not None:
        keep_rows &= np.asarray(mask(P, Q), dtype=bool)
    P, Q, din = P[keep_rows], Q[keep_rows], din[keep_rows]
    if len(P) == 0:
        raise ValueError("all sampled pairs are degenerate")
    FP = apply_map(fmap, P)
    FQ = apply_map(fmap, Q)
    q = quotients(FP, FQ, din, out_metric, inverse)
    k = _lex_argmax(q, P, Q)
    return QuotientEstimate(float(q[k]), (P[k].copy(), Q[k].copy()), len(P),
                            q if keep else None, (P, Q) if keep else None)


def estimate_inverse_lipschitz(fmap, domain, **kw):
    return estimate_lipschitz(fmap, domain, inverse=True, **kw)


def pair_quotient(fmap, p, q, domain, out_metric="euclidean", inverse=False):
    """Re-evaluate the quotient of a single pair."""
    P, Q = np.atleast_2d(p), np.atleast_2d(q)
    return float(quotients(fmap(P), fmap(Q), domain.dist(P, Q), out_metric, inverse)[0])


# margins and overlaps -------------------------------------------------------------


def _directions(n_dir, metric, dim=2):
    ang = 2 * np.pi * np.arange(n_dir) / n_dir
    U = np.column_stack([np.cos(ang), np.sin(ang)])
    return U / metric_distance(U, np.zeros_like(U), metric)[:, None]


def estimate_zeta(collars, lambdas, dom, n_base=96, n_heights=7, n_dir=16, zeta_max=1.0,
                  floor=2.0 ** -30, seed=0):
    """Largest zeta = zeta_max * 2**-k whose sampled balls around c_i(supp lambda_i x [0, 3/4]) stay in W_i.

    Balls are taken inside X (``dom.contains``) and probed on rings of radius
    zeta * {1/4, 1/2, 3/4, 1} in ``n_dir`` directions of unit metric length.
    """
    U = _directions(n_dir, dom.metric)
    fracs = np.array([0.25, 0.5, 0.75, 1.0])
    heights = np.linspace(0.0, 0.75, n_heights)
    centers = []
    for i, (c, lam) in enumerate(zip(collars, lambdas)):
        x = c.sample_base(4 * n_base, seed + i)
        if hasattr(c, "arc"):
            # margins are smallest at the arc ends, which random samples never hit
            x = np.vstack([c.curve.point_at(np.asarray(c.arc, dtype=float)), x])
        x = x[lam(x) > 0][:n_base]
        if len(x) == 0:
            centers.append(None)
            continue
        X = np.repeat(x, len(heights), axis=0)
        T = np.tile(heights, len(x))
        Z = c.forward(X, T)
        inside = c.in_image(Z)
        if not inside.all():
            raise ValueError(f"collar {i + 1}: sampled point {Z[~inside][0].tolist()} lies outside its image")
        centers.append(Z)
    k = 0
    while True:
        zeta = zeta_max * 2.0 ** -k
        if zeta < floor:
            raise ValueError("interior margin below the resolution floor")
        ok = True
        for c, Z in zip(collars, centers):
            if Z is None:
                continue
            off = (zeta * fracs[:, None, None] * U[None]).reshape(-1, U.shape[1])
            R = (Z[:, None, :] + off[None]).reshape(-1, Z.shape[1])
            R = R[dom.contains(R)]
            if len(R) and not c.in_image(R).all():
                ok = False
                break
        if ok:
            return float(zeta)
        k += 1


def zeta_for(gc, dom, **kw):
    lambdas = [gc._lam_fn(k) for k in range(1, gc.n_collars_ + 1)]
    return estimate_zeta(gc.collars_, lambdas, dom, **kw)


def _image_samples(c, n_base, n_height):
    if hasattr(c, "arc"):
        lo, hi = c.arc
        x = c.curve.point_at(np.linspace(lo, hi, n_base))
    else:
        x = c.sample_base(n_base, 0)
    t = np.linspace(0.0, 1.0, n_height)
    return c.forward(np.repeat(x, n_height, axis=0), np.tile(t, len(x)))


def overlap_chain_count(collars, n_base=257, n_height=33):
    """max_i #{j <= i : W_i meets W_j}, tested with exact image predicates on image samples."""
    imgs = [_image_samples(c, n_base, n_height) for c in collars]
    best = 1
    for i in range(len(collars)):
        count = 1
        for j in range(i):
            if collars[j].in_image(imgs[i]).any() or collars[i].in_image(imgs[j]).any():
                count += 1
        best = max(best, count)
    return best


# bounds ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantBundle:
    """Constants entering the global collar bounds.

    L: max Lipschitz constant of lambda_i on U_i; L_sigma: of the partial sums;
    C: max forward constant of the local collars; C_b: max bi-Lipschitz product;
    zeta: interior margin; N: image overlap chain count.
    """

    L: float
    L_sigma: float
    C: float
    C_b: float
    zeta: float
    N: int

    def __post_init__(self):
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        if self.N < 0:
            raise ValueError("N must be nonnegative")

    def to_json(self):
        return {k: _num(v) for k, v in asdict(self).items()}


def collar_bound_L(b):
    """C (1 + L_S/2)(1 + 2 L_S) max(1 + 2L, 1 + 1/zeta)^N C_b^N."""
    return (b.C * (1 + b.L_sigma / 2) * (1 + 2 * b.L_sigma)
            * max(1 + 2 * b.L, 1 + 1 / b.zeta) ** b.N * b.C_b ** b.N)


def collar_bound_iL(b):
    """C (1 + L_S/2) C_b^(2N) (1 + C/zeta + L/2)^N (3 + 1/zeta + 3L)^N.

    Each bracketed factor is a maximum over a single term, so it is
    evaluated as that term.
    """
    return (b.C * (1 + b.L_sigma / 2) * b.C_b ** (2 * b.N)
            * (1 + b.C / b.zeta + b.L / 2) ** b.N * (3 + 1 / b.zeta + 3 * b.L) ** b.N)


# verification ---------------------------------------------------------------------


@dataclass
class VerifyConfig:
    n_pairs: int = 10_000
    perturb_scales: tuple = (1e-2, 1e-4)
    seed: int = 0
    zeta_max: float = 1.0
    keep_quotients: bool = False


@dataclass
class LipschitzReport:
    constants: dict
    bounds: dict
    estimates: dict
    verdicts: dict
    witnesses: dict
    notes: list
    quotients: dict = field(default=None, repr=False)

    @property
    def passed(self):
        return all(v["pass"] for v in self.verdicts.values())

    def to_json(self):
        return {"constants": self.constants, "bounds": self.bounds, "estimates": self.estimates,
                "verdicts": self.verdicts, "witnesses": self.witnesses, "notes": self.notes}


BUNDLE_KEYS = ("L", "L_sigma", "C", "C_b", "zeta", "N")


def measure_bundle(gc, dom, config=None):
    """Measure every bundle constant of a fitted GlobalCollar on samples."""
    cfg = config or VerifyConfig()
    curve, metric = gc.curve_, gc.metric_
    cover = gc.pou.cover
    per = {}
    L = 0.0
    wit = {}
    for k, col in enumerate(gc.order_, start=1):
        member = cover.members[col]
        lo, hi = member.closure(curve)
        dom_k = ArcDomain(curve, lo, hi, metric)
        lam = gc._lam_fn(k)

        def in_member(P, Q, member=member):
            return (member.contains_param(curve, curve.param_of(P))
                    & member.contains_param(curve, curve.param_of(Q)))

        est = estimate_lipschitz(lam, dom_k, cfg.n_pairs, cfg.perturb_scales, cfg.seed + k, mask=in_member)
        per[f"lambda_{k}"] = est.value
        if est.value >= L:
            L, wit["L"] = est.value, est
    whole = ArcDomain(curve, None, None, metric)
    P, Q = sample_pairs(whole, cfg.n_pairs, cfg.perturb_scales, cfg.seed + 101)
    din = whole.dist(P, Q)
    keep = din >= DEGENERATE
    P, Q, din = P[keep], Q[keep], din[keep]
    SP, SQ = gc.lambda_sums(P)[:, 1:], gc.lambda_sums(Q)[:, 1:]
    L_sigma = 0.0
    for i in range(SP.shape[1]):
        q = np.abs(SP[:, i] - SQ[:, i]) / din
        j = _lex_argmax(q, P, Q)
        per[f"lambda_sum_{i + 1}"] = float(q[j])
        if q[j] >= L_sigma:
            L_sigma = float(q[j])
            wit["L_sigma"] = QuotientEstimate(float(q[j]), (P[j], Q[j]), len(P))
    C, C_b = 0.0, 0.0
    for k, c in enumerate(gc.collars_, start=1):
        lo, hi = c.arc
        cd = CollarDomain(curve, lo, hi, metric)
        fmap = _collar_map(c)
        fwd = estimate_lipschitz(fmap, cd, cfg.n_pairs, cfg.perturb_scales, cfg.seed + 200 + k, out_metric=metric)
        inv = estimate_lipschitz(fmap, cd, cfg.n_pairs, cfg.perturb_scales, cfg.seed + 200 + k, out_metric=metric,
                                 inverse=True)
        per[f"L_c{k}"], per[f"iL_c{k}"] = fwd.value, inv.value
        if fwd.value >= C:
            C, wit["C"] = fwd.value, fwd
        if fwd.value * inv.value >= C_b:
            C_b = fwd.value * inv.value
            wit["C_b"] = inv
    zeta = zeta_for(gc, dom, zeta_max=cfg.zeta_max, seed=cfg.seed)
    N = overlap_chain_count(gc.collars_)
    return ConstantBundle(L, L_sigma, C, C_b, zeta, N), per, wit


def _collar_map(c):
    return lambda X: c.forward(X[:, :-1], X[:, -1])


def _declared_measure(key, per, bundle):
    """Measured counterpart of a declared constant name, or None."""
    if key in BUNDLE_KEYS:
        return getattr(bundle, key)
    if key in per:
        return per[key]
    if key == "iL_c":
        return max(v for k, v in per.items() if k.startswith("iL_c"))
    if key == "L_c":
        return max(v for k, v in per.items() if k.startswith("L_c"))
    return None


def verify(gc, dom, config=None, declared=None, zeta_floor=None):
    """Measure the bundle, evaluate both bounds, estimate L(h) and iL(h), and judge.

    Declared constants replace their measured counterparts in the bundle and
    are themselves checked against measurement (declared >= sampled).
    """
    cfg = config or VerifyConfig()
    declared = dict(declared or {})
    measured, per, wit = measure_bundle(gc, dom, cfg)
    eff = {k: getattr(measured, k) for k in BUNDLE_KEYS}
    for k in BUNDLE_KEYS:
        if k in declared:
            eff[k] = float(declared[k]) if k != "N" else int(declared[k])
    bundle = ConstantBundle(**eff)
    bounds = {"L_h": collar_bound_L(bundle), "iL_h": collar_bound_iL(bundle),
              "L_h_measured_bundle": collar_bound_L(measured), "iL_h_measured_bundle": collar_bound_iL(measured)}
    curve, metric = gc.curve_, gc.metric_
    hd = CollarDomain(curve, None, None, metric)
    hmap = gc.transform
    P, Q = sample_pairs(hd, cfg.n_pairs, cfg.perturb_scales, cfg.seed + 500)
    est_L = estimate_lipschitz(hmap, hd, out_metric=metric, pairs=(P, Q), keep=cfg.keep_quotients)
    est_iL = estimate_lipschitz(hmap, hd, out_metric=metric, pairs=(P, Q), inverse=True, keep=cfg.keep_quotients)
    verdicts = {
        "L_h": {"estimate": _num(est_L.value), "bound": _num(bounds["L_h"]),
                "pass": bool(est_L.value <= bounds["L_h"] + SLACK)},
        "iL_h": {"estimate": _num(est_iL.value), "bound": _num(bounds["iL_h"]),
                 "pass": bool(est_iL.value <= bounds["iL_h"] + SLACK)},
    }
    witnesses = {"L_h": est_L.to_json(), "iL_h": est_iL.to_json()}
    for key, val in sorted(declared.items()):
        m = _declared_measure(key, per, measured)
        if m is None:
            continue
        verdicts[f"declared:{key}"] = {"estimate": _num(m), "bound": _num(val), "pass": bool(m <= float(val) + SLACK)}
    if zeta_floor is not None:
        verdicts["zeta_floor"] = {"estimate": _num(measured.zeta), "bound": _num(zeta_floor),
                                  "pass": bool(measured.zeta >= zeta_floor - SLACK)}
    for name, est in wit.items():
        witnesses[f"bundle:{name}"] = est.to_json()
    notes = [
        "inverse bound: the factors (1 + C/zeta + L/2) and (3 + 1/zeta + 3L) are maxima over a single "
        "term and are evaluated as that term",
        "N is the global image-overlap chain count, which dominates any local neighbourhood count",
        "all estimates are maxima over sampled quotients and therefore lower bounds",
    ]
    if not all(c.exact_inverse for c in gc.collars_):
        notes.append("some collars use the numeric inverse fallback: image predicates unverified")
    constants = {"effective": bundle.to_json(), "measured": measured.to_json(),
                 "declared": {k: _num(v) for k, v in declared.items()},
                 "per_map": {k: _num(v) for k, v in per.items()}, "order": list(gc.order_)}
    estimates = {"L_h": _num(est_L.value), "iL_h": _num(est_iL.value), "n_pairs": int(est_L.n_pairs)}
    quot = None
    if cfg.keep_quotients:
        quot = {"L_h": (est_L.pairs, est_L.quotients), "iL_h": (est_iL.pairs, est_iL.quotients)}
    return LipschitzReport(constants, {k: _num(v) for k, v in bounds.items()}, estimates, verdicts,
                           witnesses, notes, quot)
