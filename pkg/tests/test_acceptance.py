"""The ten acceptance criteria, each timed and reported as one PASS/FAIL line."""
import time
from itertools import combinations

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from collar_forge.bicollar import bicollar_epsilon, bicollar_report, pasting_check
from collar_forge.covers import PartitionOfUnity, greedy_maximal_net, net_constants
from collar_forge.fixtures import load_fixture, make_circle_in_disk, make_square_boundary, make_strip_two_collar
from collar_forge.lipschitz import CollarDomain, VerifyConfig, estimate_lipschitz, pair_quotient, verify
from collar_forge.metric import metric_distance


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def report(n, name, ok, timer, limit, detail):
    in_time = timer.elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"[{status}] {n:>2}. {name}: {detail} ({timer.elapsed:.2f}s, limit {limit}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert in_time, line


def test_01_base_identity():
    with Timer() as tm:
        worst = {}
        for name, kw in [("circle", {}), ("strip", {}), ("square", {"n_collars": 4}),
                         ("square", {"n_collars": 8}), ("net", {})]:
            fx = load_fixture(name, **kw)
            gc = fx.global_collar(n_check=0)
            x = fx.curve.sample(1000, 0)
            worst[fx.name] = float(metric_distance(gc.evaluate(x, 0.0), x, fx.dom.metric).max())
    ok = max(worst.values()) <= 1e-10
    report(1, "base identity", ok, tm, 5, f"max dist(h(x,0), x) = {max(worst.values()):.1e} over {sorted(worst)}")


def test_02_single_collar_reduction():
    with Timer() as tm:
        fx = make_circle_in_disk(1.0)
        gc = fx.global_collar(n_check=0)
        X = CollarDomain(fx.curve).sample(1000, 0)
        x, t = X[:, :2], X[:, 2]
        dev = float(np.linalg.norm(gc.evaluate(x, t) - fx.collars[0].forward(x, t / 2), axis=1).max())
    report(2, "single-collar reduction", dev <= 1e-12, tm, 5, f"max dist(h(x,t), c1(x,t/2)) = {dev:.1e}")


def _strip_oracle(s, t, tilt=0.2):
    """h on the strip fixture, composed by hand from the chart formulas, one point at a time."""
    f1 = min(1.0, max(0.0, 1.75 - s))
    f2 = min(1.0, max(0.0, s - 1.25))
    lam1 = f1 / (f1 + f2)
    if t == 0.0:
        return s, 0.0
    if lam1 > 0 and t <= lam1 + 1e-12:
        return s, t / 2
    r = (t - lam1) / 2
    u, v = s + tilt * r, r
    # push by the first (vertical) collar: its image is [0, 2] x [0, 1]
    if 0.0 <= u <= 2.0 and 0.0 <= v <= 1.0:
        g1 = min(1.0, max(0.0, 1.75 - u))
        g2 = min(1.0, max(0.0, u - 1.25))
        lam_u = g1 / (g1 + g2)
        if v < 0.75:
            v = v + lam_u / 2 * (1 - v / 0.75)
    return u, v


def test_03_oracle_equivalence():
    with Timer() as tm:
        fx = make_strip_two_collar(0.2)
        gc = fx.global_collar(n_check=0)
        rng = np.random.default_rng(11)
        s = rng.uniform(0, 3, 1000)
        t = rng.uniform(0, 1, 1000)
        s[:100] = rng.uniform(1.2, 1.8, 100)
        got = gc.evaluate(np.column_stack([s, np.zeros_like(s)]), t)
        want = np.array([_strip_oracle(a, b) for a, b in zip(s, t)])
        dev = float(np.abs(got - want).max())
    report(3, "oracle equivalence (strip, tilt 0.2)", dev <= 1e-9, tm, 10, f"max deviation = {dev:.1e}")


def _pairwise_lip(values, D, mask=None):
    dv = np.abs(values[:, None] - values[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(D > 1e-12, dv / np.where(D > 1e-12, D, 1.0), 0.0)
    if mask is not None:
        q = np.where(mask, q, 0.0)
    return float(q.max())


def test_04_partition_of_unity():
    with Timer() as tm:
        details, ok = [], True
        for fx in (make_strip_two_collar(0.2), make_square_boundary(1.0, 4), make_square_boundary(1.0, 8)):
            pou = PartitionOfUnity(fx.cover, fx.delta, fx.delta0).fit()
            curve = fx.curve
            X = np.vstack([curve.sample(1000, 0), curve.point_at(fx.cover.critical_params())])
            lam = pou.transform(X)
            sum_dev = float(np.abs(lam.sum(axis=1) - 1).max())
            D = metric_distance(X[:, None], X[None], fx.cover.metric)
            memb = fx.cover.membership(X)
            N, d0 = pou.order_, pou.delta0_
            member = max(_pairwise_lip(lam[:, a], D, memb[:, a][:, None] & memb[:, a][None])
                         for a in range(lam.shape[1]))
            partial = 0.0
            for k in range(1, lam.shape[1] + 1):
                for J in combinations(range(lam.shape[1]), k):
                    partial = max(partial, _pairwise_lip(lam[:, list(J)].sum(axis=1), D))
            ok &= sum_dev <= 1e-12 and member <= (N - 1) / d0 + 1e-9 and partial <= N / d0 + 1e-9
            details.append(f"{fx.name}: |sum-1| {sum_dev:.0e}, member {member:.3g} <= {(N - 1) / d0:.3g}, "
                           f"partial {partial:.3g} <= {N / d0:.3g}")
    report(4, "partition of unity", ok, tm, 30, "; ".join(details))


def test_05_circle_remark():
    with Timer() as tm:
        ok, parts = True, []
        for r in (1.0, 0.1, 0.01):
            fx = make_circle_in_disk(r)
            c = fx.collars[0]
            fmap = lambda X, c=c: c.forward(X[:, :2], X[:, 2])
            dom = CollarDomain(fx.curve)
            x = fx.curve.point_at(np.array([0.0]))[0]
            wq = pair_quotient(fmap, [*x, 0.0], [*x, 1.0], dom, inverse=True)
            L = estimate_lipschitz(fmap, dom, n_pairs=10_000).value
            ok &= abs(wq - 2 / r) <= 1e-12 * (2 / r) and wq >= 1 / r and L <= 2
            parts.append(f"r={r:g}: iL witness {wq:.6g}, L {L:.4f}")
    report(5, "circle remark", ok, tm, 10, "; ".join(parts))


def test_06_bound_verification():
    with Timer() as tm:
        fx = make_square_boundary(1.0, 4)
        gc = fx.global_collar(n_check=1000)
        rep = verify(gc, fx.dom, VerifyConfig(n_pairs=10_000))
        e, b = rep.estimates, rep.bounds
        ok = e["L_h"] <= b["L_h_measured_bundle"] and e["iL_h"] <= b["iL_h_measured_bundle"]
    report(6, "bound verification (square, 4 collars)", ok, tm, 120,
           f"L {e['L_h']:.4g} <= {b['L_h_measured_bundle']:.4g}, iL {e['iL_h']:.4g} <= {b['iL_h_measured_bundle']:.4g}")


def test_07_bicollar_pasting(square_bicollar):
    with Timer() as tm:
        res = pasting_check(square_bicollar, n_pairs=10_000, n_cross=1_000)
        ok = res["pass"] and res["n_pairs"] >= 10_000 and res["n_cross"] >= 1_000
    report(7, "bicollar pasting (square)", ok, tm, 60,
           f"L glued {res['L_glued']:.6g} <= max(L+ {res['L_plus']:.6g}, L- {res['L_minus']:.6g}) + 1e-9, "
           f"{res['n_cross']} cross pairs")


def test_08_epsilon_restriction(square4, square_bicollar):
    with Timer() as tm:
        plug = [bicollar_epsilon(1, 1, 1), bicollar_epsilon(2, 10, 1), bicollar_epsilon(1, 1, 4)]
        exact = plug == [0.25, 0.05, 1.0]
        rep = bicollar_report(square_bicollar, square4.local_bicollars(), min(square4.delta, 1.0),
                              n_pairs=10_000, n_cross=1_000)
        r = rep["restriction"]
        finite = np.isfinite(rep["restricted_iL"]["iL"])
        ok = exact and finite and r["conditions_hold"]
    report(8, "epsilon restriction", ok, tm, 60,
           f"plug-ins {plug}; eps {r['epsilon']:.4g} ({', '.join(r['binding'])} binds), "
           f"restricted iL {rep['restricted_iL']['iL']:.4g}")


def test_09_net_chain():
    with Timer() as tm:
        fx = make_square_boundary(1.0, 4)
        net = greedy_maximal_net(fx.dom, 0.5, n_candidates=10_000)
        sep = net.min_separation()
        cov = net.covering_radius()
        nc = tuple(net_constants(2, 1))
        ok = sep >= 0.5 and cov <= 0.5 and len(net.candidates) >= 10_000 and nc == (25, 289, 48, 50, 0.25)
    report(9, "net chain", ok, tm, 10,
           f"{len(net.points)} points, separation {sep:.6g}, covering {cov:.6g} on {len(net.candidates)} "
           f"candidates, net_constants(2, 1) = {nc}")


def test_10_falsification_path(circle):
    with Timer() as tm:
        gc = circle.global_collar(n_check=1000)
        rep = verify(gc, circle.dom, VerifyConfig(n_pairs=10_000), declared={"C": 0.01})
        p, q = (np.array(v) for v in rep.witnesses["L_h"]["witness"])
        again = pair_quotient(gc.transform, p, q, CollarDomain(circle.curve))
        dev = abs(again - rep.estimates["L_h"])
        ok = (not rep.passed) and not rep.verdicts["L_h"]["pass"] and dev <= 1e-12
    report(10, "falsification path", ok, tm, 30,
           f"verdict {'PASS' if rep.passed else 'FAIL'} with declared C = 0.01, witness re-evaluates within {dev:.0e}")
