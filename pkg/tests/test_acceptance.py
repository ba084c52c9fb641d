"""Acceptance suite: eight criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
Runtime budgets are part of each criterion and are asserted.
"""

import json
import math
import sys
import time

import numpy as np
import pytest

import oracles
from gaugelab import catalog as cat
from gaugelab import convex_sets as cs
from gaugelab import integrators as it
from gaugelab import partitions as pt
from gaugelab import runner
from gaugelab import selections as sl

SIN1 = math.sin(1.0)


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, secs, budget, detail=""):
        verdict = "PASS" if ok and secs <= budget else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {n}] {verdict}  {title}  ({secs:.1f} s of {budget} s)  {detail}")
        assert ok, detail
        assert secs <= budget, f"took {secs:.1f} s, budget {budget} s"
    return emit


# --- 1. convex kernel ---------------------------------------------------------------------------


def _random_pair(rng, d):
    def one():
        n = int(rng.integers(1, 17))
        return cs.canonicalize(np.round(rng.uniform(-5, 5, size=(n, d)), 6))
    return one(), one()


def test_criterion_1_convex_kernel(report):
    rng = np.random.default_rng(2024)
    U2 = oracles.circle(256)
    U1 = np.array([[1.0], [-1.0]])
    worst = dict(additivity=0.0, homogeneity=0.0, hausdorff=0.0, triangle=0.0,
                 translation=0.0, steiner_add=0.0)
    members = True
    t0 = time.perf_counter()
    for i in range(1000):
        d = 1 + i % 2
        A, B = _random_pair(rng, d)
        C = _random_pair(rng, d)[0]
        U = U1 if d == 1 else U2
        lam = float(rng.uniform(0, 4))
        c = rng.uniform(-5, 5, size=d)
        S = cs.minkowski_sum(A, B)
        worst["additivity"] = max(worst["additivity"], float(np.max(np.abs(
            cs.support_many(S, U) - cs.support_many(A, U) - cs.support_many(B, U)))))
        worst["homogeneity"] = max(worst["homogeneity"], float(np.max(np.abs(
            cs.support_many(cs.scale(A, lam), U) - lam * cs.support_many(A, U)))))
        dAB = cs.hausdorff_distance(A, B)
        worst["hausdorff"] = max(worst["hausdorff"],
                                 abs(dAB - oracles.sampled_hausdorff(A.vertices, B.vertices)))
        worst["triangle"] = max(worst["triangle"], cs.hausdorff_distance(A, C)
                                - dAB - cs.hausdorff_distance(B, C))
        worst["translation"] = max(worst["translation"], abs(
            cs.hausdorff_distance(cs.translate(A, c), cs.translate(B, c)) - dAB))
        sA, sB = cs.steiner_point(A), cs.steiner_point(B)
        members &= bool(cs.contains(A, sA)) and bool(cs.contains(B, sB))
        worst["steiner_add"] = max(worst["steiner_add"],
                                   float(np.max(np.abs(cs.steiner_point(S) - sA - sB))))
    secs = time.perf_counter() - t0
    ok = (worst["additivity"] <= 1e-10 and worst["homogeneity"] <= 1e-10
          and worst["hausdorff"] <= 1e-6 and worst["triangle"] <= 1e-12
          and worst["translation"] <= 1e-12 and members and worst["steiner_add"] <= 1e-9)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", steiner members {members}"
    report(1, "convex kernel on 1000 random pairs", ok, secs, 10, detail)


# --- 2. partitions ---------------------------------------------------------------------------------


def _random_gauge(rng):
    kind = int(rng.integers(5))
    c = float(rng.uniform(5e-3, 0.5))
    if kind == 0:
        return pt.constant_gauge(c)
    if kind == 1:
        s = float(rng.uniform())
        return pt.Gauge(lambda t: np.maximum(np.abs(np.asarray(t) - s) / 2, c / 10), label="vee")
    if kind == 2:
        s = float(rng.uniform())
        return pt.Gauge(lambda t: np.where(np.asarray(t) == s, 1.0, c / 4), label="spike")
    if kind == 3:
        cuts = np.sort(rng.uniform(0.01, 0.99, size=int(rng.integers(0, 4))))
        edges = np.concatenate([[0.0], cuts, [1.0]])
        levels = rng.uniform(5e-3, 0.5, size=len(edges) - 1)
        return pt.step_gauge([((a, b), v) for a, b, v in zip(edges[:-1], edges[1:], levels)])
    s = float(rng.choice([0.0, 0.5, 1.0]))
    prof = pt.GaugeProfile(0.25, (pt.Singularity(s, float(rng.uniform(0.2, 1.0)), 1.0, 1e-4),))
    return prof.gauge(int(rng.integers(0, 4)))


def _phi(t):
    t = np.asarray(t, dtype=float)
    return np.column_stack([np.cos(5 * t), 1.0 / (0.1 + t)])


def _budget_by_hand(p, q):
    total = 0.0
    for k in range(len(p)):
        v = _phi(np.array([p.tags[k]]))[0]
        total += math.hypot(v[0], v[1]) * abs((p.b[k] - p.a[k]) - (q.b[k] - q.a[k]))
    return total


def test_criterion_2_partitions(report):
    rng = np.random.default_rng(7)
    strategies = ["perron", "nearest", "uniform-random", "adversarial", "perron-retag", "interior"]
    failures, count, budget_gap = [], 0, 0.0
    t0 = time.perf_counter()
    while count < 1000:
        g = _random_gauge(rng)
        strat = strategies[count % len(strategies)]
        base = pt.cousin_perron_partition(g)
        if strat == "perron":
            p = base
        elif strat == "perron-retag":
            p = pt.random_perron_retag(g, base, seed=count)
        elif strat == "interior":
            # push tags onto shared endpoints where the gauge allows, then interiorize
            t = base.tags.copy()
            for k in range(len(base) - 1):
                if pt.fine_mask(base.b[k], base.a[k], base.b[k], g(base.b[k])):
                    t[k] = base.b[k]
            if len(np.unique(t)) != len(t):
                t = base.tags
            if len(np.unique(t)) != len(t):
                continue  # the lemma needs pairwise distinct tags; draw another gauge
            src = base.with_tags(t)
            eps = float(10.0 ** rng.uniform(-8, -1))
            p = pt.interiorize_partition(src, _phi, eps, g)
            by_hand = _budget_by_hand(src, p)
            budget_gap = max(budget_gap, abs(by_hand - pt.interiorization_cost(src, p, _phi)))
            if not by_hand < eps:
                failures.append((count, "budget", by_hand, eps))
        else:
            p = pt.free_tag_partition(g, strat, seed=count, phi=_phi)
        if not pt.is_delta_fine(p, g):
            failures.append((count, strat, g.label))
        count += 1
    secs = time.perf_counter() - t0
    report(2, "1000 generated partitions are delta-fine", not failures, secs, 10,
           f"failures {failures[:3]}, budget recomputation gap {budget_gap:.1e}")


# --- 3. oracle equivalence ------------------------------------------------------------------------


def test_criterion_3_oracle_equivalence(report):
    tol = 1e-6
    checked, skipped, worst, bad = [], [], 0.0, []
    t0 = time.perf_counter()
    for e in cat.catalog():
        if e.known_support(np.eye(e.dim)) is None:
            continue
        G = e.multifunction
        U = it.default_grid(e.dim, 64)
        m, ok, _ = it.support_oracle(G, U, tol, max_levels=e.max_levels)
        if not ok.all():
            skipped.append(f"{e.name}: oracle")
            continue
        for method in ("henstock", "henstock-step", "mcshane", "birkhoff", "pettis"):
            r = it.integrate(G, method, tol, e.max_levels)
            if not r.converged:
                skipped.append(f"{e.name}/{method}")
                continue
            d = float(np.max(np.abs(cs.support_many(r.value, U) - m)))
            worst = max(worst, d)
            checked.append(f"{e.name}/{method}")
            if d > 1e-5:
                bad.append((e.name, method, d))
    secs = time.perf_counter() - t0
    report(3, "converged methods match the scalar oracle", not bad and checked, secs, 60,
           f"{len(checked)} checked, worst {worst:.1e}; not converged at 1e-6: {skipped}")


# --- 4. decomposition --------------------------------------------------------------------------------


def test_criterion_4_decomposition(report):
    tol = 1e-5
    rows, bad = [], []
    t0 = time.perf_counter()
    for name in ("growing_interval", "scaled_square", "rotating_segment"):
        G = cat.get(name).multifunction
        for kind in ("steiner", "extreme"):
            for mode in ("h-to-ms", "hcal-to-birkhoff", "vh-to-birkhoff"):
                r = sl.decomposition_verify(G, kind, mode, tol)
                rows.append(r.closure_defect)
                if not (all(r.converged.values()) and r.closure_defect <= 3 * tol
                        and r.zero_fraction == 1.0):
                    bad.append((name, kind, mode, r.closure_defect, r.converged, r.zero_fraction))
    secs = time.perf_counter() - t0
    report(4, "closure and zero profile on 18 decompositions", not bad, secs, 120,
           f"worst closure {max(rows):.1e}; failures {bad}")


# --- 5. separation -----------------------------------------------------------------------------------


def test_criterion_5_separation(report):
    t0 = time.perf_counter()
    sd = cat.get("singular_derivative")
    h = it.henstock_integral(sd.multifunction, sd.tol, max_levels=sd.max_levels)
    mc = it.mcshane_integral(sd.multifunction, sd.tol, max_levels=7)
    spreads = [lv.tag_spread for lv in mc.levels]
    cz = cat.get("conv_zero_g")
    zh = it.henstock_integral(cz.multifunction, cz.tol, max_levels=cz.max_levels)
    zm = it.mcshane_integral(cz.multifunction, cz.tol, max_levels=cz.max_levels)
    secs = time.perf_counter() - t0
    hval = h.value.vertices[0, 0]
    ok = (h.converged and abs(hval - SIN1) <= 1e-5
          and len(mc.levels) == 8 and min(spreads) >= 1e-3 and not mc.converged
          and not zh.converged and not zm.converged
          and [1.0] in zh.diverging_directions and [1.0] in zm.diverging_directions)
    report(5, "Henstock without McShane; conv{0, F'} diverges", ok, secs, 60,
           f"henstock {hval:.8f} (|err| {abs(hval - SIN1):.1e}), mcshane min spread "
           f"{min(spreads):.3g} over {len(mc.levels)} levels, conv_zero_g diverging "
           f"{zh.diverging_directions} / {zm.diverging_directions}")


# --- 6. additivity ---------------------------------------------------------------------------------


def test_criterion_6_additivity(report):
    splits = (0.13, 0.37, 0.5, 0.71, 0.9)
    worst, bad, used, skipped = 0.0, [], [], []
    t0 = time.perf_counter()
    for e in cat.catalog():
        G = e.multifunction
        r = it.henstock_integral(G, e.tol, max_levels=e.max_levels)
        if not r.converged:
            skipped.append(e.name)
            continue
        used.append(e.name)
        for a in splits:
            d = it.interval_additivity_defect(G, a, e.tol)
            worst = max(worst, d / e.tol)
            if d > 2 * e.tol:
                bad.append((e.name, a, d))
    secs = time.perf_counter() - t0
    report(6, "interval additivity at 5 split points", not bad, secs, 60,
           f"worst defect/tol {worst:.2f} over {used}; not converged: {skipped}; failures {bad}")


# --- 7. variational behaviour ------------------------------------------------------------------------


def test_criterion_7_variational(report):
    tol = 1e-5
    t0 = time.perf_counter()
    bad, sums = [], {}
    for e in cat.catalog():
        if cat.VH not in e.classes:
            continue
        trail = it.variational_sum_trail(e.multifunction, (2, 3, 4, 5), tol)
        vals = [v for *_, v in trail]
        sums[e.name] = vals
        if not all(b <= a + tol for a, b in zip(vals, vals[1:])):
            bad.append((e.name, vals))
    G = cat.get("growing_interval").multifunction
    delta = G.profile.gauge(0)
    bounds = [it.variational_measure_lower_bound(G, [(0.0, 0.5)], delta, n) for n in (10, 100, 1000)]
    zero = cat.get("zero_set").multifunction
    zeros = [it.variational_measure_lower_bound(zero, [(0.0, 1.0)], zero.profile.gauge(0), n)
             for n in (10, 100, 1000)]
    secs = time.perf_counter() - t0
    ok = not bad and bounds == sorted(bounds) and zeros == [0.0, 0.0, 0.0]
    shown = {k: f"{v[0]:.1e}->{v[-1]:.1e}" for k, v in sums.items()}
    report(7, "variational sums decrease; lower bounds monotone", ok, secs, 60,
           f"sums {shown}; bounds {[f'{b:.6f}' for b in bounds]}; zero {zeros}; failures {bad}")


# --- 8. determinism -------------------------------------------------------------------------------------


CONFIGS = [
    dict(command="integrate", example="growing_interval", method="henstock", tol=1e-6, seed=42),
    dict(command="integrate", example="rotating_segment", method="birkhoff", tol=1e-5, seed=3),
    dict(command="integrate", example="step_set", method="mcshane", tol=1e-6, seed=1),
    dict(command="integrate", example="scaled_square", method="pettis", tol=1e-6, seed=0),
    dict(command="compare", example="const_set", tol=1e-6, seed=5),
    dict(command="decompose", example="scaled_square", selection="extreme", mode="h-to-ms",
         tol=1e-5, seed=2),
    dict(command="varmeasure", example="growing_interval", set="0:0.5", samples=20, seed=9),
    dict(command="study", example="const_set_1d", method="henstock", max_levels=4, seed=0),
]


def test_criterion_8_determinism(report, tmp_path):
    bad = []
    t0 = time.perf_counter()
    for i, kw in enumerate(CONFIGS):
        texts = []
        for rep in range(2):
            out = tmp_path / f"c{i}_{rep}.json"
            runner.run(runner.RunConfig(out=str(out), **kw))
            texts.append(out.read_text())
        a, b = (json.dumps(runner.strip_metadata(t), sort_keys=True) for t in texts)
        if a != b:
            bad.append(kw)
    secs = time.perf_counter() - t0
    report(8, "repeated runs give identical JSON", not bad, secs, 10,
           f"{len(CONFIGS)} configs, mismatches {bad}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
