"""Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL line per check.

Truth values come from exact oracles (matrix powers, spectral data, closed forms); the
summary at the end of the pytest run lists one line per criterion.
"""

import math
import time

import numpy as np
import pytest

from qfflab import amplitude as A
from qfflab import graph as G
from qfflab import markov as M
from qfflab import qff as Q
from qfflab import testers as T
from qfflab import walk as W
from qfflab.chebyshev import (ff_coefficients, grid_error, tail_mass, truncation_order)

pytestmark = pytest.mark.acceptance

QFF_FIXTURES = ["path:2", "complete:3", "cycle:16", "dumbbell:8"]
QFF_TS = [4, 16, 64]
QFF_EPS = [0.05, 0.1]
QFF_TRIALS = 2000


def streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def binom_sigma(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def operator_suite(seed=2024, count=50):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 13))
        p = float(rng.uniform(0.15, 0.8))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        g = G.Graph.from_edges(n, edges)
        v = rng.normal(size=n)
        out.append((g, v / np.linalg.norm(v)))
    return out


# ------------------------------------------------------------------ 1, 2, 3


def test_criterion_1_operator_identities(criterion):
    start = time.perf_counter()
    worst_u = worst_w = 0.0
    for g, v in operator_suite():
        ops = W.WalkOperators(M.lazy_walk(g), d=g.d)
        x = ops.embed_flat(v)
        worst_u = max(worst_u, np.linalg.norm(ops.flat_part(ops.apply_U(x)) - ops.D.apply(v)))
        for t in range(1, 65):
            x = ops.apply_W(x)
            ref = M.chebyshev_apply(ops.D, t, v)
            worst_w = max(worst_w, np.linalg.norm(ops.flat_part(x) - ref))
    elapsed = time.perf_counter() - start
    ok = worst_u <= 1e-10 and worst_w <= 1e-8 and elapsed < 60
    criterion(1, ok, f"max |PU - Dv| = {worst_u:.2e} (<= 1e-10), max |PW^t - T_t(D)v| = "
                     f"{worst_w:.2e} (<= 1e-8), {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_2_completion_independence(criterion):
    worst_pow = worst_lcu = 0.0
    for g, v in operator_suite():
        P = M.lazy_walk(g)
        gs = W.WalkOperators(P, "gram_schmidt", d=g.d)
        hh = W.WalkOperators(P, "householder", d=g.d)
        xa, xb = gs.embed_flat(v), hh.embed_flat(v)
        for _ in range(64):
            xa, xb = gs.apply_W(xa), hh.apply_W(xb)
            worst_pow = max(worst_pow, np.linalg.norm(gs.flat_part(xa) - hh.flat_part(xb)))
        for t, eps in ((16, 1e-3), (64, 1e-4)):
            coeffs = ff_coefficients(t, truncation_order(t, eps, cap=False))
            ya = W.apply_W_tau(gs, gs.embed_flat(v, coeffs.tau + 1), coeffs)
            yb = W.apply_W_tau(hh, hh.embed_flat(v, coeffs.tau + 1), coeffs)
            worst_lcu = max(worst_lcu, np.linalg.norm(W.flat_component(gs, ya)
                                                       - W.flat_component(hh, yb)))
    ok = worst_pow <= 1e-10 and worst_lcu <= 1e-10
    criterion(2, ok, f"max W^t gap {worst_pow:.2e}, max W_tau gap {worst_lcu:.2e} (<= 1e-10)")
    assert ok


def test_criterion_3_truncation_certificate(criterion):
    start = time.perf_counter()
    rows, ratio = [], 0.0
    ok = True
    for t in (4, 16, 64, 256, 1024):
        for eps in (1e-1, 1e-2, 1e-4):
            tau = truncation_order(t, eps)
            tail = tail_mass(t, tau)
            err = grid_error(ff_coefficients(t, tau))
            ok &= tail <= eps and err <= eps
            ratio = max(ratio, tail / eps, err / eps)
            rows.append((t, eps, tau, tail, err))
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    criterion(3, ok, f"{len(rows)} (t, eps') pairs, worst bound/eps' ratio {ratio:.3f} (<= 1), "
                     f"{elapsed:.1f}s (< 60s)")
    assert ok, rows


# -------------------------------------------------------------------- 4, 5


@pytest.fixture(scope="module")
def forwarders():
    return {spec: Q.FastForwarder(G.parse_graph_spec(spec), graph_id=spec) for spec in QFF_FIXTURES}


def _grid():
    return [(spec, t, eps) for spec in QFF_FIXTURES for t in QFF_TS for eps in QFF_EPS]


def test_criterion_4_qff_calibration(criterion, forwarders):
    start = time.perf_counter()
    bad = []
    worst_margin = math.inf
    for idx, (spec, t, eps) in enumerate(_grid()):
        ff = forwarders[spec]
        rng = streams(4000 + idx, 1)[0]
        runs = [Q.qff(ff, 0, t, eps, rng) for _ in range(QFF_TRIALS)]
        p = runs[0].predicted_success
        rate = np.mean([r.success for r in runs])
        floor = (1 - eps) * p - 3 * binom_sigma(p, QFF_TRIALS)
        dists = [r.distance for r in runs if r.success]
        worst_margin = min(worst_margin, rate - floor)
        if rate < floor or max(dists) > eps:
            bad.append((spec, t, eps, rate, floor, max(dists)))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 600
    criterion(4, ok, f"{len(_grid())} configs x {QFF_TRIALS} trials, smallest success margin "
                     f"{worst_margin:+.4f}, {len(bad)} violations, {elapsed:.1f}s")
    assert ok, bad


def test_criterion_5_qffg_floor_and_budget(criterion, forwarders):
    bad = []
    worst = math.inf
    for idx, (spec, t, eps) in enumerate(_grid()):
        ff = forwarders[spec]
        rng = streams(5000 + idx, 1)[0]
        runs = [Q.qffg(ff, 0, t, eps, rng) for _ in range(QFF_TRIALS)]
        rate = np.mean([r.success for r in runs])
        floor = 0.5 - 3 * binom_sigma(0.5, QFF_TRIALS)
        worst = min(worst, rate)
        ledger_ok = all(r.ledger["qw_steps"] == r.m * 2 * r.tau + r.tau
                        and r.ledger["initial_reflections"] == r.m for r in runs)
        dist_ok = all(r.distance <= eps for r in runs if r.success)
        if rate < floor or not ledger_ok or not dist_ok:
            bad.append((spec, t, eps, rate, ledger_ok, dist_ok))
    ok = not bad
    criterion(5, ok, f"lowest success {worst:.4f} (floor 0.5 - 3 sigma = "
                     f"{0.5 - 3 * binom_sigma(0.5, QFF_TRIALS):.4f}), ledgers exact, "
                     f"{len(bad)} violations")
    assert ok, bad


# ------------------------------------------------------------------------ 6


def test_criterion_6_sqrt_t_scaling(criterion):
    g = G.parse_graph_spec("cycle:32")
    ff = Q.FastForwarder(g)
    ts = [4, 16, 64, 256, 1024]
    qw, rw, norms = [], [], []
    for t, rng in zip(ts, streams(6, len(ts))):
        run = Q.qffg(ff, 0, t, 0.1, rng)
        qw.append(run.ledger["qw_steps"])
        norms.append(math.sqrt(run.predicted_success))
        led = W.CostLedger()
        T.classical_norm_collisions(g, 0, t, 64, rng, led)
        rw.append(led.rw_steps)
    q_slope = np.polyfit(np.log(ts), np.log(np.array(qw) * np.array(norms)), 1)[0]
    c_slope = np.polyfit(np.log(ts), np.log(rw), 1)[0]
    ok = abs(q_slope - 0.5) <= 0.1 and abs(c_slope - 1.0) <= 0.1
    criterion(6, ok, f"quantum slope {q_slope:.4f} (0.5 +- 0.1; qw_steps {qw}), "
                     f"classical slope {c_slope:.4f} (1.0 +- 0.1)")
    assert ok


# ------------------------------------------------------------------------ 7


def test_criterion_7_amplitude_estimation(criterion):
    delta, runs = 0.05, 400
    bad, rows = [], []
    streams_ = iter(streams(7, 8))
    for a in (0.0, 1.0, 2**-0.5, 0.3):
        for eps in (0.05, 0.01):
            rng = next(streams_)
            fails = sum(abs(A.estimate_amplitude(a, eps, delta, rng).estimate - a) > eps
                        for _ in range(runs))
            freq = fails / runs
            rows.append(f"a={a:.4f}/eps={eps}: {freq:.4f}")
            if freq > delta + 3 * binom_sigma(delta, runs):
                bad.append(rows[-1])
    ok = not bad
    criterion(7, ok, f"failure frequencies {', '.join(rows)} "
                     f"(<= {delta + 3 * binom_sigma(delta, runs):.4f})")
    assert ok, bad


# ------------------------------------------------------------------------ 8


def _problem_with_amplitude(lam, rng, n=12, k=3):
    """Reflection taking |0> to a state with target amplitude exactly lam."""
    mask = np.zeros(n, dtype=bool)
    mask[n - k:] = True
    tgt = rng.normal(size=k) + 1j * rng.normal(size=k)
    rest = rng.normal(size=n - k) + 1j * rng.normal(size=n - k)
    psi = np.concatenate([math.sqrt(1 - lam * lam) * rest / np.linalg.norm(rest),
                          lam * tgt / np.linalg.norm(tgt)])
    # real first entry, so the reflection below maps |0> exactly onto psi
    psi *= abs(psi[0]) / psi[0]
    w = psi.copy()
    w[0] -= 1.0
    H = np.eye(n) - 2 * np.outer(w, w.conj()) / np.vdot(w, w).real
    return A.matrix_problem(H, mask)


def test_criterion_8_fixed_point(criterion):
    rng = np.random.default_rng(8)
    rows, ok = [], True
    for lam in (0.2, 0.3, 0.5):
        for delta in (0.1, 0.5):
            L = A.fixed_point_length(lam, delta)
            for mode in ("phased", "ideal"):
                for prob in (A.rotation_problem(lam), _problem_with_amplitude(lam, rng)):
                    res = A.fixed_point_amplify(prob, L, delta, mode)
                    ok &= res.overlap >= 1 - delta**2 and not res.below_threshold
                    rows.append(res.overlap - (1 - delta**2))
    criterion(8, ok, f"{len(rows)} runs, smallest overlap margin over 1 - delta^2: {min(rows):.3e}")
    assert ok


# ------------------------------------------------------------------------ 9


NORM_GRID = [("path:2", 4), ("complete:3", 1), ("cycle:16", 16), ("dumbbell:8", 16)]


def test_criterion_9_norm_estimators(criterion):
    runs = 400
    rows, bad = [], []
    for idx, (spec, t) in enumerate(NORM_GRID):
        g = G.parse_graph_spec(spec)
        truth = T.exact_norm(g, 0, t)
        r1, r2 = streams(900 + idx, 2)
        eps, delta = 0.02, 0.05
        add = np.mean([abs(T.estimate_norm(g, 0, t, eps, delta, r1).a - truth) <= eps
                       for _ in range(runs)])
        add_floor = 1 - delta - 3 * binom_sigma(delta, runs)
        eps_m, delta_m = 0.1, 0.1
        mult = np.mean([abs(T.estimate_norm_multiplicative(g, 0, t, eps_m, delta_m, r2).a - truth)
                        <= eps_m * truth for _ in range(runs)])
        mult_floor = 1 - delta_m - 3 * binom_sigma(delta_m, runs)
        rows.append(f"{spec}/t={t}: additive {add:.3f}, multiplicative {mult:.3f}")
        if add < add_floor or mult < mult_floor:
            bad.append(rows[-1])
    ok = not bad
    criterion(9, ok, "; ".join(rows))
    assert ok, bad


# ----------------------------------------------------------------------- 10


def test_criterion_10_distance(criterion):
    g = G.parse_graph_spec("dumbbell:16")
    n, t, delta, runs = g.n, 64, 0.1, 100
    eps = 1 / (2 * n)
    floor = 1 - delta - 3 * binom_sigma(delta, runs)
    rows, ok = [], True
    for idx, (u, v) in enumerate([(0, 20), (0, 5)]):
        truth = T.exact_distance_sq(g, u, v, t)
        rng = streams(1000 + idx, 1)[0]
        hits = np.mean([abs(T.estimate_distance(g, u, v, t, eps, delta, rng).a - truth) <= eps
                        for _ in range(runs)])
        ok &= hits >= floor
        rows.append(f"pair ({u},{v}) truth {truth:.5f}: within eps {hits:.2f}")
    sym = G.parse_graph_spec("path:2")
    rng = streams(1010, 1)[0]
    sym_hits = np.mean([T.estimate_distance(sym, 0, 1, t, eps, delta, rng).a <= eps
                        for _ in range(runs)])
    ok &= sym_hits >= floor
    rows.append(f"symmetric pair a <= eps {sym_hits:.2f}")
    criterion(10, ok, "; ".join(rows) + f" (floor {floor:.3f}, eps = 1/(2N) = {eps:.5f})")
    assert ok


# ----------------------------------------------------------------------- 11

RUNS = 30
EXPANSION_FIXTURES = [("complete:16", "accept"), ("regular:32,6", "accept"),
                      ("dumbbell:16,3,1", "reject")]


@pytest.mark.parametrize("spec,expected", EXPANSION_FIXTURES)
def test_criterion_11_expansion(criterion, spec, expected):
    g = G.parse_graph_spec(spec)
    verdicts = [T.test_expansion(g, 0.3, 0.1, 0.1, rng).verdict for rng in streams(1100, RUNS)]
    freq = verdicts.count(expected) / RUNS
    ok = freq >= 2 / 3
    criterion(11, ok, f"{expected} frequency {freq:.3f} over {RUNS} runs (>= 2/3)",
              f"expansion {spec}")
    assert ok


# Default walk-length constant (c' = 1), on the dumbbell the cli example uses.
LITERAL = dict(spec="dumbbell:16,3,1", phi_in=0.4, c_prime=1.0)
# Configuration whose walk length separates the halves at desk scale (c' = 0.05).
SEPARATED = dict(spec="dumbbell:16,6,1", phi_in=0.28, c_prime=0.05)

CLASSIFY_CASES = [
    ("literal same node", LITERAL, (3, 3), "same-cluster"),
    ("literal within half", LITERAL, (0, 5), "same-cluster"),
    ("literal cross half", LITERAL, (0, 20), "different-cluster"),
    ("separated within half", SEPARATED, (0, 5), "same-cluster"),
    ("separated cross half", SEPARATED, (0, 20), "different-cluster"),
]


@pytest.mark.parametrize("name,cfg,pair,expected", CLASSIFY_CASES, ids=[c[0] for c in CLASSIFY_CASES])
def test_criterion_11_classify(criterion, name, cfg, pair, expected):
    g = G.parse_graph_spec(cfg["spec"])
    params = T.ClusterParams(2, cfg["phi_in"], c_prime=cfg["c_prime"], fp_mode="ideal")
    out = [T.classify_nodes(g, *pair, params, rng) for rng in streams(1110, RUNS)]
    freq = sum(c.label == expected for c in out) / RUNS
    truth = T.exact_distance_sq(g, pair[0], pair[1], params.t(g.n)) if pair[0] != pair[1] else 0.0
    ok = freq >= 2 / 3
    criterion(11, ok, f"{cfg['spec']} t={params.t(g.n)} pair {pair}: {expected} frequency "
                      f"{freq:.3f} (>= 2/3); oracle distance {truth * g.n:.3g}/N, "
                      f"bands 1/(4N) and 1/N", f"classify {name}")
    assert ok


CLUSTER_CASES = [
    ("literal expander k=1", "regular:32,6", 1, 0.4, 1.0, "accept"),
    ("literal dumbbell k=2", LITERAL["spec"], 2, 0.4, 1.0, "accept"),
    ("literal dumbbell k=1", LITERAL["spec"], 1, 0.4, 1.0, "reject"),
    ("edgeless k=1", "empty:12,3", 1, 0.4, 1.0, "reject"),
    ("separated expander k=1", "regular:32,6", 1, 0.08, 0.05, "accept"),
    ("separated dumbbell k=2", SEPARATED["spec"], 2, 0.28, 0.05, "accept"),
    ("separated dumbbell k=1", SEPARATED["spec"], 1, 0.28, 0.05, "reject"),
]


@pytest.mark.parametrize("name,spec,k,phi,cp,expected", CLUSTER_CASES, ids=[c[0] for c in CLUSTER_CASES])
def test_criterion_11_clusterability(criterion, name, spec, k, phi, cp, expected):
    g = G.parse_graph_spec(spec)
    params = T.ClusterParams(k, phi, c_prime=cp, fp_mode="ideal")
    verdicts = [T.test_clusterability(g, k, phi, 0.1, rng, params).verdict
                for rng in streams(1120, RUNS)]
    freq = verdicts.count(expected) / RUNS
    ok = freq >= 2 / 3
    criterion(11, ok, f"{spec} k={k} t={params.t(g.n)}: {expected} frequency {freq:.3f} (>= 2/3)",
              f"clusterability {name}")
    assert ok


# ----------------------------------------------------------------------- 12


def test_criterion_12_collision_mean(criterion):
    g = G.parse_graph_spec("complete:16")
    p = T.ExpansionParams.build(g, 0.3, 0.1, 0.1)
    m, n, reps = p.gr_walks, g.n, 300
    rng = np.random.default_rng(12)
    counts = [T.collision_count(T.run_walks(g, G.random_node(g, rng), p.t, m, rng))
              for _ in range(reps)]
    pairs = m * (m - 1) / 2
    # exact moments of the collision count from the oracle distribution
    dist = T.oracle_power(g, 0, p.t)  # vertex-transitive: same law from every start
    q, r = float(np.sum(dist**2)), float(np.sum(dist**3))
    var = pairs * q * (1 - q) + 6 * math.comb(m, 3) * (r - q * q)
    sigma = math.sqrt(var / reps)
    expected = m * (m - 1) / (2 * n)
    mean = float(np.mean(counts))
    ok = abs(mean - expected) <= 3 * sigma
    criterion(12, ok, f"K16 mean collisions {mean:.3f} vs m(m-1)/(2N) = {expected:.3f} "
                      f"(3 sigma = {3 * sigma:.3f}, m = {m}, t = {p.t})", "collision mean")
    assert ok


@pytest.mark.parametrize("spec", [s for s, _ in EXPANSION_FIXTURES])
def test_criterion_12_verdict_agreement(criterion, spec):
    g = G.parse_graph_spec(spec)
    agree = 0
    for child in np.random.SeedSequence(1200).spawn(RUNS):
        q_rng, c_rng = (np.random.default_rng(s) for s in child.spawn(2))
        qv = T.test_expansion(g, 0.3, 0.1, 0.1, q_rng).verdict
        cv = T.classical_gr_expansion(g, 0.3, 0.1, 0.1, c_rng).verdict
        agree += qv == cv
    freq = agree / RUNS
    ok = freq >= 0.8
    criterion(12, ok, f"quantum/GR verdict agreement {freq:.3f} over {RUNS} matched runs (>= 0.8)",
              f"agreement {spec}")
    assert ok
