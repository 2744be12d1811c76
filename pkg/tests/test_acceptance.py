"""Acceptance gate: eleven end-to-end properties the package must exhibit.

Each test prints exactly one pass/fail line and asserts the same condition,
so `pytest -v` reads as a checklist.  Tolerances and trial counts are fixed
here on purpose; loosening them is a behaviour change, not a test fix.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import stats

from arccount.core import EpsParams, GridSpec, Seed, WeightedPointSet
from arccount.counter import BuildConfig, LearnedSource, build_counting_index, count
from arccount.hamming import code_distance, collision_prob, embed, make_embedding
from arccount.io import load_model, save_model, write_points
from arccount.learned import QuerySample, learned_spanning_tree, near_data_queries, pair_stab_counts, tree_objective
from arccount.oracle import (
    enumerate_spanning_trees,
    exact_range_indices,
    exact_sigma,
    exact_tq,
    exact_visiting_oracle,
)
from arccount.ptree import tree_to_path
from arccount.spantree import (
    Edge,
    LightEdgeParams,
    SpanningTree,
    build_low_stab_forest,
    build_low_stab_tree,
    generate_grid_queries,
)
from arccount.stabber import Verdict, build_classifier, build_stab_index, classify, stab_witnesses


_capture = None


@pytest.fixture(autouse=True)
def _live_checklist(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


def _report(number: int, label: str, ok: bool, detail: str) -> None:
    line = f"[criterion {number:02d}] {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    if _capture is not None:
        # suspend capture so the checklist shows under plain `pytest -v`,
        # on its own line right above the matching PASSED/FAILED entry
        with _capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert ok, f"criterion {number:02d} {label}: {detail}"


def test_01_collision_probability_gap_and_floor():
    t0 = time.perf_counter()
    tol = 1e-6
    worst_gap = math.inf
    worst_floor = math.inf
    for eps in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]:
        width = 1.0 + eps
        p1 = collision_prob(1.0, width)
        p2 = collision_prob(width, width)
        worst_gap = min(worst_gap, (p1 - p2) - eps / 5.0)
        worst_floor = min(worst_floor, p2 - 0.25)
    elapsed = time.perf_counter() - t0
    ok = worst_gap >= -tol and worst_floor >= -tol and elapsed < 1.0
    _report(
        1,
        "per-bit collision gap >= eps/5 and far collision >= 1/4 across eps",
        ok,
        f"min gap slack {worst_gap:.6f}, min floor slack {worst_floor:.6f}, {elapsed:.2f}s",
    )


def test_02_code_distance_concentration():
    # planted pairs at distances 1 and 1.5 under eps=0.5, code length 64:
    # near pairs should land within theta, far pairs beyond theta + eps*d'.
    # The stated exponential bound exp(-eps^2 d'/19200) + 0.02 exceeds 1 at
    # this code length, so it cannot fail; it is asserted as stated anyway,
    # and the observed rates are printed for the record.
    t0 = time.perf_counter()
    eps, dprime, trials, ambient = 0.5, 64, 10_000, 16
    bound = math.exp(-(eps**2) * dprime / 19200.0) + 0.02
    rng = Seed(201).generator()
    x = rng.normal(size=ambient)
    u = rng.normal(size=ambient)
    u /= np.linalg.norm(u)
    near_point = x + u
    far_point = x + 1.5 * u
    near_miss = far_miss = 0
    theta = far_threshold = None
    for t in range(trials):
        emb = make_embedding(ambient, 2**10, eps, Seed(202).derive(t), dprime=dprime)
        theta, far_threshold = emb.theta, emb.far_threshold
        cx = embed(emb, x)
        near_miss += code_distance(cx, embed(emb, near_point)) > theta
        far_miss += code_distance(cx, embed(emb, far_point)) < far_threshold
    near_rate = near_miss / trials
    far_rate = far_miss / trials
    elapsed = time.perf_counter() - t0
    ok = near_rate <= bound and far_rate <= bound and elapsed < 30.0
    _report(
        2,
        "embedding misclassification rates within the stated bound",
        ok,
        f"near {near_rate:.4f}, far {far_rate:.4f}, bound {bound:.4f} (vacuous at d'=64), {elapsed:.1f}s",
    )


def test_03_witness_recall():
    t0 = time.perf_counter()
    params = EpsParams(0.5)
    rng = Seed(203).generator()
    pts = WeightedPointSet(rng.normal(size=(500, 16)) * 0.6, np.ones(500))
    near_hit = near_total = far_hit = far_total = 0
    for b in range(200):
        center = pts.points[int(rng.integers(0, 500))]
        q = center + rng.normal(scale=0.125, size=16)
        idx = build_stab_index(pts, params, Seed(204).derive(b))
        w = stab_witnesses(idx, q)
        dists = np.linalg.norm(pts.points - q, axis=1)
        if np.any(dists <= params.outer_radius):
            near_total += 1
            near_hit += w.near is not None
        if np.any(dists >= params.radius):
            far_total += 1
            far_hit += w.far is not None
    near_recall = near_hit / max(1, near_total)
    far_recall = far_hit / max(1, far_total)
    elapsed = time.perf_counter() - t0
    ok = near_recall >= 0.95 and far_recall >= 0.95 and near_total > 100 and elapsed < 120.0
    _report(
        3,
        "near and far witness recall over 200 fresh index builds",
        ok,
        f"near {near_recall:.3f} ({near_total} eligible), far {far_recall:.3f} ({far_total}), {elapsed:.1f}s",
    )


def test_04_mandatory_verdicts():
    params = EpsParams(0.5)
    trials = 1000
    good = 0
    for t in range(trials):
        rng = Seed(205).derive(t).generator()
        q = rng.uniform(-1, 1, size=3)

        inside = WeightedPointSet(q + rng.uniform(-0.4, 0.4, size=(8, 3)), np.ones(8))
        covered_ok = (
            classify(build_classifier(inside, params, seed=Seed(206).derive(t)), q)
            is Verdict.COVERED
        )

        shift = rng.normal(size=3)
        shift *= 4.0 / np.linalg.norm(shift)
        outside = WeightedPointSet(q + shift + rng.uniform(-0.4, 0.4, size=(8, 3)), np.ones(8))
        disjoint_ok = (
            classify(build_classifier(outside, params, seed=Seed(207).derive(t)), q)
            is Verdict.DISJOINT
        )

        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        planted = WeightedPointSet(np.vstack([q + 0.8 * u, q - 1.6 * u]), np.ones(2))
        stabbed_ok = (
            classify(build_classifier(planted, params, seed=Seed(208).derive(t)), q)
            is Verdict.STABBED
        )

        good += covered_ok and disjoint_ok and stabbed_ok
    rate = good / trials
    ok = rate >= 0.999
    _report(
        4,
        "covered/disjoint/stabbed verdicts on their mandatory inputs",
        ok,
        f"all-three pass rate {rate:.4f} over {trials} trials",
    )


def test_05_multiplicative_update_bookkeeping():
    params = EpsParams(0.5)
    instances = 0
    exact = True
    for k, n in enumerate([3, 5, 6, 8, 9, 10, 11, 12, 13, 14]):
        rng = Seed(209).derive(k).generator()
        pts = WeightedPointSet(rng.uniform(0, 3, size=(n, 2)), np.ones(n))
        queries = generate_grid_queries(pts, params, GridSpec(0.5))
        forest = build_low_stab_forest(
            pts, queries, params, LightEdgeParams.for_eps(0.5), Seed(210).derive(k)
        )
        for j, q in enumerate(queries.support):
            if queries.stab_exponents[j] != exact_sigma(q, forest.edges, pts, params):
                exact = False
        exact = exact and queries.exponents_match_weights()
        instances += 1
    _report(
        5,
        "stored weight exponents equal exact forest stab counts",
        exact,
        f"integer equality on every support query of {instances} instances",
    )


def test_06_path_and_visiting_inequalities():
    params = EpsParams(0.5)
    checked = 0
    violations = 0
    for k in range(50):
        rng = Seed(211).derive(k).generator()
        n = int(rng.integers(4, 33))
        pts = WeightedPointSet(rng.uniform(0, 3, size=(n, 2)), np.ones(n))
        queries = generate_grid_queries(pts, params, GridSpec(0.5))
        tree = build_low_stab_tree(
            pts, queries, params, LightEdgeParams.for_eps(0.5), Seed(212).derive(k)
        )
        order = tree_to_path(tree, pts).order
        path_edges = list(zip(order[:-1].tolist(), order[1:].tolist()))
        levels = math.ceil(math.log2(n))
        for q in queries.support:
            sigma_tree = exact_sigma(q, tree.edges, pts, params)
            sigma_path = exact_sigma(q, path_edges, pts, params)
            t_q = exact_tq(q, pts, params)
            zeta = exact_visiting_oracle(order, pts, q, params)
            checked += 1
            if sigma_path > 2 * sigma_tree + 2 * t_q:
                violations += 1
            if zeta > 2 * (sigma_path + t_q) * levels + 1:
                violations += 1
    ok = violations == 0
    _report(
        6,
        "path stabbing and visiting-number inequalities, zero tolerance",
        ok,
        f"{violations} violations over {checked} (instance, query) checks",
    )


def test_07_leaf_path_stabbing_bounded_by_visiting():
    params = EpsParams(0.5)
    pairs = 10_000
    violations = 0
    rng = Seed(213).generator()
    for _ in range(pairs):
        n = int(rng.integers(2, 33))
        d = int(rng.integers(1, 4))
        pts = WeightedPointSet(rng.uniform(0, 3, size=(n, d)), np.ones(n))
        order = rng.permutation(n)
        q = rng.uniform(-0.5, 3.5, size=d)
        path_edges = list(zip(order[:-1].tolist(), order[1:].tolist()))
        sigma_path = exact_sigma(q, path_edges, pts, params)
        zeta = exact_visiting_oracle(order, pts, q, params)
        violations += sigma_path > zeta
    ok = violations == 0
    _report(
        7,
        "leaf-path stabbing never exceeds the visiting number",
        ok,
        f"{violations} violations over {pairs} random (tree, query) pairs",
    )


def test_08_learned_tree_sample_optimality():
    t0 = time.perf_counter()
    params = EpsParams(0.5)
    rng = Seed(214).generator()
    mismatches = 0
    for k in range(25):
        n = 4 + k % 4  # cycles through 4, 5, 6, 7
        pts = WeightedPointSet(rng.uniform(0, 2.5, size=(n, 2)), np.ones(n))
        sample = QuerySample(rng.uniform(-0.5, 3.0, size=(100, 2)), source="acceptance")
        counts = pair_stab_counts(pts, sample, params)
        learned = tree_objective(counts, learned_spanning_tree(counts, n))
        exhaustive = min(
            sum(int(counts[a, b]) for a, b in edges) for edges in enumerate_spanning_trees(n)
        )
        mismatches += learned != exhaustive
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60.0
    _report(
        8,
        "learned tree matches the exhaustive optimum for n in 4..7",
        ok,
        f"{mismatches} mismatches over 25 instances, {elapsed:.1f}s",
    )


def test_09_end_to_end_sandwich_and_weight_identity():
    n, d, eps = 512, 16, 0.5
    rng = Seed(215).generator()
    centers = rng.uniform(0, 6, size=(4, d))
    who = rng.integers(0, 4, size=n)
    pts = WeightedPointSet(
        centers[who] + rng.normal(scale=0.3, size=(n, d)),
        rng.uniform(0.0, 2.0, size=n),  # nonnegative weights
    )
    sample = near_data_queries(pts, 4000, sigma=0.25, seed=Seed(216))
    cfg = BuildConfig(eps=eps, seed=Seed(217), tree_source=LearnedSource(sample))
    idx = build_counting_index(pts, cfg)

    params = EpsParams(eps)
    holdout = near_data_queries(pts, 500, sigma=0.25, seed=Seed(218))
    sandwich_pass = identity_pass = 0
    tol = 1e-12 * max(1.0, float(np.abs(pts.weights).sum()))
    for q in holdout.queries:
        ans = count(idx, q, verify=True)
        got: set[int] = set()
        for lo, hi in ans.member_ranges:
            got.update(int(v) for v in idx.tree.order[lo:hi])
        inner = exact_range_indices(pts, q, params.radius)
        outer = exact_range_indices(pts, q, params.outer_radius)
        sandwich_pass += inner.issubset(got) and got.issubset(outer)
        identity_pass += abs(ans.weight - float(pts.weights[sorted(got)].sum())) <= tol
    sandwich_rate = sandwich_pass / 500
    identity_rate = identity_pass / 500
    ok = sandwich_rate >= 0.99 and identity_rate == 1.0
    _report(
        9,
        "answer sets sandwiched between the two balls with exact weights",
        ok,
        f"sandwich {sandwich_rate:.3f} (need >= 0.99), weight identity {identity_rate:.3f} (need 1.0), n=512 d=16",
    )


def _random_spanning_tree(n: int, rng: np.random.Generator) -> SpanningTree:
    """Uniform random labeled tree by decoding a random Pruefer sequence."""
    if n == 2:
        return SpanningTree(2, [Edge(0, 1)])
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append(Edge(min(leaf, v), max(leaf, v)))
        degree[leaf] -= 1
        degree[v] -= 1
    a, b = [i for i in range(n) if degree[i] == 1]
    edges.append(Edge(a, b))
    return SpanningTree(n, edges)


def test_10_learned_tree_beats_random_baseline():
    params = EpsParams(0.5)
    n, d = 48, 4
    wins = ties = 0
    for k in range(20):
        rng = Seed(219).derive(k).generator()
        centers = rng.uniform(0, 4, size=(3, d))
        who = rng.integers(0, 3, size=n)
        pts = WeightedPointSet(centers[who] + rng.normal(scale=0.15, size=(n, d)), np.ones(n))

        train = near_data_queries(pts, 400, sigma=0.3, seed=Seed(220).derive(k))
        counts = pair_stab_counts(pts, train, params)
        learned_order = tree_to_path(learned_spanning_tree(counts, n), pts).order
        random_order = tree_to_path(_random_spanning_tree(n, rng), pts).order

        holdout = near_data_queries(pts, 200, sigma=0.3, seed=Seed(221).derive(k))
        learned_mean = np.mean(
            [exact_visiting_oracle(learned_order, pts, q, params) for q in holdout.queries]
        )
        random_mean = np.mean(
            [exact_visiting_oracle(random_order, pts, q, params) for q in holdout.queries]
        )
        if learned_mean < random_mean:
            wins += 1
        elif learned_mean == random_mean:
            ties += 1
    effective = 20 - ties
    pvalue = stats.binomtest(wins, effective, 0.5, alternative="greater").pvalue
    ok = pvalue < 0.05
    _report(
        10,
        "learned trees visit fewer nodes than random trees on held-out queries",
        ok,
        f"{wins} wins, {ties} ties over 20 paired instances, sign test p={pvalue:.2e}",
    )


def test_11_deterministic_rebuild_from_saved_model(tmp_path):
    rng = Seed(222).generator()
    pts = WeightedPointSet(rng.uniform(0, 4, size=(64, 6)), rng.uniform(0.1, 2.0, size=64))
    data = tmp_path / "data.txt"
    write_points(data, pts)
    sample = near_data_queries(pts, 400, sigma=0.4, seed=Seed(223))
    cfg = BuildConfig(eps=0.5, seed=Seed(224), tree_source=LearnedSource(sample))
    idx = build_counting_index(pts, cfg)
    model = tmp_path / "model.json"
    save_model(model, idx, data)
    loaded = load_model(model, data)

    identical = bool(np.array_equal(loaded.tree.order, idx.tree.order))
    probes = 0
    for _ in range(100):
        q = rng.uniform(-0.5, 4.5, size=6)
        a, b = count(idx, q), count(loaded, q)
        same = (
            a.weight == b.weight
            and a.visited_nodes == b.visited_nodes
            and a.verdict_counts == b.verdict_counts
        )
        identical = identical and same
        probes += 1
    _report(
        11,
        "saved model rebuilds to bit-identical answers",
        identical,
        f"tree order and all answer fields equal on a {probes}-query probe",
    )
