import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from setmap import graphs
from setmap.embedder import (
    AlgorithmFailure,
    Counts,
    HostTooSmall,
    PipelineConfig,
    RetriesExhausted,
    block_probabilities,
    check_size_property,
    compute_counts,
    embed_pipeline,
    measure_properties,
    prepare,
    prune,
    run_algorithm1,
    sample_partition,
    target_sets,
    verify_clean,
)
from setmap.graphs import DyadicPlan, PaddedPattern, Pattern
from setmap.mappings import gen_uniform_disjoint, well_loaded

from conftest import table_mapping, with_overrides


def _plan(sizes, degrees, m=1):
    blocks, start = [], 0
    for s in sizes:
        blocks.append((start, start + s))
        start += s
    return DyadicPlan(tuple(range(start)), tuple(blocks), tuple(degrees), m)


# --- sampling ---------------------------------------------------------

def test_block_probability_formula():
    plan = _plan((4, 4, 8), (1, 1, 1))
    assert block_probabilities(plan, 512)[0] == 1 / 32


def test_partition_too_small():
    plan = _plan((4, 4, 8), (1, 1, 1))
    with pytest.raises(HostTooSmall):
        sample_partition(np.arange(2 * 16), plan, seed=1)


def test_partition_disjoint_subsets():
    plan = _plan((4, 4, 8), (1, 1, 1))
    X = np.arange(0, 3000, 3)
    primed = sample_partition(X, plan, seed=5)
    cat = np.concatenate(primed)
    assert len(np.unique(cat)) == len(cat)
    assert np.isin(cat, X).all()


def test_expected_pool_sizes():
    pp = graphs.pad(graphs.random_regular(64, 2, seed=2))
    plan = graphs.dyadic_plan(pp)
    assert plan.sizes == (8, 8, 16, 32)
    X = np.arange(5000)
    sizes = np.array([[len(p) for p in sample_partition(X, plan, seed=s)] for s in range(200)])
    mean = sizes.mean(axis=0)
    for j, u in enumerate(plan.sizes):
        assert abs(mean[j] - 4 * u) <= 0.05 * 4 * u


def test_size_property_boundaries():
    plan = _plan((100,), (1,))
    assert check_size_property((np.arange(401),), plan)
    assert not check_size_property((np.arange(390),), plan)
    assert not check_size_property((np.arange(410),), plan)


# --- counts -----------------------------------------------------------

def _naive_counts(primed, f):
    nb = len(primed)
    label = {int(x): j for j, p in enumerate(primed) for x in p}
    pairs = np.zeros((nb, nb), dtype=np.int64)
    per = [np.zeros((len(p), nb), dtype=np.int64) for p in primed]
    for i, pi in enumerate(primed):
        for t, x in enumerate(pi):
            for j in range(i, nb):
                below = {z for z, lab in label.items() if lab <= j}
                for y in primed[j]:
                    if y == x:
                        continue
                    img = f.eval((min(x, y), max(x, y)))
                    if below & set(img):
                        per[i][t, j] += 1
                        pairs[i, j] += 1
    return pairs, per


def test_counts_all_zero():
    f = table_mapping(10, 1, lambda e: [9] if 9 not in e else [0 if 0 not in e else 1])
    counts = compute_counts((np.array([5, 6]), np.array([7])), f)
    assert not counts.pairs.any()


def test_counts_image_misses_pool():
    f = table_mapping(10, 1, lambda e: [3] if e == (1, 2) else [v for v in (9, 8, 7) if v not in e][:1])
    counts = compute_counts((np.array([1, 2]),), f)
    assert counts.pairs[0, 0] == 0


def test_counts_single_blocked_pair():
    def rule(e):
        if e == (1, 3):
            return [4]
        if 9 in e:
            return [0] if 0 not in e else [5]
        return [9]
    f = table_mapping(10, 1, rule)
    primed = (np.array([1, 2]), np.array([3, 4]))
    counts = compute_counts(primed, f)
    assert counts.pairs.tolist() == [[0, 1], [0, 0]]
    assert counts.per_vertex[0][0, 1] == 1
    assert counts.per_vertex[0][1].tolist() == [0, 0]


@given(st.integers(8, 30), st.integers(1, 3), st.integers(0, 2**63), st.integers(1, 4))
def test_counts_match_brute_force(N, ell, seed, blocks):
    f = gen_uniform_disjoint(N, 2, ell, seed, dense=True)
    rng = np.random.default_rng(seed % 2**32)
    perm = rng.permutation(N)
    cuts = np.sort(rng.choice(np.arange(1, N), size=blocks, replace=False))
    primed = tuple(np.sort(perm[a:b]) for a, b in zip(np.r_[0, cuts[:-1]], cuts))
    counts = compute_counts(primed, f)
    pairs, per = _naive_counts(primed, f)
    assert (counts.pairs == pairs).all()
    for a, b in zip(counts.per_vertex, per):
        assert (a == b).all()
    assert all(counts.per_vertex[i].sum(axis=0)[j] == counts.pairs[i, j]
               for i in range(blocks) for j in range(i, blocks))


# --- pruning ----------------------------------------------------------

def test_prune_nothing_when_zero():
    plan = _plan((4, 4), (2, 2))
    primed = (np.array([10, 11]), np.array([20, 21]))
    counts = Counts(np.zeros((2, 2), np.int64), (np.zeros((2, 2), np.int64), np.zeros((2, 2), np.int64)))
    pruned, bad = prune(primed, counts, plan)
    assert all((a == b).all() for a, b in zip(pruned, primed))
    assert all(len(v) == 0 for v in bad.values())


def test_prune_thresholds():
    plan = _plan((4, 4), (2, 2))
    primed = (np.array([10, 11, 12]), np.array([20, 21]))
    per0 = np.array([[1, 0], [0, 2], [0, 1]])
    per1 = np.array([[0, 2], [0, 1]])
    counts = Counts(np.zeros((2, 2), np.int64), (per0, per1))
    pruned, bad = prune(primed, counts, plan)
    assert bad[(0, 0)].tolist() == [10]
    assert bad[(0, 1)].tolist() == [11]
    assert bad[(1, 1)].tolist() == [20]
    assert pruned[0].tolist() == [12] and pruned[1].tolist() == [21]


# --- the greedy embedding ---------------------------------------------

def _single_block_edge():
    g = graphs.path(2)
    pp = PaddedPattern(g, 2, (), 0)
    plan = DyadicPlan((0, 1), ((0, 2),), (1,), 1)
    return pp, plan


def _far(e):
    return [v for v in (9, 8, 4, 3) if v not in e][:2]


def test_hand_trace_plain():
    pp, plan = _single_block_edge()
    f = with_overrides(10, 2, {(5, 6): (8, 9)}, _far)
    emb = run_algorithm1(pp, plan, (np.array([5, 6, 7]),), f)
    assert emb.phi == (5, 6) and emb.clean


def test_hand_trace_rule_c():
    pp, plan = _single_block_edge()
    f = with_overrides(10, 2, {(5, 6): (7, 9), (5, 7): (8, 9)}, _far)
    emb = run_algorithm1(pp, plan, (np.array([5, 6, 7]),), f)
    assert emb.phi == (5, 7)
    v = emb.trace.vertices[1]
    assert (v.rejected_a, v.rejected_b, v.rejected_c) == (1, 0, 1)


def test_hand_trace_failure():
    pp, plan = _single_block_edge()
    f = with_overrides(10, 2, {(5, 6): (7, 9), (5, 7): (6, 9)}, _far)
    with pytest.raises(AlgorithmFailure) as info:
        run_algorithm1(pp, plan, (np.array([5, 6, 7]),), f)
    assert (info.value.block, info.value.vertex) == (0, 1)


def test_rule_b_uses_completed_blocks():
    # path 0-1-2 ordered 1,0,2; blocks {1}, {0}, {2}; f(phi(1) phi(0)) lands on 12
    g = graphs.path(3)
    pp = PaddedPattern(g, 3, (), 0)
    plan = DyadicPlan((1, 0, 2), ((0, 1), (1, 2), (2, 3)), (2, 1, 1), 2)
    f = with_overrides(16, 1, {(3, 7): (12,)}, lambda e: [v for v in (15, 14, 13) if v not in e][:1])
    emb = run_algorithm1(pp, plan, (np.array([3]), np.array([7]), np.array([12, 13])), f)
    assert emb.phi == (7, 3, 13)
    assert emb.trace.vertices[2].rejected_b == 1


# --- verification -----------------------------------------------------

def test_verify_examples():
    f = with_overrides(10, 2, {(1, 2): (3, 4)}, _far)
    assert verify_clean(graphs.path(2), (1, 2), f)
    f = with_overrides(10, 2, {(1, 2): (3, 5)}, _far)
    verdict = verify_clean(graphs.path(3), (1, 2, 3), f)
    assert not verdict and verdict.violation == ((0, 1), 3)


def test_verify_rejects_non_injective():
    f = with_overrides(10, 2, {}, _far)
    with pytest.raises(ValueError):
        verify_clean(graphs.path(2), (1, 1), f)


def _clean_by_hand(p, phi, f):
    placed = set(phi)
    return all(not placed & set(f.eval(tuple(sorted((phi[a], phi[b]))))) for a, b in p.edges)


def test_algorithm_outputs_clean_fuzz():
    rng = np.random.default_rng(7)
    runs = 0
    while runs < 500:
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, n * (n - 1) // 2 + 1))
        p = graphs.random_pattern(n, m, seed=int(rng.integers(2**32)))
        ell = int(rng.integers(1, 3))
        core, kept, pp, plan = prepare(p)
        f = gen_uniform_disjoint(max(64 * ell * p.m, 4 * pp.n_padded + 8), 2, ell,
                                 seed=int(rng.integers(2**32)))
        X = well_loaded(f)
        ts = target_sets(sample_partition(X, plan, int(rng.integers(2**32))), f, plan)
        try:
            emb = run_algorithm1(pp, plan, ts.pruned, f)
        except AlgorithmFailure:
            continue
        runs += 1
        assert emb.clean and _clean_by_hand(pp.base, emb.phi, f)
        assert len(set(emb.phi)) == len(emb.phi)


def test_trace_discipline_and_accounting():
    rng = np.random.default_rng(11)
    checked = 0
    for trial in range(60):
        n = int(rng.integers(4, 16))
        m = int(rng.integers(n // 2 + 1, n * (n - 1) // 2 + 1))
        p = graphs.random_pattern(n, m, seed=trial)
        core, kept, pp, plan = prepare(p)
        f = gen_uniform_disjoint(64 * 2 * p.m, 2, 2, seed=trial, dense=False)
        ts = target_sets(sample_partition(well_loaded(f), plan, trial), f, plan)
        try:
            emb = run_algorithm1(pp, plan, ts.pruned, f)
        except AlgorithmFailure:
            continue
        checked += 1
        g = pp.base
        for j in range(len(plan.blocks)):
            assert set(emb.phi[u] for u in plan.block(j)) <= set(ts.pruned[j].tolist())
        for rec in emb.trace.vertices:
            size, dj = plan.sizes[rec.block], plan.block_degrees[rec.block]
            assert rec.rejected_a < size
            if rec.earlier_neighbours == 0:
                assert rec.rejected_c == 0
            else:
                assert rec.rejected_c < g.degrees[rec.vertex] * math.ceil(size / dj)
    assert checked >= 20


def test_pruning_arithmetic():
    seen = 0
    for trial in range(40):
        p = graphs.cycle(4)
        _, _, pp, plan = prepare(p)
        f = gen_uniform_disjoint(4096, 2, 1, seed=trial, dense=False)
        ts = target_sets(sample_partition(well_loaded(f), plan, trial), f, plan)
        sizes = plan.sizes
        good = all(ts.counts.pairs[i, j] <= sizes[i] * sizes[j] ** 2 / (5 * plan.m)
                   for i in range(len(sizes)) for j in range(i, len(sizes)))
        if good:
            seen += 1
            for i in range(len(sizes)):
                assert len(ts.pruned[i]) >= len(ts.primed[i]) - sizes[i]
        for i, pool in enumerate(ts.primed):
            removed = set()
            for j in range(i, len(sizes)):
                removed |= set(ts.bad[(i, j)].tolist())
            assert set(ts.pruned[i].tolist()) == set(pool.tolist()) - removed
    assert seen > 0


# --- pipeline ---------------------------------------------------------

def test_single_edge_first_attempt():
    p = graphs.path(2)
    for s in range(100):
        f = gen_uniform_disjoint(100, 2, 1, seed=s)
        emb, report = embed_pipeline(p, f, PipelineConfig(ell=1, seed=s))
        assert report.retries == 0 and emb.clean


def test_k5_measured_run():
    p = graphs.clique(5)
    ok = 0
    for s in range(50):
        f = gen_uniform_disjoint(1280, 2, 2, seed=s)
        try:
            emb, report = embed_pipeline(p, f, PipelineConfig(ell=2, seed=s))
        except RetriesExhausted:
            continue
        ok += 1
        assert _clean_by_hand(p, emb.phi, f)
    assert ok >= 45


def test_isolated_vertices_restricted_cleanly():
    p = Pattern(7, ((0, 1), (1, 2), (4, 5)))
    f = gen_uniform_disjoint(64 * 2 * 3, 2, 2, seed=4)
    emb, report = embed_pipeline(p, f, PipelineConfig(ell=2, seed=4))
    assert len(emb.phi) == 7 and len(set(emb.phi)) == 7
    assert _clean_by_hand(p, emb.phi, f)


def test_pipeline_deterministic():
    p = graphs.complete_bipartite(3, 4)
    f = gen_uniform_disjoint(64 * 2 * p.m, 2, 2, seed=1, dense=False)
    cfg = PipelineConfig(ell=2, seed=123)
    a = embed_pipeline(p, f, cfg)
    b = embed_pipeline(p, f, cfg)
    assert a[0] == b[0] and a[1].to_dict() == b[1].to_dict()


def test_retries_exhausted_carries_report():
    p = graphs.clique(6)
    f = gen_uniform_disjoint(6 * 15, 2, 2, seed=2, dense=True)
    with pytest.raises((RetriesExhausted, HostTooSmall)) as info:
        embed_pipeline(p, f, PipelineConfig(ell=2, seed=0, max_retries=3))
    if info.type is RetriesExhausted:
        assert not info.value.report.success and info.value.report.attempts_used == 3


def test_pipeline_rejects_overlapping_mapping():
    from setmap.mappings import gen_random_incident_edge
    with pytest.raises(ValueError):
        embed_pipeline(graphs.path(2), gen_random_incident_edge(50, seed=0), PipelineConfig())


def test_measure_degenerate_single_edge():
    f = gen_uniform_disjoint(100, 2, 1, seed=0)
    table = measure_properties(graphs.path(2), f, PipelineConfig(ell=1), samples=20)
    for rate in (table.prop1_rate, table.prop2_rate, table.prop3_rate, table.algorithm_rate):
        assert 0.0 <= rate <= 1.0
