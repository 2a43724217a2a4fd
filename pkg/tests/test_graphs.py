import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from setmap import graphs
from setmap.graphs import (
    Pattern,
    PatternError,
    degree_order,
    dyadic_plan,
    pad,
    parse_pattern,
    serialize_pattern,
)


@st.composite
def patterns(draw, max_n=14, allow_isolated=False):
    n = draw(st.integers(2, max_n))
    pairs = list(combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    p = Pattern(n, tuple(chosen))
    if not allow_isolated and p.isolated():
        keep = [v for v in range(n) if p.degrees[v]]
        idx = {v: i for i, v in enumerate(keep)}
        p = Pattern(len(keep), tuple((idx[a], idx[b]) for a, b in p.edges))
    return p


# --- degree order -------------------------------------------------------

def test_degree_order_examples():
    assert degree_order(graphs.path(3)) == [1, 0, 2]
    assert degree_order(graphs.clique(3)) == [0, 1, 2]
    assert degree_order(graphs.star(4)) == [4, 0, 1, 2, 3]


# --- padding ------------------------------------------------------------

def test_pad_triangle():
    pp = pad(graphs.clique(3))
    assert pp.m_padded == 4
    assert pp.added_matching_edges == ((3, 4),)
    assert pp.n_padded == 8 and pp.added_isolated == 3 and pp.T == 2


def test_pad_conforming_is_identity():
    p = graphs.random_regular(8, 4, seed=3)  # m = 16, n = 8
    pp = pad(p)
    assert pp.added_matching_edges == () and pp.added_isolated == 0
    assert pp.T == 1 and pp.base == p


def test_pad_single_edge():
    pp = pad(graphs.path(2))
    assert (pp.m_padded, pp.n_padded, pp.T) == (1, 2, 1)


def test_pad_rejects_isolated_and_empty():
    with pytest.raises(PatternError):
        pad(Pattern(3, ((0, 1),)))
    with pytest.raises(PatternError):
        pad(Pattern(2, ()))


@given(patterns())
def test_pad_invariants(p):
    pp = pad(p)
    r = math.isqrt(pp.m_padded)
    assert r * r == pp.m_padded
    ratio = pp.n_padded // r
    assert ratio * r == pp.n_padded and ratio == 1 << pp.T and pp.T >= 1
    assert pp.n_padded <= 4 * pp.m_padded
    assert 2 * len(pp.base.isolated()) <= pp.n_padded
    restricted = tuple(e for e in pp.base.edges if max(e) < pp.original_n)
    assert restricted == p.edges


# --- dyadic plan ---------------------------------------------------------

def test_plan_block_sizes():
    p = graphs.random_regular(16, 2, seed=1)  # m = 16, n = 16
    plan = dyadic_plan(pad(p))
    assert plan.sizes == (4, 4, 8) and plan.T == 2
    plan = dyadic_plan(pad(graphs.clique(3)))
    assert plan.sizes == (2, 2, 4)


def test_plan_disjoint_matching_degrees():
    # 16 disjoint edges: n=32, root 4, T=3, every block degree 1
    plan = dyadic_plan(pad(graphs.matching(16)))
    assert plan.sizes == (4, 4, 8, 16)
    assert set(plan.block_degrees) == {1}
    assert sum(d * u for d, u in zip(plan.block_degrees[1:], plan.sizes[1:])) == 28 <= 4 * plan.m


def _check_plan(p):
    pp = pad(p)
    plan = dyadic_plan(pp)
    g = pp.base
    root = pp.root
    assert plan.sizes[0] == root
    for j in range(1, plan.T + 1):
        assert plan.sizes[j] == root << (j - 1) == sum(plan.sizes[:j])
    assert all(a >= b for a, b in zip(plan.block_degrees, plan.block_degrees[1:]))
    assert plan.block_degrees[-1] > 0 or all(g.degrees[v] == 0 for v in plan.block(plan.T))
    for j in range(1, plan.T + 1):
        assert all(g.degrees[u] >= plan.block_degrees[j] for u in plan.block(j - 1))
    assert sum(d * u for d, u in zip(plan.block_degrees[1:], plan.sizes[1:])) <= 4 * plan.m
    assert sorted(plan.order) == list(range(g.n))


@given(patterns())
def test_plan_invariants(p):
    _check_plan(p)


def test_degree_sum_bound_fuzz():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        m = int(rng.integers(1, n * (n - 1) // 2 + 1))
        p = graphs.random_pattern(n, m, seed=int(rng.integers(2**32)))
        keep = [v for v in range(n) if p.degrees[v]]
        idx = {v: i for i, v in enumerate(keep)}
        p = Pattern(len(keep), tuple((idx[a], idx[b]) for a, b in p.edges))
        plan = dyadic_plan(pad(p))
        assert sum(d * u for d, u in zip(plan.block_degrees[1:], plan.sizes[1:])) <= 4 * plan.m


# --- generators ----------------------------------------------------------

def test_generator_examples():
    assert graphs.clique(4).m == 6
    kb = graphs.complete_bipartite(2, 3)
    assert kb.m == 6 and sorted(kb.degrees) == [2, 2, 2, 3, 3]
    assert graphs.random_pattern(6, 5, seed=1) == graphs.random_pattern(6, 5, seed=1)


def test_regular_generator():
    p = graphs.random_regular(20, 3, seed=5)
    assert set(p.degrees) == {3} and p.m == 30


@pytest.mark.parametrize("spec, n, m", [
    ("clique:5", 5, 10), ("bipartite:3x4", 7, 12), ("path:101", 101, 100),
    ("random:n=20,m=40", 20, 40), ("star:4", 5, 4), ("cycle:6", 6, 6), ("matching:3", 6, 3),
])
def test_generator_specs(spec, n, m):
    kind, params = graphs.parse_generator(spec)
    p = graphs.generate(kind, params, seed=9)
    assert (p.n, p.m) == (n, m)


def test_unknown_generator():
    with pytest.raises(PatternError):
        graphs.generate("wheel", {"n": "5"})


# --- text format -------------------------------------------------------

def test_parse_examples():
    assert parse_pattern("0 1\n1 2") == graphs.path(3)
    with pytest.raises(PatternError, match="degenerate"):
        parse_pattern("0 0")
    with pytest.raises(PatternError, match="duplicate"):
        parse_pattern("0 1\n1 0")
    with pytest.raises(PatternError, match="out of range"):
        parse_pattern("k=2 n=2\n0 5")


def test_parse_header_keeps_isolated():
    p = parse_pattern("# comment\nk=2 n=5\n0 1\n")
    assert p.n == 5 and p.isolated() == [2, 3, 4]


def test_hypergraph_parse():
    p = parse_pattern("0 1 2\n2 3 4")
    assert p.k == 3 and p.degrees == (1, 1, 2, 1, 1)


@given(patterns(allow_isolated=True))
def test_roundtrip(p):
    assert parse_pattern(serialize_pattern(p)) == p


def test_serialize_canonical():
    text = "1 2\n1 0\n"
    assert serialize_pattern(parse_pattern(text)) == "k=2 n=3\n0 1\n1 2\n"


@given(patterns(allow_isolated=True))
def test_degrees_match_edges(p):
    deg = [0] * p.n
    for e in p.edges:
        for v in e:
            deg[v] += 1
    assert tuple(deg) == p.degrees
