"""Pattern hypergraphs, degree ordering, padding and dyadic blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np


class PatternError(ValueError):
    """Malformed pattern input."""


@dataclass(frozen=True)
class Pattern:
    """A k-uniform hypergraph on vertices 0..n-1.

    Edges are stored as sorted tuples in lexicographic order, so two patterns
    with the same edge set compare equal regardless of input order.
    """

    n: int
    edges: tuple[tuple[int, ...], ...]
    k: int = 2
    degrees: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self):
        if self.k < 2:
            raise PatternError(f"uniformity must be at least 2, got {self.k}")
        if self.n < 0:
            raise PatternError("vertex count must be non-negative")
        canon = []
        for e in self.edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != self.k:
                raise PatternError(f"edge {e} does not have {self.k} vertices")
            if len(set(t)) != self.k:
                raise PatternError(f"degenerate edge {e}")
            if t[0] < 0 or t[-1] >= self.n:
                raise PatternError(f"edge {e} out of range for n={self.n}")
            canon.append(t)
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise PatternError(f"duplicate edge {a}")
        deg = [0] * self.n
        for e in canon:
            for v in e:
                deg[v] += 1
        object.__setattr__(self, "edges", tuple(canon))
        object.__setattr__(self, "degrees", tuple(deg))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    @cached_property
    def neighbours(self) -> tuple[frozenset[int], ...]:
        nb = [set() for _ in range(self.n)]
        for e in self.edges:
            for v in e:
                nb[v].update(w for w in e if w != v)
        return tuple(frozenset(s) for s in nb)

    def isolated(self) -> list[int]:
        return [v for v, d in enumerate(self.degrees) if d == 0]


@dataclass(frozen=True)
class PaddedPattern:
    base: Pattern
    original_n: int
    added_matching_edges: tuple[tuple[int, int], ...]
    added_isolated: int

    @property
    def m_padded(self) -> int:
        return self.base.m

    @property
    def n_padded(self) -> int:
        return self.base.n

    @property
    def root(self) -> int:
        return math.isqrt(self.m_padded)

    @property
    def T(self) -> int:
        return (self.n_padded // self.root).bit_length() - 1


@dataclass(frozen=True)
class DyadicPlan:
    """Degree order and blocks U_0..U_T over it.

    ``blocks[j]`` is a half-open ``(start, stop)`` range of positions in
    ``order``; ``block_degrees[j]`` is the largest degree inside block j.
    """

    order: tuple[int, ...]
    blocks: tuple[tuple[int, int], ...]
    block_degrees: tuple[int, ...]
    m: int

    @property
    def T(self) -> int:
        return len(self.blocks) - 1

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in self.blocks)

    def block(self, j: int) -> tuple[int, ...]:
        a, b = self.blocks[j]
        return self.order[a:b]

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        out = [0] * len(self.order)
        for j, (a, b) in enumerate(self.blocks):
            for pos in range(a, b):
                out[self.order[pos]] = j
        return tuple(out)

    @cached_property
    def rank(self) -> tuple[int, ...]:
        out = [0] * len(self.order)
        for pos, v in enumerate(self.order):
            out[v] = pos
        return tuple(out)


def degree_order(p: Pattern) -> list[int]:
    """Vertices by non-increasing degree, ties by ascending id."""
    return sorted(range(p.n), key=lambda v: (-p.degrees[v], v))


def pad(p: Pattern) -> PaddedPattern:
    """Make m a perfect square and n/sqrt(m) a power of two (exponent >= 1).

    Missing edges are added as a matching on fresh vertices, then isolated
    vertices are appended. The input graph is left untouched on its own
    vertex range.
    """
    if p.k != 2:
        raise PatternError("padding is defined for graphs (k=2)")
    if p.m == 0:
        raise PatternError("pattern has no edges")
    if p.isolated():
        raise PatternError(f"pattern has isolated vertices {p.isolated()}")
    root = math.isqrt(p.m)
    if root * root < p.m:
        root += 1
    extra = root * root - p.m
    n = p.n
    matching = tuple((n + 2 * i, n + 2 * i + 1) for i in range(extra))
    n1 = n + 2 * extra
    T = 1
    while root * (1 << T) < n1:
        T += 1
    n_pad = root * (1 << T)
    base = Pattern(n_pad, p.edges + matching, 2)
    return PaddedPattern(base, p.n, matching, n_pad - n1)


def dyadic_plan(pp: PaddedPattern) -> DyadicPlan:
    g = pp.base
    order = degree_order(g)
    root, T = pp.root, pp.T
    blocks = [(0, root)]
    for j in range(1, T + 1):
        blocks.append((root << (j - 1), root << j))
    degs = tuple(max(g.degrees[v] for v in order[a:b]) for a, b in blocks)
    return DyadicPlan(tuple(order), tuple(blocks), degs, g.m)


# --- generators -----------------------------------------------------------

def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def clique(n: int) -> Pattern:
    return Pattern(n, tuple(combinations(range(n), 2)))


def path(n: int) -> Pattern:
    return Pattern(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle(n: int) -> Pattern:
    if n < 3:
        raise PatternError("cycle needs n >= 3")
    return Pattern(n, tuple((i, (i + 1) % n) for i in range(n)))


def star(leaves: int) -> Pattern:
    """Leaves 0..leaves-1 joined to centre `leaves`."""
    return Pattern(leaves + 1, tuple((i, leaves) for i in range(leaves)))


def complete_bipartite(a: int, b: int) -> Pattern:
    return Pattern(a + b, tuple((i, a + j) for i in range(a) for j in range(b)))


def matching(pairs: int) -> Pattern:
    return Pattern(2 * pairs, tuple((2 * i, 2 * i + 1) for i in range(pairs)))


def random_pattern(n: int, m: int, seed: int, k: int = 2) -> Pattern:
    """Uniform m-edge k-uniform hypergraph on n vertices (may have isolated vertices)."""
    total = math.comb(n, k)
    if m > total:
        raise PatternError(f"m={m} exceeds C({n},{k})={total}")
    rng = _rng(seed)
    if total <= 200_000:
        all_edges = list(combinations(range(n), k))
        pick = rng.choice(total, size=m, replace=False)
        edges = [all_edges[i] for i in sorted(pick)]
    else:
        chosen: set[tuple[int, ...]] = set()
        while len(chosen) < m:
            e = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
            chosen.add(e)
        edges = sorted(chosen)
    return Pattern(n, tuple(edges), k)


def random_regular(n: int, d: int, seed: int, max_tries: int = 10_000) -> Pattern:
    """Simple d-regular graph from the pairing model with rejection."""
    if (n * d) % 2 or d >= n:
        raise PatternError(f"no simple {d}-regular graph on {n} vertices")
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_tries):
        perm = rng.permutation(stubs).reshape(-1, 2)
        if np.any(perm[:, 0] == perm[:, 1]):
            continue
        edges = {tuple(sorted(map(int, e))) for e in perm}
        if len(edges) == len(perm):
            return Pattern(n, tuple(edges))
    raise PatternError("pairing model did not produce a simple graph")


def generate(kind: str, params: dict, seed: int = 0) -> Pattern:
    """Build a pattern from a named family; deterministic for a fixed seed."""
    try:
        if kind == "clique":
            return clique(int(params["n"]))
        if kind == "path":
            return path(int(params["n"]))
        if kind == "cycle":
            return cycle(int(params["n"]))
        if kind == "star":
            return star(int(params["leaves"]))
        if kind == "matching":
            return matching(int(params["pairs"]))
        if kind in ("bipartite", "complete_bipartite"):
            return complete_bipartite(int(params["a"]), int(params["b"]))
        if kind == "random":
            return random_pattern(int(params["n"]), int(params["m"]), seed, int(params.get("k", 2)))
        if kind == "regular":
            return random_regular(int(params["n"]), int(params["d"]), seed)
    except KeyError as exc:
        raise PatternError(f"generator {kind!r} needs parameter {exc.args[0]!r}") from None
    raise PatternError(f"unknown generator {kind!r}")


def parse_generator(spec: str) -> tuple[str, dict]:
    """Parse ``kind:params`` e.g. ``clique:5``, ``bipartite:3x4``, ``random:n=20,m=40``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    params: dict = {}
    if not rest:
        raise PatternError(f"generator spec {spec!r} has no parameters")
    if "=" in rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            params[key.strip()] = val.strip()
    elif kind in ("bipartite", "complete_bipartite"):
        a, _, b = rest.partition("x")
        params = {"a": a, "b": b}
    else:
        first = {"star": "leaves", "matching": "pairs"}.get(kind, "n")
        params[first] = rest
    return kind, params


# --- text format ----------------------------------------------------------

def parse_pattern(text: str) -> Pattern:
    """One edge per line; optional header ``k=<k> n=<n>``; '#' starts a comment."""
    k = n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            if edges or k is not None:
                raise PatternError(f"line {lineno}: header must come first")
            for item in line.split():
                key, _, val = item.partition("=")
                if key == "k":
                    k = int(val)
                elif key == "n":
                    n = int(val)
                else:
                    raise PatternError(f"line {lineno}: unknown header field {key!r}")
            continue
        try:
            ids = tuple(int(tok) for tok in line.split())
        except ValueError:
            raise PatternError(f"line {lineno}: non-integer vertex id in {raw!r}") from None
        if k is None:
            k = len(ids)
        if len(ids) != k:
            raise PatternError(f"line {lineno}: expected {k} ids, got {len(ids)}")
        if len(set(ids)) != len(ids):
            raise PatternError(f"line {lineno}: degenerate edge {raw.strip()!r}")
        if min(ids) < 0 or (n is not None and max(ids) >= n):
            raise PatternError(f"line {lineno}: vertex id out of range")
        edges.append(ids)
    if k is None:
        k = 2
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    canon = [tuple(sorted(e)) for e in edges]
    if len(set(canon)) != len(canon):
        dup = next(e for e in canon if canon.count(e) > 1)
        raise PatternError(f"duplicate edge {dup}")
    return Pattern(n, tuple(edges), k)


def serialize_pattern(p: Pattern) -> str:
    lines = [f"k={p.k} n={p.n}"]
    lines.extend(" ".join(map(str, e)) for e in p.edges)
    return "\n".join(lines) + "\n"
