"""Exhaustive search for clean and f-free copies, and lower-bound certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.stats import binomtest

from ._prf import derive_seed
from .embedder import verify_clean
from .graphs import Pattern, degree_order, parse_pattern, serialize_pattern
from .mappings import (
    SetMapping,
    densify,
    gen_random_disjoint_edge,
    gen_random_incident_edge,
    gen_uniform_disjoint,
    parse_mapping,
    serialize_mapping,
)

MAX_N = 8
MAX_HOST = 16


class LimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SearchResult:
    phi: tuple[int, ...] | None
    nodes: int

    @property
    def found(self) -> bool:
        return self.phi is not None


def _check_limits(p: Pattern, N: int, max_n: int, max_host: int):
    if p.n > max_n or N > max_host:
        raise LimitExceeded(
            f"exhaustive search limited to n <= {max_n}, N <= {max_host} (got n={p.n}, N={N}); "
            "raise the limits explicitly"
        )


def _image_table(f: SetMapping) -> list[list[frozenset]]:
    """img[u][v] for u != v, as frozensets."""
    N = f.N
    d = densify(f)
    u, v = np.triu_indices(N, 1)
    imgs = d.eval_many(np.stack([u, v], axis=1)).tolist()
    table = [[frozenset()] * N for _ in range(N)]
    for a, b, img in zip(u.tolist(), v.tolist(), imgs):
        s = frozenset(img)
        table[a][b] = table[b][a] = s
    return table


def _search(p: Pattern, f: SetMapping, free_mode: bool, max_n: int, max_host: int) -> SearchResult:
    if f.k != 2 or p.k != 2:
        raise ValueError("exhaustive search handles graphs (k=2)")
    N = f.N
    _check_limits(p, N, max_n, max_host)
    if p.n > N:
        return SearchResult(None, 0)
    order = degree_order(p)
    pos = {v: i for i, v in enumerate(order)}
    back = [[w for w in p.neighbours[v] if pos[w] < i] for i, v in enumerate(order)]
    img = _image_table(f)
    phi = [-1] * p.n
    used = [False] * N
    forbidden = [0] * N
    copy_edges: set[frozenset] = set()
    images: dict[frozenset, int] = {}
    nodes = 0

    def place(i: int) -> bool:
        nonlocal nodes
        if i == len(order):
            return True
        u = order[i]
        for x in range(N):
            if used[x]:
                continue
            nodes += 1
            new_imgs = [img[phi[v]][x] for v in back[i]]
            if free_mode:
                new_edges = [frozenset((phi[v], x)) for v in back[i]]
                if any(e in images for e in new_edges):
                    continue
                if any(s in copy_edges or s in new_edges for s in new_imgs):
                    continue
            else:
                if forbidden[x]:
                    continue
                if any(used[z] or z == x for s in new_imgs for z in s):
                    continue
            phi[u] = x
            used[x] = True
            if free_mode:
                for e in new_edges:
                    copy_edges.add(e)
                for s in new_imgs:
                    images[s] = images.get(s, 0) + 1
            else:
                for s in new_imgs:
                    for z in s:
                        forbidden[z] += 1
            if place(i + 1):
                return True
            if free_mode:
                for e in new_edges:
                    copy_edges.discard(e)
                for s in new_imgs:
                    images[s] -= 1
                    if not images[s]:
                        del images[s]
            else:
                for s in new_imgs:
                    for z in s:
                        forbidden[z] -= 1
            used[x] = False
            phi[u] = -1
        return False

    found = place(0)
    return SearchResult(tuple(phi) if found else None, nodes)


def find_clean_copy(p: Pattern, f: SetMapping, max_n: int = MAX_N, max_host: int = MAX_HOST) -> SearchResult:
    """Lexicographically first (in degree order) clean embedding, or None.

    A candidate is cut as soon as it lies in an image of a placed edge or a
    newly closed edge's image hits a placed vertex.
    """
    return _search(p, f, False, max_n, max_host)


def find_f_free_copy(p: Pattern, f: SetMapping, max_n: int = MAX_N, max_host: int = MAX_HOST) -> SearchResult:
    """First copy in which no edge image is itself an edge of the copy."""
    if f.ell != 2:
        raise ValueError("f-free copies need edge-valued mappings (ell=2)")
    return _search(p, f, True, max_n, max_host)


def is_f_free(p: Pattern, phi, f: SetMapping) -> bool:
    copy = {frozenset(phi[v] for v in e) for e in p.edges}
    for e in p.edges:
        if frozenset(f.eval(tuple(sorted(phi[v] for v in e)))) in copy:
            return False
    return True


def naive_first(p: Pattern, f: SetMapping, free_mode: bool = False) -> tuple[int, ...] | None:
    """Plain enumeration of injections in the same lexicographic order, no pruning."""
    order = degree_order(p)
    img = _image_table(f)
    edges = p.edges
    for assignment in permutations(range(f.N), p.n):
        phi = [0] * p.n
        for v, x in zip(order, assignment):
            phi[v] = x
        if free_mode:
            copy = {frozenset((phi[a], phi[b])) for a, b in edges}
            ok = all(img[phi[a]][phi[b]] not in copy for a, b in edges)
        else:
            placed = set(assignment)
            ok = all(placed.isdisjoint(img[phi[a]][phi[b]]) for a, b in edges)
        if ok:
            return tuple(phi)
    return None


# --- certificates ---------------------------------------------------------

KINDS = {"w": "w_lower", "g0": "g0_lower", "g1": "g1_lower"}


@dataclass(frozen=True)
class Certificate:
    kind: str
    pattern: Pattern
    N: int
    seed: int
    trial: int
    mapping: SetMapping
    nodes: int = field(default=0)

    def search(self) -> SearchResult:
        if self.kind == "w_lower":
            return find_clean_copy(self.pattern, self.mapping, max_n=self.pattern.n, max_host=self.N)
        return find_f_free_copy(self.pattern, self.mapping, max_n=self.pattern.n, max_host=self.N)

    def replay(self) -> bool:
        """Re-run the exhaustive search: no copy, same node count."""
        res = self.search()
        return not res.found and res.nodes == self.nodes


def _mapping_for(kind: str, N: int, ell: int, seed: int) -> SetMapping:
    if kind == "w":
        return gen_uniform_disjoint(N, 2, ell, seed, dense=True)
    if kind == "g0":
        return gen_random_disjoint_edge(N, seed, dense=True)
    if kind == "g1":
        return gen_random_incident_edge(N, seed, dense=True)
    raise ValueError(f"unknown certificate kind {kind!r}")


def certify_lower_bound(p: Pattern, N: int, kind: str, trials: int, seed: int, ell: int = 1,
                        max_n: int = MAX_N, max_host: int = MAX_HOST) -> Certificate | None:
    """Search random mappings for one that admits no clean (w) / f-free (g0, g1) copy."""
    if kind not in KINDS:
        raise ValueError(f"unknown certificate kind {kind!r}")
    _check_limits(p, N, max_n, max_host)
    for t in range(trials):
        sub = derive_seed(seed, t)
        f = _mapping_for(kind, N, ell, sub)
        if kind == "w":
            res = find_clean_copy(p, f, max_n, max_host)
        else:
            res = find_f_free_copy(p, f, max_n, max_host)
        if not res.found:
            return Certificate(KINDS[kind], p, N, sub, t, f, res.nodes)
    return None


def serialize_certificate(cert: Certificate) -> str:
    head = [
        f"certificate {cert.kind}",
        f"N {cert.N}",
        f"seed {cert.seed}",
        f"trial {cert.trial}",
        f"nodes {cert.nodes}",
        "[pattern]",
    ]
    return "\n".join(head) + "\n" + serialize_pattern(cert.pattern) + "[mapping]\n" + serialize_mapping(cert.mapping)


def parse_certificate(text: str) -> Certificate:
    head, _, rest = text.partition("[pattern]\n")
    ptext, _, mtext = rest.partition("[mapping]\n")
    fields = dict(line.split(None, 1) for line in head.strip().splitlines())
    return Certificate(
        kind=fields["certificate"],
        pattern=parse_pattern(ptext),
        N=int(fields["N"]),
        seed=int(fields["seed"]),
        trial=int(fields["trial"]),
        mapping=parse_mapping(mtext),
        nodes=int(fields["nodes"]),
    )


# --- frequency scans ------------------------------------------------------

def scan_w(p: Pattern, N_values, trials: int, seed: int, ell: int = 1,
           max_n: int = MAX_N, max_host: int = MAX_HOST) -> list[dict]:
    """Per N, the fraction of random mappings that admit a clean copy (Wilson 95% interval)."""
    rows = []
    for N in N_values:
        _check_limits(p, N, max_n, max_host)
        hits = 0
        for t in range(trials):
            f = gen_uniform_disjoint(N, 2, ell, derive_seed(seed, N, t), dense=True)
            hits += find_clean_copy(p, f, max_n, max_host).found
        if trials:
            ci = binomtest(hits, trials).proportion_ci(method="wilson")
            lo, hi = round(float(ci.low), 6), round(float(ci.high), 6)
        else:
            lo = hi = None
        rows.append({
            "N": N,
            "trials": trials,
            "clean": hits,
            "fraction": hits / trials if trials else None,
            "ci_low": lo,
            "ci_high": hi,
        })
    return rows
