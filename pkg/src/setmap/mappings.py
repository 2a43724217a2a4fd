"""Set mappings f on host edges: evaluation, random constructions, file format."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from . import _prf
from ._prf import KIND_DISJOINT, KIND_INCIDENT, REDUCED

# Dense tables above this many domain edges are refused by the generators.
DENSE_EDGE_LIMIT = 5_000_000


class MappingError(ValueError):
    """Invalid mapping parameters, input edge or file."""


def colex_rank(edges: np.ndarray) -> np.ndarray:
    """Colex rank of each sorted row: sum_i C(e_i, i + 1)."""
    edges = np.asarray(edges, dtype=np.int64)
    rank = np.zeros(edges.shape[0], dtype=np.int64)
    for i in range(edges.shape[1]):
        v = edges[:, i]
        c = np.ones_like(v)
        for t in range(i + 1):
            c = c * (v - t) // (t + 1)
        rank += c
    return rank


def all_edges(N: int, k: int = 2) -> np.ndarray:
    """Every sorted k-subset of range(N), in colex order."""
    if k == 2:
        v, u = np.tril_indices(N, -1)
        return np.stack([u, v], axis=1).astype(np.int64)
    rows = np.array(list(combinations(range(N), k)), dtype=np.int64).reshape(-1, k)
    return rows[np.argsort(colex_rank(rows), kind="stable")]


def _shift_past(r: np.ndarray, excluded: np.ndarray) -> np.ndarray:
    """Map r in [0, N - c) to the r-th element of [0, N) minus each row of `excluded`."""
    excluded = np.sort(excluded, axis=1)
    for c in range(excluded.shape[1]):
        r = r + (r >= excluded[:, c])
    return r


@dataclass(frozen=True, eq=False)
class SetMapping:
    """f : C([N], k) -> C([N], ell) with |f(e) & e| <= a.

    Subclasses supply ``_images``; everything else is shared.
    """

    N: int
    k: int
    ell: int
    a: int

    def _images(self, edges: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def dense(self) -> bool:
        return False

    def check_edge(self, edge) -> tuple[int, ...]:
        e = tuple(int(v) for v in edge)
        if len(e) != self.k:
            raise MappingError(f"edge {edge} does not have {self.k} vertices")
        if any(x >= y for x, y in zip(e, e[1:])):
            raise MappingError(f"edge {edge} is not sorted ascending with distinct vertices")
        if e[0] < 0 or e[-1] >= self.N:
            raise MappingError(f"edge {edge} out of range for N={self.N}")
        return e

    def eval(self, edge) -> tuple[int, ...]:
        e = self.check_edge(edge)
        row = self._images(np.asarray([e], dtype=np.int64))[0]
        return tuple(int(x) for x in row)

    def eval_many(self, edges) -> np.ndarray:
        """Images of sorted edge rows, shape (M, ell). No per-row validation."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, self.k)
        if edges.shape[0] == 0:
            return np.empty((0, self.ell), dtype=np.int64)
        return self._images(edges)

    def pair_images(self, x: int, ys: np.ndarray) -> np.ndarray:
        """Images of the pairs {x, y} for each y != x (graph mappings only)."""
        ys = np.asarray(ys, dtype=np.int64)
        lo = np.minimum(ys, x)
        hi = np.maximum(ys, x)
        return self.eval_many(np.stack([lo, hi], axis=1))

    @cached_property
    def loads(self) -> np.ndarray:
        """load[v] = number of graph edges e with v in f(e)."""
        if self.k != 2:
            raise MappingError("loads are defined for graph mappings (k=2)")
        return self._loads()

    def _loads(self) -> np.ndarray:
        imgs = self.eval_many(all_edges(self.N, 2))
        return np.bincount(imgs.ravel(), minlength=self.N).astype(np.int64)


@dataclass(frozen=True, eq=False)
class DenseMapping(SetMapping):
    """Explicit table; row r holds the sorted image of the edge with colex rank r."""

    table: np.ndarray = None

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.shape != (math.comb(self.N, self.k), self.ell):
            raise MappingError(f"table shape {t.shape} does not match N={self.N}, k={self.k}, ell={self.ell}")
        object.__setattr__(self, "table", t)

    @property
    def dense(self) -> bool:
        return True

    def _images(self, edges):
        return self.table[colex_rank(edges)]

    def _loads(self):
        return np.bincount(self.table.ravel(), minlength=self.N).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LazyMapping(SetMapping):
    """Images computed on demand from a keyed hash of (seed, edge)."""

    seed: int = 0
    kind: int = KIND_DISJOINT

    def _images(self, edges):
        return _prf.lazy_images(self.kind, np.uint64(self.seed), self.N, self._draw_ell, edges)

    @property
    def _draw_ell(self) -> int:
        # reduced mappings draw the parent's two vertices, then keep one
        return 2 if self.kind & REDUCED else self.ell

    def _loads(self):
        return _prf.lazy_loads(self.kind, np.uint64(self.seed), self.N, self._draw_ell)


def densify(f: SetMapping) -> DenseMapping:
    if f.dense:
        return f
    edges = all_edges(f.N, f.k)
    return DenseMapping(f.N, f.k, f.ell, f.a, f.eval_many(edges))


# --- generators -----------------------------------------------------------

def _want_dense(N, k, dense):
    total = math.comb(N, k)
    if dense is None:
        return total <= 500_000
    if dense and total > DENSE_EDGE_LIMIT:
        raise MappingError(f"dense table for N={N}, k={k} has {total} rows; use lazy mode")
    return dense


def gen_uniform_disjoint(N: int, k: int, ell: int, seed: int, dense: bool | None = None) -> SetMapping:
    """Each f(e) uniform over ell-subsets of [N] minus e, independently.

    Dense mode samples exactly with numpy; lazy mode uses the keyed hash.
    With ``dense=None`` the table is materialised when it is small.
    """
    if N < k + ell:
        raise MappingError(f"N={N} too small: need N >= k + ell = {k + ell}")
    if not _want_dense(N, k, dense):
        return LazyMapping(N, k, ell, 0, seed=seed, kind=KIND_DISJOINT)
    rng = np.random.Generator(np.random.PCG64(seed))
    edges = all_edges(N, k)
    picks = np.empty((edges.shape[0], ell), dtype=np.int64)
    for t in range(ell):
        r = rng.integers(0, N - k - t, size=edges.shape[0])
        picks[:, t] = _shift_past(r, np.concatenate([edges, picks[:, :t]], axis=1))
    return DenseMapping(N, k, ell, 0, np.sort(picks, axis=1))


def gen_random_disjoint_edge(N: int, seed: int, dense: bool | None = None) -> SetMapping:
    """f(e) a uniform host edge disjoint from e."""
    if N < 4:
        raise MappingError(f"N={N} too small: need N >= 4")
    return gen_uniform_disjoint(N, 2, 2, seed, dense)


def gen_random_incident_edge(N: int, seed: int, dense: bool | None = None) -> SetMapping:
    """f(e) a uniform host edge sharing exactly one vertex with e."""
    if N < 3:
        raise MappingError(f"N={N} too small: need N >= 3")
    if not _want_dense(N, 2, dense):
        return LazyMapping(N, 2, 2, 1, seed=seed, kind=KIND_INCIDENT)
    rng = np.random.Generator(np.random.PCG64(seed))
    edges = all_edges(N, 2)
    M = edges.shape[0]
    keep = edges[np.arange(M), rng.integers(0, 2, size=M)]
    other = _shift_past(rng.integers(0, N - 2, size=M), edges)
    return DenseMapping(N, 2, 2, 1, np.sort(np.stack([keep, other], axis=1), axis=1))


def reduce_to_disjoint(f: SetMapping) -> SetMapping:
    """f'(e) = smallest vertex of f(e) outside e."""
    if f.k != 2 or f.ell != 2 or f.a > 1:
        raise MappingError("reduction needs a graph mapping with ell=2 and a<=1")
    if isinstance(f, LazyMapping):
        if f.kind & REDUCED:
            raise MappingError("mapping is already reduced")
        return LazyMapping(f.N, 2, 1, 0, seed=f.seed, kind=f.kind | REDUCED)
    edges = all_edges(f.N, 2)
    imgs = f.eval_many(edges)
    outside = (imgs != edges[:, :1]) & (imgs != edges[:, 1:])
    if not outside.any(axis=1).all():
        bad = int(np.flatnonzero(~outside.any(axis=1))[0])
        raise MappingError(f"f{tuple(edges[bad])} is contained in its edge")
    first = np.argmax(outside, axis=1)
    return DenseMapping(f.N, 2, 1, 0, imgs[np.arange(len(imgs)), first][:, None])


# --- well-loaded vertices -------------------------------------------------

@dataclass(frozen=True)
class WellLoadedSet:
    members: np.ndarray
    threshold: int
    loads: np.ndarray
    scanned: bool = True

    def __len__(self):
        return len(self.members)


def well_loaded(f: SetMapping) -> WellLoadedSet:
    """Vertices lying in at most ell*N images (threshold inclusive).

    Lazy mappings are scanned over all C(N, 2) edges; the result is cached on
    the mapping.
    """
    loads = f.loads
    threshold = f.ell * f.N
    members = np.flatnonzero(loads <= threshold).astype(np.int64)
    return WellLoadedSet(members, threshold, loads, scanned=True)


# --- text format ----------------------------------------------------------

def _parse_header(line: str) -> dict:
    toks = line.split()
    if all("=" in t for t in toks):
        out = {}
        for t in toks:
            key, _, val = t.partition("=")
            key = {"ℓ": "ell", "l": "ell"}.get(key, key)
            out[key] = int(val)
        return out
    if len(toks) == 4:
        return dict(zip(("N", "k", "ell", "a"), map(int, toks)))
    raise MappingError(f"bad header {line!r}: expected 'N k ell a'")


def parse_mapping(text: str) -> DenseMapping:
    """Parse ``N=.. k=.. ell=.. a=..`` then one ``u v : w1 .. wl`` line per edge."""
    lines = [(i, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines(), 1)]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise MappingError("empty mapping file")
    hdr = _parse_header(lines[0][1])
    try:
        N, k, ell, a = hdr["N"], hdr["k"], hdr["ell"], hdr["a"]
    except KeyError as exc:
        raise MappingError(f"header missing field {exc.args[0]!r}") from None
    total = math.comb(N, k)
    if total > DENSE_EDGE_LIMIT:
        raise MappingError(f"mapping with {total} edges is too large for the text format")
    table = np.full((total, ell), -1, dtype=np.int64)
    seen = np.zeros(total, dtype=bool)
    for lineno, line in lines[1:]:
        lhs, sep, rhs = line.partition(":")
        if not sep:
            raise MappingError(f"line {lineno}: missing ':'")
        try:
            e = tuple(int(t) for t in lhs.split())
            img = tuple(int(t) for t in rhs.split())
        except ValueError:
            raise MappingError(f"line {lineno}: non-integer token") from None
        if len(e) != k or len(set(e)) != k or min(e) < 0 or max(e) >= N:
            raise MappingError(f"line {lineno}: invalid edge {lhs.strip()!r}")
        if len(img) != ell or len(set(img)) != ell or min(img) < 0 or max(img) >= N:
            raise MappingError(f"line {lineno}: image must be {ell} distinct vertices in [0, {N})")
        if len(set(e) & set(img)) > a:
            raise MappingError(f"line {lineno}: overlap |f(e) & e| = {len(set(e) & set(img))} exceeds a={a}")
        e = tuple(sorted(e))
        r = int(colex_rank(np.asarray([e]))[0])
        if seen[r]:
            raise MappingError(f"line {lineno}: edge {e} listed twice")
        seen[r] = True
        table[r] = sorted(img)
    if not seen.all():
        missing = all_edges(N, k)[np.flatnonzero(~seen)[0]]
        raise MappingError(f"missing edge {tuple(int(v) for v in missing)}")
    return DenseMapping(N, k, ell, a, table)


def serialize_mapping(f: SetMapping) -> str:
    if not f.dense:
        raise MappingError("only dense mappings can be serialized")
    out = [f"N={f.N} k={f.k} ell={f.ell} a={f.a}"]
    edges = np.array(list(combinations(range(f.N), f.k)), dtype=np.int64).reshape(-1, f.k)
    imgs = f.eval_many(edges)
    for e, img in zip(edges.tolist(), imgs.tolist()):
        out.append(f"{' '.join(map(str, e))} : {' '.join(map(str, img))}")
    return "\n".join(out) + "\n"
