"""Randomised partition, pruning and the greedy block embedding.

The pipeline pads the pattern, splits it into dyadic degree blocks, samples
one host pool per block from the well-loaded vertices, prunes vertices that
take part in too many blocked pairs, and then places pattern vertices
greedily. Any failure resamples the pools.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._prf import derive_seed
from .graphs import DyadicPlan, PaddedPattern, Pattern, dyadic_plan, pad
from .mappings import SetMapping, WellLoadedSet, gen_uniform_disjoint, well_loaded

# pair blocks handed to eval_many at once in compute_counts
_PAIR_CHUNK = 1 << 21


class HostTooSmall(ValueError):
    """The well-loaded set cannot hold the sampled pools."""


class AlgorithmFailure(Exception):
    """No candidate survived for ``vertex`` in block ``block``."""

    def __init__(self, block: int, vertex: int, trace: "RunTrace"):
        super().__init__(f"no candidate for vertex {vertex} in block {block}")
        self.block = block
        self.vertex = vertex
        self.trace = trace


class RetriesExhausted(RuntimeError):
    def __init__(self, report: "Report"):
        super().__init__(f"no clean embedding after {report.attempts_used} attempts")
        self.report = report


@dataclass(frozen=True)
class PipelineConfig:
    C: float = 64.0
    ell: int = 2
    max_retries: int = 20
    seed: int = 0
    diagnostics: bool = True
    # resample when a pool size leaves (3.9|U_j|, 4.1|U_j|); off by default
    enforce_size_property: bool = False

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")


@dataclass(frozen=True)
class VertexTrace:
    vertex: int
    block: int
    pool: int
    rejected_a: int
    rejected_b: int
    rejected_c: int
    candidates: int
    earlier_neighbours: int
    chosen: int | None


@dataclass(frozen=True)
class RunTrace:
    vertices: tuple[VertexTrace, ...]
    # later_hits[j] = |L_{<=j} & X'_{j+1}| after block j completed
    later_hits: tuple[int, ...] = ()

    def totals(self) -> dict:
        return {
            "a": sum(v.rejected_a for v in self.vertices),
            "b": sum(v.rejected_b for v in self.vertices),
            "c": sum(v.rejected_c for v in self.vertices),
        }


@dataclass(frozen=True)
class Embedding:
    phi: tuple[int, ...]
    clean: bool
    trace: RunTrace | None = None


@dataclass(frozen=True)
class CleanVerdict:
    clean: bool
    violation: tuple | None = None  # (pattern edge, host vertex)

    def __bool__(self):
        return self.clean


@dataclass(frozen=True)
class Counts:
    """pairs[i, j] = r_{i,j} (i <= j); per_vertex[i][t, j] = r_j(x) for x = primed[i][t]."""

    pairs: np.ndarray
    per_vertex: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class TargetSets:
    primed: tuple[np.ndarray, ...]
    pruned: tuple[np.ndarray, ...]
    bad: dict
    counts: Counts


# --- sampling -------------------------------------------------------------

def block_probabilities(plan: DyadicPlan, x_size: int) -> np.ndarray:
    return 4.0 * np.asarray(plan.sizes, dtype=float) / x_size


def sample_partition(X: WellLoadedSet | np.ndarray, plan: DyadicPlan, seed: int) -> tuple[np.ndarray, ...]:
    """Put each x in X into pool j with probability 4|U_j|/|X|, else nowhere."""
    members = X.members if isinstance(X, WellLoadedSet) else np.asarray(X, dtype=np.int64)
    alpha = block_probabilities(plan, len(members))
    if alpha.sum() > 1.0:
        raise HostTooSmall(
            f"|X|={len(members)} < 4 * n_padded = {4 * sum(plan.sizes)}; increase N"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    slot = np.searchsorted(np.cumsum(alpha), rng.random(len(members)), side="right")
    return tuple(members[slot == j] for j in range(len(alpha)))


def check_size_property(primed, plan: DyadicPlan) -> bool:
    return all(39 * u < 10 * len(p) < 41 * u for p, u in zip(primed, plan.sizes))


# --- counts and pruning ---------------------------------------------------

def _pair_blocks(n: int):
    """Yield (ia, ib) index arrays covering every a < b, in row chunks."""
    a0 = 0
    while a0 < n - 1:
        a1 = a0
        total = 0
        while a1 < n - 1 and total < _PAIR_CHUNK:
            total += n - 1 - a1
            a1 += 1
        rows = np.arange(a0, a1)
        lens = n - 1 - rows
        ia = np.repeat(rows, lens)
        starts = np.repeat(np.cumsum(lens) - lens, lens)
        ib = ia + 1 + (np.arange(ia.size) - starts)
        yield ia, ib
        a0 = a1


def compute_counts(primed, f: SetMapping) -> Counts:
    """Ordered blocked pairs between pools.

    A pair (x, y) in X'_i x X'_j with i <= j is blocked when f(xy) meets
    X'_0 u ... u X'_j.
    """
    nb = len(primed)
    S = np.concatenate(primed).astype(np.int64) if nb else np.empty(0, np.int64)
    lab = np.concatenate([np.full(len(p), j, dtype=np.int64) for j, p in enumerate(primed)])
    labmap = np.full(f.N, nb, dtype=np.int64)
    labmap[S] = lab
    pairs = np.zeros(nb * nb, dtype=np.int64)
    rv = np.zeros(len(S) * nb, dtype=np.int64)
    for ia, ib in _pair_blocks(len(S)):
        x, y = S[ia], S[ib]
        imgs = f.eval_many(np.stack([np.minimum(x, y), np.maximum(x, y)], axis=1))
        first = labmap[imgs].min(axis=1)
        la, lb = lab[ia], lab[ib]
        c1 = (la <= lb) & (first <= lb)
        c2 = (lb <= la) & (first <= la)
        pairs += np.bincount(la[c1] * nb + lb[c1], minlength=nb * nb)
        pairs += np.bincount(lb[c2] * nb + la[c2], minlength=nb * nb)
        rv += np.bincount(ia[c1] * nb + lb[c1], minlength=len(S) * nb)
        rv += np.bincount(ib[c2] * nb + la[c2], minlength=len(S) * nb)
    rv = rv.reshape(len(S), nb)
    bounds = np.cumsum([0] + [len(p) for p in primed])
    per_vertex = tuple(rv[bounds[i]:bounds[i + 1]] for i in range(nb))
    return Counts(pairs.reshape(nb, nb), per_vertex)


def prune(primed, counts: Counts, plan: DyadicPlan) -> tuple[tuple[np.ndarray, ...], dict]:
    """Drop x in X'_i whose r_j(x) reaches |U_j|/d_j for some j >= i (r_0(x) >= 1 for i = j = 0)."""
    sizes, degs = plan.sizes, plan.block_degrees
    bad = {}
    pruned = []
    for i, pool in enumerate(primed):
        keep = np.ones(len(pool), dtype=bool)
        for j in range(i, len(primed)):
            rj = counts.per_vertex[i][:, j]
            if i == j == 0:
                mask = rj >= 1
            else:
                mask = rj * degs[j] >= sizes[j]
            bad[(i, j)] = pool[mask]
            keep &= ~mask
        pruned.append(pool[keep])
    return tuple(pruned), bad


def target_sets(primed, f: SetMapping, plan: DyadicPlan) -> TargetSets:
    counts = compute_counts(primed, f)
    pruned, bad = prune(primed, counts, plan)
    return TargetSets(tuple(primed), pruned, bad, counts)


# --- the greedy embedding -------------------------------------------------

def run_algorithm1(pp: PaddedPattern, plan: DyadicPlan, pruned, f: SetMapping, primed=None) -> Embedding:
    """Place blocks in order, vertices by degree order, taking the smallest survivor.

    A candidate x in X_j for u is rejected by (a) if already used, by (b) if it
    lies in an image of an edge inside earlier blocks, and by (c) if
    f(phi(v) x) meets X_0 u ... u X_j for an earlier neighbour v. Raises
    AlgorithmFailure when nothing survives.
    """
    g = pp.base
    N = f.N
    phi = np.full(g.n, -1, dtype=np.int64)
    used = np.zeros(N, dtype=bool)
    later = np.zeros(N, dtype=bool)
    in_pools = np.zeros(N, dtype=bool)
    rank, block_of = plan.rank, plan.block_of
    closing = [[] for _ in plan.blocks]
    for e in g.edges:
        closing[max(block_of[e[0]], block_of[e[1]])].append(e)
    records: list[VertexTrace] = []
    hits: list[int] = []
    for j, (start, stop) in enumerate(plan.blocks):
        pool = np.asarray(pruned[j], dtype=np.int64)
        in_pools[pool] = True
        for pos in range(start, stop):
            u = plan.order[pos]
            rej_a = used[pool]
            rej_b = later[pool] & ~rej_a
            cand = pool[~(rej_a | rej_b)]
            earlier = sorted((v for v in g.neighbours[u] if rank[v] < pos), key=rank.__getitem__)
            killed = np.zeros(len(cand), dtype=bool)
            for v in earlier:
                live = np.flatnonzero(~killed)
                if live.size == 0:
                    break
                imgs = f.pair_images(int(phi[v]), cand[live])
                killed[live[in_pools[imgs].any(axis=1)]] = True
            survivors = cand[~killed]
            chosen = int(survivors[0]) if survivors.size else None
            records.append(VertexTrace(
                u, j, len(pool), int(rej_a.sum()), int(rej_b.sum()), int(killed.sum()),
                int(survivors.size), len(earlier), chosen,
            ))
            if chosen is None:
                raise AlgorithmFailure(j, u, RunTrace(tuple(records), tuple(hits)))
            phi[u] = chosen
            used[chosen] = True
        if closing[j]:
            ends = phi[np.asarray(closing[j], dtype=np.int64)]
            later[f.eval_many(np.sort(ends, axis=1)).ravel()] = True
        if primed is not None and j + 1 < len(plan.blocks):
            hits.append(int(later[primed[j + 1]].sum()))
    phi_t = tuple(int(x) for x in phi)
    return Embedding(phi_t, verify_clean(g, phi_t, f).clean, RunTrace(tuple(records), tuple(hits)))


def verify_clean(p: Pattern, phi, f: SetMapping) -> CleanVerdict:
    """Clean iff no edge image under f meets the image of phi."""
    phi = [int(x) for x in phi]
    if len(set(phi)) != len(phi):
        raise ValueError("phi is not injective")
    if p.m == 0:
        return CleanVerdict(True)
    host = {x: v for v, x in enumerate(phi)}
    ends = np.sort(np.asarray([[phi[v] for v in e] for e in p.edges], dtype=np.int64), axis=1)
    imgs = f.eval_many(ends)
    for e, img in zip(p.edges, imgs.tolist()):
        for z in img:
            if z in host:
                return CleanVerdict(False, (e, z))
    return CleanVerdict(True)


# --- pipeline -------------------------------------------------------------

@dataclass
class Report:
    N: int
    ell: int
    C: float
    seed: int
    success: bool = False
    retries: int = 0
    attempts_used: int = 0
    embedding: list | None = None
    rejections: dict = field(default_factory=lambda: {"a": 0, "b": 0, "c": 0})
    prop1_ok: bool | None = None
    prop2_max_ratio: float | None = None
    prop3_max_ratio: float | None = None
    m_padded: int = 0
    n_padded: int = 0
    T: int = 0
    well_loaded: int = 0
    attempts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def auto_mapping(p: Pattern, C: float, ell: int, seed: int) -> SetMapping:
    """Lazy uniform mapping on N = ceil(C * ell * m) host vertices."""
    N = math.ceil(C * ell * p.m)
    return gen_uniform_disjoint(N, 2, ell, derive_seed(seed, 0x6D6170), dense=False)


def _strip_isolated(p: Pattern) -> tuple[Pattern, list[int]]:
    kept = [v for v in range(p.n) if p.degrees[v] > 0]
    if len(kept) == p.n:
        return p, kept
    index = {v: i for i, v in enumerate(kept)}
    return Pattern(len(kept), tuple(tuple(index[v] for v in e) for e in p.edges)), kept


def _prop2_ratio(hits, primed) -> float | None:
    ratios = []
    for j, h in enumerate(hits):
        size = len(primed[j + 1])
        if size:
            ratios.append(9.0 * h / size)
        elif h:
            return None
    return max(ratios, default=0.0)


def _prop3_ratio(counts: Counts, plan: DyadicPlan) -> float:
    sizes = plan.sizes
    worst = 0.0
    for i in range(len(sizes)):
        for j in range(i, len(sizes)):
            bound = sizes[i] * sizes[j] ** 2 / (5.0 * plan.m)
            worst = max(worst, counts.pairs[i, j] / bound)
    return worst


def _place_isolated(phi_core, kept, p: Pattern, f: SetMapping, members) -> tuple[int, ...]:
    phi = [-1] * p.n
    for i, v in enumerate(kept):
        phi[v] = phi_core[i]
    loose = [v for v in range(p.n) if phi[v] < 0]
    if loose:
        blocked = np.zeros(f.N, dtype=bool)
        blocked[list(phi_core)] = True
        ends = np.sort(np.asarray([[phi[v] for v in e] for e in p.edges], dtype=np.int64), axis=1)
        blocked[f.eval_many(ends).ravel()] = True
        free = [int(x) for x in members if not blocked[x]]
        if len(free) < len(loose):
            raise HostTooSmall("no room for the isolated pattern vertices")
        for v, x in zip(loose, free):
            phi[v] = x
    return tuple(phi)


def prepare(p: Pattern):
    core, kept = _strip_isolated(p)
    pp = pad(core)
    return core, kept, pp, dyadic_plan(pp)


def embed_pipeline(p: Pattern, f: SetMapping | None, cfg: PipelineConfig) -> tuple[Embedding, Report]:
    """Find an embedding of p whose edge images avoid its vertex image.

    ``f=None`` builds a lazy uniform mapping with N = ceil(C * ell * m).
    Raises RetriesExhausted (carrying the report) when every attempt fails.
    """
    if f is None:
        f = auto_mapping(p, cfg.C, cfg.ell, cfg.seed)
    if f.k != 2 or f.a != 0:
        raise ValueError("the pipeline needs a graph mapping with disjoint images (k=2, a=0)")
    core, kept, pp, plan = prepare(p)
    X = well_loaded(f)
    report = Report(
        N=f.N, ell=f.ell, C=round(f.N / (f.ell * p.m), 6), seed=cfg.seed,
        m_padded=pp.m_padded, n_padded=pp.n_padded, T=pp.T, well_loaded=len(X),
    )
    for attempt in range(cfg.max_retries):
        report.attempts_used = attempt + 1
        sub = derive_seed(cfg.seed, attempt)
        primed = sample_partition(X, plan, sub)
        row = {"attempt": attempt, "outcome": None, "prop1_ok": check_size_property(primed, plan)}
        report.attempts.append(row)
        if cfg.enforce_size_property and not row["prop1_ok"]:
            row["outcome"] = "size_property"
            continue
        ts = target_sets(primed, f, plan)
        if cfg.diagnostics:
            row["prop3_max_ratio"] = _prop3_ratio(ts.counts, plan)
        try:
            emb = run_algorithm1(pp, plan, ts.pruned, f, primed if cfg.diagnostics else None)
        except AlgorithmFailure as exc:
            row.update(outcome="algorithm_failure", block=exc.block, vertex=exc.vertex)
            if cfg.diagnostics:
                row["prop2_max_ratio"] = _prop2_ratio(exc.trace.later_hits, primed)
            continue
        if cfg.diagnostics:
            row["prop2_max_ratio"] = _prop2_ratio(emb.trace.later_hits, primed)
        phi = _place_isolated(emb.phi[: core.n], kept, p, f, X.members)
        verdict = verify_clean(p, phi, f)
        if not verdict:
            row["outcome"] = "dirty"
            continue
        row["outcome"] = "success"
        report.success = True
        report.retries = attempt
        report.embedding = list(phi)
        report.rejections = emb.trace.totals()
        report.prop1_ok = row["prop1_ok"]
        report.prop2_max_ratio = row.get("prop2_max_ratio")
        report.prop3_max_ratio = row.get("prop3_max_ratio")
        return Embedding(phi, True, emb.trace), report
    report.retries = cfg.max_retries
    last = report.attempts[-1]
    report.prop1_ok = last["prop1_ok"]
    report.prop2_max_ratio = last.get("prop2_max_ratio")
    report.prop3_max_ratio = last.get("prop3_max_ratio")
    raise RetriesExhausted(report)


@dataclass
class PropertyTable:
    samples: int
    prop1_rate: float
    prop2_rate: float
    prop3_rate: float
    algorithm_rate: float
    rows: list

    def to_dict(self) -> dict:
        return asdict(self)


def measure_properties(p: Pattern, f: SetMapping | None, cfg: PipelineConfig, samples: int = 200) -> PropertyTable:
    """Empirical satisfaction rates of the three pool properties.

    Property (2) is evaluated only along the pruned chain actually fed to the
    greedy embedding in each sample.
    """
    if f is None:
        f = auto_mapping(p, cfg.C, cfg.ell, cfg.seed)
    _, _, pp, plan = prepare(p)
    X = well_loaded(f)
    rows = []
    for s in range(samples):
        primed = sample_partition(X, plan, derive_seed(cfg.seed, 0x70726F70, s))
        ts = target_sets(primed, f, plan)
        try:
            emb = run_algorithm1(pp, plan, ts.pruned, f, primed)
            hits, ok = emb.trace.later_hits, True
        except AlgorithmFailure as exc:
            hits, ok = exc.trace.later_hits, False
        ratio2 = _prop2_ratio(hits, primed)
        ratio3 = _prop3_ratio(ts.counts, plan)
        rows.append({
            "sample": s,
            "prop1": check_size_property(primed, plan),
            "prop2_max_ratio": ratio2,
            "prop3_max_ratio": ratio3,
            "algorithm_ok": ok,
            "pool_sizes": [len(x) for x in primed],
        })
    n = max(samples, 1)
    return PropertyTable(
        samples=samples,
        prop1_rate=sum(r["prop1"] for r in rows) / n,
        prop2_rate=sum(r["prop2_max_ratio"] is not None and r["prop2_max_ratio"] <= 1.0 for r in rows) / n,
        prop3_rate=sum(r["prop3_max_ratio"] <= 1.0 for r in rows) / n,
        algorithm_rate=sum(r["algorithm_ok"] for r in rows) / n,
        rows=rows,
    )
