"""Local-lemma embedding of bounded-degree hypergraphs by Moser-Tardos resampling."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ._prf import derive_seed
from .graphs import Pattern
from .mappings import SetMapping, gen_uniform_disjoint


class BudgetExhausted(RuntimeError):
    def __init__(self, iterations: int, last_event: "Event", result: "LllResult"):
        super().__init__(f"still violating {last_event} after {iterations} resamples")
        self.iterations = iterations
        self.last_event = last_event
        self.result = result


@dataclass(frozen=True)
class Event:
    """A: x_i == x_j for edge=(i, j). B: x_vertex lies in f of the image of edge."""

    kind: str
    edge: tuple[int, ...]
    vertex: int | None = None

    @property
    def variables(self) -> tuple[int, ...]:
        if self.kind == "A":
            return self.edge
        return tuple(sorted(self.edge + (self.vertex,)))

    def __str__(self):
        if self.kind == "A":
            return f"A{self.edge}"
        return f"B({self.edge}, {self.vertex})"


@dataclass(frozen=True)
class LllProblem:
    pattern: Pattern
    f: SetMapping
    N: int

    def __post_init__(self):
        if self.f.k != self.pattern.k or self.f.N != self.N:
            raise ValueError("mapping arity/host size does not match the problem")
        if self.f.a != 0:
            raise ValueError("the local-lemma embedder needs disjoint images (a=0)")

    @property
    def event_count(self) -> int:
        p = self.pattern
        return math.comb(p.n, 2) + p.m * (p.n - p.k)


@dataclass
class LllResult:
    assignment: tuple[int, ...]
    resamples: int
    histogram: dict = field(default_factory=dict)
    history: list | None = None


def required_host_size(p: Pattern) -> int:
    if p.isolated():
        raise ValueError(f"pattern has isolated vertices {p.isolated()}")
    return 10 * p.k ** 2 * p.n * p.max_degree


def lll_condition(p: Pattern, N: int) -> tuple[float, int, bool]:
    """(p, d, e*p*(d+1) <= 1) with p = k/N and d = 3*k*Delta*n."""
    p_val = p.k / N
    d_val = 3 * p.k * p.max_degree * p.n
    return p_val, d_val, math.e * p_val * (d_val + 1) <= 1


def make_problem(p: Pattern, N: int | None = None, seed: int = 0, f: SetMapping | None = None) -> LllProblem:
    """Problem with a random lazy mapping whose images are host k-sets."""
    if N is None:
        N = f.N if f is not None else required_host_size(p)
    if f is None:
        f = gen_uniform_disjoint(N, p.k, p.k, derive_seed(seed, 0x6C6C6C), dense=False)
    return LllProblem(p, f, N)


def find_violated_event(x, problem: LllProblem) -> Event | None:
    """First violated event: A-events by (i, j), then B-events by (edge, i)."""
    x = [int(v) for v in x]
    seen: dict[int, int] = {}
    first_a = None
    for j, val in enumerate(x):
        i = seen.get(val)
        if i is None:
            seen[val] = j
        elif first_a is None or (i, j) < first_a:
            first_a = (i, j)
    if first_a is not None:
        return Event("A", first_a)
    p = problem.pattern
    if p.m == 0:
        return None
    ends = np.sort(np.asarray([[x[v] for v in e] for e in p.edges], dtype=np.int64), axis=1)
    imgs = problem.f.eval_many(ends)
    for e, img in zip(p.edges, imgs.tolist()):
        hit = [seen[z] for z in img if z in seen and seen[z] not in e]
        if hit:
            return Event("B", e, min(hit))
    return None


def moser_tardos(problem: LllProblem, seed: int, max_resamples: int | None = None,
                 record_history: bool = False) -> LllResult:
    """Resample the variables of the first violated event until none remains."""
    if max_resamples is None:
        max_resamples = 100 * problem.event_count
    rng = np.random.Generator(np.random.PCG64(seed))
    N = problem.N
    x = rng.integers(0, N, size=problem.pattern.n)
    hist: Counter = Counter()
    history = [] if record_history else None
    for it in range(max_resamples + 1):
        ev = find_violated_event(x, problem)
        if ev is None:
            return LllResult(tuple(int(v) for v in x), it, dict(sorted(hist.items())), history)
        if it == max_resamples:
            result = LllResult(tuple(int(v) for v in x), it, dict(sorted(hist.items())), history)
            raise BudgetExhausted(it, ev, result)
        hist[ev.kind] += 1
        before = x.copy() if record_history else None
        vars_ = list(ev.variables)
        x[vars_] = rng.integers(0, N, size=len(vars_))
        if record_history:
            history.append((ev, tuple(before.tolist()), tuple(x.tolist())))
    raise AssertionError("unreachable")
