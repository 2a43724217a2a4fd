"""Keyed 64-bit mixing used for lazy mappings and seed splitting.

The scalar kernels are compiled with numba so the same code path serves
single evaluations, batched evaluations and full load scans.
"""

from __future__ import annotations

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_GOLDEN_U64 = np.uint64(GOLDEN)
_INV_2_53 = 1.0 / 9007199254740992.0

# Mapping kinds understood by the lazy kernel.
KIND_DISJOINT = 0
KIND_INCIDENT = 1
REDUCED = 2


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a trial/attempt path; independent of evaluation order."""
    h = mix64(seed ^ GOLDEN)
    for p in path:
        h = mix64(h ^ mix64((p + 1) * GOLDEN))
    return h


def parse_seed(text: str | int) -> int:
    """Accept a decimal or 0x-hex 64-bit unsigned seed."""
    if isinstance(text, int):
        value = text
    else:
        value = int(text.strip(), 0)
    if not 0 <= value <= MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


@nb.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def _below(h, m):
    # floor(u * m) for u uniform on [0, 1) with 53 bits
    return np.int64(np.float64(h >> np.uint64(11)) * _INV_2_53 * m)


@nb.njit(inline="always")
def _insert_sorted(buf, size, value):
    i = size
    while i > 0 and buf[i - 1] > value:
        buf[i] = buf[i - 1]
        i -= 1
    buf[i] = value


@nb.njit(inline="always")
def _key_step(h, v):
    return _mix(h + np.uint64(v + 1) * _GOLDEN_U64)


@nb.njit(inline="always")
def _edge_key(seed, edge):
    h = _mix(seed ^ _GOLDEN_U64)
    for t in range(edge.shape[0]):
        h = _key_step(h, edge[t])
    return h


@nb.njit(inline="always")
def _draw_avoiding(h, N, excl, nexcl, count, out, offset):
    """Draw `count` distinct values from [0, N) minus the sorted excl[:nexcl]."""
    for t in range(count):
        h = _mix(h + np.uint64(t + 1))
        r = _below(h, N - nexcl)
        for s in range(nexcl):
            if r >= excl[s]:
                r += 1
        out[offset + t] = r
        _insert_sorted(excl, nexcl, r)
        nexcl += 1
    return h


@nb.njit(inline="always")
def _image_into(kind, seed, N, ell, edge, out, excl):
    """Write the image of a sorted edge into out[:ell_out] (sorted)."""
    _image_from_key(kind, _edge_key(seed, edge), N, ell, edge, out, excl)


@nb.njit(inline="always")
def _image_from_key(kind, h, N, ell, edge, out, excl):
    k = edge.shape[0]
    base = kind & 1
    for t in range(k):
        excl[t] = edge[t]
    if base == KIND_DISJOINT:
        _draw_avoiding(h, N, excl, k, ell, out, 0)
        n_out = ell
    else:
        c = _below(_mix(h + np.uint64(0xA5A5)), k)
        out[0] = edge[c]
        _draw_avoiding(h, N, excl, k, ell - 1, out, 1)
        n_out = ell
    # sort the (tiny) image
    for i in range(1, n_out):
        v = out[i]
        j = i
        while j > 0 and out[j - 1] > v:
            out[j] = out[j - 1]
            j -= 1
        out[j] = v
    if kind & REDUCED:
        for i in range(n_out):
            inside = False
            for t in range(k):
                if out[i] == edge[t]:
                    inside = True
            if not inside:
                out[0] = out[i]
                break


@nb.njit(cache=True)
def lazy_images(kind, seed, N, ell, edges):
    """Images of many sorted edges; returns an (M, ell_out) array."""
    M, k = edges.shape
    ell_out = 1 if kind & REDUCED else ell
    res = np.empty((M, ell_out), np.int64)
    out = np.empty(ell, np.int64)
    excl = np.empty(k + ell, np.int64)
    for i in range(M):
        _image_into(kind, seed, N, ell, edges[i], out, excl)
        for t in range(ell_out):
            res[i, t] = out[t]
    return res


@nb.njit(cache=True)
def _disjoint_loads(seed, N, ell):
    # scalar specialisation of _image_from_key for KIND_DISJOINT, k=2, ell<=2
    loads = np.zeros(N, np.int64)
    h0 = _mix(seed ^ _GOLDEN_U64)
    for u in range(N):
        hu = _key_step(h0, u)
        for v in range(u + 1, N):
            h = _mix(_key_step(hu, v) + np.uint64(1))
            r = _below(h, N - 2)
            r += r >= u
            r += r >= v
            loads[r] += 1
            if ell == 2:
                h = _mix(h + np.uint64(2))
                loads[_shift3(_below(h, N - 3), r, u, v)] += 1
    return loads


@nb.njit(inline="always")
def _shift3(q, x, y, z):
    # sort three distinct values and shift q past them
    if x > y:
        x, y = y, x
    if y > z:
        y, z = z, y
    if x > y:
        x, y = y, x
    q += q >= x
    q += q >= y
    q += q >= z
    return q


@nb.njit(cache=True)
def lazy_loads(kind, seed, N, ell):
    """Per-vertex count of graph edges whose image contains the vertex."""
    if kind == KIND_DISJOINT and ell <= 2:
        return _disjoint_loads(seed, N, ell)
    ell_out = 1 if kind & REDUCED else ell
    loads = np.zeros(N, np.int64)
    out = np.empty(ell, np.int64)
    excl = np.empty(2 + ell, np.int64)
    edge = np.empty(2, np.int64)
    h0 = _mix(seed ^ _GOLDEN_U64)
    for u in range(N):
        edge[0] = u
        hu = _key_step(h0, u)
        for v in range(u + 1, N):
            edge[1] = v
            _image_from_key(kind, _key_step(hu, v), N, ell, edge, out, excl)
            for t in range(ell_out):
                loads[out[t]] += 1
    return loads
