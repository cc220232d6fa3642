"""Named example graphs and exhaustive small-graph generators."""

from __future__ import annotations

import random
from itertools import combinations_with_replacement, permutations, product
from typing import Iterator

import numpy as np

from .graph import Edge, MultiGraph, is_strongly_connected


# ---------------------------------------------------------------------------
# Named graphs

def bouquet(D: int) -> MultiGraph:
    """M_D: one state with D loops."""
    return MultiGraph(("0",), tuple(Edge(f"e{k}", "0", "0") for k in range(D)))


def cycle(n: int) -> MultiGraph:
    st = tuple(str(i) for i in range(n))
    return MultiGraph(st, tuple(Edge(f"e{i}", st[i], st[(i + 1) % n]) for i in range(n)))


def cerny(n: int) -> MultiGraph:
    """Cerny automaton: a rotates, b moves 0 to 1 and fixes everything else."""
    st = tuple(str(i) for i in range(n))
    edges = []
    for i in range(n):
        edges.append(Edge(f"a{i}", st[i], st[(i + 1) % n]))
        edges.append(Edge(f"b{i}", st[i], st[1] if i == 0 else st[i]))
    return MultiGraph(st, tuple(edges))


def g_merge() -> MultiGraph:
    return MultiGraph(("1", "2"), (
        Edge("e1", "1", "1"), Edge("e2", "1", "2"), Edge("e3", "2", "1"), Edge("e4", "2", "2"),
    ))


def g_ab() -> MultiGraph:
    """0 -> 1, 0 -> 2, and double edges back to 0 from 1 and 2."""
    return MultiGraph(("0", "1", "2"), (
        Edge("e1", "0", "1"), Edge("e2", "0", "2"),
        Edge("e3", "1", "0"), Edge("e4", "1", "0"),
        Edge("e5", "2", "0"), Edge("e6", "2", "0"),
    ))


def cycle_of_bunches(degrees) -> MultiGraph:
    n = len(degrees)
    st = tuple(str(i) for i in range(n))
    return MultiGraph(st, tuple(
        Edge(f"e{i}_{k}", st[i], st[(i + 1) % n]) for i, d in enumerate(degrees) for k in range(d)
    ))


def not_almost_bunchy() -> MultiGraph:
    """a, b -> {c, d} and c, d -> {a, b}."""
    edges = []
    for s, targets in (("a", "cd"), ("b", "cd"), ("c", "ab"), ("d", "ab")):
        for t in targets:
            edges.append(Edge(f"{s}{t}", s, t))
    return MultiGraph(("a", "b", "c", "d"), tuple(edges))


def named_graphs() -> dict[str, MultiGraph]:
    out = {
        "M1": bouquet(1), "M2": bouquet(2), "M3": bouquet(3),
        "C2": cycle(2), "C3": cycle(3), "C4": cycle(4),
        "G_merge": g_merge(), "G_ab": g_ab(),
        "O22": cycle_of_bunches((2, 2)), "O23": cycle_of_bunches((2, 3)),
        "O2323": cycle_of_bunches((2, 3, 2, 3)),
        "not_almost_bunchy": not_almost_bunchy(),
    }
    for n in (3, 4, 5, 6):
        out[f"Cerny{n}"] = cerny(n)
    return out


# ---------------------------------------------------------------------------
# Exhaustive generation up to isomorphism

def _rows(n: int, min_out: int, max_out: int, exact: int | None) -> np.ndarray:
    sums = [exact] if exact is not None else range(min_out, max_out + 1)
    rows = []
    for s in sums:
        for combo in combinations_with_replacement(range(n), s):
            r = [0] * n
            for j in combo:
                r[j] += 1
            rows.append(r)
    rows.sort(reverse=True)
    return np.array(rows, dtype=np.int64)


def _iter_canonical(n: int, rows: np.ndarray, chunk: int = 1 << 20) -> Iterator[np.ndarray]:
    """Yield batches of canonical count matrices (N, n, n).

    A matrix is kept when its states are sorted by nonincreasing in-degree
    and its row-index code is maximal among relabelings that keep that
    order.
    """
    R = len(rows)
    index = {tuple(r): k for k, r in enumerate(rows.tolist())}
    perms = np.array(list(permutations(range(n))), dtype=np.int64)
    colperm = np.array([[index[tuple(r[j] for j in p)] for r in rows.tolist()] for p in perms.tolist()], dtype=np.int64)
    weights = R ** np.arange(n - 1, -1, -1, dtype=np.int64)
    total = R ** n
    small = rows.astype(np.int16)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        ids = (codes[:, None] // weights[None, :]) % R
        indeg = small[ids[:, 0]].copy()
        for i in range(1, n):
            indeg += small[ids[:, i]]
        keep = np.all(indeg[:, :-1] >= indeg[:, 1:], axis=1)
        ids, indeg, codes = ids[keep], indeg[keep], codes[keep]
        mats = rows[ids]
        ok = np.ones(len(ids), dtype=bool)
        for p_idx, p in enumerate(perms):
            if p_idx == 0:
                continue  # identity
            valid = np.all(indeg[:, p] == indeg, axis=1)
            if not valid.any():
                continue
            new_ids = colperm[p_idx][ids[:, p]]
            new_codes = new_ids @ weights
            ok &= ~(valid & (new_codes > codes))
        if ok.any():
            yield mats[ok]


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.matmul(a.astype(np.int32), b.astype(np.int32)) > 0)


def strongly_connected_mask(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[1]
    reach = (mats > 0) | np.eye(n, dtype=bool)[None]
    steps = 1
    while steps < n:
        reach = _bool_matmul(reach, reach)
        steps *= 2
    return reach.all(axis=(1, 2))


def primitive_mask(mats: np.ndarray) -> np.ndarray:
    """Aperiodic and strongly connected: some power has all entries positive."""
    n = mats.shape[1]
    k = (n - 1) ** 2 + 1
    base = mats > 0
    result = None
    power = base
    while k:
        if k & 1:
            result = power if result is None else _bool_matmul(result, power)
        k >>= 1
        if k:
            power = _bool_matmul(power, power)
    return result.all(axis=(1, 2))


def count_matrices(n: int, *, degree: int | None = None, max_out: int = 3, min_out: int = 1,
                   strongly_connected: bool = True, aperiodic: bool | None = None) -> np.ndarray:
    """All count matrices on n states up to isomorphism, as an (N, n, n) array.

    ``degree`` fixes a constant out-degree; otherwise out-degrees range over
    ``min_out..max_out``.  ``aperiodic=True`` keeps primitive matrices only.
    """
    rows = _rows(n, min_out, max_out, degree)
    batches = []
    for mats in _iter_canonical(n, rows):
        mask = strongly_connected_mask(mats) if strongly_connected or aperiodic else np.ones(len(mats), bool)
        if aperiodic:
            mask &= primitive_mask(mats)
        batches.append(mats[mask])
    if not batches:
        return np.zeros((0, n, n), dtype=np.int64)
    return np.concatenate(batches)


def canonical_codes(mats: np.ndarray) -> np.ndarray:
    """Isomorphism-invariant integer code per matrix: the largest row-major
    code over all relabelings.  Entries must be below 8."""
    n = mats.shape[1]
    weights = 8 ** np.arange(n * n - 1, -1, -1, dtype=np.int64)
    best = np.zeros(len(mats), dtype=np.int64)
    for p in permutations(range(n)):
        p = list(p)
        codes = mats[:, p][:, :, p].reshape(len(mats), -1) @ weights
        best = np.maximum(best, codes)
    return best


def _compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (n,)
        return
    for first in range(1, n - parts + 2):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def layered_matrices(n: int, max_out: int = 3) -> np.ndarray:
    """Strongly connected graphs on n states, up to isomorphism, whose states
    split into p >= 2 cyclically ordered layers of constant out-degree with
    every edge going to the next layer, and whose out-degree is not constant.

    These are exactly the graphs with M(G) a cycle of bunches of length at
    least 2 and non-constant out-degree.
    """
    found: dict[int, np.ndarray] = {}
    for p in range(2, n + 1):
        for sizes in _compositions(n, p):
            starts = [sum(sizes[:k]) for k in range(p)]
            for degrees in product(range(1, max_out + 1), repeat=p):
                if len(set(degrees)) == 1:
                    continue
                per_state = []
                for k in range(p):
                    nxt = (k + 1) % p
                    options = []
                    for combo in combinations_with_replacement(range(sizes[nxt]), degrees[k]):
                        row = [0] * n
                        for j in combo:
                            row[starts[nxt] + j] += 1
                        options.append(row)
                    per_state.extend([options] * sizes[k])
                mats = np.array([list(rows) for rows in product(*per_state)], dtype=np.int64)
                mats = mats[strongly_connected_mask(mats)]
                if not len(mats):
                    continue
                codes = canonical_codes(mats)
                for code, m in zip(codes.tolist(), mats):
                    found.setdefault(code, m)
    if not found:
        return np.zeros((0, n, n), dtype=np.int64)
    return np.stack([found[c] for c in sorted(found)])


def graphs_from_matrices(mats: np.ndarray) -> Iterator[MultiGraph]:
    for m in mats:
        yield MultiGraph.from_counts(m.tolist())


def small_graphs(max_states: int = 3, max_out: int = 3, strongly_connected: bool = False) -> list[MultiGraph]:
    """Every sink-free graph with at most ``max_states`` states, up to isomorphism."""
    out = []
    for n in range(1, max_states + 1):
        out.extend(graphs_from_matrices(count_matrices(n, max_out=max_out, strongly_connected=strongly_connected)))
    return out


def random_strongly_connected(rng: random.Random, n: int, max_out: int = 3, extra: float = 0.5) -> MultiGraph:
    """A random strongly connected graph: a Hamiltonian cycle plus random edges."""
    order = list(range(n))
    rng.shuffle(order)
    counts = [[0] * n for _ in range(n)]
    for a, b in zip(order, order[1:] + order[:1]):
        counts[a][b] += 1
    for i in range(n):
        target = rng.randint(1, max_out)
        while sum(counts[i]) < target:
            counts[i][rng.randrange(n)] += 1
    G = MultiGraph.from_counts(counts)
    assert is_strongly_connected(G)
    return G
