"""Fiber products, stability relations, synchronizers and minimal images."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .graph import Edge, GraphError, MultiGraph, principal_components, induced_principal_subgraph
from .homomorphism import GraphHom, HomomorphismError, Partition, is_right_resolver, restrict


class NotSynchronizingError(ValueError):
    pass


class SizeGuardError(ValueError):
    pass


def _as_edge_indices(phi: GraphHom, word: Sequence[str]) -> list[int]:
    H = phi.codomain
    try:
        return [H.edge_index[a] for a in word]
    except KeyError as exc:
        raise HomomorphismError(f"unknown codomain edge {exc.args[0]!r}") from None


def transition(phi: GraphHom, state: str, word: Sequence[str]) -> str:
    """Terminal state of the lift of ``word`` starting at ``state``."""
    G = phi.domain
    i = G.state_index[state]
    step = phi.step
    for a in _as_edge_indices(phi, word):
        nxt = step[i].get(a)
        if nxt is None:
            raise HomomorphismError(f"word does not lift from {G.states[i]!r} at edge {phi.codomain.edges[a].id!r}")
        i = nxt
    return G.states[i]


def image_of(phi: GraphHom, subset: Sequence[int], word: Sequence[int]) -> frozenset[int]:
    """``subset · word`` on state indices; ``word`` holds codomain edge indices."""
    step = phi.step
    cur = set(subset)
    for a in word:
        cur = {step[i][a] for i in cur}
    return frozenset(cur)


# ---------------------------------------------------------------------------
# Fiber products

@dataclass(frozen=True)
class FiberProduct:
    product: MultiGraph
    proj1: GraphHom
    proj2: GraphHom
    to_base: GraphHom


def pair_name(a: str, b: str) -> str:
    return f"({a},{b})"


def fiber_product(phi1: GraphHom, phi2: GraphHom) -> FiberProduct:
    """G1 ×_{phi1,phi2} G2, with both projections and the map to the base."""
    if phi1.codomain != phi2.codomain:
        raise HomomorphismError("fiber product needs a common codomain")
    G1, G2, K = phi1.domain, phi2.domain, phi1.codomain
    states = []
    pair_index: dict[tuple[int, int], int] = {}
    for i in range(G1.n):
        for j in phi2.fibers[phi1.state_map[i]]:
            pair_index[(i, j)] = len(states)
            states.append((i, j))
    by_image2: dict[tuple[int, int], list[int]] = {}
    for j in range(G2.n):
        for k in G2.out_edges[j]:
            by_image2.setdefault((j, phi2.edge_map[k]), []).append(k)
    edges = []
    p1e, p2e, base_e = [], [], []
    for (i, j) in states:
        for k1 in G1.out_edges[i]:
            a = phi1.edge_map[k1]
            for k2 in by_image2.get((j, a), ()):
                src = pair_name(G1.states[i], G2.states[j])
                dst = pair_name(G1.states[G1.dst[k1]], G2.states[G2.dst[k2]])
                edges.append(Edge(pair_name(G1.edges[k1].id, G2.edges[k2].id), src, dst))
                p1e.append(k1)
                p2e.append(k2)
                base_e.append(a)
    P = MultiGraph(tuple(pair_name(G1.states[i], G2.states[j]) for i, j in states), tuple(edges))
    proj1 = GraphHom(P, G1, tuple(i for i, _ in states), tuple(p1e))
    proj2 = GraphHom(P, G2, tuple(j for _, j in states), tuple(p2e))
    to_base = GraphHom(P, K, tuple(phi1.state_map[i] for i, _ in states), tuple(base_e))
    return FiberProduct(P, proj1, proj2, to_base)


# ---------------------------------------------------------------------------
# Stability (Algorithm 2), on the self fiber product encoded by integer pairs

class _PairGraph:
    """Pairs (i, j) with equal image, i <= j, and their single-letter moves."""

    def __init__(self, phi: GraphHom):
        G = phi.domain
        n = G.n
        self.n = n
        step = phi.step
        self.nodes = [(i, j) for fib in phi.fibers for x, i in enumerate(fib) for j in fib[x:]]
        self.index = {p: k for k, p in enumerate(self.nodes)}
        succ: list[list[int]] = []
        for (i, j) in self.nodes:
            out = []
            for a, ti in step[i].items():
                tj = step[j][a]
                out.append(self.index[(ti, tj) if ti <= tj else (tj, ti)])
            succ.append(out)
        self.succ = succ
        pred: list[list[int]] = [[] for _ in self.nodes]
        for u, out in enumerate(succ):
            for v in out:
                pred[v].append(u)
        self.pred = pred

    def backward_closure(self, seeds: list[int]) -> list[bool]:
        seen = [False] * len(self.nodes)
        queue = deque(seeds)
        for s in seeds:
            seen[s] = True
        while queue:
            v = queue.popleft()
            for u in self.pred[v]:
                if not seen[u]:
                    seen[u] = True
                    queue.append(u)
        return seen


def stable_pairs(phi: GraphHom) -> set[tuple[int, int]]:
    """Stable pairs (i, j), i < j, by the two reachability passes."""
    cached = phi.__dict__.get("_stable_pairs")
    if cached is not None:
        return set(cached)
    pg = _PairGraph(phi)
    diag = [k for k, (i, j) in enumerate(pg.nodes) if i == j]
    reaches_diag = pg.backward_closure(diag)
    unsync = [k for k, r in enumerate(reaches_diag) if not r]
    reaches_unsync = pg.backward_closure(unsync)
    pairs = frozenset(pg.nodes[k] for k, r in enumerate(reaches_unsync) if not r and pg.nodes[k][0] != pg.nodes[k][1])
    phi.__dict__["_stable_pairs"] = pairs
    return set(pairs)


def stability_relation(phi: GraphHom) -> Partition:
    """The stability relation of a right-resolver, as a Partition.

    Raises AssertionError if the computed pair set is not transitive.
    """
    G = phi.domain
    pairs = stable_pairs(phi)
    parent = list(range(G.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in pairs:
        parent[find(i)] = find(j)
    labels = [find(i) for i in range(G.n)]
    p = Partition.from_labels(G, labels)
    for block in p.block_indices:
        for x, i in enumerate(block):
            for j in block[x + 1:]:
                if (i, j) not in pairs:
                    raise AssertionError(f"stable pairs not transitive at {G.states[i]!r}, {G.states[j]!r}")
    return p


def is_synchronizing(phi: GraphHom) -> bool:
    return stability_relation(phi).labels == phi.fiber_partition().labels


def has_trivial_stability(phi: GraphHom) -> bool:
    return not stable_pairs(phi)


def _merge_word(phi: GraphHom, i: int, j: int) -> list[int] | None:
    """Shortest codomain word taking i and j to a common state."""
    step = phi.step
    start = (i, j) if i <= j else (j, i)
    prev: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur[0] == cur[1]:
            word = []
            while prev[cur] is not None:
                cur, a = prev[cur]
                word.append(a)
            return word[::-1]
        a_i = step[cur[0]]
        for a in sorted(a_i):
            x, y = a_i[a], step[cur[1]][a]
            nxt = (x, y) if x <= y else (y, x)
            if nxt not in prev:
                prev[nxt] = (cur, a)
                queue.append(nxt)
    return None


def synchronizing_word(phi: GraphHom, base_state: str) -> list[str]:
    """A word u from ``base_state`` with |fiber · u| = 1 (greedy pair merging)."""
    if not is_synchronizing(phi):
        raise NotSynchronizingError("map is not synchronizing")
    H = phi.codomain
    I = H.state_index[base_state]
    current = sorted(phi.fibers[I])
    word: list[int] = []
    while len(current) > 1:
        u = _merge_word(phi, current[0], current[1])
        if u is None:
            raise NotSynchronizingError("pair cannot be merged")
        word.extend(u)
        current = sorted(image_of(phi, current, u))
    return [H.edges[a].id for a in word]


# ---------------------------------------------------------------------------
# Minimal images (subset oracle)

@dataclass(frozen=True)
class ImageSet:
    base_state: str
    word: tuple[str, ...]
    image: frozenset[str]

    def to_json(self) -> dict:
        return {"base_state": self.base_state, "word": list(self.word), "image": sorted(self.image)}


def minimal_images_bruteforce(phi: GraphHom, base_state: str, size_guard: int = 12) -> list[ImageSet]:
    """Every minimal image reachable from the fiber over ``base_state``.

    An image U is minimal when no word shrinks it; found by subset BFS
    followed by a minimum-reachable-size pass.  Each result carries the
    BFS witness word from the full fiber.
    """
    G, H = phi.domain, phi.codomain
    I = H.state_index[base_state]
    fiber = frozenset(phi.fibers[I])
    if len(fiber) > size_guard:
        raise SizeGuardError(f"fiber of size {len(fiber)} exceeds guard {size_guard}")
    step = phi.step
    letters = H.out_edges
    start = (I, fiber)
    prev: dict = {start: None}
    order = [start]
    queue = deque([start])
    while queue:
        node = queue.popleft()
        J, S = node
        for a in letters[J]:
            nxt = (H.dst[a], frozenset(step[x][a] for x in S))
            if nxt not in prev:
                prev[nxt] = (node, a)
                order.append(nxt)
                queue.append(nxt)
    succ = {node: [(H.dst[a], frozenset(step[x][a] for x in node[1])) for a in letters[node[0]]] for node in order}
    # min reachable size by fixpoint iteration (sizes only decrease)
    best = {node: len(node[1]) for node in order}
    changed = True
    while changed:
        changed = False
        for node in order:
            m = min((best[v] for v in succ[node]), default=best[node])
            if m < best[node]:
                best[node] = m
                changed = True
    out = []
    for node in order:
        if best[node] == len(node[1]):
            word = []
            cur = node
            while prev[cur] is not None:
                cur, a = prev[cur]
                word.append(H.edges[a].id)
            out.append(ImageSet(H.states[node[0]], tuple(word[::-1]), frozenset(G.states[x] for x in node[1])))
    return out


# ---------------------------------------------------------------------------
# Common synchronizing extension

def common_sync_extension(psi1: GraphHom, psi2: GraphHom) -> tuple[MultiGraph, GraphHom, GraphHom]:
    """A graph C with synchronizers onto both domains, commuting over the base."""
    for psi in (psi1, psi2):
        if not is_right_resolver(psi) or not is_synchronizing(psi):
            raise NotSynchronizingError("both maps must be synchronizing right-resolvers")
    fp = fiber_product(psi1, psi2)
    P = fp.product
    for comp in principal_components(P):
        C = induced_principal_subgraph(P, comp)
        r1, r2 = restrict(fp.proj1, C), restrict(fp.proj2, C)
        if set(r1.state_map) == set(range(psi1.domain.n)) and set(r2.state_map) == set(range(psi2.domain.n)):
            if not (is_right_resolver(r1) and is_right_resolver(r2)):
                continue
            if not (is_synchronizing(r1) and is_synchronizing(r2)):
                raise NotSynchronizingError("restricted projections are not synchronizing")
            return C, r1, r2
    raise GraphError("no principal component of the fiber product projects onto both graphs")
