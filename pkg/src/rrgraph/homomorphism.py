"""Graph homomorphisms, right-resolvers, minimal factors and quotients."""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from typing import Iterable, Iterator, Mapping, Sequence

from .graph import Edge, GraphError, GraphFormatError, MultiGraph


class HomomorphismError(ValueError):
    pass


@dataclass(frozen=True)
class GraphHom:
    """A graph homomorphism stored as index maps into the codomain."""

    domain: MultiGraph
    codomain: MultiGraph
    state_map: tuple[int, ...]
    edge_map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "state_map", tuple(self.state_map))
        object.__setattr__(self, "edge_map", tuple(self.edge_map))
        G, H = self.domain, self.codomain
        if len(self.state_map) != G.n or len(self.edge_map) != G.m:
            raise HomomorphismError("map sizes do not match the domain")
        hn, hm = len(H.states), len(H.edges)
        if any(not 0 <= x < hn for x in self.state_map) or any(not 0 <= x < hm for x in self.edge_map):
            raise HomomorphismError("map points outside the codomain")
        sm, hsrc, hdst = self.state_map, H.src, H.dst
        for k, (f, s, t) in enumerate(zip(self.edge_map, G.src, G.dst)):
            if hsrc[f] != sm[s] or hdst[f] != sm[t]:
                raise HomomorphismError(
                    f"edge {G.edges[k].id!r} -> {H.edges[f].id!r} does not commute with source/target"
                )

    @classmethod
    def from_maps(cls, domain: MultiGraph, codomain: MultiGraph,
                  state_map: Mapping[str, str], edge_map: Mapping[str, str]) -> "GraphHom":
        try:
            sm = tuple(codomain.state_index[state_map[s]] for s in domain.states)
            em = tuple(codomain.edge_index[edge_map[e.id]] for e in domain.edges)
        except KeyError as exc:
            raise HomomorphismError(f"incomplete or unknown id in map: {exc.args[0]!r}") from None
        return cls(domain, codomain, sm, em)

    @classmethod
    def identity(cls, G: MultiGraph) -> "GraphHom":
        return cls(G, G, tuple(range(G.n)), tuple(range(G.m)))

    def state(self, state_id: str) -> str:
        return self.codomain.states[self.state_map[self.domain.state_index[state_id]]]

    def edge(self, edge_id: str) -> str:
        return self.codomain.edges[self.edge_map[self.domain.edge_index[edge_id]]].id

    def state_dict(self) -> dict[str, str]:
        return {s: self.codomain.states[x] for s, x in zip(self.domain.states, self.state_map)}

    def edge_dict(self) -> dict[str, str]:
        return {e.id: self.codomain.edges[x].id for e, x in zip(self.domain.edges, self.edge_map)}

    @cached_property
    def lift(self) -> tuple[dict[int, int], ...]:
        """Per domain state: codomain edge index -> the domain out-edge over it.

        Only meaningful for right-resolving maps, where it is a bijection.
        """
        table = []
        for out in self.domain.out_edges:
            table.append({self.edge_map[k]: k for k in out})
        return tuple(table)

    @cached_property
    def step(self) -> tuple[dict[int, int], ...]:
        """Per domain state: codomain edge index -> target state index."""
        dst = self.domain.dst
        return tuple({a: dst[k] for a, k in lifts.items()} for lifts in self.lift)

    @cached_property
    def fibers(self) -> tuple[tuple[int, ...], ...]:
        fib: list[list[int]] = [[] for _ in range(self.codomain.n)]
        for i, x in enumerate(self.state_map):
            fib[x].append(i)
        return tuple(tuple(f) for f in fib)

    def fiber_partition(self) -> "Partition":
        return Partition.from_labels(self.domain, self.state_map)

    def __repr__(self) -> str:
        return f"GraphHom({self.domain!r} -> {self.codomain!r})"


def check_right_resolver(h: GraphHom) -> tuple[bool, str | None]:
    """Check surjectivity and per-state out-edge bijectivity.

    Returns ``(ok, diagnostic)``; the diagnostic names the first violation.
    """
    G, H = h.domain, h.codomain
    if set(h.state_map) != set(range(H.n)):
        missing = [H.states[i] for i in range(H.n) if i not in set(h.state_map)]
        return False, f"not surjective on states (missing {missing})"
    if set(h.edge_map) != set(range(H.m)):
        return False, "not surjective on edges"
    for i, out in enumerate(G.out_edges):
        image = [h.edge_map[k] for k in out]
        target = H.out_edges[h.state_map[i]]
        if len(image) != len(target) or set(image) != set(target) or len(set(image)) != len(image):
            return False, f"state {G.states[i]!r}: outgoing edges are not mapped bijectively"
    return True, None


def is_right_resolver(h: GraphHom) -> bool:
    return check_right_resolver(h)[0]


def compose(outer: GraphHom, inner: GraphHom) -> GraphHom:
    """``outer ∘ inner``."""
    if inner.codomain != outer.domain:
        raise HomomorphismError("cannot compose: inner codomain differs from outer domain")
    return GraphHom(
        inner.domain,
        outer.codomain,
        tuple(outer.state_map[x] for x in inner.state_map),
        tuple(outer.edge_map[x] for x in inner.edge_map),
    )


def restrict(h: GraphHom, sub: MultiGraph) -> GraphHom:
    """Restriction of ``h`` to a subgraph of its domain."""
    G = h.domain
    return GraphHom(
        sub,
        h.codomain,
        tuple(h.state_map[G.state_index[s]] for s in sub.states),
        tuple(h.edge_map[G.edge_index[e.id]] for e in sub.edges),
    )


# ---------------------------------------------------------------------------
# Partitions

@dataclass(frozen=True)
class Partition:
    """Equivalence relation on the states of ``graph``.

    Stored as normalized block labels: blocks are numbered by first member.
    """

    graph: MultiGraph
    labels: tuple[int, ...]

    @classmethod
    def from_labels(cls, graph: MultiGraph, labels: Sequence) -> "Partition":
        if len(labels) != graph.n:
            raise ValueError("one label per state required")
        renum: dict = {}
        return cls(graph, tuple(renum.setdefault(x, len(renum)) for x in labels))

    @classmethod
    def from_blocks(cls, graph: MultiGraph, blocks: Iterable[Iterable[str]]) -> "Partition":
        labels = [-1] * graph.n
        for b, block in enumerate(blocks):
            for s in block:
                i = graph.state_index[s]
                if labels[i] != -1:
                    raise ValueError(f"state {s!r} appears in two blocks")
                labels[i] = b
        if -1 in labels:
            raise ValueError("blocks do not cover every state")
        return cls.from_labels(graph, labels)

    @classmethod
    def diagonal(cls, graph: MultiGraph) -> "Partition":
        return cls(graph, tuple(range(graph.n)))

    @cached_property
    def block_indices(self) -> tuple[tuple[int, ...], ...]:
        blocks: list[list[int]] = [[] for _ in range(self.size)]
        for i, b in enumerate(self.labels):
            blocks[b].append(i)
        return tuple(tuple(b) for b in blocks)

    @property
    def blocks(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(self.graph.states[i] for i in b) for b in self.block_indices)

    @property
    def size(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    def is_trivial(self) -> bool:
        return self.size == self.graph.n

    def related(self, a: str, b: str) -> bool:
        idx = self.graph.state_index
        return self.labels[idx[a]] == self.labels[idx[b]]

    def refines(self, other: "Partition") -> bool:
        """True if every block of self lies inside a block of other."""
        seen: dict[int, int] = {}
        for mine, theirs in zip(self.labels, other.labels):
            if seen.setdefault(mine, theirs) != theirs:
                return False
        return True

    def meet(self, other: "Partition") -> "Partition":
        return Partition.from_labels(self.graph, list(zip(self.labels, other.labels)))

    def to_json(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks]}

    def __repr__(self) -> str:
        return f"Partition({[list(b) for b in self.blocks]})"


# ---------------------------------------------------------------------------
# Minimal factor M(G)

@dataclass(frozen=True)
class MinimalFactorResult:
    """M(G), the forced state map Σ_G, and the canonical order of V(M(G)).

    States of ``m_graph`` are named ``m0, m1, ...`` in canonical order, and
    its edges ``m<i>>m<j>:<k>``; isomorphic minimal factors are therefore
    literally equal objects.
    """

    graph: MultiGraph
    m_graph: MultiGraph
    sigma: tuple[int, ...]

    @property
    def canonical_order(self) -> tuple[str, ...]:
        return self.m_graph.states

    def sigma_map(self) -> dict[str, str]:
        return {s: self.m_graph.states[x] for s, x in zip(self.graph.states, self.sigma)}

    @cached_property
    def fibers(self) -> tuple[tuple[int, ...], ...]:
        fib: list[list[int]] = [[] for _ in range(self.m_graph.n)]
        for i, x in enumerate(self.sigma):
            fib[x].append(i)
        return tuple(tuple(f) for f in fib)


def _refine(G: MultiGraph) -> list[int]:
    """Coarsest partition with equal block-counts, with isomorphism-invariant
    block ranks (signature history ranking)."""
    cm = G.count_matrix
    labels = [0] * G.n
    n_blocks = 1
    while True:
        sigs = []
        for i in range(G.n):
            counts: dict[int, int] = {}
            for j, c in enumerate(cm[i]):
                if c:
                    counts[labels[j]] = counts.get(labels[j], 0) + c
            sigs.append((labels[i], tuple(sorted(counts.items()))))
        rank = {s: r for r, s in enumerate(sorted(set(sigs)))}
        labels = [rank[s] for s in sigs]
        if len(rank) == n_blocks:
            return labels
        n_blocks = len(rank)


def minimal_factor(G: MultiGraph) -> MinimalFactorResult:
    cached = G.__dict__.get("_minimal_factor")
    if cached is not None:
        return cached
    if not G.is_sink_free():
        raise GraphError(f"minimal_factor needs a sink-free graph; sinks: {G.sinks()}")
    labels = _refine(G)
    k = max(labels) + 1
    rep = {}
    for i, b in enumerate(labels):
        rep.setdefault(b, i)
    cm = G.count_matrix
    names = tuple(f"m{b}" for b in range(k))
    edges = []
    for b in range(k):
        counts = [0] * k
        for j, c in enumerate(cm[rep[b]]):
            counts[labels[j]] += c
        for t in range(k):
            for x in range(counts[t]):
                edges.append(Edge(f"m{b}>m{t}:{x}", names[b], names[t]))
    result = MinimalFactorResult(G, MultiGraph(names, tuple(edges)), tuple(labels))
    # graphs are immutable, so the result can live on the instance
    G.__dict__["_minimal_factor"] = result
    return result


def is_minimal(G: MultiGraph) -> bool:
    return minimal_factor(G).m_graph.n == G.n


# ---------------------------------------------------------------------------
# Algorithm 1

def _resolver_from_orders(G: MultiGraph, target: MinimalFactorResult,
                          orders: Sequence[Sequence[int]]) -> GraphHom:
    M, sigma = target.m_graph, target.sigma
    slots: dict[tuple[int, int], list[int]] = {}
    for k, (s, t) in enumerate(zip(M.src, M.dst)):
        slots.setdefault((s, t), []).append(k)
    edge_map = [0] * G.m
    dst = G.dst
    for i, order in enumerate(orders):
        used: dict[int, int] = {}
        for k in order:
            J = sigma[dst[k]]
            pos = used.get(J, 0)
            used[J] = pos + 1
            bucket = slots.get((sigma[i], J), [])
            if pos >= len(bucket):
                raise HomomorphismError(f"state {G.states[i]!r} has too many edges into fiber {M.states[J]!r}")
            edge_map[k] = bucket[pos]
    return GraphHom(G, M, sigma, tuple(edge_map))


def construct_right_resolver(G: MultiGraph, target: MinimalFactorResult | None = None,
                             edge_orders: Mapping[str, Sequence[str]] | None = None) -> GraphHom:
    """Right-resolver G -> M(G) matching edges by position (Algorithm 1).

    ``edge_orders`` optionally gives, per state id, a total order of its
    outgoing edge ids; the default is declaration order.  The state map is
    always Σ_G.
    """
    if target is None:
        target = minimal_factor(G)
    orders: list[Sequence[int]] = list(G.out_edges)
    if edge_orders:
        for state, order in edge_orders.items():
            i = G.state_index[state]
            try:
                idx = [G.edge_index[e] for e in order]
            except KeyError as exc:
                raise HomomorphismError(f"unknown edge {exc.args[0]!r} in order for {state!r}") from None
            if sorted(idx) != sorted(G.out_edges[i]):
                raise HomomorphismError(f"order for {state!r} is not a permutation of its outgoing edges")
            orders[i] = idx
    return _resolver_from_orders(G, target, orders)


def random_edge_orders(G: MultiGraph, rng: random.Random) -> dict[str, list[str]]:
    orders = {}
    for i, out in enumerate(G.out_edges):
        ids = [G.edges[k].id for k in out]
        rng.shuffle(ids)
        orders[G.states[i]] = ids
    return orders


# ---------------------------------------------------------------------------
# Congruences and quotients

def is_congruence(p: Partition, phi: GraphHom) -> bool:
    if p.graph != phi.domain:
        raise HomomorphismError("partition and map live on different graphs")
    labels = p.labels
    owner: dict[int, int] = {}
    for i, b in enumerate(labels):
        if owner.setdefault(b, phi.state_map[i]) != phi.state_map[i]:
            return False
    step = phi.step
    for block in p.block_indices:
        first = step[block[0]]
        for i in block[1:]:
            other = step[i]
            for a, t in first.items():
                if labels[other[a]] != labels[t]:
                    return False
    return True


@dataclass(frozen=True)
class Quotient:
    graph: MultiGraph
    quotient_map: GraphHom
    induced: GraphHom


def quotient(p: Partition, phi: GraphHom) -> Quotient:
    """G/~ for a congruence ~ with respect to ``phi``, with both factor maps.

    Quotient states and edges reuse the ids of their first representatives.
    """
    if not is_congruence(p, phi):
        raise HomomorphismError("partition is not a congruence for this map")
    G = phi.domain
    blocks = p.block_indices
    labels = p.labels
    names = tuple(G.states[b[0]] for b in blocks)
    edges = []
    class_of: dict[tuple[int, int], int] = {}
    induced_edges = []
    for b, block in enumerate(blocks):
        r = block[0]
        counts: dict[int, int] = {}
        for k in G.out_edges[r]:
            a = phi.edge_map[k]
            class_of[(b, a)] = len(edges)
            edges.append(Edge(G.edges[k].id, names[b], names[labels[G.dst[k]]]))
            induced_edges.append(a)
            counts[a] = counts.get(a, 0) + 1
        for i in block[1:]:
            if sorted(phi.edge_map[k] for k in G.out_edges[i]) != sorted(phi.edge_map[k] for k in G.out_edges[r]):
                raise HomomorphismError("representatives disagree on edge multiplicities")
    Q = MultiGraph(names, tuple(edges))
    qmap = GraphHom(G, Q, labels, tuple(class_of[(labels[G.src[k]], phi.edge_map[k])] for k in range(G.m)))
    induced = GraphHom(Q, phi.codomain, tuple(phi.state_map[b[0]] for b in blocks), tuple(induced_edges))
    return Quotient(Q, qmap, induced)


def congruences(phi: GraphHom, within: Partition | None = None) -> Iterator[Partition]:
    """Every congruence for ``phi`` refining ``within`` (default: the fibers).

    Exhaustive over set partitions of each block; desk scale only.
    """
    G = phi.domain
    within = within or phi.fiber_partition()
    per_block = [list(_set_partitions(list(b))) for b in within.block_indices]
    for choice in product(*per_block):
        labels = [0] * G.n
        nxt = 0
        for parts in choice:
            for part in parts:
                for i in part:
                    labels[i] = nxt
                nxt += 1
        p = Partition.from_labels(G, labels)
        if is_congruence(p, phi):
            yield p


def _set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for parts in _set_partitions(rest):
        yield [[head]] + parts
        for k in range(len(parts)):
            yield parts[:k] + [[head] + parts[k]] + parts[k + 1:]


# ---------------------------------------------------------------------------
# Parallel equivalence and resolver enumeration

def parallel_equivalent(phi1: GraphHom, phi2: GraphHom) -> bool:
    """Whether phi1 = tau ∘ phi2 ∘ sigma for permutations sigma, tau of
    parallel edges in the domain and codomain.

    Decided per codomain edge bundle E_IJ: the columns ``a -> (I'.a)_I'``
    must agree as multisets.
    """
    if phi1.domain != phi2.domain or phi1.codomain != phi2.codomain:
        raise HomomorphismError("maps must share domain and codomain")
    if phi1.state_map != phi2.state_map:
        return False
    H = phi1.codomain
    bundles: dict[tuple[int, int], list[int]] = {}
    for k, (s, t) in enumerate(zip(H.src, H.dst)):
        bundles.setdefault((s, t), []).append(k)
    fibers = phi1.fibers
    s1, s2 = phi1.step, phi2.step
    for (I, _J), letters in bundles.items():
        fib = fibers[I]
        cols1 = sorted(tuple(s1[x][a] for x in fib) for a in letters)
        cols2 = sorted(tuple(s2[x][a] for x in fib) for a in letters)
        if cols1 != cols2:
            return False
    return True


def _arrangements(targets: list[int]) -> Iterator[tuple[int, ...]]:
    """Distinct orderings of a multiset."""
    seen = set()
    for perm in permutations(targets):
        if perm not in seen:
            seen.add(perm)
            yield perm


def enumerate_right_resolvers(G: MultiGraph, target: MinimalFactorResult | None = None,
                              modulo_parallel: bool = True, limit: int | None = None) -> Iterator[GraphHom]:
    """Right-resolvers G -> M(G).

    With ``modulo_parallel`` one representative per class of
    :func:`parallel_equivalent` is produced; otherwise every resolver.
    Stops silently after ``limit`` items.
    """
    target = target or minimal_factor(G)
    M, sigma = target.m_graph, target.sigma
    bundles: dict[tuple[int, int], list[int]] = {}
    for k, (s, t) in enumerate(zip(M.src, M.dst)):
        bundles.setdefault((s, t), []).append(k)
    # per (I,J) bundle: the fiber of I and, per member, its edges into fiber J
    groups = []
    for (I, J), letters in sorted(bundles.items()):
        members = []
        for x in target.fibers[I]:
            es = [k for k in G.out_edges[x] if sigma[G.dst[k]] == J]
            members.append(es)
        groups.append((letters, members))

    def group_choices(letters, members):
        if modulo_parallel:
            options = [list(_arrangements([G.dst[k] for k in es])) for es in members]
            for combo in product(*options):
                cols = [tuple(arr[a] for arr in combo) for a in range(len(letters))]
                if cols == sorted(cols):
                    yield [_edges_for_targets(G, es, arr) for es, arr in zip(members, combo)]
        else:
            options = [list(permutations(es)) for es in members]
            for combo in product(*options):
                yield [list(c) for c in combo]

    per_group = [list(group_choices(letters, members)) for letters, members in groups]
    count = 0
    for choice in product(*per_group):
        edge_map = [0] * G.m
        for (letters, _members), assignment in zip(groups, choice):
            for es in assignment:
                for a, k in zip(letters, es):
                    edge_map[k] = a
        yield GraphHom(G, M, sigma, tuple(edge_map))
        count += 1
        if limit is not None and count >= limit:
            return


def _edges_for_targets(G: MultiGraph, es: list[int], targets: Sequence[int]) -> list[int]:
    pool: dict[int, list[int]] = {}
    for k in es:
        pool.setdefault(G.dst[k], []).append(k)
    cursor: dict[int, int] = {}
    out = []
    for t in targets:
        pos = cursor.get(t, 0)
        cursor[t] = pos + 1
        out.append(pool[t][pos])
    return out


def resolver_state_maps(G: MultiGraph, H: MultiGraph) -> Iterator[tuple[int, ...]]:
    """All state maps V(G) -> V(H) carried by some right-resolver G -> H.

    A state map f qualifies iff it is surjective and, for every state I and
    every J in V(H), the number of edges from I into f^-1(J) equals
    |E_{f(I)J}(H)|.  Brute force over |V(H)|^|V(G)| maps.
    """
    cg, ch = G.count_matrix, H.count_matrix
    out_g = [len(o) for o in G.out_edges]
    out_h = [len(o) for o in H.out_edges]
    candidates = [[j for j in range(H.n) if out_h[j] == out_g[i]] for i in range(G.n)]
    for f in product(*candidates):
        if len(set(f)) != H.n:
            continue
        ok = True
        for i in range(G.n):
            counts = [0] * H.n
            for j, c in enumerate(cg[i]):
                if c:
                    counts[f[j]] += c
            if tuple(counts) != ch[f[i]]:
                ok = False
                break
        if ok:
            yield f


def resolver_from_state_map(G: MultiGraph, H: MultiGraph, f: Sequence[int]) -> GraphHom:
    """Some right-resolver with state map ``f`` (edges matched in order)."""
    slots: dict[tuple[int, int], list[int]] = {}
    for k, (s, t) in enumerate(zip(H.src, H.dst)):
        slots.setdefault((s, t), []).append(k)
    edge_map = [0] * G.m
    for i, out in enumerate(G.out_edges):
        used: dict[int, int] = {}
        for k in out:
            key = (f[i], f[G.dst[k]])
            pos = used.get(key, 0)
            used[key] = pos + 1
            edge_map[k] = slots[key][pos]
    return GraphHom(G, H, tuple(f), tuple(edge_map))


def find_right_resolver(G: MultiGraph, H: MultiGraph) -> GraphHom | None:
    for f in resolver_state_maps(G, H):
        return resolver_from_state_map(G, H, f)
    return None


# ---------------------------------------------------------------------------
# Homomorphism files

def dump_hom(h: GraphHom, domain_ref: str | None = None, codomain_ref: str | None = None) -> str:
    out = io.StringIO()
    if domain_ref:
        out.write(f"domain {domain_ref}\n")
    if codomain_ref:
        out.write(f"codomain {codomain_ref}\n")
    for s, t in h.state_dict().items():
        out.write(f"state {s} -> {t}\n")
    for e, f in h.edge_dict().items():
        out.write(f"edge {e} -> {f}\n")
    return out.getvalue()


def hom_to_json(h: GraphHom, domain_ref=None, codomain_ref=None) -> dict:
    obj: dict = {"states": h.state_dict(), "edges": h.edge_dict()}
    if domain_ref is not None:
        obj["domain"] = domain_ref
    if codomain_ref is not None:
        obj["codomain"] = codomain_ref
    return obj


def parse_hom(source) -> tuple[dict[str, str], dict[str, str], dict[str, object]]:
    """Parse a homomorphism file into (state map, edge map, graph refs).

    The refs dict may hold ``domain``/``codomain`` entries: a path string
    (text format or JSON) or an inline JSON graph object.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if source.lstrip().startswith("{"):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        refs = {k: obj[k] for k in ("domain", "codomain") if k in obj}
        return dict(obj.get("states", {})), dict(obj.get("edges", {})), refs
    states: dict[str, str] = {}
    edges: dict[str, str] = {}
    refs: dict[str, object] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] in ("domain", "codomain") and len(tokens) == 2:
            refs[tokens[0]] = tokens[1]
            continue
        if len(tokens) != 4 or tokens[2] != "->" or tokens[0] not in ("state", "edge"):
            raise GraphFormatError(f"expected 'state|edge <src-id> -> <dst-id>', got {line!r}", lineno)
        table = states if tokens[0] == "state" else edges
        if tokens[1] in table:
            raise GraphFormatError(f"duplicate entry for {tokens[1]!r}", lineno)
        table[tokens[1]] = tokens[3]
    return states, edges, refs


def load_hom(source, domain: MultiGraph, codomain: MultiGraph) -> GraphHom:
    states, edges, _ = parse_hom(source)
    return GraphHom.from_maps(domain, codomain, states, edges)
