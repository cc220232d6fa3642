"""Stable-pair discovery, generalized road colouring, O(G) deciders and the probe."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from math import lcm, prod
from typing import Sequence

from .bunchy import (
    PreconditionError,
    as_cycle_of_bunches,
    build_O,
    classify,
    max_bunchy_factor,
)
from .graph import MultiGraph, graph_isomorphic, is_strongly_connected, period, principal_components, induced_principal_subgraph
from .homomorphism import (
    GraphHom,
    MinimalFactorResult,
    Partition,
    check_right_resolver,
    compose,
    construct_right_resolver,
    enumerate_right_resolvers,
    minimal_factor,
    quotient,
    restrict,
)
from .stability import fiber_product, is_synchronizing, stability_relation, stable_pairs


class BudgetExhausted(RuntimeError):
    """Search ran out of budget; says nothing about existence."""


# ---------------------------------------------------------------------------
# In-amalgamation

def in_amalgamation_stable_pair(G: MultiGraph, phi: GraphHom) -> tuple[GraphHom, tuple[str, str]] | None:
    """Rewire ``phi`` on one state so that two in-amalgamable states become stable.

    Looks for fiber-mates with identical rows of the count matrix, in
    canonical order; returns ``None`` if there are none.
    """
    cm = G.count_matrix
    for fib in phi.fibers:
        for x, i1 in enumerate(fib):
            for i2 in fib[x + 1:]:
                if cm[i1] != cm[i2]:
                    continue
                edge_map = list(phi.edge_map)
                by_target: dict[int, list[int]] = {}
                for k in G.out_edges[i1]:
                    by_target.setdefault(G.dst[k], []).append(k)
                cursor: dict[int, int] = {}
                for k in G.out_edges[i2]:
                    t = G.dst[k]
                    pos = cursor.get(t, 0)
                    cursor[t] = pos + 1
                    edge_map[k] = phi.edge_map[by_target[t][pos]]
                rewired = GraphHom(G, phi.codomain, phi.state_map, tuple(edge_map))
                H = phi.codomain
                for k in range(G.m):
                    a, b = phi.edge_map[k], rewired.edge_map[k]
                    if a != b:
                        assert G.src[k] == i2, "rewiring touched a state other than the second one"
                        assert H.src[a] == H.src[b] and H.dst[a] == H.dst[b], "rewiring is not a parallel permutation"
                if not check_right_resolver(rewired)[0]:
                    raise AssertionError("rewired map is not right-resolving")
                if (i1, i2) not in stable_pairs(rewired):
                    raise AssertionError("in-amalgamated pair is not stable")
                return rewired, (G.states[i1], G.states[i2])
    return None


# ---------------------------------------------------------------------------
# Total order colourings and tallest trees

@dataclass(frozen=True)
class TotalOrderColouring:
    """Per-edge rank within its source's out-edges, plus the induced resolver."""

    labels: tuple[int, ...]
    resolver: GraphHom

    def label_dict(self) -> dict[str, int]:
        return {e.id: r for e, r in zip(self.resolver.domain.edges, self.labels)}


def _require_cycle_target(mf: MinimalFactorResult):
    cob = as_cycle_of_bunches(mf.m_graph)
    if cob is None:
        raise PreconditionError("M(G) is not a cycle of bunches")
    return cob


def colouring_from_labels(G: MultiGraph, labels: Sequence[int], mf: MinimalFactorResult | None = None) -> TotalOrderColouring:
    mf = mf or minimal_factor(G)
    _require_cycle_target(mf)
    M = mf.m_graph
    for out in G.out_edges:
        if sorted(labels[k] for k in out) != list(range(len(out))):
            raise ValueError("labels must be a bijection onto 0..k-1 at every state")
    edge_map = tuple(M.out_edges[mf.sigma[G.src[k]]][labels[k]] for k in range(G.m))
    return TotalOrderColouring(tuple(labels), GraphHom(G, M, mf.sigma, edge_map))


def colouring_from_resolver(phi: GraphHom) -> TotalOrderColouring:
    mf = minimal_factor(phi.domain)
    if phi.codomain != mf.m_graph:
        raise PreconditionError("resolver must land in the canonical M(G)")
    _require_cycle_target(mf)
    M = mf.m_graph
    rank = {a: r for out in M.out_edges for r, a in enumerate(out)}
    return TotalOrderColouring(tuple(rank[a] for a in phi.edge_map), phi)


def colouring_from_zero_edges(G: MultiGraph, zero: Sequence[int], mf: MinimalFactorResult | None = None) -> TotalOrderColouring:
    """Label ``zero[i]`` (an edge index) 0 at state i, the rest in declaration order."""
    labels = [0] * G.m
    for i, out in enumerate(G.out_edges):
        if zero[i] not in out:
            raise ValueError(f"edge {zero[i]} does not leave state {G.states[i]!r}")
        r = 1
        for k in out:
            if k != zero[i]:
                labels[k] = r
                r += 1
    return colouring_from_labels(G, labels, mf)


@dataclass(frozen=True)
class TreeAnalysis:
    w_target: tuple[int, ...]
    position: tuple[int, ...]
    height: tuple[int, ...]
    root: tuple[int, ...]
    z: tuple[int, ...]
    h_max: tuple[int, ...]
    h_k: tuple[dict[int, int], ...]
    z_k: tuple[int, ...]
    unique_positions: tuple[int, ...]
    w_unique_tallest: bool

    @property
    def unique_tallest_tree_at(self) -> int | None:
        return self.unique_positions[0] if self.unique_positions else None

    def to_json(self, G: MultiGraph) -> dict:
        return {
            "zero_subgraph": {G.states[i]: G.states[t] for i, t in enumerate(self.w_target)},
            "height": dict(zip(G.states, self.height)),
            "root": {G.states[i]: G.states[r] for i, r in enumerate(self.root)},
            "z": dict(zip(G.states, self.z)),
            "h_max": list(self.h_max),
            "z_k": list(self.z_k),
            "unique_tallest_tree_at": self.unique_tallest_tree_at,
        }


def tree_analysis(G: MultiGraph, colouring: TotalOrderColouring, mf: MinimalFactorResult | None = None) -> TreeAnalysis:
    """Heights, roots and tallest trees of the 0-labelled subgraph W.

    Height counts steps until the orbit enters its cycle in W; the root is
    the cycle state entered; z is the cycle length divided by p.
    """
    mf = mf or minimal_factor(G)
    cob = _require_cycle_target(mf)
    p = len(cob.degree_sequence)
    pos_of_m = {mf.m_graph.state_index[s]: k for k, s in enumerate(cob.states)}
    position = tuple(pos_of_m[mf.sigma[i]] for i in range(G.n))
    w = [0] * G.n
    for k, r in enumerate(colouring.labels):
        if r == 0:
            w[G.src[k]] = G.dst[k]
    # cycle detection on the functional graph
    on_cycle = [False] * G.n
    cycle_len = [0] * G.n
    state = [0] * G.n  # 0 new, 1 in progress, 2 done
    for s in range(G.n):
        path = []
        x = s
        while state[x] == 0:
            state[x] = 1
            path.append(x)
            x = w[x]
        if state[x] == 1:
            cyc = path[path.index(x):]
            for c in cyc:
                on_cycle[c] = True
                cycle_len[c] = len(cyc)
        for y in path:
            state[y] = 2
    height = [0] * G.n
    root = list(range(G.n))
    done = list(on_cycle)
    for s in range(G.n):
        path = []
        x = s
        while not done[x]:
            path.append(x)
            x = w[x]
        h, r, cl = height[x], root[x], cycle_len[x]
        for y in reversed(path):
            h += 1
            height[y], root[y], cycle_len[y] = h, r, cl
            done[y] = True
    z = tuple(c // p for c in cycle_len)
    h_max, h_k, z_k, unique = [], [], [], []
    for k in range(p):
        members = [i for i in range(G.n) if position[i] == k]
        hm = max(height[i] for i in members)
        per_root: dict[int, int] = {}
        for i in members:
            per_root[root[i]] = max(per_root.get(root[i], 0), height[i])
        h_max.append(hm)
        h_k.append(per_root)
        z_k.append(lcm(*(z[i] for i in members)))
        if sum(1 for v in per_root.values() if v == hm) == 1:
            unique.append(k)
    top = max(height)
    w_roots = {root[i] for i in range(G.n) if height[i] == top}
    return TreeAnalysis(tuple(w), position, tuple(height), tuple(root), z, tuple(h_max), tuple(h_k),
                        tuple(z_k), tuple(unique), len(w_roots) == 1)


def _tree_score(t: TreeAnalysis) -> tuple:
    best_tie = min(sum(1 for v in t.h_k[k].values() if v == t.h_max[k]) for k in range(len(t.h_max)))
    return (bool(t.unique_positions), max(t.height), -best_tie)


def zero_edge_choices(G: MultiGraph) -> list[list[int]]:
    """Per state, one out-edge per distinct target (only targets matter for W)."""
    out = []
    for i, edges in enumerate(G.out_edges):
        seen: dict[int, int] = {}
        for k in edges:
            seen.setdefault(G.dst[k], k)
        out.append(list(seen.values()))
    return out


# ---------------------------------------------------------------------------
# Nontrivial stability search

@dataclass(frozen=True)
class StabilityWitness:
    phi: GraphHom
    relation: Partition
    method: str  # "in-amalgamation", "resolver", "tallest-tree-climb", "tallest-tree-exhaustive"
    colouring: TotalOrderColouring | None = None
    analysis: TreeAnalysis | None = None
    stats: dict = field(default_factory=dict)


def _check_preconditions(G: MultiGraph, mf: MinimalFactorResult) -> None:
    if not is_strongly_connected(G):
        raise PreconditionError("graph is not strongly connected")
    _require_cycle_target(mf)
    if as_cycle_of_bunches(G) is not None:
        raise PreconditionError("graph is already a cycle of bunches")


def find_nontrivial_stability(G: MultiGraph, seed: int = 0, climb_steps: int = 200,
                              budget: int = 20000) -> StabilityWitness:
    """A right-resolver G -> M(G) with nontrivial stability, verified by Algorithm 2.

    Tries in-amalgamation first, then a seeded hill-climb over 0-edge
    choices scored by tallest-tree uniqueness, then exhaustive enumeration
    of 0-edge choices up to ``budget`` candidates.
    """
    mf = minimal_factor(G)
    _check_preconditions(G, mf)
    stats = {"climb_evaluations": 0, "exhaustive_evaluations": 0, "used_exhaustive": False}
    base = construct_right_resolver(G, mf)
    amal = in_amalgamation_stable_pair(G, base)
    if amal is not None:
        phi, _pair = amal
        return StabilityWitness(phi, stability_relation(phi), "in-amalgamation", stats=stats)
    if stable_pairs(base):
        return StabilityWitness(base, stability_relation(base), "resolver", stats=stats)

    def attempt(col: TotalOrderColouring):
        t = tree_analysis(G, col, mf)
        if t.unique_positions and stable_pairs(col.resolver):
            return t
        return None

    choices = zero_edge_choices(G)
    rng = random.Random(seed)
    col = colouring_from_resolver(base)
    zero = [next(k for k in G.out_edges[i] if col.labels[k] == 0) for i in range(G.n)]
    current = colouring_from_zero_edges(G, zero, mf)
    score = _tree_score(tree_analysis(G, current, mf))
    movable = [i for i in range(G.n) if len(choices[i]) > 1]
    for _ in range(climb_steps if movable else 0):
        stats["climb_evaluations"] += 1
        t = attempt(current)
        if t is not None:
            return StabilityWitness(current.resolver, stability_relation(current.resolver),
                                    "tallest-tree-climb", current, t, stats)
        i = rng.choice(movable)
        trial = list(zero)
        trial[i] = rng.choice([k for k in choices[i] if G.dst[k] != G.dst[zero[i]]])
        cand = colouring_from_zero_edges(G, trial, mf)
        s = _tree_score(tree_analysis(G, cand, mf))
        if s >= score:
            zero, current, score = trial, cand, s
    stats["used_exhaustive"] = True
    for combo in product(*choices):
        if stats["exhaustive_evaluations"] >= budget:
            raise BudgetExhausted(f"no verified stable pair within {budget} colourings")
        stats["exhaustive_evaluations"] += 1
        cand = colouring_from_zero_edges(G, combo, mf)
        t = attempt(cand)
        if t is not None:
            return StabilityWitness(cand.resolver, stability_relation(cand.resolver),
                                    "tallest-tree-exhaustive", cand, t, stats)
    raise BudgetExhausted("exhausted every 0-edge choice without a verified stable pair")


# ---------------------------------------------------------------------------
# Thm 4.3 recursion

@dataclass(frozen=True)
class ResolverChain:
    steps: tuple[GraphHom, ...]
    source: MultiGraph

    @property
    def target(self) -> MultiGraph:
        return self.steps[-1].codomain if self.steps else self.source

    def compose(self) -> GraphHom:
        h = GraphHom.identity(self.source)
        for step in self.steps:
            h = compose(step, h)
        return h

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class SyncFactorResult:
    target: MultiGraph
    chain: ResolverChain
    synchronizer: GraphHom
    q: int
    degree_sequence: tuple[int, ...]
    methods: tuple[str, ...]
    synchronizing: bool
    matches_O: bool


def synchronize_to_cycle_of_bunches(G: MultiGraph, seed: int = 0, budget: int = 20000) -> SyncFactorResult:
    if not is_strongly_connected(G):
        raise PreconditionError("graph is not strongly connected")
    mf = minimal_factor(G)
    cob_m = _require_cycle_target(mf)
    steps = []
    methods = []
    current = G
    while not classify(current).bunchy:
        w = find_nontrivial_stability(current, seed=seed, budget=budget)
        q = quotient(w.relation, w.phi)
        if q.graph.n >= current.n:
            raise AssertionError("stability quotient did not shrink the graph")
        steps.append(q.quotient_map)
        methods.append(w.method)
        current = q.graph
    chain = ResolverChain(tuple(steps), G)
    sync = chain.compose()
    cob = as_cycle_of_bunches(current)
    if cob is None:
        raise AssertionError("bunchy strongly connected factor is not a cycle of bunches")
    q = period(G) // len(cob_m.degree_sequence)
    expected = build_O(cob_m, q)
    matches = graph_isomorphic(current, expected, max_states=max(12, current.n)) is not None
    return SyncFactorResult(current, chain, sync, q, cob.degree_sequence, tuple(methods),
                            is_synchronizing(sync), matches)


@dataclass(frozen=True)
class RoadColouringResult:
    colouring: GraphHom
    sync: SyncFactorResult
    degree: int
    period: int
    synchronizing: bool


def road_colour(G: MultiGraph, seed: int = 0, budget: int = 20000) -> RoadColouringResult:
    """Road colouring of a strongly connected graph of constant out-degree D.

    Synchronizing when G is aperiodic; otherwise it factors through O_{D,p}.
    """
    D = G.is_constant_degree()
    if D is None:
        raise PreconditionError("graph does not have constant out-degree")
    res = synchronize_to_cycle_of_bunches(G, seed=seed, budget=budget)
    to_m = construct_right_resolver(res.target)
    colouring = compose(to_m, res.synchronizer)
    return RoadColouringResult(colouring, res, D, period(G), is_synchronizing(colouring))


# ---------------------------------------------------------------------------
# Algorithms 4 and 5

@dataclass(frozen=True)
class OGDecision:
    equal: bool
    component: MultiGraph | None
    conditional: bool = False
    reason: str = ""


def decide_og_iso_bunchy(G1: MultiGraph, G2: MultiGraph) -> OGDecision:
    for name, G in (("G1", G1), ("G2", G2)):
        if not is_strongly_connected(G):
            raise PreconditionError(f"{name} is not strongly connected")
        if not classify(G).bunchy:
            raise PreconditionError(f"{name} is not bunchy")
    mf1, mf2 = minimal_factor(G1), minimal_factor(G2)
    if mf1.m_graph != mf2.m_graph:
        return OGDecision(False, None, reason="minimal factors differ")
    phi1 = construct_right_resolver(G1, mf1)
    phi2 = construct_right_resolver(G2, mf2)
    fp = fiber_product(phi1, phi2)
    for comp in principal_components(fp.product):
        C = induced_principal_subgraph(fp.product, comp)
        r1, r2 = restrict(fp.proj1, C), restrict(fp.proj2, C)
        if check_right_resolver(r1)[0] and check_right_resolver(r2)[0] and is_synchronizing(r1) and is_synchronizing(r2):
            return OGDecision(True, C, reason="principal component synchronizes onto both")
    return OGDecision(False, None, reason="no principal component synchronizes onto both")


def decide_og_iso_bfc(G1: MultiGraph, G2: MultiGraph) -> OGDecision:
    """Same question for arbitrary strongly connected graphs, via B(G_i).

    The answer is only as good as the bunchy factor conjecture, and is
    marked ``conditional``.
    """
    for name, G in (("G1", G1), ("G2", G2)):
        if not is_strongly_connected(G):
            raise PreconditionError(f"{name} is not strongly connected")
    B1, _ = max_bunchy_factor(G1)
    B2, _ = max_bunchy_factor(G2)
    d = decide_og_iso_bunchy(B1, B2)
    return OGDecision(d.equal, d.component, True, d.reason)


# ---------------------------------------------------------------------------
# Conjecture probe

@dataclass(frozen=True)
class ProbeReport:
    status: str  # "witness", "counterexample", "inconclusive"
    witness: GraphHom | None
    relation: Partition | None
    examined: int
    total_classes: int | None

    @property
    def severity(self) -> str:
        return "critical" if self.status == "counterexample" else "info"


def count_resolver_classes_bound(G: MultiGraph) -> int:
    """Crude upper bound on resolvers G -> M(G): product of out-degree factorials."""
    from math import factorial
    return prod(factorial(len(o)) for o in G.out_edges)


def probe_bunchy_factor_conjecture(G: MultiGraph, budget: int = 100000) -> ProbeReport:
    """Search every right-resolver G -> M(G), up to parallel edges, for nontrivial stability."""
    if not is_strongly_connected(G):
        raise PreconditionError("graph is not strongly connected")
    if classify(G).bunchy:
        raise PreconditionError("graph is bunchy")
    examined = 0
    for phi in enumerate_right_resolvers(G, modulo_parallel=True):
        if examined >= budget:
            return ProbeReport("inconclusive", None, None, examined, None)
        examined += 1
        if stable_pairs(phi):
            return ProbeReport("witness", phi, stability_relation(phi), examined, None)
    return ProbeReport("counterexample", None, None, examined, examined)
