"""Bunchy and almost bunchy graphs, cycles of bunches, B(G) and O(G)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .graph import Edge, MultiGraph, induced_principal_subgraph, is_strongly_connected
from .homomorphism import (
    GraphHom,
    MinimalFactorResult,
    Partition,
    check_right_resolver,
    compose,
    construct_right_resolver,
    minimal_factor,
    quotient,
    restrict,
)
from .stability import fiber_product, is_synchronizing, pair_name, stability_relation


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BunchClassification:
    bunch: tuple[bool, ...]
    bunchy_state: tuple[bool, ...]
    bunchy: bool
    almost_bunchy: bool
    cycle_of_bunches: bool
    # (I, J, first offender, second offender) as ids, for non-almost-bunchy graphs
    witness: tuple[str, str, str, str] | None = None

    def to_json(self, G: MultiGraph) -> dict:
        return {
            "bunchy": self.bunchy,
            "almost_bunchy": self.almost_bunchy,
            "cycle_of_bunches": self.cycle_of_bunches,
            "non_bunchy_states": [s for s, ok in zip(G.states, self.bunchy_state) if not ok],
            "bunches": [s for s, ok in zip(G.states, self.bunch) if ok],
            "witness": list(self.witness) if self.witness else None,
        }


def classify(G: MultiGraph, mf: MinimalFactorResult | None = None) -> BunchClassification:
    mf = mf or minimal_factor(G)
    sigma, M = mf.sigma, mf.m_graph
    bunch = tuple(len(f) == 1 for f in G.followers)
    bunchy_state = []
    offenders: dict[tuple[int, int], list[int]] = {}
    for i, fol in enumerate(G.followers):
        per_fiber: dict[int, int] = {}
        for j in fol:
            per_fiber[sigma[j]] = per_fiber.get(sigma[j], 0) + 1
        ok = True
        for J, c in per_fiber.items():
            if c >= 2:
                ok = False
                offenders.setdefault((sigma[i], J), []).append(i)
        bunchy_state.append(ok)
    witness = None
    for (I, J), states in sorted(offenders.items()):
        if len(states) >= 2:
            witness = (M.states[I], M.states[J], G.states[states[0]], G.states[states[1]])
            break
    cycle = all(bunch) and is_strongly_connected(G)
    return BunchClassification(bunch, tuple(bunchy_state), all(bunchy_state), witness is None, cycle, witness)


def is_bunchy(G: MultiGraph) -> bool:
    return classify(G).bunchy


def is_almost_bunchy(G: MultiGraph) -> bool:
    return classify(G).almost_bunchy


# ---------------------------------------------------------------------------
# Cycles of bunches

def is_minimal_sequence(seq: Sequence[int]) -> bool:
    """True unless the cyclic sequence is a repetition of a shorter block."""
    p = len(seq)
    for d in range(1, p):
        if p % d == 0 and all(seq[i] == seq[i % d] for i in range(p)):
            return False
    return True


@dataclass(frozen=True)
class CycleOfBunches:
    degree_sequence: tuple[int, ...]
    states: tuple[str, ...]

    @property
    def is_minimal(self) -> bool:
        return is_minimal_sequence(self.degree_sequence)


def as_cycle_of_bunches(G: MultiGraph, start: str | None = None) -> CycleOfBunches | None:
    """Degree sequence read along the cycle from ``start`` (default: first state)."""
    if G.n == 0 or not all(len(f) == 1 for f in G.followers) or not is_strongly_connected(G):
        return None
    i = G.state_index[start] if start is not None else 0
    order = []
    for _ in range(G.n):
        order.append(i)
        (i,) = G.followers[i]
    return CycleOfBunches(tuple(len(G.out_edges[x]) for x in order), tuple(G.states[x] for x in order))


def build_O(M: CycleOfBunches | Sequence[int], q: int) -> MultiGraph:
    """The cycle of bunches whose degree sequence is ``q`` repetitions of M's."""
    seq = tuple(M.degree_sequence if isinstance(M, CycleOfBunches) else M)
    if q < 1:
        raise ValueError("q must be positive")
    if not seq or not is_minimal_sequence(seq):
        raise PreconditionError(f"degree sequence {seq} is not a minimal cycle of bunches")
    full = seq * q
    n = len(full)
    names = tuple(f"o{i}" for i in range(n))
    edges = tuple(
        Edge(f"o{i}:{k}", names[i], names[(i + 1) % n]) for i, d in enumerate(full) for k in range(d)
    )
    return MultiGraph(names, edges)


# ---------------------------------------------------------------------------
# B(G), Algorithm 3

def bunchy_congruence(G: MultiGraph, mf: MinimalFactorResult | None = None) -> Partition:
    """The relation ≈: transitive closure of pairs reachable from the diagonal."""
    mf = mf or minimal_factor(G)
    sigma = mf.sigma
    fol = G.successors
    seen = {(i, i) for i in range(G.n)}
    queue = deque(seen)
    while queue:
        a, b = queue.popleft()
        for x in fol[a]:
            for y in fol[b]:
                if sigma[x] == sigma[y] and (x, y) not in seen:
                    seen.add((x, y))
                    queue.append((x, y))
    parent = list(range(G.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in seen:
        parent[find(a)] = find(b)
    return Partition.from_labels(G, [find(i) for i in range(G.n)])


def max_bunchy_factor(G: MultiGraph) -> tuple[MultiGraph, GraphHom]:
    """B(G) and the quotient right-resolver G -> B(G)."""
    mf = minimal_factor(G)
    phi = construct_right_resolver(G, mf)
    q = quotient(bunchy_congruence(G, mf), phi)
    if not classify(q.graph).bunchy:
        raise AssertionError("B(G) construction produced a non-bunchy graph")
    return q.graph, q.quotient_map


# ---------------------------------------------------------------------------
# ~_G and O(G) for almost bunchy graphs

def stability_of_almost_bunchy(G: MultiGraph, edge_orders=None) -> Partition:
    if not classify(G).almost_bunchy:
        raise PreconditionError("graph is not almost bunchy")
    return stability_relation(construct_right_resolver(G, edge_orders=edge_orders))


@dataclass(frozen=True)
class OGResult:
    graph: MultiGraph
    synchronizer: GraphHom
    relation: Partition
    bunchy_verified: bool | None  # None when not checked (input not strongly connected)


def og_almost_bunchy(G: MultiGraph) -> OGResult:
    """O(G) = G/~_G with its synchronizing quotient map."""
    c = classify(G)
    if not c.almost_bunchy:
        raise PreconditionError("graph is not almost bunchy")
    phi = construct_right_resolver(G)
    rel = stability_relation(phi)
    q = quotient(rel, phi)
    if not is_synchronizing(q.quotient_map):
        raise AssertionError("quotient by the stability relation is not synchronizing")
    verified = None
    if is_strongly_connected(G):
        verified = classify(q.graph).bunchy
        if not verified:
            raise AssertionError("O(G) of a strongly connected almost bunchy graph is not bunchy")
    return OGResult(q.graph, q.quotient_map, rel, verified)


# ---------------------------------------------------------------------------
# Universal property of the fiber product

@dataclass(frozen=True)
class UniversalPropertyResult:
    component: MultiGraph
    delta1: GraphHom
    delta2: GraphHom
    proj1: GraphHom
    proj2: GraphHom


def verify_universal_property(phi1: GraphHom, phi2: GraphHom, psi1: GraphHom, psi2: GraphHom) -> UniversalPropertyResult:
    """Build C and the lifts Δ_i with Φ_i = Ψ̂_i ∘ Δ_i, checking every claim."""
    G = phi1.domain
    if phi2.domain != G:
        raise PreconditionError("phi1 and phi2 must share a domain")
    if psi1.domain != phi1.codomain or psi2.domain != phi2.codomain:
        raise PreconditionError("psi_i must start where phi_i ends")
    if psi1.codomain != psi2.codomain:
        raise PreconditionError("psi1 and psi2 must share a codomain")
    for name, h in (("phi1", phi1), ("phi2", phi2), ("psi1", psi1), ("psi2", psi2)):
        ok, why = check_right_resolver(h)
        if not ok:
            raise PreconditionError(f"{name} is not a right-resolver: {why}")
    for name, H in (("H1", phi1.codomain), ("H2", phi2.codomain)):
        if not classify(H).bunchy:
            raise PreconditionError(f"{name} is not bunchy")
    c1, c2 = compose(psi1, phi1), compose(psi2, phi2)
    if c1.state_map != c2.state_map:
        raise PreconditionError("the two composites disagree on states")

    fp = fiber_product(psi1, psi2)
    P = fp.product
    H1, H2 = phi1.codomain, phi2.codomain
    T = [pair_name(H1.states[a], H2.states[b]) for a, b in zip(phi1.state_map, phi2.state_map)]
    C = induced_principal_subgraph(P, sorted(set(T), key=P.state_index.__getitem__))
    lookup: tuple[dict, dict] = ({}, {})
    for k, e in enumerate(C.edges):
        pk = P.edge_index[e.id]
        lookup[0][(e.src, e.dst, fp.proj1.edge_map[pk])] = k
        lookup[1][(e.src, e.dst, fp.proj2.edge_map[pk])] = k
    deltas = []
    for side, phi in enumerate((phi1, phi2)):
        emap = []
        for k in range(G.m):
            key = (T[G.src[k]], T[G.dst[k]], phi.edge_map[k])
            if key not in lookup[side]:
                raise AssertionError("lift of an edge is missing from the fiber product")
            emap.append(lookup[side][key])
        deltas.append(GraphHom(G, C, tuple(C.state_index[t] for t in T), tuple(emap)))
    r1, r2 = restrict(fp.proj1, C), restrict(fp.proj2, C)
    for delta, r, phi in ((deltas[0], r1, phi1), (deltas[1], r2, phi2)):
        if not check_right_resolver(delta)[0] or not check_right_resolver(r)[0]:
            raise AssertionError("constructed maps are not right-resolving")
        if compose(r, delta) != phi:
            raise AssertionError("factorization does not reproduce phi")
    if deltas[0].state_map != deltas[1].state_map:
        raise AssertionError("lifts disagree on states")
    if not classify(C).bunchy:
        raise AssertionError("component of the fiber product is not bunchy")
    return UniversalPropertyResult(C, deltas[0], deltas[1], r1, r2)


__all__ = [
    "BunchClassification",
    "CycleOfBunches",
    "OGResult",
    "PreconditionError",
    "UniversalPropertyResult",
    "as_cycle_of_bunches",
    "build_O",
    "bunchy_congruence",
    "classify",
    "is_almost_bunchy",
    "is_bunchy",
    "is_minimal_sequence",
    "max_bunchy_factor",
    "og_almost_bunchy",
    "stability_of_almost_bunchy",
    "verify_universal_property",
]
