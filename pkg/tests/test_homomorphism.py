import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rrgraph.corpus import bouquet, cerny, cycle, cycle_of_bunches, g_ab, g_merge, not_almost_bunchy
from rrgraph.graph import Edge, GraphError, MultiGraph, graph_isomorphic
from rrgraph.homomorphism import (
    GraphHom,
    HomomorphismError,
    Partition,
    check_right_resolver,
    compose,
    congruences,
    construct_right_resolver,
    dump_hom,
    enumerate_right_resolvers,
    find_right_resolver,
    hom_to_json,
    is_congruence,
    is_minimal,
    is_right_resolver,
    load_hom,
    minimal_factor,
    parallel_equivalent,
    parse_hom,
    quotient,
    random_edge_orders,
    resolver_state_maps,
)
from rrgraph.stability import stability_relation
from test_graph import graphs, strongly_connected_graphs


def collapse(G: MultiGraph, H: MultiGraph) -> GraphHom:
    """The map sending every state of G to H's single state, edges in order."""
    out = []
    for k in range(G.m):
        local = G.out_edges[G.src[k]].index(k)
        out.append(local)
    return GraphHom(G, H, (0,) * G.n, tuple(out))


# ---------------------------------------------------------------------------
# right-resolvers

def test_identity_and_collapse_are_right_resolvers():
    assert is_right_resolver(GraphHom.identity(bouquet(2)))
    assert is_right_resolver(collapse(cycle(2), bouquet(1)))


def test_folding_two_loops_is_not_right_resolving():
    h = GraphHom(bouquet(2), bouquet(1), (0,), (0, 0))
    ok, why = check_right_resolver(h)
    assert not ok and why


def test_non_commuting_map_rejected():
    G = MultiGraph(("a", "b"), (Edge("x", "a", "b"), Edge("y", "b", "a")))
    with pytest.raises(HomomorphismError):
        GraphHom(G, G, (0, 1), (1, 0))


def test_compose_identity():
    phi = construct_right_resolver(cerny(4))
    assert compose(GraphHom.identity(phi.codomain), phi) == phi
    assert compose(phi, GraphHom.identity(phi.domain)) == phi


def test_two_quotient_steps_compose_to_a_resolver():
    G = g_ab()
    phi = construct_right_resolver(G)
    q1 = quotient(stability_relation(phi), phi)
    total = compose(q1.induced, q1.quotient_map)
    assert is_right_resolver(total)
    assert total == phi


# ---------------------------------------------------------------------------
# M(G)

def test_minimal_factor_examples():
    M2 = bouquet(2)
    mf = minimal_factor(M2)
    assert graph_isomorphic(mf.m_graph, M2) and mf.sigma == (0,)
    assert minimal_factor(cycle(5)).m_graph.m == 1
    O23 = cycle_of_bunches((2, 3))
    assert minimal_factor(O23).m_graph.n == 2 and is_minimal(O23)
    mf22 = minimal_factor(cycle_of_bunches((2, 2)))
    assert mf22.m_graph.n == 1 and mf22.m_graph.m == 2
    with pytest.raises(GraphError):
        minimal_factor(MultiGraph(("a",), ()))


@given(graphs(max_states=5))
def test_minimal_factor_is_coarsest_equitable(G):
    mf = minimal_factor(G)
    blocks = oracles.coarsest_equitable_partition(G)
    assert sorted(sorted(b) for b in blocks) == sorted(list(f) for f in mf.fibers)
    assert is_minimal(mf.m_graph)


@settings(max_examples=40)
@given(graphs(max_states=5), st.randoms(use_true_random=False))
def test_minimal_factor_is_isomorphism_invariant(G, rnd):
    perm = list(G.states)
    rnd.shuffle(perm)
    names = dict(zip(G.states, perm))
    edges = list(G.edges)
    rnd.shuffle(edges)
    H = MultiGraph(tuple(perm), tuple(Edge(e.id, names[e.src], names[e.dst]) for e in edges))
    assert minimal_factor(G).m_graph == minimal_factor(H).m_graph


def test_algorithm_1_examples():
    phi = construct_right_resolver(cycle(2))
    assert phi.edge_map == (0, 0)
    phi = construct_right_resolver(cycle_of_bunches((2, 2)))
    assert phi.edge_map == (0, 1, 0, 1)


@settings(max_examples=50)
@given(graphs(max_states=5), st.integers(0, 10**6))
def test_algorithm_1_state_map_independent_of_order(G, seed):
    rng = random.Random(seed)
    mf = minimal_factor(G)
    for _ in range(10):
        phi = construct_right_resolver(G, edge_orders=random_edge_orders(G, rng))
        assert is_right_resolver(phi)
        assert phi.state_map == mf.sigma


def test_bad_edge_order_rejected():
    G = cerny(3)
    with pytest.raises(HomomorphismError):
        construct_right_resolver(G, edge_orders={"0": ["a0"]})


# ---------------------------------------------------------------------------
# congruences and quotients

def test_congruence_examples():
    phi = construct_right_resolver(g_ab())
    assert is_congruence(Partition.diagonal(phi.domain), phi)
    assert is_congruence(phi.fiber_partition(), phi)
    H = construct_right_resolver(cycle_of_bunches((2, 3)))
    assert not is_congruence(Partition.from_labels(H.domain, [0, 0]), H)


def test_quotient_examples():
    phi = construct_right_resolver(cerny(4))
    q = quotient(Partition.diagonal(phi.domain), phi)
    assert q.graph == phi.domain
    q = quotient(phi.fiber_partition(), phi)
    assert graph_isomorphic(q.graph, phi.codomain)
    G = g_merge()
    phi = construct_right_resolver(G)
    q = quotient(stability_relation(phi), phi)
    assert graph_isomorphic(q.graph, bouquet(2))
    with pytest.raises(HomomorphismError):
        quotient(Partition.from_labels(G, [0, 0]), GraphHom.identity(G))


@settings(max_examples=40)
@given(graphs(max_states=4))
def test_congruences_match_brute_force(G):
    phi = construct_right_resolver(G)
    found = {p.labels for p in congruences(phi)}
    step = oracles._moves(phi)
    want = set()
    for parts in oracles.set_partitions(list(range(G.n))):
        label = {x: b for b, part in enumerate(parts) for x in part}
        ok = all(phi.state_map[x] == phi.state_map[part[0]] for part in parts for x in part)
        ok = ok and all(label[step[x][a]] == label[step[part[0]][a]]
                        for part in parts for x in part for a in step[x])
        if ok:
            labs = [label[i] for i in range(G.n)]
            renum: dict = {}
            want.add(tuple(renum.setdefault(v, len(renum)) for v in labs))
    assert found == want
    for p in congruences(phi):
        q = quotient(p, phi)
        assert is_right_resolver(q.quotient_map) and is_right_resolver(q.induced)
        assert compose(q.induced, q.quotient_map) == phi


def test_partition_operations():
    G = cerny(4)
    a = Partition.from_blocks(G, [["0", "1"], ["2", "3"]])
    b = Partition.from_blocks(G, [["0"], ["1"], ["2", "3"]])
    assert b.refines(a) and not a.refines(b)
    assert a.meet(b).labels == b.labels
    assert a.related("2", "3") and not a.related("1", "2")
    assert Partition.diagonal(G).is_trivial()
    with pytest.raises(ValueError):
        Partition.from_blocks(G, [["0", "1"], ["1", "2", "3"]])


# ---------------------------------------------------------------------------
# parallel equivalence and enumeration

def test_parallel_equivalence_examples():
    G = g_ab()
    phi = construct_right_resolver(G)
    assert parallel_equivalent(phi, phi)
    O = cycle_of_bunches((2, 2))
    rng = random.Random(1)
    base = construct_right_resolver(O)
    for _ in range(10):
        other = construct_right_resolver(O, edge_orders=random_edge_orders(O, rng))
        assert parallel_equivalent(base, other)


def test_parallel_equivalence_fails_off_almost_bunchy():
    G = not_almost_bunchy()
    phi = construct_right_resolver(G)
    # swap the labels at state a only
    em = list(phi.edge_map)
    a0, a1 = G.out_edges[0]
    em[a0], em[a1] = em[a1], em[a0]
    psi = GraphHom(G, phi.codomain, phi.state_map, tuple(em))
    assert is_right_resolver(psi)
    assert not parallel_equivalent(phi, psi)


def _all_resolvers(G):
    return list(enumerate_right_resolvers(G, modulo_parallel=False))


@settings(max_examples=30, deadline=None)
@given(graphs(max_states=3, max_entry=2))
def test_enumeration_modulo_parallel_is_a_transversal(G):
    everything = _all_resolvers(G)
    reps = list(enumerate_right_resolvers(G, modulo_parallel=True))
    assert len(set(h.edge_map for h in everything)) == len(everything)
    for h in everything:
        assert is_right_resolver(h)
        assert sum(parallel_equivalent(h, r) for r in reps) == 1
    for i, a in enumerate(reps):
        for b in reps[i + 1:]:
            assert not parallel_equivalent(a, b)


def test_enumeration_count_for_cerny3():
    G = cerny(3)
    # each state independently orders its two edges onto the two loops
    assert len(_all_resolvers(G)) == 2 ** 3


@given(graphs(max_states=4))
def test_resolver_state_maps_match_oracle(G):
    M = minimal_factor(G).m_graph
    assert sorted(resolver_state_maps(G, M)) == sorted(oracles.resolver_state_maps(G, M))
    h = find_right_resolver(G, M)
    assert h is not None and is_right_resolver(h)


# ---------------------------------------------------------------------------
# files

@given(strongly_connected_graphs(max_states=5))
def test_hom_round_trip(G):
    phi = construct_right_resolver(G)
    assert load_hom(dump_hom(phi), phi.domain, phi.codomain) == phi
    import json
    assert load_hom(json.dumps(hom_to_json(phi)), phi.domain, phi.codomain) == phi


def test_hom_refs_and_errors():
    states, edges, refs = parse_hom("domain g.txt\ncodomain m.txt\nstate a -> b\nedge e -> f\n")
    assert refs == {"domain": "g.txt", "codomain": "m.txt"}
    assert states == {"a": "b"} and edges == {"e": "f"}
    from rrgraph.graph import GraphFormatError
    with pytest.raises(GraphFormatError):
        parse_hom("state a b\n")
    with pytest.raises(GraphFormatError):
        parse_hom("state a -> b\nstate a -> c\n")
    G = bouquet(1)
    with pytest.raises(HomomorphismError):
        load_hom("state 0 -> 0\n", G, G)
