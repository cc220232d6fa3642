"""Acceptance criteria 1-10, each checked against an independent oracle.

The terminal summary prints one PASS/FAIL line per criterion.
"""

import random
from collections import deque
from itertools import product
from math import gcd

import numpy as np
import pytest

import oracles
from conftest import Timer
from rrgraph.bunchy import (
    as_cycle_of_bunches,
    classify,
    max_bunchy_factor,
    og_almost_bunchy,
    verify_universal_property,
)
from rrgraph.corpus import cerny, count_matrices, layered_matrices, primitive_mask
from rrgraph.graph import MultiGraph, graph_isomorphic, is_strongly_connected
from rrgraph.homomorphism import (
    check_right_resolver,
    compose,
    congruences,
    construct_right_resolver,
    Partition,
    enumerate_right_resolvers,
    minimal_factor,
    quotient,
    random_edge_orders,
)
from rrgraph.pipeline import (
    colouring_from_zero_edges,
    decide_og_iso_bunchy,
    find_nontrivial_stability,
    road_colour,
    synchronize_to_cycle_of_bunches,
    tree_analysis,
    zero_edge_choices,
)
from rrgraph.stability import fiber_product, is_synchronizing, stability_relation, stable_pairs

pytestmark = pytest.mark.acceptance


# ---------------------------------------------------------------------------
# shared helpers

def oracle_labels(phi) -> tuple[int, ...]:
    """Stability partition from the brute-force pair oracle, normalized labels."""
    pairs = oracles.stable_pairs_oracle(phi)
    n = phi.domain.n
    first = [min([i for i in range(j) if (i, j) in pairs], default=j) for j in range(n)]
    renum: dict = {}
    return tuple(renum.setdefault(x, len(renum)) for x in first)


def oracle_period(G: MultiGraph) -> int:
    """gcd of k <= n with a closed walk of length k."""
    A = np.array(G.count_matrix, dtype=object)
    P = np.identity(G.n, dtype=object)
    g = 0
    for k in range(1, G.n + 1):
        P = P.dot(A)
        if any(P[i, i] for i in range(G.n)):
            g = gcd(g, k)
    return g


def expected_O_counts(G: MultiGraph) -> list[list[int]]:
    """Count matrix of O_{M,q} built from the coarsest equitable partition."""
    blocks = oracles.coarsest_equitable_partition(G)
    # each block is a layer with a single follower layer
    c = oracles.counts(G)
    block_of = {x: b for b, blk in enumerate(blocks) for x in blk}
    nxt, deg = {}, {}
    for b, blk in enumerate(blocks):
        x = min(blk)
        targets = {block_of[j] for j in range(G.n) if c[x][j]}
        assert len(targets) == 1, "M(G) is not a cycle of bunches"
        nxt[b] = targets.pop()
        deg[b] = sum(c[x])
    seq, b = [], 0
    for _ in blocks:
        seq.append(deg[b])
        b = nxt[b]
    q = oracle_period(G) // len(seq)
    full = seq * q
    n = len(full)
    return [[full[i] if j == (i + 1) % n else 0 for j in range(n)] for i in range(n)]


def factor_graphs(G: MultiGraph, resolver_limit: int | None = None):
    """(resolver, congruence, quotient) over resolvers to M(G) up to parallel
    edges and every congruence of each."""
    for phi in enumerate_right_resolvers(G, modulo_parallel=True, limit=resolver_limit):
        for p in congruences(phi):
            yield phi, p, quotient(p, phi)


# ---------------------------------------------------------------------------
# Criteria 1 and 2: road colouring and the cycle-of-bunches recursion

@pytest.fixture(scope="module")
def constant_degree_runs():
    """Run road_colour on every strongly connected constant-degree graph with
    at most 5 states and degree at most 3, plus Cerny4..Cerny6, keeping only
    verdicts (the graphs themselves are discarded)."""
    timer = Timer()
    out = {"primitive": 0, "periodic": 0, "c1_fail": [], "c2_fail": [], "methods": {}}
    graphs = []
    for n in range(1, 6):
        for D in range(1, 4):
            mats = count_matrices(n, degree=D, strongly_connected=True)
            prim = primitive_mask(mats) if n > 1 else np.ones(len(mats), bool)
            graphs.append((mats, prim))
    extra = [cerny(k) for k in (4, 5, 6)]

    def check(G, primitive):
        res = road_colour(G)
        for m in res.sync.methods:
            out["methods"][m] = out["methods"].get(m, 0) + 1
        if primitive:
            out["primitive"] += 1
            ok = res.synchronizing and check_right_resolver(res.colouring)[0] \
                and res.colouring.codomain.n == 1 and oracles.synchronizes_by_subsets(res.colouring)
            if not ok:
                out["c1_fail"].append(G.count_matrix)
        else:
            out["periodic"] += 1
        # criterion 2 on the same graph: codomain is a cycle of length per(G), all degrees D
        sync = res.sync.synchronizer
        tc = oracles.counts(sync.codomain)
        D = G.is_constant_degree()
        per = 1 if primitive else oracle_period(G)
        shape_ok = sync.codomain.n == per and all(
            sorted(row) == [0] * (len(row) - 1) + [D] for row in tc) and is_strongly_connected(sync.codomain)
        sync_ok = res.sync.synchronizing and res.sync.matches_O and (
            oracles.synchronizes_by_subsets(res.colouring) if primitive else oracles.synchronizes_by_subsets(sync))
        if not (shape_ok and sync_ok):
            out["c2_fail"].append(G.count_matrix)

    for mats, prim in graphs:
        for m, a in zip(mats, prim):
            check(MultiGraph.from_counts(m.tolist()), bool(a))
    for G in extra:
        check(G, True)
    out["seconds"] = timer.elapsed
    return out


@pytest.mark.criterion(1, "road colouring of aperiodic constant-degree graphs")
def test_criterion_1_road_colouring(constant_degree_runs, criterion):
    r = constant_degree_runs
    criterion(f"{r['primitive']} primitive graphs, {len(r['c1_fail'])} failures, "
              f"{r['seconds']:.0f}s incl. generation (limit 300s), methods {r['methods']}")
    assert not r["c1_fail"], f"not synchronizing: {r['c1_fail'][:3]}"
    assert r["primitive"] > 199000
    assert r["seconds"] < 300


@pytest.mark.criterion(2, "periodic and cycle-of-bunches synchronizing factors")
def test_criterion_2_cycle_of_bunches(constant_degree_runs, criterion):
    timer = Timer()
    r = constant_degree_runs
    layered = 0
    failures = list(r["c2_fail"])
    for n in range(2, 6):
        for m in layered_matrices(n, max_out=3):
            G = MultiGraph.from_counts(m.tolist())
            assert as_cycle_of_bunches(minimal_factor(G).m_graph) is not None
            layered += 1
            res = synchronize_to_cycle_of_bunches(G)
            want = expected_O_counts(G)
            got = res.target
            ok = res.synchronizing and res.matches_O and check_right_resolver(res.synchronizer)[0] \
                and oracles.synchronizes_by_subsets(res.synchronizer) \
                and oracles.isomorphic_by_counts(got, MultiGraph.from_counts(want))
            if not ok:
                failures.append(G.count_matrix)
    total = r["primitive"] + r["periodic"] + layered
    seconds = r["seconds"] + timer.elapsed
    criterion(f"{total} graphs ({r['periodic']} periodic constant-degree, {layered} layered), "
              f"{len(failures)} failures, {seconds:.0f}s (limit 600s)")
    assert not failures, failures[:3]
    assert seconds < 600


# ---------------------------------------------------------------------------
# Criterion 3: uniqueness of the state map

@pytest.mark.criterion(3, "state map to M(G) is unique")
def test_criterion_3_sigma_unique(desk_corpus, criterion):
    rng = random.Random(3)
    exhaustive = 0
    for name, G in desk_corpus:
        mf = minimal_factor(G)
        for _ in range(100):
            phi = construct_right_resolver(G, edge_orders=random_edge_orders(G, rng))
            assert check_right_resolver(phi)[0], name
            assert phi.state_map == mf.sigma, name
        if G.n <= 5:
            exhaustive += 1
            maps = list(oracles.resolver_state_maps(G, mf.m_graph))
            assert maps == [mf.sigma], name
            blocks = oracles.coarsest_equitable_partition(G)
            assert sorted(sorted(b) for b in blocks) == sorted(list(f) for f in mf.fibers), name
    criterion(f"{len(desk_corpus)} graphs x 100 orders, {exhaustive} confirmed exhaustively")


# ---------------------------------------------------------------------------
# Criterion 4: Algorithm 2 against the reachability oracle

@pytest.mark.criterion(4, "stability relation equals the reachability oracle")
def test_criterion_4_stability_oracle(desk_corpus, criterion):
    rng = random.Random(4)
    checked = 0
    for name, G in desk_corpus:
        if G.n > 8:
            continue
        homs = list(enumerate_right_resolvers(G, modulo_parallel=True, limit=20))
        homs += [construct_right_resolver(G, edge_orders=random_edge_orders(G, rng)) for _ in range(3)]
        extra = []
        for phi in homs[:4]:
            rel = stability_relation(phi)
            q = quotient(rel, phi)
            extra += [q.quotient_map, q.induced]
        for phi in homs + extra:
            assert stable_pairs(phi) == oracles.stable_pairs_oracle(phi), name
            assert stability_relation(phi).labels == oracle_labels(phi), name
            checked += 1
    criterion(f"{checked} right-resolvers on graphs with at most 8 states, exact match")


# ---------------------------------------------------------------------------
# Criterion 5: stability under composition

def _composable_pairs(G, resolver_limit=6, per_graph=60):
    seen = 0
    for phi in enumerate_right_resolvers(G, modulo_parallel=True, limit=resolver_limit):
        for p1 in congruences(phi):
            q1 = quotient(p1, phi)
            for p2 in congruences(q1.induced):
                q2 = quotient(p2, q1.induced)
                yield q1.quotient_map, q2.quotient_map
                seen += 1
                if seen >= per_graph:
                    return


@pytest.mark.criterion(5, "stability under composition, all four parts")
def test_criterion_5_composition(desk_corpus, criterion):
    pairs = 0
    for name, G in desk_corpus:
        if G.n > 6:
            continue
        for psi, delta in _composable_pairs(G):
            phi = compose(delta, psi)
            assert check_right_resolver(phi)[0]
            lab_phi, lab_psi, lab_delta = oracle_labels(phi), oracle_labels(psi), oracle_labels(delta)
            # part 1: classes of psi are classes of phi intersected with psi fibers
            meet = [(a, b) for a, b in zip(lab_phi, psi.state_map)]
            renum: dict = {}
            assert lab_psi == tuple(renum.setdefault(x, len(renum)) for x in meet), name
            # part 2: quotient by phi's relation
            q = quotient(Partition.from_labels(phi.domain, lab_phi), phi)
            assert oracles.synchronizes_by_subsets(q.quotient_map), name
            assert not oracles.stable_pairs_oracle(q.induced), name
            # part 3
            if len(set(lab_delta)) == delta.domain.n:
                assert lab_phi == lab_psi, name
            # part 4
            sync = lambda lab, h: list(lab) == list(h.fiber_partition().labels)  # noqa: E731
            assert sync(lab_phi, phi) == (sync(lab_psi, psi) and sync(lab_delta, delta)), name
            assert is_synchronizing(phi) == sync(lab_phi, phi)
            pairs += 1
    criterion(f"{pairs} composable pairs on domains with at most 6 states")


# ---------------------------------------------------------------------------
# Criterion 6: O(G) is the unique minimal synchronizing factor

def _sync_quotients(H):
    """Every proper synchronizing quotient of H, verified by the subset oracle."""
    out = []
    for phi in enumerate_right_resolvers(H, modulo_parallel=True):
        for p in congruences(phi):
            if p.is_trivial():
                continue
            q = quotient(p, phi)
            if oracles.synchronizes_by_subsets(q.quotient_map):
                out.append(q.graph)
    return out


def _minimal_sync_factors(G):
    code = lambda H: (H.n, oracles.canonical_code(oracles.counts(H)))  # noqa: E731
    seen = {code(G): G}
    queue = deque([G])
    minimal = []
    while queue:
        H = queue.popleft()
        children = _sync_quotients(H)
        if not children:
            minimal.append(H)
        for K in children:
            c = code(K)
            if c not in seen:
                seen[c] = K
                queue.append(K)
    return minimal, len(seen)


@pytest.mark.criterion(6, "G/~_G is the unique minimal synchronizing factor")
def test_criterion_6_og_unique(desk_corpus, criterion):
    timer = Timer()
    graphs = factors = 0
    for name, G in desk_corpus:
        if G.n > 6 or not classify(G).almost_bunchy:
            continue
        og = og_almost_bunchy(G).graph
        minimal, nodes = _minimal_sync_factors(G)
        assert minimal, name
        for H in minimal:
            assert oracles.isomorphic_by_counts(H, og), name
        graphs += 1
        factors += nodes
    criterion(f"{graphs} almost bunchy graphs, {factors} synchronizing factors explored, {timer.elapsed:.0f}s")
    assert timer.elapsed < 600


# ---------------------------------------------------------------------------
# Criterion 7: trichotomy and unique tallest trees

def _c7_corpus(strongly_connected_desk):
    graphs = list(strongly_connected_desk)
    for n in range(2, 6):
        graphs += [(f"layered{n}_{k}", MultiGraph.from_counts(m.tolist()))
                   for k, m in enumerate(layered_matrices(n, max_out=3))]
    for n in (2, 3, 4):
        for D in (2, 3):
            graphs += [(f"const{n}_{D}_{k}", MultiGraph.from_counts(m.tolist()))
                       for k, m in enumerate(count_matrices(n, degree=D, strongly_connected=True))]
    return graphs


@pytest.mark.criterion(7, "trichotomy and unique tallest trees force stability")
def test_criterion_7_trichotomy(strongly_connected_desk, criterion):
    graphs = case2 = case3 = utt = exhaustive_fallbacks = 0
    for name, G in _c7_corpus(strongly_connected_desk):
        mf = minimal_factor(G)
        if as_cycle_of_bunches(mf.m_graph) is None or as_cycle_of_bunches(G) is not None:
            continue
        graphs += 1
        c = oracles.counts(G)
        bunches = [i for i in range(G.n) if sum(1 for x in c[i] if x) == 1]
        has_case2 = any(c[a] and [x > 0 for x in c[a]] == [x > 0 for x in c[b]]
                        for k, a in enumerate(bunches) for b in bunches[k + 1:])
        has_case3 = False
        for combo in product(*zero_edge_choices(G)):
            col = colouring_from_zero_edges(G, combo, mf)
            t = tree_analysis(G, col, mf)
            assert set(t.unique_positions) == oracles.unique_tallest_positions(list(t.w_target), list(t.position))
            if t.unique_positions:
                has_case3 = True
                utt += 1
                assert oracles.stable_pairs_oracle(col.resolver), name
        assert has_case2 or has_case3, name
        case2 += has_case2
        case3 += has_case3
        w = find_nontrivial_stability(G)
        assert oracles.stable_pairs_oracle(w.phi), name
        exhaustive_fallbacks += w.stats["used_exhaustive"]
    criterion(f"{graphs} graphs: case 2 in {case2}, case 3 in {case3}; {utt} tallest-tree colourings "
              f"all nontrivial; exhaustive fallback used {exhaustive_fallbacks} times")


# ---------------------------------------------------------------------------
# Criterion 8: B(G)

@pytest.mark.criterion(8, "B(G) is the maximal bunchy factor")
def test_criterion_8_bg(desk_corpus, criterion):
    graphs = factors = 0
    for name, G in desk_corpus:
        B, qmap = max_bunchy_factor(G)
        assert classify(B).bunchy, name
        B2, _ = max_bunchy_factor(B)
        if B.n <= 6:
            assert oracles.isomorphic_by_counts(B, B2), name
        else:
            assert graph_isomorphic(B, B2) is not None, name
        assert next(oracles.resolver_state_maps(G, B), None) is not None, name
        if G.n > 5:
            continue
        graphs += 1
        for _phi, _p, q in factor_graphs(G):
            if classify(q.graph).bunchy:
                factors += 1
                assert next(oracles.resolver_state_maps(B, q.graph), None) is not None, name
    criterion(f"{len(desk_corpus)} graphs idempotent and bunchy; {factors} bunchy factors of "
              f"{graphs} graphs all factor through B(G)")


# ---------------------------------------------------------------------------
# Criterion 9: the O(G) decider for bunchy graphs

def _bunchy_pool(strongly_connected_desk):
    pool = {}
    for name, G in strongly_connected_desk:
        for H in (G, max_bunchy_factor(G)[0]):
            if H.n <= 6 and classify(H).bunchy:
                pool.setdefault((H.n, oracles.canonical_code(oracles.counts(H))), H)
    return list(pool.values())


@pytest.mark.criterion(9, "O(G) decider agrees with direct computation")
def test_criterion_9_decider(strongly_connected_desk, criterion):
    pool = _bunchy_pool(strongly_connected_desk)
    ogs = [og_almost_bunchy(H).graph for H in pool]
    pairs = equal = 0
    for a in range(len(pool)):
        for b in range(a, len(pool)):
            d = decide_og_iso_bunchy(pool[a], pool[b])
            want = oracles.isomorphic_by_counts(ogs[a], ogs[b])
            assert d.equal == want, (a, b)
            pairs += 1
            equal += want
    criterion(f"{len(pool)} bunchy graphs, {pairs} pairs, {equal} with isomorphic O(G)")


# ---------------------------------------------------------------------------
# Criterion 10: universal property of the fiber product

@pytest.mark.criterion(10, "universal property of the fiber product")
def test_criterion_10_universal_property(desk_corpus, criterion):
    instances = 0
    for name, G in desk_corpus:
        if G.n > 6 or not G.is_sink_free():
            continue
        maps = []
        for phi, _p, q in factor_graphs(G, resolver_limit=3):
            if classify(q.graph).bunchy:
                maps.append(q.quotient_map)
        maps = maps[:8]
        for phi1, phi2 in product(maps, repeat=2):
            psi1 = construct_right_resolver(phi1.codomain)
            psi2 = construct_right_resolver(phi2.codomain)
            res = verify_universal_property(phi1, phi2, psi1, psi2)
            C = res.component
            # C is follower-closed in the fiber product and keeps every out-edge
            P = fiber_product(psi1, psi2).product
            inside = set(C.states)
            assert set(C.edges) == {e for e in P.edges if e.src in inside}
            assert all(e.dst in inside for e in C.edges)
            assert compose(res.proj1, res.delta1) == phi1
            assert compose(res.proj2, res.delta2) == phi2
            assert res.delta1.state_map == res.delta2.state_map
            assert classify(C).bunchy
            instances += 1
    criterion(f"{instances} instances with common extension of at most 6 states")
