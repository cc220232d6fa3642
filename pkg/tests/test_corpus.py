from itertools import product

import numpy as np
import pytest

import oracles
from rrgraph.bunchy import as_cycle_of_bunches
from rrgraph.corpus import (
    canonical_codes,
    count_matrices,
    layered_matrices,
    named_graphs,
    primitive_mask,
    strongly_connected_mask,
)
from rrgraph.graph import MultiGraph, is_strongly_connected, period
from rrgraph.homomorphism import minimal_factor


def code(counts):
    return oracles.canonical_code([list(r) for r in counts])


def brute_force_classes(n, max_out, degree=None):
    """Canonical codes of every sink-free count matrix on n states."""
    rows = [r for r in product(range(max_out + 1), repeat=n)
            if (sum(r) == degree if degree else 1 <= sum(r) <= max_out)]
    codes = {}
    for rs in product(rows, repeat=n):
        G = MultiGraph.from_counts([list(r) for r in rs])
        codes.setdefault(code(oracles.counts(G)), G)
    return codes


@pytest.mark.parametrize("n, max_out", [(1, 3), (2, 3), (3, 2)])
def test_generator_matches_brute_force(n, max_out):
    want = brute_force_classes(n, max_out)
    got = count_matrices(n, max_out=max_out, strongly_connected=False)
    codes = {code(m.tolist()) for m in got}
    assert len(got) == len(codes) == len(want)
    assert codes == set(want)
    sc = count_matrices(n, max_out=max_out)
    assert len(sc) == sum(is_strongly_connected(G) for G in want.values())


@pytest.mark.parametrize("D, primitive, sc", [
    (2, (1, 2, 12, 100), (1, 3, 14, 108)),
    (3, (1, 5, 85, 3148), (1, 6, 87, 3175)),
])
def test_constant_degree_counts(D, primitive, sc):
    assert tuple(len(count_matrices(n, degree=D, aperiodic=True)) for n in range(1, 5)) == primitive
    assert tuple(len(count_matrices(n, degree=D)) for n in range(1, 5)) == sc


def test_constant_degree_counts_small_against_brute_force():
    for D in (2, 3):
        for n in (1, 2, 3):
            want = brute_force_classes(n, D, degree=D)
            assert len(count_matrices(n, degree=D)) == sum(is_strongly_connected(G) for G in want.values())
            assert len(count_matrices(n, degree=D, aperiodic=True)) == sum(
                is_strongly_connected(G) and period(G) == 1 for G in want.values())


def test_masks_match_graph_methods():
    mats = count_matrices(3, max_out=2, strongly_connected=False)
    sc = strongly_connected_mask(mats)
    prim = primitive_mask(mats)
    for m, s, p in zip(mats, sc, prim):
        G = MultiGraph.from_counts(m.tolist())
        assert s == is_strongly_connected(G)
        assert p == (s and period(G) == 1)


def test_canonical_codes_are_invariant():
    rng = np.random.default_rng(0)
    mats = rng.integers(0, 3, size=(50, 4, 4))
    perm = [2, 0, 3, 1]
    shuffled = mats[:, perm][:, :, perm]
    assert (canonical_codes(mats) == canonical_codes(shuffled)).all()


@pytest.mark.parametrize("n", [2, 3, 4])
def test_layered_matches_exhaustive(n):
    got = layered_matrices(n)
    want = set()
    for m in count_matrices(n, max_out=3):
        G = MultiGraph.from_counts(m.tolist())
        if G.is_constant_degree() is not None:
            continue
        cob = as_cycle_of_bunches(minimal_factor(G).m_graph)
        if cob is not None and len(cob.degree_sequence) >= 2:
            want.add(code(oracles.counts(G)))
    assert {code(m.tolist()) for m in got} == want
    assert len(got) == len(want) == {2: 3, 3: 12, 4: 67}[n]


def test_named_graphs_are_well_formed():
    for name, G in named_graphs().items():
        assert G.n >= 1 and not G.sinks(), name
