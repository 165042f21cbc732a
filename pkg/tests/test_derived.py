import random
from fractions import Fraction as F

import pytest

from wgossip.derived import (
    build_derived_graph,
    covers_all_edges,
    exhaustive_closed_walk,
    is_exhaustive_closed,
    is_spanning,
    periodic_schedule,
    psi,
    psi_cycles,
    walk_is_valid,
)
from wgossip.fixtures import f1_with_transient, gen_fixture
from wgossip.graph import GossipGraph, cycle_matrix, transition_matrix
from wgossip.holonomy import NotHolonomicError
from wgossip.stomat import StochasticMatrix, vecmat

UNIFORM3 = (F(1, 3),) * 3


def random_walk_at_w(D, rng, length):
    """Random closed walk at w: a sequence of whole orbit loops from w."""
    walk = []
    for _ in range(length):
        walk.extend(D.loop(rng.randrange(len(D.analyses))))
    return walk


class TestBuild:
    def test_f1_nodes_dedup_across_orientations(self, f1):
        D = build_derived_graph(f1.graph, f1.weight)
        orbits = set()
        for a in D.analyses:
            orbits.update(a.orbit)
        assert len(D.nodes) == len(orbits) == 3
        assert len(D.edges) == 6

    def test_all_order_one_is_single_node_with_loops(self, f1):
        D = build_derived_graph(f1.graph, UNIFORM3)
        assert len(D.nodes) == 1
        assert len(D.edges) == len(D.analyses) == 2
        assert all(e.source == e.target == 0 for e in D.edges)
        walk = exhaustive_closed_walk(D)
        assert walk == [0, 1]

    def test_butterfly_orbit_structure(self, f3):
        # two order-2 cycles through w plus an order-1 cycle, each in both orientations
        D = build_derived_graph(f3.graph, f3.weight)
        k1, k2 = 2, 2
        assert len(D.nodes) == k1 + k2 - 1
        assert len(D.edges) == 2 * (k1 + k2 + 1)
        loops = [e for e in D.edges if e.source == e.target]
        assert len(loops) == 2

    def test_edges_follow_orbit_action(self, f1, f2, f3):
        for fx in (f1, f2, f3):
            D = build_derived_graph(fx.graph, fx.weight)
            for e in D.edges:
                P = D.analyses[e.cycle].P
                assert vecmat(D.nodes[e.source], P) == D.nodes[e.target]

    def test_non_holonomic_lists_cycles(self):
        G, w = f1_with_transient()
        with pytest.raises(NotHolonomicError, match="v1v2v3v1"):
            build_derived_graph(G, w)

    def test_every_node_on_loop_through_w(self, f2):
        D = build_derived_graph(f2.graph, f2.weight)
        for c in range(len(D.analyses)):
            loop = D.loop(c)
            assert D.edges[loop[0]].source == 0 and D.edges[loop[-1]].target == 0

    def test_json_and_dot(self, f1):
        D = build_derived_graph(f1.graph, f1.weight)
        doc = D.to_json()
        assert doc["nodes"][0]["coords"] == ["1/2", "1/3", "1/6"]
        assert {e["cycle"] for e in doc["edges"]} == {"v1v2v3v1", "v1v3v2v1"}
        dot = D.to_dot()
        assert dot.startswith("digraph derived {") and dot.count("->") == 6


class TestPsi:
    def test_single_edge(self, f1):
        D = build_derived_graph(f1.graph, f1.weight)
        assert psi(D, [0]) == list(D.cycle_of(0).edges)

    def test_reversal_homomorphism(self, f3):
        D = build_derived_graph(f3.graph, f3.weight)
        rng = random.Random(1)
        for _ in range(50):
            g1 = random_walk_at_w(D, rng, 2)
            g2 = random_walk_at_w(D, rng, 2)
            assert psi(D, g1 + g2) == psi(D, g2) + psi(D, g1)

    def test_row_vector_along_walk_equals_state_product(self, f2):
        D = build_derived_graph(f2.graph, f2.weight)
        rng = random.Random(2)
        for _ in range(20):
            walk = random_walk_at_w(D, rng, 3)
            v = D.weight
            for k in walk:
                v = vecmat(v, D.analyses[D.edges[k].cycle].P)
            P = transition_matrix(f2.graph, psi(D, walk))
            assert vecmat(D.weight, P) == v

    def test_schedule_product_is_reversed_edge_weights(self, f3):
        D = build_derived_graph(f3.graph, f3.weight)
        walk = exhaustive_closed_walk(D, seed=4)
        P = transition_matrix(f3.graph, psi(D, walk))
        Q = StochasticMatrix.identity(f3.graph.dim)
        for k in walk:
            Q = Q @ D.analyses[D.edges[k].cycle].P
        assert P == Q
        assert psi_cycles(D, walk) == [D.edges[k].cycle for k in reversed(walk)]

    def test_invalid_walk(self, f1):
        D = build_derived_graph(f1.graph, f1.weight)
        assert not walk_is_valid(D, [1, 0])
        with pytest.raises(ValueError):
            psi(D, [1, 0])


class TestWalks:
    def test_canonical_walk_exhaustive(self, f1, f2, f3):
        for fx in (f1, f2, f3):
            D = build_derived_graph(fx.graph, fx.weight)
            walk = exhaustive_closed_walk(D)
            assert is_exhaustive_closed(D, walk)
            assert len(walk) == len(D.edges)
            seq = psi(D, walk)
            assert is_spanning(seq, fx.graph) and covers_all_edges(seq, fx.graph)

    def test_seeded_walks_are_deterministic(self, f3):
        D = build_derived_graph(f3.graph, f3.weight)
        assert exhaustive_closed_walk(D, 7) == exhaustive_closed_walk(D, 7)
        assert is_exhaustive_closed(D, exhaustive_closed_walk(D, 7))

    def test_missing_loop_not_exhaustive(self, f3):
        D = build_derived_graph(f3.graph, f3.weight)
        walk = exhaustive_closed_walk(D)
        loop = next(k for k, e in enumerate(D.edges) if e.source == e.target)
        assert not is_exhaustive_closed(D, [k for k in walk if k != loop])
        assert not is_exhaustive_closed(D, [])

    def test_spanning_definition(self):
        I = StochasticMatrix.identity(2)
        G = GossipGraph(4, 1, ((0, 1), (1, 2), (2, 3), (0, 3)), (I,) * 4)
        assert is_spanning([(0, 1), (1, 2), (2, 3)], G)
        assert not is_spanning([(0, 1), (2, 3)], G)

    def test_periodic_schedule(self, f2):
        D = build_derived_graph(f2.graph, f2.weight)
        one = periodic_schedule(D, 1)
        assert one == psi(D, exhaustive_closed_walk(D))
        assert len(periodic_schedule(D, 3)) == 3 * len(one)
        P1 = transition_matrix(f2.graph, one)
        assert transition_matrix(f2.graph, periodic_schedule(D, 2)) == P1 @ P1
        with pytest.raises(ValueError):
            periodic_schedule(D, 0)


def test_f1_cycle_matrices_are_mutually_inverse(f1):
    D = build_derived_graph(f1.graph, f1.weight)
    P, Q = (cycle_matrix(f1.graph, a.cycle) for a in D.analyses)
    assert P @ Q == StochasticMatrix.identity(3)


def test_fixture_other_seeds_stay_holonomic():
    for seed in range(5):
        for kind in ("F2", "F3"):
            fx = gen_fixture(kind, seed=seed)
            D = build_derived_graph(fx.graph, fx.weight)
            assert is_exhaustive_closed(D, exhaustive_closed_walk(D, seed))
