import itertools
import random
from fractions import Fraction as F

import networkx as nx
import numpy as np
import pytest

from oracles import brute_force_cycle_count, graph_with_identity, numpy_product, random_stochastic
from wgossip.graph import (
    CycleLimitError,
    GossipGraph,
    PointedCycle,
    assemble_local,
    bridges_by_cycles,
    cycle_matrix,
    edge_key,
    enumerate_cycles,
    find_bridges,
    is_bridgeless,
    restrict,
    transition_matrix,
    undirected_cycles,
    validate,
)
from wgossip.stomat import StochasticMatrix

SWAP = StochasticMatrix.from_rows([[0, 1], [1, 0]])
BUTTERFLY = [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4), (4, 5), (5, 6), (4, 6)]


def random_graph(rng, n, m, edges):
    return GossipGraph(n, m, tuple(edges), tuple(random_stochastic(rng, 2 * m, 0.5) for _ in edges))


class TestAssembly:
    def test_identity_pre_gives_identity(self):
        assert assemble_local(StochasticMatrix.identity(4), (0, 2), 3, 2) == StochasticMatrix.identity(6)

    def test_swap_embedding(self):
        A = assemble_local(SWAP, (0, 1), 3, 1)
        assert A == StochasticMatrix.from_permutation([1, 0, 2])

    def test_uniform_averaging_layout(self):
        pre = StochasticMatrix.from_rows([[F(1, 4)] * 4] * 4)
        A = assemble_local(pre, (0, 2), 3, 2)
        row = (F(1, 4), F(1, 4), 0, 0, F(1, 4), F(1, 4))
        for i in (0, 1, 4, 5):
            assert A.rows[i] == row
        assert A.rows[2] == (0, 0, 1, 0, 0, 0) and A.rows[3] == (0, 0, 0, 1, 0, 0)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            assemble_local(SWAP, (1, 1), 3, 1)

    def test_non_incident_coordinates_unchanged(self):
        rng = random.Random(1)
        for _ in range(50):
            n, m = rng.randint(2, 5), rng.randint(1, 3)
            u, v = rng.sample(range(n), 2)
            A = assemble_local(random_stochastic(rng, 2 * m), (u, v), n, m).to_array()
            x = np.array([rng.random() for _ in range(n * m)])
            y = A @ x
            keep = [g for a in range(n) if a not in (u, v) for g in range(a * m, (a + 1) * m)]
            assert np.array_equal(y[keep], x[keep])

    def test_restriction_round_trip(self):
        rng = random.Random(2)
        pre = random_stochastic(rng, 4)
        A = assemble_local(pre, (0, 2), 3, 2)
        C = PointedCycle((0, 1, 2))
        assert restrict(A, C, 2) == A
        idx = [0, 1, 4, 5]
        assert A.restrict(idx) == pre


class TestGraphModel:
    def test_rejects_duplicates_and_missing_nodes(self):
        I = StochasticMatrix.identity(2)
        with pytest.raises(ValueError, match="duplicate"):
            GossipGraph(3, 1, ((0, 1), (1, 0)), (I, I))
        with pytest.raises(ValueError, match="missing node"):
            GossipGraph(2, 1, ((0, 5),), (I,))
        with pytest.raises(ValueError, match="self-loop"):
            GossipGraph(2, 1, ((1, 1),), (I,))
        with pytest.raises(ValueError, match="pre-local"):
            GossipGraph(2, 2, ((0, 1),), (I,))

    def test_edge_lookup_is_orientation_free(self):
        G = graph_with_identity(3, 1, [(0, 1), (1, 2)])
        assert G.edge_id((1, 0)) == G.edge_id((0, 1)) == 0
        with pytest.raises(KeyError):
            G.edge_id((0, 2))


class TestTransition:
    def test_identity_when_empty(self):
        G = graph_with_identity(3, 1, [(0, 1)])
        assert transition_matrix(G, [(0, 1)], 1, 1) == StochasticMatrix.identity(3)
        assert transition_matrix(G, [], 0, 0) == StochasticMatrix.identity(3)

    def test_order_convention_latest_leftmost(self):
        rng = random.Random(3)
        G = random_graph(rng, 3, 2, [(0, 1), (1, 2), (0, 2)])
        seq = [(0, 1), (1, 2)]
        expected = G.local((1, 2)) @ G.local((0, 1))
        assert transition_matrix(G, seq) == expected

    def test_out_of_range(self):
        G = graph_with_identity(3, 1, [(0, 1)])
        with pytest.raises(IndexError):
            transition_matrix(G, [(0, 1)], 0, 2)

    def test_cocycle_and_numpy_oracle(self):
        rng = random.Random(4)
        G = random_graph(rng, 4, 2, [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)])
        for _ in range(20):
            seq = [rng.choice(G.edges) for _ in range(rng.randint(0, 8))]
            t = len(seq)
            s = rng.randint(0, t)
            whole = transition_matrix(G, seq, 0, t)
            assert transition_matrix(G, seq, s, t) @ transition_matrix(G, seq, 0, s) == whole
            mats = [G.local(e) for e in reversed(seq)] or [StochasticMatrix.identity(G.dim)]
            np.testing.assert_allclose(whole.to_array(), numpy_product(mats), atol=1e-12)

    def test_f1_cycle_is_permutation(self, f1):
        from wgossip.stomat import is_permutation

        for C in enumerate_cycles(f1.graph):
            assert is_permutation(cycle_matrix(f1.graph, C))

    def test_both_orientations_use_same_edges(self):
        G = graph_with_identity(4, 1, [(0, 1), (1, 2), (2, 3), (0, 3)])
        for C in enumerate_cycles(G):
            assert {edge_key(e) for e in C.edges} == {edge_key(e) for e in C.reversed().edges}


class TestTopology:
    def test_path_bridges(self):
        G = graph_with_identity(3, 1, [(0, 1), (1, 2)])
        assert find_bridges(G) == [(0, 1), (1, 2)]

    def test_triangle_bridgeless(self):
        assert is_bridgeless(graph_with_identity(3, 1, [(0, 1), (1, 2), (0, 2)]))

    def test_butterfly_bridgeless(self):
        G = graph_with_identity(7, 1, BUTTERFLY)
        assert find_bridges(G) == bridges_by_cycles(G) == []

    def test_bridges_against_networkx_and_cycle_criterion(self):
        rng = random.Random(5)
        for _ in range(100):
            n = rng.randint(2, 7)
            pairs = list(itertools.combinations(range(n), 2))
            edges = rng.sample(pairs, rng.randint(1, len(pairs)))
            G = graph_with_identity(n, 1, edges)
            ours = {edge_key(e) for e in find_bridges(G)}
            H = nx.Graph(edges)
            theirs = {frozenset(e) for e in nx.bridges(H)}
            assert ours == theirs == {edge_key(e) for e in bridges_by_cycles(G)}


class TestCycles:
    def test_triangle_two_orientations(self):
        cycles = enumerate_cycles(graph_with_identity(3, 1, [(0, 1), (1, 2), (0, 2)]))
        assert [C.nodes for C in cycles] == [(0, 1, 2), (0, 2, 1)]
        assert len(undirected_cycles(cycles)) == 1

    def test_butterfly_three_triangles(self):
        cycles = enumerate_cycles(graph_with_identity(7, 1, BUTTERFLY))
        assert len(undirected_cycles(cycles)) == 3
        assert {frozenset(C.nodes) for C in cycles} == {frozenset({0, 1, 2}), frozenset({0, 3, 4}), frozenset({4, 5, 6})}

    def test_k4_has_seven(self):
        edges = list(itertools.combinations(range(4), 2))
        cycles = enumerate_cycles(graph_with_identity(4, 1, edges))
        assert len(undirected_cycles(cycles)) == 7 == brute_force_cycle_count(4, edges)
        assert len(cycles) == 14

    def test_random_graphs_against_brute_force_and_networkx(self):
        rng = random.Random(6)
        for _ in range(60):
            n = rng.randint(3, 6)
            pairs = list(itertools.combinations(range(n), 2))
            edges = rng.sample(pairs, rng.randint(2, len(pairs)))
            cycles = enumerate_cycles(graph_with_identity(n, 1, edges))
            count = len(undirected_cycles(cycles))
            assert count == brute_force_cycle_count(n, edges)
            nx_count = sum(1 for c in nx.simple_cycles(nx.Graph(edges)) if len(c) >= 3)
            assert count == nx_count
            assert len(cycles) == 2 * count
            for C in cycles:
                assert C.basepoint == min(C.nodes)
            assert [C.nodes for C in cycles] == sorted(C.nodes for C in cycles)

    def test_cycle_cap(self):
        edges = list(itertools.combinations(range(6), 2))
        with pytest.raises(CycleLimitError):
            enumerate_cycles(graph_with_identity(6, 1, edges), limit=10)

    def test_pointed_cycle_helpers(self):
        C = PointedCycle((0, 2, 1))
        assert C.label == "v1v3v2v1"
        assert C.edges == ((0, 2), (2, 1), (1, 0))
        assert C.rotate(1).nodes == (2, 1, 0)
        assert C.reversed().nodes == (0, 1, 2)
        with pytest.raises(ValueError):
            PointedCycle((0, 1))
        with pytest.raises(ValueError):
            PointedCycle((0, 1, 0))

    def test_restrict_vector_keeps_covered_agents(self):
        C = PointedCycle((0, 1, 3))
        assert restrict(tuple(range(8)), C, 2) == (0, 1, 2, 3, 6, 7)


class TestValidate:
    def test_triangle_passes(self):
        d = validate(graph_with_identity(3, 1, [(0, 1), (1, 2), (0, 2)]))
        assert d.theorem_ready and d.messages == []

    def test_disconnected(self):
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
        d = validate(graph_with_identity(6, 1, edges))
        assert "not connected" in d.messages and not d.theorem_ready

    def test_pendant_bridge(self):
        d = validate(graph_with_identity(4, 1, [(0, 1), (1, 2), (0, 2), (2, 3)]))
        assert "bridge present: (v3,v4)" in d.messages

    def test_two_nodes_no_cycles(self):
        d = validate(graph_with_identity(2, 1, [(0, 1)]))
        assert not d.has_cycles
        assert any(msg.startswith("no cycles") for msg in d.messages)
