import random
from fractions import Fraction as F

import pytest

from oracles import graph_with_identity, is_primitive_wielandt
from wgossip.fixtures import f1_with_transient, gen_fixture
from wgossip.graph import PointedCycle, cycle_matrix, enumerate_cycles, restrict
from wgossip.holonomy import (
    FINITELY_NON_HOLONOMIC,
    HOLONOMIC,
    NON_HOLONOMIC,
    ExactModeError,
    NotHolonomicError,
    Partition,
    analyze_cycle,
    analyze_graph,
    as_weight,
    block_permutation,
    classify,
    cycle_partition,
    is_w_holonomic_for_graph,
    merge_partitions,
    orbit_set,
    stabilized_indices,
    structural_order_bound,
    transport_basepoint,
    w_order,
)
from wgossip.stomat import StochasticMatrix, frobenius_form, period, vecmat

UNIFORM3 = (F(1, 3),) * 3

# 21-state butterfly partitions (1-based)
PI_C1 = Partition.from_one_based(21, [2, 4, 7, *range(10, 22)], [[1, 3, 5], [6, 8, 9]])
PI_C2 = Partition.from_one_based(21, [3, 4, 5, 6, 7, 8, 9, 10, 11, *range(16, 22)], [[12, 13], [1, 2], [14, 15]])
PI_MERGED = Partition.from_one_based(21, [4, 7, 10, 11, *range(16, 22)], [[1, 2, 3, 5], [6, 8, 9], [12, 13], [14, 15]])


def random_partition(rng, size):
    idx = list(range(size))
    rng.shuffle(idx)
    k0 = rng.randint(0, size)
    block0, rest = idx[:k0], idx[k0:]
    blocks = []
    while rest:
        cut = rng.randint(1, len(rest))
        blocks.append(tuple(rest[:cut]))
        rest = rest[cut:]
    return Partition(size, tuple(block0), tuple(blocks))


class TestWeights:
    def test_rejects_floats(self):
        with pytest.raises(ExactModeError, match="w-order requires exact mode"):
            as_weight([0.5, 0.5])

    def test_rejects_non_simplex(self):
        with pytest.raises(ValueError, match="positive"):
            as_weight([1, 0])
        with pytest.raises(ValueError, match="sum"):
            as_weight(["1/2", "1/3"])

    def test_float_graph_rejected(self, f1):
        G = f1.graph.to_float()
        C = enumerate_cycles(G)[0]
        with pytest.raises(ExactModeError):
            w_order(G, C, f1.weight)


class TestOrders:
    def test_f1_generic_and_uniform(self, f1):
        for C in enumerate_cycles(f1.graph):
            assert w_order(f1.graph, C, f1.weight) == 3
            assert w_order(f1.graph, C, UNIFORM3) == 1

    def test_fixed_vector_has_order_one(self, f2):
        # every cycle matrix of F2 fixes w restricted to the averaged states
        for C in enumerate_cycles(f2.graph):
            P = cycle_matrix(f2.graph, C)
            if block_permutation(P, [0, 2, 4, 6]) == (0, 1, 2, 3):
                assert w_order(f2.graph, C, f2.weight) == 1

    def test_orbit_f1(self, f1):
        C = enumerate_cycles(f1.graph)[0]
        orbit = orbit_set(f1.graph, C, f1.weight)
        assert len(set(orbit)) == 3 and orbit[0] == f1.weight
        assert sorted(orbit[1]) == sorted(f1.weight)
        P = cycle_matrix(f1.graph, C)
        for a, v in enumerate(orbit):
            assert vecmat(v, P) == orbit[(a + 1) % 3]

    def test_orbit_order_one(self, f3):
        C = [C for C in enumerate_cycles(f3.graph) if C.nodes == (4, 5, 6)][0]
        assert orbit_set(f3.graph, C, f3.weight) == (f3.weight,)

    def test_orbit_of_non_holonomic_raises(self):
        G, w = f1_with_transient()
        with pytest.raises(NotHolonomicError):
            orbit_set(G, enumerate_cycles(G)[0], w)

    def test_minimality_and_closure_on_fixtures(self, f1, f2, f3):
        for fx in (f1, f2, f3):
            for C in enumerate_cycles(fx.graph):
                k = w_order(fx.graph, C, fx.weight)
                P = cycle_matrix(fx.graph, C)
                v = fx.weight
                for j in range(1, k + 1):
                    v = vecmat(v, P)
                    assert (v == fx.weight) == (j == k)

    def test_orders_match_declared(self, f1, f2, f3):
        for fx in (f1, f2, f3):
            rep = analyze_graph(fx.graph, fx.weight)
            for a in rep.analyses:
                assert a.order_w == fx.declared["cycles"][a.cycle.label]["order"]

    def test_equal_weights_can_lower_order(self):
        fx = gen_fixture("F3", seed=0)
        w = list(fx.weight)
        # make the swapped pair 4,7 equal; the C1 order drops to 1
        avg = (w[3] + w[6]) / 2
        w[3] = w[6] = avg
        fx2 = gen_fixture("F3", seed=0, weight=w)
        C1 = PointedCycle((0, 1, 2))
        assert w_order(fx.graph, C1, fx.weight) == 2
        assert w_order(fx2.graph, C1, fx2.weight) == 1

    def test_cap_limited_witness(self, f1):
        C = enumerate_cycles(f1.graph)[0]
        a = analyze_cycle(f1.graph, C, f1.weight, cap=2)
        assert a.order_w == 0 and "cap-limited" in a.witness


class TestPartitions:
    def test_f1_whole_matrix_is_permutation_block(self, f1):
        for C in enumerate_cycles(f1.graph):
            part = cycle_partition(cycle_matrix(f1.graph, C))
            assert part.block0 == (0, 1, 2) and part.blocks == ()

    def test_transient_gives_none(self):
        G, _ = f1_with_transient()
        assert cycle_partition(cycle_matrix(G, enumerate_cycles(G)[0])) is None

    def test_f3_cycle_partitions(self, f3):
        P1 = cycle_matrix(f3.graph, PointedCycle((0, 1, 2)))
        P2 = cycle_matrix(f3.graph, PointedCycle((0, 3, 4)))
        assert cycle_partition(P1) == PI_C1
        assert cycle_partition(P2) == PI_C2
        assert merge_partitions(PI_C1, PI_C2) == PI_MERGED

    def test_partition_blocks_and_uncovered_agents(self, f3):
        for C in enumerate_cycles(f3.graph):
            P = cycle_matrix(f3.graph, C)
            part = cycle_partition(P)
            uncovered = [g for a in range(7) if a not in C.nodes for g in range(3 * a, 3 * a + 3)]
            assert set(uncovered) <= set(part.block0)
            block_permutation(P, part.block0)  # closed permutation
            for blk in part.blocks:
                sub = P.submatrix(blk)
                assert all(sum(r) == 1 for r in sub)  # closed class

    def test_partition_validation(self):
        with pytest.raises(ValueError, match="not a partition"):
            Partition(3, (0,), ((1,),))
        with pytest.raises(ValueError):
            Partition(3, (0, 1), ((1, 2),))

    def test_one_based_round_trip(self):
        assert Partition.from_one_based(21, *PI_MERGED.one_based()) == PI_MERGED
        assert PI_MERGED.to_json()["blocks"][0] == [1, 2, 3, 5]

    def test_merge_idempotent_commutative_associative(self):
        rng = random.Random(1)
        for _ in range(300):
            size = rng.randint(1, 10)
            a, b, c = (random_partition(rng, size) for _ in range(3))
            assert merge_partitions(a, a) == a
            ab = merge_partitions(a, b)
            assert ab == merge_partitions(b, a)
            assert merge_partitions(ab, c) == merge_partitions(a, merge_partitions(b, c))
            assert set(ab.block0) == set(a.block0) & set(b.block0)
            # every input block lands inside a single merged block
            for blk in a.blocks + b.blocks:
                hosts = {k for k, m in enumerate(ab.blocks) if set(blk) & set(m)}
                assert len(hosts) == 1

    def test_merge_size_mismatch(self):
        with pytest.raises(ValueError):
            merge_partitions(Partition(2, (0, 1), ()), Partition(3, (0, 1, 2), ()))


class TestStructuralBound:
    def test_three_cycle(self, f1):
        C = enumerate_cycles(f1.graph)[0]
        P = cycle_matrix(f1.graph, C)
        assert structural_order_bound(P, cycle_partition(P)) == 3

    def test_swap_plus_primitive(self):
        for seed in range(10):
            fx = gen_fixture("F3", seed=seed)
            C = PointedCycle((0, 1, 2))
            P = cycle_matrix(fx.graph, C)
            L = structural_order_bound(P, cycle_partition(P))
            assert L == 2
            assert L % w_order(fx.graph, C, fx.weight) == 0

    def test_primitive_irreducible(self):
        h = F(1, 2)
        pre = StochasticMatrix.from_rows([[h, h], [h, h]])
        from wgossip.graph import GossipGraph

        G = GossipGraph(3, 1, ((0, 1), (1, 2), (0, 2)), (pre, pre, pre))
        P = cycle_matrix(G, enumerate_cycles(G)[0])
        assert structural_order_bound(P, cycle_partition(P)) == 1

    def test_blocks_of_order_power_are_primitive(self, f2, f3):
        for fx in (f2, f3):
            rep = analyze_graph(fx.graph, fx.weight)
            for a in rep.analyses:
                for blk in a.partition.blocks:
                    sub = StochasticMatrix.from_rows(a.P.submatrix(blk))
                    powered = sub.power(a.order_w)
                    if period(sub) == 1:
                        assert is_primitive_wielandt(powered.rows)
                    else:
                        for cls in frobenius_form(powered):
                            assert is_primitive_wielandt(powered.submatrix(cls))


class TestClassification:
    def test_labels(self):
        assert classify(0) == NON_HOLONOMIC
        assert classify(1) == HOLONOMIC
        assert classify(3) == FINITELY_NON_HOLONOMIC

    def test_f1(self, f1):
        C = enumerate_cycles(f1.graph)[0]
        assert analyze_cycle(f1.graph, C, f1.weight).classification == FINITELY_NON_HOLONOMIC
        assert analyze_cycle(f1.graph, C, UNIFORM3).classification == HOLONOMIC

    def test_transient_cycle_non_holonomic(self):
        G, w = f1_with_transient()
        rep = analyze_graph(G, w)
        assert not rep.holonomic
        assert {a.cycle.label for a in rep.offending} == {"v1v2v3v1", "v1v3v2v1"}
        assert all(a.classification == NON_HOLONOMIC and a.witness.startswith("transient class") for a in rep.offending)
        assert not is_w_holonomic_for_graph(G, w)

    def test_no_cycles_vacuous(self):
        G = graph_with_identity(2, 1, [(0, 1)])
        rep = analyze_graph(G, (F(1, 2), F(1, 2)))
        assert rep.holonomic and rep.note == "no cycles"

    def test_report_json(self, f1):
        a = analyze_graph(f1.graph, f1.weight).analyses[0]
        doc = a.to_json()
        assert doc["order_w"] == 3 and doc["orbit"][0] == ["1/2", "1/3", "1/6"]
        assert doc["partition"] == {"block0": [1, 2, 3], "blocks": []}


class TestTransport:
    def test_identity_rotation(self, f1):
        C = enumerate_cycles(f1.graph)[0]
        C2, w2 = transport_basepoint(f1.graph, C, f1.weight, 0)
        assert C2 == C and w2 == f1.weight

    def test_all_rotations_all_fixtures(self, f1, f2, f3):
        for fx in (f1, f2, f3):
            for C in enumerate_cycles(fx.graph):
                k = w_order(fx.graph, C, fx.weight)
                for r in range(len(C)):
                    Cr, wr = transport_basepoint(fx.graph, C, fx.weight, r)
                    assert Cr.basepoint == C.nodes[r]
                    Pr = cycle_matrix(fx.graph, Cr)
                    assert vecmat(wr, Pr.power(k)) == wr
                    assert w_order(fx.graph, Cr, wr) == k
                    assert w_order(fx.graph, Cr, fx.weight) == k

    def test_non_holonomic_raises(self):
        G, w = f1_with_transient()
        with pytest.raises(NotHolonomicError):
            transport_basepoint(G, enumerate_cycles(G)[0], w, 1)


def test_stabilized_indices_generic_weight(f1, f3):
    for fx in (f1, f3):
        for a in analyze_graph(fx.graph, fx.weight).analyses:
            assert stabilized_indices(a) == a.partition.block0


def test_restricted_weight_length(f2):
    C = enumerate_cycles(f2.graph)[0]
    assert len(restrict(f2.weight, C, 2)) == 2 * len(C)
