"""Holonomy analysis and simulation of matrix-weighted gossip processes."""

__version__ = "0.1.0"

from .derived import DerivedGraph, build_derived_graph, exhaustive_closed_walk, psi
from .engine import (
    LimitReport,
    epsilon_bound,
    global_partition,
    limit_group,
    predicted_limit_blocks,
    run_to_convergence,
    simulate,
    verify_theorem,
)
from .fixtures import gen_fixture
from .graph import GossipGraph, PointedCycle, enumerate_cycles, transition_matrix, validate
from .holonomy import Partition, analyze_graph, cycle_partition, merge_partitions, w_order
from .scenario import load_scenario
from .stomat import StochasticMatrix

__all__ = [
    "DerivedGraph",
    "GossipGraph",
    "LimitReport",
    "Partition",
    "PointedCycle",
    "StochasticMatrix",
    "analyze_graph",
    "build_derived_graph",
    "cycle_partition",
    "enumerate_cycles",
    "epsilon_bound",
    "exhaustive_closed_walk",
    "gen_fixture",
    "global_partition",
    "limit_group",
    "load_scenario",
    "merge_partitions",
    "predicted_limit_blocks",
    "psi",
    "run_to_convergence",
    "simulate",
    "transition_matrix",
    "validate",
    "verify_theorem",
    "w_order",
]
