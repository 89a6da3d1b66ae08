"""Simulator and algorithms for synchronous message passing with bounded
per-node memory."""

from .bounds import BoundParams, BoundTable, compute_bounds
from .cliques import list_kcliques_all_to_all
from .engine import MetricsRecord, Network, NodeContext, NodeProgram, RunResult, run_simulation
from .errors import (
    BandwidthViolation,
    InsufficientMemory,
    InvalidParams,
    InvalidSpec,
    MemoryExceeded,
    NonTermination,
    SimulationError,
)
from .graphs import Graph, GraphSpec, cycle_of_cliques, generate
from .mergeable import (
    exact_heavy_hitters,
    simulate_composable,
    simulate_fully_mergeable,
    simulate_one_way,
)
from .shuffle import distributed_shuffle, random_order_p_pass
from .sketches import GKQuantileSummary, LinearFreqSketch, MGSummary, make_sketch
from .streaming import naive_p_pass, simulate_p_pass
from .trees import aggregate_up_tree, relabel_by_degree_class

__version__ = "0.1.0"

__all__ = [
    "BandwidthViolation",
    "BoundParams",
    "BoundTable",
    "GKQuantileSummary",
    "Graph",
    "GraphSpec",
    "InsufficientMemory",
    "InvalidParams",
    "InvalidSpec",
    "LinearFreqSketch",
    "MGSummary",
    "MemoryExceeded",
    "MetricsRecord",
    "Network",
    "NodeContext",
    "NodeProgram",
    "NonTermination",
    "RunResult",
    "SimulationError",
    "aggregate_up_tree",
    "compute_bounds",
    "cycle_of_cliques",
    "distributed_shuffle",
    "exact_heavy_hitters",
    "generate",
    "list_kcliques_all_to_all",
    "make_sketch",
    "naive_p_pass",
    "random_order_p_pass",
    "relabel_by_degree_class",
    "run_simulation",
    "simulate_composable",
    "simulate_fully_mergeable",
    "simulate_one_way",
    "simulate_p_pass",
]
