"""Exact modulo scheduling, placement and routing of loop dataflow graphs
onto coarse-grained reconfigurable arrays via SAT."""
from .arch import CgraSpec, load_arch
from .dfg import DataflowGraph, DfgEdge, DfgNode, load_dfg, make_graph, read_dfg
from .driver import MapResult, SearchConfig, expand_stages, map_loop, utilization
from .encode import build_problem
from .schedule import build_kms, compute_mii, mobility_schedule
from .solve import Mapping, Placement, decode, solve
from .verify import brute_force_min_ii, validate

__all__ = [
    "CgraSpec", "DataflowGraph", "DfgEdge", "DfgNode", "MapResult", "Mapping",
    "Placement", "SearchConfig", "brute_force_min_ii", "build_kms", "build_problem",
    "compute_mii", "decode", "expand_stages", "load_arch", "load_dfg", "make_graph",
    "map_loop", "mobility_schedule", "read_dfg", "solve", "utilization", "validate",
]
