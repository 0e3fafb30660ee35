"""Decentralized consensus optimization over simplified bipartite graphs.

Converts a connected graph into a two-colored spanning tree by message
passing, then runs a proximal-free two-block ADMM on it, with matrix-form
oracles, baselines, and a compressed-sensing experiment harness.
"""

from .graph import (
    Graph,
    GraphError,
    SimplestBipartiteGraph,
    is_connected,
    laplacian,
    oriented_incidence,
    parse_edge_list,
)
from .netsim import Network, ProtocolViolation
from .prox import (
    L1,
    L1Residual,
    NodeProblem,
    QuadraticFit,
    Smooth,
    Zero,
    prox_l1,
)
from .solver import (
    SolverConfig,
    Trace,
    dpf_admm_composite,
    dpf_admm_single,
    matrix_oracle_composite,
    matrix_oracle_single,
)
from .topology import bipartition, build_mst, simplify

__all__ = [
    "Graph",
    "GraphError",
    "SimplestBipartiteGraph",
    "Network",
    "ProtocolViolation",
    "NodeProblem",
    "QuadraticFit",
    "L1",
    "L1Residual",
    "Smooth",
    "Zero",
    "prox_l1",
    "SolverConfig",
    "Trace",
    "dpf_admm_single",
    "dpf_admm_composite",
    "matrix_oracle_single",
    "matrix_oracle_composite",
    "build_mst",
    "bipartition",
    "simplify",
    "is_connected",
    "laplacian",
    "oriented_incidence",
    "parse_edge_list",
]

__version__ = "0.1.0"
