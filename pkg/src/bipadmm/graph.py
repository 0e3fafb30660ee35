"""Undirected graphs, their matrix representations, and the bipartite
spanning-tree structure the solvers run on.

Node indices are 0-based everywhere.  Edges are unordered pairs stored as
(i, j) with i < j.  All matrices are dense; the library targets desk-scale
networks (tens of nodes), where sparse structures buy nothing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    """Malformed graph input or violated structural precondition."""


def _canonical(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: a node count and a set of edges.

    Immutable after construction, so instances can be freely shared.
    """

    node_count: int
    edges: frozenset

    def __post_init__(self):
        if self.node_count < 1:
            raise GraphError("node_count must be positive")
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise GraphError(f"edge ({i}, {j}) out of range [0, {self.node_count})")
            if i > j:
                raise GraphError(f"edge ({i}, {j}) not in canonical (i < j) order")

    @classmethod
    def from_edges(cls, node_count, pairs):
        """Build a graph from an iterable of (i, j) pairs in either order."""
        return cls(node_count, frozenset(_canonical(i, j) for i, j in pairs))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_list(self):
        """Edges sorted lexicographically; fixes row order for incidence matrices."""
        return sorted(self.edges)

    def neighbors(self, i: int):
        return sorted(j if a == i else a for a, j in self.edges if a == i or j == i)

    def adjacency(self):
        """Neighbor lists for all nodes (list of sorted lists)."""
        adj = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def degree(self, i: int) -> int:
        return sum(1 for a, b in self.edges if a == i or b == i)

    def has_edge(self, i: int, j: int) -> bool:
        return _canonical(i, j) in self.edges


def parse_edge_list(text: str) -> Graph:
    """Parse the edge-list text format.

    Format: ``#`` comment lines, one ``l=<count>`` header, then one ``i j``
    pair per line (whitespace-separated, 0-based).  Rejects self-loops,
    duplicate edges and out-of-range indices, naming the offending line.
    """
    node_count = None
    edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("l="):
            if node_count is not None:
                raise GraphError(f"line {lineno}: duplicate 'l=' header")
            try:
                node_count = int(line[2:])
            except ValueError:
                raise GraphError(f"line {lineno}: malformed node count {line[2:]!r}")
            if node_count < 1:
                raise GraphError(f"line {lineno}: node count must be positive")
            continue
        if node_count is None:
            raise GraphError(f"line {lineno}: edge before 'l=' header")
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer endpoint in {line!r}")
        if i == j:
            raise GraphError(f"line {lineno}: self-loop at node {i}")
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise GraphError(f"line {lineno}: endpoint out of range in ({i}, {j})")
        edge = _canonical(i, j)
        if edge in edges:
            raise GraphError(f"line {lineno}: duplicate edge ({i}, {j})")
        edges.add(edge)
    if node_count is None:
        raise GraphError("missing 'l=' header")
    return Graph(node_count, frozenset(edges))


def format_edge_list(g: Graph) -> str:
    """Inverse of :func:`parse_edge_list`."""
    lines = [f"l={g.node_count}"]
    lines += [f"{i} {j}" for i, j in g.edge_list()]
    return "\n".join(lines) + "\n"


def laplacian(g: Graph) -> np.ndarray:
    """Graph Laplacian: degrees on the diagonal, -1 per edge.  Integer dtype."""
    lap = np.zeros((g.node_count, g.node_count), dtype=np.int64)
    for i, j in g.edges:
        lap[i, i] += 1
        lap[j, j] += 1
        lap[i, j] = -1
        lap[j, i] = -1
    return lap


def oriented_incidence(g: Graph) -> np.ndarray:
    """Edge-by-node oriented incidence matrix, integer dtype.

    Rows follow the sorted edge list; each edge (i, j) with i < j gets +1
    at column i and -1 at column j.  Any orientation satisfies
    X^T X = laplacian(g); fixing this one makes tests deterministic.
    """
    inc = np.zeros((g.edge_count, g.node_count), dtype=np.int64)
    for row, (i, j) in enumerate(g.edge_list()):
        inc[row, i] = 1
        inc[row, j] = -1
    return inc


def is_connected(g: Graph) -> bool:
    """True iff a traversal from node 0 reaches every node."""
    if g.node_count == 1:
        return True
    adj = g.adjacency()
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == g.node_count


H_LABEL = "H"
T_LABEL = "T"


@dataclass(frozen=True)
class SimplestBipartiteGraph:
    """A spanning tree together with a valid two-coloring of its nodes.

    The base graph must be connected with exactly l-1 edges, and every edge
    must join an H node to a T node.  Its oriented incidence matrix then has
    full row rank, which is what lets the consensus solvers drop all
    proximal terms.
    """

    graph: Graph
    labels: tuple

    def __post_init__(self):
        g = self.graph
        if len(self.labels) != g.node_count:
            raise GraphError("one label per node required")
        if any(lab not in (H_LABEL, T_LABEL) for lab in self.labels):
            raise GraphError("labels must be 'H' or 'T'")
        if g.edge_count != g.node_count - 1:
            raise GraphError(
                f"expected {g.node_count - 1} edges (spanning tree), got {g.edge_count}"
            )
        if not is_connected(g):
            raise GraphError("base graph is not connected")
        for i, j in g.edges:
            if self.labels[i] == self.labels[j]:
                raise GraphError(f"edge ({i}, {j}) joins two {self.labels[i]!r} nodes")

    @property
    def h_nodes(self):
        return tuple(i for i, lab in enumerate(self.labels) if lab == H_LABEL)

    @property
    def t_nodes(self):
        return tuple(i for i, lab in enumerate(self.labels) if lab == T_LABEL)
