"""Two-step graph simplification over the message-passing substrate.

Step one grows a spanning tree by probe/ack/deny flooding from a root;
step two two-colors the tree by label forwarding.  The result is a
connected bipartite graph with the minimum number of edges, on which the
consensus solvers operate.  Both protocols exchange data strictly between
topology neighbors, in synchronized rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, GraphError, H_LABEL, T_LABEL, SimplestBipartiteGraph
from .netsim import Ack, Deny, Label, Network, Probe

SLEEPING = "sleeping"
ACTIVATED = "activated"


@dataclass
class MstNodeState:
    status: str = SLEEPING
    parent: int | None = None
    links: set = field(default_factory=set)
    probe_broadcasts: int = 0


@dataclass
class MstRun:
    tree: Graph
    network: Network
    states: list


def build_mst_traced(g: Graph, root: int, seed: int = 0,
                     tie_break: str = "seeded") -> MstRun:
    """Run the spanning-tree protocol and keep the network for inspection.

    ``tie_break`` selects how a sleeping node picks among simultaneous
    probers: ``"seeded"`` draws uniformly from a PRNG seeded with ``seed``;
    ``"lowest"`` always picks the smallest sender id (for reproducible
    hand-checked cases).
    """
    l = g.node_count
    if not (0 <= root < l):
        raise GraphError(f"root {root} out of range")
    rng = np.random.default_rng(seed)
    net = Network(g)
    states = [MstNodeState() for _ in range(l)]
    states[root].status = ACTIVATED
    adj = g.adjacency()

    def handler(i):
        def step(inbox):
            st = states[i]
            out = []
            probers = sorted(m.sender for m in inbox if isinstance(m.payload, Probe))
            for m in inbox:
                if isinstance(m.payload, Ack):
                    st.links.add(m.sender)
            if st.status == SLEEPING and probers:
                if tie_break == "lowest" or len(probers) == 1:
                    chosen = probers[0]
                else:
                    chosen = int(rng.choice(probers))
                st.status = ACTIVATED
                st.parent = chosen
                st.links.add(chosen)
                out.append((chosen, Ack()))
                for j in probers:
                    if j != chosen:
                        out.append((j, Deny()))
                out.extend((j, Probe()) for j in adj[i] if j != chosen)
                st.probe_broadcasts += 1
            elif st.status == ACTIVATED:
                out.extend((j, Deny()) for j in probers)
            return out
        return step

    handlers = [handler(i) for i in range(l)]

    # Kick off: the root broadcasts its probe in the first round.
    def root_start(inbox):
        states[root].probe_broadcasts += 1
        return [(j, Probe()) for j in adj[root]]

    net.run_round([root_start if i == root else handlers[i] for i in range(l)])

    while True:
        active = sum(1 for st in states if st.status == ACTIVATED)
        pending = sum(len(net.inbox(i)) for i in range(l))
        if active == l and pending == 0:
            break
        if pending == 0:
            raise GraphError(
                f"graph is disconnected: {l - active} nodes unreachable from {root}"
            )
        net.run_round(handlers)

    edges = {(i, st.parent) for i, st in enumerate(states) if st.parent is not None}
    tree = Graph.from_edges(l, edges)
    return MstRun(tree=tree, network=net, states=states)


def build_mst(g: Graph, root: int, seed: int = 0, tie_break: str = "seeded") -> Graph:
    """Spanning tree of ``g`` grown by message passing from ``root``."""
    return build_mst_traced(g, root, seed=seed, tie_break=tie_break).tree


@dataclass
class LabelRun:
    sbg: SimplestBipartiteGraph
    network: Network
    labels_received: list


def bipartition_traced(tree: Graph, root: int) -> LabelRun:
    """Two-color a spanning tree by forwarding labels from ``root``.

    A node that receives label information more than once exposes a cycle
    (the input was not a tree) and raises GraphError.
    """
    l = tree.node_count
    if not (0 <= root < l):
        raise GraphError(f"root {root} out of range")
    net = Network(tree)
    labels: list = [None] * l
    labels[root] = H_LABEL
    received = [0] * l
    adj = tree.adjacency()

    def handler(i):
        def step(inbox):
            msgs = [m for m in inbox if isinstance(m.payload, Label)]
            received[i] += len(msgs)
            if received[i] > 1 or (labels[i] is not None and msgs):
                raise GraphError(
                    f"node {i} received label information from multiple nodes; "
                    "input is not a tree"
                )
            if not msgs or labels[i] is not None:
                return []
            m = msgs[0]
            labels[i] = T_LABEL if m.payload.tag == H_LABEL else H_LABEL
            return [(j, Label(labels[i])) for j in adj[i] if j != m.sender]
        return step

    handlers = [handler(i) for i in range(l)]

    def root_start(inbox):
        return [(j, Label(H_LABEL)) for j in adj[root]]

    net.run_round([root_start if i == root else handlers[i] for i in range(l)])

    while True:
        unlabeled = sum(1 for lab in labels if lab is None)
        pending = sum(len(net.inbox(i)) for i in range(l))
        if pending == 0:
            if unlabeled:
                raise GraphError(f"{unlabeled} nodes unreachable; input is not a tree")
            break
        net.run_round(handlers)

    sbg = SimplestBipartiteGraph(tree, tuple(labels))
    return LabelRun(sbg=sbg, network=net, labels_received=received)


def bipartition(tree: Graph, root: int) -> SimplestBipartiteGraph:
    return bipartition_traced(tree, root).sbg


def simplify(g: Graph, seed: int = 0) -> SimplestBipartiteGraph:
    """Full two-step simplification with a seeded random root."""
    rng = np.random.default_rng(seed)
    root = int(rng.integers(g.node_count))
    tree = build_mst(g, root, seed=int(rng.integers(2**32)))
    return bipartition(tree, root)
