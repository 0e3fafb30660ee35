"""Proximal-free two-block ADMM over a bipartite spanning tree.

Two solver families are provided, each in two realizations:

* ``dpf_admm_single`` / ``dpf_admm_composite`` run as message-passing node
  handlers on the network simulator: every node touches only its own state
  and data received from tree neighbors.
* ``matrix_oracle_single`` / ``matrix_oracle_composite`` run the very same
  iterations in stacked matrix form with an explicit multiplier.  They
  exist to pin down correctness: the decentralized runs must reproduce the
  oracle iterate sequences to floating-point accuracy.

Multipliers in the decentralized runs are never materialized; with a zero
initial multiplier they are exactly encoded by the running sums of past
iterates, which each node maintains for itself and for its neighbors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, SimplestBipartiteGraph, oriented_incidence
from .netsim import Network, Vector
from .prox import (
    Zero,
    make_cache,
    objective_value,
    penalized_argmin,
)


@dataclass
class SolverConfig:
    sigma: float = 1.0
    max_iterations: int = 100
    n: int = 1
    # Both tolerances must trip to stop early; 0 disables the check.
    tol_consensus: float = 0.0
    tol_change: float = 0.0
    record_iterates: bool = True
    record_objective: bool = False
    stride: int = 1

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.n < 1:
            raise ValueError("local dimension must be at least 1")


@dataclass
class Trace:
    """Per-iteration record of a solver run.

    ``iterates``/``y_iterates`` hold stacked (l, n) arrays at the recorded
    iterations; ``multipliers`` is filled by the matrix oracles only.
    """
    iterates: list = field(default_factory=list)
    y_iterates: list = field(default_factory=list)
    consensus_gap: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    message_volume: list = field(default_factory=list)
    multipliers: list = field(default_factory=list)
    recorded_at: list = field(default_factory=list)
    iterations: int = 0

    @property
    def final_x(self) -> np.ndarray:
        return self.iterates[-1]


def consensus_gap(X: np.ndarray) -> float:
    """Largest pairwise distance among the stacked node iterates."""
    diff = X[:, None, :] - X[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def _check_problems(sbg: SimplestBipartiteGraph, problems, single: bool):
    l = sbg.graph.node_count
    if len(problems) != l:
        raise ValueError(f"expected {l} node problems, got {len(problems)}")
    if l < 2:
        raise GraphError("consensus solvers need at least two nodes")
    if single:
        for i, p in enumerate(problems):
            if not isinstance(p.g, Zero):
                raise ValueError(f"single-objective solver requires g = Zero (node {i})")


def _total_objective(problems, X, Y=None):
    total = 0.0
    for i, p in enumerate(problems):
        vf = objective_value(p.f, X[i])
        vg = objective_value(p.g, X[i] if Y is None else Y[i])
        if vf is None or vg is None:
            return None
        total += vf + vg
    return total


def _record(trace, cfg, k, X, Y=None, lam=None, volume=0, problems=None,
            force=False):
    last = k == cfg.max_iterations
    if k % cfg.stride and not (last or force):
        return
    trace.recorded_at.append(k)
    trace.consensus_gap.append(consensus_gap(X))
    trace.message_volume.append(volume)
    if cfg.record_iterates:
        trace.iterates.append(X.copy())
        if Y is not None:
            trace.y_iterates.append(Y.copy())
        if lam is not None:
            trace.multipliers.append(lam.copy())
    if cfg.record_objective and problems is not None:
        trace.objective.append(_total_objective(problems, X, Y))


def _should_stop(cfg, X, X_prev):
    if cfg.tol_consensus <= 0 or cfg.tol_change <= 0:
        return False
    return (
        consensus_gap(X) < cfg.tol_consensus
        and float(np.linalg.norm(X - X_prev)) < cfg.tol_change
    )


# --- matrix-form oracles ---------------------------------------------------

def matrix_oracle_single(sbg: SimplestBipartiteGraph, problems,
                         cfg: SolverConfig) -> Trace:
    """Stacked two-block ADMM with an explicit multiplier.

    The subproblems decouple node-by-node because the within-set Gram
    blocks of the incidence matrix are diagonal; each is handed to the
    same penalized-argmin evaluators the decentralized solver uses.
    """
    _check_problems(sbg, problems, single=True)
    g = sbg.graph
    l, n = g.node_count, cfg.n
    H, T = sbg.h_nodes, sbg.t_nodes
    A = oriented_incidence(g).astype(float)
    AH, AT = A[:, H], A[:, T]
    deg = [g.degree(i) for i in range(l)]
    sigma = cfg.sigma

    caches = [make_cache(problems[i].f, deg[i], sigma) for i in range(l)]
    states = [None] * l
    X = np.zeros((l, n))
    lam = np.zeros((g.edge_count, n))
    trace = Trace()
    _record(trace, cfg, 0, X, lam=lam, problems=problems)

    volume = 2 * n * g.edge_count  # what the message-passing run exchanges
    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        # H block
        offs = AH.T @ (AT @ X[list(T)] + lam / sigma)
        for p, i in enumerate(H):
            mu = deg[i]
            d_i = offs[p] / np.sqrt(mu)
            X[i], states[i] = penalized_argmin(
                problems[i].f, mu, d_i, sigma,
                x_prev=X_prev[i], cache=caches[i], state=states[i],
            )
        # T block
        offs = AT.T @ (AH @ X[list(H)] + lam / sigma)
        for p, i in enumerate(T):
            mu = deg[i]
            d_i = offs[p] / np.sqrt(mu)
            X[i], states[i] = penalized_argmin(
                problems[i].f, mu, d_i, sigma,
                x_prev=X_prev[i], cache=caches[i], state=states[i],
            )
        lam = lam + sigma * (AH @ X[list(H)] + AT @ X[list(T)])
        stop = _should_stop(cfg, X, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, X, lam=lam, volume=volume, problems=problems,
                force=stop)
        if stop:
            break
    return trace


def _composite_blocks(sbg: SimplestBipartiteGraph):
    g = sbg.graph
    H, T = sbg.h_nodes, sbg.t_nodes
    A = oriented_incidence(g).astype(float)
    AH, AT = A[:, H], A[:, T]
    nh, nt, m = len(H), len(T), g.edge_count
    CH = np.block([
        [AH, np.zeros((m, nt))],
        [np.eye(nh), np.zeros((nh, nt))],
        [np.zeros((nt, nh)), -np.eye(nt)],
    ])
    CT = np.block([
        [np.zeros((m, nh)), AT],
        [-np.eye(nh), np.zeros((nh, nt))],
        [np.zeros((nt, nh)), np.eye(nt)],
    ])
    return CH, CT


def matrix_oracle_composite(sbg: SimplestBipartiteGraph, problems,
                            cfg: SolverConfig) -> Trace:
    """Two-block ADMM on the split (x, y) formulation, explicit multiplier."""
    _check_problems(sbg, problems, single=False)
    g = sbg.graph
    l, n = g.node_count, cfg.n
    H, T = sbg.h_nodes, sbg.t_nodes
    order = list(H) + list(T)  # stacked block ordering
    deg = [g.degree(i) for i in range(l)]
    sigma = cfg.sigma
    CH, CT = _composite_blocks(sbg)

    # Penalty weight per node: C_H^T C_H = diag(D_H + I, I) on the x side,
    # C_T^T C_T = diag(I, D_T + I) on the y side.
    a_x = {i: (deg[i] + 1.0 if sbg.labels[i] == "H" else 1.0) for i in range(l)}
    a_y = {i: (1.0 if sbg.labels[i] == "H" else deg[i] + 1.0) for i in range(l)}
    f_caches = [make_cache(problems[i].f, a_x[i], sigma) for i in range(l)]
    g_caches = [make_cache(problems[i].g, a_y[i], sigma) for i in range(l)]
    f_states = [None] * l
    g_states = [None] * l

    X = np.zeros((l, n))
    Y = np.zeros((l, n))
    lam = np.zeros((CH.shape[0], n))
    trace = Trace()
    _record(trace, cfg, 0, X, Y, lam=lam, problems=problems)

    volume = 2 * n * g.edge_count
    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        # x block
        offs = CH.T @ (CT @ Y[order] + lam / sigma)
        for p, i in enumerate(order):
            e_i = offs[p] / np.sqrt(a_x[i])
            X[i], f_states[i] = penalized_argmin(
                problems[i].f, a_x[i], e_i, sigma,
                x_prev=X_prev[i], cache=f_caches[i], state=f_states[i],
            )
        # y block
        offs = CT.T @ (CH @ X[order] + lam / sigma)
        for p, i in enumerate(order):
            c_i = offs[p] / np.sqrt(a_y[i])
            Y[i], g_states[i] = penalized_argmin(
                problems[i].g, a_y[i], c_i, sigma,
                x_prev=Y[i], cache=g_caches[i], state=g_states[i],
            )
        lam = lam + sigma * (CH @ X[order] + CT @ Y[order])
        stop = _should_stop(cfg, X, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, X, Y, lam=lam, volume=volume, problems=problems,
                force=stop)
        if stop:
            break
    return trace


# --- decentralized message-passing solvers ---------------------------------

@dataclass
class NodeState:
    """Everything one node keeps between rounds."""
    label: str
    degree: int
    x: np.ndarray
    y: np.ndarray
    cum_x: np.ndarray
    cum_y: np.ndarray
    # Per-neighbor caches: latest received vector and the running sum of
    # everything received so far (which encodes the neighbor's cumulative).
    last: dict = field(default_factory=dict)
    recv_sum: dict = field(default_factory=dict)
    f_state: object = None
    g_state: object = None
    f_cache: object = None
    g_cache: object = None


def _init_states(sbg, problems, cfg, a_x, a_y=None):
    n = cfg.n
    states = []
    for i in range(sbg.graph.node_count):
        st = NodeState(
            label=sbg.labels[i],
            degree=sbg.graph.degree(i),
            x=np.zeros(n),
            y=np.zeros(n),
            cum_x=np.zeros(n),
            cum_y=np.zeros(n),
        )
        st.f_cache = make_cache(problems[i].f, a_x[i], cfg.sigma)
        if a_y is not None:
            st.g_cache = make_cache(problems[i].g, a_y[i], cfg.sigma)
        for j in sbg.graph.neighbors(i):
            st.last[j] = np.zeros(n)
            st.recv_sum[j] = np.zeros(n)
        states.append(st)
    return states


def _absorb(st: NodeState, inbox):
    for m in inbox:
        v = m.payload.data
        st.last[m.sender] = v
        st.recv_sum[m.sender] = st.recv_sum[m.sender] + v


def dpf_admm_single(sbg: SimplestBipartiteGraph, problems,
                    cfg: SolverConfig, net: Network | None = None) -> Trace:
    """Decentralized proximal-free ADMM, single objective (g = 0).

    Each iteration is two synchronized rounds: the H nodes update and send
    their new iterates, then the T nodes do the same.  Neighbor coupling
    reduces to negated sums because incidence-column products are -1
    exactly on tree edges.
    """
    _check_problems(sbg, problems, single=True)
    g = sbg.graph
    l, n, sigma = g.node_count, cfg.n, cfg.sigma
    deg = {i: g.degree(i) for i in range(l)}
    states = _init_states(sbg, problems, cfg, a_x=deg)
    net = net or Network(g)
    adj = g.adjacency()
    phase = {"name": "h"}

    def handler(i):
        st = states[i]

        def step(inbox):
            _absorb(st, inbox)
            mine = (phase["name"] == "h") == (st.label == "H")
            if not mine:
                return []
            mu = st.degree
            if st.label == "H":
                coupled = sum(st.last[j] + st.recv_sum[j] for j in adj[i])
            else:
                coupled = sum(st.recv_sum[j] for j in adj[i])
            d_i = np.sqrt(mu) * st.cum_x - coupled / np.sqrt(mu)
            st.x, st.f_state = penalized_argmin(
                problems[i].f, mu, d_i, sigma,
                x_prev=st.x, cache=st.f_cache, state=st.f_state,
            )
            st.cum_x = st.cum_x + st.x
            return [(j, Vector(st.x)) for j in adj[i]]

        return step

    handlers = [handler(i) for i in range(l)]
    trace = Trace()
    X = np.zeros((l, n))
    _record(trace, cfg, 0, X, problems=problems)
    vol_before = net.traffic_report().total_volume

    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        phase["name"] = "h"
        net.run_round(handlers)
        phase["name"] = "t"
        net.run_round(handlers)
        X = np.stack([states[i].x for i in range(l)])
        vol_now = net.traffic_report().total_volume
        stop = _should_stop(cfg, X, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, X, volume=vol_now - vol_before,
                problems=problems, force=stop)
        vol_before = vol_now
        if stop:
            break
    return trace


def dpf_admm_composite(sbg: SimplestBipartiteGraph, problems,
                       cfg: SolverConfig, net: Network | None = None) -> Trace:
    """Decentralized proximal-free ADMM for composite objectives f + g.

    Per iteration: all nodes update x (H nodes then send x), all nodes
    update y (T nodes then send y), running sums advance.  H-side x
    updates couple to neighbor y data, T-side y updates couple to the just
    received neighbor x data; the other two updates are purely local.
    """
    _check_problems(sbg, problems, single=False)
    g = sbg.graph
    l, n, sigma = g.node_count, cfg.n, cfg.sigma
    a_x = {i: (g.degree(i) + 1.0 if sbg.labels[i] == "H" else 1.0) for i in range(l)}
    a_y = {i: (1.0 if sbg.labels[i] == "H" else g.degree(i) + 1.0) for i in range(l)}
    states = _init_states(sbg, problems, cfg, a_x=a_x, a_y=a_y)
    net = net or Network(g)
    adj = g.adjacency()
    phase = {"name": "x"}

    def handler(i):
        st = states[i]

        def step(inbox):
            _absorb(st, inbox)
            sq = np.sqrt(st.degree + 1.0)
            if phase["name"] == "x":
                if st.label == "H":
                    w_i = -sum(st.last[j] + st.recv_sum[j] for j in adj[i])
                    e_i = sq * st.cum_x + (w_i - (st.y + st.cum_y)) / sq
                else:
                    e_i = st.cum_x - (st.y + st.cum_y)
                st.x, st.f_state = penalized_argmin(
                    problems[i].f, a_x[i], e_i, sigma,
                    x_prev=st.x, cache=st.f_cache, state=st.f_state,
                )
                if st.label == "H":
                    return [(j, Vector(st.x)) for j in adj[i]]
                return []
            # y phase
            if st.label == "H":
                c_i = st.cum_y - (st.x + st.cum_x)
            else:
                varpi = -sum(st.recv_sum[j] for j in adj[i])
                c_i = (varpi - (st.x + st.cum_x)) / sq + sq * st.cum_y
            st.y, st.g_state = penalized_argmin(
                problems[i].g, a_y[i], c_i, sigma,
                x_prev=st.y, cache=st.g_cache, state=st.g_state,
            )
            st.cum_x = st.cum_x + st.x
            st.cum_y = st.cum_y + st.y
            if st.label == "T":
                return [(j, Vector(st.y)) for j in adj[i]]
            return []

        return step

    handlers = [handler(i) for i in range(l)]
    trace = Trace()
    X = np.zeros((l, n))
    Y = np.zeros((l, n))
    _record(trace, cfg, 0, X, Y, problems=problems)
    vol_before = net.traffic_report().total_volume

    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        phase["name"] = "x"
        net.run_round(handlers)
        phase["name"] = "y"
        net.run_round(handlers)
        X = np.stack([states[i].x for i in range(l)])
        Y = np.stack([states[i].y for i in range(l)])
        vol_now = net.traffic_report().total_volume
        stop = _should_stop(cfg, X, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, X, Y, volume=vol_now - vol_before,
                problems=problems, force=stop)
        vol_before = vol_now
        if stop:
            break
    return trace
