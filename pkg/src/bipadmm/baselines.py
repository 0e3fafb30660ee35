"""Reference competitors: consensus ADMM with a central collector node,
and distributed subgradient descent with neighbor averaging."""
from __future__ import annotations

import numpy as np

from .graph import Graph
from .netsim import Network, Vector
from .prox import (
    L1,
    Zero,
    make_cache,
    penalized_argmin,
    prox_l1,
    subgradient,
)
from .solver import SolverConfig, Trace, _record, _should_stop


def metropolis_weights(g: Graph) -> np.ndarray:
    """Symmetric doubly-stochastic mixing matrix.

    Edge weights 1 / (1 + max(deg_i, deg_j)); the diagonal absorbs the
    remainder so every row sums to one.
    """
    l = g.node_count
    W = np.zeros((l, l))
    for i, j in g.edges:
        w = 1.0 / (1.0 + max(g.degree(i), g.degree(j)))
        W[i, j] = w
        W[j, i] = w
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


def centralized_admm(problems, cfg: SolverConfig) -> Trace:
    """Consensus ADMM over a star: local updates against a shared variable.

    Every node solves its own f_i-penalized subproblem, the collector
    averages and applies the aggregate g (which must be soft-thresholdable:
    plain l1 terms or zero), and per-node duals close the loop.
    """
    l, n, sigma = len(problems), cfg.n, cfg.sigma
    weight = 0.0
    for i, p in enumerate(problems):
        if isinstance(p.g, L1):
            weight += p.g.weight
        elif not isinstance(p.g, Zero):
            raise ValueError(f"node {i}: centralized z-update supports L1/Zero g only")

    caches = [make_cache(p.f, 1.0, sigma) for p in problems]
    states = [None] * l
    X = np.zeros((l, n))
    U = np.zeros((l, n))
    z = np.zeros(n)
    trace = Trace()
    _record(trace, cfg, 0, X, problems=problems)

    volume = 2 * l * n  # every node up to the collector and back, per iteration
    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        for i, p in enumerate(problems):
            X[i], states[i] = penalized_argmin(
                p.f, 1.0, U[i] - z, sigma,
                x_prev=X[i], cache=caches[i], state=states[i],
            )
        v = (X + U).mean(axis=0)
        z = prox_l1(v, weight / (l * sigma)) if weight > 0 else v
        U = U + X - z
        Z = np.tile(z, (l, 1))
        stop = _should_stop(cfg, Z, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, Z, volume=volume, problems=problems,
                force=stop)
        if stop:
            break
    return trace


def dgd(g: Graph, problems, cfg: SolverConfig, step0: float = 1e-3,
        schedule: str = "diminishing", net: Network | None = None) -> Trace:
    """Distributed subgradient descent with Metropolis mixing.

    Each round every node averages the neighbor iterates received at the
    previous barrier, takes a subgradient step on f_i + g_i, and broadcasts
    its new iterate.  Runs on the original graph, not the simplified one.
    """
    if step0 <= 0:
        raise ValueError("step size must be positive")
    if schedule not in ("diminishing", "constant"):
        raise ValueError(f"unknown step schedule {schedule!r}")
    l, n = g.node_count, cfg.n
    W = metropolis_weights(g)
    net = net or Network(g)
    adj = g.adjacency()
    X = np.zeros((l, n))
    last = [{j: np.zeros(n) for j in adj[i]} for i in range(l)]
    step = {"alpha": step0}

    def handler(i):
        def run(inbox):
            for m in inbox:
                last[i][m.sender] = m.payload.data
            mixed = W[i, i] * X[i]
            for j in adj[i]:
                mixed = mixed + W[i, j] * last[i][j]
            grad = subgradient(problems[i].f, X[i]) + subgradient(problems[i].g, X[i])
            X[i] = mixed - step["alpha"] * grad
            return [(j, Vector(X[i])) for j in adj[i]]
        return run

    handlers = [handler(i) for i in range(l)]
    trace = Trace()
    _record(trace, cfg, 0, X, problems=problems)
    volume = 2 * g.edge_count * n

    for k in range(cfg.max_iterations):
        X_prev = X.copy()
        step["alpha"] = step0 / np.sqrt(k + 1) if schedule == "diminishing" else step0
        net.run_round(handlers)
        stop = _should_stop(cfg, X, X_prev)
        trace.iterations = k + 1
        _record(trace, cfg, k + 1, X, volume=volume, problems=problems,
                force=stop)
        if stop:
            break
    return trace


def sweep_dgd_step(g: Graph, problems, cfg: SolverConfig, truth: np.ndarray,
                   grid, schedule: str = "diminishing"):
    """Pick the step size with the best final mean error over ``grid``.

    Returns (best_step, {step: final_error}).
    """
    scores = {}
    norm = np.linalg.norm(truth)
    for step0 in grid:
        trace = dgd(g, problems, cfg, step0=step0, schedule=schedule)
        X = trace.final_x
        err = float(np.mean(np.linalg.norm(X - truth, axis=1)) / norm)
        scores[step0] = err
    best = min(scores, key=scores.get)
    return best, scores
