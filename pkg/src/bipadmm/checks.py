"""Self-contained invariant suite backing the ``check`` CLI subcommand.

A condensed version of the test suite that needs nothing but the installed
package: graph algebra identities, protocol accounting, and the
decentralized/matrix equivalence on a small instance.
"""
from __future__ import annotations

import numpy as np

from .graph import laplacian, oriented_incidence
from .netsim import Network
from .prox import L1, NodeProblem, QuadraticFit
from .solver import (
    SolverConfig,
    dpf_admm_composite,
    dpf_admm_single,
    matrix_oracle_composite,
    matrix_oracle_single,
)
from .topology import bipartition_traced, build_mst_traced, simplify
from .testutil import random_connected, random_problems


def _check_incidence_factorization(rng) -> bool:
    for _ in range(50):
        g = random_connected(rng, int(rng.integers(2, 31)))
        X = oriented_incidence(g)
        if not np.array_equal(X.T @ X, laplacian(g)):
            return False
    return True


def _check_simplify_invariants(rng) -> bool:
    for _ in range(20):
        g = random_connected(rng, int(rng.integers(2, 41)))
        sbg = simplify(g, seed=int(rng.integers(2**32)))
        inc = oriented_incidence(sbg.graph).astype(float)
        sv = np.linalg.svd(inc, compute_uv=False)
        if sv.size and sv[-1] / sv[0] <= 1e-8:
            return False
    return True


def _check_protocol_counters(rng) -> bool:
    for _ in range(20):
        l = int(rng.integers(2, 41))
        g = random_connected(rng, l)
        root = int(rng.integers(l))
        mst = build_mst_traced(g, root, seed=int(rng.integers(2**32)))
        if any(st.probe_broadcasts != 1 for st in mst.states):
            return False
        lab = bipartition_traced(mst.tree, root)
        expected = [0 if i == root else 1 for i in range(l)]
        if lab.labels_received != expected:
            return False
    return True


def _check_oracle_equivalence(rng) -> bool:
    g = random_connected(rng, 8)
    sbg = simplify(g, seed=3)
    n = 4
    problems = random_problems(rng, sbg.graph.node_count, n, composite=True)
    cfg = SolverConfig(sigma=1.0, max_iterations=30, n=n)
    dec = dpf_admm_composite(sbg, problems, cfg)
    ora = matrix_oracle_composite(sbg, problems, cfg)
    for Xd, Xo in zip(dec.iterates, ora.iterates):
        denom = max(1.0, float(np.linalg.norm(Xo)))
        if np.linalg.norm(Xd - Xo) / denom > 1e-10:
            return False
    singles = [NodeProblem(QuadraticFit(np.eye(n), np.full(n, float(i)), 1.0))
               for i in range(sbg.graph.node_count)]
    dec = dpf_admm_single(sbg, singles, cfg)
    ora = matrix_oracle_single(sbg, singles, cfg)
    for Xd, Xo in zip(dec.iterates, ora.iterates):
        denom = max(1.0, float(np.linalg.norm(Xo)))
        if np.linalg.norm(Xd - Xo) / denom > 1e-10:
            return False
    return True


def _check_message_volume(rng) -> bool:
    g = random_connected(rng, 10)
    sbg = simplify(g, seed=7)
    n = 5
    problems = [
        NodeProblem(QuadraticFit(np.eye(n), np.zeros(n), 1.0), L1(1.0))
        for _ in range(g.node_count)
    ]
    net = Network(sbg.graph)
    cfg = SolverConfig(sigma=1.0, max_iterations=5, n=n)
    trace = dpf_admm_composite(sbg, problems, cfg, net=net)
    per_iter = 2 * n * sbg.graph.edge_count
    return all(v == per_iter for v in trace.message_volume[1:])


CHECKS = [
    ("incidence factorization equals laplacian", _check_incidence_factorization),
    ("simplified graph is a full-rank bipartite tree", _check_simplify_invariants),
    ("protocol message counters", _check_protocol_counters),
    ("decentralized iterates match matrix oracle", _check_oracle_equivalence),
    ("per-iteration message volume", _check_message_volume),
]


def run_all(verbose: bool = False, seed: int = 0) -> bool:
    ok = True
    for name, fn in CHECKS:
        passed = fn(np.random.default_rng(seed))
        ok = ok and passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}")
    return ok
