"""Solver correctness: decentralized runs against the matrix oracles, and
both against cvxpy on the underlying consensus problems."""
import cvxpy as cp
import numpy as np
import pytest

from bipadmm.graph import Graph, GraphError, oriented_incidence
from bipadmm.netsim import Network
from bipadmm.prox import L1, NodeProblem, QuadraticFit, Zero
from bipadmm.solver import (
    SolverConfig,
    consensus_gap,
    dpf_admm_composite,
    dpf_admm_single,
    matrix_oracle_composite,
    matrix_oracle_single,
)
from bipadmm.topology import simplify
from bipadmm.testutil import random_connected, random_problems


def small_sbg(rng, max_nodes=8):
    g = random_connected(rng, int(rng.integers(2, max_nodes + 1)))
    return simplify(g, seed=int(rng.integers(1000)))


def rel_diff(A, B):
    return np.linalg.norm(A - B) / max(1.0, np.linalg.norm(B))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(sigma=0.0)
    with pytest.raises(ValueError):
        SolverConfig(n=0)


def test_consensus_gap_matches_double_loop():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 4))
    best = max(
        np.linalg.norm(X[i] - X[j]) for i in range(6) for j in range(6)
    )
    assert consensus_gap(X) == pytest.approx(best)
    assert consensus_gap(np.tile(X[0], (4, 1))) == 0.0


def test_problem_count_and_single_g_checks():
    rng = np.random.default_rng(1)
    sbg = simplify(random_connected(rng, 4), seed=0)
    cfg = SolverConfig(n=2, max_iterations=1)
    probs = random_problems(rng, 4, 2)
    with pytest.raises(ValueError, match="expected 4"):
        matrix_oracle_single(sbg, probs[:3], cfg)
    bad = [NodeProblem(p.f, L1(1.0)) for p in probs]
    with pytest.raises(ValueError, match="g = Zero"):
        dpf_admm_single(sbg, bad, cfg)


# --- decentralized == oracle -----------------------------------------------

def test_single_matches_oracle_iterate_by_iterate():
    rng = np.random.default_rng(2)
    for _ in range(8):
        sbg = small_sbg(rng)
        l, n = sbg.graph.node_count, int(rng.integers(1, 6))
        problems = random_problems(rng, l, n)
        cfg = SolverConfig(sigma=float(rng.uniform(0.3, 3)), max_iterations=25, n=n)
        dec = dpf_admm_single(sbg, problems, cfg)
        ora = matrix_oracle_single(sbg, problems, cfg)
        assert dec.recorded_at == ora.recorded_at
        for Xd, Xo in zip(dec.iterates, ora.iterates):
            assert rel_diff(Xd, Xo) <= 1e-10


def test_composite_matches_oracle_iterate_by_iterate():
    rng = np.random.default_rng(3)
    for _ in range(8):
        sbg = small_sbg(rng)
        l, n = sbg.graph.node_count, int(rng.integers(1, 6))
        problems = random_problems(rng, l, n, composite=True)
        cfg = SolverConfig(sigma=float(rng.uniform(0.3, 3)), max_iterations=25, n=n)
        dec = dpf_admm_composite(sbg, problems, cfg)
        ora = matrix_oracle_composite(sbg, problems, cfg)
        for Xd, Xo in zip(dec.iterates, ora.iterates):
            assert rel_diff(Xd, Xo) <= 1e-10
        for Yd, Yo in zip(dec.y_iterates, ora.y_iterates):
            assert rel_diff(Yd, Yo) <= 1e-10


# --- oracle internals ------------------------------------------------------

def test_oracle_multiplier_is_sigma_scaled_residual_sum():
    rng = np.random.default_rng(4)
    sbg = small_sbg(rng)
    g = sbg.graph
    n = 3
    problems = random_problems(rng, g.node_count, n)
    cfg = SolverConfig(sigma=1.7, max_iterations=12, n=n)
    trace = matrix_oracle_single(sbg, problems, cfg)
    A = oriented_incidence(g).astype(float)
    running = np.zeros((g.edge_count, n))
    for X, lam in zip(trace.iterates[1:], trace.multipliers[1:]):
        running = running + cfg.sigma * (A @ X)
        assert np.allclose(lam, running, atol=1e-10)


def test_incidence_within_set_gram_blocks_are_diagonal():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sbg = small_sbg(rng, max_nodes=20)
        A = oriented_incidence(sbg.graph).astype(float)
        for cols in (sbg.h_nodes, sbg.t_nodes):
            B = A[:, list(cols)]
            G = B.T @ B
            assert np.allclose(G, np.diag(np.diag(G)))


def test_constraint_feasibility_at_convergence():
    rng = np.random.default_rng(6)
    sbg = small_sbg(rng)
    g = sbg.graph
    n = 4
    problems = random_problems(rng, g.node_count, n)
    cfg = SolverConfig(sigma=1.0, max_iterations=400, n=n, stride=400)
    trace = matrix_oracle_single(sbg, problems, cfg)
    A = oriented_incidence(g).astype(float)
    assert np.linalg.norm(A @ trace.final_x) < 1e-6


# --- convergence to the true optimum ---------------------------------------

def _cvx_single_optimum(problems, n):
    z = cp.Variable(n)
    obj = 0
    for p in problems:
        f = p.f
        obj = obj + 0.5 * f.scale * cp.sum_squares(f.matrix @ z - f.offset)
    cp.Problem(cp.Minimize(obj)).solve(solver=cp.CLARABEL)
    return z.value


def test_single_converges_to_consensus_optimum():
    rng = np.random.default_rng(7)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 3
    problems = [
        NodeProblem(QuadraticFit(rng.standard_normal((n + 1, n)),
                                 rng.standard_normal(n + 1), 1.0))
        for _ in range(l)
    ]
    cfg = SolverConfig(sigma=1.0, max_iterations=600, n=n, stride=600)
    trace = dpf_admm_single(sbg, problems, cfg)
    star = _cvx_single_optimum(problems, n)
    for i in range(l):
        assert np.allclose(trace.final_x[i], star, atol=1e-5)


def test_two_node_average_recovered_exactly():
    # f_i(x) = 0.5 (x - t_i)^2 with t = (1, 3): consensus optimum is 2
    g = Graph.from_edges(2, [(0, 1)])
    sbg = simplify(g, seed=0)
    problems = [
        NodeProblem(QuadraticFit(np.eye(1), np.array([t]), 1.0)) for t in (1.0, 3.0)
    ]
    cfg = SolverConfig(sigma=1.0, max_iterations=300, n=1, stride=300)
    trace = dpf_admm_single(sbg, problems, cfg)
    assert np.allclose(trace.final_x, 2.0, atol=1e-8)


def test_composite_converges_to_lasso_optimum():
    rng = np.random.default_rng(8)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 4
    problems = [
        NodeProblem(
            QuadraticFit(rng.standard_normal((2, n)), rng.standard_normal(2), 1.0),
            L1(0.3),
        )
        for _ in range(l)
    ]
    z = cp.Variable(n)
    obj = sum(
        0.5 * cp.sum_squares(p.f.matrix @ z - p.f.offset) for p in problems
    ) + 0.3 * l * cp.norm1(z)
    cp.Problem(cp.Minimize(obj)).solve(solver=cp.CLARABEL)
    cfg = SolverConfig(sigma=1.0, max_iterations=2000, n=n, stride=2000)
    trace = dpf_admm_composite(sbg, problems, cfg)
    for i in range(l):
        assert np.allclose(trace.final_x[i], z.value, atol=1e-5)
        assert np.allclose(trace.y_iterates[-1][i], z.value, atol=1e-5)


def test_sigma_robustness_same_limit():
    rng = np.random.default_rng(9)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 3
    problems = [
        NodeProblem(QuadraticFit(rng.standard_normal((n + 1, n)),
                                 rng.standard_normal(n + 1), 1.0))
        for _ in range(l)
    ]
    limits = []
    for sigma in (0.1, 1.0, 10.0):
        cfg = SolverConfig(sigma=sigma, max_iterations=3000, n=n, stride=3000)
        limits.append(matrix_oracle_single(sbg, problems, cfg).final_x)
    assert np.allclose(limits[0], limits[1], atol=1e-6)
    assert np.allclose(limits[1], limits[2], atol=1e-6)


def test_composite_with_zero_g_reaches_single_limit():
    rng = np.random.default_rng(10)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 3
    problems = [
        NodeProblem(QuadraticFit(rng.standard_normal((n + 1, n)),
                                 rng.standard_normal(n + 1), 1.0), Zero())
        for _ in range(l)
    ]
    cfg = SolverConfig(sigma=1.0, max_iterations=3000, n=n, stride=3000)
    single = matrix_oracle_single(sbg, problems, cfg).final_x
    composite = matrix_oracle_composite(sbg, problems, cfg).final_x
    assert np.allclose(single, composite, atol=1e-6)


# --- bookkeeping -----------------------------------------------------------

def test_tolerance_stopping_rule():
    rng = np.random.default_rng(11)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 2
    problems = random_problems(rng, l, n)
    cfg = SolverConfig(sigma=1.0, max_iterations=5000, n=n,
                       tol_consensus=1e-6, tol_change=1e-6, stride=10)
    trace = matrix_oracle_single(sbg, problems, cfg)
    assert trace.iterations < 5000
    assert consensus_gap(trace.final_x) < 1e-6


def test_early_stop_records_final_iterate_off_the_stride_grid():
    rng = np.random.default_rng(15)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 2
    problems = [
        NodeProblem(QuadraticFit(np.eye(n), rng.standard_normal(n), 1.0))
        for _ in range(l)
    ]
    cfg = SolverConfig(sigma=1.0, max_iterations=100000, n=n,
                       tol_consensus=1e-8, tol_change=1e-8, stride=100000)
    trace = matrix_oracle_single(sbg, problems, cfg)
    assert trace.iterations < 100000
    assert trace.recorded_at[-1] == trace.iterations
    assert consensus_gap(trace.final_x) < 1e-8


def test_stride_and_objective_recording():
    rng = np.random.default_rng(12)
    sbg = small_sbg(rng)
    l, n = sbg.graph.node_count, 2
    problems = [
        NodeProblem(QuadraticFit(np.eye(n), rng.standard_normal(n), 1.0), L1(0.1))
        for _ in range(l)
    ]
    cfg = SolverConfig(sigma=1.0, max_iterations=10, n=n, stride=4,
                       record_objective=True)
    trace = matrix_oracle_composite(sbg, problems, cfg)
    # stride multiples plus the final iteration
    assert trace.recorded_at == [0, 4, 8, 10]
    assert len(trace.objective) == 4
    assert all(v is not None for v in trace.objective)
    # objective decreases from start to finish
    assert trace.objective[-1] < trace.objective[0]


def test_message_volume_constant_per_iteration():
    rng = np.random.default_rng(13)
    g = random_connected(rng, 7)
    sbg = simplify(g, seed=1)
    n = 3
    problems = random_problems(rng, 7, n, composite=True)
    cfg = SolverConfig(sigma=1.0, max_iterations=4, n=n)
    net = Network(sbg.graph)
    trace = dpf_admm_composite(sbg, problems, cfg, net=net)
    per_iter = 2 * n * sbg.graph.edge_count
    assert trace.message_volume[1:] == [per_iter] * 4
    assert net.traffic_report().total_volume == 4 * per_iter


def test_two_node_minimum_rejected():
    sbg = simplify(Graph.from_edges(1, []), seed=0)
    problems = [NodeProblem(QuadraticFit(np.eye(1), np.zeros(1), 1.0))]
    with pytest.raises(GraphError, match="two nodes"):
        matrix_oracle_single(sbg, problems, SolverConfig(n=1))


def test_composite_blocks_structure():
    from bipadmm.solver import _composite_blocks

    rng = np.random.default_rng(14)
    sbg = small_sbg(rng, max_nodes=10)
    CH, CT = _composite_blocks(sbg)
    nh, nt = len(sbg.h_nodes), len(sbg.t_nodes)
    deg = [sbg.graph.degree(i) for i in sbg.h_nodes]
    # within-block Grams are diagonal: that is what decouples the updates
    GH = CH.T @ CH
    assert np.allclose(GH, np.diag(np.concatenate([np.array(deg) + 1, np.ones(nt)])))
    GT = CT.T @ CT
    degt = [sbg.graph.degree(i) for i in sbg.t_nodes]
    assert np.allclose(GT, np.diag(np.concatenate([np.ones(nh), np.array(degt) + 1])))
