"""Seeded generators shared by the invariant checks and the test suite."""
from __future__ import annotations

import numpy as np

from .graph import Graph
from .prox import L1, NodeProblem, QuadraticFit, Smooth, Zero


def random_connected(rng, l: int, extra_edges: int | None = None) -> Graph:
    """Random connected graph: a random spanning tree plus extra edges."""
    edges = set()
    order = rng.permutation(l)
    for idx in range(1, l):
        i = int(order[idx])
        j = int(order[int(rng.integers(idx))])
        edges.add((min(i, j), max(i, j)))
    if extra_edges is None:
        max_extra = l * (l - 1) // 2 - (l - 1)
        extra_edges = int(rng.integers(max_extra + 1)) if max_extra else 0
    candidates = [
        (i, j) for i in range(l) for j in range(i + 1, l) if (i, j) not in edges
    ]
    if candidates and extra_edges:
        picks = rng.choice(len(candidates), size=min(extra_edges, len(candidates)),
                           replace=False)
        edges.update(candidates[p] for p in np.atleast_1d(picks))
    return Graph.from_edges(l, edges)


def random_quadratic(rng, n: int, rows: int | None = None) -> QuadraticFit:
    m = rows or int(rng.integers(1, n + 2))
    M = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return QuadraticFit(M, b, scale=float(rng.uniform(0.5, 2.0)))


def random_smooth_quadratic(rng, n: int) -> Smooth:
    """A smooth quadratic given only through its gradient oracle."""
    M = rng.standard_normal((n + 1, n))
    Q = M.T @ M / (n + 1)
    b = rng.standard_normal(n)
    lips = float(np.linalg.eigvalsh(Q).max())

    def grad(x, Q=Q, b=b):
        return Q @ x - b

    def value(x, Q=Q, b=b):
        return 0.5 * float(x @ Q @ x) - float(b @ x)

    return Smooth(gradient=grad, lipschitz=lips, value=value)


def random_problems(rng, l: int, n: int, composite: bool = False):
    """Mixed quadratic / l1 / smooth node objectives."""
    problems = []
    for _ in range(l):
        pick = int(rng.integers(3))
        if pick == 0:
            f = random_quadratic(rng, n)
        elif pick == 1:
            f = random_smooth_quadratic(rng, n)
        else:
            f = random_quadratic(rng, n, rows=max(1, n // 2))
        if composite:
            g = L1(float(rng.uniform(0.2, 2.0))) if rng.integers(2) else Zero()
        else:
            g = Zero()
        problems.append(NodeProblem(f, g))
    return problems
