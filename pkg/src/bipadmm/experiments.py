"""Problem generators, metrics, and experiment orchestration.

Experiments draw sparse-recovery instances, run the selected solvers over
a chosen graph family, and write per-iteration mean error curves as CSV.
All randomness flows from one seed, and the aggregation order is fixed, so
a given configuration reproduces its output byte for byte.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .baselines import centralized_admm, dgd
from .graph import Graph, format_edge_list, is_connected, parse_edge_list
from .prox import L1, L1Residual, NodeProblem, QuadraticFit
from .solver import SolverConfig, dpf_admm_composite, matrix_oracle_composite
from .topology import simplify


# --- instance generation ---------------------------------------------------

@dataclass
class CsInstance:
    """One sparse-recovery dataset: per-node sensing data plus the truth."""
    matrices: list          # per node, (m_i, n)
    offsets: list           # per node, (m_i,) measurements
    noises: list            # per node, (m_i,)
    truth: np.ndarray       # (n,) sparse signal
    eta: float
    kind: str               # "l2l1" | "l1l1"
    noise_var: float = 1e-3

    @property
    def node_count(self) -> int:
        return len(self.matrices)


def _sparse_signal(rng, n, s):
    if s > n:
        raise ValueError(f"sparsity {s} exceeds dimension {n}")
    x = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    x[support] = rng.standard_normal(s)
    return x


def gen_l2l1(seed, l=10, m_i=3, n=100, s=5, noise_var=1e-3,
             eta=1.2e-4) -> CsInstance:
    """Quadratic-fit + l1 instance: dense Gaussian noise on each node."""
    rng = np.random.default_rng(seed)
    truth = _sparse_signal(rng, n, s)
    matrices = [rng.standard_normal((m_i, n)) for _ in range(l)]
    noises = [np.sqrt(noise_var) * rng.standard_normal(m_i) for _ in range(l)]
    offsets = [M @ truth + e for M, e in zip(matrices, noises)]
    return CsInstance(matrices, offsets, noises, truth, eta, "l2l1", noise_var)


def gen_l1l1(seed, l=10, m_i=3, n=100, s=5, noise_var=1e-2,
             eta=1.2e-3) -> CsInstance:
    """l1-fit + l1 instance: one impulsive noise entry per node."""
    rng = np.random.default_rng(seed)
    truth = _sparse_signal(rng, n, s)
    matrices = [rng.standard_normal((m_i, n)) for _ in range(l)]
    noises = []
    for _ in range(l):
        e = np.zeros(m_i)
        e[rng.integers(m_i)] = np.sqrt(noise_var) * rng.standard_normal()
        noises.append(e)
    offsets = [M @ truth + e for M, e in zip(matrices, noises)]
    return CsInstance(matrices, offsets, noises, truth, eta, "l1l1", noise_var)


def redraw_noise(instance: CsInstance, seed) -> CsInstance:
    """Same signal and sensing matrices, fresh noise (per-run randomness)."""
    rng = np.random.default_rng(seed)
    scale = np.sqrt(instance.noise_var)
    noises = []
    for old in instance.noises:
        m_i = old.size
        if instance.kind == "l1l1":
            e = np.zeros(m_i)
            e[rng.integers(m_i)] = scale * rng.standard_normal()
        else:
            e = scale * rng.standard_normal(m_i)
        noises.append(e)
    offsets = [M @ instance.truth + e for M, e in zip(instance.matrices, noises)]
    return CsInstance(instance.matrices, offsets, noises, instance.truth,
                      instance.eta, instance.kind, instance.noise_var)


def instance_problems(instance: CsInstance):
    """Translate a dataset into per-node (f, g) objective pairs."""
    if instance.kind == "l2l1":
        return [
            NodeProblem(QuadraticFit(M, b, scale=1.0 / instance.eta), L1(1.0))
            for M, b in zip(instance.matrices, instance.offsets)
        ]
    return [
        NodeProblem(L1Residual(M, b, scale=1.0 / instance.eta), L1(1.0))
        for M, b in zip(instance.matrices, instance.offsets)
    ]


# --- metrics ---------------------------------------------------------------

def relative_error(X: np.ndarray, truth: np.ndarray) -> float:
    """Mean over nodes of ||x_i - truth|| / ||truth||.

    With a zero truth signal the norm of the node average is returned
    instead.  This normalization is internal to this package; cross-tool
    comparisons should use curve shapes, not absolute values.
    """
    X = np.atleast_2d(X)
    norm = float(np.linalg.norm(truth))
    if norm == 0.0:
        return float(np.linalg.norm(X.mean(axis=0)))
    return float(np.mean(np.linalg.norm(X - truth, axis=1)) / norm)


# --- graph families --------------------------------------------------------

def line_graph(l=10) -> Graph:
    return Graph.from_edges(l, [(i, i + 1) for i in range(l - 1)])


def complete_graph(l=10) -> Graph:
    return Graph.from_edges(l, [(i, j) for i in range(l) for j in range(i + 1, l)])


def random_connected_graph(l=10, edges=18, seed=0) -> Graph:
    """Seeded uniform edge sample, resampled until connected."""
    if edges < l - 1 or edges > l * (l - 1) // 2:
        raise ValueError(f"{edges} edges cannot span {l} nodes")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(l) for j in range(i + 1, l)]
    while True:
        picks = rng.choice(len(pairs), size=edges, replace=False)
        g = Graph.from_edges(l, [pairs[p] for p in picks])
        if is_connected(g):
            return g


BUILTIN_GRAPHS = ("line10", "complete10", "random10-18")


def resolve_graph(source: str, seed: int = 0) -> Graph:
    """Builtin family name or a path to an edge-list file."""
    if source == "line10":
        return line_graph(10)
    if source == "complete10":
        return complete_graph(10)
    if source == "random10-18":
        return random_connected_graph(10, 18, seed=seed)
    try:
        with open(source) as fh:
            return parse_edge_list(fh.read())
    except OSError as exc:
        raise ValueError(f"unreadable graph file {source!r}: {exc}")


# --- experiment orchestration ----------------------------------------------

KNOWN_SOLVERS = ("dpf-admm", "centralized-admm", "dgd")


@dataclass
class ExperimentConfig:
    graph: str = "random10-18"
    seed: int = 0
    runs: int = 100
    solvers: tuple = ("dpf-admm", "centralized-admm")
    problem: str = "l2l1"
    sigma: float = 1.0
    max_iterations: int = 300
    n: int = 100
    m_i: int = 3
    sparsity: int = 5
    dgd_step: float = 1e-3
    dgd_schedule: str = "diminishing"
    redraw_all: bool = False
    # "matrix" runs the stacked form of the same iteration (faster); the
    # equivalence of both engines is part of the test suite.
    engine: str = "matrix"
    stride: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        for name in self.solvers:
            if name not in KNOWN_SOLVERS:
                raise ValueError(f"unknown solver {name!r}")
        if self.problem not in ("l2l1", "l1l1"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.engine not in ("matrix", "message"):
            raise ValueError(f"unknown engine {self.engine!r}")


def _generate(cfg: ExperimentConfig, seed, l):
    gen = gen_l2l1 if cfg.problem == "l2l1" else gen_l1l1
    return gen(seed, l=l, m_i=cfg.m_i, n=cfg.n, s=cfg.sparsity)


def _run_solver(name, cfg, graph, sbg, instance):
    problems = instance_problems(instance)
    scfg = SolverConfig(
        sigma=cfg.sigma, max_iterations=cfg.max_iterations, n=cfg.n,
        record_iterates=True, stride=cfg.stride,
    )
    if name == "dpf-admm":
        run = dpf_admm_composite if cfg.engine == "message" else matrix_oracle_composite
        return run(sbg, problems, scfg)
    if name == "centralized-admm":
        return centralized_admm(problems, scfg)
    if name == "dgd":
        return dgd(graph, problems, scfg, step0=cfg.dgd_step,
                   schedule=cfg.dgd_schedule)
    raise ValueError(f"unknown solver {name!r}")


@dataclass
class ExperimentResult:
    iterations: np.ndarray                # recorded iteration numbers
    mean_error: dict                      # solver -> array
    std_error: dict
    mean_volume: dict
    sbg_text: str
    files: list = field(default_factory=list)


def experiment_curves(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the Monte-Carlo study and return aggregate curves in memory."""
    root_rng = np.random.default_rng(cfg.seed)
    graph = resolve_graph(cfg.graph, seed=int(root_rng.integers(2**32)))
    sbg = simplify(graph, seed=int(root_rng.integers(2**32)))
    base = _generate(cfg, int(root_rng.integers(2**32)), graph.node_count)

    mean_error, std_error, mean_volume = {}, {}, {}
    iters = None
    run_seeds = [int(root_rng.integers(2**32)) for _ in range(cfg.runs)]
    for name in cfg.solvers:
        curves = []
        volumes = []
        for r, rseed in enumerate(run_seeds):
            if cfg.redraw_all:
                instance = _generate(cfg, rseed, graph.node_count)
            else:
                instance = redraw_noise(base, rseed)
            trace = _run_solver(name, cfg, graph, sbg, instance)
            errs = [relative_error(X, instance.truth) for X in trace.iterates]
            curves.append(errs)
            volumes.append(trace.message_volume)
            if iters is None:
                iters = np.array(trace.recorded_at)
        curves = np.array(curves)
        mean_error[name] = curves.mean(axis=0)
        std_error[name] = curves.std(axis=0)
        mean_volume[name] = np.array(volumes, dtype=float).mean(axis=0)

    lab_line = "H=" + ",".join(str(i) for i in sbg.h_nodes)
    sbg_text = format_edge_list(sbg.graph) + lab_line + "\n"
    return ExperimentResult(iters, mean_error, std_error, mean_volume, sbg_text)


def _fmt(v) -> str:
    return f"{v:.10e}"


def write_curves_csv(result: ExperimentResult, path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "iteration", "mean_error", "std_error",
                         "mean_msg_volume"])
        for name in result.mean_error:
            for idx, k in enumerate(result.iterations):
                writer.writerow([
                    name, int(k),
                    _fmt(result.mean_error[name][idx]),
                    _fmt(result.std_error[name][idx]),
                    _fmt(result.mean_volume[name][idx]),
                ])


def iterations_to_plateau(iterations, errors, slack=0.1) -> int:
    """First recorded iteration whose mean error is within ``slack`` of the
    final value."""
    final = errors[-1]
    for k, e in zip(iterations, errors):
        if e <= (1.0 + slack) * final:
            return int(k)
    return int(iterations[-1])


def write_summary_csv(result: ExperimentResult, path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver", "final_mean_error", "iterations_to_plateau"])
        for name in result.mean_error:
            writer.writerow([
                name,
                _fmt(result.mean_error[name][-1]),
                iterations_to_plateau(result.iterations, result.mean_error[name]),
            ])


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Full study: curves, summary, and the simplified graph, all on disk."""
    result = experiment_curves(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    curves = os.path.join(cfg.output_dir, "curves.csv")
    summary = os.path.join(cfg.output_dir, "summary.csv")
    sbg_path = os.path.join(cfg.output_dir, "sbg.txt")
    write_curves_csv(result, curves)
    write_summary_csv(result, summary)
    with open(sbg_path, "w") as fh:
        fh.write(result.sbg_text)
    result.files = [curves, summary, sbg_path]
    return result
