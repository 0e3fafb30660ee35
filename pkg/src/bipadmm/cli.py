"""Command-line surface.

Subcommands: ``topology`` (graph file -> simplified bipartite graph),
``solve`` (one instance, one solver -> trace CSV), ``experiment`` (full
Monte-Carlo config -> aggregate CSVs), ``check`` (invariant suite).

Exit codes: 0 success, 1 usage error, 2 invariant-check failure.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import checks
from .experiments import (
    BUILTIN_GRAPHS,
    ExperimentConfig,
    KNOWN_SOLVERS,
    gen_l1l1,
    gen_l2l1,
    instance_problems,
    relative_error,
    resolve_graph,
    run_experiment,
)
from .baselines import centralized_admm, dgd
from .graph import GraphError, format_edge_list
from .solver import SolverConfig, dpf_admm_composite, matrix_oracle_composite
from .topology import simplify


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_graph_arg(p):
    p.add_argument("--graph", default="random10-18",
                   help=f"builtin ({', '.join(BUILTIN_GRAPHS)}) or edge-list file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bipadmm")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="simplify a graph and emit it")
    _add_graph_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")

    p = sub.add_parser("solve", help="run one solver on one instance")
    _add_graph_arg(p)
    p.add_argument("--problem", choices=["l2l1", "l1l1"], default="l2l1")
    p.add_argument("--solver", choices=list(KNOWN_SOLVERS), default="dpf-admm")
    p.add_argument("--engine", choices=["message", "matrix"], default="message")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--dgd-step", type=float, default=1e-3)
    p.add_argument("--out", default="-", help="trace CSV ('-' for stdout)")

    p = sub.add_parser("experiment", help="run a Monte-Carlo study")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")

    sub.add_parser("check", help="run the invariant suite")
    return parser


def parse_config_file(path: str) -> dict:
    """Plain ``key = value`` lines; '#' starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValueError(f"unreadable config file {path!r}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


_CONFIG_TYPES = {
    "graph": str, "seed": int, "runs": int, "problem": str, "sigma": float,
    "max_iterations": int, "n": int, "m_i": int, "sparsity": int,
    "dgd_step": float, "dgd_schedule": str, "redraw_all": bool,
    "engine": str, "stride": int, "output_dir": str, "solvers": tuple,
}


def config_from_values(values: dict) -> ExperimentConfig:
    kwargs = {}
    for key, raw in values.items():
        if key not in _CONFIG_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        typ = _CONFIG_TYPES[key]
        if typ is bool:
            kwargs[key] = raw.strip().lower() in ("1", "true", "yes")
        elif typ is tuple:
            kwargs[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
        else:
            kwargs[key] = typ(raw)
    return ExperimentConfig(**kwargs)


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def cmd_topology(args) -> int:
    graph = resolve_graph(args.graph, seed=args.seed)
    sbg = simplify(graph, seed=args.seed)
    text = format_edge_list(sbg.graph)
    text += "H=" + ",".join(str(i) for i in sbg.h_nodes) + "\n"
    out = _open_out(args.out)
    out.write(text)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_solve(args) -> int:
    rng = np.random.default_rng(args.seed)
    graph = resolve_graph(args.graph, seed=int(rng.integers(2**32)))
    sbg = simplify(graph, seed=int(rng.integers(2**32)))
    gen = gen_l2l1 if args.problem == "l2l1" else gen_l1l1
    instance = gen(int(rng.integers(2**32)), l=graph.node_count, n=args.n)
    problems = instance_problems(instance)
    cfg = SolverConfig(sigma=args.sigma, max_iterations=args.iterations, n=args.n)

    if args.solver == "dpf-admm":
        run = dpf_admm_composite if args.engine == "message" else matrix_oracle_composite
        trace = run(sbg, problems, cfg)
    elif args.solver == "centralized-admm":
        trace = centralized_admm(problems, cfg)
    else:
        trace = dgd(graph, problems, cfg, step0=args.dgd_step)

    out = _open_out(args.out)
    writer = csv.writer(out)
    writer.writerow(["iteration", "error", "consensus_gap", "msg_volume"])
    for idx, k in enumerate(trace.recorded_at):
        err = relative_error(trace.iterates[idx], instance.truth)
        writer.writerow([int(k), f"{err:.10e}", f"{trace.consensus_gap[idx]:.10e}",
                         int(trace.message_volume[idx])])
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_experiment(args) -> int:
    values = parse_config_file(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    cfg = config_from_values(values)
    result = run_experiment(cfg)
    for path in result.files:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        if args.command == "topology":
            return cmd_topology(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "experiment":
            return cmd_experiment(args)
        if args.command == "check":
            return 0 if checks.run_all(verbose=True) else 2
    except (ValueError, GraphError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
