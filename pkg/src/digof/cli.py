"""Command-line interface.

Machine-readable results go to stdout (JSON) or to files (CSV/JSON); human
summaries and warnings go to stderr. Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed
from .data_io import DataError, analyze_network, export_edge_list, parse_edge_list, preprocess_with_stats
from .estimators import DEFAULT_EPSILON, DEFAULT_TAU, digof, full_trace, rdigof
from .experiments import EXPERIMENTS, RUNNERS, ConfigError, ExperimentConfig
from .gof import test_statistic
from .model import (
    ModelError,
    ScbmSpec,
    as_block_matrix,
    check_adjacency,
    check_assumptions,
    planted_spec,
    sample_adjacency,
    write_edge_list,
)
from .spectral import ConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _meta(args):
    skip = {"func", "output", "trace", "jobs"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]
    return {"version": __version__, "seed": getattr(args, "seed", None), "config_hash": digest}


def _csv_header(meta):
    return f"# digof {meta['version']} seed={meta['seed']} config_hash={meta['config_hash']}\n"


def _emit(obj):
    sys.stdout.write(json.dumps(obj, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _note(msg):
    print(msg, file=sys.stderr)


def _add_network_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="edge-list file")
    src.add_argument("--spec", help="model JSON; a network is sampled from it")
    p.add_argument("--format", choices=["tsv", "konect"], default="tsv")
    p.add_argument("--nodes", type=int, help="read 1-based ids 1..NODES as-is, skipping preprocessing")
    p.add_argument("--sample-seed", type=int, default=0, help="sampling seed for --spec; the generate --seed reproduces its network")


def _load_network(args):
    if args.spec:
        spec = ScbmSpec.from_json(Path(args.spec))
        return sample_adjacency(spec, derive_seed(args.sample_seed, 2))
    edges = parse_edge_list(args.input, args.format)
    if args.nodes is None:
        a, _, stats = preprocess_with_stats(edges)
        _note(f"preprocessed: n={stats.n} edges={stats.edges} (raw edges {stats.raw_edges})")
        return a
    ids = np.array(edges.edges, dtype=object)
    try:
        src = ids[:, 0].astype(np.int64) - 1
        dst = ids[:, 1].astype(np.int64) - 1
    except (TypeError, ValueError) as exc:
        raise DataError("--nodes requires integer node ids") from exc
    if src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= args.nodes:
        raise DataError(f"node ids must lie in 1..{args.nodes}")
    a = np.zeros((args.nodes, args.nodes), dtype=np.uint8)
    a[src, dst] = 1
    np.fill_diagonal(a, 0)
    return check_adjacency(a)


def cmd_generate(args):
    block = None
    if args.b_file:
        block = as_block_matrix(json.loads(Path(args.b_file).read_text()))
        ks, kr = block.shape
    else:
        if args.ks is None or args.kr is None:
            raise UsageError("--ks and --kr are required unless --b-file is given")
        ks, kr = args.ks, args.kr
    spec = planted_spec(args.n, ks, kr, args.rho, args.seed, alpha=args.alpha, beta=args.beta, block=block)
    a = sample_adjacency(spec, derive_seed(args.seed, 2))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    spec.to_json(out / "spec.json")
    write_edge_list(a, out / "edges.tsv")
    report = check_assumptions(spec)
    if report.separation == 0:
        _note("warning: community separation is 0 under this block matrix; "
              "some communities are indistinguishable")
    _note(f"generated n={spec.n} ks={spec.ks} kr={spec.kr} edges={int(a.sum())}")
    _emit({
        "meta": _meta(args),
        "files": [str(out / "spec.json"), str(out / "edges.tsv")],
        "edges": int(a.sum()),
        "separation": report.to_dict()["separation"],
        "assumptions": report.to_dict(),
    })
    return EXIT_OK


def cmd_gof(args):
    a = _load_network(args)
    res = test_statistic(a, args.ks0, args.kr0, args.seed)
    _emit({"meta": _meta(args), **res.to_dict()})
    return EXIT_OK


def cmd_estimate(args):
    a = _load_network(args)
    if args.method == "digof":
        ks, kr, trace = digof(a, epsilon=args.epsilon, kmax=args.kmax, seed=args.seed)
    else:
        ks, kr, trace = rdigof(a, tau=args.tau, kmax=args.kmax, seed=args.seed)
    meta = _meta(args)
    if args.trace:
        Path(args.trace).write_text(_csv_header(meta) + trace.to_csv())
    failed = sum(r.error is not None for r in trace.visited)
    _emit({"meta": meta, "ks_hat": ks, "kr_hat": kr, "m_star": trace.m_star,
           "stop_reason": trace.stop_reason, "failed_candidates": failed})
    _note(f"{args.method}: ({ks}, {kr}) at m={trace.m_star} [{trace.stop_reason}]")
    return EXIT_OK


def cmd_experiment(args):
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    if args.jobs is not None:
        doc["jobs"] = args.jobs
    elif "jobs" not in doc:
        doc["jobs"] = os.cpu_count() or 1
    cfg = ExperimentConfig.from_dict(doc)
    report = RUNNERS[args.name](cfg)
    args.seed = cfg.base_seed
    meta = _meta(args)
    out = Path(args.output)
    out.write_text(_csv_header(meta) + report.to_csv())
    out.with_suffix(".json").write_text(report.sidecar() + "\n")
    cells = len(cfg.cells())
    print(f"{args.name}: {cells} cells x {cfg.replications} reps -> {out}")
    return EXIT_OK


def cmd_ingest(args):
    edges = parse_edge_list(args.input, args.format)
    a, ids, stats = preprocess_with_stats(edges)
    if args.output:
        export_edge_list(a, args.output)
    _emit({"meta": _meta(args), **vars(stats)})
    return EXIT_OK


def cmd_trace(args):
    a = _load_network(args)
    if args.input and args.nodes is None:
        trace, _ = analyze_network(a, kmax=args.kmax, tau=args.tau, seed=args.seed, jobs=args.jobs)
    else:
        trace = full_trace(a, kmax=args.kmax, tau=args.tau, seed=args.seed, jobs=args.jobs)
    meta = _meta(args)
    Path(args.output).write_text(_csv_header(meta) + trace.to_csv())
    _emit({"meta": meta, "peak": trace.peak, "accepted": trace.accepted,
           "m_star": trace.m_star, "stop_reason": trace.stop_reason})
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="digof", description="Community-count estimation for directed networks.")
    parser.add_argument("--version", action="version", version=f"digof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a planted co-block network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ks", type=int)
    p.add_argument("--kr", type=int)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--b-file", help="JSON block matrix (scaled by --rho)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("gof", help="goodness-of-fit statistic for one candidate pair")
    _add_network_args(p)
    p.add_argument("--ks0", type=int, required=True)
    p.add_argument("--kr0", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("estimate", help="estimate (ks, kr) with DiGoF or RDiGoF")
    _add_network_args(p)
    p.add_argument("--method", choices=["digof", "rdigof"], default="rdigof")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--kmax", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write the visited-candidate trace CSV here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="run a simulation study from a JSON config")
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", required=True, help="report CSV; the config sidecar goes next to it")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ingest", help="parse and preprocess an edge list")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["tsv", "konect"], default="tsv")
    p.add_argument("-o", "--output", help="canonical edge-list export")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("trace", help="statistic and ratio for every candidate pair")
    _add_network_args(p)
    p.add_argument("--kmax", type=int)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _note(f"digof: error: {exc}")
        return EXIT_USAGE
    except ConvergenceError as exc:
        _note(f"digof: numerical error: {exc}")
        return EXIT_NUMERIC
    except ConfigError as exc:
        _note("digof: invalid config:")
        for problem in exc.problems:
            _note(f"  - {problem}")
        return EXIT_DATA
    except (DataError, ModelError, ValueError, OSError) as exc:
        _note(f"digof: data error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
