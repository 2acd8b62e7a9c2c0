"""Command-line front end.

Subcommands: estimate, exact, latin, cards, sbm, gen.  All stochastic
subcommands are deterministic for a fixed seed regardless of --workers
(wall_ms is the only field that varies between runs).  Reports are JSON with
sorted keys; magnitudes are serialized as log10 plus a decimal string so
counts up to 10^230 survive the round trip.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from permcount import cards as cards_mod
from permcount import latin as latin_mod
from permcount import sbm as sbm_mod
from permcount.exact import parse_zero_block, permanent_brute, permanent_ryser, zero_block_permanent
from permcount.graph import GraphFormatError, GraphGenSpec, read_graph, write_graph
from permcount.sampling import default_workers, estimate_count

__all__ = ["main", "run"]


def _emit(payload, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="sampling threads (default: PERMCOUNT_THREADS or 1)",
    )
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def _workers(args) -> int:
    w = args.workers if args.workers is not None else default_workers()
    if w < 1:
        raise ValueError("workers must be >= 1")
    return w


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="permcount",
        description="Estimate and count perfect matchings of bipartite graphs.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="importance-sampling estimate of a graph's matching count")
    p.add_argument("--graph", required=True, help="graph file ('n m' edge list or 'dense n')")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--mode", choices=("scaled", "uniform"), default="scaled")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)

    p = sub.add_parser("exact", help="exact permanent of a graph or zero-block spec")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="graph file")
    src.add_argument("--zero-block", help='spec "a1,b1;a2,b2;...;n"')
    p.add_argument("--format", choices=("plain", "json"), default="plain")
    p.add_argument("--out", default=None)

    p = sub.add_parser("latin", help="estimate Latin rectangle counts")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--odd-rows", action="store_true", help="report the Cameron odd-row statistic")
    p.add_argument("--conjectures", action="store_true", help="report conjectured asymptotics")
    _add_common(p)

    p = sub.add_parser("cards", help="expected greedy score in the card guessing game")
    p.add_argument("--n", type=int, required=True, help="distinct values")
    p.add_argument("--m", type=int, required=True, help="copies per value")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--policy", choices=("exact", "sis"), default="exact")
    p.add_argument("--B", type=int, default=100, help="samples per SIS decision")
    _add_common(p)

    p = sub.add_parser("sbm", help="scaled-vs-uniform comparison on a block-model graph")
    p.add_argument("--n", type=int, required=True, help="vertices per side (two equal clusters)")
    p.add_argument("--p", type=float, required=True, help="within-cluster edge probability")
    p.add_argument("--q", type=float, required=True, help="cross-cluster edge probability")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--trace", type=int, default=0, help="trace stride (0: N/100)")
    p.add_argument("--trace-csv", default=None, help="also write traces as CSV")
    _add_common(p)

    p = sub.add_parser("gen", help="generate a graph file")
    p.add_argument(
        "--family",
        required=True,
        choices=("complete", "dense-random", "sbm", "appendix-b", "fibonacci"),
    )
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fmt", choices=("edges", "dense"), default="edges")
    p.add_argument("--out", required=True)
    return top


def _cmd_estimate(args) -> int:
    graph = read_graph(args.graph, allow_isolated=True)
    report = estimate_count(
        graph,
        args.samples,
        args.seed,
        mode=args.mode,
        tol=args.tol,
        workers=_workers(args),
    )
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_exact(args) -> int:
    if args.zero_block is not None:
        value = zero_block_permanent(parse_zero_block(args.zero_block))
    else:
        graph = read_graph(args.graph, allow_isolated=True)
        value = permanent_ryser(graph) if graph.n > 12 else permanent_brute(graph)
    if args.format == "json":
        _emit({"permanent": str(value)}, args.out)
    elif args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(f"{value}\n")
    else:
        sys.stdout.write(f"{value}\n")
    return 0


def _cmd_latin(args) -> int:
    workers = _workers(args)
    if args.odd_rows:
        if args.k != args.n:
            raise ValueError("--odd-rows requires k = n (Latin squares)")
        w1, hist, report = latin_mod.cameron_statistic(
            args.n, args.samples, args.seed, workers=workers
        )
        payload = report.to_dict()
        payload["odd_rows_w1"] = w1
        payload["odd_rows_hist"] = list(hist)
    else:
        report = latin_mod.estimate_latin(
            args.k, args.n, args.samples, args.seed, workers=workers
        )
        payload = report.to_dict()
    if args.conjectures:
        which = (
            ["timashov-square", "llw-square", "emm-square", "c_n"]
            if args.k == args.n
            else ["timashov-rect", "llw-rect-normalized", "c_kn"]
        )
        payload["conjectures_log10"] = {
            w: latin_mod.conjecture(w, args.k, args.n).log10_value for w in which
        }
    _emit(payload, args.out)
    return 0


def _cmd_cards(args) -> int:
    import time

    t0 = time.perf_counter()
    scores = cards_mod._run_games(args.n, args.m, args.reps, args.policy, args.seed, args.B)
    report = cards_mod.score_report(scores, args.seed, (time.perf_counter() - t0) * 1e3)
    payload = report.to_dict()
    payload["score_hist"] = cards_mod.score_histogram(scores)
    _emit(payload, args.out)
    return 0


def _cmd_sbm(args) -> int:
    graph = sbm_mod.sbm_graph(args.n, args.p, args.q, args.seed)
    report = sbm_mod.compare_modes(
        graph,
        args.samples,
        args.seed,
        workers=_workers(args),
        trace_stride=args.trace,
    )
    if args.trace_csv:
        with open(args.trace_csv, "w", encoding="utf-8") as fh:
            fh.write("mode,n_prefix,estimate_log10\n")
            for mode, tr in (("scaled", report.scaled_trace), ("uniform", report.uniform_trace)):
                for k, est in tr:
                    fh.write(f"{mode},{k},{est!r}\n")
    _emit(report.to_dict(), args.out)
    return 0


def _cmd_gen(args) -> int:
    if args.family == "sbm":
        if args.n < 2 or args.n % 2:
            raise ValueError("sbm family needs an even --n (two equal clusters per side)")
        h = args.n // 2
        spec = GraphGenSpec(
            family="sbm",
            left_sizes=(h, h),
            right_sizes=(h, h),
            P=((args.p, args.q), (args.q, args.p)),
            seed=args.seed,
        )
    else:
        spec = GraphGenSpec(family=args.family, n=args.n, lam=args.lam, seed=args.seed)
    write_graph(spec.generate(), args.out, fmt=args.fmt)
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "exact": _cmd_exact,
    "latin": _cmd_latin,
    "cards": _cmd_cards,
    "sbm": _cmd_sbm,
    "gen": _cmd_gen,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
