"""Command line: check, repair, gen, bench.

Exit codes: 0 success / dependency satisfied, 1 dependency violated (check),
2 bad input or parameters, 3 unsupported algorithm/data combination.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .cardrepair import RepairOptions, card_repair
from .errors import BoundTooTight, InputError, InvalidParams, UnsupportedCombination
from .heurrepair import heur_repair
from .ingest import IngestConfig, ZScoreConfig, load_csv
from .relmodel import Aod, Alpha, Direction, check_aod, format_exact
from .testkit import GenParams, generate, generator_metadata, write_csv

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_UNSUPPORTED = 0, 1, 2, 3
_SAFE_INT = 2**53


def _num(x):
    """Integers beyond double precision go out as strings."""
    return str(x) if isinstance(x, int) and abs(x) >= _SAFE_INT else x


def _emit(payload: dict, path=None):
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _add_input_args(p):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--group-col", required=True)
    p.add_argument("--agg-col", required=True)
    p.add_argument("--alpha", required=True, choices=[a.value for a in Alpha])
    p.add_argument("--direction", default="increasing", choices=[d.value for d in Direction])
    p.add_argument("--group-bin", type=str, default=None, help="equi-width bin for the group column")
    p.add_argument("--agg-bin", type=str, default=None, help="equi-width bin for the aggregate column")
    p.add_argument("--agg-cap", type=str, default=None, help="truncate aggregate values above this cap")
    p.add_argument("--agg-scale", type=int, default=1, help="multiply aggregate values to make them integral")
    p.add_argument("--lenient", action="store_true", help="skip unparsable rows instead of failing")
    p.add_argument("--zscore-tau", type=float, default=None)
    p.add_argument("--zscore-scope", default="global", choices=["global", "per_group"])
    p.add_argument("--report", default=None, help="write the JSON report here instead of stdout")


def _load(args):
    z = ZScoreConfig(args.zscore_tau, args.zscore_scope) if args.zscore_tau is not None else None
    cfg = IngestConfig(
        group_column=args.group_col,
        agg_column=args.agg_col,
        group_bin_width=args.group_bin,
        agg_bin_width=args.agg_bin,
        agg_truncate_cap=args.agg_cap,
        agg_scale_factor=args.agg_scale,
        zscore=z,
        strict=not args.lenient,
    )
    relation, report = load_csv(args.input, cfg)
    aod = Aod(args.alpha, args.direction, args.group_col, args.agg_col)
    return relation, report, aod


def _input_block(args, relation, report) -> dict:
    return {
        "path": args.input,
        "tuples": len(relation),
        "dropped_rows": [{"row": r, "column": c, "raw": v} for r, c, v in report.dropped],
        "zscore_removed_ids": report.zscore_removed,
    }


def _aod_block(aod) -> dict:
    return {
        "alpha": aod.alpha.value,
        "direction": aod.direction.value,
        "group_column": aod.group_col,
        "agg_column": aod.agg_col,
        "text": str(aod),
    }


def cmd_check(args) -> int:
    relation, report, aod = _load(args)
    prof = check_aod(relation, aod)
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "input": _input_block(args, relation, report),
            "aod": _aod_block(aod),
            "satisfied": prof.satisfied,
            "s_mvi": format_exact(prof.s_mvi, aod.kind),
            "mvi": [format_exact(m, aod.kind) for m in prof.mvi],
            "groups": [
                {"group": _num(g), "aggregate": str(v)} for g, v in zip(prof.group_keys, prof.aggregates)
            ],
        },
        args.report,
    )
    return EXIT_OK if prof.satisfied else EXIT_VIOLATED


def _repair_options(args) -> RepairOptions:
    h, pruning = None, "none"
    if args.prune == "heur":
        h, pruning = "heuristic", "bound"
    elif args.prune == "dominated":
        pruning = "dominated"
    elif args.prune == "both":
        h, pruning = "heuristic", "both"
    if args.bound is not None:
        h = args.bound
        pruning = "both" if pruning in ("dominated", "both") else "bound"
    return RepairOptions(args.packer, h, pruning, fallback=not args.no_fallback)


def run_repair(relation, aod, args):
    if args.algo == "exact":
        return card_repair(relation, aod, _repair_options(args))
    return heur_repair(relation, aod, optimized=not args.reference_greedy)


def cmd_repair(args) -> int:
    relation, report, aod = _load(args)
    started = time.perf_counter()
    result = run_repair(relation, aod, args)
    runtime_ms = (time.perf_counter() - started) * 1000
    meta = result.metadata
    payload = {
        "schema_version": SCHEMA_VERSION,
        "input": _input_block(args, relation, report),
        "aod": _aod_block(aod),
        "algorithm": args.algo,
        "options": {
            "packer": args.packer,
            "prune": args.prune,
            "bound": args.bound,
            "greedy_path": "reference" if args.reference_greedy else "optimized",
        },
        "removed_count": result.removed_count,
        "removed_ids": list(result.removed_ids),
        "kept_count": result.kept_count,
        "per_group": [
            {
                "group": _num(g.key),
                "before": str(g.before),
                "after": str(g.after) if g.after is not None else "deleted",
                "removed": g.removed,
            }
            for g in result.per_group
        ],
        "s_mvi_before": format_exact(result.s_mvi_before, aod.kind),
        "s_mvi_after": format_exact(result.s_mvi_after, aod.kind),
        "runtime_ms": round(runtime_ms, 3),
        "heuristic_bound_used": meta.get("heuristic_bound_used"),
    }
    _emit(payload, args.report)
    if args.removed_out:
        with open(args.removed_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(report.header)
            for rid in result.removed_ids:
                w.writerow(report.raw_rows[rid])
    if args.kept_out:
        with open(args.kept_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(report.header)
            for rid in result.kept_ids:
                w.writerow(report.raw_rows[rid])
    return EXIT_OK


def _gen_params(args, n=None, seed=None) -> GenParams:
    return GenParams(
        n=args.rows if n is None else n,
        groups=args.groups,
        noise_frac=args.noise_frac,
        violating_groups=args.violating_groups,
        seed=args.seed if seed is None else seed,
    )


def cmd_gen(args) -> int:
    params = _gen_params(args)
    relation = generate(params)
    write_csv(relation, args.out)
    if args.meta:
        _emit(generator_metadata(params), args.meta)
    return EXIT_OK


def _bench_cell(job):
    size, alpha, algo, seed, gen, opts = job
    params = GenParams(size, gen["groups"], gen["noise_frac"], gen["violating_groups"], seed)
    relation = generate(params)
    aod = Aod(alpha)
    started = time.perf_counter()
    if algo == "exact":
        res = card_repair(relation, aod, RepairOptions(**opts))
    else:
        res = heur_repair(relation, aod, optimized=True)
    return time.perf_counter() - started, res.removed_count


def _threads() -> int:
    raw = os.environ.get("AOD_REPAIR_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidParams("AOD_REPAIR_THREADS must be an integer") from None
    return os.cpu_count() or 1


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    alphas = [Alpha(a).value for a in args.alphas.split(",")]
    algos = args.algos.split(",")
    for a in algos:
        if a not in ("exact", "heur"):
            raise InvalidParams(f"unknown algorithm {a!r}")
    gen = {"groups": args.groups, "noise_frac": args.noise_frac, "violating_groups": args.violating_groups}
    opts = _repair_options(args)
    opts_d = {"packer": opts.packer, "h_bound": opts.h_bound, "dict_pruning": opts.dict_pruning, "fallback": opts.fallback}
    base = GenParams(max(sizes), **gen, seed=args.seed)
    base.validate()
    cells = []
    jobs = []
    for size in sizes:
        for alpha in alphas:
            for algo in algos:
                for rep in range(args.reps):
                    jobs.append((size, alpha, algo, args.seed + rep, gen, opts_d))
    if args.parallel:
        with ProcessPoolExecutor(max_workers=_threads()) as pool:
            outcomes = list(pool.map(_bench_cell, jobs))
    else:
        outcomes = [_bench_cell(j) for j in jobs]
    by_cell: dict = {}
    for job, (secs, removed) in zip(jobs, outcomes):
        by_cell.setdefault(job[:3], []).append((secs, removed))
    series: dict = {}
    for (size, alpha, algo), runs in by_cell.items():
        med = statistics.median(s for s, _ in runs)
        cells.append(
            {
                "size": size,
                "alpha": alpha,
                "algorithm": algo,
                "runtimes_s": [round(s, 6) for s, _ in runs],
                "median_runtime_s": round(med, 6),
                "removed_counts": [r for _, r in runs],
            }
        )
        series.setdefault(f"{alpha}/{algo}", []).append({"x": size, "y": round(med, 6)})
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "parallel": bool(args.parallel),
            "generator": generator_metadata(base) | {"n": sizes, "seeds": [args.seed + r for r in range(args.reps)]},
            "options": opts_d,
            "cells": cells,
            "series": series,
        },
        args.out,
    )
    return EXIT_OK


def _add_gen_args(p, rows_required=True):
    if rows_required:
        p.add_argument("--rows", type=int, required=True)
    p.add_argument("--groups", type=int, default=10)
    p.add_argument("--noise-frac", type=float, default=0.0)
    p.add_argument("--violating-groups", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)


def _add_algo_args(p):
    p.add_argument("--packer", default="optimized", choices=["naive", "optimized"])
    p.add_argument("--prune", default="none", choices=["none", "heur", "dominated", "both"])
    p.add_argument("--bound", type=int, default=None, help="explicit removal bound for exact search")
    p.add_argument("--no-fallback", action="store_true", help="fail instead of using the general sum packer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aod-repair", description="Check and repair aggregate order dependencies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="report violations of the dependency")
    _add_input_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("repair", help="delete tuples until the dependency holds")
    _add_input_args(p)
    p.add_argument("--algo", default="heur", choices=["exact", "heur"])
    _add_algo_args(p)
    p.add_argument("--reference-greedy", action="store_true", help="score every tuple each round")
    p.add_argument("--removed-out", default=None, help="write removed input rows to this CSV")
    p.add_argument("--kept-out", default=None, help="write kept input rows to this CSV")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("gen", help="write a synthetic relation as CSV (columns g, a)")
    _add_gen_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None, help="write generator metadata JSON here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time repairs on synthetic data")
    p.add_argument("--sizes", default="1000")
    p.add_argument("--alphas", default="max")
    p.add_argument("--algos", default="exact,heur")
    p.add_argument("--reps", type=int, default=3)
    _add_gen_args(p, rows_required=False)
    _add_algo_args(p)
    p.add_argument("--parallel", action="store_true", help="run repetitions in worker processes")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench, noise_frac=0.1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, InvalidParams, BoundTooTight, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except UnsupportedCombination as err:
        print(f"unsupported: {err}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
