"""Command-line entry point: solve, datagen, train and eval.

Exit codes: 0 ok (a timeout still counts as a run), 1 bad arguments or
unreadable input, 2 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .builtins import BuiltinError
from .domain import DomainError, InitialStateError
from .embed import read_records, write_records
from .heuristics import HEURISTICS
from .metrics import RunRecord, format_table
from .neural import EmptyDatasetError, ModelFileError, PrepConfig, load_model, save_model
from .pipeline import generate_records, read_manifest, resolve_problem, run_approach, run_manifest, train_from_records
from .search import DEFAULT_TIMEOUT_MS, DfsConfig, SearchLimits

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="epiplan", description="Multi-agent epistemic planner with a learned heuristic.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one problem")
    s.add_argument("problem", help="path to a .epd file or builtin:<name>?key=value")
    s.add_argument("--search", choices=("bfs", "astar"), default="bfs")
    s.add_argument("--heuristic", choices=HEURISTICS, default="zero")
    s.add_argument("--model", help="model file (needed for --heuristic gnn)")
    s.add_argument("--timeout-ms", type=float, default=DEFAULT_TIMEOUT_MS)
    s.add_argument("--max-nodes", type=_positive_int)

    d = sub.add_parser("datagen", help="explore problems and write a labeled dataset")
    d.add_argument("problems", nargs="+")
    d.add_argument("--depth", type=int, default=25)
    d.add_argument("--discard-prob", type=float, default=0.3)
    d.add_argument("--max-nodes", type=_positive_int, default=10_000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--d-max", type=_positive_int, default=50)
    d.add_argument("--no-goal", action="store_true", help="leave the goal out of the encoding")
    d.add_argument("--no-marker", action="store_true", help="do not mark the pointed world")
    d.add_argument("--no-valuations", action="store_true", help="do not link worlds to their true fluents")
    d.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train the regressor on a dataset")
    t.add_argument("--data", required=True, nargs="+")
    t.add_argument("--out-model", required=True)
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--batch", type=_positive_int, default=64)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--p-max", type=float, default=0.5)
    t.add_argument("--d-max", type=_positive_int, default=50)
    t.add_argument("--no-goal", action="store_true", help="dataset was generated with --no-goal")
    t.add_argument("--no-marker", action="store_true", help="dataset was generated with --no-marker")
    t.add_argument("--no-valuations", action="store_true", help="dataset was generated with --no-valuations")
    t.add_argument("--curve", help="loss curve CSV (default: model path with .csv suffix)")

    e = sub.add_parser("eval", help="run an instances x approaches matrix")
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", help="report JSON path (default: stdout only)")
    return p


def _encoding(args) -> dict:
    return {
        "include_goal": not args.no_goal,
        "mark_pointed": not args.no_marker,
        "link_valuations": not args.no_valuations,
    }


def _solve(args) -> int:
    problem = resolve_problem(args.problem)
    models = {}
    if args.heuristic == "gnn":
        if not args.model:
            raise UsageError("--heuristic gnn needs --model")
        models[args.model] = load_model(args.model)
    limits = SearchLimits(timeout=args.timeout_ms, max_nodes=args.max_nodes or float("inf"))
    approach = {"search": args.search, "heuristic": args.heuristic, "model": args.model}
    res = run_approach(problem, approach, limits, models)
    name = args.search if args.search == "bfs" else f"astar+{args.heuristic}"
    rec = RunRecord(problem.name or args.problem, name, res.status,
                    len(res.plan) if res.solved else None,
                    res.nodes_expanded if res.status != "timeout" else None, res.elapsed)
    print(json.dumps({**rec.to_dict(), "plan": list(res.plan)}, indent=2))
    return EXIT_OK


def _datagen(args) -> int:
    records = []
    for k, ref in enumerate(args.problems):
        problem = resolve_problem(ref)
        cfg = DfsConfig(args.depth, args.discard_prob, args.max_nodes, args.seed + k)
        records += generate_records(problem, cfg, args.d_max, **_encoding(args))
    n = write_records(args.out, records)
    print(f"wrote {n} samples to {args.out}")
    return EXIT_OK


def _train(args) -> int:
    records = [r for path in args.data for r in read_records(path)]
    prep = PrepConfig(d_max=args.d_max, p_max=args.p_max)
    encoding = _encoding(args)
    result, data = train_from_records(records, args.epochs, args.batch, args.seed, prep, encoding)
    save_model(result.model, args.out_model)
    curve = Path(args.curve) if args.curve else Path(args.out_model).with_suffix(".csv")
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mse"])
        for i, loss in enumerate(result.losses, 1):
            w.writerow([i, repr(loss)])
    final = f"{result.losses[-1]:.6g}" if result.losses else "n/a"
    print(f"trained on {len(data.items)} of {len(records)} samples; final mse {final}")
    return EXIT_OK


def _eval(args) -> int:
    manifest = read_manifest(args.manifest)
    report = run_manifest(manifest, Path(args.manifest).resolve().parent)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(format_table(report), end="")
    return EXIT_OK


COMMANDS = {"solve": _solve, "datagen": _datagen, "train": _train, "eval": _eval}

INPUT_ERRORS = (
    UsageError, DomainError, InitialStateError, BuiltinError, ModelFileError,
    EmptyDatasetError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError,
)


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KeyError, ValueError) as exc:
        # bad option values and malformed manifests surface here
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
