"""Glue between problems, datasets, models and evaluation runs."""

from __future__ import annotations

import json
from pathlib import Path

from .builtins import builtin_problem, parse_problem_ref
from .domain import load_problem
from .embed import encode_state, graph_record, record_graph, to_feature_arrays
from .heuristics import make_heuristic
from .metrics import RunRecord, build_report
from .neural import PrepConfig, RegressorModel, load_model, prepare_dataset, train
from .search import DfsConfig, SearchLimits, assign_distances, astar, bfs, dfs_collect


def resolve_problem(ref: str, base: Path | None = None):
    """A ``.epd`` path or ``builtin:<name>?key=value&...``."""
    if ref.startswith("builtin:"):
        name, params = parse_problem_ref(ref)
        return builtin_problem(name, {k: int(v) for k, v in params.items()})
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    return load_problem(path)


def generate_records(problem, cfg: DfsConfig, d_max: int = 50, **encoding) -> list[dict]:
    """Explore ``problem`` and encode every explored state with its label.

    ``encoding`` takes the ``encode_state`` flags.
    """
    graph = dfs_collect(problem, cfg)
    return [
        graph_record(encode_state(s.state, s.goal, problem, **encoding), s.distance)
        for s in assign_distances(graph, problem, d_max)
    ]


def train_from_records(records: list[dict], epochs: int = 100, batch_size: int = 64, seed: int = 0,
                       prep: PrepConfig = PrepConfig(), encoding: dict | None = None):
    samples = [record_graph(r) for r in records]
    data = prepare_dataset(samples, prep, seed)
    model = RegressorModel.initialize(seed, prep=prep, encoding=encoding)
    arrays = [to_feature_arrays(g) for g in data.items]
    result = train(model, arrays, data.targets, epochs=epochs, batch_size=batch_size, seed=seed)
    return result, data


def run_approach(problem, approach: dict, limits: SearchLimits, models: dict):
    search = approach.get("search", "bfs")
    if search == "bfs":
        return bfs(problem, limits)
    if search == "astar":
        model = None
        if approach.get("model"):
            model = models[approach["model"]]
        return astar(problem, make_heuristic(approach.get("heuristic", "zero"), model), limits)
    raise ValueError(f"unknown search {search!r}")


def run_manifest(manifest: dict, base: Path | None = None) -> dict:
    """Run every (instance, approach) cell in manifest order.

    Manifest keys: ``instances`` (problem refs), ``approaches`` (objects
    with ``name``, ``search``, optional ``heuristic`` and ``model``),
    optional ``timeout_ms``, ``max_nodes``, ``baseline`` and
    ``soft_targets``.  Relative paths resolve against ``base``.
    """
    limits = SearchLimits(
        timeout=manifest.get("timeout_ms", 600_000),
        max_nodes=manifest.get("max_nodes") or float("inf"),
    )
    models = {}
    for ap in manifest["approaches"]:
        ref = ap.get("model")
        if ref and ref not in models:
            path = Path(ref)
            models[ref] = load_model(base / path if base and not path.is_absolute() else path)
    records = []
    for ref in manifest["instances"]:
        problem = resolve_problem(ref, base)
        label = problem.name or ref
        for ap in manifest["approaches"]:
            res = run_approach(problem, ap, limits, models)
            records.append(RunRecord(
                label, ap["name"], res.status,
                len(res.plan) if res.solved else None,
                res.nodes_expanded if res.status != "timeout" else None,
                res.elapsed,
            ))
    return build_report(records, manifest.get("baseline"), manifest.get("soft_targets"))


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
