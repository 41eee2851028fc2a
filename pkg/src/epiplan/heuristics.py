"""Heuristics for A*: learned distance regressor, unsatisfied-subgoal count
and the zero baseline."""

from __future__ import annotations

import math

from .embed import encode_state, to_feature_arrays
from .logic import PointedKripke, canonical_hash, entails
from .neural import GraphBatch, RegressorModel, denormalize_distance, forward


def zero_heuristic(state: PointedKripke, problem) -> float:
    return 0.0


def subgoal_heuristic(state: PointedKripke, problem) -> float:
    """Number of goal conjuncts the state does not entail."""
    return float(sum(not entails(state, g) for g in problem.goal))


class GnnHeuristic:
    """Eval-mode regressor estimate, cached per (state, goal)."""

    def __init__(self, model: RegressorModel):
        self.model = model
        self.cache: dict = {}

    def __call__(self, state: PointedKripke, problem) -> float:
        key = (canonical_hash(state), tuple(problem.goal), len(problem.agents), len(problem.fluents))
        value = self.cache.get(key)
        if value is None:
            value = gnn_heuristic(self.model, state, problem)
            self.cache[key] = value
        return value


def gnn_heuristic(model: RegressorModel, state: PointedKripke, problem) -> float:
    enc = model.encoding
    sg = encode_state(
        state, problem.goal, problem,
        include_goal=enc.get("include_goal", True),
        mark_pointed=enc.get("mark_pointed", True),
        link_valuations=enc.get("link_valuations", True),
    )
    pred = forward(model, GraphBatch.from_arrays([to_feature_arrays(sg)]))[0]
    value = float(denormalize_distance(pred, model.prep))
    if not math.isfinite(value):
        raise ValueError("regressor produced a non-finite estimate")
    return max(0.0, value)


HEURISTICS = ("zero", "subgoal", "gnn")


def make_heuristic(name: str, model: RegressorModel | None = None):
    if name == "zero":
        return zero_heuristic
    if name == "subgoal":
        return subgoal_heuristic
    if name == "gnn":
        if model is None:
            raise ValueError("the gnn heuristic needs a trained model")
        return GnnHeuristic(model)
    raise ValueError(f"unknown heuristic {name!r}; choose from {HEURISTICS}")
