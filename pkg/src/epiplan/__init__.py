"""Multi-agent epistemic planning with a learned distance heuristic."""

from .actions import ANNOUNCEMENT, ONTIC, SENSING, Action, ActionError, ObservabilityFrame, apply, executable, successors
from .builtins import builtin_problem, coinbox, selective
from .domain import DomainError, InitialStateError, initial_state, load_problem, parse_problem, serialize_problem
from .embed import StateGraph, encode_goal, encode_state, from_dot, to_dot, to_feature_arrays
from .heuristics import GnnHeuristic, gnn_heuristic, make_heuristic, subgoal_heuristic, zero_heuristic
from .logic import (
    And,
    Believes,
    Common,
    EpistemicProblem,
    Implies,
    Lit,
    Not,
    Or,
    PointedKripke,
    Top,
    bisim_reduce,
    canonical_hash,
    entails,
    satisfies_goal,
)
from .metrics import iqm, iqr_std, percent_reduction
from .search import DfsConfig, SearchLimits, SearchResult, assign_distances, astar, bfs, dfs_collect

__all__ = [
    "Action", "ActionError", "And", "ANNOUNCEMENT", "apply", "assign_distances", "astar",
    "Believes", "bfs", "bisim_reduce", "builtin_problem", "canonical_hash", "coinbox", "Common",
    "dfs_collect", "DfsConfig", "DomainError", "encode_goal", "encode_state", "entails",
    "EpistemicProblem", "executable", "from_dot", "gnn_heuristic", "GnnHeuristic", "Implies",
    "initial_state", "InitialStateError", "iqm", "iqr_std", "Lit", "load_problem",
    "make_heuristic", "Not", "ObservabilityFrame", "ONTIC", "Or", "parse_problem",
    "percent_reduction", "PointedKripke", "satisfies_goal", "SearchLimits", "SearchResult",
    "selective", "SENSING", "serialize_problem", "StateGraph", "subgoal_heuristic", "successors",
    "to_dot", "to_feature_arrays", "Top", "zero_heuristic",
]

__version__ = "0.1.0"
