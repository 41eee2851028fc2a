"""Breadth-first search, A*, and the randomized DFS dataset generator."""

from __future__ import annotations

import heapq
import math
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .actions import apply, successors
from .domain import initial_state
from .logic import PointedKripke, canonical_hash, satisfies_goal

SOLVED = "solved"
EXHAUSTED = "exhausted"
TIMEOUT = "timeout"

DEFAULT_TIMEOUT_MS = 600_000


@dataclass(frozen=True)
class SearchLimits:
    timeout: float = DEFAULT_TIMEOUT_MS  # milliseconds
    max_nodes: float = math.inf
    max_depth: float = math.inf

    def __post_init__(self):
        if self.timeout <= 0 or self.max_nodes <= 0 or self.max_depth <= 0:
            raise ValueError("search limits must be positive")


@dataclass
class SearchResult:
    status: str
    plan: tuple[str, ...] = ()
    nodes_expanded: int = 0
    elapsed: float = 0.0  # milliseconds

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


class _Clock:
    def __init__(self, limits: SearchLimits):
        self.start = time.perf_counter()
        self.limits = limits

    @property
    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0

    def out_of_time(self) -> bool:
        return self.elapsed_ms > self.limits.timeout


def replay(problem, plan) -> PointedKripke:
    """Execute a plan from the initial state (raises if a step is not executable)."""
    state = initial_state(problem)
    for name in plan:
        state = apply(state, problem.action(name))
    return state


def bfs(problem, limits: SearchLimits = SearchLimits()) -> SearchResult:
    clock = _Clock(limits)
    init = initial_state(problem)
    if satisfies_goal(init, problem):
        return SearchResult(SOLVED, (), 0, clock.elapsed_ms)
    seen = {canonical_hash(init)}
    frontier = deque([(init, ())])
    expanded = 0
    while frontier:
        if clock.out_of_time():
            return SearchResult(TIMEOUT, (), expanded, clock.elapsed_ms)
        if expanded >= limits.max_nodes:
            return SearchResult(EXHAUSTED, (), expanded, clock.elapsed_ms)
        state, plan = frontier.popleft()
        expanded += 1
        for action, child in successors(state, problem):
            h = canonical_hash(child)
            if h in seen:
                continue
            seen.add(h)
            child_plan = plan + (action.name,)
            if satisfies_goal(child, problem):
                return SearchResult(SOLVED, child_plan, expanded, clock.elapsed_ms)
            frontier.append((child, child_plan))
    return SearchResult(EXHAUSTED, (), expanded, clock.elapsed_ms)


Heuristic = Callable[[PointedKripke, object], float]


def astar(problem, h: Heuristic, limits: SearchLimits = SearchLimits()) -> SearchResult:
    """Best-first search on ``f = g + h``; FIFO among equal ``f``.

    Heuristic values are rounded to two decimals.  States are closed once
    expanded and never reopened, so inadmissible heuristics may return
    longer plans.  The goal test happens when a state is popped, and that
    pop counts as an expansion.
    """
    clock = _Clock(limits)
    init = initial_state(problem)
    counter = 0
    h0 = round(float(h(init, problem)), 2)
    open_heap = [(h0, counter, 0, init, ())]
    best_g = {canonical_hash(init): 0}
    closed = set()
    expanded = 0
    while open_heap:
        if clock.out_of_time():
            return SearchResult(TIMEOUT, (), expanded, clock.elapsed_ms)
        if expanded >= limits.max_nodes:
            return SearchResult(EXHAUSTED, (), expanded, clock.elapsed_ms)
        _, _, g, state, plan = heapq.heappop(open_heap)
        key = canonical_hash(state)
        if key in closed:
            continue
        closed.add(key)
        expanded += 1
        if satisfies_goal(state, problem):
            return SearchResult(SOLVED, plan, expanded, clock.elapsed_ms)
        for action, child in successors(state, problem):
            ck = canonical_hash(child)
            if ck in closed or best_g.get(ck, math.inf) <= g + 1:
                continue
            best_g[ck] = g + 1
            counter += 1
            f = g + 1 + round(float(h(child, problem)), 2)
            heapq.heappush(open_heap, (f, counter, g + 1, child, plan + (action.name,)))
    return SearchResult(EXHAUSTED, (), expanded, clock.elapsed_ms)


# --------------------------------------------------------------------------
# Dataset generation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DfsConfig:
    depth_limit: int = 25
    base_discard_prob: float = 0.3
    node_cap: float = 10_000
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.base_discard_prob < 1.0:
            raise ValueError("discard probability must lie in [0, 1)")
        if self.depth_limit < 0 or self.node_cap < 1:
            raise ValueError("depth limit must be >= 0 and node cap >= 1")

    def discard_prob(self, depth: int, n_nodes: int) -> float:
        if self.depth_limit == 0 or math.isinf(self.node_cap):
            return 0.0
        return (
            self.base_discard_prob
            * (depth / self.depth_limit)
            * min(1.0, n_nodes / self.node_cap * 2)
        )


@dataclass
class ExploredGraph:
    """States found by ``dfs_collect`` keyed by canonical hash.

    ``edges[h]`` lists the hashes of the explored successors of ``h``;
    ``depth[h]`` is the shallowest depth at which ``h`` was reached.
    """

    root: int
    states: dict[int, PointedKripke] = field(default_factory=dict)
    depth: dict[int, int] = field(default_factory=dict)
    edges: dict[int, set[int]] = field(default_factory=dict)
    order: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.order)


def dfs_collect(problem, cfg: DfsConfig) -> ExploredGraph:
    """Seeded depth-limited DFS with adaptive branch discarding.

    Successor order is a seeded random permutation at every node.  A state
    met again at a strictly shallower depth is re-expanded from there, so a
    full-probability run with ``depth_limit`` at least the state-space
    diameter visits every reachable state and edge.
    """
    rng = random.Random(cfg.rng_seed)
    init = initial_state(problem)
    root = canonical_hash(init)
    g = ExploredGraph(root)
    g.states[root] = init
    g.depth[root] = 0
    g.order.append(root)
    succ_cache: dict[int, list[tuple[int, PointedKripke]]] = {}

    stack = [(root, 0)]
    while stack:
        key, depth = stack.pop()
        if depth > g.depth[key] or depth >= cfg.depth_limit:
            continue
        if key not in succ_cache:
            succ_cache[key] = [(canonical_hash(s), s) for _, s in successors(g.states[key], problem)]
        children = list(succ_cache[key])
        rng.shuffle(children)
        out = g.edges.setdefault(key, set())
        pushes = []
        for ck, child in children:
            cd = depth + 1
            if ck in g.depth:
                out.add(ck)
                if cd < g.depth[ck]:
                    g.depth[ck] = cd
                    pushes.append((ck, cd))
                continue
            if len(g.order) >= cfg.node_cap:
                continue
            if rng.random() < cfg.discard_prob(cd, len(g.order)):
                continue
            g.states[ck] = child
            g.depth[ck] = cd
            g.order.append(ck)
            out.add(ck)
            pushes.append((ck, cd))
        # reversed so the first shuffled child is expanded first
        stack.extend(reversed(pushes))
    return g


@dataclass(frozen=True)
class LabeledSample:
    state: PointedKripke
    goal: tuple
    distance: int | None  # None marks "no goal reachable in the explored graph"

    @property
    def reachable(self) -> bool:
        return self.distance is not None


def assign_distances(graph: ExploredGraph, problem, d_max: int = 50) -> list[LabeledSample]:
    """Distance from each explored state to the closest explored goal.

    Multi-source BFS over reversed explored edges; distances above ``d_max``
    are capped.  Samples come back in discovery order.
    """
    preds: dict[int, list[int]] = {k: [] for k in graph.order}
    for src, dsts in graph.edges.items():
        for dst in dsts:
            preds[dst].append(src)
    dist: dict[int, int] = {}
    queue = deque()
    for k in graph.order:
        if satisfies_goal(graph.states[k], problem):
            dist[k] = 0
            queue.append(k)
    while queue:
        x = queue.popleft()
        for p in preds[x]:
            if p not in dist:
                dist[p] = dist[x] + 1
                queue.append(p)
    goal = tuple(problem.goal)
    return [
        LabeledSample(graph.states[k], goal, min(dist[k], d_max) if k in dist else None)
        for k in graph.order
    ]
