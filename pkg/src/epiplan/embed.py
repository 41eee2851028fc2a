"""Serialize an e-state plus its goal into a labeled directed graph.

ID layout (all below ``RESERVED_BAND_END`` is reserved)::

    [0, |AG|)                         agent nodes
    [|AG|, |AG| + |F|)                fluent leaves
    [|AG| + |F|, RESERVED_BAND_END)   marker, goal root and operator nodes
    [RESERVED_BAND_END, 2**48 - 1]    world hashes

Kripke edges are labeled with the agent index, every goal edge with
``g = |AG|``, the pointed-world marker edge with ``g + 1`` and the
valuation edges between a world and the fluent leaves true in it with
``g + 2``.  Fluent leaves are thereby shared by the goal and the e-state.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .logic import (
    MAX_NODE_ID,
    RESERVED_BAND_END,
    And,
    Believes,
    Common,
    Formula,
    Implies,
    Lit,
    Not,
    Or,
    PointedKripke,
    Top,
    bits,
    is_fluent_formula,
    world_node_id,
)


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class StateGraph:
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]  # (src index, dst index, label)
    agent_count: int
    label_count: int
    pointed: int  # index of the pointed world node, -1 if unmarked

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise EmbeddingError("duplicate node IDs")
        n = len(self.nodes)
        for s, d, lab in self.edges:
            if not (0 <= s < n and 0 <= d < n):
                raise EmbeddingError("edge endpoint out of range")
            if not 0 <= lab < self.label_count:
                raise EmbeddingError(f"edge label {lab} outside [0, {self.label_count})")


class IdAllocator:
    """Sequential IDs from the operator band."""

    def __init__(self, start: int, end: int = RESERVED_BAND_END):
        self.next_id = start
        self.end = end

    def __call__(self) -> int:
        if self.next_id >= self.end:
            raise EmbeddingError("operator ID band exhausted")
        i = self.next_id
        self.next_id += 1
        return i


@dataclass
class GoalFragment:
    nodes: set[int] = field(default_factory=set)
    edges: list[tuple[int, int, int]] = field(default_factory=list)  # node IDs

    def connect(self, a: int, b: int, label: int, both: bool = False):
        self.nodes.update((a, b))
        self.edges.append((a, b, label))
        if both:
            self.edges.append((b, a, label))


def fluent_dnf(phi: Formula, positive: bool = True) -> list[list[tuple[int, bool]]]:
    """Disjunctive normal form of a fluent formula as lists of literals."""
    if isinstance(phi, Top):
        return [[]] if positive else []
    if isinstance(phi, Lit):
        return [[(phi.fluent, phi.positive == positive)]]
    if isinstance(phi, Not):
        return fluent_dnf(phi.sub, not positive)
    if isinstance(phi, Implies):
        return fluent_dnf(Or(Not(phi.left), phi.right), positive)
    if isinstance(phi, (And, Or)):
        is_and = isinstance(phi, And) == positive
        left = fluent_dnf(phi.left, positive)
        right = fluent_dnf(phi.right, positive)
        if not is_and:
            return left + right
        return [l + r for l in left for r in right]
    raise EmbeddingError(f"not a fluent formula: {phi!r}")


def encode_goal(
    phi: Formula,
    g: int,
    alloc: IdAllocator,
    parent: int,
    n_agents: int,
    frag: GoalFragment | None = None,
) -> GoalFragment:
    """Recursively attach the graph of ``phi`` below node ``parent``.

    Agent ``a`` maps to node ID ``a`` and fluent ``f`` to ``n_agents + f``.
    A negative literal inside a fluent formula hangs below its own operator
    node so that ``f`` and ``-f`` stay distinguishable.
    """
    frag = GoalFragment() if frag is None else frag
    n = alloc()
    if is_fluent_formula(phi):
        for disjunct in fluent_dnf(phi):
            p = parent
            if len(disjunct) > 1:
                p = alloc()
                frag.connect(parent, p, g)
            for f, positive in disjunct:
                if positive:
                    frag.connect(p, n_agents + f, g)
                else:
                    m = alloc()
                    frag.connect(p, m, g)
                    frag.connect(m, n_agents + f, g)
    elif isinstance(phi, Believes):
        frag.connect(parent, n, g)
        frag.connect(n, phi.agent, g, both=True)
        encode_goal(phi.sub, g, alloc, n, n_agents, frag)
    elif isinstance(phi, Common):
        frag.connect(parent, n, g)
        for a in sorted(phi.agents):
            frag.connect(n, a, g, both=True)
        encode_goal(phi.sub, g, alloc, n, n_agents, frag)
    else:
        frag.connect(parent, n, g)
        if isinstance(phi, Not):
            encode_goal(phi.sub, g, alloc, n, n_agents, frag)
        else:
            encode_goal(phi.left, g, alloc, n, n_agents, frag)
            encode_goal(phi.right, g, alloc, n, n_agents, frag)
    return frag


def world_ids(state: PointedKripke) -> list[int]:
    """Node IDs of the worlds; colliding hashes are re-salted."""
    order = sorted(range(len(state.worlds)), key=lambda w: (state.worlds[w].valuation, state.worlds[w].repetition))
    ids = [0] * len(state.worlds)
    used = set()
    for w in order:
        salt = 0
        wid = world_node_id(state.worlds[w], salt=salt)
        while wid in used:
            salt += 1
            wid = world_node_id(state.worlds[w], salt=salt)
        used.add(wid)
        ids[w] = wid
    return ids


def encode_state(
    state: PointedKripke,
    goal,
    problem,
    include_goal: bool = True,
    mark_pointed: bool = True,
    link_valuations: bool = True,
) -> StateGraph:
    n_agents = len(problem.agents)
    g = n_agents
    alloc = IdAllocator(n_agents + len(problem.fluents))
    wids = world_ids(state)
    edges = [
        (wids[w], wids[v], i)
        for i, rel in enumerate(state.relations)
        for w, succ in enumerate(rel)
        for v in succ
    ]
    nodes = set(wids)
    if link_valuations:
        for w, world in enumerate(state.worlds):
            for f in bits(world.valuation):
                leaf = n_agents + f
                nodes.add(leaf)
                edges += [(wids[w], leaf, g + 2), (leaf, wids[w], g + 2)]
    if mark_pointed:
        marker = alloc()
        nodes.add(marker)
        edges.append((marker, wids[state.pointed], g + 1))
    if include_goal:
        root = alloc()
        nodes.add(root)
        frag = GoalFragment()
        for phi in goal:
            encode_goal(phi, g, alloc, root, n_agents, frag)
        nodes |= frag.nodes
        edges += frag.edges
    ordered = sorted(nodes)
    index = {nid: k for k, nid in enumerate(ordered)}
    idx_edges = sorted((index[s], index[d], lab) for s, d, lab in edges)
    pointed = index[wids[state.pointed]] if mark_pointed else -1
    label_count = n_agents + (3 if link_valuations else 2)
    return StateGraph(tuple(ordered), tuple(idx_edges), n_agents, label_count, pointed)


def to_feature_arrays(sg: StateGraph, max_id: int = MAX_NODE_ID):
    """Node features ``ID / max_id``, a 2 x |E| index array, edge attributes."""
    x = np.asarray(sg.nodes, dtype=np.float64).reshape(-1, 1) / float(max_id)
    if sg.edges:
        e = np.asarray(sg.edges, dtype=np.int64)
        edge_index = e[:, :2].T.copy()
        attr = e[:, 2:3].astype(np.float64) / float(max(sg.label_count - 1, 1))
    else:
        edge_index = np.zeros((2, 0), dtype=np.int64)
        attr = np.zeros((0, 1), dtype=np.float64)
    return x, edge_index, attr


# --------------------------------------------------------------------------
# dot export
# --------------------------------------------------------------------------


def to_dot(sg: StateGraph) -> str:
    lines = ["digraph {"]
    lines.append(
        f"  graph [agent_count={sg.agent_count}, label_count={sg.label_count}, pointed={sg.pointed}];"
    )
    lines += [f"  {nid};" for nid in sg.nodes]
    lines += [
        f"  {sg.nodes[s]} -> {sg.nodes[d]} [label={lab}];" for s, d, lab in sg.edges
    ]
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_GRAPH = re.compile(r"^\s*graph\s*\[(.*)\];\s*$")
_DOT_NODE = re.compile(r"^\s*(\d+);\s*$")
_DOT_EDGE = re.compile(r"^\s*(\d+)\s*->\s*(\d+)\s*\[label=(\d+)\];\s*$")


def from_dot(text: str) -> StateGraph:
    """Parse the output of ``to_dot`` back into a ``StateGraph``."""
    meta = {}
    nodes: list[int] = []
    raw_edges = []
    body = text.strip()
    if not (body.startswith("digraph") and body.endswith("}")):
        raise EmbeddingError("not a digraph")
    for line in body[body.index("{") + 1 : -1].splitlines():
        if not line.strip():
            continue
        if m := _DOT_GRAPH.match(line):
            for item in m.group(1).split(","):
                k, _, v = item.strip().partition("=")
                meta[k] = int(v)
        elif m := _DOT_NODE.match(line):
            nodes.append(int(m.group(1)))
        elif m := _DOT_EDGE.match(line):
            raw_edges.append(tuple(int(x) for x in m.groups()))
        else:
            raise EmbeddingError(f"cannot parse dot line {line!r}")
    index = {nid: k for k, nid in enumerate(nodes)}
    edges = tuple((index[s], index[d], lab) for s, d, lab in raw_edges)
    return StateGraph(
        tuple(nodes), edges, meta.get("agent_count", 0),
        meta.get("label_count", 1), meta.get("pointed", -1),
    )


# --------------------------------------------------------------------------
# Dataset records (JSON lines)
# --------------------------------------------------------------------------


def graph_record(sg: StateGraph, distance: int | None) -> dict:
    return {
        "nodes": list(sg.nodes),
        "edges": [list(e) for e in sg.edges],
        "pointed": sg.pointed,
        "agent_count": sg.agent_count,
        "label_count": sg.label_count,
        "distance": -1 if distance is None else int(distance),
    }


def record_graph(rec: dict) -> tuple[StateGraph, int | None]:
    sg = StateGraph(
        tuple(rec["nodes"]),
        tuple(tuple(e) for e in rec["edges"]),
        rec["agent_count"],
        rec["label_count"],
        rec["pointed"],
    )
    d = rec["distance"]
    return sg, (None if d < 0 else d)


def write_records(path, records) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            n += 1
    return n


def read_records(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
