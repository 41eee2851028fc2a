"""Belief formulas, pointed Kripke structures and model checking.

Worlds carry their valuation as an integer bit-set over the problem's fluent
indices.  Accessibility relations are stored per agent as successor tuples,
``relations[agent][world] -> (succ, ...)``, which keeps entailment checks and
the update construction cheap.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

MAX_NODE_ID = 2**48 - 1
# Node IDs below this bound are reserved for agent, fluent, operator and
# marker nodes of the graph embedding; world hashes never land here.
RESERVED_BAND_END = 2**20


# --------------------------------------------------------------------------
# Formulas
# --------------------------------------------------------------------------


class Formula:
    """Base class of the belief-formula language."""

    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    """The always-true formula (used for empty preconditions)."""


@dataclass(frozen=True)
class Lit(Formula):
    fluent: int
    positive: bool = True


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Believes(Formula):
    agent: int
    sub: Formula


@dataclass(frozen=True)
class Common(Formula):
    agents: frozenset
    sub: Formula

    def __post_init__(self):
        if not self.agents:
            raise ValueError("common knowledge needs a nonempty agent group")
        object.__setattr__(self, "agents", frozenset(self.agents))


TRUE = Top()


def conj(formulas: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; the empty conjunction is ``TRUE``."""
    out = None
    for f in formulas:
        out = f if out is None else And(out, f)
    return TRUE if out is None else out


def is_fluent_formula(phi: Formula) -> bool:
    if isinstance(phi, (Top, Lit)):
        return True
    if isinstance(phi, Not):
        return is_fluent_formula(phi.sub)
    if isinstance(phi, (And, Or, Implies)):
        return is_fluent_formula(phi.left) and is_fluent_formula(phi.right)
    return False


def modal_depth(phi: Formula) -> int:
    if isinstance(phi, (Top, Lit)):
        return 0
    if isinstance(phi, Not):
        return modal_depth(phi.sub)
    if isinstance(phi, (And, Or, Implies)):
        return max(modal_depth(phi.left), modal_depth(phi.right))
    return 1 + modal_depth(phi.sub)


def formula_fluents(phi: Formula) -> set[int]:
    if isinstance(phi, Lit):
        return {phi.fluent}
    if isinstance(phi, Top):
        return set()
    if isinstance(phi, (Not, Believes, Common)):
        return formula_fluents(phi.sub)
    return formula_fluents(phi.left) | formula_fluents(phi.right)


def formula_agents(phi: Formula) -> set[int]:
    if isinstance(phi, (Lit, Top)):
        return set()
    if isinstance(phi, Not):
        return formula_agents(phi.sub)
    if isinstance(phi, Believes):
        return {phi.agent} | formula_agents(phi.sub)
    if isinstance(phi, Common):
        return set(phi.agents) | formula_agents(phi.sub)
    return formula_agents(phi.left) | formula_agents(phi.right)


# --------------------------------------------------------------------------
# Structures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class World:
    valuation: int
    repetition: int = 0

    def true_fluents(self) -> tuple[int, ...]:
        return bits(self.valuation)


def bits(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def mask_of(fluents: Iterable[int]) -> int:
    m = 0
    for f in fluents:
        m |= 1 << f
    return m


@dataclass(frozen=True)
class PointedKripke:
    """A pointed Kripke structure ``(M, s)``.

    ``relations[i][w]`` is the sorted tuple of ``R_i``-successors of world
    ``w``.  Instances are immutable; every operation returns a new one.
    """

    worlds: tuple[World, ...]
    relations: tuple[tuple[tuple[int, ...], ...], ...]
    pointed: int
    _hash: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.worlds)
        if not 0 <= self.pointed < n:
            raise ValueError(f"pointed world {self.pointed} out of range for {n} worlds")
        seen = set()
        for w in self.worlds:
            key = (w.valuation, w.repetition)
            if key in seen:
                raise ValueError(f"duplicate world {key}")
            seen.add(key)
        for rel in self.relations:
            if len(rel) != n:
                raise ValueError("relation table does not cover every world")
            for succ in rel:
                for v in succ:
                    if not 0 <= v < n:
                        raise ValueError(f"edge endpoint {v} out of range")

    @classmethod
    def build(
        cls,
        valuations: Sequence[int],
        edges: Sequence[Iterable[tuple[int, int]]],
        pointed: int,
    ) -> "PointedKripke":
        """Construct from raw valuations and per-agent edge lists.

        Repetition numbers are assigned per valuation in insertion order.
        """
        n = len(valuations)
        reps: dict[int, int] = {}
        worlds = []
        for v in valuations:
            r = reps.get(v, 0)
            reps[v] = r + 1
            worlds.append(World(v, r))
        rels = []
        for agent_edges in edges:
            succ: list[set[int]] = [set() for _ in range(n)]
            for a, b in agent_edges:
                succ[a].add(b)
            rels.append(tuple(tuple(sorted(s)) for s in succ))
        return cls(tuple(worlds), tuple(rels), pointed)

    @property
    def n_agents(self) -> int:
        return len(self.relations)

    @property
    def valuations(self) -> tuple[int, ...]:
        return tuple(w.valuation for w in self.worlds)

    def edges(self, agent: int) -> list[tuple[int, int]]:
        return [(w, v) for w, succ in enumerate(self.relations[agent]) for v in succ]

    def edge_count(self) -> int:
        return sum(len(s) for rel in self.relations for s in rel)

    def permuted(self, order: Sequence[int]) -> "PointedKripke":
        """Re-store the same structure with ``order[k]`` as new world ``k``."""
        pos = {old: new for new, old in enumerate(order)}
        worlds = tuple(self.worlds[o] for o in order)
        rels = tuple(
            tuple(tuple(sorted(pos[v] for v in rel[o])) for o in order)
            for rel in self.relations
        )
        return PointedKripke(worlds, rels, pos[self.pointed])


# --------------------------------------------------------------------------
# Model checking
# --------------------------------------------------------------------------


def eval_fluent_formula(world: World | int, phi: Formula) -> bool:
    """Propositional truth of a B/C-free formula in a single world."""
    val = world.valuation if isinstance(world, World) else world
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Lit):
        return bool(val >> phi.fluent & 1) == phi.positive
    if isinstance(phi, Not):
        return not eval_fluent_formula(val, phi.sub)
    if isinstance(phi, And):
        return eval_fluent_formula(val, phi.left) and eval_fluent_formula(val, phi.right)
    if isinstance(phi, Or):
        return eval_fluent_formula(val, phi.left) or eval_fluent_formula(val, phi.right)
    if isinstance(phi, Implies):
        return (not eval_fluent_formula(val, phi.left)) or eval_fluent_formula(val, phi.right)
    raise ValueError(f"not a fluent formula: {phi!r}")


def truth_set(state: PointedKripke, phi: Formula, _memo: dict | None = None) -> list[bool]:
    """Truth value of ``phi`` at every world of ``state``."""
    memo = {} if _memo is None else _memo
    hit = memo.get(phi)
    if hit is not None:
        return hit
    n = len(state.worlds)
    if isinstance(phi, Top):
        out = [True] * n
    elif isinstance(phi, Lit):
        f, pos = phi.fluent, phi.positive
        out = [bool(w.valuation >> f & 1) == pos for w in state.worlds]
    elif isinstance(phi, Not):
        out = [not t for t in truth_set(state, phi.sub, memo)]
    elif isinstance(phi, And):
        a, b = truth_set(state, phi.left, memo), truth_set(state, phi.right, memo)
        out = [x and y for x, y in zip(a, b)]
    elif isinstance(phi, Or):
        a, b = truth_set(state, phi.left, memo), truth_set(state, phi.right, memo)
        out = [x or y for x, y in zip(a, b)]
    elif isinstance(phi, Implies):
        a, b = truth_set(state, phi.left, memo), truth_set(state, phi.right, memo)
        out = [(not x) or y for x, y in zip(a, b)]
    elif isinstance(phi, Believes):
        t = truth_set(state, phi.sub, memo)
        rel = state.relations[phi.agent]
        out = [all(t[v] for v in rel[w]) for w in range(n)]
    elif isinstance(phi, Common):
        t = truth_set(state, phi.sub, memo)
        # w fails iff some world violating the body is reachable in >= 1 step;
        # walk the union relation backwards from the violating worlds.
        preds: list[list[int]] = [[] for _ in range(n)]
        for i in phi.agents:
            for w, succ in enumerate(state.relations[i]):
                for v in succ:
                    preds[v].append(w)
        fails = [False] * n
        queue = deque(v for v in range(n) if not t[v])
        while queue:
            x = queue.popleft()
            for p in preds[x]:
                if not fails[p]:
                    fails[p] = True
                    queue.append(p)
        out = [not f for f in fails]
    else:
        raise TypeError(f"unknown formula node {phi!r}")
    memo[phi] = out
    return out


def entails(state: PointedKripke, phi: Formula) -> bool:
    return truth_set(state, phi)[state.pointed]


def satisfies_goal(state: PointedKripke, problem) -> bool:
    memo: dict = {}
    return all(truth_set(state, g, memo)[state.pointed] for g in problem.goal)


# --------------------------------------------------------------------------
# Bisimulation and canonical forms
# --------------------------------------------------------------------------


def reachable_worlds(state: PointedKripke) -> list[int]:
    """Worlds reachable from the pointed world, in discovery order."""
    seen = {state.pointed}
    order = [state.pointed]
    queue = deque(order)
    while queue:
        w = queue.popleft()
        for rel in state.relations:
            for v in rel[w]:
                if v not in seen:
                    seen.add(v)
                    order.append(v)
                    queue.append(v)
    return order


def prune_unreachable(state: PointedKripke) -> PointedKripke:
    keep = reachable_worlds(state)
    if len(keep) == len(state.worlds):
        return state
    keep.sort()
    pos = {old: new for new, old in enumerate(keep)}
    valuations = [state.worlds[o].valuation for o in keep]
    edges = [
        [(pos[w], pos[v]) for w in keep for v in rel[w]] for rel in state.relations
    ]
    return PointedKripke.build(valuations, edges, pos[state.pointed])


def refine_colors(state: PointedKripke) -> list[int]:
    """Coarsest stable colouring refining the valuation partition.

    Colours are canonical ranks: they depend on the structure only up to
    isomorphism, sort first by valuation and then by the refinement
    signature, and two worlds share a colour iff they are bisimilar.
    """
    worlds = state.worlds
    vals = sorted({w.valuation for w in worlds})
    vrank = {v: k for k, v in enumerate(vals)}
    colors = [vrank[w.valuation] for w in worlds]
    n_colors = len(vals)
    rels = state.relations
    while True:
        sigs = [
            (colors[w], tuple(tuple(sorted({colors[v] for v in rel[w]})) for rel in rels))
            for w in range(len(worlds))
        ]
        distinct = sorted(set(sigs))
        if len(distinct) == n_colors:
            return colors
        rank = {s: k for k, s in enumerate(distinct)}
        colors = [rank[s] for s in sigs]
        n_colors = len(distinct)


def bisim_reduce(state: PointedKripke) -> PointedKripke:
    """Quotient by the coarsest bisimulation, in canonical world order.

    Worlds unreachable from the pointed world are dropped first; they cannot
    affect any formula evaluated at the pointed world.
    """
    state = prune_unreachable(state)
    colors = refine_colors(state)
    k = max(colors) + 1
    vals = [0] * k
    succ: list[list[set[int]]] = [[set() for _ in range(k)] for _ in state.relations]
    for w, c in enumerate(colors):
        vals[c] = state.worlds[w].valuation
        for i, rel in enumerate(state.relations):
            succ[i][c].update(colors[v] for v in rel[w])
    worlds = []
    prev, rep = None, 0
    for v in vals:
        rep = rep + 1 if v == prev else 0
        worlds.append(World(v, rep))
        prev = v
    rels = tuple(tuple(tuple(sorted(s)) for s in agent) for agent in succ)
    return PointedKripke(tuple(worlds), rels, colors[state.pointed])


def _digest(data: bytes, size: int = 8) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=size).digest(), "big")


def canonical_hash(state: PointedKripke) -> int:
    """64-bit digest of the canonical form of a (reduced) structure."""
    if state._hash:
        return state._hash[0]
    colors = refine_colors(state)
    k = max(colors) + 1
    vals = [0] * k
    succ: list[list[set[int]]] = [[set() for _ in range(k)] for _ in state.relations]
    for w, c in enumerate(colors):
        vals[c] = state.worlds[w].valuation
        for i, rel in enumerate(state.relations):
            succ[i][c].update(colors[v] for v in rel[w])
    parts = [f"n{k};a{len(state.relations)};p{colors[state.pointed]}"]
    parts.append(",".join(map(str, vals)))
    for agent in succ:
        parts.append("|".join(".".join(map(str, sorted(s))) for s in agent))
    h = _digest(";".join(parts).encode())
    state._hash.append(h)
    return h


def world_node_id(
    world: World,
    max_id: int = MAX_NODE_ID,
    salt: int = 0,
    low: int = RESERVED_BAND_END,
) -> int:
    """Hash a world's true fluents and repetition into ``[low, max_id]``."""
    key = "{}|{}|{}".format(",".join(map(str, world.true_fluents())), world.repetition, salt)
    return low + _digest(key.encode()) % (max_id - low + 1)


# --------------------------------------------------------------------------
# Problems
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EpistemicProblem:
    fluents: tuple[str, ...]
    agents: tuple[str, ...]
    actions: tuple = ()
    initial: tuple[Formula, ...] = ()
    goal: tuple[Formula, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.agents:
            raise ValueError("a problem needs at least one agent")
        nf, na = len(self.fluents), len(self.agents)
        for phi in self.initial + self.goal:
            if any(f >= nf for f in formula_fluents(phi)):
                raise ValueError(f"formula references an undeclared fluent: {phi!r}")
            if any(a >= na for a in formula_agents(phi)):
                raise ValueError(f"formula references an undeclared agent: {phi!r}")

    def fluent_index(self, name: str) -> int:
        return self.fluents.index(name)

    def agent_index(self, name: str) -> int:
        return self.agents.index(name)

    def action(self, name: str):
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def describe_world(self, world: World) -> str:
        names = [self.fluents[f] for f in world.true_fluents()]
        return "{" + ",".join(names) + "}"


def state_from_mapping(
    valuations: Sequence[int],
    relations: Mapping[int, Iterable[tuple[int, int]]],
    n_agents: int,
    pointed: int = 0,
) -> PointedKripke:
    """Convenience constructor keyed by agent index (missing agents: no edges)."""
    return PointedKripke.build(
        valuations, [list(relations.get(i, ())) for i in range(n_agents)], pointed
    )
