"""Ontic, sensing and announcement actions and the state-transition function.

The update builds a fresh structure holding updated copies of every world
plus an untouched copy of the old structure.  Fully and partially observant
agents relate updated copies to each other (full observers only between
copies that agree on the observed outcome); oblivious agents keep pointing
into the old copy, so their beliefs do not move.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .logic import (
    TRUE,
    Formula,
    Lit,
    PointedKripke,
    bisim_reduce,
    entails,
    is_fluent_formula,
    truth_set,
)

ONTIC = "ontic"
SENSING = "sensing"
ANNOUNCEMENT = "announcement"
KINDS = (ONTIC, SENSING, ANNOUNCEMENT)


class ActionError(ValueError):
    pass


@dataclass(frozen=True)
class ObservabilityFrame:
    full: frozenset
    partial: frozenset = frozenset()
    oblivious: frozenset = frozenset()

    def __post_init__(self):
        for name in ("full", "partial", "oblivious"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.full & self.partial or self.full & self.oblivious or self.partial & self.oblivious:
            raise ActionError("observability classes overlap")

    @classmethod
    def make(cls, n_agents: int, full=(), partial=()) -> "ObservabilityFrame":
        full, partial = frozenset(full), frozenset(partial)
        rest = frozenset(range(n_agents)) - full - partial
        return cls(full, partial, rest)

    @classmethod
    def public(cls, n_agents: int) -> "ObservabilityFrame":
        return cls(frozenset(range(n_agents)))

    def check(self, n_agents: int) -> None:
        if self.full | self.partial | self.oblivious != frozenset(range(n_agents)):
            raise ActionError("observability frame does not partition the agents")

    def class_of(self, agent: int) -> str:
        if agent in self.full:
            return "full"
        if agent in self.partial:
            return "partial"
        return "oblivious"


@dataclass(frozen=True)
class Action:
    name: str
    kind: str
    frame: ObservabilityFrame
    precondition: Formula = TRUE
    effects: tuple[Lit, ...] = ()
    sensed: int | None = None
    content: Formula | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ActionError(f"unknown action kind {self.kind!r}")
        object.__setattr__(self, "effects", tuple(self.effects))
        if self.kind == ONTIC:
            pos = {e.fluent for e in self.effects if e.positive}
            neg = {e.fluent for e in self.effects if not e.positive}
            if pos & neg:
                raise ActionError(f"{self.name}: inconsistent effects on fluents {sorted(pos & neg)}")
        elif self.kind == SENSING:
            if self.sensed is None:
                raise ActionError(f"{self.name}: sensing action without a sensed fluent")
        elif self.content is None or not is_fluent_formula(self.content):
            raise ActionError(f"{self.name}: announcements carry a fluent formula")


@dataclass(frozen=True)
class SearchNode:
    state: PointedKripke
    plan_prefix: tuple[str, ...] = ()
    depth: int = field(default=0)

    def __post_init__(self):
        if self.depth != len(self.plan_prefix):
            raise ValueError("depth must equal the plan prefix length")

    def child(self, action: Action, state: PointedKripke) -> "SearchNode":
        return SearchNode(state, self.plan_prefix + (action.name,), self.depth + 1)


def executable(state: PointedKripke, action: Action) -> bool:
    if not entails(state, action.precondition):
        return False
    if action.kind == ANNOUNCEMENT:
        return entails(state, action.content)
    return True


def _outcomes(state: PointedKripke, action: Action) -> list[bool] | None:
    if action.kind == SENSING:
        f = action.sensed
        return [bool(w.valuation >> f & 1) for w in state.worlds]
    if action.kind == ANNOUNCEMENT:
        return truth_set(state, action.content)
    return None


def _apply_effects(valuation: int, effects: tuple[Lit, ...]) -> int:
    for e in effects:
        if e.positive:
            valuation |= 1 << e.fluent
        else:
            valuation &= ~(1 << e.fluent)
    return valuation


def apply(state: PointedKripke, action: Action, *, check: bool = True) -> PointedKripke:
    """Execute ``action`` and return the reduced successor state."""
    if check and not executable(state, action):
        raise ActionError(f"action {action.name} is not executable")
    n = len(state.worlds)
    old_vals = [w.valuation for w in state.worlds]
    if action.kind == ONTIC:
        new_vals = [_apply_effects(v, action.effects) for v in old_vals]
    else:
        new_vals = list(old_vals)
    outcome = _outcomes(state, action)
    frame = action.frame
    edges = []
    for i, rel in enumerate(state.relations):
        agent_edges = []
        for w, succ in enumerate(rel):
            for v in succ:
                # the old structure survives verbatim at offset n
                agent_edges.append((n + w, n + v))
                if i in frame.full:
                    if outcome is None or outcome[w] == outcome[v]:
                        agent_edges.append((w, v))
                elif i in frame.partial:
                    agent_edges.append((w, v))
                else:
                    agent_edges.append((w, n + v))
        edges.append(agent_edges)
    raw = PointedKripke.build(new_vals + old_vals, edges, state.pointed)
    return bisim_reduce(raw)


def successors(state: PointedKripke, problem) -> list[tuple[Action, PointedKripke]]:
    """Executable actions with their successor states, in declaration order."""
    return [
        (a, apply(state, a, check=False)) for a in problem.actions if executable(state, a)
    ]
