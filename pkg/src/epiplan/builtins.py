"""Desk-scale generators for the Coin-in-the-Box and Selective-Communication
benchmark families.

Observability that depends on the physical state (who is looking, who is in
earshot) is compiled into static frames: one action variant per observer
set, each guarded by a precondition that pins down exactly that set.  At
most one variant of a family is executable in any state.
"""

from __future__ import annotations

from itertools import combinations

from .actions import ANNOUNCEMENT, ONTIC, SENSING, Action, ObservabilityFrame
from .logic import (
    And,
    Believes,
    Common,
    EpistemicProblem,
    Formula,
    Lit,
    Not,
    Or,
    conj,
)

AGENT_NAMES = "abcdefghij"


class BuiltinError(ValueError):
    pass


def _knows_whether(agent: int, f: int) -> Formula:
    return Or(Believes(agent, Lit(f)), Believes(agent, Lit(f, False)))


def _ignorant(agent: int, f: int) -> Formula:
    return And(Not(Believes(agent, Lit(f))), Not(Believes(agent, Lit(f, False))))


def _disj(formulas) -> Formula:
    formulas = list(formulas)
    out = formulas[0]
    for f in formulas[1:]:
        out = Or(out, f)
    return out


def _subsets(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from combinations(items, k)


# --------------------------------------------------------------------------
# Coin in the box
# --------------------------------------------------------------------------

COINBOX_TIERS = (2, 3, 4, 5, 6, 7)


def _coinbox_goal(tier: int, F: dict, n: int) -> list[Formula]:
    a, b, c = 0, 1, 2
    heads = F["heads"]
    kw = _knows_whether
    if tier == 2:
        return [Believes(a, Lit(heads))]
    if tier == 3:
        # a learns the coin without b noticing that it happened
        return [Believes(a, Lit(heads)), Not(Believes(b, kw(a, heads)))]
    if tier == 4:
        return [Believes(c, Lit(heads)), Not(Believes(b, kw(c, heads)))]
    if tier == 5:
        return [
            Believes(c, Lit(heads)),
            _ignorant(b, heads),
            Not(Believes(b, kw(c, heads))),
            Lit(F["looking_b"]),
        ]
    if tier in (6, 7):
        # b and c both learn the coin while nobody learns that c did
        goal = [
            Believes(b, Lit(heads)),
            Believes(c, Lit(heads)),
            Not(Believes(b, kw(c, heads))),
            Not(Believes(c, kw(b, heads))),
            Not(Believes(a, kw(c, heads))),
        ]
        if tier == 7:
            goal.append(Lit(F["looking_b"]))
        return goal
    raise BuiltinError(f"coinbox has no tier {tier}; choose from {COINBOX_TIERS}")


def coinbox(agents: int = 3, tier: int = 2) -> EpistemicProblem:
    """Coin in the box: a locked box, a key holder, and watchers.

    Agent ``a`` holds the key; ``a`` and ``b`` are looking at the box, the
    others are not.  The coin shows heads and nobody knows it.  Peeking is
    seen (but not its result) by whoever else is looking; opening, calling
    someone's attention, distracting someone and telling are public.
    """
    n = int(agents)
    if n < 3 or n > len(AGENT_NAMES):
        raise BuiltinError("coinbox needs between 3 and 10 agents")
    tier = int(tier)
    names = tuple(AGENT_NAMES[:n])
    fluents = ["opened", "heads"]
    fluents += [f"has_key_{x}" for x in names]
    fluents += [f"looking_{x}" for x in names]
    F = {f: i for i, f in enumerate(fluents)}
    everyone = frozenset(range(n))
    actions = []
    for i, x in enumerate(names):
        actions.append(Action(
            f"open_{x}", ONTIC, ObservabilityFrame.public(n),
            And(Lit(F[f"has_key_{x}"]), Lit(F["opened"], False)),
            (Lit(F["opened"]),),
        ))
    for i, x in enumerate(names):
        others = [j for j in range(n) if j != i]
        for watchers in _subsets(others):
            looking = [Lit(F[f"looking_{names[j]}"], j in watchers) for j in others]
            pre = conj([Lit(F["opened"]), Lit(F[f"looking_{x}"])] + looking)
            tag = "".join(names[j] for j in watchers) or "none"
            actions.append(Action(
                f"peek_{x}_seen_by_{tag}", SENSING,
                ObservabilityFrame.make(n, [i], watchers), pre, sensed=F["heads"],
            ))
    for i, x in enumerate(names):
        for pos, word in ((True, "heads"), (False, "tails")):
            actions.append(Action(
                f"tell_{word}_{x}", ANNOUNCEMENT, ObservabilityFrame.public(n),
                Believes(i, Lit(F["heads"], pos)), content=Lit(F["heads"], pos),
            ))
    for x in names:
        actions.append(Action(
            f"call_{x}", ONTIC, ObservabilityFrame.public(n),
            Lit(F[f"looking_{x}"], False), (Lit(F[f"looking_{x}"]),),
        ))
        actions.append(Action(
            f"distract_{x}", ONTIC, ObservabilityFrame.public(n),
            Lit(F[f"looking_{x}"]), (Lit(F[f"looking_{x}"], False),),
        ))

    initial: list[Formula] = [Lit(F["heads"])]
    ck = []
    ck.append(Lit(F["opened"], False))
    for i, x in enumerate(names):
        ck.append(Lit(F[f"has_key_{x}"], i == 0))
        ck.append(Lit(F[f"looking_{x}"], i in (0, 1)))
    initial += [Common(everyone, f) for f in ck]
    initial += [Common(everyone, _ignorant(i, F["heads"])) for i in range(n)]
    return EpistemicProblem(
        tuple(fluents), names, tuple(actions), tuple(initial),
        tuple(_coinbox_goal(tier, F, n)), f"coinbox_a{n}_pl{tier}",
    )


# --------------------------------------------------------------------------
# Selective communication
# --------------------------------------------------------------------------

SELECTIVE_TIERS = (1, 2, 3, 4)


def selective(agents: int = 2, rooms: int = 2, tier: int = 1) -> EpistemicProblem:
    """Selective communication along a corridor of rooms.

    Agent ``a`` knows the secret ``q``; everyone starts in room 0 except the
    last agent, who starts at the far end.  A broadcast is heard by the
    agents in the speaker's room and the adjacent ones; the others are
    oblivious.  Moves are public.
    """
    n, k, tier = int(agents), int(rooms), int(tier)
    if n < 2 or n > len(AGENT_NAMES):
        raise BuiltinError("selective needs between 2 and 10 agents")
    if k < 2:
        raise BuiltinError("selective needs at least 2 rooms")
    if tier not in SELECTIVE_TIERS:
        raise BuiltinError(f"selective has no tier {tier}; choose from {SELECTIVE_TIERS}")
    names = tuple(AGENT_NAMES[:n])
    fluents = ["q"] + [f"at_{x}_{r}" for x in names for r in range(k)]
    F = {f: i for i, f in enumerate(fluents)}
    everyone = frozenset(range(n))

    def at(i, r):
        return Lit(F[f"at_{names[i]}_{r}"])

    actions = []
    for i, x in enumerate(names):
        for r in range(k):
            for r2 in (r - 1, r + 1):
                if 0 <= r2 < k:
                    actions.append(Action(
                        f"move_{x}_{r}_{r2}", ONTIC, ObservabilityFrame.public(n), at(i, r),
                        (Lit(F[f"at_{x}_{r}"], False), Lit(F[f"at_{x}_{r2}"])),
                    ))
    for i, x in enumerate(names):
        others = [j for j in range(n) if j != i]
        for r in range(k):
            near = [r2 for r2 in (r - 1, r, r + 1) if 0 <= r2 < k]
            for hearers in _subsets(others):
                in_range = [
                    _disj(at(j, r2) for r2 in near) if j in hearers
                    else Not(_disj(at(j, r2) for r2 in near))
                    for j in others
                ]
                pre = conj([at(i, r), Believes(i, Lit(F["q"]))] + in_range)
                tag = "".join(names[j] for j in hearers) or "none"
                actions.append(Action(
                    f"broadcast_{x}_{r}_to_{tag}", ANNOUNCEMENT,
                    ObservabilityFrame.make(n, [i, *hearers]), pre, content=Lit(F["q"]),
                ))

    start = [0] * n
    start[-1] = k - 1
    ck: list[Formula] = []
    for i in range(n):
        for r in range(k):
            ck.append(at(i, r) if start[i] == r else Lit(F[f"at_{names[i]}_{r}"], False))
    initial: list[Formula] = [Lit(F["q"])]
    initial += [Common(everyone, f) for f in ck]
    initial.append(Common(everyone, _knows_whether(0, F["q"])))
    initial += [Common(everyone, _ignorant(i, F["q"])) for i in range(1, n)]

    last = n - 1
    q = Lit(F["q"])
    goal: list[Formula]
    if tier == 1:
        goal = [Believes(1, q)]
    elif tier == 2:
        goal = [Believes(last, q)]
    elif tier == 3:
        goal = [Believes(last, q), Believes(0, Believes(last, q))]
        if n > 2:
            goal.append(Not(Believes(1, q)))
    else:
        goal = [Believes(last, q), at(0, 0), Believes(last, Believes(0, q))]
        if n > 2:
            goal.append(Not(Believes(1, Believes(last, q))))
    return EpistemicProblem(
        tuple(fluents), names, tuple(actions), tuple(initial), tuple(goal),
        f"selective_a{n}_r{k}_t{tier}",
    )


BUILTINS = {"coinbox": coinbox, "selective": selective}


def builtin_problem(name: str, params: dict | None = None) -> EpistemicProblem:
    params = dict(params or {})
    if name not in BUILTINS:
        raise BuiltinError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
    try:
        return BUILTINS[name](**params)
    except TypeError as exc:
        raise BuiltinError(f"invalid parameters for {name}: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, BuiltinError):
            raise
        raise BuiltinError(f"invalid parameters for {name}: {exc}") from None


def parse_problem_ref(ref: str) -> tuple[str, dict]:
    """``builtin:coinbox?tier=5&agents=3`` -> ("coinbox", {"tier": "5", ...})."""
    from urllib.parse import parse_qsl

    body = ref[len("builtin:"):] if ref.startswith("builtin:") else ref
    name, _, query = body.partition("?")
    return name, dict(parse_qsl(query))
