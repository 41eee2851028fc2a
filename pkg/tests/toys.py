"""Small fully observable domains with hand-checkable state spaces."""

from epiplan.actions import ONTIC, Action, ObservabilityFrame
from epiplan.logic import Common, EpistemicProblem, Lit, conj

PUBLIC = ObservabilityFrame.public(1)


def lights(goal_on=(0, 1, 2), n=3):
    """n switches that can be flipped either way; 2**n fully known states."""
    acts = []
    for i in range(n):
        acts.append(Action(f"on{i}", ONTIC, PUBLIC, Lit(i, False), (Lit(i),)))
        acts.append(Action(f"off{i}", ONTIC, PUBLIC, Lit(i), (Lit(i, False),)))
    init = tuple(Common({0}, Lit(i, False)) for i in range(n))
    goal = tuple(Lit(i) for i in goal_on)
    return EpistemicProblem(tuple(f"l{i}" for i in range(n)), ("a",), tuple(acts), init, goal, "lights")


def binary_tree(depth=3, target=(1, 0, 1)):
    """Each level picks a bit; the only goal is one leaf."""
    fluents = [f"d{k}" for k in range(depth)] + [f"b{k}" for k in range(depth)]
    acts = []
    for k in range(depth):
        for v in (0, 1):
            pre = [Lit(k, False)] + ([Lit(k - 1)] if k else [])
            eff = (Lit(k), Lit(depth + k, bool(v)))
            acts.append(Action(f"go{k}_{v}", ONTIC, PUBLIC, conj(pre), eff))
    init = tuple(Common({0}, Lit(i, False)) for i in range(len(fluents)))
    goal = (Lit(depth - 1),) + tuple(Lit(depth + k, bool(v)) for k, v in enumerate(target))
    return EpistemicProblem(tuple(fluents), ("a",), tuple(acts), init, goal, "tree")
