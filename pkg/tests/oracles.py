"""Independent reference implementations used as test oracles.

Nothing here imports the checker, the update or the search code under test;
only the plain data classes are shared.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

from epiplan.logic import (
    And,
    Believes,
    Common,
    Implies,
    Lit,
    Not,
    Or,
    PointedKripke,
    Top,
)

# --------------------------------------------------------------------------
# naive model checker
# --------------------------------------------------------------------------


class NaiveChecker:
    """Recursive evaluation over explicit successor sets of one structure."""

    def __init__(self, state: PointedKripke):
        self.state = state
        self.succ = [
            [set() for _ in state.worlds] for _ in range(state.n_agents)
        ]
        for i in range(state.n_agents):
            for u, v in state.edges(i):
                self.succ[i][u].add(v)
        self.trues = [set(w.true_fluents()) for w in state.worlds]

    def closure(self, agents, w: int) -> set[int]:
        """Worlds reachable from w in one or more steps (explicit fixpoint)."""
        reached: set[int] = set()
        for a in agents:
            reached |= self.succ[a][w]
        while True:
            more = set(reached)
            for u in reached:
                for a in agents:
                    more |= self.succ[a][u]
            if more == reached:
                return reached
            reached = more

    def holds(self, w: int, phi) -> bool:
        if isinstance(phi, Top):
            return True
        if isinstance(phi, Lit):
            return (phi.fluent in self.trues[w]) == phi.positive
        if isinstance(phi, Not):
            return not self.holds(w, phi.sub)
        if isinstance(phi, And):
            return self.holds(w, phi.left) and self.holds(w, phi.right)
        if isinstance(phi, Or):
            return self.holds(w, phi.left) or self.holds(w, phi.right)
        if isinstance(phi, Implies):
            return (not self.holds(w, phi.left)) or self.holds(w, phi.right)
        if isinstance(phi, Believes):
            return all(self.holds(v, phi.sub) for v in self.succ[phi.agent][w])
        if isinstance(phi, Common):
            return all(self.holds(v, phi.sub) for v in self.closure(phi.agents, w))
        raise TypeError(phi)

    def entails(self, phi) -> bool:
        return self.holds(self.state.pointed, phi)


def holds(state: PointedKripke, w: int, phi) -> bool:
    return NaiveChecker(state).holds(w, phi)


def naive_entails(state: PointedKripke, phi) -> bool:
    return NaiveChecker(state).entails(phi)


# --------------------------------------------------------------------------
# structure and formula generators
# --------------------------------------------------------------------------


def all_relations(n: int):
    pairs = [(u, v) for u in range(n) for v in range(n)]
    for mask in range(1 << len(pairs)):
        yield [p for k, p in enumerate(pairs) if mask >> k & 1]


def all_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1 :]
        yield [[first]] + part


def partition_relation(blocks):
    return [(u, v) for b in blocks for u in b for v in b]


def exhaustive_structures(every_pointed: bool = True):
    """The exhaustive structure suite (at most 4 worlds, at most 2 agents).

    * 1-2 worlds, 2 agents, 1 fluent: every valuation, relation and pointed world;
    * 3 worlds, 1 agent, 1 fluent: every valuation, relation and pointed world;
    * 4 worlds, 2 agents, 1 fluent: every valuation, every pair of
      equivalence relations, every pointed world.

    With ``every_pointed=False`` each frame comes once, pointed at world 0;
    callers then check every world themselves.
    """

    def pointings(n):
        return range(n) if every_pointed else range(1)

    for n in (1, 2):
        for vals in itertools.product(range(2), repeat=n):
            for ra in all_relations(n):
                for rb in all_relations(n):
                    for p in pointings(n):
                        yield PointedKripke.build(list(vals), [ra, rb], p)
    for vals in itertools.product(range(2), repeat=3):
        for ra in all_relations(3):
            for p in pointings(3):
                yield PointedKripke.build(list(vals), [ra], p)
    parts = [partition_relation(b) for b in all_partitions(range(4))]
    for vals in itertools.product(range(2), repeat=4):
        for ra in parts:
            for rb in parts:
                for p in pointings(4):
                    yield PointedKripke.build(list(vals), [ra, rb], p)


def formula_suite(n_agents: int, n_fluents: int, seed: int = 0, sampled: int = 40):
    """Every formula of modal depth <= 1 over one modal operator, plus a
    seeded sample of deeper formulas up to depth 3."""
    atoms = [Top()] + [Lit(f, s) for f in range(n_fluents) for s in (True, False)]
    groups = [frozenset([a]) for a in range(n_agents)]
    if n_agents > 1:
        groups.append(frozenset(range(n_agents)))
    ops = [lambda x, a=a: Believes(a, x) for a in range(n_agents)]
    ops += [lambda x, g=g: Common(g, x) for g in groups]
    depth1 = [op(x) for op in ops for x in atoms]
    out = list(atoms) + depth1 + [Not(x) for x in depth1]
    rng = random.Random(seed)
    for _ in range(sampled):
        out.append(random_formula(rng, n_agents, n_fluents, 3))
    return out


def random_formula(rng: random.Random, n_agents: int, n_fluents: int, depth: int):
    """Random formula with modal depth at most ``depth``."""
    roll = rng.random()
    if depth == 0 or roll < 0.15:
        return Lit(rng.randrange(n_fluents), rng.random() < 0.5)
    if roll < 0.3:
        return Not(random_formula(rng, n_agents, n_fluents, depth))
    if roll < 0.5:
        cls = rng.choice([And, Or, Implies])
        return cls(
            random_formula(rng, n_agents, n_fluents, depth),
            random_formula(rng, n_agents, n_fluents, depth),
        )
    if roll < 0.8:
        return Believes(rng.randrange(n_agents), random_formula(rng, n_agents, n_fluents, depth - 1))
    group = frozenset(a for a in range(n_agents) if rng.random() < 0.6) or frozenset([0])
    return Common(group, random_formula(rng, n_agents, n_fluents, depth - 1))


def random_structure(rng: random.Random, n_worlds: int, n_agents: int, n_fluents: int,
                     density: float = 0.4) -> PointedKripke:
    vals = [rng.randrange(1 << n_fluents) for _ in range(n_worlds)]
    rels = [
        [(u, v) for u in range(n_worlds) for v in range(n_worlds) if rng.random() < density]
        for _ in range(n_agents)
    ]
    return PointedKripke.build(vals, rels, rng.randrange(n_worlds))


# --------------------------------------------------------------------------
# isomorphism check for small structures
# --------------------------------------------------------------------------


def isomorphic(a: PointedKripke, b: PointedKripke) -> bool:
    """Brute-force pointed isomorphism (worlds compared by valuation)."""
    n = len(a.worlds)
    if n != len(b.worlds) or a.n_agents != b.n_agents:
        return False
    ea = [set(a.edges(i)) for i in range(a.n_agents)]
    eb = [set(b.edges(i)) for i in range(b.n_agents)]
    for perm in itertools.permutations(range(n)):
        if perm[a.pointed] != b.pointed:
            continue
        if any(a.worlds[w].valuation != b.worlds[perm[w]].valuation for w in range(n)):
            continue
        if all({(perm[u], perm[v]) for u, v in ea[i]} == eb[i] for i in range(a.n_agents)):
            return True
    return False


# --------------------------------------------------------------------------
# naive event-model product (no pruning, no reduction)
# --------------------------------------------------------------------------


def naive_update(state: PointedKripke, action) -> PointedKripke:
    """Direct transcription of the update definition, world pairs as keys."""
    n = len(state.worlds)

    checker = NaiveChecker(state)

    def outcome(w):
        if action.kind == "sensing":
            return action.sensed in state.worlds[w].true_fluents()
        if action.kind == "announcement":
            return checker.holds(w, action.content)
        return None

    def updated(val):
        for e in action.effects:
            val = val | (1 << e.fluent) if e.positive else val & ~(1 << e.fluent)
        return val

    keys = [("new", w) for w in range(n)] + [("old", w) for w in range(n)]
    index = {k: i for i, k in enumerate(keys)}
    vals = [updated(state.worlds[w].valuation) for w in range(n)] + [state.worlds[w].valuation for w in range(n)]
    rels = []
    for i in range(state.n_agents):
        cls = "full" if i in action.frame.full else "partial" if i in action.frame.partial else "oblivious"
        edges = []
        for u, v in state.edges(i):
            edges.append((index[("old", u)], index[("old", v)]))
            if cls == "full" and outcome(u) == outcome(v):
                edges.append((index[("new", u)], index[("new", v)]))
            elif cls == "partial":
                edges.append((index[("new", u)], index[("new", v)]))
            elif cls == "oblivious":
                edges.append((index[("new", u)], index[("old", v)]))
        rels.append(edges)
    return PointedKripke.build(vals, rels, index[("new", state.pointed)])


def naive_executable(state: PointedKripke, action) -> bool:
    if not naive_entails(state, action.precondition):
        return False
    if action.kind == "announcement":
        return naive_entails(state, action.content)
    return True


# --------------------------------------------------------------------------
# brute-force search oracles
# --------------------------------------------------------------------------


def shortest_plan_length(problem, init: PointedKripke, max_len: int, goal_check, step):
    """Breadth enumeration of action sequences without duplicate pruning.

    ``step(state, action)`` returns the successor or None when the action
    is not executable.  Returns the first length at which some sequence
    reaches the goal, or None.
    """
    frontier = [init]
    if goal_check(init):
        return 0
    for length in range(1, max_len + 1):
        nxt = []
        for s in frontier:
            for a in problem.actions:
                t = step(s, a)
                if t is None:
                    continue
                if goal_check(t):
                    return length
                nxt.append(t)
        frontier = nxt
    return None


def distances_to_goals(nodes, edges, goals):
    """Reverse BFS on an explicit graph: {node: distance or None}."""
    preds = {n: [] for n in nodes}
    for u, vs in edges.items():
        for v in vs:
            preds[v].append(u)
    dist = {g: 0 for g in goals}
    q = deque(goals)
    while q:
        x = q.popleft()
        for p in preds[x]:
            if p not in dist:
                dist[p] = dist[x] + 1
                q.append(p)
    return {n: dist.get(n) for n in nodes}


def explicit_state_space(problem, init: PointedKripke, step, reduce):
    """All reachable states, deduplicated by brute-force isomorphism.

    ``reduce`` turns an update result into the representative kept for the
    isomorphism check.  Returns (states, edges by index).
    """
    states = [reduce(init)]
    edges: dict[int, set[int]] = {}
    queue = deque([0])
    while queue:
        k = queue.popleft()
        out = edges.setdefault(k, set())
        for a in problem.actions:
            t = step(states[k], a)
            if t is None:
                continue
            t = reduce(t)
            for j, s in enumerate(states):
                if sorted(s.valuations) == sorted(t.valuations) and isomorphic(s, t):
                    break
            else:
                j = len(states)
                states.append(t)
                queue.append(j)
            out.add(j)
    return states, edges


# --------------------------------------------------------------------------
# scalar reference forward pass (eval mode, plain Python floats)
# --------------------------------------------------------------------------


def _dense(p, name, v):
    W, b = p[f"{name}.W"].tolist(), p[f"{name}.b"].tolist()
    return [sum(w * x for w, x in zip(row, v)) + bias for row, bias in zip(W, b)]


def _relu(v):
    return [max(0.0, x) for x in v]


def reference_predict(model, nodes, edges, label_count, max_id=2**48 - 1):
    """One graph through the regressor with explicit loops over nodes and edges."""
    import math

    p, hp, prep = model.params, model.hyper, model.prep
    h = [_dense(p, "id.1", _relu(_dense(p, "id.0", [nid / max_id]))) for nid in nodes]
    e = [_dense(p, "edge.1", _relu(_dense(p, "edge.0", [lab / max(label_count - 1, 1)])))
         for _, _, lab in edges]
    for layer in ("gine1", "gine2"):
        proj = [_dense(p, f"{layer}.proj", x) for x in e]
        agg = [[0.0] * len(h[0]) for _ in h]
        for (s, d, _), pe in zip(edges, proj):
            msg = _relu([a + b for a, b in zip(h[s], pe)])
            agg[d] = [a + m for a, m in zip(agg[d], msg)]
        pre = [[(1 + hp.gine_eps) * a + b for a, b in zip(hv, av)] for hv, av in zip(h, agg)]
        h = [_relu(_dense(p, f"{layer}.mlp.1", _relu(_dense(p, f"{layer}.mlp.0", x)))) for x in pre]
    pooled = [sum(col) / len(h) for col in zip(*h)]
    t = _relu(_dense(p, "head.in", pooled))

    def bn(v, name):
        mean, var = model.buffers[f"{name}.mean"].tolist(), model.buffers[f"{name}.var"].tolist()
        gamma, beta = p[f"{name}.gamma"].tolist(), p[f"{name}.beta"].tolist()
        return [g * (x - m) / math.sqrt(s + hp.bn_eps) + b for x, m, s, g, b in zip(v, mean, var, gamma, beta)]

    for k in range(model.widths.blocks):
        v = _relu(bn(_dense(p, f"block{k}.fc1", t), f"block{k}.bn1"))
        v = bn(_dense(p, f"block{k}.fc2", v), f"block{k}.bn2")
        t = _relu([a + b for a, b in zip(v, t)])
    z = _dense(p, "head.out", t)[0]
    sig = 1.0 / (1.0 + math.exp(-z))
    return min(max(sig, prep.min_val), prep.max_val)


def iterative_trim(counts: dict[int, int], p_max: float) -> dict[int, int]:
    """Shave one sample at a time off the largest bin until it fits the cap."""
    counts = dict(counts)
    while max(counts.values()) > p_max * sum(counts.values()):
        big = max(counts, key=lambda k: (counts[k], -k))
        counts[big] -= 1
    return counts
