"""Textual problem format (``.epd``): tokenizer, parser, serializer.

A problem file is a sequence of ``;``-terminated statements::

    problem coin;                      # optional name
    fluent opened, heads;
    agent a, b;
    action open_a {
        type ontic;
        effect opened;
        pre and(has_key_a, -opened);
        obs full=[a, b];
    }
    initially heads;
    initially C([a, b], -opened);
    goal B(a, heads);

Formulas are written in prefix form: ``f``, ``-f``, ``true``, ``not(x)``,
``and(x, y, ...)``, ``or(x, y, ...)``, ``imp(x, y)``, ``B(agent, x)`` and
``C([agents], x)``.  N-ary ``and``/``or`` fold to the left.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from pathlib import Path

from .actions import ANNOUNCEMENT, KINDS, ONTIC, SENSING, Action, ActionError, ObservabilityFrame
from .logic import (
    TRUE,
    And,
    Believes,
    Common,
    EpistemicProblem,
    Formula,
    Implies,
    Lit,
    Not,
    Or,
    PointedKripke,
    Top,
    bisim_reduce,
    eval_fluent_formula,
    formula_fluents,
    is_fluent_formula,
    truth_set,
)

KEYWORDS = {"true", "not", "and", "or", "imp", "B", "C"}


@dataclass(frozen=True)
class DomainSource:
    text: str
    origin: str = "<string>"

    @classmethod
    def from_path(cls, path) -> "DomainSource":
        p = Path(path)
        return cls(p.read_text(encoding="utf-8"), str(p))


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span | None = None

    def format(self, origin: str = "") -> str:
        where = f"{origin}:{self.span}" if self.span else origin
        return f"{where}: {self.severity}: {self.message}"


class DomainError(Exception):
    """Raised when a source has error diagnostics; carries all of them."""

    def __init__(self, diagnostics: list[Diagnostic], origin: str = ""):
        self.diagnostics = diagnostics
        self.origin = origin
        errors = [d for d in diagnostics if d.severity == "error"]
        super().__init__("\n".join(d.format(origin) for d in errors))


class InitialStateError(ValueError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[{}()\[\],;=\-])"
)


@dataclass
class Token:
    kind: str  # ident | punct | eof
    value: str
    span: Span


class _SyntaxError(Exception):
    def __init__(self, message, span):
        super().__init__(message)
        self.span = span


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _SyntaxError(f"unexpected character {text[pos]!r}", Span(line, col, line, col + 1))
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("ident", "punct"):
                tokens.append(Token(kind, value, Span(line, col, line, col + len(value))))
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, col, line, col)))
    return tokens


# --------------------------------------------------------------------------
# Parser (names unresolved, spans attached)
# --------------------------------------------------------------------------


@dataclass
class _Raw:
    kind: str
    span: Span
    args: tuple


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value: str) -> Token:
        t = self.cur
        if t.value != value or t.kind == "eof":
            got = "end of input" if t.kind == "eof" else repr(t.value)
            raise _SyntaxError(f"expected {value!r}, got {got}", t.span)
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        t = self.cur
        if t.kind != "ident":
            got = "end of input" if t.kind == "eof" else repr(t.value)
            raise _SyntaxError(f"expected {what}, got {got}", t.span)
        return self.next()

    def name_list(self) -> list[Token]:
        if self.cur.value == "[":
            self.next()
            names = []
            if self.cur.value != "]":
                names.append(self.ident("agent name"))
                while self.cur.value == ",":
                    self.next()
                    names.append(self.ident("agent name"))
            self.expect("]")
            return names
        names = [self.ident("agent name")]
        while self.cur.value == "," and self.toks[self.i + 1].kind == "ident":
            self.next()
            names.append(self.ident("agent name"))
        return names

    def literal(self) -> _Raw:
        start = self.cur.span
        positive = True
        if self.cur.value == "-":
            self.next()
            positive = False
        name = self.ident("fluent name")
        if name.value in KEYWORDS:
            raise _SyntaxError(f"{name.value!r} is a reserved word", name.span)
        return _Raw("lit", _join(start, name.span), (name, positive))

    def formula(self) -> _Raw:
        t = self.cur
        if t.value == "-":
            return self.literal()
        if t.kind != "ident":
            got = "end of input" if t.kind == "eof" else repr(t.value)
            raise _SyntaxError(f"expected a formula, got {got}", t.span)
        if t.value == "true":
            self.next()
            return _Raw("true", t.span, ())
        if t.value not in KEYWORDS:
            return self.literal()
        self.next()
        self.expect("(")
        if t.value == "not":
            sub = self.formula()
            end = self.expect(")")
            return _Raw("not", _join(t.span, end.span), (sub,))
        if t.value in ("and", "or"):
            subs = [self.formula()]
            while self.cur.value == ",":
                self.next()
                subs.append(self.formula())
            end = self.expect(")")
            if len(subs) < 2:
                raise _SyntaxError(f"{t.value} needs at least two operands", t.span)
            return _Raw(t.value, _join(t.span, end.span), tuple(subs))
        if t.value == "imp":
            left = self.formula()
            self.expect(",")
            right = self.formula()
            end = self.expect(")")
            return _Raw("imp", _join(t.span, end.span), (left, right))
        if t.value == "B":
            agent = self.ident("agent name")
            self.expect(",")
            sub = self.formula()
            end = self.expect(")")
            return _Raw("B", _join(t.span, end.span), (agent, sub))
        # C
        if self.cur.value != "[":
            raise _SyntaxError("expected '[' starting the agent group", self.cur.span)
        group = self.name_list()
        if not group:
            raise _SyntaxError("common knowledge needs a nonempty agent group", t.span)
        self.expect(",")
        sub = self.formula()
        end = self.expect(")")
        return _Raw("C", _join(t.span, end.span), (tuple(group), sub))

    def action_body(self, name: Token) -> dict:
        body: dict = {"name": name, "span": name.span}
        self.expect("{")
        while self.cur.value != "}":
            kw = self.ident("action clause")
            if kw.value in body:
                raise _SyntaxError(f"duplicate clause {kw.value!r}", kw.span)
            if kw.value == "type":
                kind = self.ident("action type")
                if kind.value not in KINDS:
                    raise _SyntaxError(f"unknown action type {kind.value!r}", kind.span)
                body["type"] = kind
            elif kw.value == "effect":
                lits = [self.literal()]
                while self.cur.value == ",":
                    self.next()
                    lits.append(self.literal())
                body["effect"] = lits
            elif kw.value == "senses":
                body["senses"] = self.ident("fluent name")
            elif kw.value == "announces":
                body["announces"] = self.formula()
            elif kw.value == "pre":
                body["pre"] = self.formula()
            elif kw.value == "obs":
                obs = {}
                while self.cur.value in ("full", "partial"):
                    which = self.next()
                    if which.value in obs:
                        raise _SyntaxError(f"duplicate {which.value!r} list", which.span)
                    self.expect("=")
                    obs[which.value] = self.name_list()
                if not obs:
                    raise _SyntaxError("expected 'full=' or 'partial='", self.cur.span)
                body["obs"] = obs
            else:
                raise _SyntaxError(f"unknown action clause {kw.value!r}", kw.span)
            self.expect(";")
        self.expect("}")
        if "type" not in body:
            raise _SyntaxError(f"action {name.value!r} has no type clause", name.span)
        return body

    def statements(self):
        out = []
        while self.cur.kind != "eof":
            kw = self.ident("statement keyword")
            if kw.value in ("fluent", "agent"):
                names = [self.ident(f"{kw.value} name")]
                while self.cur.value == ",":
                    self.next()
                    names.append(self.ident(f"{kw.value} name"))
                self.expect(";")
                out.extend((kw.value, n) for n in names)
            elif kw.value == "problem":
                out.append(("problem", self.ident("problem name")))
                self.expect(";")
            elif kw.value == "action":
                name = self.ident("action name")
                out.append(("action", self.action_body(name)))
            elif kw.value in ("initially", "goal"):
                out.append((kw.value, self.formula()))
                self.expect(";")
            else:
                raise _SyntaxError(f"unknown statement {kw.value!r}", kw.span)
        return out


def _join(a: Span, b: Span) -> Span:
    return Span(a.line, a.col, b.end_line, b.end_col)


# --------------------------------------------------------------------------
# Resolution
# --------------------------------------------------------------------------


class _Resolver:
    def __init__(self, fluents, agents, diags):
        self.fl = {n: i for i, n in enumerate(fluents)}
        self.ag = {n: i for i, n in enumerate(agents)}
        self.diags = diags

    def fluent(self, tok: Token) -> int | None:
        if tok.value not in self.fl:
            self.diags.append(Diagnostic("error", f"undeclared fluent {tok.value!r}", tok.span))
            return None
        return self.fl[tok.value]

    def agent(self, tok: Token) -> int | None:
        if tok.value not in self.ag:
            self.diags.append(Diagnostic("error", f"undeclared agent {tok.value!r}", tok.span))
            return None
        return self.ag[tok.value]

    def formula(self, raw: _Raw) -> Formula | None:
        k = raw.kind
        if k == "true":
            return TRUE
        if k == "lit":
            name, positive = raw.args
            f = self.fluent(name)
            return None if f is None else Lit(f, positive)
        if k == "not":
            sub = self.formula(raw.args[0])
            return None if sub is None else Not(sub)
        if k in ("and", "or"):
            subs = [self.formula(r) for r in raw.args]
            if any(s is None for s in subs):
                return None
            cls = And if k == "and" else Or
            out = subs[0]
            for s in subs[1:]:
                out = cls(out, s)
            return out
        if k == "imp":
            left, right = (self.formula(r) for r in raw.args)
            return None if left is None or right is None else Implies(left, right)
        if k == "B":
            a = self.agent(raw.args[0])
            sub = self.formula(raw.args[1])
            return None if a is None or sub is None else Believes(a, sub)
        group = [self.agent(t) for t in raw.args[0]]
        sub = self.formula(raw.args[1])
        if sub is None or any(a is None for a in group):
            return None
        return Common(frozenset(group), sub)


def _build_action(body: dict, res: _Resolver, n_agents: int, diags: list) -> Action | None:
    name = body["name"].value
    kind = body["type"].value
    errors_before = len(diags)
    allowed = {ONTIC: "effect", SENSING: "senses", ANNOUNCEMENT: "announces"}
    for clause in ("effect", "senses", "announces"):
        if clause in body and allowed[kind] != clause:
            diags.append(Diagnostic("error", f"{clause!r} is not valid for {kind} action {name!r}", body["span"]))
    if kind != ONTIC and allowed[kind] not in body:
        diags.append(Diagnostic("error", f"{kind} action {name!r} needs a {allowed[kind]!r} clause", body["span"]))
    pre = res.formula(body["pre"]) if "pre" in body else TRUE
    effects = []
    for raw in body.get("effect", ()):
        lit = res.formula(raw)
        if lit is not None:
            effects.append(lit)
    sensed = res.fluent(body["senses"]) if "senses" in body else None
    content = None
    if "announces" in body:
        content = res.formula(body["announces"])
        if content is not None and not is_fluent_formula(content):
            diags.append(Diagnostic("error", "announcements must be fluent formulas", body["announces"].span))
    obs = body.get("obs")
    if obs is None:
        frame = ObservabilityFrame.public(n_agents)
    else:
        full = [res.agent(t) for t in obs.get("full", ())]
        partial = [res.agent(t) for t in obs.get("partial", ())]
        if set(full) & set(partial) - {None}:
            diags.append(Diagnostic("error", f"agent listed as both full and partial in {name!r}", body["span"]))
            return None
        frame = ObservabilityFrame.make(n_agents, [a for a in full if a is not None], [a for a in partial if a is not None])
    if len(diags) > errors_before or pre is None:
        return None
    try:
        return Action(name, kind, frame, pre, tuple(effects), sensed, content)
    except ActionError as exc:
        diags.append(Diagnostic("error", str(exc), body["span"]))
        return None


def check_source(src: DomainSource) -> tuple[EpistemicProblem | None, list[Diagnostic]]:
    """Parse and validate; returns the problem (or None) and all diagnostics."""
    diags: list[Diagnostic] = []
    try:
        stmts = _Parser(tokenize(src.text)).statements()
    except _SyntaxError as exc:
        return None, [Diagnostic("error", str(exc), exc.span)]

    fluents, agents, seen = [], [], {}
    for kind, tok in stmts:
        if kind in ("fluent", "agent"):
            if tok.value in KEYWORDS:
                diags.append(Diagnostic("error", f"{tok.value!r} is a reserved word", tok.span))
            elif tok.value in seen:
                diags.append(Diagnostic("error", f"duplicate declaration of {tok.value!r}", tok.span))
            else:
                seen[tok.value] = kind
                (fluents if kind == "fluent" else agents).append(tok.value)
    if not agents:
        diags.append(Diagnostic("error", "no agents declared", Span(1, 1, 1, 1)))
        return None, diags

    res = _Resolver(fluents, agents, diags)
    name = ""
    actions, initial, goal = [], [], []
    init_spans = []
    action_names = set()
    for kind, item in stmts:
        if kind == "problem":
            name = item.value
        elif kind == "action":
            if item["name"].value in action_names:
                diags.append(Diagnostic("error", f"duplicate action {item['name'].value!r}", item["span"]))
                continue
            action_names.add(item["name"].value)
            act = _build_action(item, res, len(agents), diags)
            if act is not None:
                actions.append(act)
        elif kind in ("initially", "goal"):
            phi = res.formula(item)
            if phi is not None:
                (initial if kind == "initially" else goal).append(phi)
                if kind == "initially":
                    init_spans.append(item.span)

    if any(d.severity == "error" for d in diags):
        return None, diags

    used = set()
    for phi in initial + goal:
        used |= formula_fluents(phi)
    for a in actions:
        used |= formula_fluents(a.precondition)
        used |= {e.fluent for e in a.effects}
        if a.sensed is not None:
            used.add(a.sensed)
        if a.content is not None:
            used |= formula_fluents(a.content)
    for i, f in enumerate(fluents):
        if i not in used:
            diags.append(Diagnostic("warning", f"fluent {f!r} is never used", None))

    problem = EpistemicProblem(tuple(fluents), tuple(agents), tuple(actions), tuple(initial), tuple(goal), name)
    try:
        initial_state(problem)
    except InitialStateError as exc:
        span = init_spans[exc.index] if exc.index is not None else (init_spans[0] if init_spans else None)
        diags.append(Diagnostic("error", f"inconsistent initial formulas: {exc}", span))
        return None, diags
    return problem, diags


def parse_problem(src: DomainSource | str) -> EpistemicProblem:
    if isinstance(src, str):
        src = DomainSource(src)
    problem, diags = check_source(src)
    if problem is None:
        raise DomainError(diags, src.origin)
    return problem


def load_problem(path) -> EpistemicProblem:
    return parse_problem(DomainSource.from_path(path))


# --------------------------------------------------------------------------
# Serializer
# --------------------------------------------------------------------------


def format_formula(phi: Formula, problem: EpistemicProblem) -> str:
    fl, ag = problem.fluents, problem.agents
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Lit):
        return ("" if phi.positive else "-") + fl[phi.fluent]
    if isinstance(phi, Not):
        return f"not({format_formula(phi.sub, problem)})"
    if isinstance(phi, (And, Or, Implies)):
        op = {And: "and", Or: "or", Implies: "imp"}[type(phi)]
        return f"{op}({format_formula(phi.left, problem)}, {format_formula(phi.right, problem)})"
    if isinstance(phi, Believes):
        return f"B({ag[phi.agent]}, {format_formula(phi.sub, problem)})"
    group = ", ".join(ag[a] for a in sorted(phi.agents))
    return f"C([{group}], {format_formula(phi.sub, problem)})"


def serialize_problem(problem: EpistemicProblem) -> str:
    ag = problem.agents
    lines = []
    if problem.name:
        lines.append(f"problem {problem.name};")
    lines += [f"fluent {f};" for f in problem.fluents]
    lines += [f"agent {a};" for a in ag]
    for act in problem.actions:
        lines.append(f"action {act.name} {{")
        lines.append(f"    type {act.kind};")
        if act.kind == ONTIC and act.effects:
            lines.append("    effect " + ", ".join(format_formula(e, problem) for e in act.effects) + ";")
        elif act.kind == SENSING:
            lines.append(f"    senses {problem.fluents[act.sensed]};")
        elif act.kind == ANNOUNCEMENT:
            lines.append(f"    announces {format_formula(act.content, problem)};")
        if not isinstance(act.precondition, Top):
            lines.append(f"    pre {format_formula(act.precondition, problem)};")
        full = ", ".join(ag[a] for a in sorted(act.frame.full))
        partial = ", ".join(ag[a] for a in sorted(act.frame.partial))
        lines.append(f"    obs full=[{full}] partial=[{partial}];")
        lines.append("}")
    lines += [f"initially {format_formula(p, problem)};" for p in problem.initial]
    lines += [f"goal {format_formula(g, problem)};" for g in problem.goal]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Initial state
# --------------------------------------------------------------------------


def _literal_of(phi: Formula) -> tuple[int, bool] | None:
    if isinstance(phi, Lit):
        return phi.fluent, phi.positive
    if isinstance(phi, Not) and isinstance(phi.sub, Lit):
        return phi.sub.fluent, not phi.sub.positive
    return None


def _belief_literal(phi: Formula) -> tuple[int, int, bool] | None:
    """``B_i l`` for a fluent literal ``l`` -> (agent, fluent, polarity)."""
    if isinstance(phi, Believes):
        lit = _literal_of(phi.sub)
        if lit is not None:
            return (phi.agent,) + lit
    return None


def _awareness(body: Formula) -> tuple[str, int, int] | None:
    """Match ``B_i f v B_i -f`` (aware) or ``-B_i f ^ -B_i -f`` (ignorant)."""
    if isinstance(body, Or):
        a, b = _belief_literal(body.left), _belief_literal(body.right)
        if a and b and a[:2] == b[:2] and a[2] != b[2]:
            return "aware", a[0], a[1]
    if isinstance(body, And) and isinstance(body.left, Not) and isinstance(body.right, Not):
        a, b = _belief_literal(body.left.sub), _belief_literal(body.right.sub)
        if a and b and a[:2] == b[:2] and a[2] != b[2]:
            return "ignorant", a[0], a[1]
    return None


def _split_and(phi: Formula) -> list[Formula]:
    if isinstance(phi, And):
        return _split_and(phi.left) + _split_and(phi.right)
    return [phi]


def initial_state(problem: EpistemicProblem) -> PointedKripke:
    """Build the reduced initial structure from the finitary initial fragment.

    Accepted formulas: fluent literals (and conjunctions of them) fixing the
    pointed world; ``C(AG, fluent formula)`` restricting the worlds; and
    ``C(AG, B_i f v B_i -f)`` / ``C(AG, -B_i f ^ -B_i -f)`` stating that
    agent ``i`` knows whether ``f`` holds, or does not.  Agents are ignorant
    of every fluent they are not declared aware of.
    """
    n_agents = len(problem.agents)
    everyone = frozenset(range(n_agents))
    pointed_lits: dict[int, bool] = {}
    constraints: list[Formula] = []
    aware: list[set[int]] = [set() for _ in range(n_agents)]
    ignorant: list[set[int]] = [set() for _ in range(n_agents)]

    for idx, phi in enumerate(problem.initial):
        parts = [_literal_of(p) for p in _split_and(phi)]
        if all(p is not None for p in parts):
            for f, pos in parts:
                if pointed_lits.get(f, pos) != pos:
                    raise InitialStateError("contradictory literals for the real world", idx)
                pointed_lits[f] = pos
            continue
        if not (isinstance(phi, Common) and phi.agents == everyone):
            raise InitialStateError(
                "initial formulas must be literals or common knowledge among all agents", idx
            )
        pending = [phi.sub]
        while pending:
            body = pending.pop()
            if is_fluent_formula(body):
                constraints.append(body)
                continue
            match = _awareness(body)
            if match is None:
                if isinstance(body, And):
                    pending += [body.right, body.left]
                    continue
                raise InitialStateError("unsupported common-knowledge body in initial state", idx)
            kind, agent, f = match
            (aware if kind == "aware" else ignorant)[agent].add(f)
            if f in aware[agent] and f in ignorant[agent]:
                raise InitialStateError(
                    f"agent {problem.agents[agent]} both knows and ignores {problem.fluents[f]}", idx
                )

    constrained = sorted(set().union(*(formula_fluents(c) for c in constraints))) if constraints else []
    free = [f for f in range(len(problem.fluents)) if f not in constrained]
    base = []
    for bits_ in product((0, 1), repeat=len(constrained)):
        m = 0
        for f, b in zip(constrained, bits_):
            m |= b << f
        if all(eval_fluent_formula(m, c) for c in constraints):
            base.append(m)
    valuations = []
    for m in base:
        for bits_ in product((0, 1), repeat=len(free)):
            v = m
            for f, b in zip(free, bits_):
                v |= b << f
            valuations.append(v)
    if not valuations:
        raise InitialStateError("no world satisfies the common-knowledge constraints")

    candidates = [
        k for k, v in enumerate(valuations)
        if all(bool(v >> f & 1) == pos for f, pos in pointed_lits.items())
    ]
    if not candidates:
        raise InitialStateError("the real world contradicts the common-knowledge constraints")
    if len(candidates) > 1:
        raise InitialStateError("the real world is not uniquely determined by the literals")

    edges = []
    for i in range(n_agents):
        keys = {}
        for k, v in enumerate(valuations):
            key = tuple(v >> f & 1 for f in sorted(aware[i]))
            keys.setdefault(key, []).append(k)
        edges.append([(u, w) for cls in keys.values() for u in cls for w in cls])
    state = PointedKripke.build(valuations, edges, candidates[0])
    memo: dict = {}
    for idx, phi in enumerate(problem.initial):
        if not truth_set(state, phi, memo)[state.pointed]:
            raise InitialStateError("initial formulas are unsatisfiable", idx)
    return bisim_reduce(state)
