"""Parser, AST and static checks for the .obd domain description language.

A domain description declares multi-valued state variables, probabilistic
actions, exogenous events, rewarded requirements and an initial state.
Variables that are referenced but never declared are implicitly boolean
with domain (tt, ff). Probabilities are kept as exact rationals so that
row-stochasticity checks downstream do not drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Union


class ObdError(Exception):
    """Base class for errors raised by this package."""


class ParseError(ObdError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class EvaluationError(ObdError):
    """A formula mentions a variable absent from the assignment."""


# ---------------------------------------------------------------------------
# Formula AST


@dataclass(frozen=True)
class Atom:
    var: str
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, BoolLit, Not, And, Or]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def eval_formula(f: Formula, atoms: Mapping[str, str]) -> bool:
    """Standard propositional evaluation with atom membership as base case.

    `atoms` maps every variable the formula mentions to its current value.
    """
    if isinstance(f, Atom):
        if f.var not in atoms:
            raise EvaluationError(f"variable '{f.var}' not assigned")
        return atoms[f.var] == f.value
    if isinstance(f, BoolLit):
        return f.value
    if isinstance(f, Not):
        return not eval_formula(f.operand, atoms)
    if isinstance(f, And):
        return eval_formula(f.left, atoms) and eval_formula(f.right, atoms)
    if isinstance(f, Or):
        return eval_formula(f.left, atoms) or eval_formula(f.right, atoms)
    raise TypeError(f"not a formula node: {f!r}")


def formula_variables(f: Formula) -> set:
    if isinstance(f, Atom):
        return {f.var}
    if isinstance(f, BoolLit):
        return set()
    if isinstance(f, Not):
        return formula_variables(f.operand)
    if isinstance(f, (And, Or)):
        return formula_variables(f.left) | formula_variables(f.right)
    raise TypeError(f"not a formula node: {f!r}")


def format_formula(f: Formula) -> str:
    """Render a formula; inverse of the condition grammar up to parentheses."""

    def render(g: Formula, parent_prec: int) -> str:
        if isinstance(g, Atom):
            return g.var if g.value == "tt" else f"{g.var}={g.value}"
        if isinstance(g, BoolLit):
            return "true" if g.value else "false"
        if isinstance(g, Not):
            return "!" + render(g.operand, 3)
        if isinstance(g, And):
            s = f"{render(g.left, 2)} & {render(g.right, 2)}"
            return f"({s})" if parent_prec > 2 else s
        if isinstance(g, Or):
            s = f"{render(g.left, 1)} || {render(g.right, 1)}"
            return f"({s})" if parent_prec > 1 else s
        raise TypeError(f"not a formula node: {g!r}")

    return render(f, 0)


# ---------------------------------------------------------------------------
# Model AST

BOOL_DOMAIN = ("tt", "ff")


@dataclass(frozen=True)
class VariableDecl:
    name: str
    domain: tuple = BOOL_DOMAIN


@dataclass(frozen=True)
class Effect:
    """One probabilistic outcome of an action/event branch."""

    assignments: tuple  # ((var, value), ...) in source order, vars distinct
    probability: Fraction = Fraction(1)


@dataclass(frozen=True)
class ActionBranch:
    precondition: Formula
    effects: tuple  # of Effect


@dataclass(frozen=True)
class ActionDesc:
    name: str
    branches: tuple  # of ActionBranch
    cost: int = 0


@dataclass(frozen=True)
class EventBranch:
    precondition: Formula
    occurrence_probability: Fraction
    effects: tuple  # of Effect


@dataclass(frozen=True)
class EventDesc:
    name: str
    branches: tuple  # of EventBranch


class ReqKind(str, Enum):
    UA = "UA"
    UM = "UM"
    CA = "CA"
    CM = "CM"
    DEA = "DEA"
    DFA = "DFA"
    DEM = "DEM"
    DFM = "DFM"
    PM = "PM"
    PDEM = "PDEM"
    PDFM = "PDFM"
    RPM = "RPM"
    RPDEM = "RPDEM"
    RPDFM = "RPDFM"

    @property
    def is_achieve(self) -> bool:
        return self.value.endswith("A")

    @property
    def is_conditional(self) -> bool:
        return self not in (ReqKind.UA, ReqKind.UM)

    @property
    def has_deadline(self) -> bool:
        return "D" in self.value

    @property
    def has_duration(self) -> bool:
        return "P" in self.value

    @property
    def is_strict(self) -> bool:
        return self.value.startswith("RP")


@dataclass(frozen=True)
class Requirement:
    name: str
    kind: ReqKind
    required: Formula
    activation: Optional[Formula] = None
    cancellation: Optional[Formula] = None
    deadline: Optional[int] = None
    duration: Optional[int] = None
    reward: int = 0


@dataclass(frozen=True)
class DomainModel:
    variables: tuple  # of VariableDecl, declared then implicit booleans
    actions: tuple  # of ActionDesc
    events: tuple  # of EventDesc
    requirements: tuple  # of Requirement
    initial_state: tuple  # ((var, value), ...) covering every variable

    def variable(self, name: str) -> VariableDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def initial_assignment(self) -> dict:
        return dict(self.initial_state)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "info"
    message: str
    line: Optional[int] = None
    col: Optional[int] = None

    def render(self, filename: str = "<input>") -> str:
        line = self.line if self.line is not None else 0
        col = self.col if self.col is not None else 0
        return f"{filename}:{line}:{col}: {self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = {
    "Variable", "domain", "Action", "Event", "ReqID", "achieve", "maintain",
    "if", "unless", "effects", "occur", "prob", "cost", "reward",
    "reward_once", "after", "within", "for", "Init", "true", "false",
}

_PUNCT = {"{", "}", ",", "=", "<", ">", "!", "&", "(", ")", "/"}


@dataclass(frozen=True)
class Token:
    kind: str  # ID KW NUM PUNCT OR EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KW" if word in KEYWORDS else "ID"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(Token("NUM", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "|":
            if i + 1 < n and text[i + 1] == "|":
                tokens.append(Token("OR", "||", start_line, start_col))
                i += 2
                col += 2
                continue
            raise ParseError("single '|' (use '||')", start_line, start_col)
        if c in _PUNCT:
            tokens.append(Token("PUNCT", c, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", start_line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    # -- token helpers

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def at_kw(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "KW" and tok.text == word

    def at_punct(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.text == text

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            self.error(f"expected '{word}'")
        return self.next()

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            self.error(f"expected '{text}'")
        return self.next()

    def expect_id(self) -> Token:
        tok = self.peek()
        if tok.kind != "ID":
            self.error("expected identifier")
        return self.next()

    def expect_nat(self) -> int:
        tok = self.peek()
        if tok.kind != "NUM" or "." in tok.text:
            self.error("expected non-negative integer")
        self.next()
        return int(tok.text)

    def expect_prob(self) -> Fraction:
        tok = self.peek()
        if tok.kind != "NUM":
            self.error("expected probability")
        self.next()
        value = Fraction(tok.text)
        if self.at_punct("/"):  # exact rational form p/q
            self.next()
            den = self.peek()
            if den.kind != "NUM" or "." in den.text:
                self.error("expected integer denominator")
            self.next()
            if int(den.text) == 0:
                self.error("zero denominator", den)
            value = value / int(den.text)
        if not (0 < value <= 1):
            self.error(f"probability {tok.text} outside (0,1]", tok)
        return value

    # -- conditions

    def parse_condition(self) -> Formula:
        return self._parse_or()

    def _parse_or(self) -> Formula:
        left = self._parse_and()
        while self.peek().kind == "OR":
            self.next()
            left = Or(left, self._parse_and())
        return left

    def _parse_and(self) -> Formula:
        left = self._parse_unary()
        while self.at_punct("&"):
            self.next()
            left = And(left, self._parse_unary())
        return left

    def _parse_unary(self) -> Formula:
        if self.at_punct("!"):
            self.next()
            return Not(self._parse_unary())
        return self._parse_primary()

    def _parse_primary(self) -> Formula:
        if self.at_punct("("):
            self.next()
            inner = self.parse_condition()
            self.expect_punct(")")
            return inner
        if self.at_kw("true"):
            self.next()
            return TRUE
        if self.at_kw("false"):
            self.next()
            return FALSE
        name = self.expect_id()
        if self.at_punct("="):
            self.next()
            value = self.expect_id()
            return Atom(name.text, value.text)
        return Atom(name.text, "tt")  # bare id is boolean shorthand

    # -- effects

    def parse_effect_group(self) -> Effect:
        open_tok = self.expect_punct("<")
        assignments = []
        prob = Fraction(1)
        while True:
            if self.at_kw("prob"):
                self.next()
                prob = self.expect_prob()
                break
            if self.at_punct(">"):
                break
            if self.at_punct("!"):
                self.next()
                var = self.expect_id()
                assignments.append((var.text, "ff"))
                continue
            var = self.expect_id()
            if self.at_punct("="):
                self.next()
                value = self.expect_id()
                assignments.append((var.text, value.text))
            else:
                assignments.append((var.text, "tt"))
        self.expect_punct(">")
        if not assignments:
            self.error("empty effect group", open_tok)
        seen = set()
        for var, _ in assignments:
            if var in seen:
                self.error(f"variable '{var}' assigned twice in one effect", open_tok)
            seen.add(var)
        return Effect(tuple(assignments), prob)

    def parse_effect_groups(self, where: Token) -> tuple:
        effects = []
        while self.at_punct("<"):
            effects.append(self.parse_effect_group())
        if not effects:
            self.error("expected at least one '<...>' effect group")
        total = sum(e.probability for e in effects)
        if total > 1:
            self.error(f"effect probabilities sum to {total} > 1", where)
        return tuple(effects)

    # -- declarations

    def parse_variable(self) -> VariableDecl:
        self.expect_kw("Variable")
        name = self.expect_id()
        domain = BOOL_DOMAIN
        if self.at_kw("domain"):
            self.next()
            self.expect_punct("{")
            values = [self.expect_id().text]
            while self.at_punct(","):
                self.next()
                values.append(self.expect_id().text)
            self.expect_punct("}")
            if len(set(values)) != len(values):
                self.error(f"duplicate value in domain of '{name.text}'", name)
            domain = tuple(values)
        return VariableDecl(name.text, domain)

    def parse_action(self) -> ActionDesc:
        self.expect_kw("Action")
        name = self.expect_id()
        branches = []
        while self.at_kw("if"):
            kw = self.next()
            pre = self.parse_condition()
            self.expect_kw("effects")
            effects = self.parse_effect_groups(kw)
            branches.append(ActionBranch(pre, effects))
        if not branches:
            self.error(f"action '{name.text}' has no 'if ... effects' branch", name)
        cost = 0
        if self.at_kw("cost"):
            self.next()
            cost = self.expect_nat()
        return ActionDesc(name.text, tuple(branches), cost)

    def parse_event(self) -> EventDesc:
        self.expect_kw("Event")
        name = self.expect_id()
        branches = []
        while self.at_kw("if"):
            kw = self.next()
            pre = self.parse_condition()
            occur = Fraction(1)
            if self.at_kw("occur"):
                self.next()
                self.expect_kw("prob")
                occur = self.expect_prob()
            self.expect_kw("effects")
            effects = self.parse_effect_groups(kw)
            branches.append(EventBranch(pre, occur, effects))
        if not branches:
            self.error(f"event '{name.text}' has no 'if ... effects' branch", name)
        return EventDesc(name.text, tuple(branches))

    def parse_requirement(self) -> Requirement:
        self.expect_kw("ReqID")
        name = self.expect_id()
        if self.at_kw("achieve"):
            achieve = True
        elif self.at_kw("maintain"):
            achieve = False
        else:
            self.error("expected 'achieve' or 'maintain'")
        self.next()
        required = self.parse_condition()
        duration = None
        deadline = None
        exact = None
        if self.at_kw("for"):
            self.next()
            duration = self.expect_nat()
            if duration < 1:
                self.error("duration must be positive", name)
        if self.at_kw("after") or self.at_kw("within"):
            exact = self.at_kw("after")
            self.next()
            deadline = self.expect_nat()
            if deadline < 1:
                self.error("deadline must be positive", name)
        activation = None
        cancellation = None
        if self.at_kw("if"):
            self.next()
            activation = self.parse_condition()
            if self.at_kw("unless"):
                self.next()
                cancellation = self.parse_condition()
        reward = 0
        once = False
        if self.at_kw("reward"):
            self.next()
            reward = self.expect_nat()
        elif self.at_kw("reward_once"):
            self.next()
            reward = self.expect_nat()
            once = True
        kind = self._requirement_kind(name, achieve, activation is not None,
                                      duration, deadline, exact, once)
        return Requirement(name.text, kind, required, activation, cancellation,
                           deadline, duration, reward)

    def _requirement_kind(self, name: Token, achieve: bool, conditional: bool,
                          duration, deadline, exact, once) -> ReqKind:
        if (duration is not None or deadline is not None) and not conditional:
            self.error("deadline/duration requirements need an 'if' clause", name)
        if once and duration is None:
            self.error("'reward_once' needs a 'for' duration", name)
        if achieve:
            if duration is not None:
                self.error("'for' duration is only for maintain requirements", name)
            if once:
                self.error("'reward_once' is only for maintain requirements", name)
            if deadline is not None:
                return ReqKind.DEA if exact else ReqKind.DFA
            return ReqKind.CA if conditional else ReqKind.UA
        if duration is not None:
            if deadline is not None:
                if exact:
                    return ReqKind.RPDEM if once else ReqKind.PDEM
                return ReqKind.RPDFM if once else ReqKind.PDFM
            return ReqKind.RPM if once else ReqKind.PM
        if deadline is not None:
            return ReqKind.DEM if exact else ReqKind.DFM
        return ReqKind.CM if conditional else ReqKind.UM

    def parse_init(self) -> list:
        self.expect_kw("Init")
        self.expect_punct("{")
        items = []
        while not self.at_punct("}"):
            if items:
                self.expect_punct(",")
            if self.at_punct("!"):
                self.next()
                var = self.expect_id()
                items.append((var.text, "ff", var))
                continue
            var = self.expect_id()
            if self.at_punct("="):
                self.next()
                value = self.expect_id()
                items.append((var.text, value.text, var))
            else:
                items.append((var.text, "tt", var))
        self.expect_punct("}")
        return items

    # -- whole model

    def parse_model(self) -> DomainModel:
        variables = []
        actions = []
        events = []
        requirements = []
        init_items = None
        init_tok = None
        while self.peek().kind != "EOF":
            tok = self.peek()
            if self.at_kw("Variable"):
                variables.append((self.parse_variable(), tok))
            elif self.at_kw("Action"):
                actions.append((self.parse_action(), tok))
            elif self.at_kw("Event"):
                events.append((self.parse_event(), tok))
            elif self.at_kw("ReqID"):
                requirements.append((self.parse_requirement(), tok))
            elif self.at_kw("Init"):
                if init_items is not None:
                    self.error("duplicate Init block", tok)
                init_tok = tok
                init_items = self.parse_init()
            else:
                self.error("expected Variable, Action, Event, ReqID or Init")
        if init_items is None:
            self.error("missing 'Init { ... }' block", self.peek())
        return self._assemble(variables, actions, events, requirements,
                              init_items, init_tok)

    def _assemble(self, variables, actions, events, requirements,
                  init_items, init_tok) -> DomainModel:
        for items, label in ((variables, "variable"), (actions, "action"),
                             (events, "event"), (requirements, "requirement")):
            seen = {}
            for obj, tok in items:
                if obj.name in seen:
                    self.error(f"duplicate {label} '{obj.name}'", tok)
                seen[obj.name] = obj

        declared = {v.name for v, _ in variables}
        req_names = {r.name for r, _ in requirements}
        for v, tok in variables:
            if v.name in req_names:
                self.error(f"'{v.name}' names both a variable and a requirement", tok)

        # Undeclared variables referenced anywhere become implicit booleans,
        # in order of first reference.
        implicit = []

        def note(var: str):
            if var not in declared and var not in req_names and var not in implicit:
                implicit.append(var)

        def note_formula(f: Optional[Formula]):
            if f is not None:
                for var in sorted(formula_variables(f)):
                    note(var)

        for a, _ in actions:
            for br in a.branches:
                note_formula(br.precondition)
                for eff in br.effects:
                    for var, _v in eff.assignments:
                        note(var)
        for e, _ in events:
            for br in e.branches:
                note_formula(br.precondition)
                for eff in br.effects:
                    for var, _v in eff.assignments:
                        note(var)
        for r, _ in requirements:
            note_formula(r.required)
            note_formula(r.activation)
            note_formula(r.cancellation)
        for var, _value, _tok in init_items:
            note(var)

        all_vars = [v for v, _ in variables] + [VariableDecl(n) for n in implicit]
        domains = {v.name: v.domain for v in all_vars}

        def check_formula(f: Optional[Formula], tok: Token):
            if f is None:
                return
            for g in _walk(f):
                if isinstance(g, Atom):
                    if g.var in req_names:
                        self.error(
                            f"condition references requirement '{g.var}' "
                            "(only state variables are allowed)", tok)
                    if g.value not in domains[g.var]:
                        self.error(
                            f"unknown value '{g.value}' for variable '{g.var}'", tok)

        def check_assignments(assignments, tok: Token):
            for var, value in assignments:
                if value not in domains[var]:
                    self.error(
                        f"unknown value '{value}' for variable '{var}'", tok)

        for a, tok in actions:
            for br in a.branches:
                check_formula(br.precondition, tok)
                for eff in br.effects:
                    check_assignments(eff.assignments, tok)
        for e, tok in events:
            for br in e.branches:
                check_formula(br.precondition, tok)
                for eff in br.effects:
                    check_assignments(eff.assignments, tok)
        for r, tok in requirements:
            check_formula(r.required, tok)
            check_formula(r.activation, tok)
            check_formula(r.cancellation, tok)

        assignment = {}
        for var, value, tok in init_items:
            if var in assignment:
                self.error(f"variable '{var}' assigned twice in Init", tok)
            if value not in domains[var]:
                self.error(f"unknown value '{value}' for variable '{var}'", tok)
            assignment[var] = value
        missing = [v.name for v in all_vars if v.name not in assignment]
        if missing:
            self.error(f"Init does not assign: {', '.join(missing)}", init_tok)

        initial = tuple((v.name, assignment[v.name]) for v in all_vars)
        return DomainModel(tuple(all_vars), tuple(a for a, _ in actions),
                           tuple(e for e, _ in events),
                           tuple(r for r, _ in requirements), initial)


def _walk(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from _walk(f.operand)
    elif isinstance(f, (And, Or)):
        yield from _walk(f.left)
        yield from _walk(f.right)


def parse_domain(text: str) -> DomainModel:
    """Parse a complete .obd domain description.

    Applies all defaults (implicit boolean variables, cost 0, occurrence
    probability 1, reward 0). Raises ParseError with line/column on
    malformed input.
    """
    return _Parser(text).parse_model()


# ---------------------------------------------------------------------------
# Pretty printing (round-trip companion of parse_domain)


def _format_prob(p: Fraction) -> str:
    num, den = p.numerator, p.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:  # finite decimal expansion
        shift = max(twos, fives)
        scaled = num * 10 ** shift // den
        text = str(scaled).rjust(shift + 1, "0")
        if shift == 0:
            return text
        return f"{text[:-shift] or '0'}.{text[-shift:]}"
    return f"{num}/{den}"


def _format_effect(eff: Effect) -> str:
    parts = [f"{var}={value}" for var, value in eff.assignments]
    if eff.probability != 1:
        parts.append(f"prob {_format_prob(eff.probability)}")
    return "<" + " ".join(parts) + ">"


def format_model(model: DomainModel) -> str:
    """Render a DomainModel back to domain-description text.

    Re-parsing the output yields a structurally equal model.
    """
    lines = []
    for v in model.variables:
        if v.domain == BOOL_DOMAIN:
            lines.append(f"Variable {v.name}")
        else:
            lines.append(f"Variable {v.name} domain {{{', '.join(v.domain)}}}")
    for a in model.actions:
        parts = [f"Action {a.name}"]
        for br in a.branches:
            effs = " ".join(_format_effect(e) for e in br.effects)
            parts.append(f"if {format_formula(br.precondition)} effects {effs}")
        if a.cost:
            parts.append(f"cost {a.cost}")
        lines.append(" ".join(parts))
    for e in model.events:
        parts = [f"Event {e.name}"]
        for br in e.branches:
            effs = " ".join(_format_effect(x) for x in br.effects)
            occur = ""
            if br.occurrence_probability != 1:
                occur = f" occur prob {_format_prob(br.occurrence_probability)}"
            parts.append(f"if {format_formula(br.precondition)}{occur} effects {effs}")
        lines.append(" ".join(parts))
    for r in model.requirements:
        parts = [f"ReqID {r.name}"]
        parts.append("achieve" if r.kind.is_achieve else "maintain")
        parts.append(format_formula(r.required))
        if r.duration is not None:
            parts.append(f"for {r.duration}")
        if r.deadline is not None:
            parts.append("after" if "E" in r.kind.value else "within")
            parts.append(str(r.deadline))
        if r.activation is not None:
            parts.append(f"if {format_formula(r.activation)}")
        if r.cancellation is not None:
            parts.append(f"unless {format_formula(r.cancellation)}")
        if r.reward or r.kind.is_strict:
            parts.append("reward_once" if r.kind.is_strict else "reward")
            parts.append(str(r.reward))
        lines.append(" ".join(parts))
    init = ", ".join(f"{var}={value}" for var, value in model.initial_state)
    lines.append(f"Init {{ {init} }}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Static diagnostics


def validate(model: DomainModel) -> list:
    """Static checks on a parsed (or programmatically built) model.

    Returns diagnostics as data; nothing is raised. Precondition
    disjointness is only approximated here by syntactic equality; exact
    per-state enforcement happens during compilation.
    """
    diags = []
    domains = {v.name: v.domain for v in model.variables}

    for r in model.requirements:
        kind = r.kind
        if not kind.is_conditional:
            if r.activation is not None:
                diags.append(Diagnostic(
                    "error",
                    f"requirement '{r.name}': activation clause forbidden "
                    f"for unconditional kind {kind.value}"))
            if r.cancellation is not None:
                diags.append(Diagnostic(
                    "error",
                    f"requirement '{r.name}': cancellation clause forbidden "
                    f"for unconditional kind {kind.value}"))
        elif r.activation is None:
            diags.append(Diagnostic(
                "error",
                f"requirement '{r.name}': kind {kind.value} needs an "
                "activation clause"))
        if kind.has_deadline != (r.deadline is not None):
            diags.append(Diagnostic(
                "error",
                f"requirement '{r.name}': deadline "
                f"{'missing' if kind.has_deadline else 'forbidden'} "
                f"for kind {kind.value}"))
        if kind.has_duration != (r.duration is not None):
            diags.append(Diagnostic(
                "error",
                f"requirement '{r.name}': duration "
                f"{'missing' if kind.has_duration else 'forbidden'} "
                f"for kind {kind.value}"))
        if r.reward < 0:
            diags.append(Diagnostic(
                "error", f"requirement '{r.name}': negative reward"))

    def check_branches(owner: str, branches, effects_of, pre_of):
        seen_pres = []
        for br in branches:
            pre = pre_of(br)
            if pre in seen_pres:
                diags.append(Diagnostic(
                    "warning",
                    f"{owner}: overlapping preconditions "
                    f"({format_formula(pre)} repeated)"))
            seen_pres.append(pre)
            total = Fraction(0)
            for eff in effects_of(br):
                if eff.probability <= 0:
                    diags.append(Diagnostic(
                        "error", f"{owner}: zero-probability effect"))
                total += eff.probability
            if total > 1:
                diags.append(Diagnostic(
                    "error",
                    f"{owner}: effect probabilities sum to {total} > 1"))

    for a in model.actions:
        check_branches(f"action '{a.name}'", a.branches,
                       lambda br: br.effects, lambda br: br.precondition)
    for e in model.events:
        check_branches(f"event '{e.name}'", e.branches,
                       lambda br: br.effects, lambda br: br.precondition)

    # Domain values nothing can ever assign are likely spelling mistakes.
    assigned = {var: {value} for var, value in model.initial_state}
    for a in model.actions:
        for br in a.branches:
            for eff in br.effects:
                for var, value in eff.assignments:
                    assigned.setdefault(var, set()).add(value)
    for e in model.events:
        for br in e.branches:
            for eff in br.effects:
                for var, value in eff.assignments:
                    assigned.setdefault(var, set()).add(value)
    for name, domain in domains.items():
        for value in domain:
            if value not in assigned.get(name, set()):
                diags.append(Diagnostic(
                    "info",
                    f"value '{value}' of variable '{name}' is never assigned"))
    return diags
