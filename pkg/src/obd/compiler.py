"""Compile a domain model into a discounted-reward MDP.

Pipeline: enumerate every assignment of state variables and requirement
statuses, build the explicit per-action and per-event transition matrices,
blend each event with its occurrence vector, fold all events into each
action by matrix product (action first, then events in declaration order),
and attach transition rewards. Probabilities stay exact rationals until the
matrices are exported for the solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp

from obd.dsl import (
    ActionDesc,
    DomainModel,
    EventDesc,
    ObdError,
    eval_formula,
    format_formula,
)
from obd.reqauto import (
    RequirementAutomaton,
    build_automaton,
    reward as requirement_reward,
    update_action,
    update_event,
)

NOOP = "noop"
DEFAULT_GAMMA = Fraction(19, 20)
DEFAULT_STATE_LIMIT = 2_000_000
FORMAT_MDP = "obdmdp/1"


class CompileError(ObdError):
    pass


class StateLimitError(CompileError):
    pass


# ---------------------------------------------------------------------------
# State space


@dataclass(frozen=True)
class StateSpace:
    """Lexicographic bijection between indices and full variable assignments.

    Order: declared state variables first, then one variable per
    requirement; value order is declaration order. The first variable is
    the most significant digit of the mixed-radix index.
    """

    names: tuple  # variable names, state vars then requirement vars
    domains: tuple  # tuple of value tuples, parallel to names
    n_base: int  # how many leading entries are state variables

    @property
    def size(self) -> int:
        out = 1
        for d in self.domains:
            out *= len(d)
        return out

    def index_of(self, assignment: Mapping[str, str]) -> int:
        idx = 0
        for name, domain in zip(self.names, self.domains):
            idx = idx * len(domain) + domain.index(assignment[name])
        return idx

    def state(self, index: int) -> dict:
        values = [0] * len(self.names)
        for pos in range(len(self.names) - 1, -1, -1):
            size = len(self.domains[pos])
            index, values[pos] = divmod(index, size)
        return {name: self.domains[pos][values[pos]]
                for pos, name in enumerate(self.names)}

    def atoms(self, index: int) -> tuple:
        state = self.state(index)
        return tuple((name, state[name]) for name in self.names)


def enumerate_states(model: DomainModel, automata,
                     limit: int = DEFAULT_STATE_LIMIT) -> StateSpace:
    """Deterministic state enumeration; errors out above the state limit."""
    names = [v.name for v in model.variables]
    domains = [v.domain for v in model.variables]
    for auto in automata:
        names.append(auto.name)
        domains.append(auto.statuses)
    count = 1
    for d in domains:
        count *= len(d)
    if count > limit:
        raise StateLimitError(
            f"state space has {count} states, exceeding the limit of {limit}")
    return StateSpace(tuple(names), tuple(domains), len(model.variables))


# ---------------------------------------------------------------------------
# Sparse matrices over exact rationals


class SparseMatrix:
    """Square row-sparse matrix; entries are Fractions (or floats when
    loaded back from a serialized model)."""

    def __init__(self, size: int, rows=None):
        self.size = size
        self.rows = rows if rows is not None else [dict() for _ in range(size)]

    def add(self, i: int, j: int, value):
        row = self.rows[i]
        row[j] = row.get(j, 0) + value

    def set(self, i: int, j: int, value):
        self.rows[i][j] = value

    def get(self, i: int, j: int):
        return self.rows[i].get(j, 0)

    def row(self, i: int) -> dict:
        return self.rows[i]

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def row_sums(self) -> list:
        return [sum(r.values()) for r in self.rows]

    def matmul(self, other: "SparseMatrix") -> "SparseMatrix":
        out = SparseMatrix(self.size)
        for i, row in enumerate(self.rows):
            target = out.rows[i]
            for k, v in row.items():
                for j, w in other.rows[k].items():
                    target[j] = target.get(j, 0) + v * w
        return out

    @classmethod
    def identity(cls, size: int) -> "SparseMatrix":
        m = cls(size)
        for i in range(size):
            m.rows[i][i] = Fraction(1)
        return m

    def to_csr(self) -> sp.csr_matrix:
        data, indices, indptr = [], [], [0]
        for row in self.rows:
            for j in sorted(row):
                indices.append(j)
                data.append(float(row[j]))
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int64),
             np.array(indptr, dtype=np.int64)),
            shape=(self.size, self.size))

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.size == other.size
                and all(a == b for a, b in zip(self.rows, other.rows)))


# ---------------------------------------------------------------------------
# Matrix construction


def _apply_assignments(base: dict, assignments) -> dict:
    new = dict(base)
    for var, value in assignments:
        new[var] = value
    return new


def _matching_branch(branches, base: dict, owner: str, space: StateSpace,
                     state: dict):
    matched = None
    for br in branches:
        if eval_formula(br.precondition, base):
            if matched is not None:
                witness = " ".join(f"{k}={v}" for k, v in state.items())
                raise CompileError(
                    f"{owner}: preconditions "
                    f"'{format_formula(matched.precondition)}' and "
                    f"'{format_formula(br.precondition)}' overlap in state "
                    f"{{{witness}}}")
            matched = br
    return matched


def _successors(state: dict, branch, space: StateSpace, automata, advance):
    """Distribution over successor states for one matched branch (or none).

    `advance` is the status update function for this step type. The
    residual probability keeps the base unchanged; statuses advance either
    way, against the successor base.
    """
    base = {name: state[name] for name in space.names[:space.n_base]}
    outcomes = []
    residual = Fraction(1)
    if branch is not None:
        for eff in branch.effects:
            outcomes.append((_apply_assignments(base, eff.assignments),
                             eff.probability))
            residual -= eff.probability
    if residual > 0:
        outcomes.append((base, residual))
    result = {}
    for new_base, prob in outcomes:
        successor = dict(new_base)
        for auto in automata:
            successor[auto.name] = advance(auto, state[auto.name], new_base)
        idx = space.index_of(successor)
        result[idx] = result.get(idx, 0) + prob
    return result


def explicit_action_matrix(action: ActionDesc, space: StateSpace,
                           automata) -> SparseMatrix:
    """Per-state action execution; statuses advance via the action update.

    States where no precondition holds self-loop on the base but still
    advance statuses. Overlapping preconditions raise with a witness state.
    """
    m = SparseMatrix(space.size)
    base_names = space.names[:space.n_base]
    for i in range(space.size):
        state = space.state(i)
        base = {name: state[name] for name in base_names}
        branch = _matching_branch(action.branches, base,
                                  f"action '{action.name}'", space, state)
        for j, p in _successors(state, branch, space, automata,
                                update_action).items():
            m.add(i, j, p)
    return m


def explicit_event_matrix(event: EventDesc, space: StateSpace,
                          automata) -> SparseMatrix:
    m = SparseMatrix(space.size)
    base_names = space.names[:space.n_base]
    for i in range(space.size):
        state = space.state(i)
        base = {name: state[name] for name in base_names}
        branch = _matching_branch(event.branches, base,
                                  f"event '{event.name}'", space, state)
        for j, p in _successors(state, branch, space, automata,
                                update_event).items():
            m.add(i, j, p)
    return m


def occurrence_vector(event: EventDesc, space: StateSpace) -> list:
    """Per-state probability that the event fires: op of the matched
    branch, 0 where no precondition holds."""
    out = []
    base_names = space.names[:space.n_base]
    for i in range(space.size):
        state = space.state(i)
        base = {name: state[name] for name in base_names}
        branch = _matching_branch(event.branches, base,
                                  f"event '{event.name}'", space, state)
        out.append(branch.occurrence_probability if branch is not None
                   else Fraction(0))
    return out


def effective_event_matrix(explicit: SparseMatrix,
                           occurrence) -> SparseMatrix:
    """Blend firing and non-firing: row s = O(s)*Pr_e(s,.) + (1-O(s))*delta_s."""
    out = SparseMatrix(explicit.size)
    for i in range(explicit.size):
        o = occurrence[i]
        row = out.rows[i]
        if o:
            for j, p in explicit.rows[i].items():
                row[j] = row.get(j, 0) + o * p
        stay = 1 - o
        if stay:
            row[i] = row.get(i, 0) + stay
    return out


def events_matrix(effective_matrices, size: int) -> SparseMatrix:
    """Left-to-right product of effective event matrices in declaration
    order; identity when there are no events."""
    out = SparseMatrix.identity(size)
    for m in effective_matrices:
        out = out.matmul(m)
    return out


def implicit_action_matrix(explicit: SparseMatrix,
                           events: SparseMatrix) -> SparseMatrix:
    """Sequential composition, action first, then all events."""
    return explicit.matmul(events)


def reward_matrix(action: ActionDesc, implicit: SparseMatrix,
                  space: StateSpace, automata) -> SparseMatrix:
    """Transition rewards on the support of the implicit matrix: summed
    requirement rewards minus the action cost (entries may be negative)."""
    m = SparseMatrix(space.size)
    cost = action.cost
    states = {}

    def full_state(idx):
        if idx not in states:
            states[idx] = space.state(idx)
        return states[idx]

    for i in range(space.size):
        if not implicit.rows[i]:
            continue
        before = full_state(i)
        for j in implicit.rows[i]:
            after = full_state(j)
            total = -cost
            for auto in automata:
                total += requirement_reward(auto, before, after)
            m.set(i, j, Fraction(total))
    return m


# ---------------------------------------------------------------------------
# Whole-model compilation


@dataclass
class MdpModel:
    space: StateSpace
    action_names: tuple  # noop first, then declaration order
    actions: tuple  # of ActionDesc, parallel to action_names
    transitions: dict  # action name -> SparseMatrix (implicit-event)
    rewards: dict  # action name -> SparseMatrix, defined on the support
    gamma: Fraction
    initial_index: int
    model: Optional[DomainModel] = None
    automata: tuple = ()
    warnings: tuple = ()
    _csr_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_states(self) -> int:
        return self.space.size

    @property
    def n_actions(self) -> int:
        return len(self.action_names)

    def transition_csr(self, name: str) -> sp.csr_matrix:
        key = ("t", name)
        if key not in self._csr_cache:
            self._csr_cache[key] = self.transitions[name].to_csr()
        return self._csr_cache[key]

    def reward_csr(self, name: str) -> sp.csr_matrix:
        key = ("r", name)
        if key not in self._csr_cache:
            self._csr_cache[key] = self.rewards[name].to_csr()
        return self._csr_cache[key]


def _check_commutation(names, effective, warnings: list):
    """Event folding uses declaration order; warn when a pair of events
    visibly fails to commute."""
    pairs = list(itertools.combinations(range(len(names)), 2))
    if len(pairs) > 10:  # sample the first few pairs on large models
        pairs = pairs[:10]
    for i, j in pairs:
        ab = effective[i].matmul(effective[j])
        ba = effective[j].matmul(effective[i])
        if ab != ba:
            warnings.append(
                f"events '{names[i]}' and '{names[j]}' do not commute; "
                "using declaration order")


def compile_model(model: DomainModel, gamma: Fraction = DEFAULT_GAMMA,
                  limit: int = DEFAULT_STATE_LIMIT) -> MdpModel:
    """Assemble the full MDP: state space, implicit-event transition and
    reward matrices per action (noop included), discount factor."""
    gamma = Fraction(gamma)
    if not (0 < gamma < 1):
        raise CompileError(f"discount factor {gamma} outside (0,1)")
    for a in model.actions:
        if a.name == NOOP:
            raise CompileError(f"'{NOOP}' is a reserved action name")

    automata = tuple(build_automaton(r) for r in model.requirements)
    space = enumerate_states(model, automata, limit)

    warnings: list = []
    effective = []
    event_names = []
    for ev in model.events:
        explicit = explicit_event_matrix(ev, space, automata)
        occ = occurrence_vector(ev, space)
        effective.append(effective_event_matrix(explicit, occ))
        event_names.append(ev.name)
    _check_commutation(event_names, effective, warnings)
    ev_matrix = events_matrix(effective, space.size)

    noop = ActionDesc(NOOP, branches=(), cost=0)
    all_actions = (noop,) + tuple(model.actions)
    transitions = {}
    rewards = {}
    for action in all_actions:
        explicit = explicit_action_matrix(action, space, automata)
        implicit = implicit_action_matrix(explicit, ev_matrix)
        transitions[action.name] = implicit
        rewards[action.name] = reward_matrix(action, implicit, space, automata)

    initial = dict(model.initial_state)
    for auto in automata:
        initial[auto.name] = auto.initial_status
    return MdpModel(
        space=space,
        action_names=tuple(a.name for a in all_actions),
        actions=all_actions,
        transitions=transitions,
        rewards=rewards,
        gamma=gamma,
        initial_index=space.index_of(initial),
        model=model,
        automata=automata,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Serialization (format obdmdp/1)
#
#   obdmdp/1
#   gamma <float>
#   states <n>
#   actions <m>
#   initial <index>
#   state <index> <var=value> ...          (one line per state)
#   action <name> <cost>                   (then its triples)
#   t <row> <col> <probability>
#   r <row> <col> <reward>
#   end


def dump_mdp(mdp: MdpModel) -> str:
    lines = [FORMAT_MDP,
             f"gamma {float(mdp.gamma)!r}",
             f"states {mdp.n_states}",
             f"actions {mdp.n_actions}",
             f"initial {mdp.initial_index}"]
    for i in range(mdp.n_states):
        atoms = " ".join(f"{k}={v}" for k, v in mdp.space.atoms(i))
        lines.append(f"state {i} {atoms}")
    for action in mdp.actions:
        lines.append(f"action {action.name} {action.cost}")
        t = mdp.transitions[action.name]
        r = mdp.rewards[action.name]
        for i in range(mdp.n_states):
            for j in sorted(t.rows[i]):
                lines.append(f"t {i} {j} {float(t.rows[i][j])!r}")
        for i in range(mdp.n_states):
            for j in sorted(r.rows[i]):
                lines.append(f"r {i} {j} {float(r.rows[i][j])!r}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def load_mdp(text: str) -> MdpModel:
    """Parse an obdmdp/1 document back into a solvable model.

    Probabilities and rewards come back as floats; the domain model and
    automata are not recoverable from this format, so the result supports
    solving and export but not simulation.
    """
    lines = text.splitlines()
    if not lines or lines[0] != FORMAT_MDP:
        raise CompileError(f"not an {FORMAT_MDP} document")

    def split(line, tag):
        parts = line.split()
        if not parts or parts[0] != tag:
            raise CompileError(f"expected '{tag}' line, got: {line!r}")
        return parts[1:]

    gamma = Fraction(split(lines[1], "gamma")[0])
    n_states = int(split(lines[2], "states")[0])
    n_actions = int(split(lines[3], "actions")[0])
    initial = int(split(lines[4], "initial")[0])

    pos = 5
    names = None
    domains = None
    raw_states = []
    for _ in range(n_states):
        parts = split(lines[pos], "state")
        pos += 1
        atoms = [p.partition("=") for p in parts[1:]]
        raw_states.append([(a, c) for a, _, c in atoms])
    if raw_states:
        names = tuple(a for a, _ in raw_states[0])
        values: dict = {name: [] for name in names}
        for state in raw_states:
            for name, value in state:
                if value not in values[name]:
                    values[name].append(value)
        domains = tuple(tuple(values[name]) for name in names)
    else:
        names, domains = (), ()
    space = StateSpace(names, domains, len(names))

    action_names = []
    actions = []
    transitions = {}
    rewards = {}
    current = None
    while pos < len(lines):
        line = lines[pos]
        pos += 1
        if line == "end":
            break
        parts = line.split()
        if parts[0] == "action":
            current = parts[1]
            action_names.append(current)
            actions.append(ActionDesc(current, branches=(), cost=int(parts[2])))
            transitions[current] = SparseMatrix(n_states)
            rewards[current] = SparseMatrix(n_states)
        elif parts[0] == "t":
            transitions[current].set(int(parts[1]), int(parts[2]),
                                     float(parts[3]))
        elif parts[0] == "r":
            rewards[current].set(int(parts[1]), int(parts[2]),
                                 float(parts[3]))
        else:
            raise CompileError(f"unexpected line: {line!r}")
    if len(action_names) != n_actions:
        raise CompileError(
            f"expected {n_actions} actions, found {len(action_names)}")
    return MdpModel(space=space, action_names=tuple(action_names),
                    actions=tuple(actions), transitions=transitions,
                    rewards=rewards, gamma=gamma, initial_index=initial)
