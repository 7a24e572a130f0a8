"""Core task representations and executable state semantics.

Two levels of representation:

* Lifted: typed operators and derivation rules over first-order formulas,
  plus an evaluator with native quantifier handling.  The lifted evaluator
  is deliberately independent of the normalization transforms so it can
  serve as the oracle they are checked against.

* Ground: an interned fact universe (dense integer indices) with actions,
  rules, init and goal as index sets.  All reachability / plan-graph
  computations run on this level.

Derived facts are never stored in states; they are recomputed per state
via a stratified least-fixpoint (negation-as-failure outside the fixpoint).
Action application deletes before it adds, so an effect that deletes and
adds the same fact leaves it true.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

from .errors import (
    ContractViolation,
    InapplicableActionError,
    StratificationError,
    ValidityError,
)

EQ = "="


# ---------------------------------------------------------------------------
# Formulas


def is_variable(term: str) -> bool:
    return term.startswith("?")


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...] = ()

    def is_ground(self) -> bool:
        return not any(is_variable(a) for a in self.args)

    def substitute(self, binding: dict[str, str]) -> "Atom":
        return Atom(self.pred, tuple(binding.get(a, a) for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return f"({self.pred})"
        return f"({self.pred} {' '.join(self.args)})"


@dataclass(frozen=True)
class Not:
    f: "Formula"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...] = ()


@dataclass(frozen=True)
class Imply:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Forall:
    params: tuple[tuple[str, str], ...]  # (?var, type)
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    params: tuple[tuple[str, str], ...]
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Imply, Forall, Exists]

TRUE = And(())
FALSE = Or(())


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def free_variables(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(a for a in f.args if is_variable(a))
    if isinstance(f, Not):
        return free_variables(f.f)
    if isinstance(f, (And, Or)):
        out: frozenset[str] = frozenset()
        for p in f.parts:
            out |= free_variables(p)
        return out
    if isinstance(f, Imply):
        return free_variables(f.lhs) | free_variables(f.rhs)
    if isinstance(f, (Forall, Exists)):
        bound = frozenset(v for v, _ in f.params)
        return free_variables(f.body) - bound
    raise TypeError(f"not a formula: {f!r}")


def substitute(f: Formula, binding: dict[str, str]) -> Formula:
    if isinstance(f, Atom):
        return f.substitute(binding)
    if isinstance(f, Not):
        return Not(substitute(f.f, binding))
    if isinstance(f, And):
        return And(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, binding) for p in f.parts))
    if isinstance(f, Imply):
        return Imply(substitute(f.lhs, binding), substitute(f.rhs, binding))
    if isinstance(f, (Forall, Exists)):
        inner = {k: v for k, v in binding.items() if k not in {v_ for v_, _ in f.params}}
        body = substitute(f.body, inner)
        return type(f)(f.params, body)
    raise TypeError(f"not a formula: {f!r}")


def atoms_of(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms_of(f.f)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from atoms_of(p)
    elif isinstance(f, Imply):
        yield from atoms_of(f.lhs)
        yield from atoms_of(f.rhs)
    elif isinstance(f, (Forall, Exists)):
        yield from atoms_of(f.body)
    else:
        raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Lifted task types


@dataclass(frozen=True)
class ConditionalEffect:
    """One conditional effect.  `params` carries the variables of a
    universally quantified effect (empty for plain effects); an
    unconditional effect has condition TRUE."""

    condition: Formula
    adds: tuple[Atom, ...]
    deletes: tuple[Atom, ...]
    params: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Operator:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: Formula
    effects: tuple[ConditionalEffect, ...]
    # Durative extension: `duration` is a rational or a static-function
    # lookup ("fname", args).  For durative operators `precondition` holds
    # the at-start condition and `effects` the at-start effects.
    duration: Optional[Union[Fraction, tuple]] = None
    cond_over: Optional[Formula] = None
    cond_end: Optional[Formula] = None
    end_effects: tuple[ConditionalEffect, ...] = ()

    @property
    def durative(self) -> bool:
        return self.duration is not None


@dataclass(frozen=True)
class DerivedRule:
    head: Atom  # arguments are variables
    params: tuple[tuple[str, str], ...]  # typed head variables
    body: Formula


@dataclass(frozen=True)
class TimedLiteral:
    time: Fraction
    atom: Atom
    positive: bool


@dataclass(frozen=True)
class LiftedTask:
    domain_name: str
    requirements: tuple[str, ...] = ()
    # type name -> parent type name ('object' is the implicit root)
    types: dict[str, str] = field(default_factory=dict)
    constants: dict[str, str] = field(default_factory=dict)  # domain constants
    objects: dict[str, str] = field(default_factory=dict)  # problem objects
    predicates: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)
    derived_predicates: frozenset[str] = frozenset()
    functions: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)
    operators: tuple[Operator, ...] = ()
    rules: tuple[DerivedRule, ...] = ()
    problem_name: Optional[str] = None
    init: frozenset[Atom] = frozenset()
    timed_literals: tuple[TimedLiteral, ...] = ()
    function_values: dict[tuple[str, tuple[str, ...]], Fraction] = field(
        default_factory=dict
    )
    goal: Formula = TRUE
    metric: Optional[str] = None  # "makespan" or None
    bookkeeping_predicates: frozenset[str] = frozenset()
    bookkeeping_operators: frozenset[str] = frozenset()

    # -- type machinery ----------------------------------------------------

    def is_subtype(self, t: str, ancestor: str) -> bool:
        if ancestor == "object":
            return True
        cur: Optional[str] = t
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self.types.get(cur)
            if cur == "object":
                return ancestor == "object"
        return False

    def all_objects(self) -> dict[str, str]:
        merged = dict(self.constants)
        merged.update(self.objects)
        return merged

    def objects_of_type(self, t: str) -> tuple[str, ...]:
        return tuple(
            sorted(n for n, ty in self.all_objects().items() if self.is_subtype(ty, t))
        )

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        """Check the structural invariants; raise ValidityError on breach."""
        for name, parent in self.types.items():
            if parent != "object" and parent not in self.types:
                raise ValidityError(f"type {name} has undeclared parent {parent}")
        objs = self.all_objects()
        for name, ty in objs.items():
            if ty != "object" and ty not in self.types:
                raise ValidityError(f"object {name} has undeclared type {ty}")
        for op in self.operators:
            scope = {v for v, _ in op.params}
            self._check_formula(op.precondition, scope, f"operator {op.name}")
            for eff in _all_effects(op):
                esc = scope | {v for v, _ in eff.params}
                self._check_formula(eff.condition, esc, f"operator {op.name}")
                if set(eff.adds) & set(eff.deletes):
                    raise ValidityError(
                        f"operator {op.name}: an atom appears in both the add "
                        "and delete list of one effect"
                    )
                for atom in eff.adds + eff.deletes:
                    self._check_atom(atom, esc, f"operator {op.name}")
                    if atom.pred == EQ:
                        raise ValidityError(
                            f"operator {op.name} has '=' in an effect"
                        )
                    if atom.pred in self.derived_predicates:
                        raise ValidityError(
                            f"operator {op.name} affects derived predicate {atom.pred}"
                        )
            if op.cond_over is not None:
                self._check_formula(op.cond_over, scope, f"operator {op.name}")
            if op.cond_end is not None:
                self._check_formula(op.cond_end, scope, f"operator {op.name}")
        for rule in self.rules:
            if rule.head.pred not in self.derived_predicates:
                raise ValidityError(
                    f"rule head {rule.head.pred} is not declared derived"
                )
            scope = {v for v, _ in rule.params}
            self._check_formula(rule.body, scope, f"rule for {rule.head.pred}")
        self._check_formula(self.goal, set(), "goal")
        for atom in self.init:
            self._check_atom(atom, set(), "init")
            if not atom.is_ground():
                raise ValidityError(f"init atom {atom} is not ground")
        self._validate_timed_literals()

    def _validate_timed_literals(self) -> None:
        seen: dict[tuple[Fraction, Atom], bool] = {}
        for tl in self.timed_literals:
            if tl.time <= 0:
                raise ValidityError(
                    f"timed literal {tl.atom} at time {tl.time}; literals at "
                    "time <= 0 belong in the initial state"
                )
            self._check_atom(tl.atom, set(), "timed literal")
            key = (tl.time, tl.atom)
            if key in seen and seen[key] != tl.positive:
                raise ValidityError(
                    f"contradictory timed literals on {tl.atom} at time {tl.time}"
                )
            seen[key] = tl.positive

    def _check_atom(self, atom: Atom, scope: set[str], where: str) -> None:
        if atom.pred == EQ:
            if len(atom.args) != 2:
                raise ValidityError(f"{where}: '=' takes two arguments")
        else:
            sig = self.predicates.get(atom.pred)
            if sig is None:
                raise ValidityError(f"{where}: undeclared predicate {atom.pred}")
            if len(sig) != len(atom.args):
                raise ValidityError(
                    f"{where}: {atom.pred} expects {len(sig)} arguments, "
                    f"got {len(atom.args)}"
                )
        objs = self.all_objects()
        for a in atom.args:
            if is_variable(a):
                if a not in scope:
                    raise ValidityError(f"{where}: unbound variable {a} in {atom}")
            elif a not in objs:
                raise ValidityError(f"{where}: undeclared constant {a} in {atom}")

    def _check_formula(self, f: Formula, scope: set[str], where: str) -> None:
        if isinstance(f, Atom):
            self._check_atom(f, scope, where)
        elif isinstance(f, Not):
            self._check_formula(f.f, scope, where)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                self._check_formula(p, scope, where)
        elif isinstance(f, Imply):
            self._check_formula(f.lhs, scope, where)
            self._check_formula(f.rhs, scope, where)
        elif isinstance(f, (Forall, Exists)):
            self._check_formula(f.body, scope | {v for v, _ in f.params}, where)
        else:
            raise ValidityError(f"{where}: not a formula: {f!r}")


def _all_effects(op: Operator) -> tuple[ConditionalEffect, ...]:
    return op.effects + op.end_effects


# ---------------------------------------------------------------------------
# Lifted semantics


def evaluate_formula(
    task: LiftedTask,
    state: frozenset[Atom] | set[Atom],
    f: Formula,
    derived: frozenset[Atom] | set[Atom] = frozenset(),
) -> bool:
    """Closed-world truth of a closed formula under state + derived extension.

    Quantifiers range over the task's typed objects; the empty conjunction is
    TRUE and the empty disjunction FALSE.
    """
    if free_variables(f):
        raise ContractViolation(f"formula has free variables: {sorted(free_variables(f))}")
    return _eval(task, state, derived, f)


def _eval(task, state, derived, f) -> bool:
    if isinstance(f, Atom):
        if f.pred == EQ:
            return f.args[0] == f.args[1]
        return f in state or f in derived
    if isinstance(f, Not):
        return not _eval(task, state, derived, f.f)
    if isinstance(f, And):
        return all(_eval(task, state, derived, p) for p in f.parts)
    if isinstance(f, Or):
        return any(_eval(task, state, derived, p) for p in f.parts)
    if isinstance(f, Imply):
        return (not _eval(task, state, derived, f.lhs)) or _eval(
            task, state, derived, f.rhs
        )
    if isinstance(f, (Forall, Exists)):
        bindings = _param_bindings(task, f.params)
        if isinstance(f, Forall):
            return all(
                _eval(task, state, derived, substitute(f.body, b)) for b in bindings
            )
        return any(_eval(task, state, derived, substitute(f.body, b)) for b in bindings)
    raise ContractViolation(f"not a formula: {f!r}")


def _param_bindings(
    task: LiftedTask, params: tuple[tuple[str, str], ...]
) -> Iterator[dict[str, str]]:
    if not params:
        yield {}
        return
    (var, ty), rest = params[0], params[1:]
    for obj in task.objects_of_type(ty):
        for sub in _param_bindings(task, rest):
            yield {var: obj, **sub}


def stratify_predicates(rules: Iterable[DerivedRule]) -> dict[str, int]:
    """Assign strata to derived predicates.

    Raises StratificationError if a derived predicate occurs negated in a
    rule body (the PDDL 2.2 restriction).  Returned strata are dense indices
    in dependency order; predicates in the same SCC share a stratum.
    """
    rules = tuple(rules)
    derived = {r.head.pred for r in rules}
    pos_edges: dict[str, set[str]] = {p: set() for p in derived}
    for r in rules:
        for pred, negative in _body_occurrences(r.body, False):
            if pred in derived:
                if negative:
                    raise StratificationError(
                        f"derived predicate {pred} occurs negated in the body "
                        f"of the rule for {r.head.pred}"
                    )
                pos_edges[r.head.pred].add(pred)
    # Condensation by Tarjan, then strata = longest-path layer in topological
    # order so each stratum only depends on strictly lower ones.
    sccs = _tarjan(sorted(derived), pos_edges)
    comp_of = {}
    for i, comp in enumerate(sccs):
        for p in comp:
            comp_of[p] = i
    comp_level = [0] * len(sccs)
    for i, comp in enumerate(sccs):
        deps = {
            comp_of[q]
            for p in comp
            for q in pos_edges[p]
            if comp_of[q] != i
        }
        if deps:
            comp_level[i] = 1 + max(comp_level[d] for d in deps)
    return {p: comp_level[comp_of[p]] for p in derived}


def _body_occurrences(f: Formula, negated: bool) -> Iterator[tuple[str, bool]]:
    if isinstance(f, Atom):
        yield (f.pred, negated)
    elif isinstance(f, Not):
        yield from _body_occurrences(f.f, not negated)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from _body_occurrences(p, negated)
    elif isinstance(f, Imply):
        yield from _body_occurrences(f.lhs, not negated)
        yield from _body_occurrences(f.rhs, negated)
    elif isinstance(f, (Forall, Exists)):
        yield from _body_occurrences(f.body, negated)


def _tarjan(nodes: list[str], edges: dict[str, set[str]]) -> list[list[str]]:
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    out: list[list[str]] = []

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in sorted(edges.get(v, ())):
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            out.append(sorted(comp))

    for v in nodes:
        if v not in index:
            strongconnect(v)
    return out


def compute_derived_extension(
    task: LiftedTask, state: frozenset[Atom] | set[Atom]
) -> frozenset[Atom]:
    """Least fixpoint of the derivation rules over `state`, stratum by stratum.

    `state` must contain basic (non-derived) facts only; everything outside
    the fixpoint is false.
    """
    for atom in state:
        if atom.pred in task.derived_predicates:
            raise ContractViolation(f"state contains derived fact {atom}")
    strata = stratify_predicates(task.rules)
    derived: set[Atom] = set()
    for level in sorted(set(strata.values())):
        level_rules = [r for r in task.rules if strata[r.head.pred] == level]
        changed = True
        while changed:
            changed = False
            for rule in level_rules:
                for binding in _param_bindings(task, rule.params):
                    head = rule.head.substitute(binding)
                    if head in derived:
                        continue
                    body = substitute(rule.body, binding)
                    if _eval(task, state, derived, body):
                        derived.add(head)
                        changed = True
    return frozenset(derived)


def apply_operator(
    task: LiftedTask,
    state: frozenset[Atom],
    op: Operator,
    args: tuple[str, ...],
) -> frozenset[Atom]:
    """Apply a (non-durative) operator instance under full lifted semantics.

    Effect conditions are evaluated against the pre-state (plus its derived
    extension); deletion is applied before addition.
    """
    if op.durative:
        raise ContractViolation(f"operator {op.name} is durative")
    if len(args) != len(op.params):
        raise InapplicableActionError(
            f"{op.name} expects {len(op.params)} arguments, got {len(args)}"
        )
    binding = {v: a for (v, _), a in zip(op.params, args)}
    derived = compute_derived_extension(task, state) if task.rules else frozenset()
    pre = substitute(op.precondition, binding)
    if not _eval(task, state, derived, pre):
        raise InapplicableActionError(
            f"precondition of ({op.name} {' '.join(args)}) not satisfied"
        )
    adds: set[Atom] = set()
    dels: set[Atom] = set()
    for eff in op.effects:
        for ebind in _param_bindings(task, eff.params):
            full = {**binding, **ebind}
            if _eval(task, state, derived, substitute(eff.condition, full)):
                adds.update(a.substitute(full) for a in eff.adds)
                dels.update(a.substitute(full) for a in eff.deletes)
    return frozenset((set(state) - dels) | adds)


# ---------------------------------------------------------------------------
# Ground task types


class FactTable:
    """Interns ground atoms to dense integer indices."""

    def __init__(self) -> None:
        self.atoms: list[Atom] = []
        self._index: dict[Atom, int] = {}

    def intern(self, atom: Atom) -> int:
        idx = self._index.get(atom)
        if idx is None:
            idx = len(self.atoms)
            self.atoms.append(atom)
            self._index[atom] = idx
        return idx

    def get(self, atom: Atom) -> Optional[int]:
        return self._index.get(atom)

    def atom(self, idx: int) -> Atom:
        return self.atoms[idx]

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self._index


@dataclass(frozen=True)
class GroundEffect:
    cond_pos: frozenset[int] = frozenset()
    cond_neg: frozenset[int] = frozenset()
    adds: frozenset[int] = frozenset()
    deletes: frozenset[int] = frozenset()

    @property
    def unconditional(self) -> bool:
        return not self.cond_pos and not self.cond_neg


@dataclass(frozen=True)
class GroundAction:
    name: str  # "(op arg1 arg2)"
    pre_pos: frozenset[int]
    pre_neg: frozenset[int]
    effects: tuple[GroundEffect, ...]
    duration: Optional[Fraction] = None
    tags: frozenset[str] = frozenset()

    @property
    def is_strips(self) -> bool:
        return (
            not self.pre_neg
            and len(self.effects) == 1
            and self.effects[0].unconditional
        )


@dataclass(frozen=True)
class GroundRule:
    head: int
    body: frozenset[int]  # positive fact indices only
    stratum: int


@dataclass
class GroundTask:
    facts: FactTable
    actions: tuple[GroundAction, ...]
    rules: tuple[GroundRule, ...]
    init: frozenset[int]
    goal_pos: frozenset[int]
    goal_neg: frozenset[int] = frozenset()
    derived_facts: frozenset[int] = frozenset()
    bookkeeping_facts: frozenset[int] = frozenset()
    num_strata: int = 0

    def fact_name(self, idx: int) -> str:
        return str(self.facts.atom(idx))

    @property
    def is_strips(self) -> bool:
        return (
            not self.rules
            and not self.goal_neg
            and all(a.is_strips for a in self.actions)
        )

    def action_by_name(self, name: str) -> Optional[GroundAction]:
        for a in self.actions:
            if a.name == name:
                return a
        return None


# ---------------------------------------------------------------------------
# Ground semantics


def ground_closure(task: GroundTask, state: frozenset[int]) -> frozenset[int]:
    """state plus the least fixpoint of the ground rules, stratum order."""
    if not task.rules:
        return state
    known = set(state)
    for level in range(task.num_strata):
        level_rules = [r for r in task.rules if r.stratum == level]
        changed = True
        while changed:
            changed = False
            for rule in level_rules:
                if rule.head not in known and rule.body <= known:
                    known.add(rule.head)
                    changed = True
    return frozenset(known)


def action_applicable(a: GroundAction, closure: frozenset[int]) -> bool:
    return a.pre_pos <= closure and not (a.pre_neg & closure)


def fired_changes(
    a: GroundAction, closure: frozenset[int]
) -> tuple[frozenset[int], frozenset[int]]:
    """(adds, deletes) of the effects whose condition holds in `closure`."""
    adds: set[int] = set()
    dels: set[int] = set()
    for eff in a.effects:
        if eff.cond_pos <= closure and not (eff.cond_neg & closure):
            adds |= eff.adds
            dels |= eff.deletes
    return frozenset(adds), frozenset(dels)


def apply_action(
    task: GroundTask, state: frozenset[int], a: GroundAction
) -> frozenset[int]:
    """Successor state; raises InapplicableActionError when the precondition
    (evaluated on state + derived extension) does not hold."""
    closure = ground_closure(task, state)
    if not action_applicable(a, closure):
        missing = sorted(task.fact_name(i) for i in a.pre_pos - closure)
        present = sorted(task.fact_name(i) for i in a.pre_neg & closure)
        detail = []
        if missing:
            detail.append(f"missing {', '.join(missing)}")
        if present:
            detail.append(f"forbidden {', '.join(present)}")
        raise InapplicableActionError(f"{a.name} inapplicable: {'; '.join(detail)}")
    adds, dels = fired_changes(a, closure)
    return frozenset((state - dels) | adds)


def goal_satisfied(task: GroundTask, closure: frozenset[int]) -> bool:
    return task.goal_pos <= closure and not (task.goal_neg & closure)


def check_ground_invariants(task: GroundTask) -> None:
    """Universe-consistency checks; raises ValidityError on breach."""
    n = len(task.facts)

    def chk(indices: Iterable[int], where: str) -> None:
        for i in indices:
            if not 0 <= i < n:
                raise ValidityError(f"{where}: fact index {i} outside universe")

    chk(task.init, "init")
    chk(task.goal_pos, "goal")
    chk(task.goal_neg, "goal")
    for a in task.actions:
        chk(a.pre_pos, a.name)
        chk(a.pre_neg, a.name)
        for e in a.effects:
            chk(e.cond_pos, a.name)
            chk(e.cond_neg, a.name)
            chk(e.adds, a.name)
            chk(e.deletes, a.name)
    for r in task.rules:
        chk([r.head], "rule")
        chk(r.body, "rule")


__all__ = [
    "EQ",
    "Atom",
    "Not",
    "And",
    "Or",
    "Imply",
    "Forall",
    "Exists",
    "Formula",
    "TRUE",
    "FALSE",
    "conj",
    "is_variable",
    "free_variables",
    "substitute",
    "atoms_of",
    "ConditionalEffect",
    "Operator",
    "DerivedRule",
    "TimedLiteral",
    "LiftedTask",
    "evaluate_formula",
    "compute_derived_extension",
    "stratify_predicates",
    "apply_operator",
    "FactTable",
    "GroundEffect",
    "GroundAction",
    "GroundRule",
    "GroundTask",
    "ground_closure",
    "action_applicable",
    "fired_changes",
    "apply_action",
    "goal_satisfied",
    "check_ground_invariants",
]
