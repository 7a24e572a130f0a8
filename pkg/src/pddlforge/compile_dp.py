"""Elimination of derived predicates from a ground task.

Two schemes:

* compile_rules_to_actions: each ground rule becomes an establishing
  action (precondition = rule body, add = head); every action whose
  effects may influence a derived predicate's rules deletes all instances
  of it.  Safe only when no derived predicate occurs negated outside rule
  bodies.

* compile_fixpoint_mode: mode flags force a complete per-stratum fixpoint
  phase after every original action that affects rule-relevant
  predicates.  A derive action carries one conditional effect per ground
  rule (fires when the body holds and the head is still false, raising
  changes-made); the fixpoint test resets changes-made after a productive
  derive round and leaves the phase after a silent one.  The round-done
  flag makes it impossible to certify a fixpoint without having run a
  derive round, which is what keeps negated derived facts sound
  downstream.

Influence is over-approximated syntactically: an action influences a
derived predicate P if it adds or deletes any predicate occurring in any
rule body of P's stratum or below.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import NameCollisionError, UnsoundCompilationError, ValidityError
from .model import (
    Atom,
    DerivedRule,
    FactTable,
    GroundAction,
    GroundEffect,
    GroundRule,
    GroundTask,
    ground_closure,
    stratify_predicates,
)

TAG_FIXPOINT = "dp-machinery"
TAG_RULE_ACTION = "rule-action"

NORMAL_MODE = Atom("normal-mode")

# Reserved name prefixes for fixpoint machinery (validate_plan erasure).
FIXPOINT_PREFIXES = ("derive-", "fixpoint-test-")
RULE_ACTION_PREFIX = "establish-"


@dataclass(frozen=True)
class RuleDependencyGraph:
    """Dependency graph of the derived predicates.

    Edges are (body predicate -> head predicate) occurrences labeled by
    polarity; PDDL 2.2 validity requires zero negative edges between
    derived predicates.
    """

    nodes: tuple[str, ...]
    positive_edges: tuple[tuple[str, str], ...]
    negative_edges: tuple[tuple[str, str], ...]
    strata: dict[str, int]

    @property
    def num_strata(self) -> int:
        return max(self.strata.values()) + 1 if self.strata else 0


def check_stratification(rules: tuple[DerivedRule, ...]) -> RuleDependencyGraph:
    """Build the dependency graph and assign strata; rejects negative body
    occurrences of derived predicates."""
    from .model import _body_occurrences  # shared polarity scan

    derived = sorted({r.head.pred for r in rules})
    pos: set[tuple[str, str]] = set()
    neg: set[tuple[str, str]] = set()
    for r in rules:
        for pred, negative in _body_occurrences(r.body, False):
            if pred in set(derived):
                (neg if negative else pos).add((pred, r.head.pred))
    strata = stratify_predicates(rules)  # raises StratificationError on neg
    return RuleDependencyGraph(
        nodes=tuple(derived),
        positive_edges=tuple(sorted(pos)),
        negative_edges=tuple(sorted(neg)),
        strata=strata,
    )


# ---------------------------------------------------------------------------
# Shared influence analysis (ground level)


def _body_predicates_by_stratum(task: GroundTask) -> dict[int, set[str]]:
    preds: dict[int, set[str]] = {s: set() for s in range(task.num_strata)}
    for r in task.rules:
        for i in r.body:
            preds[r.stratum].add(task.facts.atom(i).pred)
    return preds


def _derived_pred_strata(task: GroundTask) -> dict[str, int]:
    strata: dict[str, int] = {}
    for r in task.rules:
        pred = task.facts.atom(r.head).pred
        strata[pred] = max(strata.get(pred, 0), r.stratum)
    return strata


def _lowest_influenced_stratum(task: GroundTask, action: GroundAction):
    """The lowest stratum whose rule bodies mention a predicate this action
    adds or deletes, or None."""
    body_preds = _body_predicates_by_stratum(task)
    touched = {
        task.facts.atom(i).pred
        for e in action.effects
        for i in (set(e.adds) | set(e.deletes))
    }
    lowest = None
    for s in range(task.num_strata):
        if body_preds[s] & touched:
            lowest = s
            break
    return lowest


# ---------------------------------------------------------------------------
# Rules-to-actions scheme


def compile_rules_to_actions(task: GroundTask) -> GroundTask:
    """Replace every ground derivation rule with an establishing action.

    Rejects tasks using a derived predicate negated in any precondition,
    effect condition, or goal: in the compiled task the planner could
    achieve such a literal by simply not deriving, which breaks
    negation-as-failure.
    """
    if not task.rules:
        return task
    negated: set[int] = set(task.goal_neg)
    for a in task.actions:
        negated |= a.pre_neg
        for e in a.effects:
            negated |= e.cond_neg
    bad = sorted(negated & task.derived_facts)
    if bad:
        names = ", ".join(task.fact_name(i) for i in bad)
        raise UnsoundCompilationError(
            f"derived facts used negated ({names}); the rules-to-actions "
            "scheme is unsound here, use compile_fixpoint_mode"
        )

    strata_of_pred = _derived_pred_strata(task)
    body_preds = _body_predicates_by_stratum(task)
    # instances of each derived predicate present in the universe
    instances: dict[str, list[int]] = {p: [] for p in strata_of_pred}
    for i in range(len(task.facts)):
        pred = task.facts.atom(i).pred
        if pred in instances:
            instances[pred].append(i)

    def influenced_preds(touched: set[str]) -> list[str]:
        """Derived predicates whose stratum-or-below bodies mention any
        touched predicate."""
        out = []
        for p, s in sorted(strata_of_pred.items()):
            below = set().union(*(body_preds[t] for t in range(s + 1))) if s + 1 else set()
            if below & touched:
                out.append(p)
        return out

    actions: list[GroundAction] = []
    for a in task.actions:
        effects = []
        for e in a.effects:
            touched = {task.facts.atom(i).pred for i in (set(e.adds) | set(e.deletes))}
            resets: set[int] = set()
            for p in influenced_preds(touched):
                resets.update(instances[p])
            effects.append(
                GroundEffect(
                    e.cond_pos,
                    e.cond_neg,
                    e.adds,
                    frozenset(e.deletes | (resets - e.adds)),
                )
            )
        actions.append(replace(a, effects=tuple(effects)))

    existing = {a.name for a in task.actions}
    per_head_counter: dict[int, int] = {}
    for r in sorted(task.rules, key=lambda r: (r.stratum, r.head, sorted(r.body))):
        head_atom = task.facts.atom(r.head)
        n = per_head_counter.get(r.head, 0) + 1
        per_head_counter[r.head] = n
        token = "-".join((head_atom.pred,) + head_atom.args)
        name = f"({RULE_ACTION_PREFIX}{token}-{n})"
        if name in existing:
            raise NameCollisionError(f"generated action name {name} collides")
        actions.append(
            GroundAction(
                name,
                r.body,
                frozenset(),
                (GroundEffect(adds=frozenset({r.head})),),
                tags=frozenset({TAG_RULE_ACTION}),
            )
        )

    # Initially true derived facts are derivable from scratch, so init can
    # stay basic; derived facts become ordinary from here on.
    return replace(
        task,
        actions=tuple(actions),
        rules=(),
        derived_facts=frozenset(),
        num_strata=0,
    )


# ---------------------------------------------------------------------------
# Fixpoint-mode scheme


def compile_fixpoint_mode(task: GroundTask) -> GroundTask:
    """Compile derived predicates with mode flags and per-stratum fixpoint
    phases; derived predicates become ordinary facts afterwards, so
    negation and conditional-effect elimination may run downstream."""
    if not task.rules:
        return task
    facts = FactTable()
    for i in range(len(task.facts)):
        facts.intern(task.facts.atom(i))
    if NORMAL_MODE in task.facts:
        raise NameCollisionError("fact (normal-mode) already exists")
    normal = facts.intern(NORMAL_MODE)
    num = task.num_strata
    fixpoint_mode = [facts.intern(Atom(f"fixpoint-mode-{s}")) for s in range(num)]
    changes_made = [facts.intern(Atom(f"changes-made-{s}")) for s in range(num)]
    round_done = [facts.intern(Atom(f"round-done-{s}")) for s in range(num)]

    derived_by_stratum: dict[int, set[int]] = {s: set() for s in range(num)}
    strata_of_pred = _derived_pred_strata(task)
    for i in range(len(task.facts)):
        pred = task.facts.atom(i).pred
        if pred in strata_of_pred:
            derived_by_stratum[strata_of_pred[pred]].add(i)

    actions: list[GroundAction] = []
    for a in task.actions:
        lowest = _lowest_influenced_stratum(task, a)
        pre = frozenset(a.pre_pos | {normal})
        if lowest is None:
            actions.append(replace(a, pre_pos=pre))
            continue
        resets = set()
        for s in range(lowest, num):
            resets |= derived_by_stratum[s]
        switch = GroundEffect(
            adds=frozenset({fixpoint_mode[lowest]}),
            deletes=frozenset(resets | {normal}),
        )
        actions.append(replace(a, pre_pos=pre, effects=a.effects + (switch,)))

    existing = {a.name for a in actions}
    for s in range(num):
        derive_name = f"(derive-{s})"
        test_name = f"(fixpoint-test-{s})"
        if derive_name in existing or test_name in existing:
            raise NameCollisionError("fixpoint machinery action name collides")
        effects = [GroundEffect(adds=frozenset({round_done[s]}))]
        for r in sorted(
            (r for r in task.rules if r.stratum == s),
            key=lambda r: (r.head, sorted(r.body)),
        ):
            effects.append(
                GroundEffect(
                    cond_pos=r.body,
                    cond_neg=frozenset({r.head}),
                    adds=frozenset({r.head, changes_made[s]}),
                )
            )
        actions.append(
            GroundAction(
                derive_name,
                frozenset({fixpoint_mode[s]}),
                frozenset(),
                tuple(effects),
                tags=frozenset({TAG_FIXPOINT}),
            )
        )
        next_phase = normal if s + 1 == num else fixpoint_mode[s + 1]
        actions.append(
            GroundAction(
                test_name,
                frozenset({fixpoint_mode[s], round_done[s]}),
                frozenset(),
                (
                    GroundEffect(
                        cond_pos=frozenset({changes_made[s]}),
                        deletes=frozenset({changes_made[s], round_done[s]}),
                    ),
                    GroundEffect(
                        cond_neg=frozenset({changes_made[s]}),
                        adds=frozenset({next_phase}),
                        deletes=frozenset({fixpoint_mode[s], round_done[s]}),
                    ),
                ),
                tags=frozenset({TAG_FIXPOINT}),
            )
        )

    init = frozenset(ground_closure(task, task.init) | {normal})
    bookkeeping = set(task.bookkeeping_facts)
    bookkeeping.add(normal)
    bookkeeping.update(fixpoint_mode)
    bookkeeping.update(changes_made)
    bookkeeping.update(round_done)

    return GroundTask(
        facts=facts,
        actions=tuple(actions),
        rules=(),
        init=init,
        goal_pos=frozenset(task.goal_pos | {normal}),
        goal_neg=task.goal_neg,
        derived_facts=frozenset(),
        bookkeeping_facts=frozenset(bookkeeping),
        num_strata=0,
    )
