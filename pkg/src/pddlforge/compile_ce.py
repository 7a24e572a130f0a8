"""Elimination of conditional effects from a ground SIMPLE-ADL task.

Two methods:

* enumerate_outcomes: each action with k distinct conditional effects
  becomes one copy per effect subset, the copy's precondition asserting
  exactly which conditions hold.  Preserves plan length at an exponential
  description cost (2^k per action, more when a condition has several
  facts and its negation must be split over them).

* evaluation_phase_compile: after a compiled action, a forced
  effect-evaluation phase tries every conditional effect (apply or skip)
  and a stop action returns to normal; plan length grows by k+1 per
  application of a compiled action.

Both outputs are pure STRIPS: one unconditional effect per action.
Complement facts for condition negation are generated on demand.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .errors import CeCapError, NameCollisionError, ValidityError
from .model import (
    Atom,
    FactTable,
    GroundAction,
    GroundEffect,
    GroundTask,
)
from .ground import ground_compile_negations
from .normalize import not_name

DEFAULT_CE_CAP = 12

NORMAL_FACT = Atom("normal")
TAG_PHASE = "ce-phase"

# Reserved ground-action name prefixes for phase machinery (used by
# validate_plan's bookkeeping erasure).
PHASE_PREFIXES = ("apply-effect-", "skip-effect-", "stop-effects-")


@dataclass(frozen=True)
class CeCompilationStats:
    method: str  # "enumerate" | "evaluation_phase" | "auto"
    input_actions: int
    output_actions: int
    new_facts: int
    worst_effect_count: int

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "input_actions": self.input_actions,
            "output_actions": self.output_actions,
            "new_facts": self.new_facts,
            "worst_effect_count": self.worst_effect_count,
        }


def _require_simple_adl(task: GroundTask) -> None:
    if task.rules:
        raise ValidityError(
            "conditional-effect compilation requires a task without "
            "derivation rules; compile derived predicates first"
        )
    if task.goal_neg:
        raise ValidityError("negated goal literals must be compiled away first")
    for a in task.actions:
        if a.pre_neg:
            raise ValidityError(
                f"{a.name}: negative precondition literals must be compiled "
                "away first"
            )


def _copy_facts(task: GroundTask) -> FactTable:
    facts = FactTable()
    for i in range(len(task.facts)):
        facts.intern(task.facts.atom(i))
    return facts


def _split(action: GroundAction):
    unconditional = [e for e in action.effects if e.unconditional]
    conditional = [e for e in action.effects if not e.unconditional]
    adds = frozenset().union(*(e.adds for e in unconditional)) if unconditional else frozenset()
    dels = frozenset().union(*(e.deletes for e in unconditional)) if unconditional else frozenset()
    return adds, dels - adds, conditional


def _op_token(name: str) -> str:
    """'(move a b)' -> 'move-a-b', usable inside generated fact names."""
    return name.strip("()").replace(" ", "-")


class _Complements:
    """On-demand not-* complement facts for condition negation.

    Newly created complements are registered so a final
    ground_compile_negations pass can wire up init values and maintenance
    effects; pairs that already exist are reused.
    """

    def __init__(self, task: GroundTask, facts: FactTable):
        self.task = task
        self.facts = facts

    def negation_of(self, idx: int) -> int:
        atom = self.facts.atom(idx)
        if idx in self.task.derived_facts:
            raise ValidityError(
                f"cannot negate derived fact {atom}: compile derived "
                "predicates first"
            )
        if atom.pred.startswith("not-"):
            return self.facts.intern(Atom(atom.pred[4:], atom.args))
        return self.facts.intern(Atom(not_name(atom.pred), atom.args))


def enumerate_outcomes(
    task: GroundTask, cap: int = DEFAULT_CE_CAP, _on_overflow: str = "error"
) -> GroundTask:
    """Compile conditional effects away by enumerating effect-outcome
    combinations.  Exactly one copy is applicable per state when every
    condition is a single fact; copies with internally contradictory
    preconditions are emitted and left to reachability filtering.
    """
    return _compile(task, cap, method="enumerate")


def evaluation_phase_compile(task: GroundTask) -> GroundTask:
    """Compile conditional effects away with the effect-evaluation-phase
    construction (shared `normal` fact, per-action evaluate/tried flags)."""
    return _compile(task, cap=0, method="evaluation_phase")


def compile_conditional_effects(
    task: GroundTask, cap: int = DEFAULT_CE_CAP, method: str = "auto"
) -> tuple[GroundTask, CeCompilationStats]:
    """Dispatch per the configured method.

    `auto` enumerates whenever an action has at most `cap` conditional
    effects and falls back to the evaluation phase for the others.
    """
    if method not in ("enumerate", "phase", "auto", "evaluation_phase"):
        raise ValidityError(f"unknown conditional-effect method {method!r}")
    if method == "phase":
        method = "evaluation_phase"
    worst = max((sum(1 for e in a.effects if not e.unconditional) for a in task.actions), default=0)
    if method == "enumerate":
        out = enumerate_outcomes(task, cap)
    elif method == "evaluation_phase":
        out = evaluation_phase_compile(task)
    else:
        out = _compile(task, cap, method="auto")
    stats = CeCompilationStats(
        method=method,
        input_actions=len(task.actions),
        output_actions=len(out.actions),
        new_facts=len(out.facts) - len(task.facts),
        worst_effect_count=worst,
    )
    return out, stats


def _compile(task: GroundTask, cap: int, method: str) -> GroundTask:
    _require_simple_adl(task)
    facts = _copy_facts(task)
    comp = _Complements(task, facts)
    existing_names = {a.name for a in task.actions}

    needs_phase = any(not a.is_strips for a in task.actions) and (
        method == "evaluation_phase"
        or (
            method == "auto"
            and any(
                sum(1 for e in a.effects if not e.unconditional) > cap
                for a in task.actions
            )
        )
    )
    normal_idx = None
    if needs_phase:
        if NORMAL_FACT in task.facts:
            raise NameCollisionError("fact (normal) already exists")
        normal_idx = facts.intern(NORMAL_FACT)

    actions: list[GroundAction] = []
    bookkeeping = set(task.bookkeeping_facts)
    for a in task.actions:
        base_adds, base_dels, conditional = _split(a)
        k = len(conditional)
        if k == 0:
            eff = GroundEffect(adds=base_adds, deletes=base_dels)
            pre = a.pre_pos
            if normal_idx is not None:
                # A phase must not be interleaved with foreign actions, so
                # every action demands the shared normal flag.
                pre = pre | {normal_idx}
            actions.append(replace(a, pre_pos=pre, effects=(eff,)))
            continue
        use_phase = method == "evaluation_phase" or (method == "auto" and k > cap)
        if not use_phase and k > cap:
            raise CeCapError(a.name, k, cap)
        if use_phase:
            _emit_phase(
                a, base_adds, base_dels, conditional, facts, comp, normal_idx,
                actions, bookkeeping, existing_names,
            )
        else:
            _emit_enumerated(
                a, base_adds, base_dels, conditional, comp, normal_idx,
                actions, existing_names,
            )

    goal_pos = task.goal_pos
    if normal_idx is not None:
        # The final phase must run to completion.
        goal_pos = goal_pos | {normal_idx}
        bookkeeping.add(normal_idx)
    init = task.init
    if normal_idx is not None:
        init = init | {normal_idx}
    compiled = replace(
        task,
        facts=facts,
        actions=tuple(actions),
        init=frozenset(init),
        goal_pos=frozenset(goal_pos),
        bookkeeping_facts=frozenset(bookkeeping),
    )
    # Wire up complement init values / maintenance for the negations the
    # compilation introduced (the sweep re-wires pre-existing pairs too).
    return ground_compile_negations(compiled)


def _emit_enumerated(
    a, base_adds, base_dels, conditional, comp, normal_idx, actions, existing_names
) -> None:
    k = len(conditional)
    for bits in range(2**k):
        selected = [conditional[i] for i in range(k) if bits & (1 << i)]
        rejected = [conditional[i] for i in range(k) if not bits & (1 << i)]
        adds = set(base_adds)
        dels = set(base_dels)
        pre = set(a.pre_pos)
        if normal_idx is not None:
            pre.add(normal_idx)
        for e in selected:
            pre |= e.cond_pos
            adds |= e.adds
            dels |= e.deletes
        dels -= adds  # delete-before-add: merged outcome keeps the adds
        # Negating a rejected condition means choosing one violated fact;
        # expand the choices as separate copies.
        choice_sets = [sorted(e.cond_pos) for e in rejected]
        for picks in itertools.product(*choice_sets):
            full_pre = set(pre)
            for fact in picks:
                full_pre.add(comp.negation_of(fact))
            name = _variant_name(a.name, f"ce{bits}", picks, existing_names)
            actions.append(
                GroundAction(
                    name,
                    frozenset(full_pre),
                    frozenset(),
                    (GroundEffect(adds=frozenset(adds), deletes=frozenset(dels)),),
                    a.duration,
                    a.tags,
                )
            )


def _variant_name(base: str, suffix: str, picks, existing_names=frozenset()) -> str:
    inner = base.strip("()")
    parts = inner.split(" ")
    tag = suffix if not picks else f"{suffix}x{'x'.join(str(p) for p in picks)}"
    parts[0] = f"{parts[0]}-{tag}"
    name = "(" + " ".join(parts) + ")"
    if name in existing_names:
        raise NameCollisionError(f"generated action name {name} collides")
    return name


def _emit_phase(
    a,
    base_adds,
    base_dels,
    conditional,
    facts: FactTable,
    comp: _Complements,
    normal_idx: int,
    actions: list,
    bookkeeping: set,
    existing_names: set,
) -> None:
    token = _op_token(a.name)
    evaluate = facts.intern(Atom(f"evaluate-effects-{token}"))
    bookkeeping.add(evaluate)
    tried = []
    for i in range(1, len(conditional) + 1):
        t = facts.intern(Atom(f"tried-{token}-{i}"))
        tried.append(t)
        bookkeeping.add(t)
    # The compiled action: conditional effects removed, phase opened.
    actions.append(
        GroundAction(
            a.name,
            frozenset(a.pre_pos | {normal_idx}),
            frozenset(),
            (
                GroundEffect(
                    adds=frozenset(base_adds | {evaluate}),
                    deletes=frozenset((base_dels | {normal_idx}) - (base_adds | {evaluate})),
                ),
            ),
            a.duration,
            a.tags,
        )
    )
    for i, eff in enumerate(conditional, start=1):
        apply_name = f"(apply-effect-{token}-{i})"
        if apply_name in existing_names:
            raise NameCollisionError(f"generated action name {apply_name} collides")
        actions.append(
            GroundAction(
                apply_name,
                frozenset(eff.cond_pos | {evaluate}),
                frozenset(),
                (
                    GroundEffect(
                        adds=frozenset(eff.adds | {tried[i - 1]}),
                        deletes=frozenset(eff.deletes - eff.adds),
                    ),
                ),
                tags=frozenset({TAG_PHASE}),
            )
        )
        for j, fact in enumerate(sorted(eff.cond_pos), start=1):
            skip_name = f"(skip-effect-{token}-{i}-{j})"
            actions.append(
                GroundAction(
                    skip_name,
                    frozenset({comp.negation_of(fact), evaluate}),
                    frozenset(),
                    (GroundEffect(adds=frozenset({tried[i - 1]})),),
                    tags=frozenset({TAG_PHASE}),
                )
            )
    stop_name = f"(stop-effects-{token})"
    actions.append(
        GroundAction(
            stop_name,
            frozenset({evaluate, *tried}),
            frozenset(),
            (
                GroundEffect(
                    adds=frozenset({normal_idx}),
                    deletes=frozenset({evaluate, *tried}),
                ),
            ),
            tags=frozenset({TAG_PHASE}),
        )
    )
