"""Compilation of timed initial literals into plain durative PDDL.

A single wrapper action (duration = last timestamp) opens a window in
which a forced chain of literal actions fires the timed literals group by
group; literals-done becomes a goal conjunct so the chain cannot be
skipped, and wrapper-started gates every original action.  Growth is
linear: m+1 new actions and m+4 new facts for m distinct timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import InputError, NameCollisionError, ValidityError
from .model import (
    And,
    Atom,
    ConditionalEffect,
    Formula,
    LiftedTask,
    Operator,
    TRUE,
    TimedLiteral,
    conj,
)

WRAPPER = "wrapper"
NO_WRAPPER = Atom("no-wrapper")
WRAPPER_STARTED = Atom("wrapper-started")
WRAPPER_ACTIVE = Atom("wrapper-active")
LITERALS_DONE = Atom("literals-done")


def _literal_started(i: int) -> Atom:
    return Atom(f"literal-{i}-started")


@dataclass(frozen=True)
class TilSchedule:
    """Distinct timestamps with their literal groups; horizon is the last
    occurrence time."""

    timestamps: tuple[Fraction, ...]
    groups: tuple[tuple[TimedLiteral, ...], ...]

    @property
    def horizon(self) -> Fraction:
        return self.timestamps[-1]

    @property
    def durations(self) -> tuple[Fraction, ...]:
        prev = Fraction(0)
        out = []
        for t in self.timestamps:
            out.append(t - prev)
            prev = t
        return tuple(out)


def build_schedule(literals: tuple[TimedLiteral, ...]) -> TilSchedule:
    if not literals:
        raise ValidityError("no timed literals to schedule")
    by_time: dict[Fraction, list[TimedLiteral]] = {}
    for tl in literals:
        by_time.setdefault(tl.time, []).append(tl)
    times = tuple(sorted(by_time))
    groups = tuple(
        tuple(
            sorted(
                by_time[t],
                key=lambda tl: (tl.atom.pred, tl.atom.args, not tl.positive),
            )
        )
        for t in times
    )
    if times[0] <= 0:
        raise ValidityError("timed literals must occur strictly after time 0")
    return TilSchedule(times, groups)


def compile_timed_literals(task: LiftedTask) -> LiftedTask:
    """Emit the wrapper/literal-action encoding; the output contains zero
    TimedLiteral entries.

    Requires a durative task (the compilation targets durational PDDL) with
    at least one timed literal.
    """
    if not task.timed_literals:
        raise ValidityError("task has no timed initial literals")
    if not any(op.durative for op in task.operators):
        raise ValidityError(
            "timed-literal compilation targets durative tasks; the input "
            "has no durative action"
        )
    for atom in (NO_WRAPPER, WRAPPER_STARTED, WRAPPER_ACTIVE, LITERALS_DONE):
        if atom.pred in task.predicates:
            raise NameCollisionError(f"predicate {atom.pred} already exists")
    if any(op.name == WRAPPER for op in task.operators):
        raise NameCollisionError(f"operator {WRAPPER} already exists")

    schedule = build_schedule(task.timed_literals)
    m = len(schedule.timestamps)

    predicates = dict(task.predicates)
    for atom in (NO_WRAPPER, WRAPPER_STARTED, WRAPPER_ACTIVE, LITERALS_DONE):
        predicates[atom.pred] = ()
    for i in range(1, m + 1):
        predicates[_literal_started(i).pred] = ()

    wrapper = Operator(
        name=WRAPPER,
        params=(),
        precondition=NO_WRAPPER,
        effects=(
            ConditionalEffect(
                TRUE,
                (WRAPPER_STARTED, WRAPPER_ACTIVE, _literal_started(1)),
                (NO_WRAPPER,),
            ),
        ),
        duration=schedule.horizon,
        cond_over=TRUE,
        cond_end=TRUE,
        end_effects=(ConditionalEffect(TRUE, (), (WRAPPER_ACTIVE,)),),
    )

    literal_ops = []
    for i in range(1, m + 1):
        group = schedule.groups[i - 1]
        adds = tuple(tl.atom for tl in group if tl.positive)
        dels = tuple(tl.atom for tl in group if not tl.positive)
        chain_adds = (_literal_started(i + 1),) if i < m else (LITERALS_DONE,)
        literal_ops.append(
            Operator(
                name=f"literal-{i}",
                params=(),
                precondition=TRUE,
                effects=(),
                duration=schedule.durations[i - 1],
                cond_over=And((WRAPPER_ACTIVE, _literal_started(i))),
                cond_end=TRUE,
                end_effects=(
                    ConditionalEffect(
                        TRUE,
                        adds + chain_adds,
                        dels + (_literal_started(i),),
                    ),
                ),
            )
        )

    def gate(op: Operator) -> Operator:
        pre = op.precondition
        if pre == TRUE:
            new_pre: Formula = And((WRAPPER_STARTED,))
        elif isinstance(pre, And):
            new_pre = And((WRAPPER_STARTED,) + pre.parts)
        else:
            new_pre = And((WRAPPER_STARTED, pre))
        return replace(op, precondition=new_pre)

    operators = tuple(
        sorted(
            [gate(op) for op in task.operators] + [wrapper] + literal_ops,
            key=lambda o: o.name,
        )
    )

    goal = task.goal
    if goal == TRUE:
        new_goal: Formula = And((LITERALS_DONE,))
    elif isinstance(goal, And):
        new_goal = And((LITERALS_DONE,) + goal.parts)
    else:
        new_goal = And((LITERALS_DONE, goal))

    bookkeeping = set(task.bookkeeping_predicates)
    bookkeeping.update(
        {NO_WRAPPER.pred, WRAPPER_STARTED.pred, WRAPPER_ACTIVE.pred, LITERALS_DONE.pred}
    )
    bookkeeping.update(_literal_started(i).pred for i in range(1, m + 1))

    return replace(
        task,
        predicates=predicates,
        operators=operators,
        init=frozenset(task.init | {NO_WRAPPER}),
        timed_literals=(),
        goal=new_goal,
        bookkeeping_predicates=frozenset(bookkeeping),
        bookkeeping_operators=frozenset(
            set(task.bookkeeping_operators)
            | {WRAPPER}
            | {f"literal-{i}" for i in range(1, m + 1)}
        ),
    )


# ---------------------------------------------------------------------------
# Structural trace extraction


def extract_til_trace(
    plan: list[tuple[Fraction, str]], task: LiftedTask
) -> list[TimedLiteral]:
    """Recover the (time, literal) events induced by the literal-action
    chain of a compiled task.

    The plan is a list of (start time, action name) pairs.  The wrapper
    must start at time 0 and the literal actions must run back to back
    inside the wrapper-active window; a gap or overlap in the chain is an
    error (it would violate the over-all conditions)."""
    by_name = {op.name: op for op in task.operators}
    if WRAPPER not in by_name:
        raise InputError("task has no wrapper action; is it til-compiled?")
    chain_ops = sorted(
        (name for name in by_name if name.startswith("literal-")),
        key=lambda n: int(n.split("-")[1]),
    )
    starts = {name: [] for name in by_name}
    for t, name in plan:
        if name not in by_name:
            raise InputError(f"unknown action {name} in plan")
        starts.setdefault(name, []).append(t)
    if not chain_ops:
        return []
    wrapper_starts = starts.get(WRAPPER, [])
    if wrapper_starts != [Fraction(0)]:
        raise InputError("the wrapper must be scheduled exactly once, at time 0")
    horizon = by_name[WRAPPER].duration
    events: list[TimedLiteral] = []
    clock = Fraction(0)
    for i, name in enumerate(chain_ops, start=1):
        op = by_name[name]
        times = starts.get(name, [])
        if len(times) != 1:
            raise InputError(f"{name} must be scheduled exactly once")
        start = times[0]
        if start != clock:
            raise InputError(
                f"{name} starts at {start}, expected {clock}: the literal "
                "chain must run back to back"
            )
        end = start + op.duration
        if end > horizon:
            raise InputError(f"{name} ends after the wrapper-active window")
        for eff in op.end_effects:
            for atom in eff.adds:
                if atom.pred.startswith("literal-") or atom == LITERALS_DONE:
                    continue
                events.append(TimedLiteral(end, atom, True))
            for atom in eff.deletes:
                if atom.pred.startswith("literal-"):
                    continue
                events.append(TimedLiteral(end, atom, False))
        clock = end
    return events
