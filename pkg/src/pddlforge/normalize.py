"""Formula and task normalization: quantifier expansion, negation normal
form, negation compilation via not-* complement predicates, DNF with a
blow-up budget, static-predicate truth propagation, and disjunction
splitting.

The fixed transformation order is: imply elimination -> quantifier
expansion -> NNF -> negation compilation -> (grounding / binding) ->
static simplification -> DNF -> disjunction splitting.  Simplification runs
before DNF because instantiating parameters first collapses most of the
would-be exponential DNFs.

Negation compilation introduces complements only for dynamic, non-derived
predicates: negated static atoms are resolved to TRUE/FALSE once their
arguments are bound, and negated derived atoms keep negation-as-failure
semantics (they are handled by the derived-predicate compilers).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import DnfBudgetError, NameCollisionError
from .model import (
    EQ,
    And,
    Atom,
    ConditionalEffect,
    DerivedRule,
    Exists,
    FALSE,
    Forall,
    Formula,
    Imply,
    LiftedTask,
    Not,
    Operator,
    Or,
    TRUE,
    TimedLiteral,
    is_variable,
)

DEFAULT_DNF_BUDGET = 10**6

GOAL_REACHED = "goal-reached"
GOAL_ACHIEVER_PREFIX = "goal-achiever-"


@dataclass(frozen=True)
class StaticInfo:
    """Predicates unaffected by any effect or timed literal, with their
    initial extensions."""

    static_predicates: frozenset[str]
    extension: dict[str, frozenset[tuple[str, ...]]]

    def is_static(self, pred: str) -> bool:
        return pred == EQ or pred in self.static_predicates

    def holds(self, atom: Atom) -> bool:
        if atom.pred == EQ:
            return atom.args[0] == atom.args[1]
        return atom.args in self.extension.get(atom.pred, frozenset())


def detect_statics(task: LiftedTask) -> StaticInfo:
    """Exactly the predicates absent from every add/delete list.

    Derived predicates are never static (rules change them per state), and
    predicates touched by timed initial literals are not static either.
    """
    affected: set[str] = set()
    for op in task.operators:
        for eff in op.effects + op.end_effects:
            for atom in eff.adds + eff.deletes:
                affected.add(atom.pred)
    for tl in task.timed_literals:
        affected.add(tl.atom.pred)
    static = frozenset(
        p
        for p in task.predicates
        if p not in affected and p not in task.derived_predicates
    )
    extension: dict[str, set[tuple[str, ...]]] = {p: set() for p in static}
    for atom in task.init:
        if atom.pred in extension:
            extension[atom.pred].add(atom.args)
    return StaticInfo(static, {p: frozenset(v) for p, v in extension.items()})


# ---------------------------------------------------------------------------
# Formula transforms


def eliminate_imply(f: Formula) -> Formula:
    if isinstance(f, Imply):
        return Or((Not(eliminate_imply(f.lhs)), eliminate_imply(f.rhs)))
    if isinstance(f, Not):
        return Not(eliminate_imply(f.f))
    if isinstance(f, And):
        return And(tuple(eliminate_imply(p) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(eliminate_imply(p) for p in f.parts))
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.params, eliminate_imply(f.body))
    return f


def expand_quantifiers(f: Formula, task: LiftedTask) -> Formula:
    """Replace quantifiers by conjunctions/disjunctions over the typed
    objects; empty domains yield TRUE for forall and FALSE for exists."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(expand_quantifiers(f.f, task))
    if isinstance(f, And):
        return And(tuple(expand_quantifiers(p, task) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(expand_quantifiers(p, task) for p in f.parts))
    if isinstance(f, Imply):
        return Imply(expand_quantifiers(f.lhs, task), expand_quantifiers(f.rhs, task))
    if isinstance(f, (Forall, Exists)):
        body = f.body
        expansions = [body]
        for var, ty in f.params:
            objs = task.objects_of_type(ty)
            expansions = [
                _subst_one(b, var, obj) for b in expansions for obj in objs
            ]
        expanded = tuple(expand_quantifiers(b, task) for b in expansions)
        return And(expanded) if isinstance(f, Forall) else Or(expanded)
    raise TypeError(f"not a formula: {f!r}")


def _subst_one(f: Formula, var: str, obj: str) -> Formula:
    from .model import substitute

    return substitute(f, {var: obj})


def to_nnf(f: Formula) -> Formula:
    """Push negation down to atoms; eliminates double negation.  Quantifiers
    are handled (negation flips them) so NNF may run before expansion."""
    if isinstance(f, Imply):
        return to_nnf(Or((Not(f.lhs), f.rhs)))
    if isinstance(f, Atom):
        return f
    if isinstance(f, And):
        return And(tuple(to_nnf(p) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(to_nnf(p) for p in f.parts))
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.params, to_nnf(f.body))
    if isinstance(f, Not):
        g = f.f
        if isinstance(g, Atom):
            return f
        if isinstance(g, Not):
            return to_nnf(g.f)
        if isinstance(g, And):
            return Or(tuple(to_nnf(Not(p)) for p in g.parts))
        if isinstance(g, Or):
            return And(tuple(to_nnf(Not(p)) for p in g.parts))
        if isinstance(g, Imply):
            return to_nnf(Not(Or((Not(g.lhs), g.rhs))))
        if isinstance(g, Forall):
            return Exists(g.params, to_nnf(Not(g.body)))
        if isinstance(g, Exists):
            return Forall(g.params, to_nnf(Not(g.body)))
    raise TypeError(f"not a formula: {f!r}")


def negated_dynamic_predicates(task: LiftedTask, statics: StaticInfo) -> set[str]:
    """Dynamic, non-derived predicates that occur negated anywhere in the
    task's formulas (NNF assumed, so negation sits directly on atoms)."""
    found: set[str] = set()

    def scan(f: Formula) -> None:
        if isinstance(f, Not):
            if isinstance(f.f, Atom):
                pred = f.f.pred
                if not statics.is_static(pred) and pred not in task.derived_predicates:
                    found.add(pred)
            else:
                scan(f.f)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                scan(p)
        elif isinstance(f, Imply):
            scan(f.lhs)
            scan(f.rhs)
        elif isinstance(f, (Forall, Exists)):
            scan(f.body)

    for op in task.operators:
        scan(op.precondition)
        for eff in op.effects + op.end_effects:
            scan(eff.condition)
        if op.cond_over is not None:
            scan(op.cond_over)
        if op.cond_end is not None:
            scan(op.cond_end)
    for rule in task.rules:
        scan(rule.body)
    scan(task.goal)
    return found


def not_name(pred: str) -> str:
    return f"not-{pred}"


def compile_negations(task: LiftedTask, statics: StaticInfo | None = None) -> LiftedTask:
    """Introduce not-p complements for every dynamic predicate occurring
    negated (formulas must be in NNF).

    Every effect adding p also deletes not-p and vice versa; init gains the
    complement instances at ground time (only for instances actually in the
    reachable universe, never the full cross product).
    """
    if statics is None:
        statics = detect_statics(task)
    negated = negated_dynamic_predicates(task, statics)
    if not negated:
        return task
    new_predicates = dict(task.predicates)
    for pred in sorted(negated):
        comp = not_name(pred)
        if comp in task.predicates:
            raise NameCollisionError(
                f"cannot introduce {comp}: a predicate of that name exists"
            )
        new_predicates[comp] = task.predicates[pred]

    def rewrite(f: Formula) -> Formula:
        if isinstance(f, Not) and isinstance(f.f, Atom) and f.f.pred in negated:
            return Atom(not_name(f.f.pred), f.f.args)
        if isinstance(f, Not):
            return Not(rewrite(f.f))
        if isinstance(f, And):
            return And(tuple(rewrite(p) for p in f.parts))
        if isinstance(f, Or):
            return Or(tuple(rewrite(p) for p in f.parts))
        if isinstance(f, Imply):
            return Imply(rewrite(f.lhs), rewrite(f.rhs))
        if isinstance(f, (Forall, Exists)):
            return type(f)(f.params, rewrite(f.body))
        return f

    def complement_effect(eff: ConditionalEffect) -> ConditionalEffect:
        adds = list(eff.adds)
        dels = list(eff.deletes)
        for atom in eff.deletes:
            if atom.pred in negated:
                adds.append(Atom(not_name(atom.pred), atom.args))
        for atom in eff.adds:
            if atom.pred in negated:
                dels.append(Atom(not_name(atom.pred), atom.args))
        return ConditionalEffect(
            rewrite(eff.condition), tuple(adds), tuple(dels), eff.params
        )

    new_ops = tuple(
        replace(
            op,
            precondition=rewrite(op.precondition),
            effects=tuple(complement_effect(e) for e in op.effects),
            cond_over=None if op.cond_over is None else rewrite(op.cond_over),
            cond_end=None if op.cond_end is None else rewrite(op.cond_end),
            end_effects=tuple(complement_effect(e) for e in op.end_effects),
        )
        for op in task.operators
    )
    new_rules = tuple(
        DerivedRule(r.head, r.params, rewrite(r.body)) for r in task.rules
    )
    # Complements for init are materialized at grounding time; here we only
    # complement the *declared* init when the task is used directly (small
    # fixtures).  The grounder recomputes them over its reachable universe.
    return replace(
        task,
        predicates=new_predicates,
        operators=new_ops,
        rules=new_rules,
        goal=rewrite(task.goal),
    )


def complemented_predicates(task: LiftedTask) -> set[str]:
    """Predicates p for which a not-p complement predicate is declared."""
    return {
        p
        for p in task.predicates
        if not_name(p) in task.predicates and not p.startswith("not-")
    }


def simplify(
    f: Formula,
    statics: StaticInfo,
    binding: dict[str, str] | None = None,
) -> Formula:
    """Replace fully bound static atoms by their initial-state truth value
    and propagate TRUE/FALSE upward."""
    binding = binding or {}

    def walk(f: Formula) -> Formula:
        if isinstance(f, Atom):
            g = f.substitute(binding)
            if statics.is_static(g.pred) and g.is_ground():
                return TRUE if statics.holds(g) else FALSE
            return g
        if isinstance(f, Not):
            inner = walk(f.f)
            if inner == TRUE:
                return FALSE
            if inner == FALSE:
                return TRUE
            return Not(inner)
        if isinstance(f, And):
            parts = []
            for p in f.parts:
                q = walk(p)
                if q == FALSE:
                    return FALSE
                if q == TRUE:
                    continue
                parts.append(q)
            if not parts:
                return TRUE
            if len(parts) == 1:
                return parts[0]
            return And(tuple(parts))
        if isinstance(f, Or):
            parts = []
            for p in f.parts:
                q = walk(p)
                if q == TRUE:
                    return TRUE
                if q == FALSE:
                    continue
                parts.append(q)
            if not parts:
                return FALSE
            if len(parts) == 1:
                return parts[0]
            return Or(tuple(parts))
        if isinstance(f, Imply):
            return walk(Or((Not(f.lhs), f.rhs)))
        if isinstance(f, (Forall, Exists)):
            inner_binding = {
                k: v for k, v in binding.items() if k not in {v_ for v_, _ in f.params}
            }
            sub = simplify(f.body, statics, inner_binding)
            # Only the domain-independent collapses are safe here: a forall
            # over an empty domain is TRUE and an exists FALSE, so the
            # opposite truth value must survive until quantifier expansion.
            if sub == TRUE and isinstance(f, Forall):
                return TRUE
            if sub == FALSE and isinstance(f, Exists):
                return FALSE
            return type(f)(f.params, sub)
        raise TypeError(f"not a formula: {f!r}")

    return walk(f)


def count_dnf_disjuncts(f: Formula) -> int:
    """Projected disjunct count of the DNF of an NNF, quantifier-free
    formula (without building it)."""
    if isinstance(f, Atom):
        return 1
    if isinstance(f, Not):
        return 1
    if isinstance(f, Or):
        return sum(count_dnf_disjuncts(p) for p in f.parts)
    if isinstance(f, And):
        n = 1
        for p in f.parts:
            n *= count_dnf_disjuncts(p)
        return n
    raise TypeError(f"to_dnf requires quantifier-free NNF input, got {f!r}")


def to_dnf(f: Formula, budget: int = DEFAULT_DNF_BUDGET, context: str = "") -> Formula:
    """Distribute conjunction over disjunction until none remains above a
    disjunction.  Raises DnfBudgetError before expanding past `budget`.

    Output shape: Or of And of literals (each literal an atom or a negated
    atom), even for single-disjunct results.
    """
    projected = count_dnf_disjuncts(f)
    if projected > budget:
        raise DnfBudgetError(projected, budget, context)

    def literals(g: Formula) -> list[tuple[Formula, ...]]:
        if isinstance(g, (Atom, Not)):
            return [(g,)]
        if isinstance(g, Or):
            out: list[tuple[Formula, ...]] = []
            for p in g.parts:
                out.extend(literals(p))
            return out
        if isinstance(g, And):
            combos: list[tuple[Formula, ...]] = [()]
            for p in g.parts:
                part_lists = literals(p)
                combos = [c + d for c in combos for d in part_lists]
            return combos
        raise TypeError(f"to_dnf requires quantifier-free NNF input, got {g!r}")

    disjuncts = []
    seen = set()
    for combo in literals(f):
        # drop duplicate literals inside a conjunct, keep first occurrence
        uniq = tuple(dict.fromkeys(combo))
        if uniq not in seen:
            seen.add(uniq)
            disjuncts.append(And(uniq))
    return Or(tuple(disjuncts))


def dnf_disjuncts(f: Formula) -> tuple[And, ...]:
    """The conjunctive disjuncts of a to_dnf output."""
    if isinstance(f, Or):
        out = []
        for p in f.parts:
            if isinstance(p, And):
                out.append(p)
            else:
                out.append(And((p,)))
        return tuple(out)
    if isinstance(f, And):
        return (f,)
    return (And((f,)),)


def is_dnf(f: Formula) -> bool:
    """No conjunction above a disjunction; negation only on atoms."""

    def literal(g: Formula) -> bool:
        return isinstance(g, Atom) or (isinstance(g, Not) and isinstance(g.f, Atom))

    def conjunct(g: Formula) -> bool:
        if isinstance(g, And):
            return all(literal(p) for p in g.parts)
        return literal(g)

    if isinstance(f, Or):
        return all(conjunct(p) for p in f.parts)
    return conjunct(f)


# ---------------------------------------------------------------------------
# Task-level splitting (lifted)


def split_disjunctions(task: LiftedTask, budget: int = DEFAULT_DNF_BUDGET) -> LiftedTask:
    """Split DNF preconditions/effect conditions/goal per transformation
    step (4).  Assumes formulas are ground-free of statics or already
    simplified; quantifier-free NNF is required.

    Operators with an n-disjunct precondition become n copies named
    <op>-dnf<i>; effects with n-disjunct conditions become n effect copies;
    a goal with n > 1 disjuncts becomes goal-reached plus n achiever
    operators.
    """
    new_ops: list[Operator] = []
    existing = {op.name for op in task.operators}
    for op in task.operators:
        pre = to_dnf(op.precondition, budget, f"operator {op.name}")
        pre_disjuncts = dnf_disjuncts(pre)
        effects: list[ConditionalEffect] = []
        for eff in op.effects:
            cond = to_dnf(eff.condition, budget, f"operator {op.name} effect")
            for d in dnf_disjuncts(cond):
                effects.append(
                    ConditionalEffect(_unwrap(d), eff.adds, eff.deletes, eff.params)
                )
        if len(pre_disjuncts) == 1:
            new_ops.append(
                replace(op, precondition=_unwrap(pre_disjuncts[0]), effects=tuple(effects))
            )
        else:
            for i, d in enumerate(pre_disjuncts, start=1):
                name = f"{op.name}-dnf{i}"
                if name in existing:
                    raise NameCollisionError(f"generated operator name {name} collides")
                new_ops.append(
                    replace(
                        op,
                        name=name,
                        precondition=_unwrap(d),
                        effects=tuple(effects),
                    )
                )

    goal = to_dnf(task.goal, budget, "goal")
    goal_disjuncts = dnf_disjuncts(goal)
    new_predicates = dict(task.predicates)
    bookkeeping_preds = set(task.bookkeeping_predicates)
    bookkeeping_ops = set(task.bookkeeping_operators)
    if len(goal_disjuncts) > 1:
        if GOAL_REACHED in task.predicates:
            raise NameCollisionError(f"predicate {GOAL_REACHED} already exists")
        new_predicates[GOAL_REACHED] = ()
        bookkeeping_preds.add(GOAL_REACHED)
        for i, d in enumerate(goal_disjuncts, start=1):
            name = f"{GOAL_ACHIEVER_PREFIX}{i}"
            if name in existing:
                raise NameCollisionError(f"generated operator name {name} collides")
            new_ops.append(
                Operator(
                    name,
                    (),
                    _unwrap(d),
                    (ConditionalEffect(TRUE, (Atom(GOAL_REACHED),), ()),),
                )
            )
            bookkeeping_ops.add(name)
        new_goal: Formula = Atom(GOAL_REACHED)
    elif not goal_disjuncts:
        new_goal = FALSE
    else:
        new_goal = _unwrap(goal_disjuncts[0])

    new_ops.sort(key=lambda o: o.name)
    return replace(
        task,
        operators=tuple(new_ops),
        predicates=new_predicates,
        goal=new_goal,
        bookkeeping_predicates=frozenset(bookkeeping_preds),
        bookkeeping_operators=frozenset(bookkeeping_ops),
    )


def _unwrap(d: And) -> Formula:
    if isinstance(d, And) and len(d.parts) == 1:
        return d.parts[0]
    return d


# ---------------------------------------------------------------------------
# Whole-task lifted normalization (pre-grounding part of the chain)


def normalize_task(task: LiftedTask, statics: StaticInfo | None = None) -> LiftedTask:
    """imply elimination + NNF + negation compilation on every formula.

    Quantifiers remain: they are expanded per binding by the grounder, which
    runs simplification and DNF afterwards.
    """
    if statics is None:
        statics = detect_statics(task)

    def norm(f: Formula) -> Formula:
        return to_nnf(eliminate_imply(f))

    ops = tuple(
        replace(
            op,
            precondition=norm(op.precondition),
            effects=tuple(
                ConditionalEffect(norm(e.condition), e.adds, e.deletes, e.params)
                for e in op.effects
            ),
            cond_over=None if op.cond_over is None else norm(op.cond_over),
            cond_end=None if op.cond_end is None else norm(op.cond_end),
            end_effects=tuple(
                ConditionalEffect(norm(e.condition), e.adds, e.deletes, e.params)
                for e in op.end_effects
            ),
        )
        for op in task.operators
    )
    rules = tuple(DerivedRule(r.head, r.params, norm(r.body)) for r in task.rules)
    normalized = replace(task, operators=ops, rules=rules, goal=norm(task.goal))
    return compile_negations(normalized, statics)
