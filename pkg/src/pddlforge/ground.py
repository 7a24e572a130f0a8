"""Instantiation of operators and rules over constants, static-fact
filtering, and relaxed-planning-graph reachability pruning.

Binding enumeration sorts parameters by ascending domain size and checks
static precondition atoms eagerly as soon as their arguments are bound
(join-style pruning); a binding is discarded as soon as any fully bound
static atom is false.  Per-binding formulas then pass through
simplification, DNF, and disjunction splitting, so the emitted ground task
carries fact-set preconditions and conditions.  Negative literals survive
grounding only on derived predicates (negation-as-failure); everything
else was either resolved (statics) or complemented (dynamics).

Fact interning order is deterministic: all literal collections are sorted
before interning, so repeated runs produce identical indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .errors import GroundCapError, NameCollisionError, ValidityError
from .model import (
    And,
    Atom,
    FactTable,
    Formula,
    GroundAction,
    GroundEffect,
    GroundRule,
    GroundTask,
    LiftedTask,
    Not,
    Or,
    TRUE,
    FALSE,
    is_variable,
    stratify_predicates,
    substitute,
)
from .normalize import (
    DEFAULT_DNF_BUDGET,
    GOAL_ACHIEVER_PREFIX,
    GOAL_REACHED,
    StaticInfo,
    detect_statics,
    dnf_disjuncts,
    expand_quantifiers,
    normalize_task,
    not_name,
    simplify,
    to_dnf,
)

DEFAULT_GROUND_CAP = 5 * 10**6

BOOKKEEPING_GOAL = "goal-achiever"


@dataclass(frozen=True)
class GroundingReport:
    ops: int
    actions_pre: int
    actions_post: int
    facts_pre: int
    facts_post: int
    rules: int

    def __post_init__(self):
        if self.actions_post > self.actions_pre or self.facts_post > self.facts_pre:
            raise ValidityError("grounding report: post counts exceed pre counts")

    def to_json(self) -> dict:
        return {
            "ops": self.ops,
            "actions_pre": self.actions_pre,
            "actions_post": self.actions_post,
            "facts_pre": self.facts_pre,
            "facts_post": self.facts_post,
            "rules": self.rules,
        }


def complement_atom(atom: Atom, predicates: set[str] | frozenset[str]) -> Atom | None:
    """The not-* partner of a fact, when both predicates are declared."""
    if atom.pred.startswith("not-"):
        base = atom.pred[4:]
        if base in predicates:
            return Atom(base, atom.args)
        return None
    partner = not_name(atom.pred)
    if partner in predicates:
        return Atom(partner, atom.args)
    return None


def _canonicalize(adds: set[Atom], dels: set[Atom], predicates) -> None:
    """Resolve delete-before-add per effect: a fact both added and deleted
    ends up true, so it leaves the delete list and its complement (if any)
    leaves the add list."""
    for f in sorted(adds & dels, key=lambda a: (a.pred, a.args)):
        dels.discard(f)
        c = complement_atom(f, predicates)
        if c is not None:
            adds.discard(c)


# ---------------------------------------------------------------------------
# Literal extraction from DNF disjuncts


def _disjunct_literals(
    d: And, task: LiftedTask, where: str
) -> tuple[list[Atom], list[Atom]]:
    pos: list[Atom] = []
    neg: list[Atom] = []
    parts = d.parts if isinstance(d, And) else (d,)
    for lit in parts:
        if isinstance(lit, Atom):
            pos.append(lit)
        elif isinstance(lit, Not) and isinstance(lit.f, Atom):
            if lit.f.pred not in task.derived_predicates:
                raise ValidityError(
                    f"{where}: negated non-derived atom {lit.f} survived "
                    "normalization (did compile_negations run?)"
                )
            neg.append(lit.f)
        else:
            raise ValidityError(f"{where}: non-literal {lit!r} in DNF disjunct")
    return pos, neg


# ---------------------------------------------------------------------------
# Binding enumeration


def _flat_conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for p in f.parts:
            out.extend(_flat_conjuncts(p))
        return out
    return [f]


def _static_checks(pre: Formula, statics: StaticInfo):
    """(atom, positive) pairs from top-level conjuncts usable for eager
    pruning during binding enumeration."""
    checks = []
    for c in _flat_conjuncts(pre):
        if isinstance(c, Atom) and statics.is_static(c.pred):
            checks.append((c, True))
        elif isinstance(c, Not) and isinstance(c.f, Atom) and statics.is_static(c.f.pred):
            checks.append((c.f, False))
    return checks


def _enumerate_bindings(
    task: LiftedTask,
    params: tuple[tuple[str, str], ...],
    statics: StaticInfo,
    checks,
):
    """Yield type-consistent bindings, pruning on fully bound static atoms.

    Parameters are assigned in ascending domain-size order; yielded
    bindings map every parameter.
    """
    domains = {v: task.objects_of_type(t) for v, t in params}
    order = sorted(domains, key=lambda v: (len(domains[v]), v))
    by_trigger: dict[str, list] = {v: [] for v in order}
    ground_checks = []
    for atom, positive in checks:
        vars_ = [a for a in atom.args if is_variable(a)]
        vars_ = [v for v in vars_ if v in domains]
        if not vars_:
            ground_checks.append((atom, positive))
        else:
            trigger = max(vars_, key=order.index)
            by_trigger[trigger].append((atom, positive))
    for atom, positive in ground_checks:
        if statics.holds(atom) != positive:
            return  # statically unsatisfiable for every binding

    binding: dict[str, str] = {}

    def assign(i: int):
        if i == len(order):
            yield dict(binding)
            return
        var = order[i]
        for obj in domains[var]:
            binding[var] = obj
            ok = True
            for atom, positive in by_trigger[var]:
                g = atom.substitute(binding)
                if g.is_ground() and statics.holds(g) != positive:
                    ok = False
                    break
            if ok:
                yield from assign(i + 1)
        binding.pop(var, None)

    yield from assign(0)


# ---------------------------------------------------------------------------
# Instantiation


class _Builder:
    def __init__(self, task: LiftedTask, statics: StaticInfo):
        self.task = task
        self.statics = statics
        self.facts = FactTable()
        self.predset = frozenset(task.predicates)

    def intern_atoms(self, atoms) -> frozenset[int]:
        return frozenset(
            self.facts.intern(a) for a in sorted(atoms, key=lambda a: (a.pred, a.args))
        )

    def prepare(self, f: Formula, binding: dict[str, str]) -> Formula:
        g = substitute(f, binding)
        g = expand_quantifiers(g, self.task)
        return simplify(g, self.statics)


def instantiate(
    task: LiftedTask,
    statics: StaticInfo | None = None,
    dnf_budget: int = DEFAULT_DNF_BUDGET,
    ground_cap: int = DEFAULT_GROUND_CAP,
) -> GroundTask:
    """Ground a normalized task (imply-free, NNF, negations compiled).

    Emits fact-set actions and rules; the goal is split through
    goal-reached achievers when its DNF has several disjuncts, so achievers
    are themselves subject to reachability filtering.
    """
    if any(op.durative for op in task.operators):
        raise ValidityError("cannot ground a durative task; compile it first")
    statics = statics or detect_statics(task)
    b = _Builder(task, statics)
    strata = stratify_predicates(task.rules)
    num_strata = (max(strata.values()) + 1) if strata else 0

    actions: list[GroundAction] = []
    for op in task.operators:
        checks = _static_checks(op.precondition, statics)
        for binding in _enumerate_bindings(task, op.params, statics, checks):
            if len(actions) > ground_cap:
                raise GroundCapError(
                    f"more than {ground_cap} ground actions; raise the cap "
                    "to proceed"
                )
            pre = b.prepare(op.precondition, binding)
            if pre == FALSE:
                continue
            pre_dnf = dnf_disjuncts(to_dnf(pre, dnf_budget, f"operator {op.name}"))
            effects = _ground_effects(op, binding, b, dnf_budget)
            if not effects:
                effects = (GroundEffect(),)
            args = tuple(binding[v] for v, _ in op.params)
            multi = len(pre_dnf) > 1
            for i, disjunct in enumerate(pre_dnf, start=1):
                pos, neg = _disjunct_literals(disjunct, task, f"operator {op.name}")
                opname = f"{op.name}-dnf{i}" if multi else op.name
                name = "(" + " ".join((opname,) + args) + ")" if args else f"({opname})"
                tags = (
                    frozenset({"bookkeeping"})
                    if op.name in task.bookkeeping_operators
                    else frozenset()
                )
                actions.append(
                    GroundAction(
                        name,
                        b.intern_atoms(pos),
                        b.intern_atoms(neg),
                        effects,
                        duration=None,
                        tags=tags,
                    )
                )

    rules: list[GroundRule] = []
    for rule in task.rules:
        checks = _static_checks(rule.body, statics)
        for binding in _enumerate_bindings(task, rule.params, statics, checks):
            body = b.prepare(rule.body, binding)
            if body == FALSE:
                continue
            head = rule.head.substitute(binding)
            head_idx = b.facts.intern(head)
            for disjunct in dnf_disjuncts(
                to_dnf(body, dnf_budget, f"rule for {rule.head.pred}")
            ):
                pos, neg = _disjunct_literals(disjunct, task, f"rule {rule.head.pred}")
                if neg:
                    raise ValidityError(
                        f"rule for {rule.head.pred}: negated derived atom in body"
                    )
                rules.append(
                    GroundRule(head_idx, b.intern_atoms(pos), strata[rule.head.pred])
                )

    # Goal: simplify, DNF, split through goal-reached when disjunctive.
    goal = b.prepare(task.goal, {})
    goal_disjuncts = dnf_disjuncts(to_dnf(goal, dnf_budget, "goal"))
    bookkeeping_atoms: set[Atom] = set()
    if goal == FALSE:
        goal_disjuncts = ()
    if len(goal_disjuncts) > 1:
        if GOAL_REACHED in task.predicates:
            raise NameCollisionError(f"predicate {GOAL_REACHED} already exists")
        reached = Atom(GOAL_REACHED)
        reached_idx = b.facts.intern(reached)
        bookkeeping_atoms.add(reached)
        for i, d in enumerate(goal_disjuncts, start=1):
            pos, neg = _disjunct_literals(d, task, "goal")
            actions.append(
                GroundAction(
                    f"({GOAL_ACHIEVER_PREFIX}{i})",
                    b.intern_atoms(pos),
                    b.intern_atoms(neg),
                    (GroundEffect(adds=frozenset({reached_idx})),),
                    tags=frozenset({BOOKKEEPING_GOAL}),
                )
            )
        goal_pos: frozenset[int] = frozenset({reached_idx})
        goal_neg: frozenset[int] = frozenset()
    elif not goal_disjuncts:
        # Statically unsatisfiable goal: represent with a fresh unreachable
        # fact so downstream analyses report unsolvability.
        unreachable = Atom("goal-unsatisfiable")
        goal_pos = frozenset({b.facts.intern(unreachable)})
        goal_neg = frozenset()
        bookkeeping_atoms.add(unreachable)
    else:
        pos, neg = _disjunct_literals(goal_disjuncts[0], task, "goal")
        goal_pos = b.intern_atoms(pos)
        goal_neg = b.intern_atoms(neg)

    # Initial state: intern every init atom (statics included; the static
    # filter removes them and records the counts).
    init_idx = set()
    for atom in sorted(task.init, key=lambda a: (a.pred, a.args)):
        init_idx.add(b.facts.intern(atom))

    # Materialize not-p complements in init for the reachable universe only.
    complemented = {
        p for p in task.predicates if not_name(p) in task.predicates
    }
    for idx in range(len(b.facts)):
        atom = b.facts.atom(idx)
        if atom.pred.startswith("not-") and atom.pred[4:] in complemented:
            base = Atom(atom.pred[4:], atom.args)
            if b.facts.get(base) is None or b.facts.get(base) not in init_idx:
                init_idx.add(idx)

    derived_facts = frozenset(
        i
        for i in range(len(b.facts))
        if b.facts.atom(i).pred in task.derived_predicates
    )
    bookkeeping_facts = frozenset(
        i
        for i in range(len(b.facts))
        if b.facts.atom(i).pred in task.bookkeeping_predicates
        or b.facts.atom(i) in bookkeeping_atoms
    )

    return GroundTask(
        facts=b.facts,
        actions=tuple(actions),
        rules=tuple(rules),
        init=frozenset(init_idx),
        goal_pos=goal_pos,
        goal_neg=goal_neg,
        derived_facts=derived_facts,
        bookkeeping_facts=bookkeeping_facts,
        num_strata=num_strata,
    )


def _ground_effects(op, binding, b: _Builder, dnf_budget) -> tuple[GroundEffect, ...]:
    """Ground, simplify, and split the conditional effects of one binding.

    Statically false conditions delete the effect; statically true ones
    become unconditional.
    """
    task = b.task
    out: list[GroundEffect] = []
    for eff in op.effects:
        combos = [{}]
        for var, ty in eff.params:
            objs = task.objects_of_type(ty)
            combos = [{**c, var: o} for c in combos for o in objs]
        for combo in combos:
            full = {**binding, **combo}
            cond = b.prepare(eff.condition, full)
            if cond == FALSE:
                continue
            adds = {a.substitute(full) for a in eff.adds}
            dels = {d.substitute(full) for d in eff.deletes}
            _canonicalize(adds, dels, b.predset)
            if not adds and not dels:
                continue
            add_idx = b.intern_atoms(adds)
            del_idx = b.intern_atoms(dels)
            for disjunct in dnf_disjuncts(
                to_dnf(cond, dnf_budget, f"effect of {op.name}")
            ):
                pos, neg = _disjunct_literals(disjunct, task, f"effect of {op.name}")
                out.append(
                    GroundEffect(
                        b.intern_atoms(pos), b.intern_atoms(neg), add_idx, del_idx
                    )
                )
    # Merge unconditional effects into one so STRIPS actions have exactly
    # one effect.
    unconditional = [e for e in out if e.unconditional]
    conditional = [e for e in out if not e.unconditional]
    merged: list[GroundEffect] = []
    if unconditional:
        adds = frozenset().union(*(e.adds for e in unconditional))
        dels = frozenset().union(*(e.deletes for e in unconditional))
        dels = dels - adds  # delete-before-add, see _canonicalize
        merged.append(GroundEffect(adds=adds, deletes=dels))
    return tuple(merged + conditional)


# ---------------------------------------------------------------------------
# Static-fact filtering


def _remap_task(task: GroundTask, keep: list[int]) -> GroundTask:
    """Rebuild the task over the `keep` subset of facts (old indices)."""
    new_facts = FactTable()
    old_to_new: dict[int, int] = {}
    for old in keep:
        old_to_new[old] = new_facts.intern(task.facts.atom(old))

    def remap(s: frozenset[int]) -> frozenset[int]:
        return frozenset(old_to_new[i] for i in s if i in old_to_new)

    actions = tuple(
        GroundAction(
            a.name,
            remap(a.pre_pos),
            remap(a.pre_neg),
            tuple(
                GroundEffect(
                    remap(e.cond_pos), remap(e.cond_neg), remap(e.adds), remap(e.deletes)
                )
                for e in a.effects
            ),
            a.duration,
            a.tags,
        )
        for a in task.actions
    )
    rules = tuple(
        GroundRule(old_to_new[r.head], remap(r.body), r.stratum)
        for r in task.rules
        if r.head in old_to_new
    )
    return GroundTask(
        facts=new_facts,
        actions=actions,
        rules=rules,
        init=remap(task.init),
        goal_pos=remap(task.goal_pos),
        goal_neg=remap(task.goal_neg),
        derived_facts=remap(task.derived_facts),
        bookkeeping_facts=remap(task.bookkeeping_facts),
        num_strata=task.num_strata,
    )


def filter_static_facts(task: GroundTask) -> GroundTask:
    """Remove facts never added or deleted by any action or rule.

    A static fact is a constant of the dynamics: if initially true it is
    removed from every precondition/condition it appears in; if initially
    false, any action, effect, or rule positively requiring it can never
    apply and is dropped (negative literals on it are simply satisfied).
    Goal facts are kept in the universe so an unsatisfiable goal stays
    representable.
    """
    touched: set[int] = set()
    for a in task.actions:
        for e in a.effects:
            touched |= e.adds
            touched |= e.deletes
    for r in task.rules:
        touched.add(r.head)
    static = frozenset(range(len(task.facts))) - touched
    true_static = static & task.init
    false_static = static - task.init

    def strip(s: frozenset[int]) -> frozenset[int]:
        return s - static

    actions = []
    for a in task.actions:
        if a.pre_pos & false_static:
            continue
        effects = []
        for e in a.effects:
            if e.cond_pos & false_static:
                continue
            effects.append(
                GroundEffect(strip(e.cond_pos), strip(e.cond_neg), e.adds, e.deletes)
            )
        actions.append(
            GroundAction(
                a.name,
                strip(a.pre_pos),
                strip(a.pre_neg),
                tuple(effects) if effects else (GroundEffect(),),
                a.duration,
                a.tags,
            )
        )
    rules = tuple(
        GroundRule(r.head, strip(r.body), r.stratum)
        for r in task.rules
        if not (r.body & false_static)
    )
    goal_keep = (task.goal_pos | task.goal_neg) & static
    filtered = replace(
        task,
        actions=tuple(actions),
        rules=rules,
        goal_pos=task.goal_pos - (true_static - goal_keep),
        goal_neg=task.goal_neg - (false_static - goal_keep),
    )
    keep = [i for i in range(len(task.facts)) if i not in static or i in goal_keep]
    return _remap_task(filtered, keep)


# ---------------------------------------------------------------------------
# Relaxed reachability filtering


def relaxed_reachable_facts(task: GroundTask) -> frozenset[int]:
    """Fixpoint of init under delete-free action application and rules;
    negative literals are treated as satisfiable (sound for pruning)."""
    reached = set(task.init)
    frontier = True
    while frontier:
        frontier = False
        for r in task.rules:
            if r.head not in reached and r.body <= reached:
                reached.add(r.head)
                frontier = True
        for a in task.actions:
            if not a.pre_pos <= reached:
                continue
            for e in a.effects:
                if e.cond_pos <= reached and not e.adds <= reached:
                    reached |= e.adds
                    frontier = True
    return frozenset(reached)


def relaxed_reachability_filter(task: GroundTask) -> GroundTask:
    """Drop actions whose precondition is not relaxed-reachable from init,
    and facts outside the reachable set (goal facts are kept so
    unsolvability stays representable).  Idempotent."""
    reached = relaxed_reachable_facts(task)
    actions = []
    for a in task.actions:
        if not a.pre_pos <= reached:
            continue
        effects = []
        for e in a.effects:
            if not e.cond_pos <= reached:
                continue  # can never fire
            effects.append(
                GroundEffect(
                    e.cond_pos,
                    frozenset(i for i in e.cond_neg if i in reached),
                    e.adds,
                    frozenset(i for i in e.deletes if i in reached),
                )
            )
        actions.append(
            GroundAction(
                a.name,
                a.pre_pos,
                frozenset(i for i in a.pre_neg if i in reached),
                tuple(effects) if effects else (GroundEffect(),),
                a.duration,
                a.tags,
            )
        )
    rules = tuple(r for r in task.rules if r.body <= reached)
    retained = sorted(reached | task.goal_pos)
    pruned = replace(
        task,
        actions=tuple(actions),
        rules=rules,
        goal_neg=frozenset(i for i in task.goal_neg if i in reached),
    )
    return _remap_task(pruned, retained)


# ---------------------------------------------------------------------------
# Ground-level negation compilation


def ground_compile_negations(task: GroundTask) -> GroundTask:
    """Replace negative literals on non-derived facts by not-* complement
    facts maintained in every effect, with init complements for the
    universe instances.  Negative literals on derived facts must have been
    compiled away (fixpoint scheme) beforehand.

    Complement pairs already present in the universe (from earlier stages
    that interned not-* facts directly) are re-wired as well, so the pass
    is idempotent and usable as a consistency sweep.
    """
    negated: set[int] = set(task.goal_neg)
    for a in task.actions:
        negated |= a.pre_neg
        for e in a.effects:
            negated |= e.cond_neg
    for i in sorted(negated):
        if i in task.derived_facts:
            raise ValidityError(
                f"negated derived fact {task.fact_name(i)}: compile derived "
                "predicates first"
            )

    facts = FactTable()  # copy; existing indices are preserved (append-only)
    for i in range(len(task.facts)):
        facts.intern(task.facts.atom(i))
    comp_of: dict[int, int] = {}
    for i in sorted(negated):
        atom = facts.atom(i)
        if atom.pred.startswith("not-"):
            partner = Atom(atom.pred[4:], atom.args)
        else:
            partner = Atom(not_name(atom.pred), atom.args)
        comp_of[i] = facts.intern(partner)

    # Complement maintenance must cover every complemented pair present in
    # the universe, including pairs introduced by earlier compilations.
    pairs: dict[int, int] = {}
    for i in range(len(facts)):
        atom = facts.atom(i)
        if atom.pred.startswith("not-"):
            j = facts.get(Atom(atom.pred[4:], atom.args))
            if j is not None:
                pairs[j] = i
                pairs[i] = j
    if not negated and not pairs:
        return task

    def fix_effect(e: GroundEffect) -> GroundEffect:
        adds = set(e.adds)
        dels = set(e.deletes)
        for i in e.deletes:
            if i in pairs:
                adds.add(pairs[i])
        for i in e.adds:
            if i in pairs:
                dels.add(pairs[i])
        cond_pos = set(e.cond_pos) | {comp_of[i] for i in e.cond_neg}
        return GroundEffect(frozenset(cond_pos), frozenset(), frozenset(adds), frozenset(dels))

    actions = tuple(
        GroundAction(
            a.name,
            frozenset(a.pre_pos | {comp_of[i] for i in a.pre_neg}),
            frozenset(),
            tuple(fix_effect(e) for e in a.effects),
            a.duration,
            a.tags,
        )
        for a in task.actions
    )
    init = set(task.init)
    for i, j in sorted(pairs.items()):
        if facts.atom(j).pred.startswith("not-") and i not in task.init:
            init.add(j)
    bookkeeping = set(task.bookkeeping_facts)
    for i in sorted(negated):
        if i in task.bookkeeping_facts:
            bookkeeping.add(comp_of[i])
    return replace(
        task,
        facts=facts,
        actions=actions,
        init=frozenset(init),
        goal_pos=frozenset(task.goal_pos | {comp_of[i] for i in task.goal_neg}),
        goal_neg=frozenset(),
        bookkeeping_facts=frozenset(bookkeeping),
    )


# ---------------------------------------------------------------------------
# Pipeline


def ground_pipeline(
    task: LiftedTask,
    dnf_budget: int = DEFAULT_DNF_BUDGET,
    ground_cap: int = DEFAULT_GROUND_CAP,
) -> tuple[GroundTask, GroundingReport]:
    """normalize -> instantiate -> filter statics -> reachability-prune,
    with the measurement counts of each stage."""
    statics = detect_statics(task)
    normalized = normalize_task(task, statics)
    # Complements invalidate the static table (new predicates); recompute.
    g = instantiate(
        normalized,
        detect_statics(normalized),
        dnf_budget=dnf_budget,
        ground_cap=ground_cap,
    )
    facts_pre = len(g.facts)
    actions_pre = len(g.actions)
    g = filter_static_facts(g)
    facts_post = len(g.facts)
    g = relaxed_reachability_filter(g)
    report = GroundingReport(
        ops=len(task.operators),
        actions_pre=actions_pre,
        actions_post=len(g.actions),
        facts_pre=facts_pre,
        facts_post=facts_post,
        rules=len(g.rules),
    )
    return g, report
