"""Structural metrics: plan-graph lengths (parallel and serialized),
FF-style relaxed plans, an exact shortest-relaxed-plan oracle, brute-force
optimal plans, plan validation, and fact-connectivity distributions.

The oracles here are deliberately simple and exhaustive; they exist to
check the compilations and heuristics on desk-scale fixtures, not to
compete with planners.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import ContractViolation, InputError, ValidityError
from .model import (
    Atom,
    GroundAction,
    GroundTask,
    LiftedTask,
    action_applicable,
    apply_action,
    apply_operator,
    compute_derived_extension,
    evaluate_formula,
    fired_changes,
    ground_closure,
    goal_satisfied,
)
from .compile_ce import PHASE_PREFIXES
from .compile_dp import FIXPOINT_PREFIXES
from .normalize import GOAL_ACHIEVER_PREFIX


class Marker(enum.Enum):
    UNREACHABLE = "unreachable"
    UNSOLVABLE = "unsolvable"
    CAP_EXCEEDED = "cap-exceeded"

    def __str__(self) -> str:
        return self.value


UNREACHABLE = Marker.UNREACHABLE
UNSOLVABLE = Marker.UNSOLVABLE
CAP_EXCEEDED = Marker.CAP_EXCEEDED

# bookkeeping tag -> reserved ground-action name prefixes
BOOKKEEPING_NAME_PREFIXES: dict[str, tuple[str, ...]] = {
    "ce-phase": PHASE_PREFIXES,
    "dp-machinery": FIXPOINT_PREFIXES,
    "goal-achiever": (GOAL_ACHIEVER_PREFIX,),
}


def _require_strips(task: GroundTask, what: str) -> None:
    if not task.is_strips:
        raise ContractViolation(
            f"{what} requires a pure ground STRIPS task; compile conditional "
            "effects, negations, and derived predicates first"
        )


# ---------------------------------------------------------------------------
# Plan graph


@dataclass
class PlanGraph:
    """Layered fact/action sets with binary mutex relations."""

    mode: str  # "parallel" | "serialized"
    fact_layers: list[frozenset[int]] = field(default_factory=list)
    action_layers: list[tuple[int, ...]] = field(default_factory=list)
    fact_mutexes: list[frozenset[tuple[int, int]]] = field(default_factory=list)
    action_mutexes: list[frozenset[tuple[int, int]]] = field(default_factory=list)
    goal_layer: Optional[int] = None
    leveled_off: bool = False


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def build_plangraph(
    task: GroundTask,
    mode: str = "parallel",
    state: Optional[frozenset[int]] = None,
    max_layers: int = 10_000,
) -> PlanGraph:
    """Standard plan graph with NOOPs and binary mutex propagation
    (inconsistent effects, interference, competing needs / inconsistent
    support).  In serialized mode every pair of distinct non-NOOP actions
    is additionally mutex."""
    _require_strips(task, "plangraph")
    if mode not in ("parallel", "serialized"):
        raise ValidityError(f"unknown plangraph mode {mode!r}")
    init = task.init if state is None else state
    graph = PlanGraph(mode=mode)
    # NOOP for fact f is encoded as action index -(f+1).
    n_actions = len(task.actions)
    pre = [a.pre_pos for a in task.actions]
    add = [a.effects[0].adds for a in task.actions]
    dele = [a.effects[0].deletes for a in task.actions]

    def a_pre(i: int) -> frozenset[int]:
        return pre[i] if i >= 0 else frozenset({-i - 1})

    def a_add(i: int) -> frozenset[int]:
        return add[i] if i >= 0 else frozenset({-i - 1})

    def a_del(i: int) -> frozenset[int]:
        return dele[i] if i >= 0 else frozenset()

    facts = frozenset(init)
    fmutex: frozenset[tuple[int, int]] = frozenset()
    graph.fact_layers.append(facts)
    graph.fact_mutexes.append(fmutex)

    for layer in range(max_layers):
        if _goals_reached(task, facts, fmutex):
            graph.goal_layer = layer
            return graph
        # applicable actions (plus NOOPs) at this layer
        acts: list[int] = [-(f + 1) for f in sorted(facts)]
        for i in range(n_actions):
            if pre[i] <= facts and not _mutex_within(pre[i], fmutex):
                acts.append(i)
        amutex: set[tuple[int, int]] = set()
        for x in range(len(acts)):
            for y in range(x + 1, len(acts)):
                i, j = acts[x], acts[y]
                if _actions_mutex(
                    i, j, a_pre, a_add, a_del, fmutex, mode
                ):
                    amutex.add(_pair(i, j))
        next_facts = frozenset(facts | frozenset().union(*(a_add(i) for i in acts)))
        achievers: dict[int, list[int]] = {f: [] for f in next_facts}
        for i in acts:
            for f in a_add(i):
                achievers[f].append(i)
        next_fmutex: set[tuple[int, int]] = set()
        sorted_facts = sorted(next_facts)
        for x in range(len(sorted_facts)):
            for y in range(x + 1, len(sorted_facts)):
                p, q = sorted_facts[x], sorted_facts[y]
                if all(
                    _pair(i, j) in amutex
                    for i in achievers[p]
                    for j in achievers[q]
                    if i != j
                ) and not any(
                    i == j for i in achievers[p] for j in achievers[q]
                ):
                    next_fmutex.add(_pair(p, q))
        graph.action_layers.append(tuple(i for i in acts if i >= 0))
        graph.action_mutexes.append(frozenset(amutex))
        if next_facts == facts and frozenset(next_fmutex) == fmutex:
            graph.leveled_off = True
            graph.fact_layers.append(next_facts)
            graph.fact_mutexes.append(frozenset(next_fmutex))
            return graph
        facts = next_facts
        fmutex = frozenset(next_fmutex)
        graph.fact_layers.append(facts)
        graph.fact_mutexes.append(fmutex)
    raise ValidityError("plan graph did not level off within the layer bound")


def _goals_reached(task, facts, fmutex) -> bool:
    if not task.goal_pos <= facts:
        return False
    goals = sorted(task.goal_pos)
    for x in range(len(goals)):
        for y in range(x + 1, len(goals)):
            if _pair(goals[x], goals[y]) in fmutex:
                return False
    return True


def _mutex_within(facts: frozenset[int], fmutex) -> bool:
    fs = sorted(facts)
    for x in range(len(fs)):
        for y in range(x + 1, len(fs)):
            if _pair(fs[x], fs[y]) in fmutex:
                return True
    return False


def _actions_mutex(i, j, a_pre, a_add, a_del, fmutex, mode) -> bool:
    if mode == "serialized" and i >= 0 and j >= 0:
        return True
    # inconsistent effects / interference
    if a_del(i) & (a_add(j) | a_pre(j)):
        return True
    if a_del(j) & (a_add(i) | a_pre(i)):
        return True
    # competing needs
    for p in a_pre(i):
        for q in a_pre(j):
            if p != q and _pair(p, q) in fmutex:
                return True
    return False


def plangraph_length(
    task: GroundTask, mode: str = "parallel"
) -> Union[int, Marker]:
    """Index of the first layer containing the goals without mutexes, or
    UNREACHABLE when the graph levels off first."""
    graph = build_plangraph(task, mode)
    if graph.goal_layer is None:
        return UNREACHABLE
    return graph.goal_layer


# ---------------------------------------------------------------------------
# Relaxed planning graph and FF-style relaxed plan


@dataclass
class _Rpg:
    level: dict[int, int]
    achiever: dict[int, tuple]  # fact -> ("action", idx) | ("rule", idx) | ("init",)
    rank: dict[int, int]  # derivation order, strictly increasing
    action_level: dict[int, int]
    layers: int


def _build_rpg(task: GroundTask, state: frozenset[int]) -> _Rpg:
    """Relaxed planning graph: no deletes, no mutexes; rules are zero-cost
    achievers closed within each fact layer, negative literals are treated
    as satisfied."""
    level: dict[int, int] = {}
    achiever: dict[int, tuple] = {}
    rank: dict[int, int] = {}
    counter = 0

    def add_fact(f: int, layer: int, ach: tuple) -> bool:
        nonlocal counter
        if f in level:
            return False
        level[f] = layer
        achiever[f] = ach
        rank[f] = counter
        counter += 1
        return True

    for f in sorted(state):
        add_fact(f, 0, ("init",))
    layer = 0
    action_level: dict[int, int] = {}

    def close_rules(layer: int) -> None:
        changed = True
        while changed:
            changed = False
            for ri, r in enumerate(task.rules):
                if r.head not in level and all(b in level and level[b] <= layer for b in r.body):
                    add_fact(r.head, layer, ("rule", ri))
                    changed = True

    close_rules(0)
    while True:
        new: list[tuple[int, int]] = []
        for ai, a in enumerate(task.actions):
            if not all(f in level and level[f] <= layer for f in a.pre_pos):
                continue
            if ai not in action_level:
                action_level[ai] = layer
            for e in a.effects:
                if all(f in level and level[f] <= layer for f in e.cond_pos):
                    for f in sorted(e.adds):
                        if f not in level:
                            new.append((f, ai))
        if not new:
            return _Rpg(level, achiever, rank, action_level, layer)
        layer += 1
        for f, ai in new:
            add_fact(f, layer, ("action", ai))
        close_rules(layer)


def relaxed_plan(
    task: GroundTask, state: Optional[frozenset[int]] = None
) -> Union[list[str], Marker]:
    """FF-style relaxed plan for `state` (default init): goals at their
    first-achievable layer, first-found achiever at the lowest layer,
    preconditions pushed down.  Rules achieve at zero cost and contribute
    no step.  Returns UNSOLVABLE when a goal is relaxed-unreachable."""
    if state is None:
        state = task.init
    rpg = _build_rpg(task, state)
    goals = sorted(task.goal_pos)
    for g in goals:
        if g not in rpg.level:
            return UNSOLVABLE
    selected: set[int] = set()
    marked: set[int] = set()
    # worklist ordered by (layer, derivation rank) descending; a rule's body
    # facts always have strictly smaller rank, so this terminates.
    work = sorted(goals, key=lambda f: (rpg.level[f], rpg.rank[f]), reverse=True)
    while work:
        f = work.pop(0)
        if f in marked:
            continue
        marked.add(f)
        ach = rpg.achiever[f]
        if ach[0] == "init":
            continue
        subgoals: list[int] = []
        if ach[0] == "rule":
            subgoals = sorted(task.rules[ach[1]].body)
        else:
            ai = ach[1]
            selected.add(ai)
            a = task.actions[ai]
            subgoals = sorted(a.pre_pos)
            for e in a.effects:
                if f in e.adds:
                    subgoals.extend(sorted(e.cond_pos))
                    break
        for g in subgoals:
            if g not in marked:
                work.append(g)
        work.sort(key=lambda x: (rpg.level[x], rpg.rank[x]), reverse=True)
    ordered = sorted(selected, key=lambda ai: (rpg.action_level[ai], ai))
    return [task.actions[ai].name for ai in ordered]


def relaxed_plan_length(
    task: GroundTask, state: Optional[frozenset[int]] = None
) -> Union[int, Marker]:
    plan = relaxed_plan(task, state)
    if isinstance(plan, Marker):
        return plan
    return len(plan)


# ---------------------------------------------------------------------------
# Exact h+ oracle


def h_plus_oracle(
    task: GroundTask,
    state: Optional[frozenset[int]] = None,
    cap: int = 40,
) -> Union[int, Marker]:
    """Exact minimum delete-free plan length via iterative deepening with
    achiever-set dominance pruning.  Rules are zero-cost closure; negative
    literals are not supported (compile them away first).  Returns
    UNREACHABLE when no relaxed plan exists, CAP_EXCEEDED past `cap`."""
    for a in task.actions:
        if a.pre_neg or any(e.cond_neg for e in a.effects):
            raise ContractViolation(
                "h_plus_oracle requires a task without negative literals"
            )
    if task.goal_neg:
        raise ContractViolation("h_plus_oracle requires a positive goal")
    if state is None:
        state = task.init
    rpg = _build_rpg(task, state)
    if not all(g in rpg.level for g in task.goal_pos):
        return UNREACHABLE

    def closure(s: frozenset[int]) -> frozenset[int]:
        return ground_closure(task, s) if task.rules else s

    start = closure(state)
    goal = task.goal_pos

    def relaxed_adds(a: GroundAction, s: frozenset[int]) -> frozenset[int]:
        out: set[int] = set()
        for e in a.effects:
            if e.cond_pos <= s:
                out |= e.adds
        return frozenset(out)

    def lower_bound(s: frozenset[int]) -> int:
        # number of further relaxed layers needed (h_max style), admissible
        if goal <= s:
            return 0
        lv = {f: 0 for f in s}
        layer = 0
        cur = set(s)
        while True:
            if goal <= cur:
                return layer
            new: set[int] = set()
            for a in task.actions:
                if a.pre_pos <= cur:
                    for e in a.effects:
                        if e.cond_pos <= cur:
                            new |= e.adds - cur
            for r in task.rules:
                if r.body <= cur and r.head not in cur:
                    new.add(r.head)
            if not new:
                return math.inf
            cur |= new
            layer += 1

    best_depth: dict[frozenset[int], int] = {}

    def dfs(s: frozenset[int], depth: int, budget: int) -> bool:
        if goal <= s:
            return True
        if depth == budget:
            return False
        lb = lower_bound(s)
        if lb is math.inf or depth + lb > budget:
            return False
        seen = best_depth.get(s)
        if seen is not None and seen <= depth:
            return False
        best_depth[s] = depth
        for ai, a in enumerate(task.actions):
            if not a.pre_pos <= s:
                continue
            adds = relaxed_adds(a, s)
            if adds <= s:
                continue  # adds nothing new: useless in delete-free search
            if dfs(closure(s | adds), depth + 1, budget):
                return True
        return False

    for budget in range(cap + 1):
        best_depth.clear()
        if dfs(start, 0, budget):
            return budget
    return CAP_EXCEEDED


# ---------------------------------------------------------------------------
# Brute-force optimal plans (full semantics)


def brute_force_plan(
    task: GroundTask,
    mode: str = "sequential",
    cap: int = 200_000,
) -> Union[list, Marker]:
    """Breadth-first search over full semantics, including per-state derived
    fixpoints.  Sequential mode returns a shortest action-name sequence;
    parallel mode (STRIPS tasks only) returns a shortest list of
    non-interfering action-name layers.  `cap` bounds visited states."""
    if mode == "sequential":
        return _bfs_sequential(task, cap)
    if mode == "parallel":
        _require_strips(task, "parallel brute force")
        return _bfs_parallel(task, cap)
    raise ValidityError(f"unknown brute-force mode {mode!r}")


def _bfs_sequential(task: GroundTask, cap: int) -> Union[list[str], Marker]:
    start = task.init
    if goal_satisfied(task, ground_closure(task, start)):
        return []
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        if len(seen) > cap:
            return CAP_EXCEEDED
        state, path = queue.popleft()
        closure = ground_closure(task, state)
        for a in task.actions:
            if not action_applicable(a, closure):
                continue
            adds, dels = fired_changes(a, closure)
            succ = frozenset((state - dels) | adds)
            if succ in seen:
                continue
            seen.add(succ)
            new_path = path + (a.name,)
            if goal_satisfied(task, ground_closure(task, succ)):
                return list(new_path)
            queue.append((succ, new_path))
    return UNSOLVABLE


def reachable_states(
    task: GroundTask, cap: int = 200_000
) -> Union[list[frozenset[int]], Marker]:
    """All states reachable from init (basic projection), BFS order."""
    start = task.init
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        if len(seen) > cap:
            return CAP_EXCEEDED
        state = queue.popleft()
        closure = ground_closure(task, state)
        for a in task.actions:
            if not action_applicable(a, closure):
                continue
            adds, dels = fired_changes(a, closure)
            succ = frozenset((state - dels) | adds)
            if succ not in seen:
                seen.add(succ)
                order.append(succ)
                queue.append(succ)
    return order


def _nointerfere(task: GroundTask, i: int, j: int) -> bool:
    a, b = task.actions[i], task.actions[j]
    ae, be = a.effects[0], b.effects[0]
    if ae.deletes & (b.pre_pos | be.adds):
        return False
    if be.deletes & (a.pre_pos | ae.adds):
        return False
    return True


def _bfs_parallel(task: GroundTask, cap: int) -> Union[list[list[str]], Marker]:
    start = task.init
    if task.goal_pos <= start and not (task.goal_neg & start):
        return []
    seen = {start}
    queue = deque([(start, ())])
    compat: dict[tuple[int, int], bool] = {}

    def compatible(i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        if key not in compat:
            compat[key] = _nointerfere(task, key[0], key[1])
        return compat[key]

    while queue:
        if len(seen) > cap:
            return CAP_EXCEEDED
        state, path = queue.popleft()
        applicable = [
            i for i, a in enumerate(task.actions) if a.pre_pos <= state
        ]
        # enumerate all cliques of the non-interference graph
        for step in _cliques(applicable, compatible):
            adds = frozenset().union(*(task.actions[i].effects[0].adds for i in step))
            dels = frozenset().union(*(task.actions[i].effects[0].deletes for i in step))
            succ = frozenset((state - dels) | adds)
            if succ in seen:
                continue
            seen.add(succ)
            new_path = path + ([task.actions[i].name for i in step],)
            if task.goal_pos <= succ:
                return [list(layer) for layer in new_path]
            queue.append((succ, new_path))
    return UNSOLVABLE


def _cliques(nodes: list[int], compatible) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def extend(base: tuple[int, ...], candidates: list[int]) -> None:
        for k, n in enumerate(candidates):
            new = base + (n,)
            out.append(new)
            extend(new, [m for m in candidates[k + 1 :] if compatible(n, m)])

    extend((), nodes)
    return out


# ---------------------------------------------------------------------------
# Plan validation


PlanStep = tuple[str, tuple[str, ...]]


def parse_plan_step(text: str) -> PlanStep:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    parts = text.split()
    if not parts:
        raise InputError("empty plan step")
    return parts[0].lower(), tuple(p.lower() for p in parts[1:])


@dataclass(frozen=True)
class Violation:
    step_index: int  # -1 for goal failure
    step: Optional[str]
    reason: str
    missing: tuple[str, ...] = ()
    unexpected: tuple[str, ...] = ()

    def __str__(self) -> str:
        where = "goal" if self.step_index < 0 else f"step {self.step_index}: {self.step}"
        detail = ""
        if self.missing:
            detail += f"; missing {', '.join(self.missing)}"
        if self.unexpected:
            detail += f"; unexpectedly true {', '.join(self.unexpected)}"
        return f"{where}: {self.reason}{detail}"


def _erased(name: str, erase: frozenset[str]) -> bool:
    op = name.strip("()").split(" ")[0]
    for tag in erase:
        for prefix in BOOKKEEPING_NAME_PREFIXES.get(tag, ()):
            if op.startswith(prefix):
                return True
    return False


def validate_plan(
    task: Union[GroundTask, LiftedTask],
    plan: Sequence[Union[str, PlanStep]],
    erase: frozenset[str] | set[str] = frozenset(),
) -> Union[None, Violation]:
    """Replay a sequential plan with full semantics after erasing
    bookkeeping-tagged steps; None means the plan is valid.

    Bookkeeping erasure matches the reserved name prefixes of the given
    tags ("ce-phase", "dp-machinery", "goal-achiever").
    """
    steps: list[PlanStep] = []
    for s in plan:
        step = parse_plan_step(s) if isinstance(s, str) else s
        name = "(" + " ".join((step[0],) + step[1]) + ")"
        if not _erased(name, frozenset(erase)):
            steps.append(step)
    if isinstance(task, GroundTask):
        return _validate_ground(task, steps)
    return _validate_lifted(task, steps)


def _validate_ground(task: GroundTask, steps: list[PlanStep]) -> Optional[Violation]:
    state = task.init
    for i, (op, args) in enumerate(steps):
        name = "(" + " ".join((op,) + args) + ")"
        action = task.action_by_name(name)
        if action is None:
            raise InputError(f"unknown action name {name}")
        closure = ground_closure(task, state)
        if not action_applicable(action, closure):
            missing = tuple(sorted(task.fact_name(f) for f in action.pre_pos - closure))
            unexpected = tuple(
                sorted(task.fact_name(f) for f in action.pre_neg & closure)
            )
            return Violation(i, name, "precondition unsatisfied", missing, unexpected)
        adds, dels = fired_changes(action, closure)
        state = frozenset((state - dels) | adds)
    closure = ground_closure(task, state)
    if not goal_satisfied(task, closure):
        missing = tuple(sorted(task.fact_name(f) for f in task.goal_pos - closure))
        unexpected = tuple(sorted(task.fact_name(f) for f in task.goal_neg & closure))
        return Violation(-1, None, "goal not satisfied", missing, unexpected)
    return None


def _validate_lifted(task: LiftedTask, steps: list[PlanStep]) -> Optional[Violation]:
    ops = {op.name: op for op in task.operators}
    state = frozenset(task.init)
    for i, (opname, args) in enumerate(steps):
        name = "(" + " ".join((opname,) + args) + ")"
        op = ops.get(opname)
        if op is None:
            raise InputError(f"unknown action name {name}")
        try:
            state = apply_operator(task, state, op, args)
        except InputError as exc:
            return Violation(i, name, str(exc))
    derived = compute_derived_extension(task, state) if task.rules else frozenset()
    if not evaluate_formula(task, state, task.goal, derived):
        return Violation(-1, None, "goal not satisfied")
    return None


# ---------------------------------------------------------------------------
# Connectivity statistics


@dataclass(frozen=True)
class Distribution:
    counts: dict[int, int]  # fact index -> count

    @property
    def minimum(self) -> int:
        return min(self.counts.values()) if self.counts else 0

    @property
    def maximum(self) -> int:
        return max(self.counts.values()) if self.counts else 0

    @property
    def mean(self) -> Fraction:
        if not self.counts:
            return Fraction(0)
        return Fraction(sum(self.counts.values()), len(self.counts))

    @property
    def variance(self) -> Fraction:
        # population variance, exact
        if not self.counts:
            return Fraction(0)
        m = self.mean
        return Fraction(
            sum((Fraction(c) - m) ** 2 for c in self.counts.values()), len(self.counts)
        )

    @property
    def dev(self) -> float:
        return math.sqrt(self.variance)

    def to_json(self) -> dict:
        return {
            "min": self.minimum,
            "mean": round(float(self.mean), 2),
            "max": self.maximum,
            "dev": round(self.dev, 2),
        }


@dataclass(frozen=True)
class ConnectivityStats:
    adders: Distribution
    requirers: Distribution
    adders_bookkeeping: Optional[Distribution] = None
    requirers_bookkeeping: Optional[Distribution] = None


def connectivity_stats(task: GroundTask) -> ConnectivityStats:
    """Adders / requirers distributions over the fact universe.

    An action adds p when any effect has p in its add list; it requires p
    when p appears in its precondition or in any effect condition.
    Derivation rules count as one adder of their head and one requirer of
    each body fact.  Bookkeeping-tagged facts are reported separately.
    """
    adders = {f: 0 for f in range(len(task.facts))}
    requirers = {f: 0 for f in range(len(task.facts))}
    for a in task.actions:
        added: set[int] = set()
        required: set[int] = set(a.pre_pos) | set(a.pre_neg)
        for e in a.effects:
            added |= e.adds
            required |= e.cond_pos | e.cond_neg
        for f in added:
            adders[f] += 1
        for f in required:
            requirers[f] += 1
    for r in task.rules:
        adders[r.head] += 1
        for f in r.body:
            requirers[f] += 1
    normal = [f for f in range(len(task.facts)) if f not in task.bookkeeping_facts]
    book = [f for f in range(len(task.facts)) if f in task.bookkeeping_facts]
    stats = ConnectivityStats(
        adders=Distribution({f: adders[f] for f in normal}),
        requirers=Distribution({f: requirers[f] for f in normal}),
        adders_bookkeeping=Distribution({f: adders[f] for f in book}) if book else None,
        requirers_bookkeeping=Distribution({f: requirers[f] for f in book})
        if book
        else None,
    )
    return stats


# ---------------------------------------------------------------------------
# Whole-pipeline measurement


@dataclass
class AnalysisReport:
    instance: str
    ops: int
    actions_pre: int
    actions_post: int
    facts_pre: int
    facts_post: int
    rules: int
    plangraph: Union[int, str, None]
    serial_plangraph: Union[int, str, None]
    relaxed_plan_len: Union[int, str]
    adders: dict
    requirers: dict
    h_plus: Union[int, str, None] = None
    adders_bookkeeping: Optional[dict] = None
    requirers_bookkeeping: Optional[dict] = None

    def to_json(self) -> dict:
        out = {
            "instance": self.instance,
            "ops": self.ops,
            "actions_pre": self.actions_pre,
            "actions_post": self.actions_post,
            "facts_pre": self.facts_pre,
            "facts_post": self.facts_post,
            "rules": self.rules,
            "plangraph": self.plangraph,
            "serial_plangraph": self.serial_plangraph,
            "relaxed_plan_len": self.relaxed_plan_len,
            "adders": self.adders,
            "requirers": self.requirers,
        }
        if self.h_plus is not None:
            out["h_plus"] = self.h_plus
        if self.adders_bookkeeping is not None:
            out["adders_bookkeeping"] = self.adders_bookkeeping
        if self.requirers_bookkeeping is not None:
            out["requirers_bookkeeping"] = self.requirers_bookkeeping
        return out


def measure_encoding(
    task: LiftedTask,
    instance: str = "",
    with_h_plus: bool = False,
    h_plus_cap: int = 40,
    dnf_budget: Optional[int] = None,
    ground_cap: Optional[int] = None,
) -> AnalysisReport:
    """Run normalize -> ground -> filter -> prune and record the structural
    metrics for the initial state.

    Plan-graph lengths are reported only for STRIPS-class ground output
    (null otherwise); the relaxed plan handles rules natively.
    """
    from .ground import DEFAULT_GROUND_CAP, ground_pipeline
    from .normalize import DEFAULT_DNF_BUDGET

    g, report = ground_pipeline(
        task,
        dnf_budget=dnf_budget or DEFAULT_DNF_BUDGET,
        ground_cap=ground_cap or DEFAULT_GROUND_CAP,
    )
    if g.is_strips:
        pg = _render(plangraph_length(g, "parallel"))
        spg = _render(plangraph_length(g, "serialized"))
    else:
        pg = None
        spg = None
    rp = _render(relaxed_plan_length(g))
    stats = connectivity_stats(g)
    hp = None
    if with_h_plus and g.is_strips:
        hp = _render(h_plus_oracle(g, cap=h_plus_cap))
    return AnalysisReport(
        instance=instance or (task.problem_name or task.domain_name),
        ops=report.ops,
        actions_pre=report.actions_pre,
        actions_post=report.actions_post,
        facts_pre=report.facts_pre,
        facts_post=report.facts_post,
        rules=report.rules,
        plangraph=pg,
        serial_plangraph=spg,
        relaxed_plan_len=rp,
        adders=stats.adders.to_json(),
        requirers=stats.requirers.to_json(),
        h_plus=hp,
        adders_bookkeeping=stats.adders_bookkeeping.to_json()
        if stats.adders_bookkeeping
        else None,
        requirers_bookkeeping=stats.requirers_bookkeeping.to_json()
        if stats.requirers_bookkeeping
        else None,
    )


def _render(value: Union[int, Marker]) -> Union[int, str]:
    if isinstance(value, Marker):
        return str(value)
    return value
