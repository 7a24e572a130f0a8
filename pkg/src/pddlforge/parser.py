"""Lexer, parser, and canonical printer for the supported PDDL 2.2 subset.

The printer is the bit-exact contract for golden-file tests: lowercase
names, sorted declaration blocks, 2-space indentation.  parse(print(t))
reconstructs a structurally equal task and print(parse(print(t))) is
byte-identical to print(t).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Union

from .errors import ParseError, UnsupportedConstructError, ValidityError
from .model import (
    EQ,
    And,
    Atom,
    ConditionalEffect,
    DerivedRule,
    Exists,
    Forall,
    Formula,
    Imply,
    LiftedTask,
    Not,
    Operator,
    Or,
    TimedLiteral,
    TRUE,
    is_variable,
)

SUPPORTED_REQUIREMENTS = frozenset(
    {
        ":strips",
        ":typing",
        ":equality",
        ":negative-preconditions",
        ":disjunctive-preconditions",
        ":quantified-preconditions",
        ":conditional-effects",
        ":adl",
        ":derived-predicates",
        ":timed-initial-literals",
        ":durative-actions",
    }
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    offset: int
    length: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Optional[SourceSpan]

    def __str__(self) -> str:
        loc = f"{self.span}: " if self.span else ""
        return f"{loc}{self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Tokenizer / s-expression reader


@dataclass(frozen=True)
class Token:
    text: str
    span: SourceSpan


class SExpr:
    """A parenthesized list with the span of its opening token."""

    __slots__ = ("items", "span")

    def __init__(self, items: list, span: SourceSpan):
        self.items = items
        self.span = span


Node = Union[Token, SExpr]

_TOKEN_RE = re.compile(r"\(|\)|;[^\n]*|[^\s();]+")


def tokenize(text: str, filename: str) -> list[Token]:
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line += 1
            line_start = pos + 1
            pos += 1
            continue
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(filename, pos, 1, line, pos - line_start + 1)
            raise ParseError(f"unexpected character {ch!r}", span)
        word = m.group(0)
        if not word.startswith(";"):
            span = SourceSpan(filename, pos, len(word), line, pos - line_start + 1)
            tokens.append(Token(word.lower(), span))
        pos = m.end()
    return tokens


def read_sexpr(tokens: list[Token], filename: str) -> SExpr:
    pos = [0]

    def read() -> Node:
        if pos[0] >= len(tokens):
            raise ParseError("unexpected end of input", _eof_span(tokens, filename))
        tok = tokens[pos[0]]
        pos[0] += 1
        if tok.text == "(":
            items: list[Node] = []
            while True:
                if pos[0] >= len(tokens):
                    raise ParseError("unbalanced '('", tok.span)
                if tokens[pos[0]].text == ")":
                    pos[0] += 1
                    return SExpr(items, tok.span)
                items.append(read())
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.span)
        return tok

    expr = read()
    if pos[0] != len(tokens):
        raise ParseError("trailing input after task definition", tokens[pos[0]].span)
    if not isinstance(expr, SExpr):
        raise ParseError("expected a parenthesized definition", expr.span)
    return expr


def _eof_span(tokens: list[Token], filename: str) -> SourceSpan:
    if tokens:
        last = tokens[-1].span
        return SourceSpan(filename, last.offset + last.length, 0, last.line, last.column)
    return SourceSpan(filename, 0, 0, 1, 1)


def _is_word(node: Node) -> bool:
    return isinstance(node, Token)


def _word(node: Node, what: str) -> str:
    if not isinstance(node, Token):
        raise ParseError(f"expected {what}", node.span)
    return node.text


_NAME_RE = re.compile(r"[a-z][a-z0-9_-]*\Z")
_RATIONAL_RE = re.compile(r"\d+(\.\d+)?\Z|\d+/\d+\Z")


def _check_name(text: str, span: SourceSpan, what: str) -> str:
    if not _NAME_RE.match(text):
        raise ParseError(f"invalid {what} {text!r}", span)
    return text


def parse_rational(text: str, span: SourceSpan) -> Fraction:
    if not _RATIONAL_RE.match(text):
        raise ParseError(f"invalid number {text!r}", span)
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    if "." in text:
        whole, frac = text.split(".")
        return Fraction(int(whole or "0") * 10 ** len(frac) + int(frac), 10 ** len(frac))
    return Fraction(int(text))


def _is_number(text: str) -> bool:
    return bool(_RATIONAL_RE.match(text))


# ---------------------------------------------------------------------------
# Typed lists


def _parse_typed_list(nodes: list[Node], what: str) -> list[tuple[str, str]]:
    """Parse `a b - t c d - u e` into [(a,t),(b,t),(c,u),(d,u),(e,object)]."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(nodes):
        word = _word(nodes[i], what)
        if word == "-":
            if not pending:
                raise ParseError("dangling '-' in typed list", nodes[i].span)
            if i + 1 >= len(nodes):
                raise ParseError("missing type after '-'", nodes[i].span)
            ty = _word(nodes[i + 1], "type name")
            for name in pending:
                out.append((name, ty))
            pending = []
            i += 2
        else:
            pending.append(word)
            i += 1
    for name in pending:
        out.append((name, "object"))
    return out


# ---------------------------------------------------------------------------
# Formula parsing


class _FormulaParser:
    def __init__(self, filename: str):
        self.filename = filename

    def formula(self, node: Node) -> Formula:
        if isinstance(node, Token):
            raise ParseError(f"expected a formula, got {node.text!r}", node.span)
        if not node.items:
            raise ParseError("empty formula", node.span)
        head = node.items[0]
        if isinstance(head, SExpr):
            raise ParseError("expected a connective or predicate name", head.span)
        kw = head.text
        rest = node.items[1:]
        if kw == "and":
            return And(tuple(self.formula(p) for p in rest))
        if kw == "or":
            return Or(tuple(self.formula(p) for p in rest))
        if kw == "not":
            if len(rest) != 1:
                raise ParseError("'not' takes one argument", node.span)
            return Not(self.formula(rest[0]))
        if kw == "imply":
            if len(rest) != 2:
                raise ParseError("'imply' takes two arguments", node.span)
            return Imply(self.formula(rest[0]), self.formula(rest[1]))
        if kw in ("forall", "exists"):
            if len(rest) != 2:
                raise ParseError(f"'{kw}' takes a variable list and a body", node.span)
            params = self._quantified_params(rest[0])
            body = self.formula(rest[1])
            return Forall(params, body) if kw == "forall" else Exists(params, body)
        if kw in ("when", "increase", "decrease", "assign", ">=", "<=", ">", "<"):
            raise UnsupportedConstructError(
                f"{node.span}: construct '{kw}' is not allowed in a formula here"
            )
        return self.atom(node)

    def _quantified_params(self, node: Node) -> tuple[tuple[str, str], ...]:
        if not isinstance(node, SExpr):
            raise ParseError("expected a variable list", node.span)
        params = _parse_typed_list(node.items, "variable")
        for v, _ in params:
            if not is_variable(v):
                raise ParseError(f"quantified name {v!r} is not a variable", node.span)
        return tuple(params)

    def atom(self, node: SExpr) -> Atom:
        head = _word(node.items[0], "predicate name")
        if head != EQ:
            _check_name(head, node.items[0].span, "predicate name")
        args = []
        for item in node.items[1:]:
            args.append(_word(item, "term"))
        return Atom(head, tuple(args))


# ---------------------------------------------------------------------------
# Effect parsing


def _parse_effect(
    node: Node, fp: _FormulaParser
) -> list[ConditionalEffect]:
    """Normalize an effect tree into a list of conditional effects."""
    conds: list[ConditionalEffect] = []
    _collect_effect(node, fp, (), TRUE, conds)
    # Merge the unconditional, unquantified literals into one effect.
    plain = [
        c for c in conds if c.condition == TRUE and not c.params
    ]
    rest = [c for c in conds if not (c.condition == TRUE and not c.params)]
    merged: list[ConditionalEffect] = []
    if plain:
        adds = tuple(a for c in plain for a in c.adds)
        dels = tuple(d for c in plain for d in c.deletes)
        merged.append(ConditionalEffect(TRUE, adds, dels))
    return merged + rest


def _collect_effect(node, fp, params, condition, out) -> None:
    if isinstance(node, Token):
        raise ParseError(f"expected an effect, got {node.text!r}", node.span)
    if not node.items:
        raise ParseError("empty effect", node.span)
    head = node.items[0]
    kw = head.text if isinstance(head, Token) else None
    if kw == "and":
        for item in node.items[1:]:
            _collect_effect(item, fp, params, condition, out)
        return
    if kw == "forall":
        if len(node.items) != 3:
            raise ParseError("'forall' effect takes a variable list and a body", node.span)
        extra = fp._quantified_params(node.items[1])
        _collect_effect(node.items[2], fp, params + extra, condition, out)
        return
    if kw == "when":
        if len(node.items) != 3:
            raise ParseError("'when' takes a condition and an effect", node.span)
        if condition != TRUE:
            raise ParseError("nested 'when' effects are not supported", node.span)
        cond = fp.formula(node.items[1])
        _collect_effect(node.items[2], fp, params, cond, out)
        return
    if kw == "not":
        if len(node.items) != 2 or not isinstance(node.items[1], SExpr):
            raise ParseError("'not' in an effect takes one atom", node.span)
        atom = fp.atom(node.items[1])
        out.append(ConditionalEffect(condition, (), (atom,), params))
        return
    if kw in ("increase", "decrease", "assign", "scale-up", "scale-down"):
        raise UnsupportedConstructError(
            f"{node.span}: numeric effect '{kw}' is not supported"
        )
    atom = fp.atom(node)
    out.append(ConditionalEffect(condition, (atom,), (), params))


# ---------------------------------------------------------------------------
# Domain parsing


def parse_domain(
    text: str, filename: str = "<domain>"
) -> tuple[LiftedTask, list[ParseDiagnostic]]:
    """Parse a domain definition into a partial LiftedTask.

    Errors abort construction (raised as ParseError /
    UnsupportedConstructError); warnings are returned.
    """
    diagnostics: list[ParseDiagnostic] = []
    tokens = tokenize(text, filename)
    root = read_sexpr(tokens, filename)
    items = root.items
    if not items or _word(items[0], "define") != "define":
        raise ParseError("expected (define (domain ...) ...)", root.span)
    if (
        len(items) < 2
        or not isinstance(items[1], SExpr)
        or len(items[1].items) != 2
        or _word(items[1].items[0], "domain") != "domain"
    ):
        raise ParseError("expected (domain <name>)", root.span)
    domain_name = _check_name(
        _word(items[1].items[1], "domain name"), items[1].items[1].span, "domain name"
    )

    fp = _FormulaParser(filename)
    requirements: list[str] = []
    types: dict[str, str] = {}
    constants: dict[str, str] = {}
    predicates: dict[str, tuple[tuple[str, str], ...]] = {}
    functions: dict[str, tuple[tuple[str, str], ...]] = {}
    derived: set[str] = set()
    operators: list[Operator] = []
    rules: list[DerivedRule] = []

    for section in items[2:]:
        if not isinstance(section, SExpr) or not section.items:
            raise ParseError("expected a domain section", getattr(section, "span", root.span))
        kw = _word(section.items[0], "section keyword")
        body = section.items[1:]
        if kw == ":requirements":
            for item in body:
                flag = _word(item, "requirement flag")
                if flag not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedConstructError(
                        f"{item.span}: unsupported requirement flag {flag}"
                    )
                if flag in requirements:
                    diagnostics.append(
                        ParseDiagnostic("warning", f"duplicate requirement {flag}", item.span)
                    )
                else:
                    requirements.append(flag)
            if ":adl" in requirements and ":equality" in requirements:
                diagnostics.append(
                    ParseDiagnostic(
                        "warning",
                        ":equality is redundant when :adl is declared",
                        section.span,
                    )
                )
        elif kw == ":types":
            for name, parent in _parse_typed_list(body, "type name"):
                if name == "object":
                    continue
                types[name] = parent
        elif kw == ":constants":
            for name, ty in _parse_typed_list(body, "constant name"):
                constants[name] = ty
        elif kw == ":predicates":
            for item in body:
                if not isinstance(item, SExpr) or not item.items:
                    raise ParseError("expected a predicate declaration", item.span)
                pname = _check_name(
                    _word(item.items[0], "predicate name"),
                    item.items[0].span,
                    "predicate name",
                )
                if pname in predicates:
                    raise ParseError(f"duplicate predicate {pname}", item.span)
                params = tuple(_parse_typed_list(item.items[1:], "parameter"))
                predicates[pname] = params
        elif kw == ":functions":
            for item in body:
                if not isinstance(item, SExpr) or not item.items:
                    raise ParseError("expected a function declaration", item.span)
                fname = _word(item.items[0], "function name")
                functions[fname] = tuple(_parse_typed_list(item.items[1:], "parameter"))
        elif kw == ":derived":
            rules.append(_parse_derived(section, fp))
            derived.add(rules[-1].head.pred)
        elif kw == ":action":
            operators.append(_parse_action(section, fp))
        elif kw == ":durative-action":
            operators.append(_parse_durative_action(section, fp))
        else:
            raise UnsupportedConstructError(
                f"{section.span}: unsupported domain section {kw}"
            )

    operators.sort(key=lambda o: o.name)
    rules.sort(key=lambda r: (r.head.pred, repr(r.body)))
    task = LiftedTask(
        domain_name=domain_name,
        requirements=tuple(sorted(requirements)),
        types=types,
        constants=constants,
        predicates=predicates,
        derived_predicates=frozenset(derived),
        functions=functions,
        operators=tuple(operators),
        rules=tuple(rules),
    )
    _validate_domain(task)
    return task, diagnostics


def _validate_domain(task: LiftedTask) -> None:
    names = set()
    for op in task.operators:
        if op.name in names:
            raise ValidityError(f"duplicate operator name {op.name}")
        names.add(op.name)
    for pred in task.derived_predicates:
        if pred not in task.predicates:
            raise ValidityError(f"derived predicate {pred} is not declared")


def _parse_derived(section: SExpr, fp: _FormulaParser) -> DerivedRule:
    if len(section.items) != 3 or not isinstance(section.items[1], SExpr):
        raise ParseError("expected (:derived (head ...) body)", section.span)
    head_node = section.items[1]
    pname = _check_name(
        _word(head_node.items[0], "predicate name"),
        head_node.items[0].span,
        "predicate name",
    )
    params = tuple(_parse_typed_list(head_node.items[1:], "head variable"))
    for v, _ in params:
        if not is_variable(v):
            raise ParseError(f"rule head argument {v!r} is not a variable", head_node.span)
    body = fp.formula(section.items[2])
    return DerivedRule(Atom(pname, tuple(v for v, _ in params)), params, body)


def _action_sections(section: SExpr) -> dict[str, Node]:
    name = _check_name(
        _word(section.items[1], "action name"), section.items[1].span, "action name"
    )
    fields: dict[str, Node] = {"__name": section.items[1]}
    i = 2
    while i < len(section.items):
        key = _word(section.items[i], "action keyword")
        if i + 1 >= len(section.items):
            raise ParseError(f"missing value after {key}", section.items[i].span)
        fields[key] = section.items[i + 1]
        i += 2
    fields["__namestr"] = name  # type: ignore[assignment]
    return fields


def _parse_params(fields: dict[str, Node], span) -> tuple[tuple[str, str], ...]:
    node = fields.get(":parameters")
    if node is None:
        raise ParseError("missing :parameters", span)
    if not isinstance(node, SExpr):
        raise ParseError("expected a parameter list", node.span)
    params = tuple(_parse_typed_list(node.items, "parameter"))
    for v, _ in params:
        if not is_variable(v):
            raise ParseError(f"parameter {v!r} is not a variable", node.span)
    return params


def _parse_action(section: SExpr, fp: _FormulaParser) -> Operator:
    fields = _action_sections(section)
    name = fields["__namestr"]
    params = _parse_params(fields, section.span)
    pre = TRUE
    if ":precondition" in fields:
        pre = fp.formula(fields[":precondition"])
    effects: list[ConditionalEffect] = []
    if ":effect" in fields:
        effects = _parse_effect(fields[":effect"], fp)
    return Operator(name, params, pre, tuple(effects))


def _parse_duration(node: Node, fp: _FormulaParser):
    # (= ?duration 23) or (= ?duration (fname args...))
    if (
        not isinstance(node, SExpr)
        or len(node.items) != 3
        or _word(node.items[0], "'='") != "="
        or _word(node.items[1], "?duration") != "?duration"
    ):
        raise UnsupportedConstructError(
            f"{node.span}: only '(= ?duration <expr>)' durations are supported"
        )
    val = node.items[2]
    if isinstance(val, Token):
        return parse_rational(val.text, val.span)
    fname = _word(val.items[0], "function name")
    args = tuple(_word(a, "term") for a in val.items[1:])
    return (fname, args)


def _split_temporal_formula(node: Node, fp: _FormulaParser):
    """Split a durative :condition into (start, over-all, end) formulas."""
    parts = {"start": [], "all": [], "end": []}

    def walk(n: Node) -> None:
        if not isinstance(n, SExpr) or not n.items:
            raise ParseError("expected a temporally annotated condition", n.span)
        head = _word(n.items[0], "temporal keyword")
        if head == "and":
            for item in n.items[1:]:
                walk(item)
            return
        if head == "at" and len(n.items) == 3 and _is_word(n.items[1]):
            when = n.items[1].text
            if when in ("start", "end"):
                parts[when].append(fp.formula(n.items[2]))
                return
        if head == "over" and len(n.items) == 3 and _is_word(n.items[1]):
            if n.items[1].text == "all":
                parts["all"].append(fp.formula(n.items[2]))
                return
        raise ParseError("expected (at start ...), (over all ...), or (at end ...)", n.span)

    walk(node)
    mk = lambda lst: lst[0] if len(lst) == 1 else And(tuple(lst))
    return mk(parts["start"]), mk(parts["all"]), mk(parts["end"])


def _split_temporal_effect(node: Node, fp: _FormulaParser):
    start_nodes: list[Node] = []
    end_nodes: list[Node] = []

    def walk(n: Node) -> None:
        if not isinstance(n, SExpr) or not n.items:
            raise ParseError("expected a temporally annotated effect", n.span)
        head = _word(n.items[0], "temporal keyword")
        if head == "and":
            for item in n.items[1:]:
                walk(item)
            return
        if head == "at" and len(n.items) == 3 and _is_word(n.items[1]):
            when = n.items[1].text
            if when == "start":
                start_nodes.append(n.items[2])
                return
            if when == "end":
                end_nodes.append(n.items[2])
                return
        raise ParseError("expected (at start ...) or (at end ...)", n.span)

    walk(node)

    def gather(nodes: list[Node]) -> tuple[ConditionalEffect, ...]:
        effs: list[ConditionalEffect] = []
        for n in nodes:
            effs.extend(_parse_effect(n, fp))
        adds = tuple(a for e in effs if e.condition == TRUE and not e.params for a in e.adds)
        dels = tuple(d for e in effs if e.condition == TRUE and not e.params for d in e.deletes)
        rest = tuple(e for e in effs if e.condition != TRUE or e.params)
        out: list[ConditionalEffect] = []
        if adds or dels:
            out.append(ConditionalEffect(TRUE, adds, dels))
        return tuple(out) + rest

    return gather(start_nodes), gather(end_nodes)


def _parse_durative_action(section: SExpr, fp: _FormulaParser) -> Operator:
    fields = _action_sections(section)
    name = fields["__namestr"]
    params = _parse_params(fields, section.span)
    if ":duration" not in fields:
        raise ParseError("durative action missing :duration", section.span)
    duration = _parse_duration(fields[":duration"], fp)
    cond_start, cond_over, cond_end = TRUE, TRUE, TRUE
    if ":condition" in fields:
        cond_start, cond_over, cond_end = _split_temporal_formula(fields[":condition"], fp)
    eff_start: tuple[ConditionalEffect, ...] = ()
    eff_end: tuple[ConditionalEffect, ...] = ()
    if ":effect" in fields:
        eff_start, eff_end = _split_temporal_effect(fields[":effect"], fp)
    return Operator(
        name,
        params,
        cond_start,
        eff_start,
        duration=duration,
        cond_over=cond_over,
        cond_end=cond_end,
        end_effects=eff_end,
    )


# ---------------------------------------------------------------------------
# Problem parsing


def parse_problem(
    text: str, dom: LiftedTask, filename: str = "<problem>"
) -> tuple[LiftedTask, list[ParseDiagnostic]]:
    """Attach objects, init (plain atoms, function values, timed literals),
    goal, and metric to a parsed domain."""
    diagnostics: list[ParseDiagnostic] = []
    tokens = tokenize(text, filename)
    root = read_sexpr(tokens, filename)
    items = root.items
    if not items or _word(items[0], "define") != "define":
        raise ParseError("expected (define (problem ...) ...)", root.span)
    if (
        len(items) < 2
        or not isinstance(items[1], SExpr)
        or len(items[1].items) != 2
        or _word(items[1].items[0], "problem") != "problem"
    ):
        raise ParseError("expected (problem <name>)", root.span)
    problem_name = _check_name(
        _word(items[1].items[1], "problem name"), items[1].items[1].span, "problem name"
    )

    fp = _FormulaParser(filename)
    objects: dict[str, str] = {}
    init_atoms: set[Atom] = set()
    timed: list[TimedLiteral] = []
    fvalues: dict[tuple[str, tuple[str, ...]], Fraction] = {}
    goal: Formula = TRUE
    metric: Optional[str] = None

    for section in items[2:]:
        if not isinstance(section, SExpr) or not section.items:
            raise ParseError("expected a problem section", getattr(section, "span", root.span))
        kw = _word(section.items[0], "section keyword")
        body = section.items[1:]
        if kw == ":domain":
            declared = _word(body[0], "domain name")
            if declared != dom.domain_name:
                raise ParseError(
                    f"problem references domain {declared!r}, expected "
                    f"{dom.domain_name!r}",
                    body[0].span,
                )
        elif kw == ":objects":
            for name, ty in _parse_typed_list(body, "object name"):
                if ty != "object" and ty not in dom.types:
                    raise ParseError(f"object {name} has undeclared type {ty}", section.span)
                objects[name] = ty
        elif kw == ":init":
            for item in body:
                _parse_init_entry(item, fp, init_atoms, timed, fvalues)
        elif kw == ":goal":
            if len(body) != 1:
                raise ParseError(":goal takes one formula", section.span)
            goal = fp.formula(body[0])
        elif kw == ":metric":
            metric = _parse_metric(body, section.span)
        else:
            raise UnsupportedConstructError(
                f"{section.span}: unsupported problem section {kw}"
            )

    timed.sort(key=lambda t: (t.time, t.atom.pred, t.atom.args, not t.positive))
    task = replace(
        dom,
        problem_name=problem_name,
        objects=objects,
        init=frozenset(init_atoms),
        timed_literals=tuple(timed),
        function_values=fvalues,
        goal=goal,
        metric=metric,
    )
    task.validate()
    return task, diagnostics


def _parse_init_entry(item, fp, init_atoms, timed, fvalues) -> None:
    if not isinstance(item, SExpr) or not item.items:
        raise ParseError("expected an init entry", getattr(item, "span", None))
    head = _word(item.items[0], "init entry")
    if head == "=":
        # (= (fname args...) value)
        if len(item.items) != 3 or not isinstance(item.items[1], SExpr):
            raise ParseError("expected (= (<function> args) <number>)", item.span)
        fname = _word(item.items[1].items[0], "function name")
        args = tuple(_word(a, "term") for a in item.items[1].items[1:])
        val = _word(item.items[2], "number")
        fvalues[(fname, args)] = parse_rational(val, item.items[2].span)
        return
    if head == "at" and len(item.items) == 3 and _is_word(item.items[1]) and _is_number(
        item.items[1].text
    ):
        t = parse_rational(item.items[1].text, item.items[1].span)
        if t <= 0:
            raise ParseError("timed literal at time <= 0", item.items[1].span)
        lit = item.items[2]
        if not isinstance(lit, SExpr) or not lit.items:
            raise ParseError("expected a literal", item.span)
        if _word(lit.items[0], "literal") == "not":
            if len(lit.items) != 2 or not isinstance(lit.items[1], SExpr):
                raise ParseError("expected (not (<atom>))", lit.span)
            atom = fp.atom(lit.items[1])
            timed.append(TimedLiteral(t, atom, False))
        else:
            timed.append(TimedLiteral(t, fp.atom(lit), True))
        return
    if head == "not":
        raise ParseError(
            "negative init literals are redundant under the closed-world "
            "assumption and not accepted",
            item.span,
        )
    init_atoms.add(fp.atom(item))


def _parse_metric(body, span) -> str:
    if (
        len(body) == 2
        and _is_word(body[0])
        and body[0].text == "minimize"
        and isinstance(body[1], SExpr)
        and len(body[1].items) == 1
        and _word(body[1].items[0], "metric") == "total-time"
    ):
        return "makespan"
    raise UnsupportedConstructError(
        f"{span}: only '(:metric minimize (total-time))' is supported"
    )


def parse_task(
    domain_text: str,
    problem_text: str,
    domain_file: str = "<domain>",
    problem_file: str = "<problem>",
) -> tuple[LiftedTask, list[ParseDiagnostic]]:
    dom, d1 = parse_domain(domain_text, domain_file)
    task, d2 = parse_problem(problem_text, dom, problem_file)
    return task, d1 + d2


# ---------------------------------------------------------------------------
# Canonical printer


def format_rational(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    # exact decimal when the denominator is 2^a * 5^b, else num/den
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = x.numerator * 10**digits // x.denominator
        text = str(abs(scaled)).rjust(digits + 1, "0")
        sign = "-" if scaled < 0 else ""
        return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"{x.numerator}/{x.denominator}"


def format_formula(f: Formula) -> str:
    if isinstance(f, Atom):
        return str(f)
    if isinstance(f, Not):
        return f"(not {format_formula(f.f)})"
    if isinstance(f, And):
        if not f.parts:
            return "(and)"
        return f"(and {' '.join(format_formula(p) for p in f.parts)})"
    if isinstance(f, Or):
        if not f.parts:
            return "(or)"
        return f"(or {' '.join(format_formula(p) for p in f.parts)})"
    if isinstance(f, Imply):
        return f"(imply {format_formula(f.lhs)} {format_formula(f.rhs)})"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        return f"({kw} ({_format_params(f.params)}) {format_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def _format_params(params: tuple[tuple[str, str], ...]) -> str:
    return " ".join(f"{v} - {t}" for v, t in params)


def _format_effect_item(eff: ConditionalEffect) -> str:
    literals = [str(a) for a in eff.adds] + [f"(not {a})" for a in eff.deletes]
    if len(literals) == 1:
        body = literals[0]
    elif not literals:
        body = "(and)"
    else:
        body = f"(and {' '.join(literals)})"
    if eff.condition != TRUE:
        body = f"(when {format_formula(eff.condition)} {body})"
    if eff.params:
        body = f"(forall ({_format_params(eff.params)}) {body})"
    return body


def _format_effects(effects: tuple[ConditionalEffect, ...]) -> str:
    items = [_format_effect_item(e) for e in effects]
    if len(items) == 1 and not items[0].startswith("(and"):
        return items[0]
    return f"(and {' '.join(items)})" if items else "(and)"


def _format_duration(duration) -> str:
    if isinstance(duration, Fraction):
        return f"(= ?duration {format_rational(duration)})"
    fname, args = duration
    inner = f"({fname} {' '.join(args)})" if args else f"({fname})"
    return f"(= ?duration {inner})"


def _format_temporal_condition(op: Operator) -> str:
    parts = []
    for when, f in (("at start", op.precondition), ("over all", op.cond_over), ("at end", op.cond_end)):
        if f is None or f == TRUE:
            continue
        for p in f.parts if isinstance(f, And) and f.parts else (f,):
            parts.append(f"({when} {format_formula(p)})")
    return f"(and {' '.join(parts)})" if parts else "(and)"


def _format_temporal_effects(op: Operator) -> str:
    parts = []
    for when, effs in (("at start", op.effects), ("at end", op.end_effects)):
        for eff in effs:
            for a in eff.adds:
                parts.append(f"({when} {a})")
            for d in eff.deletes:
                parts.append(f"({when} (not {d}))")
    return f"(and {' '.join(parts)})" if parts else "(and)"


def print_domain(task: LiftedTask) -> str:
    out = [f"(define (domain {task.domain_name})"]
    if task.requirements:
        out.append(f"  (:requirements {' '.join(sorted(task.requirements))})")
    if task.types:
        out.append("  (:types")
        for name in sorted(task.types):
            out.append(f"    {name} - {task.types[name]}")
        out.append("  )")
    if task.constants:
        out.append("  (:constants")
        for name in sorted(task.constants):
            out.append(f"    {name} - {task.constants[name]}")
        out.append("  )")
    if task.predicates:
        out.append("  (:predicates")
        for name in sorted(task.predicates):
            params = task.predicates[name]
            if params:
                out.append(f"    ({name} {_format_params(params)})")
            else:
                out.append(f"    ({name})")
        out.append("  )")
    if task.functions:
        out.append("  (:functions")
        for name in sorted(task.functions):
            params = task.functions[name]
            if params:
                out.append(f"    ({name} {_format_params(params)})")
            else:
                out.append(f"    ({name})")
        out.append("  )")
    for rule in sorted(task.rules, key=lambda r: (r.head.pred, repr(r.body))):
        head = (
            f"({rule.head.pred} {_format_params(rule.params)})"
            if rule.params
            else f"({rule.head.pred})"
        )
        out.append(f"  (:derived {head}")
        out.append(f"    {format_formula(rule.body)}")
        out.append("  )")
    for op in sorted(task.operators, key=lambda o: o.name):
        if op.durative:
            out.append(f"  (:durative-action {op.name}")
            out.append(f"    :parameters ({_format_params(op.params)})")
            out.append(f"    :duration {_format_duration(op.duration)}")
            out.append(f"    :condition {_format_temporal_condition(op)}")
            out.append(f"    :effect {_format_temporal_effects(op)}")
            out.append("  )")
        else:
            out.append(f"  (:action {op.name}")
            out.append(f"    :parameters ({_format_params(op.params)})")
            out.append(f"    :precondition {format_formula(op.precondition)}")
            out.append(f"    :effect {_format_effects(op.effects)}")
            out.append("  )")
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(task: LiftedTask) -> str:
    if task.problem_name is None:
        raise ValidityError("task has no problem part to print")
    out = [f"(define (problem {task.problem_name})"]
    out.append(f"  (:domain {task.domain_name})")
    if task.objects:
        out.append("  (:objects")
        for name in sorted(task.objects):
            out.append(f"    {name} - {task.objects[name]}")
        out.append("  )")
    out.append("  (:init")
    for atom in sorted(task.init, key=lambda a: (a.pred, a.args)):
        out.append(f"    {atom}")
    for (fname, args), val in sorted(task.function_values.items()):
        inner = f"({fname} {' '.join(args)})" if args else f"({fname})"
        out.append(f"    (= {inner} {format_rational(val)})")
    for tl in task.timed_literals:
        lit = str(tl.atom) if tl.positive else f"(not {tl.atom})"
        out.append(f"    (at {format_rational(tl.time)} {lit})")
    out.append("  )")
    out.append(f"  (:goal {format_formula(task.goal)})")
    if task.metric == "makespan":
        out.append("  (:metric minimize (total-time))")
    out.append(")")
    return "\n".join(out) + "\n"


def print_task(task: LiftedTask) -> str:
    """Canonical text of the full task: domain followed by problem."""
    if task.problem_name is None:
        return print_domain(task)
    return print_domain(task) + print_problem(task)
