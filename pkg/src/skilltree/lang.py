"""The assignment mini-language: parsing, rendering, evaluation and traces.

A question is a comma-separated list of single-assignment statements
followed by a query, e.g. ``A=1,B=2,C=A+2,C=?``.  Every right-hand side is
a literal, a variable, or one binary operation over two such operands.

Two operator families exist and never mix inside one program:

* arithmetic: ``+`` (add), ``-`` (sub), ``max``, ``min`` over integers
* string: ``+`` (join), ``^`` (reverseJoin), ``-`` (strSub), ``*`` (stackJoin)
  over digit strings
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Union

ARITH = "arith"
STRING = "string"

Value = Union[int, str]


class ProgramError(ValueError):
    """Base class for malformed or invalid programs."""


class ParseError(ProgramError):
    def __init__(self, message: str, text: str = "", pos: int = -1):
        self.text = text
        self.pos = pos
        if pos >= 0:
            message = f"{message} at position {pos}"
        super().__init__(message)


class DuplicateAssignmentError(ProgramError):
    pass


class UndefinedVariableError(ProgramError):
    pass


class CyclicReferenceError(ProgramError):
    pass


class MixedModeError(ProgramError):
    pass


class Operator(enum.Enum):
    ADD = ("add", "+", ARITH)
    SUB = ("sub", "-", ARITH)
    MAX = ("max", "max", ARITH)
    MIN = ("min", "min", ARITH)
    JOIN = ("join", "+", STRING)
    REVERSE_JOIN = ("reverseJoin", "^", STRING)
    STR_SUB = ("strSub", "-", STRING)
    STACK_JOIN = ("stackJoin", "*", STRING)

    def __init__(self, op_name: str, glyph: str, mode: str):
        self.op_name = op_name
        self.glyph = glyph
        self.mode = mode

    @classmethod
    def for_mode(cls, mode: str) -> list[Operator]:
        return [op for op in cls if op.mode == mode]

    @classmethod
    def from_glyph(cls, glyph: str, mode: str) -> Operator:
        for op in cls:
            if op.glyph == glyph and op.mode == mode:
                return op
        raise KeyError((glyph, mode))


ARITH_OPS = tuple(Operator.for_mode(ARITH))
STRING_OPS = tuple(Operator.for_mode(STRING))

# glyphs that only exist in one family; '+' and '-' are shared
_STRING_ONLY = {"^", "*"}
_ARITH_ONLY = {"max", "min"}


@dataclass(frozen=True)
class Num:
    digits: str

    def __post_init__(self):
        if not self.digits.isdigit() or not self.digits.isascii():
            raise ProgramError(f"literal must be ASCII digits, got {self.digits!r}")


@dataclass(frozen=True)
class Var:
    name: str


Operand = Union[Num, Var]


@dataclass(frozen=True)
class BinOp:
    left: Operand
    op: Operator
    right: Operand


Rhs = Union[Num, Var, BinOp]


def rhs_refs(rhs: Rhs) -> list[str]:
    """Variable names read by a right-hand side, in textual order."""
    if isinstance(rhs, Var):
        return [rhs.name]
    if isinstance(rhs, BinOp):
        return [x.name for x in (rhs.left, rhs.right) if isinstance(x, Var)]
    return []


def rhs_literals(rhs: Rhs) -> list[Num]:
    if isinstance(rhs, Num):
        return [rhs]
    if isinstance(rhs, BinOp):
        return [x for x in (rhs.left, rhs.right) if isinstance(x, Num)]
    return []


@dataclass(frozen=True)
class Statement:
    target: str
    rhs: Rhs

    @property
    def refs(self) -> list[str]:
        return rhs_refs(self.rhs)


@dataclass(frozen=True)
class Program:
    """A validated question: statements plus the queried variable.

    Construction checks single assignment, that every referenced variable
    is assigned, acyclicity, and that one operator family is used.
    """

    statements: tuple[Statement, ...]
    query: str
    mode: str = ARITH
    _order: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(self.statements))
        if self.mode not in (ARITH, STRING):
            raise ProgramError(f"unknown mode {self.mode!r}")
        assigned: dict[str, int] = {}
        for i, st in enumerate(self.statements):
            if st.target in assigned:
                raise DuplicateAssignmentError(f"variable {st.target!r} assigned more than once")
            assigned[st.target] = i
            if isinstance(st.rhs, BinOp) and st.rhs.op.mode != self.mode:
                raise MixedModeError(
                    f"operator {st.rhs.op.op_name} does not belong to {self.mode} mode"
                )
        for st in self.statements:
            for name in st.refs:
                if name == st.target:
                    raise CyclicReferenceError(f"{st.target!r} refers to itself")
                if name not in assigned:
                    raise UndefinedVariableError(f"variable {name!r} is never assigned")
        if self.query not in assigned:
            raise UndefinedVariableError(f"query asks for unassigned variable {self.query!r}")
        object.__setattr__(self, "_order", _topological_order(self.statements, assigned))

    @property
    def bindings(self) -> dict[str, Statement]:
        return {st.target: st for st in self.statements}

    @property
    def variables(self) -> list[str]:
        """Distinct variable names in order of first appearance."""
        seen: dict[str, None] = {}
        for st in self.statements:
            seen.setdefault(st.target)
            for name in st.refs:
                seen.setdefault(name)
        seen.setdefault(self.query)
        return list(seen)

    def topological_order(self) -> tuple[int, ...]:
        """Statement indices, dependencies first, program order breaking ties."""
        return self._order

    def rename(self, mapping: dict[str, str]) -> Program:
        def sub(x):
            if isinstance(x, Var):
                return Var(mapping.get(x.name, x.name))
            if isinstance(x, BinOp):
                return BinOp(sub(x.left), x.op, sub(x.right))
            return x

        statements = tuple(
            Statement(mapping.get(st.target, st.target), sub(st.rhs)) for st in self.statements
        )
        return Program(statements, mapping.get(self.query, self.query), self.mode)


def _topological_order(statements, assigned) -> tuple[int, ...]:
    import heapq

    indegree = [len(set(st.refs)) for st in statements]
    users: dict[int, list[int]] = {}
    for i, st in enumerate(statements):
        for name in set(st.refs):
            users.setdefault(assigned[name], []).append(i)
    ready = [i for i, d in enumerate(indegree) if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in users.get(i, ()):
            indegree[j] -= 1
            if indegree[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != len(statements):
        raise CyclicReferenceError("dependency graph contains a cycle")
    return tuple(order)


# ---------------------------------------------------------------- parsing

_DIGIT_GAP = re.compile(r"(?<=\d) (?=\d)")


def join_digits(text: str) -> str:
    """Undo digit-split rendering: ``"1 2+3"`` becomes ``"12+3"``."""
    return _DIGIT_GAP.sub("", text)


def split_digits(text: str) -> str:
    """Separate every pair of adjacent digits with one space."""
    return re.sub(r"(?<=\d)(?=\d)", " ", text)


def _is_var_char(ch: str) -> bool:
    return ch.isalpha()


def infer_mode(text: str) -> str:
    has_string = any(g in text for g in _STRING_ONLY)
    has_arith = any(k in text for k in _ARITH_ONLY)
    if has_string and has_arith:
        raise MixedModeError("text mixes arithmetic and string operators")
    return STRING if has_string else ARITH


class _Parser:
    def __init__(self, text: str, mode: str):
        self.text = text
        self.pos = 0
        self.mode = mode

    def error(self, message: str):
        raise ParseError(message, self.text, self.pos)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            self.error(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def variable(self) -> str:
        ch = self.peek()
        if not ch or not _is_var_char(ch):
            self.error("expected a variable name")
        self.pos += 1
        return ch

    def operand(self) -> Operand:
        ch = self.peek()
        if ch.isdigit() and ch.isascii():
            start = self.pos
            while self.peek().isdigit() and self.peek().isascii():
                self.pos += 1
            return Num(self.text[start:self.pos])
        if ch and _is_var_char(ch):
            return Var(self.variable())
        self.error("expected a number or variable")

    def operator(self) -> Operator | None:
        rest = self.text[self.pos:]
        for kw in ("max", "min"):
            if rest.startswith(kw):
                glyph = kw
                break
        else:
            glyph = rest[:1]
            if glyph not in ("+", "-", "^", "*"):
                return None
        if self.mode == ARITH and glyph in _STRING_ONLY or self.mode == STRING and glyph in _ARITH_ONLY:
            raise MixedModeError(f"operator {glyph!r} is not valid in {self.mode} mode")
        self.pos += len(glyph)
        return Operator.from_glyph(glyph, self.mode)

    def item(self):
        target = self.variable()
        self.expect("=")
        if self.peek() == "?":
            self.pos += 1
            return target, None
        left = self.operand()
        op = self.operator()
        if op is None:
            return target, left
        right = self.operand()
        return target, BinOp(left, op, right)

    def separator(self):
        self.expect(",")
        if self.peek() == " ":
            self.pos += 1

    def program(self) -> Program:
        if not self.text:
            self.error("empty program")
        statements = []
        while True:
            target, rhs = self.item()
            if rhs is None:
                if self.pos != len(self.text):
                    self.error("query must be the last item")
                return Program(tuple(statements), target, self.mode)
            statements.append(Statement(target, rhs))
            self.separator()


def parse_program(text: str, mode: str | None = None) -> Program:
    """Parse a question string into a validated :class:`Program`.

    ``mode`` selects the operator family.  When omitted it is inferred from
    the text: ``^`` or ``*`` imply string mode, otherwise arithmetic.
    Single spaces after commas and digit-split numerals are accepted.
    """
    text = join_digits(text.strip())
    if mode is None:
        mode = infer_mode(text)
    return _Parser(text, mode).program()


# ---------------------------------------------------------------- rendering

def render_operand(x: Operand) -> str:
    return x.digits if isinstance(x, Num) else x.name


def render_rhs(rhs: Rhs) -> str:
    if isinstance(rhs, BinOp):
        return f"{render_operand(rhs.left)}{rhs.op.glyph}{render_operand(rhs.right)}"
    return render_operand(rhs)


def render_statement(st: Statement) -> str:
    return f"{st.target}={render_rhs(st.rhs)}"


def render_program(p: Program, digit_split: bool = False, space_after_comma: bool = False) -> str:
    sep = ", " if space_after_comma else ","
    items = [render_statement(st) for st in p.statements]
    items.append(f"{p.query}=?")
    text = sep.join(items)
    return split_digits(text) if digit_split else text


def render_value(v: Value, digit_split: bool = False) -> str:
    text = str(v)
    return split_digits(text) if digit_split else text


# ---------------------------------------------------------------- semantics

def apply_arith(op: Operator, left: int, right: int) -> int:
    if op is Operator.ADD:
        return left + right
    if op is Operator.SUB:
        return left - right
    if op is Operator.MAX:
        return max(left, right)
    if op is Operator.MIN:
        return min(left, right)
    raise ValueError(f"{op.op_name} is not an arithmetic operator")


def str_sub(left: str, right: str) -> str:
    # multiset deletion, first remaining occurrence first
    chars = list(left)
    deleted = 0
    for ch in right:
        try:
            chars.remove(ch)
        except ValueError:
            continue
        deleted += 1
    if deleted == 0 or not chars:
        return "0"
    return "".join(chars)


def stack_join(left: str, right: str) -> str:
    out = []
    for a, b in zip(left, right):
        out.append(a)
        out.append(b)
    n = min(len(left), len(right))
    out.append(left[n:] or right[n:])
    return "".join(out)


def apply_string(op: Operator, left: str, right: str) -> str:
    if op is Operator.JOIN:
        return left + right
    if op is Operator.REVERSE_JOIN:
        return (left + right)[::-1]
    if op is Operator.STR_SUB:
        return str_sub(left, right)
    if op is Operator.STACK_JOIN:
        return stack_join(left, right)
    raise ValueError(f"{op.op_name} is not a string operator")


def apply_op(op: Operator, left: Value, right: Value) -> Value:
    if op.mode == ARITH:
        return apply_arith(op, left, right)
    return apply_string(op, left, right)


def literal_value(num: Num, mode: str) -> Value:
    return int(num.digits) if mode == ARITH else num.digits


def evaluate_all(p: Program) -> dict[str, Value]:
    """Values of every assigned variable."""
    env: dict[str, Value] = {}

    def operand(x: Operand) -> Value:
        return literal_value(x, p.mode) if isinstance(x, Num) else env[x.name]

    for i in p.topological_order():
        st = p.statements[i]
        rhs = st.rhs
        if isinstance(rhs, BinOp):
            env[st.target] = apply_op(rhs.op, operand(rhs.left), operand(rhs.right))
        else:
            env[st.target] = operand(rhs)
    return env


def evaluate(p: Program) -> Value:
    return evaluate_all(p)[p.query]


def dependencies(p: Program, name: str | None = None) -> set[str]:
    """Transitive set of variables needed to compute ``name`` (itself included)."""
    bindings = p.bindings
    needed: set[str] = set()
    stack = [p.query if name is None else name]
    while stack:
        v = stack.pop()
        if v in needed:
            continue
        needed.add(v)
        stack.extend(bindings[v].refs)
    return needed


@dataclass(frozen=True)
class Scratchpad:
    steps: tuple[str, ...]
    final: Value

    @property
    def text(self) -> str:
        return ";".join(self.steps)

    def __str__(self) -> str:
        return self.text


def trace(p: Program) -> Scratchpad:
    """Step-by-step solution restricted to the statements the query needs.

    Each needed statement contributes its verbatim form, then the form with
    variables substituted by their values (only when an operator remains),
    then the resolved value.  ``A=1+2,B=A+3,B=?`` gives
    ``A=1+2;A=3;B=A+3;B=3+3;B=6``.
    """
    needed = dependencies(p)
    env = evaluate_all(p)
    steps: list[str] = []
    for i in p.topological_order():
        st = p.statements[i]
        if st.target not in needed:
            continue
        steps.append(render_statement(st))
        rhs = st.rhs
        if isinstance(rhs, BinOp):
            if st.refs:
                sub = [str(env[x.name]) if isinstance(x, Var) else x.digits for x in (rhs.left, rhs.right)]
                steps.append(f"{st.target}={sub[0]}{rhs.op.glyph}{sub[1]}")
            steps.append(f"{st.target}={env[st.target]}")
        elif isinstance(rhs, Var):
            steps.append(f"{st.target}={env[st.target]}")
    return Scratchpad(tuple(steps), env[p.query])
