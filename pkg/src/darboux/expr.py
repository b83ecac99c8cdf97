"""Expression DSL for surface components, curve coordinates and dilations.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | power
    power   := primary ("^" unary)?          # right associative
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Names are constants (``pi``, ``e``), whitelisted functions, or variables
from the declared set.  Evaluation is generic: bind variables to floats for
plain values or to :mod:`darboux.jets` jets for exact derivatives.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from darboux import jets

__all__ = [
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "evaluate",
    "to_text",
    "FUNCTIONS",
    "CONSTANTS",
    "KNOWN_VARIABLES",
]

CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {name: (1, fn) for name, fn in jets.ELEMENTARY.items()}
FUNCTIONS["atan2"] = (2, jets.atan2)
# names the DSL reserves for variables; anything else unknown is a typo
KNOWN_VARIABLES = frozenset({"t", "u", "v"})


class ExprError(ValueError):
    """Base class for DSL errors; carries a character span into ``text``."""

    def __init__(self, message: str, text: str = "", span: tuple[int, int] = (0, 0)):
        self.message = message
        self.text = text
        self.span = span
        super().__init__(self._format())

    @property
    def position(self) -> int:
        return self.span[0]

    def _format(self) -> str:
        if not self.text:
            return self.message
        start, end = self.span
        caret = " " * start + "^" * max(1, end - start)
        return f"{self.message} at position {start}\n  {self.text}\n  {caret}"


class ExprSyntaxError(ExprError):
    """Malformed text, unknown names, arity mismatches, disallowed variables."""


class ExprEvalError(ExprError):
    """A domain error raised while evaluating a well-formed expression."""


# -- tree -------------------------------------------------------------------
# Spans are excluded from equality so that structurally identical trees
# compare equal regardless of formatting.


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


Node = Union[Num, Const, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source text."""

    text: str
    root: Node
    variables: frozenset[str]

    def __call__(self, **bindings):
        return evaluate(self, bindings)

    def __str__(self) -> str:
        return to_text(self.root)

    def free_variables(self) -> set[str]:
        return _free(self.root)


def _free(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return _free(node.operand)
    if isinstance(node, BinOp):
        return _free(node.left) | _free(node.right)
    if isinstance(node, Call):
        out: set[str] = set()
        for a in node.args:
            out |= _free(a)
        return out
    return set()


# -- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    start: int
    end: int


def _lex(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {text[pos]!r}", text, (pos, pos + 1)
            )
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    toks.append(_Tok("end", "", len(text), len(text)))
    return toks


# -- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str]):
        self.text = text
        self.allowed = allowed
        self.toks = _lex(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok: _Tok):
        raise ExprSyntaxError(message, self.text, (tok.start, max(tok.end, tok.start + 1)))

    def expect(self, op: str) -> _Tok:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            self.fail(f"expected {op!r}, found {found}", tok)
        return self.take()

    def parse(self) -> Node:
        if self.peek().kind == "end":
            self.fail("empty expression", self.peek())
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.fail(f"unexpected {tok.text!r}", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            node = BinOp(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            rhs = self.unary()
            node = BinOp(op, node, rhs, (node.span[0], rhs.span[1]))
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.take()
            operand = self.unary()
            if tok.text == "+":
                return operand
            return Neg(operand, (tok.start, operand.span[1]))
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            exponent = self.unary()
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def primary(self) -> Node:
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                self.fail("number out of range", tok)
            return Num(value, (tok.start, tok.end))
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            close = self.expect(")")
            # re-span to include the parentheses
            return _respan(inner, (tok.start, close.end))
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        self.fail(f"expected a value, found {found}", tok)

    def name(self, tok: _Tok) -> Node:
        name = tok.text
        is_call = self.peek().kind == "op" and self.peek().text == "("
        if name in FUNCTIONS:
            if not is_call:
                self.fail(f"function {name!r} needs an argument list", tok)
            self.take()
            args = [self.expr()]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.take()
                args.append(self.expr())
            close = self.expect(")")
            arity = FUNCTIONS[name][0]
            if len(args) != arity:
                raise ExprSyntaxError(
                    f"{name} takes {arity} argument{'s' if arity > 1 else ''}, got {len(args)}",
                    self.text,
                    (tok.start, close.end),
                )
            return Call(name, tuple(args), (tok.start, close.end))
        if is_call:
            self.fail(f"{name!r} is not a function", tok)
        if name in CONSTANTS:
            return Const(name, (tok.start, tok.end))
        if name in self.allowed:
            return Var(name, (tok.start, tok.end))
        if name in KNOWN_VARIABLES:
            allowed = ", ".join(sorted(self.allowed)) or "none"
            self.fail(f"variable {name!r} is not allowed here (allowed: {allowed})", tok)
        self.fail(f"unknown identifier {name!r}", tok)


def _respan(node: Node, span: tuple[int, int]) -> Node:
    return type(node)(**{**node.__dict__, "span": span})


def parse(text: str, variables: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an :class:`Expr` over the given variable names."""
    if not isinstance(text, str):
        raise ExprSyntaxError(f"expected expression text, got {type(text).__name__}")
    allowed = frozenset(variables)
    root = _Parser(text, allowed).parse()
    return Expr(text, root, allowed)


# -- evaluation -------------------------------------------------------------

_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: _div(a, b),
    "^": lambda a, b: _pow(a, b),
}


def _div(a, b):
    if not isinstance(b, jets.Jet) and b == 0:
        raise jets.JetDomainError("division by zero", 0.0)
    return a / b


def _pow(a, b):
    if isinstance(a, jets.Jet) or isinstance(b, jets.Jet):
        return a**b
    if a < 0 and not float(b).is_integer():
        raise jets.JetDomainError(f"fractional power of negative base {a!r}", a)
    if a == 0 and b < 0:
        raise jets.JetDomainError("zero raised to a negative power", 0.0)
    try:
        return float(a) ** float(b)
    except OverflowError as exc:
        raise jets.JetDomainError("power overflowed", a) from exc


def evaluate(expr: Expr | Node, bindings: Mapping[str, object]):
    """Evaluate with variables bound to floats or jets (one jet context)."""
    if isinstance(expr, Expr):
        text, root = expr.text, expr.root
        missing = expr.free_variables() - set(bindings)
        if missing:
            raise ExprEvalError(f"unbound variable(s): {', '.join(sorted(missing))}", text)
    else:
        text, root = "", expr
    return _eval(root, bindings, text)


def _eval(node: Node, env: Mapping[str, object], text: str):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprEvalError(f"unbound variable {node.name!r}", text, node.span) from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env, text)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, text)
        b = _eval(node.right, env, text)
        return _apply(node, lambda: _BINARY[node.op](a, b), text)
    if isinstance(node, Call):
        args = [_eval(a, env, text) for a in node.args]
        fn = FUNCTIONS[node.name][1]
        return _apply(node, lambda: fn(*args), text)
    raise TypeError(f"not an expression node: {node!r}")


def _apply(node: Node, thunk, text: str):
    try:
        out = thunk()
    except (jets.JetDomainError, ZeroDivisionError, OverflowError) as exc:
        raise ExprEvalError(str(exc), text, node.span) from exc
    if isinstance(out, float) and not math.isfinite(out):
        raise ExprEvalError("non-finite result", text, node.span)
    return out


# -- printing ---------------------------------------------------------------


def _num_text(x: float) -> str:
    s = repr(float(x))
    return s


def to_text(node: Node | Expr) -> str:
    """Render a tree as DSL text that re-parses to an identical tree."""
    if isinstance(node, Expr):
        node = node.root
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, (Const, Var)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")
