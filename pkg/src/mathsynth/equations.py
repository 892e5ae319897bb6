"""Equation syntax trees, codecs and semantic checks.

An equation is an immutable binary tree.  Internal nodes carry one of the
operators ``=``, ``+``, ``-``, ``*``, ``/``; leaves are integer constants or
the single variable ``x``.  The ``=`` operator appears exactly once, at the
root (the Node constructor rejects nested ``=``).  Rewrites never mutate a
tree; they build a new one that shares untouched subtrees.

Two text codecs are provided.  The prefix codec is the canonical wire format:
fully parenthesized, whitespace separated, e.g. ``(= (+ (* 2 x) 1) 7)``.
The infix codec accepts human-style strings such as ``2x + 1 = 7`` and
renders back with minimal parentheses.

Subtrees are addressed by pre-order index: the root is 0 and the left
subtree is numbered completely before the right one.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Union

OPS = ("=", "+", "-", "*", "/")
ARITH_OPS = ("+", "-", "*", "/")


class EquationError(Exception):
    """Malformed tree, bad subtree index, parse failure or bad evaluation."""


class Const:
    """Integer constant leaf."""

    __slots__ = ("value", "size", "has_var", "_hash")

    def __init__(self, value: int):
        self.value = value
        self.size = 1
        self.has_var = False
        self._hash = hash(("const", value))

    def __eq__(self, other):
        return self is other or (type(other) is Const and other.value == self.value)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Const({self.value})"


class Var:
    """The variable leaf; every equation speaks about the same ``x``."""

    __slots__ = ("size", "has_var", "_hash")

    def __init__(self):
        self.size = 1
        self.has_var = True
        self._hash = hash("the-variable-x")

    def __eq__(self, other):
        return type(other) is Var

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "Var()"


X = Var()


class Node:
    """Binary operator node.  ``size``, ``has_var`` and the hash are cached."""

    __slots__ = ("op", "left", "right", "size", "has_var", "_hash")

    def __init__(self, op: str, left: "Expr", right: "Expr"):
        if op not in OPS:
            raise EquationError(f"unknown operator {op!r}")
        if (type(left) is Node and left.op == "=") or (
            type(right) is Node and right.op == "="
        ):
            raise EquationError("'=' may only appear at the root of an equation")
        self.op = op
        self.left = left
        self.right = right
        self.size = 1 + left.size + right.size
        self.has_var = left.has_var or right.has_var
        self._hash = hash((op, left._hash, right._hash))

    def __eq__(self, other):
        if self is other:
            return True
        if (
            type(other) is not Node
            or other._hash != self._hash
            or other.op != self.op
        ):
            return False
        return other.left == self.left and other.right == self.right

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Node({self.op!r}, {self.left!r}, {self.right!r})"


Expr = Union[Const, Var, Node]
Equation = Node  # an "="-rooted Node


def equation(left: Expr, right: Expr) -> Equation:
    return Node("=", left, right)


def is_equation(e: Expr) -> bool:
    return type(e) is Node and e.op == "="


def sides(e: Equation) -> tuple[Expr, Expr]:
    if not is_equation(e):
        raise EquationError("expected an '='-rooted tree")
    return e.left, e.right


def node_count(e: Expr) -> int:
    return e.size


def subtree_at(e: Expr, i: int) -> Expr:
    """Subtree whose pre-order index is ``i`` (root = 0, left before right)."""
    if i < 0 or i >= e.size:
        raise EquationError(f"subtree index {i} out of range for {e.size} nodes")
    while i:
        left = e.left
        if i <= left.size:
            e, i = left, i - 1
        else:
            e, i = e.right, i - 1 - left.size
    return e


def replace_subtree(e: Expr, i: int, r: Expr) -> Expr:
    """Copy of ``e`` with the subtree at pre-order index ``i`` replaced by ``r``.

    Untouched subtrees are shared with ``e``.  The replacement may not
    introduce a nested ``=``: replacing the root of an equation requires an
    equation, and any deeper replacement requires an ``=``-free tree.
    """
    if i < 0 or i >= e.size:
        raise EquationError(f"subtree index {i} out of range for {e.size} nodes")
    if i == 0:
        if is_equation(r) != is_equation(e):
            raise EquationError("root replacement must preserve equation-ness")
        return r
    if is_equation(r):
        raise EquationError("'=' may only appear at the root of an equation")
    return _splice(e, i, r)


def _splice(t: Expr, i: int, r: Expr) -> Expr:
    if i == 0:
        return r
    left = t.left
    if i <= left.size:
        return Node(t.op, _splice(left, i - 1, r), t.right)
    return Node(t.op, left, _splice(t.right, i - 1 - left.size, r))


def eval_at(e: Expr, x) -> Fraction:
    """Exact rational value of an ``=``-free expression at ``x``."""
    t = type(e)
    if t is Const:
        return Fraction(e.value)
    if t is Var:
        return Fraction(x)
    op = e.op
    if op == "=":
        raise EquationError("'=' has no numeric value; evaluate each side")
    a = eval_at(e.left, x)
    b = eval_at(e.right, x)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise EquationError("division by zero")
    return a / b


def _reduced_value(t: Expr) -> Optional[Fraction]:
    """Value of a finished right-hand side: a constant, or a '/' of two
    constants already in lowest terms with denominator >= 2."""
    if type(t) is Const:
        return Fraction(t.value)
    if (
        type(t) is Node
        and t.op == "/"
        and type(t.left) is Const
        and type(t.right) is Const
    ):
        p, q = t.left.value, t.right.value
        if q >= 2 and math.gcd(p, q) == 1:
            return Fraction(p, q)
    return None


def check_solved(e: Equation) -> Optional[Fraction]:
    """The solution shown by ``e`` if it has solved form, else None.

    Solved form means one side is exactly ``x`` and the other is a constant
    or a lowest-terms fraction with denominator >= 2; both orientations
    count.
    """
    if not is_equation(e):
        raise EquationError("expected an '='-rooted tree")
    if type(e.left) is Var:
        return _reduced_value(e.right)
    if type(e.right) is Var:
        return _reduced_value(e.left)
    return None


# --- prefix codec ---------------------------------------------------------

_INT_CHARS = frozenset("0123456789")


def _is_int_token(tok: str) -> bool:
    body = tok[1:] if tok[0] == "-" else tok
    return bool(body) and all(c in _INT_CHARS for c in body)


def parse_prefix(text: str) -> Expr:
    """Parse the fully parenthesized prefix form, e.g. ``(+ (* 2 x) 1)``."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise EquationError("empty input")
    expr, pos = _parse_prefix(tokens, 0)
    if pos != len(tokens):
        raise EquationError(f"trailing input after position {pos}: {tokens[pos]!r}")
    return expr


def _parse_prefix(tokens: list[str], pos: int) -> tuple[Expr, int]:
    if pos >= len(tokens):
        raise EquationError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        if pos + 1 >= len(tokens) or tokens[pos + 1] not in OPS:
            raise EquationError(f"expected operator after '(' at token {pos + 1}")
        op = tokens[pos + 1]
        left, pos = _parse_prefix(tokens, pos + 2)
        right, pos = _parse_prefix(tokens, pos)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise EquationError(f"expected ')' at token {pos}")
        return Node(op, left, right), pos + 1
    if tok == "x":
        return X, pos + 1
    if _is_int_token(tok):
        return Const(int(tok)), pos + 1
    raise EquationError(f"unexpected token {tok!r}")


def render_prefix(e: Expr) -> str:
    if type(e) is Const:
        return str(e.value)
    if type(e) is Var:
        return "x"
    return f"({e.op} {render_prefix(e.left)} {render_prefix(e.right)})"


def parse_equation(text: str) -> Equation:
    """Prefix-parse and insist on an ``=`` root."""
    e = parse_prefix(text)
    if not is_equation(e):
        raise EquationError("expected an equation with '=' at the root")
    return e


# --- infix codec ----------------------------------------------------------

_PREC = {"=": 0, "+": 1, "-": 1, "*": 2, "/": 2}


def _tokenize_infix(text: str) -> list[str]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in _INT_CHARS:
            j = i + 1
            while j < n and text[j] in _INT_CHARS:
                j += 1
            tokens.append(text[i:j])
            i = j
        elif c == "x":
            tokens.append("x")
            i += 1
        elif c in "()=+-*/":
            tokens.append(c)
            i += 1
        else:
            raise EquationError(f"unexpected character {c!r} in infix input")
    return tokens


class _InfixParser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise EquationError("unexpected end of infix input")
        self.pos += 1
        return tok

    def parse_equation(self) -> Equation:
        left = self.parse_expr()
        if self.next() != "=":
            raise EquationError("expected '=' between the two sides")
        right = self.parse_expr()
        if self.peek() is not None:
            raise EquationError(f"trailing input: {self.peek()!r}")
        return Node("=", left, right)

    def parse_expr(self) -> Expr:
        e = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.next()
            e = Node(op, e, self.parse_term())
        return e

    def parse_term(self) -> Expr:
        e = self.parse_factor()
        while True:
            tok = self.peek()
            if tok in ("*", "/"):
                op = self.next()
                e = Node(op, e, self.parse_factor())
            elif tok == "x" or tok == "(":
                # implicit multiplication: 2x, 2(x+3), (1+2)x
                e = Node("*", e, self.parse_factor())
            else:
                return e

    def parse_factor(self) -> Expr:
        tok = self.next()
        if tok == "(":
            e = self.parse_expr()
            if self.next() != ")":
                raise EquationError("unbalanced parentheses")
            return e
        if tok == "x":
            return X
        if tok == "-":
            follow = self.next()
            if not _is_int_token(follow):
                raise EquationError("'-' here must precede an integer literal")
            return Const(-int(follow))
        if _is_int_token(tok):
            return Const(int(tok))
        raise EquationError(f"unexpected token {tok!r} in infix input")


def parse_equation_infix(text: str) -> Equation:
    """Parse ``2x + 1 = 7`` style input; coefficients may be implicit."""
    return _InfixParser(_tokenize_infix(text)).parse_equation()


def parse_infix_expr(text: str) -> Expr:
    parser = _InfixParser(_tokenize_infix(text))
    e = parser.parse_expr()
    if parser.peek() is not None:
        raise EquationError(f"trailing input: {parser.peek()!r}")
    return e


def render_infix(e: Expr) -> str:
    return _render_infix(e, 0, False)


def _render_infix(e: Expr, parent_prec: int, is_right: bool) -> str:
    if type(e) is Const:
        return str(e.value)
    if type(e) is Var:
        return "x"
    prec = _PREC[e.op]
    # coefficient forms: 2x, 2(x + 3)
    if e.op == "*" and type(e.left) is Const:
        if type(e.right) is Var:
            s = f"{e.left.value}x"
        else:
            s = f"{e.left.value}({_render_infix(e.right, 0, False)})"
        if prec < parent_prec or (prec == parent_prec and is_right):
            return f"({s})"
        return s
    s = (
        f"{_render_infix(e.left, prec, False)} {e.op} "
        f"{_render_infix(e.right, prec, True)}"
    )
    if prec < parent_prec or (prec == parent_prec and is_right and e.op != "="):
        return f"({s})"
    return s
