"""Programs over the equation-rewriting primitives.

Programs are lambda terms with de Bruijn variables, written as
s-expressions: ``(lambda (simplify (sub $0 5) 0))``.  The leaves are
primitive names, integer literals 0..10 and ``$k`` references; learned
abstractions appear either by name or inline as ``#(lambda ...)``.  The
inline form is the canonical serialization: it is self-contained, so parsing
it never needs a library.

Types are simple: ``tstr`` (an equation), ``tint`` (an integer) and arrows.
Every equation-valued primitive has type ``tstr -> tint -> tstr`` with the
equation first.

Evaluation is call-by-value.  With tracing on, the evaluator records one
state per equation-valued result on the application spine, treating an
abstraction call as a single step: states produced inside an abstraction
body are not recorded.

Cost charges 100 per terminal (primitive, literal, variable or abstraction
reference) and 1 per application or lambda, so ``(lambda (sub $0 5))``
costs 303 and ``(lambda $0)`` costs 102.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .equations import Equation, Node, is_equation, render_prefix
from .primitives import EQUATION_PRIMITIVES, PrimitiveError, new_const_gen

TSTR = "tstr"
TINT = "tint"


class ProgramError(Exception):
    """Parse or type failure."""


class EvalError(Exception):
    """Runtime failure while executing a program."""


def arrow(*types):
    """Right-nested function type: arrow(a, b, c) == a -> (b -> c)."""
    if len(types) < 2:
        raise ValueError("arrow needs at least two types")
    t = types[-1]
    for arg in reversed(types[:-1]):
        t = ("->", arg, t)
    return t


def is_arrow(t) -> bool:
    return type(t) is tuple and t[0] == "->"


def render_type(t) -> str:
    if not is_arrow(t):
        return t
    lhs = render_type(t[1])
    if is_arrow(t[1]):
        lhs = f"({lhs})"
    return f"{lhs} -> {render_type(t[2])}"


def parse_type(s: str):
    parts = [p.strip() for p in s.split("->")]
    if any(not p or "(" in p for p in parts):
        raise ProgramError(f"cannot parse type {s!r}")
    if len(parts) == 1:
        if parts[0] not in (TSTR, TINT):
            raise ProgramError(f"unknown base type {parts[0]!r}")
        return parts[0]
    return arrow(*parts)


EQ_PRIM_TYPE = arrow(TSTR, TINT, TSTR)
PRIM_TYPES = {name: EQ_PRIM_TYPE for name in EQUATION_PRIMITIVES}
PRIM_TYPES["newConstGen"] = arrow(TINT, TINT, TINT, TINT)


# --- terms ------------------------------------------------------------------


@dataclass(frozen=True)
class Lambda:
    body: "Term"


@dataclass(frozen=True)
class Apply:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class VarRef:
    index: int


@dataclass(frozen=True)
class Prim:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int


class Abstraction:
    """A named, reusable program fragment; equality is by body alone."""

    __slots__ = ("name", "body", "origin_iteration", "_hash", "_type")

    def __init__(self, body: "Term", name: Optional[str] = None, origin_iteration: int = 0):
        if type(body) is not Lambda:
            raise ProgramError("an abstraction body must start with a lambda")
        self.body = body
        self.name = name
        self.origin_iteration = origin_iteration
        self._hash = hash(("abstraction", body))
        self._type = None

    @property
    def arity(self) -> int:
        n, t = 0, self.body
        while type(t) is Lambda:
            n, t = n + 1, t.body
        return n

    @property
    def type(self):
        if self._type is None:
            self._type = infer_type(self.body)
        return self._type

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Abstraction) and other.body == self.body
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Abstraction({self.name or render_program(self.body)})"


@dataclass(frozen=True)
class AbsRef:
    abstraction: Abstraction


Term = Union[Lambda, Apply, VarRef, Prim, IntLit, AbsRef]
Program = Term


# --- serialization ----------------------------------------------------------


def render_program(p: Term, named: bool = False) -> str:
    """S-expression text.  Abstraction references render inline as
    ``#(lambda ...)`` unless ``named`` is set and the abstraction has a name."""
    tt = type(p)
    if tt is Lambda:
        return f"(lambda {render_program(p.body, named)})"
    if tt is Apply:
        parts = []
        head = p
        while type(head) is Apply:
            parts.append(render_program(head.arg, named))
            head = head.fn
        parts.append(render_program(head, named))
        return "(" + " ".join(reversed(parts)) + ")"
    if tt is VarRef:
        return f"${p.index}"
    if tt is Prim:
        return p.name
    if tt is IntLit:
        return str(p.value)
    if tt is AbsRef:
        a = p.abstraction
        if named and a.name:
            return a.name
        return f"#{render_program(a.body, named)}"
    raise ProgramError(f"cannot render {p!r}")


def _tokenize_program(text: str) -> list[str]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "#" and i + 1 < n and text[i + 1] == "(":
            tokens.append("#(")
            i += 2
        elif c in "()":
            tokens.append(c)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_program(text: str, lib=None) -> Term:
    """Parse s-expression program text.

    ``lib`` may be a Library, a dict of name -> Abstraction, or None.  An
    inline ``#(lambda ...)`` is matched against the library by body when one
    is given, so it keeps its name; otherwise it parses as an anonymous
    abstraction.
    """
    abstractions = _abstraction_index(lib)
    tokens = _tokenize_program(text)
    if not tokens:
        raise ProgramError("empty program text")
    term, pos = _parse_term(tokens, 0, 0, abstractions)
    if pos != len(tokens):
        raise ProgramError(f"trailing input: {tokens[pos]!r}")
    return term


def _abstraction_index(lib) -> dict:
    if lib is None:
        return {}
    if hasattr(lib, "abstractions"):
        items = lib.abstractions()
    elif isinstance(lib, dict):
        items = lib.values()
    else:
        items = list(lib)
    by_name = {}
    by_body = {}
    for a in items:
        if a.name:
            by_name[a.name] = a
        by_body[a.body] = a
    by_name["__bodies__"] = by_body
    return by_name


def _parse_term(tokens, pos, depth, abstractions):
    if pos >= len(tokens):
        raise ProgramError("unexpected end of program text")
    tok = tokens[pos]
    if tok == "(":
        if pos + 1 < len(tokens) and tokens[pos + 1] == "lambda":
            body, pos = _parse_term(tokens, pos + 2, depth + 1, abstractions)
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ProgramError("expected ')' after lambda body")
            return Lambda(body), pos + 1
        head, pos = _parse_term(tokens, pos + 1, depth, abstractions)
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            arg, pos = _parse_term(tokens, pos, depth, abstractions)
            args.append(arg)
        if pos >= len(tokens):
            raise ProgramError("unbalanced parentheses")
        if not args:
            raise ProgramError("application needs at least one argument")
        term = head
        for a in args:
            term = Apply(term, a)
        return term, pos + 1
    if tok == "#(":
        return _parse_inline_abstraction(tokens, pos, abstractions)
    if tok == ")":
        raise ProgramError("unexpected ')'")
    if tok.startswith("$"):
        try:
            k = int(tok[1:])
        except ValueError:
            raise ProgramError(f"bad variable token {tok!r}") from None
        if k < 0 or k >= depth:
            raise ProgramError(f"unbound variable {tok} at lambda depth {depth}")
        return VarRef(k), pos + 1
    if tok.isdigit() or (tok[0] == "-" and tok[1:].isdigit()):
        v = int(tok)
        if not 0 <= v <= 10:
            raise ProgramError(f"integer literal {v} outside 0..10")
        return IntLit(v), pos + 1
    if tok in PRIM_TYPES:
        return Prim(tok), pos + 1
    if tok in abstractions:
        return AbsRef(abstractions[tok]), pos + 1
    raise ProgramError(f"unknown primitive {tok!r}")


def _parse_inline_abstraction(tokens, pos, abstractions):
    # pos points at "#("; reuse the lambda parser with a fresh depth of 0
    if pos + 1 >= len(tokens) or tokens[pos + 1] != "lambda":
        raise ProgramError("'#(' must introduce a lambda")
    body, pos = _parse_term(tokens, pos + 2, 1, abstractions)
    if pos >= len(tokens) or tokens[pos] != ")":
        raise ProgramError("expected ')' after inline abstraction")
    term = Lambda(body)
    by_body = abstractions.get("__bodies__", {})
    found = by_body.get(term)
    return AbsRef(found if found is not None else Abstraction(term)), pos + 1


def program_cost(p: Term) -> int:
    """100 per terminal, 1 per application node, 1 per lambda."""
    tt = type(p)
    if tt is Lambda:
        return 1 + program_cost(p.body)
    if tt is Apply:
        return 1 + program_cost(p.fn) + program_cost(p.arg)
    return 100


def subterms(p: Term):
    """Pre-order walk; does not descend into abstraction bodies."""
    yield p
    tt = type(p)
    if tt is Lambda:
        yield from subterms(p.body)
    elif tt is Apply:
        yield from subterms(p.fn)
        yield from subterms(p.arg)


# --- type inference ----------------------------------------------------------


def _resolve(t, subst):
    while type(t) is int and t in subst:
        t = subst[t]
    if is_arrow(t):
        return ("->", _resolve(t[1], subst), _resolve(t[2], subst))
    return t


def _unify(a, b, subst):
    a = _resolve(a, subst)
    b = _resolve(b, subst)
    if a == b:
        return
    if type(a) is int:
        subst[a] = b
        return
    if type(b) is int:
        subst[b] = a
        return
    if is_arrow(a) and is_arrow(b):
        _unify(a[1], b[1], subst)
        _unify(a[2], b[2], subst)
        return
    raise ProgramError(f"type mismatch: {render_type_safe(a)} vs {render_type_safe(b)}")


def render_type_safe(t) -> str:
    if type(t) is int:
        return f"t{t}"
    if is_arrow(t):
        return f"({render_type_safe(t[1])} -> {render_type_safe(t[2])})"
    return t


def _default_free(t):
    if type(t) is int:
        return TSTR
    if is_arrow(t):
        return ("->", _default_free(t[1]), _default_free(t[2]))
    return t


def infer_type(p: Term, env: tuple = ()):
    """Principal simple type with unconstrained positions defaulting to tstr.

    Fresh type variables are integers during inference; callers only ever
    see concrete types built from tstr, tint and arrows.
    """
    subst: dict = {}
    counter = [0]

    def fresh():
        counter[0] += 1
        return counter[0]

    def infer(term, env):
        tt = type(term)
        if tt is IntLit:
            return TINT
        if tt is Prim:
            return PRIM_TYPES[term.name]
        if tt is AbsRef:
            return term.abstraction.type
        if tt is VarRef:
            if term.index >= len(env):
                raise ProgramError(f"unbound variable ${term.index}")
            return env[term.index]
        if tt is Lambda:
            tv = fresh()
            tbody = infer(term.body, (tv,) + env)
            return ("->", _resolve(tv, subst), tbody)
        if tt is Apply:
            tf = infer(term.fn, env)
            ta = infer(term.arg, env)
            tr = fresh()
            _unify(tf, ("->", ta, tr), subst)
            return _resolve(tr, subst)
        raise ProgramError(f"cannot type {term!r}")

    return _default_free(_resolve(infer(p, env), subst))


# --- evaluation ---------------------------------------------------------------


_STEP_LIMIT = 100_000


class _PrimVal:
    __slots__ = ("name", "args")

    def __init__(self, name, args=()):
        self.name = name
        self.args = args


class _AbsVal:
    __slots__ = ("abstraction", "args")

    def __init__(self, abstraction, args=()):
        self.abstraction = abstraction
        self.args = args


class _Closure:
    __slots__ = ("term", "env")

    def __init__(self, term, env):
        self.term = term
        self.env = env


def _run_prim(name: str, args):
    if name == "newConstGen":
        return new_const_gen(*args)
    e, i = args
    if not isinstance(e, Node) or not is_equation(e):
        raise EvalError(f"{name} expects an equation as its first argument")
    try:
        return EQUATION_PRIMITIVES[name](e, i)
    except PrimitiveError as err:
        raise EvalError(
            f"{name} at index {i} failed on {render_prefix(e)}: {err}"
        ) from err


def _prim_arity(name: str) -> int:
    return 3 if name == "newConstGen" else 2


class _Machine:
    def __init__(self, record):
        self.record = record
        self.steps = 0

    def eval(self, term, env, rec):
        self.steps += 1
        if self.steps > _STEP_LIMIT:
            raise EvalError("evaluation step limit exceeded")
        tt = type(term)
        if tt is IntLit:
            return term.value
        if tt is VarRef:
            return env[term.index]
        if tt is Prim:
            return _PrimVal(term.name)
        if tt is AbsRef:
            return _AbsVal(term.abstraction)
        if tt is Lambda:
            return _Closure(term, env)
        # application spine
        head = term
        args = []
        while type(head) is Apply:
            args.append(head.arg)
            head = head.fn
        args.reverse()
        val = self.eval(head, env, rec)
        argvals = [self.eval(a, env, rec) for a in args]
        result = self.apply_value(val, argvals, rec)
        if rec is not None and isinstance(result, Node) and is_equation(result):
            rec.append(result)
        return result

    def apply_value(self, val, argvals, rec):
        for pos, arg in enumerate(argvals):
            tv = type(val)
            if tv is _PrimVal:
                got = val.args + (arg,)
                if len(got) == _prim_arity(val.name):
                    val = _run_prim(val.name, got)
                else:
                    val = _PrimVal(val.name, got)
            elif tv is _AbsVal:
                got = val.args + (arg,)
                a = val.abstraction
                if len(got) == a.arity:
                    core = a.body
                    for _ in range(a.arity):
                        core = core.body
                    # de Bruijn: $0 is the innermost binder, i.e. the last arg
                    val = self.eval(core, tuple(reversed(got)), None)
                else:
                    val = _AbsVal(a, got)
            elif tv is _Closure:
                val = self.eval(val.term.body, (arg,) + val.env, rec)
            else:
                raise EvalError(f"cannot apply a non-function value to {arg!r}")
        return val


def apply_abstraction(a: Abstraction, args):
    """Run an abstraction on fully evaluated argument values."""
    machine = _Machine(False)
    return machine.apply_value(_AbsVal(a), list(args), None)


def evaluate(
    p: Term,
    input_equation: Equation,
    lib=None,
    trace: bool = False,
):
    """Run a tstr -> tstr program on an equation.

    Returns (result, states) where states is None without tracing and
    otherwise the list of equation states starting with the input and ending
    with the output.
    """
    t = infer_type(p)
    if t != arrow(TSTR, TSTR):
        raise EvalError(f"program has type {render_type_safe(t)}, expected tstr -> tstr")
    machine = _Machine(trace)
    rec = [] if trace else None
    val = machine.eval(p, (), rec)
    result = machine.apply_value(val, [input_equation], rec)
    if rec is not None and isinstance(result, Node) and is_equation(result):
        if not rec or rec[-1] is not result:
            rec.append(result)
    if not (isinstance(result, Node) and is_equation(result)):
        raise EvalError("program did not produce an equation")
    if trace:
        states = [input_equation]
        for s in rec:
            if s is not states[-1]:
                states.append(s)
        return result, states
    return result, None
