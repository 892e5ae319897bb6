"""Best-first program enumeration and per-task solving.

Both searches emit programs in non-increasing log-prior order with ties
broken by the canonical program text, so a fixed library and budget always
produce the same stream.

enumerate_programs grows partial programs hole by hole; a partial's
priority adds, for every open hole, the best log probability any candidate
could contribute, which never underestimates a completion's prior.

solve_task exploits the shape of equation-valued programs: every one is a
chain prim(...(prim($0, i1), ...), ik), so program search is a best-first
walk over equation states with one action per (production, literal
arguments) pair.  Integer arguments come from the literals 0..10 here;
newConstGen composites are reachable through enumerate_programs only.
States are deduplicated, keeping the best-priority program per state.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .equations import Equation, check_solved
from .grammar import CTX_TINT, CTX_TINT_INNER, CTX_TSTR, Library
from .primitives import PrimitiveError, apply_primitive
from .programs import (
    AbsRef,
    Apply,
    EvalError,
    IntLit,
    Lambda,
    Prim,
    Term,
    TINT,
    TSTR,
    VarRef,
    apply_abstraction,
    arrow,
    render_program,
)


@dataclass(frozen=True)
class Task:
    id: str
    template_id: str
    input: Equation
    goal: Fraction


@dataclass(frozen=True)
class SearchBudget:
    max_expansions: int = 50_000
    wall_timeout: float = 1000.0
    max_program_cost: int = 10_000


# --- generic enumeration ------------------------------------------------------


@dataclass(frozen=True)
class _Hole:
    ctx: str


def _fill_leftmost(term, replacement):
    tt = type(term)
    if tt is _Hole:
        return replacement, True
    if tt is Lambda:
        b, ok = _fill_leftmost(term.body, replacement)
        return (Lambda(b) if ok else term), ok
    if tt is Apply:
        f, ok = _fill_leftmost(term.fn, replacement)
        if ok:
            return Apply(f, term.arg), True
        a, ok = _fill_leftmost(term.arg, replacement)
        return (Apply(term.fn, a) if ok else term), ok
    return term, False


def _render_partial(term) -> str:
    """Like render_program but hole markers sort before any real token."""
    tt = type(term)
    if tt is _Hole:
        return "\x00"
    if tt is Lambda:
        return f"(lambda {_render_partial(term.body)})"
    if tt is Apply:
        parts = []
        head = term
        while type(head) is Apply:
            parts.append(_render_partial(head.arg))
            head = head.fn
        parts.append(_render_partial(head))
        return "(" + " ".join(reversed(parts)) + ")"
    return render_program(term)


def _min_cost(term) -> int:
    """Lower bound on the cost of any completion (holes cost 100)."""
    tt = type(term)
    if tt is Lambda:
        return 1 + _min_cost(term.body)
    if tt is Apply:
        return 1 + _min_cost(term.fn) + _min_cost(term.arg)
    return 100


def _candidate_head(c) -> Term:
    if c.kind == "var":
        return VarRef(0)
    if c.kind == "lit":
        return IntLit(c.payload)
    if c.kind == "prim":
        return Prim(c.payload.item)
    return AbsRef(c.payload.item)


def enumerate_programs(
    lib: Library,
    request,
    budget: SearchBudget,
) -> Iterator[tuple[Term, float]]:
    """Yield (program, log_prior) streams for request tstr -> tstr or tint."""
    if request == arrow(TSTR, TSTR):
        root = Lambda(_Hole(CTX_TSTR))
        holes = (CTX_TSTR,)
    elif request == TINT:
        root = _Hole(CTX_TINT)
        holes = (CTX_TINT,)
    else:
        raise ValueError(f"unsupported request type {request!r}")

    bounds = {
        ctx: lib.max_log_prob(ctx)
        for ctx in (CTX_TSTR, CTX_TINT, CTX_TINT_INNER)
    }
    seq = itertools.count()
    start = time.monotonic()
    heap = [(-sum(bounds[h] for h in holes), _render_partial(root), next(seq), root, holes, 0.0)]
    expansions = 0
    while heap:
        neg_priority, _, _, term, open_holes, logp = heapq.heappop(heap)
        if not open_holes:
            yield term, logp
            continue
        if expansions >= budget.max_expansions:
            return
        expansions += 1
        if expansions % 512 == 0 and time.monotonic() - start > budget.wall_timeout:
            return
        ctx = open_holes[0]
        rest = open_holes[1:]
        for c in lib.candidates(ctx):
            head = _candidate_head(c)
            for arg_ctx in c.arg_ctxs:
                head = Apply(head, _Hole(arg_ctx))
            child, ok = _fill_leftmost(term, head)
            child_holes = c.arg_ctxs + rest
            if _min_cost(child) > budget.max_program_cost:
                continue
            child_logp = logp + c.log_prob
            priority = child_logp + sum(bounds[h] for h in child_holes)
            heapq.heappush(
                heap,
                (-priority, _render_partial(child), next(seq), child, child_holes, child_logp),
            )


# --- per-task solving ---------------------------------------------------------


@dataclass(frozen=True)
class _Action:
    log_prob: float
    prefix: str  # child render = prefix + parent render + suffix
    suffix: str
    head: Term  # Prim or AbsRef
    lits: tuple
    step_cost: int


def _chain_actions(lib: Library) -> list[_Action]:
    """Every (equation production, literal argument tuple) pair, ordered
    best-probability first with the render text as tiebreak."""
    lit_logp = {
        c.payload: c.log_prob for c in lib.candidates(CTX_TINT) if c.kind == "lit"
    }
    actions = []
    for c in lib.candidates(CTX_TSTR):
        if c.kind == "var":
            continue
        if c.arg_ctxs[:1] != (CTX_TSTR,) or any(a != CTX_TINT for a in c.arg_ctxs[1:]):
            continue  # not a chainable equation transformer
        head = _candidate_head(c)
        n_int = len(c.arg_ctxs) - 1
        step_cost = 100 + (1 + n_int) + 100 * n_int
        for lits in itertools.product(range(0, 11), repeat=n_int):
            logp = c.log_prob + sum(lit_logp[v] for v in lits)
            suffix = "".join(f" {v}" for v in lits) + ")"
            actions.append(
                _Action(logp, f"({c.render_key} ", suffix, head, lits, step_cost)
            )
    actions.sort(key=lambda a: (-a.log_prob, a.prefix, a.suffix))
    return actions


class _ChainNode:
    __slots__ = ("eq", "logp", "cost", "parent", "action", "seq")

    def __init__(self, eq, logp, cost, parent, action, seq):
        self.eq = eq
        self.logp = logp
        self.cost = cost
        self.parent = parent
        self.action = action
        self.seq = seq


def _apply_action(action: _Action, eq: Equation):
    head = action.head
    if type(head) is Prim:
        return apply_primitive(head.name, eq, action.lits[0])
    return apply_abstraction(head.abstraction, (eq,) + action.lits)


def _rebuild_program(node: _ChainNode) -> Term:
    steps = []
    while node.action is not None:
        steps.append(node.action)
        node = node.parent
    body: Term = VarRef(0)
    for action in reversed(steps):
        body = Apply(action.head, body)
        for v in action.lits:
            body = Apply(body, IntLit(v))
    return Lambda(body)


def solve_task_with_stats(
    task: Task,
    lib: Library,
    budget: SearchBudget,
    k: int = 5,
    patience: Optional[int] = None,
) -> tuple[list[tuple[Term, float]], dict]:
    """Best-first chain search.

    ``patience`` optionally caps how many further expansions to spend after
    a solution has been found; it trades completeness of the k-list for
    wake-phase throughput and keeps runs deterministic (the cutoff counts
    expansions, not time).
    """
    actions = _chain_actions(lib)
    var_logp = next(c.log_prob for c in lib.candidates(CTX_TSTR) if c.kind == "var")
    found: list[tuple[Term, float]] = []
    cutoff = budget.max_expansions

    root = _ChainNode(task.input, var_logp, 101, None, None, 0)
    if check_solved(task.input) == task.goal:
        found.append((Lambda(VarRef(0)), var_logp))
        if patience is not None:
            cutoff = min(cutoff, patience)

    visited = {task.input: True}
    heap = []

    def push_cursor(node: _ChainNode, rank: int):
        while rank < len(actions):
            action = actions[rank]
            if node.cost + action.step_cost > budget.max_program_cost:
                rank += 1  # later actions may be cheaper only in logp, not cost
                continue
            child_logp = node.logp + action.log_prob
            heapq.heappush(heap, (-child_logp, node.seq, rank, node))
            return

    push_cursor(root, 0)
    expansions = 0
    nodes_made = 0
    start = time.monotonic()
    while heap and len(found) < k and expansions < cutoff:
        expansions += 1
        if expansions % 1024 == 0 and time.monotonic() - start > budget.wall_timeout:
            break
        neg_logp, _, rank, node = heapq.heappop(heap)
        push_cursor(node, rank + 1)
        action = actions[rank]
        try:
            child_eq = _apply_action(action, node.eq)
        except (PrimitiveError, EvalError):
            continue
        if child_eq in visited:
            continue
        visited[child_eq] = True
        nodes_made += 1
        child = _ChainNode(
            child_eq, -neg_logp, node.cost + action.step_cost, node, action, nodes_made
        )
        if check_solved(child_eq) == task.goal:
            found.append((_rebuild_program(child), child.logp))
            if patience is not None:
                cutoff = min(cutoff, expansions + patience)
        push_cursor(child, 0)

    stats = {
        "expansions": expansions,
        "states": len(visited),
        "solutions": len(found),
    }
    return found, stats


def solve_task(
    task: Task,
    lib: Library,
    budget: SearchBudget,
    k: int = 5,
) -> list[tuple[Term, float]]:
    """Up to k distinct programs that solve the task, best log-prior first."""
    found, _ = solve_task_with_stats(task, lib, budget, k)
    return found
