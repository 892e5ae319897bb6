"""Corpus compression: find the abstraction that best shortens a program
corpus, then rewrite the corpus to call it.

A candidate is either a whole program (no holes; duplicates collapse to a
single library call) or a lambda-free application fragment with typed holes
at argument positions.  Holes become the abstraction's parameters in order
of first occurrence; a fragment may not contain a bare de Bruijn variable,
since the variable's binder would be left outside the extracted body.

Utility follows the corpus-compression accounting: the abstraction pays its
own cost once, and every program contributes the best saving over its match
sites, floored at zero.  With cost(site) = concrete pattern cost plus filler
costs, the saving at any site of a fixed pattern is the same:
concrete_cost - 100 - arity.  Search is branch-and-bound over top-down hole
expansions; the bound assumes every remaining hole resolves for free, which
never underestimates a completion's utility.

The rewrite pass replaces leftmost-outermost non-overlapping matches and
recurses into the argument fillers, so nested occurrences still compress.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .programs import (
    AbsRef,
    Abstraction,
    Apply,
    IntLit,
    Lambda,
    Prim,
    PRIM_TYPES,
    Term,
    TINT,
    TSTR,
    VarRef,
    is_arrow,
    program_cost,
    render_program,
)

Corpus = list  # list of (task_id, Term)


class CompressionError(Exception):
    pass


@dataclass(frozen=True)
class _PHole:
    """Pattern argument hole; index is assigned in first-occurrence order."""

    index: int
    type: str


@dataclass(frozen=True)
class Pattern:
    """A fragment with argument holes, or a whole program when arity is 0."""

    term: Term  # may contain _PHole leaves
    arity: int
    whole_program: bool = False


def type_of(term: Term) -> object:
    """Type of a closed-enough corpus subterm (saturated applications)."""
    tt = type(term)
    if tt is IntLit:
        return TINT
    if tt is VarRef:
        return TSTR
    if tt is _PHole:
        return term.type
    if tt is Prim:
        return PRIM_TYPES[term.name]
    if tt is AbsRef:
        return term.abstraction.type
    if tt is Lambda:
        return ("->", TSTR, type_of(term.body))
    head = term
    n_args = 0
    while type(head) is Apply:
        n_args += 1
        head = head.fn
    t = type_of(head)
    for _ in range(n_args):
        if not is_arrow(t):
            raise CompressionError(f"over-applied term {render_program_or_pattern(term)}")
        t = t[2]
    return t


def render_program_or_pattern(term) -> str:
    tt = type(term)
    if tt is _PHole:
        return f"?{term.index}"
    if tt is Lambda:
        return f"(lambda {render_program_or_pattern(term.body)})"
    if tt is Apply:
        parts = []
        head = term
        while type(head) is Apply:
            parts.append(render_program_or_pattern(head.arg))
            head = head.fn
        parts.append(render_program_or_pattern(head))
        return "(" + " ".join(reversed(parts)) + ")"
    return render_program(term)


def render_pattern(p: Pattern) -> str:
    return render_program_or_pattern(p.term)


def subtrees(term: Term):
    """Application-structure subtrees, pre-order; skips lambda wrappers and
    does not enter abstraction bodies."""
    tt = type(term)
    if tt is Lambda:
        yield from subtrees(term.body)
        return
    yield term
    if tt is Apply:
        spine_args = []
        head = term
        while type(head) is Apply:
            spine_args.append(head.arg)
            head = head.fn
        for a in reversed(spine_args):
            yield from subtrees(a)


def _spine(term: Term):
    args = []
    head = term
    while type(head) is Apply:
        args.append(head.arg)
        head = head.fn
    args.reverse()
    return head, args


def match_pattern(pattern_term, site: Term) -> Optional[list]:
    """Fillers per hole index if the pattern matches the site, else None."""
    fillers: dict = {}

    def walk(p, s) -> bool:
        tp = type(p)
        if tp is _PHole:
            if type_of(s) != p.type:
                return False
            if p.index in fillers:
                return fillers[p.index] == s
            fillers[p.index] = s
            return True
        ts = type(s)
        if tp is not ts:
            return False
        if tp is Prim:
            return p.name == s.name
        if tp is AbsRef:
            return p.abstraction == s.abstraction
        if tp is IntLit:
            return p.value == s.value
        if tp is VarRef:
            return p.index == s.index
        if tp is Lambda:
            return walk(p.body, s.body)
        return walk(p.fn, s.fn) and walk(p.arg, s.arg)

    if not walk(pattern_term, site):
        return None
    return [fillers[i] for i in sorted(fillers)]


def pattern_cost_as_abstraction(p: Pattern) -> int:
    """Cost of the abstraction a pattern turns into."""
    return program_cost(abstraction_from_pattern(p).body)


def abstraction_from_pattern(p: Pattern) -> Abstraction:
    if p.whole_program:
        return Abstraction(p.term)

    def sub(term):
        tt = type(term)
        if tt is _PHole:
            return VarRef(p.arity - 1 - term.index)
        if tt is Apply:
            return Apply(sub(term.fn), sub(term.arg))
        return term

    body = sub(p.term)
    for _ in range(p.arity):
        body = Lambda(body)
    return Abstraction(body)


def _rewrite_site(p: Pattern, fillers: list) -> Term:
    term: Term = AbsRef(abstraction_from_pattern(p))
    for f in fillers:
        term = Apply(term, f)
    return term


def utility(p: Pattern, corpus: Corpus) -> int:
    """Exact compression utility of a pattern against a corpus."""
    a_cost = pattern_cost_as_abstraction(p) if not p.whole_program else program_cost(p.term)
    total = -a_cost
    for _, prog in corpus:
        best = 0
        sites = [prog] if p.whole_program else subtrees(prog)
        for site in sites:
            fillers = match_pattern(p.term, site)
            if fillers is None:
                continue
            rewritten = 100 + len(fillers) + sum(program_cost(f) for f in fillers)
            best = max(best, program_cost(site) - rewritten)
        total += best
    return total


def rewrite_with_abstraction(p: Pattern, corpus: Corpus) -> Corpus:
    """Replace leftmost-outermost non-overlapping matches in every program."""
    a = abstraction_from_pattern(p)

    def rw(term):
        fillers = match_pattern(p.term, term)
        if fillers is not None:
            out: Term = AbsRef(a)
            for f in fillers:
                out = Apply(out, rw(f))
            return out
        tt = type(term)
        if tt is Lambda:
            return Lambda(rw(term.body))
        if tt is Apply:
            return Apply(rw(term.fn), rw(term.arg))
        return term

    out_corpus = []
    for task_id, prog in corpus:
        if p.whole_program:
            out_corpus.append(
                (task_id, AbsRef(a) if prog == p.term else prog)
            )
        else:
            out_corpus.append((task_id, rw(prog)))
    return out_corpus


# --- search -------------------------------------------------------------------


@dataclass
class RoundInfo:
    pattern: Optional[Pattern]
    eq3_utility: int
    realized_saving: int
    candidates_scored: int


def _fill_hole(term, replacement):
    tt = type(term)
    if tt is _PHole and term.index == -1:
        return replacement, True
    if tt is Apply:
        f, ok = _fill_hole(term.fn, replacement)
        if ok:
            return Apply(f, term.arg), True
        a, ok = _fill_hole(term.arg, replacement)
        return (Apply(term.fn, a) if ok else term), ok
    return term, False


def _assign_hole_indices(term, counter):
    tt = type(term)
    if tt is _PHole:
        idx = counter[0]
        counter[0] += 1
        return _PHole(idx, term.type)
    if tt is Apply:
        return Apply(
            _assign_hole_indices(term.fn, counter),
            _assign_hole_indices(term.arg, counter),
        )
    return term


def best_pattern(
    corpus: Corpus,
    max_arity: int = 2,
    max_pattern_nodes: Optional[int] = None,
    known: Optional[set] = None,
) -> tuple[Optional[Pattern], int, int]:
    """Argmax-utility pattern via branch-and-bound.

    Returns (pattern, utility, candidates_scored); pattern is None only for
    a corpus with no candidate at all.  Ties prefer the smaller render
    string so the result never depends on exploration order.  Patterns whose
    abstraction is already in `known` are not candidates, so repeated calls
    keep mining new structure instead of re-finding old.
    """
    best: Optional[Pattern] = None
    best_u = None
    best_key = None
    scored = 0

    def consider(p: Pattern):
        nonlocal best, best_u, best_key, scored
        if known is not None and abstraction_from_pattern(p) in known:
            return
        scored += 1
        u = utility(p, corpus)
        key = (-u, render_pattern(p))
        if best_key is None or key < best_key:
            best, best_u, best_key = p, u, key

    # whole programs: duplicates collapse into a single library call
    seen = {}
    for _, prog in corpus:
        if type(prog) is Lambda and prog not in seen:
            seen[prog] = True
            if max_pattern_nodes is None or _node_count(prog) <= max_pattern_nodes:
                consider(Pattern(prog, 0, whole_program=True))

    # fragment patterns, grown top-down from a typed root hole
    all_sites = []
    for pi, (_, prog) in enumerate(corpus):
        for s in subtrees(prog):
            all_sites.append((pi, s))

    for root_type in (TSTR, TINT):
        sites = [
            (pi, s, program_cost(s)) for pi, s in all_sites if type_of(s) == root_type
        ]
        if not sites:
            continue
        # state: pattern term with -1-indexed open holes (leftmost first),
        # pending per-match subtrees per hole, fillers chosen so far
        root = _PHole(-1, root_type)
        stack = [(root, [root_type], 0, 0, False, [(pi, c, (s,), ()) for pi, s, c in sites])]
        while stack:
            term, hole_types, cc, n_args, has_prim, matches = stack.pop()
            if not matches:
                continue
            if not hole_types:
                if has_prim and n_args >= 1:
                    pat = Pattern(_assign_hole_indices(term, [0]), n_args)
                    consider(pat)
                continue
            # admissible bound: every remaining hole resolves for free
            per_prog: dict = {}
            for pi, site_cost, _, _ in matches:
                per_prog[pi] = max(per_prog.get(pi, 0), site_cost - 100)
            bound = sum(v for v in per_prog.values() if v > 0) - cc
            if best_u is not None and bound < best_u:
                continue
            ht = hole_types[0]
            rest = hole_types[1:]
            # choice 1: make this hole an argument
            if n_args < max_arity:
                new_matches = [
                    (pi, sc, pending[1:], fillers + (pending[0],))
                    for pi, sc, pending, fillers in matches
                ]
                filled, _ = _fill_hole(term, _PHole(10_000 + n_args, ht))
                stack.append((filled, rest, cc, n_args + 1, has_prim, new_matches))
            # choice 2: expand to a concrete head drawn from the match sites
            heads: dict = {}
            for pi, sc, pending, fillers in matches:
                head, args = _spine(pending[0])
                th = type(head)
                if th is VarRef or th is Lambda:
                    continue  # a bare variable cannot be extracted
                key = render_program(head) + f"/{len(args)}"
                heads.setdefault(key, (head, len(args), []))[2].append(
                    (pi, sc, pending, fillers, args)
                )
            for key in sorted(heads):
                head, n_head_args, sub_matches = heads[key]
                arg_types = _head_arg_types(head)
                if len(arg_types) < n_head_args:
                    continue
                new_term_piece: Term = head
                new_types = []
                for at in arg_types[:n_head_args]:
                    new_term_piece = Apply(new_term_piece, _PHole(-1, at))
                    new_types.append(at)
                filled, _ = _fill_hole(term, new_term_piece)
                if max_pattern_nodes is not None and _node_count(filled) > max_pattern_nodes:
                    continue
                new_matches = [
                    (pi, sc, tuple(args) + pending[1:], fillers)
                    for pi, sc, pending, fillers, args in sub_matches
                ]
                new_has_prim = has_prim or type(head) in (Prim, AbsRef)
                stack.append(
                    (filled, new_types + rest, cc + 100 + n_head_args,
                     n_args, new_has_prim, new_matches)
                )

    return best, (best_u if best_u is not None else 0), scored


def _head_arg_types(head) -> list:
    t = type_of(head)
    out = []
    while is_arrow(t):
        out.append(t[1])
        t = t[2]
    return out


def _node_count(term) -> int:
    tt = type(term)
    if tt is Lambda:
        return 1 + _node_count(term.body)
    if tt is Apply:
        return 1 + _node_count(term.fn) + _node_count(term.arg)
    return 1


def compress(
    corpus: Corpus,
    rounds: int = 3,
    max_arity: int = 2,
    max_pattern_nodes: Optional[int] = None,
    known: Optional[set] = None,
) -> tuple[list[Abstraction], Corpus]:
    """Iteratively extract the best abstraction and rewrite the corpus.

    Stops early once no candidate has positive utility.
    """
    abstractions, _info, out = compress_detailed(
        corpus, rounds, max_arity, max_pattern_nodes, known
    )
    return abstractions, out


def compress_detailed(
    corpus: Corpus,
    rounds: int = 3,
    max_arity: int = 2,
    max_pattern_nodes: Optional[int] = None,
    known: Optional[set] = None,
) -> tuple[list[Abstraction], list[RoundInfo], Corpus]:
    if rounds < 1:
        raise CompressionError("rounds must be at least 1")
    abstractions: list[Abstraction] = []
    rounds_info: list[RoundInfo] = []
    skip = set(known) if known is not None else set()
    current = list(corpus)
    for _ in range(rounds):
        pattern, u, scored = best_pattern(
            current, max_arity, max_pattern_nodes, skip or None
        )
        if pattern is None or u <= 0:
            rounds_info.append(RoundInfo(pattern, u, 0, scored))
            break
        before = sum(program_cost(p) for _, p in current)
        rewritten = rewrite_with_abstraction(pattern, current)
        after = sum(program_cost(p) for _, p in rewritten)
        abstraction = abstraction_from_pattern(pattern)
        abstractions.append(abstraction)
        skip.add(abstraction)
        rounds_info.append(RoundInfo(pattern, u, before - after, scored))
        current = rewritten
    return abstractions, rounds_info, current


def exhaustive_oracle(
    corpus: Corpus,
    max_arity: int = 2,
    max_pattern_nodes: int = 7,
) -> tuple[Pattern, int]:
    """Brute-force argmax over every candidate pattern within bounds."""
    if not corpus:
        raise CompressionError("empty corpus")
    if len(corpus) > 5 or any(_node_count(p) > 15 for _, p in corpus):
        raise CompressionError("corpus exceeds oracle bounds")
    if max_pattern_nodes > 7:
        raise CompressionError("max_pattern_nodes exceeds oracle bound")

    candidates: dict = {}

    def add(p: Pattern):
        candidates.setdefault(render_pattern(p), p)

    def anti_instances(site) -> list:
        """All hole/keep choices of a site subtree, as (term, n_holes)."""
        head, args = _spine(site)
        th = type(head)
        out = []
        if th not in (VarRef, Lambda):
            choices_per_arg = [
                anti_instances(a) + [(_PHole(-1, type_of(a)), 1)] for a in args
            ]
            combos = [([], 0)]
            for ch in choices_per_arg:
                combos = [
                    (built + [t], holes + h)
                    for built, holes in combos
                    for t, h in ch
                ]
            for built, holes in combos:
                term: Term = head
                for b in built:
                    term = Apply(term, b)
                out.append((term, holes))
        return out

    for _, prog in corpus:
        if type(prog) is Lambda and _node_count(prog) <= max_pattern_nodes:
            add(Pattern(prog, 0, whole_program=True))
        for site in subtrees(prog):
            for term, holes in anti_instances(site):
                if holes < 1 or holes > max_arity:
                    continue
                if _node_count(term) > max_pattern_nodes:
                    continue
                if not any(
                    type(t) in (Prim, AbsRef) for t in _walk_pattern(term)
                ):
                    continue
                pat = Pattern(_assign_hole_indices(term, [0]), holes)
                add(pat)

    if not candidates:
        raise CompressionError("no candidate patterns in corpus")
    best_key = None
    best_pat = None
    best_u = None
    for render in sorted(candidates):
        pat = candidates[render]
        u = utility(pat, corpus)
        key = (-u, render)
        if best_key is None or key < best_key:
            best_key, best_pat, best_u = key, pat, u
    return best_pat, best_u


def _walk_pattern(term):
    yield term
    tt = type(term)
    if tt is Lambda:
        yield from _walk_pattern(term.body)
    elif tt is Apply:
        yield from _walk_pattern(term.fn)
        yield from _walk_pattern(term.arg)
