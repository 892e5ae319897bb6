"""Shared generators: random expression trees, equations, and programs."""

from fractions import Fraction

from hypothesis import strategies as st

from mathsynth.equations import Const, EquationError, Node, X, equation, eval_at

OPS = ("+", "-", "*", "/")


def exprs(max_depth=3, with_var=True, constants=st.integers(-9, 9)):
    leaf = st.builds(Const, constants)
    if with_var:
        leaf = st.one_of(leaf, st.just(X))
    return st.recursive(
        leaf,
        lambda sub: st.builds(Node, st.sampled_from(OPS), sub, sub),
        max_leaves=2 ** max_depth,
    )


def equations(max_depth=3, with_var=True):
    e = exprs(max_depth, with_var)
    return st.builds(equation, e, e)


SAMPLE_XS = tuple(Fraction(n, d) for n, d in
                  [(1, 1), (-2, 1), (1, 2), (5, 3), (-7, 4), (3, 1), (11, 5)])


def safe_sample_points(eq, n=5):
    """Rational x values where both sides evaluate without dividing by zero."""
    points = []
    for x in SAMPLE_XS:
        try:
            eval_at(eq.left, x)
            eval_at(eq.right, x)
        except EquationError:
            continue
        points.append(x)
        if len(points) == n:
            break
    return points


def truth_set(eq, points):
    return [eval_at(eq.left, x) == eval_at(eq.right, x) for x in points]
