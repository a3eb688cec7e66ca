"""Hypothesis strategies for finite success functions."""

from typing import Optional

from hypothesis import strategies as st

from alohacalc.core.algebra import VerificationBox, load_leq, load_min
from alohacalc.core.tables import TableEvaluator

# Largest side per dimension for the default search; slow tests use LARGE_BOX.
MAX_SIDE = {1: 6, 2: 4, 3: 2}
LARGE_BOX = VerificationBox((4, 4, 4))


@st.composite
def boxes(draw, max_dimension: int = 3):
    dimension = draw(st.integers(1, max_dimension))
    side = draw(st.integers(1, MAX_SIDE[dimension]))
    return VerificationBox.cube(dimension, side)


def _points(box: VerificationBox):
    return st.tuples(*(st.integers(0, u) for u in box.upper))


@st.composite
def monotone_functions(draw, box: VerificationBox):
    """
    Non-decreasing f with f(n) <= n on the box.

    f(n) = min(n, max of the values of the anchors below n), which is
    monotone because both terms are.
    """
    anchors = draw(st.lists(st.tuples(_points(box), _points(box)), max_size=6))
    table = {}
    for load in box.loads():
        bound = (0,) * box.dimension
        for anchor, value in anchors:
            if load_leq(anchor, load):
                bound = tuple(max(a, b) for a, b in zip(bound, value))
        table[load] = load_min(load, bound)
    return TableEvaluator(table, box.upper, name="f")


@st.composite
def contractive_functions(draw, box: VerificationBox):
    """Any f with 0 <= f(n) <= n on the box."""
    table = {}
    for load in box.loads():
        table[load] = tuple(draw(st.integers(0, n_k)) for n_k in load)
    return TableEvaluator(table, box.upper, name="g")


@st.composite
def monotone_families(draw, count: int = 2, max_dimension: int = 3, box: Optional[VerificationBox] = None):
    """A box together with `count` monotone functions on it; `box` fixes the box."""
    box = box if box is not None else draw(boxes(max_dimension))
    return (box, *(draw(monotone_functions(box)) for _ in range(count)))


@st.composite
def contractive_families(draw, count: int = 2, max_dimension: int = 3, box: Optional[VerificationBox] = None):
    box = box if box is not None else draw(boxes(max_dimension))
    return (box, *(draw(contractive_functions(box)) for _ in range(count)))
