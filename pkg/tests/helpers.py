"""Brute-force oracles shared by the tests: everything is checked pointwise
on an initial segment of each sequence, long enough to cover one full
period past every horizon in the generated data."""
from __future__ import annotations

from hypothesis import strategies as st

from ckembed.spaces import INF, Point, SpaceDesc, Trace

SPAN = 60


def points(K: SpaceDesc, span: int = SPAN):
    for b in K.blocks:
        if b.is_seq:
            for i in range(span):
                yield Point(b.id, i)
            yield Point(b.id, INF)
        else:
            for i in range(b.size):
                yield Point(b.id, i)


def members(tr: Trace, span: int = SPAN) -> set:
    out = {i for i in range(span) if i in tr}
    if INF in tr:
        out.add(INF)
    return out


@st.composite
def traces(draw, closed: bool | None = None):
    fin = draw(st.sets(st.integers(0, 12), max_size=4))
    start = draw(st.integers(0, 10))
    period = draw(st.integers(1, 4))
    res = draw(st.sets(st.integers(0, period - 1), max_size=period))
    inf = draw(st.booleans())
    tr = Trace.make(fin, start, period, res, inf)
    if closed is True and tr.is_infinite:
        tr = Trace.make(fin, start, period, res, True)
    return tr


def ex52_value(f, n) -> "Fraction":
    """``(Tf)(Z_n)`` for the two-sequence example, written out by hand."""
    from fractions import Fraction

    X = lambda i: f(Point("X", i))
    Y = lambda i: f(Point("Y", i))
    if n == INF:
        return (X(INF) + Y(INF)) / 2
    if n == 0:
        return Y(INF)
    if n % 2:
        return (X((n - 1) // 2) + Y(INF)) / 2
    return (X(INF) + Y(n // 2 - 1)) / 2 + Fraction(0)


def brute_norm(T, g, span: int = SPAN):
    """``sup_y |(Tg)(y)|`` by evaluating every row on an initial segment."""
    return max(abs(T.row(y)(g)) for y in points(T.codomain, span))


def usc_oracle(phi) -> bool:
    """Upper semicontinuity straight from the definition.

    At each limit ``y`` of ``L`` and for the clopen neighbourhoods
    ``U_N`` of ``phi(y)`` (tails from ``N`` around limit points), the values
    ``phi(y_n)`` must lie in ``U_N`` for all large ``n``; large is taken as
    a window far past every horizon of the generated maps.
    """
    K, L = phi.codomain, phi.domain
    for b in L.seq_blocks():
        lim = phi(Point(b.id, INF))
        for N in (0, 2, 5):
            def inside(x):
                if x in lim:
                    return True
                return x.index != INF and Point(x.block, INF) in lim and x.index >= N
            start = 3 * N + 200
            if not all(inside(x) for n in range(start, start + 60) for x in phi(Point(b.id, n))):
                return False
    return True


def image_oracle(phi, span: int = 20) -> set:
    out = set()
    for y in points(phi.domain, 10 * span):
        out |= {x for x in phi(y) if x.index == INF or x.index < span}
    return out


def check_witness(w, phi, C, span: int = 60) -> None:
    """``w`` must be the single-valued map ``y -> phi(y) & C`` onto ``C``."""
    K = phi.codomain
    hit = set()
    for y in points(phi.domain, span):
        val = {x for x in phi(y) if x in C}
        assert len(val) <= 1
        assert (y in w.source) == bool(val)
        if val:
            assert {w.map(y)} == val
            hit |= val
    assert w.source.is_closed() and w.target == C
    assert {x for x in points(K, span // 3) if x in C} == {x for x in hit if x.index == INF or x.index < span // 3}
    assert usc_oracle(w.map.setmap)
