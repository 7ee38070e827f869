from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ckembed import gallery
from ckembed.calculus import (
    CalculusError,
    Fixed,
    Fn,
    Indexed,
    Meas,
    MeasPath,
    check_variation_semicontinuity,
    clopen_bump,
    fn_add,
    fn_eval,
    fn_mul,
    fn_norm,
    fn_reciprocal,
    fn_scale,
    jordan,
    meas_eval,
    path_limit,
    pullback,
)
from ckembed.spaces import INF, Block, Point, SpaceDesc, SubsetDesc, Trace, closed_subspace
from helpers import points

H = Fraction(1, 2)
A = SpaceDesc.of("A")
XY = SpaceDesc.of("X", "Y")


def test_fn_eval_example():
    g = Fn(A, {"A": (2, {3: 5})})
    assert fn_eval(g, Point("A", 3)) == 5
    assert fn_eval(g, Point("A", 9)) == 2
    assert fn_eval(g, Point("A", INF)) == 2


def test_fn_norm_examples():
    assert fn_norm(Fn.one(A)) == 1
    assert fn_norm(Fn(A, {"A": (Fraction(1, 5), {0: Fraction(-3, 5)})})) == Fraction(3, 5)
    witness = Fn(XY, {"X": (Fraction(-3, 5), {}), "Y": (Fraction(1, 5), {0: 1})})
    assert fn_norm(witness) == 1


def test_fn_algebra_examples():
    one = Fn.one(A)
    g = Fn(A, {"A": (1, {0: -1})})
    assert fn_add(g, fn_scale(-1, g)) == Fn.constant(A, 0)
    assert fn_mul(g, g) == one
    assert fn_reciprocal(Fn.constant(A, 2)) == Fn.constant(A, H)
    with pytest.raises(CalculusError):
        fn_reciprocal(Fn(A, {"A": (1, {2: 0})}))


def test_clopen_bump_examples():
    b0 = clopen_bump(A, SubsetDesc.from_points(A, [Point("A", 0)]))
    assert b0.tail("A") == 0 and b0.exceptions("A") == {0: 1}
    tail = clopen_bump(A, SubsetDesc.from_traces(A, {"A": Trace.tail(3)}))
    assert tail.tail("A") == 1 and tail.exceptions("A") == {0: 0, 1: 0, 2: 0}
    assert clopen_bump(A, A.whole()) == Fn.one(A)
    with pytest.raises(CalculusError):
        clopen_bump(A, SubsetDesc.from_points(A, [Point("A", INF)]))


def test_meas_eval_dirac_and_ex52_witness():
    g = Fn(A, {"A": (2, {0: 7})})
    assert meas_eval(Meas.dirac(A, Point("A", 0)), g) == 7
    witness = Fn(XY, {"X": (Fraction(-3, 5), {}), "Y": (Fraction(1, 5), {0: 1})})
    even_row = Meas(XY, {Point("X", INF): H, Point("Y", 3): H})
    assert meas_eval(even_row, witness) == Fraction(-1, 5)


def test_jordan_examples():
    a, b = Point("A", 0), Point("A", 1)
    j = jordan(Meas(A, {a: 1, b: -1}))
    assert j.plus == Meas.dirac(A, a) and j.minus == Meas.dirac(A, b) and j.norm == 2
    mu = Meas(A, {a: H, b: H})
    j = jordan(mu)
    assert j.minus == Meas.zero(A) and j.abs == mu
    assert Meas(A, [(a, H), (a, -H)]) == Meas.zero(A)


def test_path_limit_examples():
    yinf = Point("Y", INF)
    assert path_limit(MeasPath(XY, ((Fixed(yinf), Fraction(1)),), 0, Meas.dirac(XY, yinf))) == Meas.dirac(XY, yinf)
    cancel = ((Indexed("A", 1, 0), Fraction(1)), (Indexed("A", 1, 1), Fraction(-1)))
    assert path_limit(MeasPath(A, cancel, 0, Meas.zero(A))) == Meas.zero(A)
    odd = ((Indexed("X", 1, 0), H), (Fixed(yinf), H))
    assert path_limit(MeasPath(XY, odd, 0, Meas.zero(XY))) == Meas(XY, {Point("X", INF): H, yinf: H})


def test_cancellation_path_against_bump():
    # |mu_n| has mass 2 while the limit is zero: the lsc gap is strict
    atoms = ((Indexed("A", 1, 0), H), (Indexed("A", 1, 1), -H))
    P = MeasPath(A, atoms, 0, Meas.zero(A))
    rep = check_variation_semicontinuity(P, Fn.one(A))
    assert rep.ok
    lsc = rep.by_name("lsc")
    assert (lsc.lhs, lsc.rhs) == (0, 1)
    upper = rep.by_name("upper")
    assert upper.verdict == "PASS" and upper.lhs == upper.rhs == 0
    assert rep.by_name("continuity").verdict == "SKIPPED"


def test_constant_path_gives_equality():
    mu = Meas(A, {Point("A", 0): H, Point("A", INF): -H})
    P = MeasPath(A, tuple((Fixed(p), w) for p, w in mu.atoms.items()), 0, mu)
    rep = check_variation_semicontinuity(P, Fn(A, {"A": (H, {0: 1})}))
    assert rep.by_name("lsc").lhs == rep.by_name("lsc").rhs
    assert rep.by_name("continuity").verdict == "PASS"


def test_semicontinuity_skips_when_preconditions_fail():
    atoms = ((Indexed("A", 1, 0), Fraction(2)),)
    P = MeasPath(A, atoms, 0, Meas.dirac(A, Point("A", INF)).scale(2))
    rep = check_variation_semicontinuity(P, Fn.constant(A, -1))
    assert rep.by_name("lsc").verdict == "SKIPPED"
    assert rep.by_name("upper").verdict == "SKIPPED"


def test_pullback_through_tail_subspace():
    g = Fn(A, {"A": (1, {4: 3, 5: 2})})
    F = SubsetDesc.from_traces(A, {"A": Trace.tail(3)})
    sub, emb = closed_subspace(A, F)
    h = pullback(g, emb)
    for p in points(sub, 20):
        assert h(p) == g(emb.forward(p))


# -- properties ----------------------------------------------------------------


def _random_meas(rng: random.Random, K: SpaceDesc) -> Meas:
    return Meas(K, {gallery.random_point(rng, K): Fraction(rng.randint(-4, 4), 4)
                    for _ in range(rng.randint(0, 5))})


@given(st.integers(0, 10**6))
def test_jordan_properties(seed):
    rng = random.Random(seed)
    K = gallery.random_space(rng, "X")
    mu = _random_meas(rng, K)
    g = gallery.random_fn(rng, K, -2, 2)
    j = jordan(mu)
    assert j.norm == j.plus.norm() + j.minus.norm()
    assert not (j.plus.support() & j.minus.support())
    assert meas_eval(mu, g) == meas_eval(j.plus, g) - meas_eval(j.minus, g)
    assert abs(meas_eval(mu, g)) <= mu.norm() * fn_norm(g)


@given(st.integers(0, 10**6))
def test_meas_eval_is_pointwise_sum(seed):
    rng = random.Random(seed)
    K = gallery.random_space(rng, "X")
    mu, nu = _random_meas(rng, K), _random_meas(rng, K)
    g, h = gallery.random_fn(rng, K, -2, 2), gallery.random_fn(rng, K, -2, 2)
    assert meas_eval(mu, g) == sum((w * g(p) for p, w in mu.atoms.items()), Fraction(0))
    assert meas_eval(mu + nu, g) == meas_eval(mu, g) + meas_eval(nu, g)
    assert meas_eval(mu, g + h) == meas_eval(mu, g) + meas_eval(mu, h)


@given(st.integers(0, 10**6))
def test_fn_algebra_pointwise(seed):
    rng = random.Random(seed)
    K = gallery.random_space(rng, "X")
    g, h = gallery.random_fn(rng, K, -2, 2), gallery.random_fn(rng, K, 1, 3)
    inv = h.reciprocal()
    for p in points(K, 12):
        assert (g + h)(p) == g(p) + h(p)
        assert (g * h)(p) == g(p) * h(p)
        assert inv(p) == 1 / h(p)
    assert g.norm() == max(abs(g(p)) for p in points(K, 12))


@given(st.integers(0, 10**6))
def test_path_limit_commutes_with_evaluation(seed):
    rng = random.Random(seed)
    P = gallery.random_path(rng)
    assert P.validate() == []
    g = gallery.random_fn(rng, P.space, -1, 1)
    n = P.horizon(g)
    lim = meas_eval(path_limit(P), g)
    for k in range(n, n + 8):
        assert meas_eval(P.at(k), g) == lim


@given(st.integers(0, 10**6), st.booleans())
def test_semicontinuity_never_fails(seed, unit):
    rng = random.Random(seed)
    P = gallery.random_path(rng, unit)
    g = gallery.random_fn(rng, P.space, 0, 1)
    rep = check_variation_semicontinuity(P, g)
    assert rep.ok
    assert rep.by_name("lsc").verdict == "PASS"
    assert rep.by_name("upper").verdict == "PASS"


def test_finite_block_function():
    W = SpaceDesc((Block("W", "fin", 3),))
    g = Fn(W, {"W": [1, -2, H]})
    assert g.norm() == 2
    assert g(Point("W", 1)) == -2
