from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ckembed import gallery
from ckembed.calculus import Fixed, Indexed
from ckembed.constructions import (
    ConstructionError,
    check_onto_at_m,
    filtration,
    least_p,
    local_witness,
    phi_r,
    pi_base,
    top_level_witness,
    working_constant,
)
from ckembed.kernels import ResidueClass
from ckembed.report import ClauseFailure
from ckembed.setmaps import SetTemplate, image_union
from ckembed.spaces import INF, Block, Point, SpaceDesc, SubsetDesc, Trace
from helpers import check_witness, points

F = Fraction
XY = SpaceDesc.of("X", "Y")
YINF = Point("Y", INF)


def test_phi_r_ex52(ex52):
    phi = phi_r(ex52, F(1, 5))
    assert phi(Point("Z", 0)) == {YINF}
    assert phi.templates["Z"] == (
        SetTemplate(ResidueClass(2, 0, 1), [Fixed(Point("X", INF)), Indexed("Y", 1, -1)]),
        SetTemplate(ResidueClass(2, 1, 0), [Indexed("X", 1, 0), Fixed(YINF)]),
    )
    assert phi(Point("Z", INF)) == {Point("X", INF), YINF}
    assert phi.bound == 5
    high = phi_r(ex52, F(4, 5))
    assert [y for y in points(ex52.codomain, 30) if high(y)] == [Point("Z", 0)]


def test_phi_r_identity():
    phi = phi_r(gallery.identity(), 1)
    for y in points(SpaceDesc.of("A"), 10):
        assert phi(y) == {y}


def test_phi_r_rejects_bad_input(ex52):
    with pytest.raises(ConstructionError):
        phi_r(gallery.signed2(), F(1, 2))
    with pytest.raises(ConstructionError):
        phi_r(ex52.scaled(F(1, 2)), F(1, 2))
    with pytest.raises(ConstructionError):
        phi_r(ex52, 0)


def test_onto_examples(ex52):
    assert check_onto_at_m(ex52, F(1, 5)).onto
    bad = check_onto_at_m(ex52, F(3, 5))
    assert not bad.onto
    assert bad.uncovered == SubsetDesc.from_traces(
        XY, {"X": Trace.tail(0), "Y": Trace.tail(0, inf=False)})
    assert "uncovered" in bad.to_report().render_text()
    assert check_onto_at_m(gallery.identity(), 1).onto


def test_least_p():
    assert [least_p(F(1, n)) for n in (1, 2, 3, 4, 5, 8, 9)] == [1, 2, 2, 3, 3, 4, 4]
    assert least_p(F(3, 5)) == 1


def test_ex52_filtration(ex52):
    Fl = filtration(ex52, F(1, 5))
    assert Fl.p == 3
    assert Fl.thresholds == (F(1, 5), F(2, 5), F(4, 5))
    assert Fl.chain == (XY.whole(), XY.whole(), SubsetDesc.from_points(XY, [YINF]))
    assert Fl.to_report().ok


def test_identity_filtration():
    Fl = filtration(gallery.identity(), 1)
    assert Fl.p == 1 and Fl.chain == (SpaceDesc.of("A").whole(),)


def test_filtration_refuses_a_constant_that_is_too_large(ex52):
    with pytest.raises(ClauseFailure) as e:
        filtration(ex52, F(3, 5))
    assert e.value.claim == "K_1 = K"


def test_top_level_witness_ex52(ex52):
    Fl = filtration(ex52, F(1, 5))
    w = top_level_witness(ex52, Fl)
    L = ex52.codomain
    assert w.source == SubsetDesc.from_points(L, [Point("Z", 0)])
    assert w.target == SubsetDesc.from_points(XY, [YINF])
    assert w.map(Point("Z", 0)) == YINF
    check_witness(w, phi_r(ex52, F(4, 5)), w.target)


def test_top_level_witness_identity():
    T = gallery.identity()
    w = top_level_witness(T, filtration(T, 1))
    A = SpaceDesc.of("A")
    assert w.source == A.whole() and w.target == A.whole()
    assert all(w.map(y) == y for y in points(A, 10))


def test_local_witness_ex52(ex52):
    Fl = filtration(ex52, F(1, 5))
    H, w = local_witness(ex52, Fl, 2, Point("X", 0))
    assert H == SubsetDesc.from_points(XY, [Point("X", 0)])
    assert w.source == SubsetDesc.from_points(ex52.codomain, [Point("Z", 1)])
    assert w.map(Point("Z", 1)) == Point("X", 0)
    H, w = local_witness(ex52, Fl, 2, Point("X", INF))
    assert H == SubsetDesc.from_traces(XY, {"X": Trace.tail(0)})
    assert w.source == SubsetDesc.from_traces(ex52.codomain, {"Z": Trace.tail(1)})
    assert w.map(Point("Z", 4)) == Point("X", INF)
    assert w.map(Point("Z", 5)) == Point("X", 2)
    check_witness(w, phi_r(ex52, F(2, 5)), H)


def test_local_witness_rejects_points_outside_the_stratum(ex52):
    Fl = filtration(ex52, F(1, 5))
    with pytest.raises(ConstructionError):
        local_witness(ex52, Fl, 2, YINF)
    with pytest.raises(ConstructionError):
        local_witness(ex52, Fl, 1, Point("X", 0))


def test_local_witness_identity():
    T = gallery.identity()
    Fl = filtration(T, 1)
    H, w = local_witness(T, Fl, 1, Point("A", 3))
    assert H == SubsetDesc.from_points(SpaceDesc.of("A"), [Point("A", 3)])
    assert w.map(Point("A", 3)) == Point("A", 3)


def test_pi_base_ex52(ex52):
    r = pi_base(ex52, XY.whole(), F(1, 5))
    assert r.level == 2 and r.U == SubsetDesc.from_points(XY, [Point("X", 0)])
    W = SubsetDesc.from_traces(XY, {"Y": Trace.tail(0)})
    r = pi_base(ex52, W, F(1, 5))
    assert r.level == 2 and r.U == SubsetDesc.from_points(XY, [Point("Y", 0)])
    assert r.witness.map(Point("Z", 2)) == Point("Y", 0)
    assert r.U.issubset(W) and r.U.is_clopen()


def test_pi_base_identity():
    A = SpaceDesc.of("A")
    W = SubsetDesc.from_traces(A, {"A": Trace.tail(2)})
    r = pi_base(gallery.identity(), W, 1)
    assert r.U == W
    assert all(r.witness.map(y) == y for y in points(A, 10) if y in W)


def test_pi_base_normalizes_scaled_input(ex52):
    r = pi_base(ex52.scaled(F(1, 2)), XY.whole(), F(1, 10))
    assert r.U == SubsetDesc.from_points(XY, [Point("X", 0)])


def test_split_mix_is_a_fast_path_case():
    for s in (F(1, 8), F(1, 5), F(1, 10)):
        T = gallery.split_mix(s)
        m, _ = working_constant(T)
        assert m == 1 - 2 * s
        Fl = filtration(T, m)
        assert Fl.p == 1
        w = top_level_witness(T, Fl)
        assert w.target == XY.whole()
        check_witness(w, phi_r(T, m), XY.whole())


# -- properties ----------------------------------------------------------------


@given(st.integers(0, 10**6))
def test_filtration_is_a_closed_decreasing_chain(seed):
    T = gallery.random_embedding(random.Random(seed))
    m, _ = working_constant(T)
    Fl = filtration(T, m)
    assert 2 ** Fl.p * m > 1 >= 2 ** (Fl.p - 1) * m
    assert Fl.chain[0] == T.domain.whole()
    for a, b in zip(Fl.chain, Fl.chain[1:]):
        assert b.issubset(a)
    for mi, Ki, phi in zip(Fl.thresholds, Fl.chain, Fl.maps):
        assert Ki.is_closed()
        # brute force: a point is in K_i iff some row gives it weight >= m_i
        for x in points(T.domain, 15):
            heavy = any(T.row(y).weight(x) >= mi for y in points(T.codomain, 120))
            assert (x in Ki) == heavy


@given(st.integers(0, 10**6))
def test_top_witness_is_a_continuous_surjection(seed):
    T = gallery.random_embedding(random.Random(seed))
    m, _ = working_constant(T)
    Fl = filtration(T, m)
    w = top_level_witness(T, Fl)
    check_witness(w, phi_r(T, Fl.thresholds[-1]), Fl.chain[-1])


@given(st.integers(0, 10**6), st.data())
def test_pi_base_lands_inside_w(seed, data):
    rng = random.Random(seed)
    T = gallery.random_embedding(rng)
    m, _ = working_constant(T)
    K = T.domain
    b = data.draw(st.sampled_from(K.blocks))
    if b.is_seq:
        W = SubsetDesc.from_traces(K, {b.id: Trace.tail(data.draw(st.integers(0, 5)))})
    else:
        W = SubsetDesc.from_points(K, [Point(b.id, 0)])
    r = pi_base(T, W, m)
    assert r.U.is_clopen() and not r.U.is_empty() and r.U.issubset(W)
    Fl = filtration(T, m)
    C = r.U.closure() & Fl.level(r.level)
    assert r.witness.target == C == r.U.closure()
    assert not r.witness.violations()
