from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ckembed import gallery
from ckembed.calculus import Fn
from ckembed.kernels import apply
from ckembed.norms import (
    OracleTooLarge,
    embedding_constant,
    lattice_minimax,
    lattice_oracle,
    lp_minimax,
    minimax_value,
    norming_check,
    window_problem,
)
from ckembed.spaces import INF, Point, SpaceDesc
from helpers import brute_norm

H = Fraction(1, 2)
F = Fraction
BOX2 = [(F(-1), F(1))] * 2
XY = SpaceDesc.of("X", "Y")


def test_lp_single_row():
    value, g = lp_minimax([((F(0), F(1)), F(0))], BOX2, (0, F(1)))
    assert value == 0 and g == (1, 0)


def test_lp_two_rows():
    rows = [((H, H), F(0)), ((H, -H), F(0))]
    value, g = lp_minimax(rows, BOX2, (0, F(1)))
    assert value == H and g == (1, 0)
    # exhaustive check over a fine grid of g1
    assert min(minimax_value(rows, (F(1), F(k, 40))) for k in range(-40, 41)) == H


def test_identity_constant_is_one():
    for K in (SpaceDesc.of("A"), XY):
        for w in range(3):
            est = embedding_constant(gallery.identity(K), w)
            assert est.value == 1
            assert est.witness.norm() == 1


def test_ex52_constant_and_witness(ex52):
    assert embedding_constant(ex52, 0).value == F(1, 3)
    for w in (1, 2, 3):
        est = embedding_constant(ex52, w)
        assert est.value == F(1, 5)
        assert est.witness.norm() == 1
        assert apply(ex52, est.witness).norm() == F(1, 5)
    f = embedding_constant(ex52, 2).witness
    assert f(Point("Y", INF)) == F(1, 5) and f(Point("Y", 0)) == 1
    assert f(Point("X", INF)) == f(Point("X", 0)) == F(-3, 5)
    assert f(Point("Y", 7)) == F(1, 5)
    assert brute_norm(ex52, f) == F(1, 5)


def test_lattice_oracle_examples(ex52):
    assert lattice_oracle(gallery.identity(), 1, 1) == 1
    assert lattice_oracle(ex52, 2, 5) == F(1, 5)
    assert lattice_oracle(gallery.signed2(), 0, 2) == H


def test_lattice_oracle_refuses_large_instances(ex52):
    with pytest.raises(OracleTooLarge):
        lattice_oracle(ex52, 6, 9, max_points=10_000)


def test_norming_check_examples(ex52):
    rng = random.Random(1)
    probes = [gallery.random_fn(rng, XY, -1, 1) for _ in range(50)]
    m = embedding_constant(ex52, 2).value
    assert norming_check(ex52, m, probes).ok
    f = embedding_constant(ex52, 2).witness
    rep = norming_check(ex52, F(1), [f])
    assert not rep.ok and rep.improved.value == F(1, 5)
    assert norming_check(ex52, F(0), probes).ok


def test_window_problem_has_tail_variables(ex52):
    wp = window_problem(ex52, 2)
    names = [str(v) for v in wp.variables]
    assert names == ["X:0", "X:1", "X:tail", "Y:0", "Y:1", "Y:tail"]


# -- properties ----------------------------------------------------------------


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 5))
def test_lp_is_exact_against_lattice(seed, n, m):
    rng = random.Random(seed)
    rows = gallery.random_rows(rng, n, m)
    box = [(F(-1), F(1))] * n
    pin = rng.randrange(n)
    value, g = lp_minimax(rows, box, (pin, F(1)))
    assert g[pin] == 1 and all(-1 <= x <= 1 for x in g)
    assert minimax_value(rows, g) == value
    # rounding the minimizer to the grid moves each row by at most |a|_1 / 2q
    q = 6
    slack = max(sum(abs(a) for a in coeffs) for coeffs, _ in rows) / (2 * q)
    grid = _pinned_lattice(rows, n, pin, q)
    assert value <= grid <= value + slack


def _pinned_lattice(rows, n, pin, q):
    import itertools

    best = None
    for pts in itertools.product(range(-q, q + 1), repeat=n - 1):
        g = list(F(p, q) for p in pts)
        g.insert(pin, F(1))
        v = minimax_value(rows, g)
        best = v if best is None else min(best, v)
    return best


@given(st.integers(0, 10**6))
def test_constant_is_monotone_in_window(seed):
    T = gallery.random_kernel(random.Random(seed), "general", max_blocks=2, max_classes=2)
    vals = [embedding_constant(T, w).value for w in range(3)]
    assert vals[0] >= vals[1] >= vals[2]


@given(st.integers(0, 10**6), st.sampled_from([F(1, 2), F(2), F(3, 4)]))
def test_constant_scales_with_kernel(seed, c):
    T = gallery.random_kernel(random.Random(seed), "signed", max_blocks=2, max_classes=2)
    assert embedding_constant(T.scaled(c), 1).value == c * embedding_constant(T, 1).value


@given(st.integers(0, 10**6))
def test_witness_attains_constant(seed):
    T = gallery.random_kernel(random.Random(seed), "general", max_blocks=2, max_classes=2)
    est = embedding_constant(T, 1)
    assert est.witness.norm() == 1
    assert apply(T, est.witness).norm() == est.value
    assert brute_norm(T, est.witness) == est.value


@given(st.integers(0, 10**6))
def test_constant_is_a_lower_bound_on_probes(seed):
    rng = random.Random(seed)
    T = gallery.random_kernel(rng, "general", max_blocks=2, max_classes=2)
    est = embedding_constant(T, 2)
    probes = [_windowed(rng, T.domain, 2) for _ in range(10)]
    assert norming_check(T, est.value, probes).ok


def _windowed(rng, K, w):
    g = gallery.random_fn(rng, K, -1, 1)
    data = {}
    for b in K.blocks:
        if b.is_seq:
            data[b.id] = (g.tail(b.id), {i: v for i, v in g.exceptions(b.id).items() if i < w})
        else:
            data[b.id] = [g(Point(b.id, i)) for i in range(b.size)]
    return Fn(K, data)


def test_lattice_minimax_single_variable():
    assert lattice_minimax([((F(1),), F(0))], 1, 3) == 1
