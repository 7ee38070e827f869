"""Acceptance gate: one recorded PASS/FAIL line per criterion, exact tolerances."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from ckembed import gallery
from ckembed.calculus import check_variation_semicontinuity, path_limit
from ckembed.constructions import (
    check_onto_at_m,
    filtration,
    phi_r,
    top_level_witness,
    working_constant,
)
from ckembed.kernels import is_positive, operator_norm
from ckembed.norms import (
    embedding_constant,
    lattice_minimax,
    lattice_oracle,
    lp_minimax,
    window_problem,
)
from ckembed.reductions import adjoin_and_lift, envelope, pointwise_equal, positive_reduction
from ckembed.report import ClauseFailure
from ckembed.setmaps import check_usc, image_union
from ckembed.spaces import INF, Point, SpaceDesc, SubsetDesc, Trace
from helpers import check_witness, points, usc_oracle

F = Fraction
XY = SpaceDesc.of("X", "Y")
YINF = Point("Y", INF)


def test_criterion_1_ex52_constants(ex52, record):
    norm = operator_norm(ex52)
    consts = {w: embedding_constant(ex52, w).value for w in (1, 2, 3, 4)}
    oracle = lattice_oracle(ex52, 2, 5)
    ok = norm == 1 and all(v == F(1, 5) for v in consts.values()) and oracle == F(1, 5)
    record(1, ok, f"EX52 norm {norm}, windowed constants {[str(v) for v in consts.values()]}, "
                  f"lattice oracle {oracle}")
    assert ok


def test_criterion_2_ex52_filtration(ex52, record):
    Fl = filtration(ex52, F(1, 5))
    K3 = SubsetDesc.from_points(XY, [YINF])
    usc = all(check_usc(phi).ok and usc_oracle(phi) for phi in Fl.maps)
    w = top_level_witness(ex52, Fl)
    top = (w.source == SubsetDesc.from_points(ex52.codomain, [Point("Z", 0)])
           and w.map(Point("Z", 0)) == YINF and w.target == K3)
    ok = (Fl.p == 3 and Fl.chain == (XY.whole(), XY.whole(), K3) and Fl.to_report().ok
          and usc and top)
    record(2, ok, f"p = {Fl.p}, chain {[str(c) for c in Fl.chain]}, top witness {w.describe()}")
    assert ok


def test_criterion_3_threshold_maps(record):
    failures = []
    for seed in range(500):
        T = gallery.random_kernel(random.Random(f"c3:{seed}"), "positive", 3, 3)
        for r in (F(1, 4), F(1, 2), F(3, 4)):
            try:
                phi = phi_r(T, r)
            except ClauseFailure as e:
                failures.append((seed, r, str(e)))
                continue
            if not (check_usc(phi).ok and usc_oracle(phi) and image_union(phi).closed):
                failures.append((seed, r, "oracle disagrees"))
    ok = not failures
    record(3, ok, f"500 kernels x 3 thresholds, {len(failures)} failures {failures[:3]}")
    assert ok


def test_criterion_4_semicontinuity(record):
    failures, unit_checked = [], 0
    for seed in range(1000):
        rng = random.Random(f"c4:{seed}")
        P = gallery.random_path(rng, unit=seed % 2 == 0)
        g = gallery.random_fn(rng, P.space, 0, 1)
        mu = path_limit(P)
        n = P.horizon(g)
        seq = [P.at(k).abs()(g) for k in range(n, n + 6)]
        if len(set(seq)) != 1:
            failures.append((seed, "not eventually constant"))
            continue
        lim, lhs = seq[0], mu.abs()(g)
        if not lhs <= lim:
            failures.append((seed, "lower"))
        if not lhs >= mu.norm() + lim - 1:
            failures.append((seed, "upper"))
        if P.variation() == 1 and mu.norm() == 1:
            unit_checked += 1
            if lim != lhs:
                failures.append((seed, "continuity"))
        if not check_variation_semicontinuity(P, g).ok:
            failures.append((seed, "checker"))
    ok = not failures
    record(4, ok, f"1000 paths ({unit_checked} with unit norms), {len(failures)} failures {failures[:3]}")
    assert ok


def test_criterion_5_positive_reduction(record):
    red = positive_reduction(gallery.signed2(), F(1, 2))
    exact = embedding_constant(red.kernel, 1).value
    two_point_ok = is_positive(red.kernel) and exact == F(1, 4)
    failures = []
    for seed in range(200):
        T = gallery.random_kernel(random.Random(f"c5:{seed}"), "signed", 2, 2)
        try:
            r = positive_reduction(T, window=1)
        except ClauseFailure as e:
            failures.append((seed, str(e)))
            continue
        if not (is_positive(r.kernel) and r.m_out >= r.m / 2):
            failures.append((seed, "bound"))
    ok = two_point_ok and not failures
    record(5, ok, f"two-point S positive {is_positive(red.kernel)}, constant {exact} (target 1/4, "
                  f"bound m/2 = {red.m / 2} holds: {exact >= red.m / 2}); "
                  f"200 signed kernels, {len(failures)} failures")
    assert ok


def test_criterion_6_lift_envelope(record):
    failures = []
    for seed in range(200):
        rng = random.Random(f"c6:{seed}")
        T = gallery.random_kernel(rng, rng.choice(["positive", "signed", "general"]))
        S = adjoin_and_lift(T).kernel
        symbolic = pointwise_equal(envelope(S), envelope(T).plus(1))
        brute = all(S.row(y).norm() == T.row(y).norm() + 1 for y in points(T.codomain, 60))
        if not (symbolic and brute):
            failures.append(seed)
    ok = not failures
    record(6, ok, f"200 kernels, {len(failures)} envelope mismatches")
    assert ok


def _lp_on_sphere(rows, n):
    """Minimax over the sphere: best of the pinned problems (g and -g agree)."""
    box = [(F(-1), F(1))] * n
    return min((lp_minimax(rows, box, (i, F(1))) for i in range(n)), key=lambda r: r[0])


def test_criterion_7_lp_oracle(record):
    rng = random.Random("c7")
    bad, equal_cases = [], 0
    instances = []
    while len(instances) < 50:
        n = rng.randint(1, 6)
        instances.append((gallery.random_rows(rng, n, rng.randint(1, 6)), n))
    seed = 0
    while len(instances) < 100:
        T = gallery.random_kernel(random.Random(f"c7:{seed}"), "general", 2, 2)
        seed += 1
        wp = window_problem(T, 1)
        if len(wp.variables) <= 6:
            instances.append((list(wp.rows), len(wp.variables)))
    for i, (rows, n) in enumerate(instances):
        value, g = _lp_on_sphere(rows, n)
        q = 4 if n <= 4 else 2
        lat = lattice_minimax(rows, n, q)
        if value > lat:
            bad.append((i, "above"))
        if all((x * q).denominator == 1 for x in g):
            equal_cases += 1
            if value != lat:
                bad.append((i, "unequal on lattice"))
    ident = all(embedding_constant(gallery.identity(K), w).value == 1
                for K in (SpaceDesc.of("A"), XY) for w in (0, 1, 2))
    ok = not bad and ident
    record(7, ok, f"100 instances, LP <= lattice everywhere, {equal_cases} lattice argmins all equal; "
                  f"identity constants 1: {ident}; failures {bad[:3]}")
    assert ok


def test_criterion_8_fast_path(record):
    cases = [("identity", gallery.identity()), ("identity on X,Y", gallery.identity(XY))]
    cases += [(f"split_mix({s})", gallery.split_mix(s)) for s in (F(1, 8), F(1, 5), F(1, 10))]
    cases += [(f"random s=1/8 #{i}", gallery.random_embedding(random.Random(f"c8:{i}"), F(1, 8)))
              for i in range(20)]
    failures = []
    for name, T in cases:
        m, _ = working_constant(T)
        Fl = filtration(T, m)
        if not (m > F(1, 2) and Fl.p == 1):
            failures.append((name, m, Fl.p))
            continue
        w = top_level_witness(T, Fl)
        if w.target != T.domain.whole() or w.violations():
            failures.append((name, "witness"))
            continue
        check_witness(w, phi_r(T, m), T.domain.whole())
    ok = not failures
    record(8, ok, f"{len(cases)} kernels with constant > 1/2 give p = 1 and a witness onto K; "
                  f"failures {failures[:3]}")
    assert ok


def test_criterion_9_negative_control(ex52, record):
    rep = check_onto_at_m(ex52, F(3, 5))
    expect = SubsetDesc.from_traces(XY, {"X": Trace.tail(0), "Y": Trace.tail(0, inf=False)})
    with pytest.raises(ClauseFailure) as e:
        filtration(ex52, F(3, 5))
    loud = "uncovered" in e.value.detail and not rep.to_report().ok
    ok = not rep.onto and rep.uncovered == expect and loud
    record(9, ok, f"inflated constant 3/5 leaves {rep.uncovered} uncovered; filtration raises "
                  f"'{e.value.claim}'")
    assert ok
