"""Seeded property checks, runnable without pytest (``ck-embed selftest``)."""
from __future__ import annotations

import random
from fractions import Fraction

from . import gallery
from .calculus import check_variation_semicontinuity
from .constructions import phi_r
from .fileformat import parse, problem_for, serialize
from .norms import lattice_minimax, lp_minimax
from .reductions import adjoin_and_lift, envelope, pointwise_equal, positive_reduction
from .report import Report
from .setmaps import check_usc, image_union, preimage, restrict
from .spaces import SubsetDesc, Trace

RATES = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


def _closed_subset(rng: random.Random, K) -> SubsetDesc:
    traces = {}
    for b in K.blocks:
        if b.is_seq:
            pick = rng.random()
            if pick < 0.3:
                traces[b.id] = Trace.points([rng.randint(0, 4) for _ in range(2)])
            elif pick < 0.7:
                traces[b.id] = Trace.make([], rng.randint(0, 3), 2, [rng.randint(0, 1)], True)
        else:
            traces[b.id] = Trace.points([i for i in range(b.size) if rng.random() < 0.5])
    return SubsetDesc.from_traces(K, traces)


def check_threshold_maps(rng: random.Random, count: int) -> int:
    bad = 0
    for _ in range(count):
        T = gallery.random_kernel(rng, "positive")
        for r in RATES:
            phi = phi_r(T, r)
            if not (check_usc(phi).ok and image_union(phi).closed):
                bad += 1
            F = _closed_subset(rng, T.domain)
            if not check_usc(restrict(phi, F)).ok or not preimage(phi, F).is_closed():
                bad += 1
    return bad


def check_paths(rng: random.Random, count: int) -> int:
    bad = 0
    for i in range(count):
        P = gallery.random_path(rng, unit=i % 2 == 0)
        g = gallery.random_fn(rng, P.space)
        if not check_variation_semicontinuity(P, g).ok:
            bad += 1
    return bad


def check_lift(rng: random.Random, count: int) -> int:
    bad = 0
    for _ in range(count):
        T = gallery.random_kernel(rng, "general")
        if not pointwise_equal(envelope(adjoin_and_lift(T).kernel), envelope(T).plus(1)):
            bad += 1
    return bad


def check_reduction(rng: random.Random, count: int, window: int = 1) -> int:
    bad = 0
    for _ in range(count):
        T = gallery.random_kernel(rng, "signed", max_blocks=2, max_classes=2)
        red = positive_reduction(T, window=window)
        if red.m_out < red.m / 2:
            bad += 1
    return bad


def check_lp(rng: random.Random, count: int, q: int = 4) -> int:
    bad = 0
    for _ in range(count):
        n = rng.randint(1, 4)
        rows = gallery.random_rows(rng, n, rng.randint(1, 5))
        box = [(Fraction(-1), Fraction(1))] * n
        best = min((lp_minimax(rows, box, (i, Fraction(1))) for i in range(n)), key=lambda r: r[0])
        lat = lattice_minimax(rows, n, q)
        if best[0] > lat:
            bad += 1
        if all((x * q).denominator == 1 for x in best[1]) and best[0] != lat:
            bad += 1
    return bad


def check_round_trip(rng: random.Random, count: int) -> int:
    bad = 0
    for _ in range(count):
        T = gallery.random_kernel(rng, rng.choice(["positive", "signed", "general"]))
        text = serialize(problem_for(T))
        if parse(text).kernel != T or serialize(parse(text)) != text:
            bad += 1
    return bad


CHECKS = (
    ("threshold maps are usc with closed image; restriction and preimage laws", check_threshold_maps, 1),
    ("variation semicontinuity along measure paths", check_paths, 2),
    ("lift adds one to the envelope", check_lift, 1),
    ("positive reduction keeps half the constant", check_reduction, Fraction(1, 5)),
    ("minimax LP never exceeds the lattice oracle", check_lp, 1),
    ("file format round trip", check_round_trip, 1),
)


def run(seed: int = 0, count: int = 50) -> Report:
    rep = Report(f"selftest seed {seed}")
    for i, (claim, fn, scale) in enumerate(CHECKS):
        n = max(1, int(count * scale))
        bad = fn(random.Random(f"{seed}:{i}"), n)
        rep.add("selftest", claim, bad == 0, cases=n, failures=bad)
    return rep
