"""Set maps from positive unital kernels, the threshold filtration, and
witnesses that pieces of ``K`` are continuous images of closed subspaces of
``L``.

Every construction re-checks its claims and raises :class:`ClauseFailure`
naming the claim that broke, so a wrong working constant never passes
silently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .calculus import Fixed, Indexed, Q
from .kernels import Kernel, checked, is_positive, is_unital
from .report import ClauseFailure, Report
from .setmaps import (
    SetMap,
    SetTemplate,
    check_usc,
    image_union,
    preimage,
    restrict,
    support,
    validate_setmap,
)
from .spaces import INF, Point, SpaceDesc, SubsetDesc, Trace, closed_subspace


class ConstructionError(ValueError):
    pass


class SearchBoundExceeded(ConstructionError):
    pass


# -- phi_r --------------------------------------------------------------------


def phi_r(T: Kernel, r) -> SetMap:
    """``y -> {x : nu_y({x}) >= r}`` with at most ``floor(1/r)`` points."""
    r = Q(r)
    if not 0 < r <= 1:
        raise ConstructionError(f"threshold {r} is outside (0, 1]")
    T = checked(T)
    if not is_positive(T):
        raise ConstructionError("kernel is not positive")
    if not is_unital(T):
        raise ConstructionError("kernel is not unital")
    values = {y: [p for p, w in mu.atoms.items() if w >= r] for y, mu in T.rows.items()}
    temps = {bid: [SetTemplate(t.cls, [tg for tg, w in t.atoms if w >= r]) for t in ts]
             for bid, ts in T.templates.items()}
    phi = SetMap(T.codomain, T.domain, math.floor(1 / r), values, temps)
    bad = validate_setmap(phi)
    if bad:
        raise ClauseFailure("atom threshold map", "values have at most floor(1/r) points", bad[0])
    usc = check_usc(phi)
    if not usc.ok:
        raise ClauseFailure("atom threshold map", "upper semicontinuous", usc.violations[0])
    if not image_union(phi).closed:
        raise ClauseFailure("atom threshold map", "union of values is closed", f"r = {r}")
    return phi


@dataclass(frozen=True)
class OntoReport:
    m: Fraction
    uncovered: SubsetDesc

    @property
    def onto(self) -> bool:
        return self.uncovered.is_empty()

    def to_report(self) -> Report:
        rep = Report("onto check")
        detail = "" if self.onto else (
            f"uncovered {self.uncovered}; the working constant is too large, retry with a larger window")
        rep.add("atom threshold map", "map at the working constant is onto K", self.onto, detail, m=self.m)
        return rep


def check_onto_at_m(T: Kernel, m) -> OntoReport:
    phi = phi_r(T, m)
    return OntoReport(Q(m), phi.codomain.whole() - image_union(phi).subset)


def working_constant(T: Kernel, window: int = 1, max_window: int = 8) -> tuple[Fraction, int]:
    """The windowed constant at the first window where ``phi_m`` is onto.

    Windowed constants decrease to the true constant as the window grows,
    and the map is onto at the true constant, so widening the window is the
    remedy for an uncovered point.
    """
    from .norms import embedding_constant

    for w in range(window, max_window + 1):
        m = embedding_constant(T, w).value
        if m > 0 and check_onto_at_m(T, m).onto:
            return m, w
    raise SearchBoundExceeded(f"no onto threshold map up to window {max_window}")


# -- filtration ----------------------------------------------------------------


def least_p(m: Fraction) -> int:
    """Least ``p`` with ``2^p > 1/m``."""
    p = 1
    while 2 ** p * m <= 1:
        p += 1
    return p


@dataclass(frozen=True)
class Filtration:
    kernel: Kernel
    m: Fraction
    p: int
    thresholds: tuple[Fraction, ...]
    chain: tuple[SubsetDesc, ...]
    maps: tuple[SetMap, ...]

    def level(self, i: int) -> SubsetDesc:
        """``K_i`` for ``1 <= i <= p + 1`` (``K_{p+1}`` is empty)."""
        if i == self.p + 1:
            return self.kernel.domain.empty()
        return self.chain[i - 1]

    def stratum(self, i: int) -> SubsetDesc:
        return self.level(i) - self.level(i + 1)

    def to_report(self) -> Report:
        rep = Report("filtration")
        rep.add("filtration", "least p with 2^p > 1/m", True, m=self.m, p=self.p)
        for i, (mi, Ki) in enumerate(zip(self.thresholds, self.chain), 1):
            rep.add("filtration", f"K_{i} is closed", Ki.is_closed(), threshold=mi, K=str(Ki))
        rep.add("filtration", "K_1 = K", self.chain[0] == self.kernel.domain.whole())
        rep.add("filtration", "chain is decreasing",
                all(b.issubset(a) for a, b in zip(self.chain, self.chain[1:])))
        return rep


def filtration(T: Kernel, m) -> Filtration:
    m = Q(m)
    if not 0 < m <= 1:
        raise ConstructionError(f"working constant {m} is outside (0, 1]")
    T = checked(T)
    p = least_p(m)
    thresholds = tuple(m * 2 ** (i - 1) for i in range(1, p + 1))
    maps = tuple(phi_r(T, mi) for mi in thresholds)
    chain = tuple(image_union(phi).subset for phi in maps)
    if chain[0] != T.domain.whole():
        uncovered = T.domain.whole() - chain[0]
        raise ClauseFailure("filtration", "K_1 = K", f"uncovered {uncovered} at m = {m}")
    for i, (a, b) in enumerate(zip(chain, chain[1:]), 1):
        if not b.issubset(a):
            raise ClauseFailure("filtration", "chain is decreasing", f"K_{i + 1} is not inside K_{i}")
    return Filtration(T, m, p, thresholds, chain, maps)


# -- witnesses -----------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousMap:
    """A single-valued map from a closed subset of ``L`` into ``K``.

    It is carried by a set map with values of size one on the source and
    empty elsewhere; for single-valued maps upper semicontinuity is
    continuity.
    """

    source: SubsetDesc
    setmap: SetMap

    def __call__(self, y: Point) -> Point:
        if y not in self.source:
            raise ConstructionError(f"{y} is outside the source")
        (x,) = self.setmap.value(y)
        return x

    def violations(self) -> list[str]:
        out = list(validate_setmap(self.setmap))
        if self.setmap.max_size() > 1:
            out.append("map is not single-valued")
        if support(self.setmap) != self.source:
            out.append("map is not defined exactly on its source")
        out += list(check_usc(self.setmap).violations)
        return out


@dataclass(frozen=True)
class CiWitness:
    """``target`` is the continuous image of the closed subspace ``source``."""

    source: SubsetDesc
    map: ContinuousMap
    target: SubsetDesc

    def subspace(self):
        return closed_subspace(self.source.space, self.source)

    def violations(self) -> list[str]:
        out = self.map.violations()
        if not self.source.is_closed():
            out.append("source is not closed")
        if not self.target.is_closed():
            out.append("target is not closed")
        if image_union(self.map.setmap).subset != self.target:
            out.append("map is not onto the target")
        return out

    def describe(self) -> str:
        phi = self.map.setmap
        parts = []
        for y, v in phi.values.items():
            if v:
                parts.append(f"{y} -> {next(iter(v))}")
        for bid, ts in phi.templates.items():
            for t in ts:
                if t.targets:
                    parts.append(f"{bid}{t.cls} -> {t.targets[0]}")
        return "; ".join(parts)


def witness_from(psi: SetMap, C: SubsetDesc, stage: str) -> CiWitness:
    """The witness ``y -> psi(y) & C`` when that is single-valued."""
    chi = restrict(psi, C)
    if chi.max_size() > 1:
        raise ClauseFailure(stage, "restricted map is single-valued")
    chi = SetMap(chi.domain, chi.codomain, 1, chi.values, chi.templates)
    w = CiWitness(support(chi), ContinuousMap(support(chi), chi), C)
    bad = w.violations()
    if bad:
        raise ClauseFailure(stage, "witness is a continuous surjection", bad[0])
    return w


def top_level_witness(T: Kernel, F: Filtration) -> CiWitness:
    """``K_p`` as a continuous image of ``{y : phi_{m_p}(y) meets K_p}``."""
    if F.thresholds[-1] <= Fraction(1, 2):
        raise ClauseFailure("top level witness", "m_p > 1/2", f"m_p = {F.thresholds[-1]}")
    psi = phi_r(T, F.thresholds[-1])
    return witness_from(psi, F.chain[-1], "top level witness")


def max_hits(phi: SetMap, H: SubsetDesc) -> int:
    """``max_y |phi(y) & H|``, decided exactly."""
    best = max((sum(1 for x in v if x in H) for v in phi.values.values()), default=0)
    for bid, ts in phi.templates.items():
        for t in ts:
            fixed = sum(1 for tg in t.targets if isinstance(tg, Fixed) and tg.point in H)
            moving = [tg for tg in t.targets if isinstance(tg, Indexed)]
            k1, P = t.cls.k0, 1
            for tg in moving:
                tr = H.trace(tg.block)
                k1 = max(k1, tg.first_k_at_least(tr.start))
                P = math.lcm(P, tr.period)
            skip = {t.cls.k_of(n) for n in phi.overridden(bid, t)}
            k1 = max([k1] + [k + 1 for k in skip])
            for k in range(t.cls.k0, k1 + P):
                if k in skip:
                    continue
                hits = fixed + sum(1 for tg in moving if tg.at(k) in H)
                best = max(best, hits)
    return best


def neighbourhood_base(K: SpaceDesc, x: Point, bound: int):
    """Canonical clopen neighbourhoods of ``x`` in decreasing size."""
    if x.index != INF:
        yield SubsetDesc.from_points(K, [x])
        return
    for N in range(bound + 1):
        yield SubsetDesc.from_traces(K, {x.block: Trace.tail(N)})


def local_witness(T: Kernel, F: Filtration, i: int, x: Point,
                  search_bound: int = 64) -> tuple[SubsetDesc, CiWitness]:
    """A clopen ``U`` around ``x`` with ``closure(U) & K_i`` witnessed."""
    if not 1 <= i <= F.p:
        raise ConstructionError(f"level {i} is outside 1..{F.p}")
    if x not in F.level(i) or x in F.level(i + 1):
        raise ConstructionError(f"{x} is not in K_{i} minus K_{i + 1}")
    psi = restrict(phi_r(T, F.thresholds[i - 1]), F.level(i))
    for H in neighbourhood_base(T.domain, x, search_bound):
        if max_hits(psi, H) <= 1:
            return H, witness_from(psi, H & F.level(i), "local witness")
    raise SearchBoundExceeded(
        f"no clopen neighbourhood of {x} meets every value at most once (tails up to N = {search_bound})")


@dataclass(frozen=True)
class PiBaseResult:
    level: int
    point: Point | None
    U: SubsetDesc
    witness: CiWitness


def pi_base(T: Kernel, W: SubsetDesc, m=None, window: int = 2,
            search_bound: int = 64) -> PiBaseResult:
    """A clopen ``U`` inside ``W`` whose closure is a continuous image of a
    closed subspace of ``L``.  ``T`` must be positive; it is normalized to
    a unital kernel first when needed.
    """
    from .reductions import normalize_positive

    if not W.is_clopen() or W.is_empty():
        raise ConstructionError("W must be a nonempty clopen set")
    T = checked(T)
    if not is_positive(T):
        raise ConstructionError("kernel is not positive")
    if not is_unital(T):
        T = normalize_positive(T, m, window).kernel
        m = None
    if m is None:
        from .norms import embedding_constant

        m = embedding_constant(T, window).value
    F = filtration(T, m)
    for i in range(1, F.p + 1):
        inner = (W & F.stratum(i)).interior()
        if inner.is_empty():
            continue
        if i == F.p and inner.is_clopen():
            psi = phi_r(T, F.thresholds[-1])
            return PiBaseResult(i, None, inner, witness_from(psi, inner, "pi-base"))
        x = inner.first_isolated()
        H, _ = local_witness(T, F, i, x, search_bound)
        U = H & W
        psi = restrict(phi_r(T, F.thresholds[i - 1]), F.level(i))
        return PiBaseResult(i, x, U, witness_from(psi, U.closure() & F.level(i), "pi-base"))
    raise ClauseFailure("pi-base", "some stratum of W has nonempty interior")
