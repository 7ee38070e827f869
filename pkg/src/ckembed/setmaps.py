"""Finite-valued set maps ``L -> [K]^{<=p}`` in template presentation.

A set map has the same shape as a kernel: explicit values at finitely many
points and residue-class templates of unweighted targets along each seq
block of ``L``.

Upper semicontinuity is decided symbolically.  Isolated points of ``L``
impose nothing.  At a block limit ``y``, the values along one residue class
eventually lie in any neighbourhood ``U`` of ``phi(y)`` iff every fixed
target of the class lies in ``phi(y)`` and every moving target ``X[a*k+b]``
has its limit ``X_inf`` in ``phi(y)``.  A fixed target ``x`` outside the
finite set ``phi(y)`` can be separated from it by a clopen set, and a moving
target whose limit is outside ``phi(y)`` eventually leaves any clopen
neighbourhood of ``phi(y)`` that misses ``X_inf``.  Conversely, every open
set containing ``X_inf`` contains a tail of ``X``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .calculus import (
    Fixed,
    Indexed,
    Target,
    check_target,
    collision_horizon,
    duplicate_targets,
    target_sort_key,
)
from .kernels import ResidueClass, ceil_div
from .spaces import INF, Point, SpaceDesc, SubsetDesc, Trace, validate_space


class SetMapError(ValueError):
    pass


@dataclass(frozen=True)
class SetTemplate:
    cls: ResidueClass
    targets: tuple[Target, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(sorted(set(self.targets), key=target_sort_key)))

    def at(self, k: int) -> frozenset[Point]:
        return frozenset(t.at(k) for t in self.targets)


class SetMap:
    __slots__ = ("domain", "codomain", "bound", "values", "templates")

    def __init__(self, domain: SpaceDesc, codomain: SpaceDesc, bound: int,
                 values: Mapping[Point, Iterable[Point]],
                 templates: Mapping[str, Iterable[SetTemplate]] | None = None):
        self.domain = domain
        self.codomain = codomain
        self.bound = bound
        self.values: dict[Point, frozenset[Point]] = {y: frozenset(v) for y, v in sorted(values.items())}
        tm = {}
        for bid, ts in (templates or {}).items():
            ts = tuple(sorted(ts, key=lambda t: (t.cls.d, t.cls.r, t.cls.k0)))
            if ts:
                tm[bid] = ts
        self.templates: dict[str, tuple[SetTemplate, ...]] = dict(sorted(tm.items()))

    def key(self):
        return (self.domain, self.codomain, self.bound, tuple(self.values.items()),
                tuple(self.templates.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, SetMap) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"SetMap(bound={self.bound}, {len(self.values)} values)"

    def template_for(self, bid: str, n: int) -> SetTemplate | None:
        for t in self.templates.get(bid, ()):
            if t.cls.matches(n):
                return t
        return None

    def __call__(self, y: Point) -> frozenset[Point]:
        return self.value(y)

    def value(self, y: Point) -> frozenset[Point]:
        if not self.domain.contains(y):
            raise SetMapError(f"unknown point {y}")
        v = self.values.get(y)
        if v is not None:
            return v
        t = self.template_for(y.block, y.index) if y.index != INF else None
        if t is None:
            raise SetMapError(f"no value covers {y}")
        return t.at(t.cls.k_of(y.index))

    def horizon(self, bid: str) -> int:
        h = 0
        for p in self.values:
            if p.block == bid and p.index != INF:
                h = max(h, p.index + 1)
        for t in self.templates.get(bid, ()):
            h = max(h, t.cls.start)
        return h

    def overridden(self, bid: str, t: SetTemplate) -> list[int]:
        """Indices of the class carrying an explicit value instead."""
        return [p.index for p in self.values
                if p.block == bid and p.index != INF and t.cls.matches(p.index)]

    def max_size(self) -> int:
        sizes = [len(v) for v in self.values.values()]
        sizes += [len(t.targets) for ts in self.templates.values() for t in ts]
        return max(sizes, default=0)


def validate_setmap(phi: SetMap) -> list[str]:
    out = []
    for name, sp in (("domain", phi.domain), ("codomain", phi.codomain)):
        out += [f"{name}: {v}" for v in validate_space(sp).violations]
    if out:
        return out
    for y, v in phi.values.items():
        if not phi.domain.contains(y):
            out.append(f"value at {y}: not a point of the domain")
        if any(not phi.codomain.contains(x) for x in v):
            out.append(f"value at {y}: not a subset of the codomain")
        if len(v) > phi.bound:
            out.append(f"value at {y} has {len(v)} > {phi.bound} points")
    for b in phi.domain.blocks:
        ts = phi.templates.get(b.id, ())
        if not b.is_seq:
            if ts:
                out.append(f"templates on finite block {b.id!r}")
            out += [f"missing value at {Point(b.id, i)}" for i in range(b.size)
                    if Point(b.id, i) not in phi.values]
            continue
        if Point(b.id, INF) not in phi.values:
            out.append(f"missing limit value at {Point(b.id, INF)}")
        if not ts:
            out.append(f"block {b.id} has no templates")
            continue
        for t in ts:
            where = f"template {b.id} {t.cls}"
            for tg in t.targets:
                msg = check_target(phi.codomain, tg)
                if msg:
                    out.append(f"{where}: {msg}")
                elif isinstance(tg, Indexed) and tg.a * t.cls.k0 + tg.b < 0:
                    out.append(f"{where}: negative index for {tg}")
            if len(t.targets) > phi.bound:
                out.append(f"{where} has {len(t.targets)} > {phi.bound} targets")
            if collision_horizon(t.targets, t.cls.k0) != t.cls.k0:
                out.append(f"{where}: targets collide beyond k0")
        D = math.lcm(*(t.cls.d for t in ts))
        for rho in range(D):
            if sum(1 for t in ts if rho % t.cls.d == t.cls.r) != 1:
                out.append(f"residue classes of block {b.id} do not partition")
                break
        for n in range(max(t.cls.start for t in ts)):
            if Point(b.id, n) not in phi.values and phi.template_for(b.id, n) is None:
                out.append(f"missing value at {Point(b.id, n)}")
    return out


# -- upper semicontinuity ---------------------------------------------------


@dataclass(frozen=True)
class UscReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def check_usc(phi: SetMap) -> UscReport:
    out = []
    for bid, ts in phi.templates.items():
        lim_val = phi.value(Point(bid, INF))
        for t in ts:
            for tg in t.targets:
                if isinstance(tg, Fixed) and tg.point not in lim_val:
                    out.append(f"block {bid} class {t.cls}: fixed target {tg} not in value at {bid}:inf")
                if isinstance(tg, Indexed) and tg.limit not in lim_val:
                    out.append(f"block {bid} class {t.cls}: limit of {tg} not in value at {bid}:inf")
    return UscReport(tuple(out))


# -- images and preimages ---------------------------------------------------


@dataclass(frozen=True)
class ImageUnion:
    subset: SubsetDesc
    closed: bool
    onto: bool
    flagged_limits: tuple[Point, ...]


def _class_trace(cls: ResidueClass, k1: int, period: int, fin_ks: Iterable[int],
                 res: Iterable[int]) -> Trace:
    """Indices ``d*k + r`` for the listed ``k < k1`` and ``k >= k1`` with ``k % period in res``."""
    d, r = cls.d, cls.r
    res = set(res)
    residues = [(d * k + r) % (d * period) for k in range(k1, k1 + period) if k % period in res]
    return Trace.make([d * k + r for k in fin_ks], d * k1 + r, d * period, residues)


def image_union(phi: SetMap) -> ImageUnion:
    K = phi.codomain
    traces: dict[str, Trace] = {}

    def add(bid: str, tr: Trace) -> None:
        traces[bid] = traces.get(bid, Trace()) | tr

    for v in phi.values.values():
        for x in v:
            add(x.block, Trace.points([x.index]))
    flagged = []
    for bid, ts in phi.templates.items():
        for t in ts:
            skip = set(phi.overridden(bid, t))
            for tg in t.targets:
                if isinstance(tg, Fixed):
                    add(tg.block, Trace.points([tg.point.index]))
                else:
                    prog = Trace.progression(tg.a, tg.b, t.cls.k0)
                    gone = Trace.points([tg.a * t.cls.k_of(n) + tg.b for n in skip])
                    add(tg.block, prog - gone)
                    flagged.append(tg.limit)
    sub = SubsetDesc.from_traces(K, traces)
    return ImageUnion(sub, sub.is_closed(), sub == K.whole(), tuple(sorted(set(flagged))))


def preimage(phi: SetMap, F: SubsetDesc) -> SubsetDesc:
    """``{y : phi(y) meets F}`` for closed ``F``."""
    if F.space != phi.codomain:
        raise SetMapError("subset is not in the codomain")
    if not F.is_closed():
        raise SetMapError("preimage requires a closed set")
    traces: dict[str, Trace] = {}
    for bid, ts in phi.templates.items():
        acc = Trace()
        for t in ts:
            hit = Trace()
            for tg in t.targets:
                if isinstance(tg, Fixed):
                    if tg.point in F:
                        hit = hit | _class_trace(t.cls, t.cls.k0, 1, (), [0])
                else:
                    k1, P, fin, res = F.trace(tg.block).shifted_members(tg.a, tg.b, t.cls.k0)
                    hit = hit | _class_trace(t.cls, k1, P, fin, res)
            acc = acc | (hit - Trace.points(phi.overridden(bid, t)))
        traces[bid] = acc
    explicit_hits = [y for y, v in phi.values.items() if any(x in F for x in v)]
    for y in explicit_hits:
        traces[y.block] = traces.get(y.block, Trace()) | Trace.points([y.index])
    return SubsetDesc.from_traces(phi.domain, traces)


def restrict(phi: SetMap, F: SubsetDesc) -> SetMap:
    """``psi(y) = phi(y) & F`` in template form; usc whenever ``phi`` is."""
    if F.space != phi.codomain:
        raise SetMapError("subset is not in the codomain")
    if not F.is_closed():
        raise SetMapError("restriction requires a closed set")
    values = {y: frozenset(x for x in v if x in F) for y, v in phi.values.items()}
    temps: dict[str, list[SetTemplate]] = {}
    for bid, ts in phi.templates.items():
        new = []
        for t in ts:
            fixed = [tg for tg in t.targets if isinstance(tg, Fixed) and tg.point in F]
            moving = [tg for tg in t.targets if isinstance(tg, Indexed)]
            if not moving:
                new.append(SetTemplate(t.cls, fixed))
                continue
            k1 = t.cls.k0
            P = 1
            for tg in moving:
                tr = F.trace(tg.block)
                k1 = max(k1, tg.first_k_at_least(tr.start))
                P = math.lcm(P, tr.period)
            d, r = t.cls.d, t.cls.r
            for j in range(P):
                kk = k1 + ((j - k1) % P)
                keep = [tg.shifted(P, j) for tg in moving if (tg.a * kk + tg.b) in F.trace(tg.block)]
                cls = ResidueClass(d * P, d * j + r, (kk - j) // P)
                new.append(SetTemplate(cls, fixed + keep))
            for k in range(t.cls.k0, k1):
                y = Point(bid, t.cls.index(k))
                if y not in values:
                    values[y] = frozenset(x for x in t.at(k) if x in F)
        temps[bid] = new
    return SetMap(phi.domain, phi.codomain, phi.bound, values, temps)


def empty_map(L: SpaceDesc, K: SpaceDesc, bound: int = 1) -> SetMap:
    values = {}
    temps = {}
    for b in L.blocks:
        if b.is_seq:
            values[Point(b.id, INF)] = frozenset()
            temps[b.id] = [SetTemplate(ResidueClass(1, 0, 0), ())]
        else:
            values.update({Point(b.id, i): frozenset() for i in range(b.size)})
    return SetMap(L, K, bound, values, temps)


def support(phi: SetMap) -> SubsetDesc:
    """``{y : phi(y) nonempty}``."""
    return preimage(phi, phi.codomain.whole())


# -- sequential compactness, constructively ---------------------------------


@dataclass(frozen=True)
class Subsequence:
    """``n_s = first + step*s`` (``s >= 0``), with ``x_{n_s} in phi(y_s)``."""

    first: int
    step: int
    preimages: Target  # y_s as a target on L, parametrized by s
    limit_y: Point
    limit: Point


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return a, 1, 0
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def extract_convergent_subsequence(phi: SetMap, xs: Target) -> Subsequence:
    """Pick ``y_n`` with ``x_n in phi(y_n)`` along a convergent subsequence.

    ``xs`` is ``X[a*n+b]`` (``n`` from the first nonnegative index) or a
    constant sequence ``Fixed(x)``.
    """
    if isinstance(xs, Fixed):
        x = xs.point
        for y, v in phi.values.items():
            if x in v:
                return _checked(phi, Subsequence(0, 1, Fixed(y), y, x))
        for bid, ts in phi.templates.items():
            for t in ts:
                if xs in t.targets:
                    y = Point(bid, _free_index(phi, bid, t))
                    return _checked(phi, Subsequence(0, 1, Fixed(y), y, x))
                if x.index == INF:
                    continue
                for tg in t.targets:
                    if isinstance(tg, Indexed) and tg.block == x.block and (x.index - tg.b) % tg.a == 0:
                        k = (x.index - tg.b) // tg.a
                        y = Point(bid, t.cls.index(k))
                        if k >= t.cls.k0 and y not in phi.values:
                            return _checked(phi, Subsequence(0, 1, Fixed(y), y, x))
        raise SetMapError(f"{x} is not covered: the map is not onto")
    n_start = xs.least_valid()
    for bid, ts in phi.templates.items():
        for t in ts:
            for tg in t.targets:
                if not isinstance(tg, Indexed) or tg.block != xs.block:
                    continue
                # xs.a * n + xs.b == tg.a * k + tg.b
                g, u, v = _egcd(xs.a, tg.a)
                rhs = tg.b - xs.b
                if rhs % g:
                    continue
                n_p, k_p = u * (rhs // g), -v * (rhs // g)
                sn, sk = tg.a // g, xs.a // g
                skip = set(phi.overridden(bid, t))
                lo_k = max([t.cls.k0] + [t.cls.k_of(n) + 1 for n in skip])
                s0 = max(ceil_div(n_start - n_p, sn), ceil_div(lo_k - k_p, sk))
                n1, k1 = n_p + sn * s0, k_p + sk * s0
                ys = Indexed(bid, t.cls.d * sk, t.cls.index(k1))
                return _checked(phi, Subsequence(n1, sn, ys, Point(bid, INF), xs.limit))
    raise SetMapError(f"{xs} is not covered along any template: the map is not onto")


def _free_index(phi: SetMap, bid: str, t: SetTemplate) -> int:
    n = t.cls.start
    while Point(bid, n) in phi.values:
        n += t.cls.d
    return n


def _checked(phi: SetMap, sub: Subsequence) -> Subsequence:
    if sub.limit not in phi.value(sub.limit_y):
        raise SetMapError(f"limit {sub.limit} is not in the value at {sub.limit_y}: map is not usc")
    if len(phi.value(sub.limit_y)) > phi.bound:
        raise SetMapError("value at the limit exceeds the bound")
    return sub
