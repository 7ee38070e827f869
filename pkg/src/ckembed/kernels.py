"""Operators ``T: C(K) -> C(L)`` presented by their point-measures ``y -> T*delta_y``.

Rows at finitely many points of ``L`` are stored explicitly.  Along every
seq block of ``L`` the remaining rows are given by residue-class templates:
the class ``(d, r, k0)`` covers the indices ``d*k + r`` with ``k >= k0`` and
its template is a list of weighted targets, either fixed points of ``K`` or
moving points ``X[a*k+b]``.  The row at the block limit is explicit and must
be the weak* limit of every class (this is what makes ``Tg`` continuous).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .calculus import (
    CalculusError,
    Fixed,
    Fn,
    Indexed,
    Meas,
    Target,
    check_target,
    collision_horizon,
    duplicate_targets,
    instantiate,
    symbolic_limit,
    target_sort_key,
    Q,
)
from .spaces import (
    INF,
    Point,
    PointEmbedding,
    SpaceDesc,
    SubsetDesc,
    closed_subspace,
    validate_space,
)


class KernelError(ValueError):
    pass


def ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


@dataclass(frozen=True, order=True)
class ResidueClass:
    d: int
    r: int
    k0: int

    @property
    def start(self) -> int:
        return self.d * self.k0 + self.r

    def index(self, k: int) -> int:
        return self.d * k + self.r

    def k_of(self, n: int) -> int:
        return (n - self.r) // self.d

    def matches(self, n: int) -> bool:
        return n >= self.start and n % self.d == self.r

    def with_k0(self, k0: int) -> "ResidueClass":
        return ResidueClass(self.d, self.r, k0)

    def __str__(self) -> str:
        return f"({self.d},{self.r})"


def _sorted_atoms(atoms: Iterable[tuple[Target, Fraction]]) -> tuple[tuple[Target, Fraction], ...]:
    return tuple(sorted(((t, Q(w)) for t, w in atoms), key=lambda tw: target_sort_key(tw[0])))


@dataclass(frozen=True)
class Template:
    cls: ResidueClass
    atoms: tuple[tuple[Target, Fraction], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", _sorted_atoms(self.atoms))

    @property
    def targets(self) -> list[Target]:
        return [t for t, _ in self.atoms]

    def variation(self) -> Fraction:
        return sum((abs(w) for _, w in self.atoms), Fraction(0))

    def mass(self) -> Fraction:
        return sum((w for _, w in self.atoms), Fraction(0))

    def map_weights(self, f: Callable[[Fraction], Fraction]) -> "Template":
        return Template(self.cls, [(t, f(w)) for t, w in self.atoms if f(w) != 0])


class Kernel:
    """A bounded operator ``C(K) -> C(L)`` in template presentation.

    The constructor does not validate; use :func:`validate_kernel`.
    """

    __slots__ = ("domain", "codomain", "rows", "templates")

    def __init__(self, domain: SpaceDesc, codomain: SpaceDesc,
                 rows: Mapping[Point, Meas], templates: Mapping[str, Iterable[Template]] | None = None):
        self.domain = domain
        self.codomain = codomain
        self.rows: dict[Point, Meas] = dict(sorted(rows.items()))
        tm = {}
        for bid, ts in (templates or {}).items():
            ts = tuple(sorted(ts, key=lambda t: (t.cls.d, t.cls.r, t.cls.k0)))
            if ts:
                tm[bid] = ts
        self.templates: dict[str, tuple[Template, ...]] = dict(sorted(tm.items()))

    def __repr__(self) -> str:
        return f"Kernel({len(self.rows)} rows, {sum(map(len, self.templates.values()))} templates)"

    def key(self):
        return (self.domain, self.codomain, tuple(self.rows.items()), tuple(self.templates.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Kernel) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def template_for(self, bid: str, n: int) -> Template | None:
        for t in self.templates.get(bid, ()):
            if t.cls.matches(n):
                return t
        return None

    def row(self, y: Point) -> Meas:
        return row(self, y)

    def horizon(self, bid: str) -> int:
        """First index from which every row of the block comes from a template."""
        h = 0
        for p in self.rows:
            if p.block == bid and p.index != INF:
                h = max(h, p.index + 1)
        for t in self.templates.get(bid, ()):
            h = max(h, t.cls.start)
        return h

    def all_templates(self) -> Iterable[tuple[str, Template]]:
        for bid, ts in self.templates.items():
            for t in ts:
                yield bid, t

    def map_weights(self, f: Callable[[Fraction], Fraction]) -> "Kernel":
        rows = {y: Meas(self.domain, [(p, f(w)) for p, w in mu.atoms.items()]) for y, mu in self.rows.items()}
        temps = {b: [t.map_weights(f) for t in ts] for b, ts in self.templates.items()}
        return Kernel(self.domain, self.codomain, rows, temps)

    def scaled(self, c) -> "Kernel":
        c = Q(c)
        return self.map_weights(lambda w: c * w)


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class KernelReport:
    violations: tuple[str, ...]
    normalized: Kernel | None = field(default=None, compare=False)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_kernel(T: Kernel) -> KernelReport:
    """Coverage, normal form (with horizons raised past collisions) and weak* continuity."""
    out: list[str] = []
    for name, sp in (("domain", T.domain), ("codomain", T.codomain)):
        for v in validate_space(sp).violations:
            out.append(f"{name}: {v}")
    if out:
        return KernelReport(tuple(out))
    K, L = T.domain, T.codomain
    for y, mu in T.rows.items():
        if not L.contains(y):
            out.append(f"row at {y}: not a point of the codomain")
        if mu.space != K:
            out.append(f"row at {y}: measure not on the domain")
    new_templates: dict[str, list[Template]] = {}
    for bid, ts in T.templates.items():
        if not L.has_block(bid):
            out.append(f"templates for unknown block {bid!r}")
            continue
        if not L.block(bid).is_seq:
            out.append(f"templates on finite block {bid!r}")
            continue
        for t in ts:
            c = t.cls
            where = f"template {bid} {c}"
            if c.d < 1 or not 0 <= c.r < c.d or c.k0 < 0:
                out.append(f"{where}: malformed residue class")
                continue
            bad = False
            for tg, w in t.atoms:
                msg = check_target(K, tg)
                if msg:
                    out.append(f"{where}: {msg}")
                    bad = True
                if w == 0:
                    out.append(f"{where}: zero weight at {tg}")
                if isinstance(tg, Indexed) and tg.a * c.k0 + tg.b < 0:
                    out.append(f"{where}: negative index for {tg} at k = {c.k0}")
            dups = duplicate_targets(t.targets)
            if dups:
                out.append(f"{where}: duplicate target {dups[0]}")
                bad = True
            if bad:
                new_templates.setdefault(bid, []).append(t)
                continue
            h = collision_horizon(t.targets, c.k0)
            for k in range(c.k0, h):
                y = Point(bid, c.index(k))
                if y not in T.rows:
                    out.append(f"collision in {where} at k = {k}: explicit row required at {y}")
            new_templates.setdefault(bid, []).append(Template(c.with_k0(h), t.atoms))
    N = Kernel(K, L, T.rows, new_templates)
    for b in L.blocks:
        if not b.is_seq:
            for i in range(b.size):
                if Point(b.id, i) not in T.rows:
                    out.append(f"missing row at {Point(b.id, i)}")
            continue
        ts = N.templates.get(b.id, ())
        lim = Point(b.id, INF)
        if lim not in T.rows:
            out.append(f"missing limit row at {lim}")
        if not ts:
            out.append(f"block {b.id} has no templates")
            continue
        D = math.lcm(*(t.cls.d for t in ts))
        for rho in range(D):
            hits = [t for t in ts if rho % t.cls.d == t.cls.r]
            if len(hits) != 1:
                out.append(f"residue classes of block {b.id} do not partition: "
                           f"{rho} mod {D} matched by {len(hits)} classes")
        for n in range(max(t.cls.start for t in ts)):
            y = Point(b.id, n)
            if y not in T.rows and N.template_for(b.id, n) is None:
                out.append(f"missing row at {y}")
        if lim in T.rows:
            for t in ts:
                if symbolic_limit(K, t.atoms) != T.rows[lim]:
                    out.append(f"weak* discontinuity at block {b.id} class {t.cls}")
    return KernelReport(tuple(out), N)


def checked(T: Kernel) -> Kernel:
    """Validated, normalized kernel or :class:`KernelError`."""
    rep = validate_kernel(T)
    if not rep.ok:
        raise KernelError("; ".join(rep.violations))
    return rep.normalized


# -- operations -------------------------------------------------------------


def row(T: Kernel, y: Point) -> Meas:
    """``T*delta_y``."""
    if not T.codomain.contains(y):
        raise KernelError(f"unknown point {y}")
    mu = T.rows.get(y)
    if mu is not None:
        return mu
    t = T.template_for(y.block, y.index) if y.index != INF else None
    if t is None:
        raise KernelError(f"no row covers {y}")
    return instantiate(T.domain, t.atoms, t.cls.k_of(y.index))


def apply(T: Kernel, g: Fn) -> Fn:
    """``(Tg)(y) = nu_y(g)`` as an exact eventually-constant function."""
    if g.space != T.domain:
        raise KernelError("function is not on the domain of the kernel")
    data = {}
    for b in T.codomain.blocks:
        if not b.is_seq:
            data[b.id] = [row(T, Point(b.id, i))(g) for i in range(b.size)]
            continue
        H = T.horizon(b.id)
        for t in T.templates.get(b.id, ()):
            for tg, _ in t.atoms:
                if isinstance(tg, Indexed):
                    k = tg.first_k_at_least(g.max_exception(tg.block) + 1)
                    H = max(H, t.cls.index(k))
        tail = row(T, Point(b.id, INF))(g)
        data[b.id] = (tail, {n: row(T, Point(b.id, n))(g) for n in range(H)})
    return Fn(T.codomain, data)


def adjoint(T: Kernel, mu: Meas) -> Meas:
    """``T*mu`` for a finitely supported measure on the codomain."""
    if mu.space != T.codomain:
        raise KernelError("measure is not on the codomain of the kernel")
    out = Meas.zero(T.domain)
    for y, w in mu.atoms.items():
        out = out + row(T, y).scale(w)
    return out


def is_positive(T: Kernel) -> bool:
    return (all(mu.is_nonneg() for mu in T.rows.values())
            and all(w > 0 for _, t in T.all_templates() for _, w in t.atoms))


def is_unital(T: Kernel) -> bool:
    return (all(mu.mass() == 1 for mu in T.rows.values())
            and all(t.mass() == 1 for _, t in T.all_templates()))


def operator_norm(T: Kernel) -> Fraction:
    """``sup_y ||T*delta_y||``: explicit rows and template variations."""
    vals = [mu.norm() for mu in T.rows.values()] + [t.variation() for _, t in T.all_templates()]
    return max(vals, default=Fraction(0))


def scale_by_function(T: Kernel, h: Fn) -> Kernel:
    """The kernel of ``g -> h * Tg``."""
    if h.space != T.codomain:
        raise KernelError("multiplier is not on the codomain")
    rows = {y: mu.scale(h(y)) for y, mu in T.rows.items()}
    temps = {}
    for b in T.codomain.seq_blocks():
        for n in h.exceptions(b.id):
            y = Point(b.id, n)
            if y not in rows:
                rows[y] = row(T, y).scale(h(y))
        c = h.tail(b.id)
        temps[b.id] = [t.map_weights(lambda w: c * w) for t in T.templates.get(b.id, ())]
    return Kernel(T.domain, T.codomain, rows, temps)


def identity_kernel(space: SpaceDesc) -> Kernel:
    rows = {}
    temps = {}
    for b in space.blocks:
        if b.is_seq:
            lim = Point(b.id, INF)
            rows[lim] = Meas.dirac(space, lim)
            temps[b.id] = [Template(ResidueClass(1, 0, 0), [(Indexed(b.id, 1, 0), Fraction(1))])]
        else:
            for i in range(b.size):
                rows[Point(b.id, i)] = Meas.dirac(space, Point(b.id, i))
    return Kernel(space, space, rows, temps)


def restrict_codomain(T: Kernel, F: SubsetDesc) -> tuple[Kernel, PointEmbedding]:
    """The kernel of ``g -> (Tg)|F`` on the closed subspace ``F`` of ``L``."""
    sub, emb = closed_subspace(T.codomain, F)
    rows: dict[Point, Meas] = {}
    temps: dict[str, list[Template]] = {}
    for nb in sub.blocks:
        if not nb.is_seq:
            for j in range(nb.size):
                p = Point(nb.id, j)
                rows[p] = row(T, emb.forward(p))
            continue
        bid = nb.id
        tr = F.trace(bid)
        fin = sorted(tr.finite)
        s, P = tr.start, tr.period
        offs = [o for o in range(P) if (s + o) % P in tr.residues]
        old = T.templates.get(bid, ())
        if not old:
            raise KernelError(f"block {bid} has no templates")
        Lp = math.lcm(P, *(t.cls.d for t in old)) // P
        dn = len(offs) * Lp
        new = []
        for tt in range(Lp):
            for rho in range(len(offs)):
                rp = len(fin) + tt * len(offs) + rho
                delta, rr = divmod(rp, dn)
                base = s + tt * P + offs[rho]
                oc = next(t for t in old if (base - t.cls.r) % t.cls.d == 0)
                alpha = Lp * P // oc.cls.d
                off = (base - oc.cls.r) // oc.cls.d - alpha * delta
                k0 = max(delta, ceil_div(oc.cls.k0 - off, alpha))
                atoms = [(tg.shifted(alpha, off), w) for tg, w in oc.atoms]
                new.append(Template(ResidueClass(dn, rr, k0), atoms))
        temps[bid] = new
        probe = Kernel(T.domain, sub, {}, {bid: new})
        for j in range(probe.horizon(bid)):
            p = Point(bid, j)
            if probe.template_for(bid, j) is None:
                rows[p] = row(T, emb.forward(p))
        for y, mu in T.rows.items():
            if y.block == bid and y in F:
                rows[emb.backward(y)] = mu
    return Kernel(T.domain, sub, rows, temps), emb


def refined_templates(T: Kernel, bid: str, D: int, S: int) -> list[tuple]:
    """Templates of a block re-expressed modulo ``D`` for indices ``>= S``."""
    out = []
    for rho in range(D):
        t = next(t for t in T.templates[bid] if rho % t.cls.d == t.cls.r)
        scale = D // t.cls.d
        off = (rho - t.cls.r) // t.cls.d
        out.append(_sorted_atoms((tg.shifted(scale, off), w) for tg, w in t.atoms))
    return out


def kernels_equal(T1: Kernel, T2: Kernel) -> bool:
    """Pointwise equality of two valid kernels (same row at every point of ``L``)."""
    if T1.domain != T2.domain or T1.codomain != T2.codomain:
        return False
    for b in T1.codomain.blocks:
        if not b.is_seq:
            if any(row(T1, Point(b.id, i)) != row(T2, Point(b.id, i)) for i in range(b.size)):
                return False
            continue
        if row(T1, Point(b.id, INF)) != row(T2, Point(b.id, INF)):
            return False
        D = math.lcm(*(t.cls.d for t in T1.templates[b.id] + T2.templates[b.id]))
        S = max(T1.horizon(b.id), T2.horizon(b.id))
        S = ceil_div(S, D) * D
        if any(row(T1, Point(b.id, n)) != row(T2, Point(b.id, n)) for n in range(S)):
            return False
        if refined_templates(T1, b.id, D, S) != refined_templates(T2, b.id, D, S):
            return False
    return True
