"""Exact continuous functions and atomic measures on desk-class spaces.

Functions are eventually constant on every seq block (finitely many
exceptions and a tail value, which is also the value at the limit point), so
continuity holds by construction.  Measures are finitely supported with
nonzero rational weights.  Everything is kept in canonical form so that
structural equality is mathematical equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .spaces import INF, Point, PointEmbedding, SpaceDesc, SpaceError, SubsetDesc, Trace

Number = Union[int, Fraction]


class CalculusError(ValueError):
    pass


def Q(x: Number | str) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# -- functions --------------------------------------------------------------


class Fn:
    """Continuous eventually-constant function on a desk-class space."""

    __slots__ = ("space", "_exc", "_tail")

    def __init__(self, space: SpaceDesc, blocks: Mapping[str, tuple] | None = None):
        """``blocks`` maps a seq block id to ``(tail, {index: value})`` and a
        finite block id to a sequence of values (or an ``{index: value}``
        map).  Missing blocks are zero."""
        self.space = space
        self._exc: dict[str, dict[int, Fraction]] = {}
        self._tail: dict[str, Fraction] = {}
        blocks = dict(blocks or {})
        for b in space.blocks:
            spec = blocks.pop(b.id, None)
            if b.is_seq:
                tail, exc = (0, {}) if spec is None else spec
                tail = Q(tail)
                exc = {int(i): Q(v) for i, v in dict(exc).items()}
                if any(i < 0 for i in exc):
                    raise CalculusError(f"negative index in block {b.id}")
                self._tail[b.id] = tail
                self._exc[b.id] = {i: v for i, v in sorted(exc.items()) if v != tail}
            else:
                if spec is None:
                    vals = {i: Fraction(0) for i in range(b.size)}
                elif isinstance(spec, Mapping):
                    vals = {i: Fraction(0) for i in range(b.size)}
                    for i, v in spec.items():
                        if not 0 <= int(i) < b.size:
                            raise CalculusError(f"index {i} outside finite block {b.id}")
                        vals[int(i)] = Q(v)
                else:
                    spec = list(spec)
                    if len(spec) != b.size:
                        raise CalculusError(f"block {b.id} needs {b.size} values")
                    vals = {i: Q(v) for i, v in enumerate(spec)}
                self._exc[b.id] = vals
        if blocks:
            raise SpaceError(f"unknown block id {sorted(blocks)[0]!r}")

    # constructors
    @classmethod
    def constant(cls, space: SpaceDesc, c: Number) -> "Fn":
        c = Q(c)
        return cls(space, {b.id: (c, {}) if b.is_seq else [c] * b.size for b in space.blocks})

    @classmethod
    def one(cls, space: SpaceDesc) -> "Fn":
        return cls.constant(space, 1)

    @classmethod
    def from_pointwise(cls, space: SpaceDesc, f: Callable[[Point], Number],
                       horizon: Mapping[str, int]) -> "Fn":
        """Sample ``f`` below per-block horizons; the limit value is the tail."""
        data = {}
        for b in space.blocks:
            if b.is_seq:
                tail = f(Point(b.id, INF))
                data[b.id] = (tail, {i: f(Point(b.id, i)) for i in range(horizon.get(b.id, 0))})
            else:
                data[b.id] = [f(Point(b.id, i)) for i in range(b.size)]
        return cls(space, data)

    # access
    def tail(self, bid: str) -> Fraction:
        return self._tail[bid]

    def exceptions(self, bid: str) -> dict[int, Fraction]:
        return dict(self._exc[bid])

    def max_exception(self, bid: str) -> int:
        """Largest exceptional index of a block, or -1."""
        exc = self._exc[bid]
        return max(exc) if exc else -1

    def __call__(self, p: Point) -> Fraction:
        return fn_eval(self, p)

    def values(self) -> set[Fraction]:
        out = set(self._tail.values())
        for exc in self._exc.values():
            out.update(exc.values())
        return out

    def norm(self) -> Fraction:
        return fn_norm(self)

    def key(self):
        return (self.space,
                tuple((b, tuple(self._exc[b].items()), self._tail.get(b)) for b in self.space.ids))

    def __eq__(self, other) -> bool:
        return isinstance(other, Fn) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Fn({self.describe()})"

    def describe(self) -> str:
        parts = []
        for b in self.space.blocks:
            exc = self._exc[b.id]
            if b.is_seq:
                e = ", ".join(f"{i}: {v}" for i, v in exc.items())
                parts.append(f"{b.id}: tail {self._tail[b.id]}" + (f" except {{{e}}}" if e else ""))
            else:
                e = ", ".join(f"{i}: {v}" for i, v in exc.items())
                parts.append(f"{b.id}: values {{{e}}}")
        return "; ".join(parts)

    # algebra
    def _combine(self, other: "Fn", op) -> "Fn":
        if other.space != self.space:
            raise CalculusError("functions live on different spaces")
        data = {}
        for b in self.space.blocks:
            if b.is_seq:
                idx = set(self._exc[b.id]) | set(other._exc[b.id])
                tail = op(self._tail[b.id], other._tail[b.id])
                data[b.id] = (tail, {i: op(self(Point(b.id, i)), other(Point(b.id, i))) for i in idx})
            else:
                data[b.id] = [op(self._exc[b.id][i], other._exc[b.id][i]) for i in range(b.size)]
        return Fn(self.space, data)

    def _map(self, op) -> "Fn":
        data = {}
        for b in self.space.blocks:
            if b.is_seq:
                data[b.id] = (op(self._tail[b.id]), {i: op(v) for i, v in self._exc[b.id].items()})
            else:
                data[b.id] = [op(self._exc[b.id][i]) for i in range(b.size)]
        return Fn(self.space, data)

    def __add__(self, other: "Fn") -> "Fn":
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other: "Fn") -> "Fn":
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, other: "Fn") -> "Fn":
        return self._combine(other, lambda a, b: a * b)

    def __neg__(self) -> "Fn":
        return self.scale(-1)

    def scale(self, c: Number) -> "Fn":
        c = Q(c)
        return self._map(lambda v: c * v)

    def reciprocal(self) -> "Fn":
        if 0 in self.values():
            raise CalculusError("reciprocal of a function with a zero value")
        return self._map(lambda v: 1 / v)

    def abs(self) -> "Fn":
        return self._map(abs)

    def minimum(self) -> Fraction:
        return min(self.values())

    def superlevel(self, c: Number) -> SubsetDesc:
        """``{p : f(p) >= c}``; closed because ``f`` is continuous."""
        c = Q(c)
        traces = {}
        for b in self.space.blocks:
            exc = self._exc[b.id]
            if b.is_seq:
                tail_in = self._tail[b.id] >= c
                hit = [i for i, v in exc.items() if v >= c]
                if tail_in:
                    top = max(exc) + 1 if exc else 0
                    fin = [i for i in range(top) if i not in exc] + hit
                    traces[b.id] = Trace.make(fin, top, 1, [0], True)
                else:
                    traces[b.id] = Trace.points(hit)
            else:
                traces[b.id] = Trace.points([i for i, v in exc.items() if v >= c])
        return SubsetDesc.from_traces(self.space, traces)


def fn_eval(g: Fn, p: Point) -> Fraction:
    g.space.check_point(p)
    b = g.space.block(p.block)
    if b.is_seq:
        if p.index == INF:
            return g._tail[b.id]
        return g._exc[b.id].get(p.index, g._tail[b.id])
    return g._exc[b.id][p.index]


def fn_norm(g: Fn) -> Fraction:
    return max(abs(v) for v in g.values()) if g.values() else Fraction(0)


def fn_add(g: Fn, h: Fn) -> Fn:
    return g + h


def fn_scale(c: Number, g: Fn) -> Fn:
    return g.scale(c)


def fn_mul(g: Fn, h: Fn) -> Fn:
    return g * h


def fn_reciprocal(g: Fn) -> Fn:
    return g.reciprocal()


def pullback(g: Fn, emb: PointEmbedding) -> Fn:
    """``g`` composed with the embedding of a closed subspace."""
    if g.space != emb.parent:
        raise CalculusError("function is not on the parent space")
    horizon = {}
    for b in emb.sub.seq_blocks():
        last = g.max_exception(b.id)
        j = 0
        while emb.forward(Point(b.id, j)).index <= last:
            j += 1
        horizon[b.id] = j
    return Fn.from_pointwise(emb.sub, lambda p: g(emb.forward(p)), horizon)


def clopen_bump(s: SpaceDesc, U: SubsetDesc) -> Fn:
    """Indicator function of a clopen set."""
    if U.space != s:
        raise CalculusError("subset does not belong to the space")
    if not U.is_clopen():
        raise CalculusError("bump requires a clopen set")
    data = {}
    for b in s.blocks:
        t = U.trace(b.id)
        if b.is_seq:
            tail = 1 if t.inf else 0
            top = max(t.start, max(t.finite, default=-1) + 1)
            data[b.id] = (tail, {i: (1 if i in t else 0) for i in range(top)})
        else:
            data[b.id] = [1 if i in t else 0 for i in range(b.size)]
    return Fn(s, data)


# -- measures ---------------------------------------------------------------


class Meas:
    """Finitely supported signed atomic measure with rational weights."""

    __slots__ = ("space", "atoms")

    def __init__(self, space: SpaceDesc, atoms: Mapping[Point, Number] | Iterable[tuple[Point, Number]] = ()):
        self.space = space
        merged: dict[Point, Fraction] = {}
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        for p, w in items:
            p = Point(*p)
            space.check_point(p)
            merged[p] = merged.get(p, Fraction(0)) + Q(w)
        self.atoms: dict[Point, Fraction] = {p: w for p, w in sorted(merged.items()) if w != 0}

    @classmethod
    def dirac(cls, space: SpaceDesc, p: Point) -> "Meas":
        return cls(space, {p: 1})

    @classmethod
    def zero(cls, space: SpaceDesc) -> "Meas":
        return cls(space)

    def key(self):
        return (self.space, tuple(self.atoms.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Meas) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Meas({self.describe()})"

    def describe(self) -> str:
        return "{ " + ", ".join(f"{p}: {w}" for p, w in self.atoms.items()) + " }" if self.atoms else "{ }"

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def _check(self, other: "Meas") -> None:
        if other.space != self.space:
            raise CalculusError("measures live on different spaces")

    def __add__(self, other: "Meas") -> "Meas":
        self._check(other)
        return Meas(self.space, list(self.atoms.items()) + list(other.atoms.items()))

    def __sub__(self, other: "Meas") -> "Meas":
        return self + other.scale(-1)

    def __neg__(self) -> "Meas":
        return self.scale(-1)

    def scale(self, c: Number) -> "Meas":
        c = Q(c)
        return Meas(self.space, {p: c * w for p, w in self.atoms.items()})

    def norm(self) -> Fraction:
        return sum((abs(w) for w in self.atoms.values()), Fraction(0))

    def mass(self) -> Fraction:
        return sum(self.atoms.values(), Fraction(0))

    def is_nonneg(self) -> bool:
        return all(w > 0 for w in self.atoms.values())

    def support(self) -> frozenset[Point]:
        return frozenset(self.atoms)

    def weight(self, p: Point) -> Fraction:
        return self.atoms.get(p, Fraction(0))

    def __call__(self, g: Fn) -> Fraction:
        return meas_eval(self, g)

    def plus(self) -> "Meas":
        return Meas(self.space, {p: w for p, w in self.atoms.items() if w > 0})

    def minus(self) -> "Meas":
        return Meas(self.space, {p: -w for p, w in self.atoms.items() if w < 0})

    def abs(self) -> "Meas":
        return Meas(self.space, {p: abs(w) for p, w in self.atoms.items()})

    def mass_on(self, A: SubsetDesc) -> Fraction:
        return sum((w for p, w in self.atoms.items() if p in A), Fraction(0))


def meas_eval(mu: Meas, g: Fn) -> Fraction:
    if mu.space != g.space:
        raise CalculusError("space mismatch between measure and function")
    return sum((w * fn_eval(g, p) for p, w in mu.atoms.items()), Fraction(0))


@dataclass(frozen=True)
class Jordan:
    plus: Meas
    minus: Meas
    abs: Meas
    norm: Fraction


def jordan(mu: Meas) -> Jordan:
    return Jordan(mu.plus(), mu.minus(), mu.abs(), mu.norm())


# -- parametric targets -----------------------------------------------------


@dataclass(frozen=True, order=True)
class Fixed:
    point: Point

    def at(self, k: int) -> Point:
        return self.point

    @property
    def limit(self) -> Point:
        return self.point

    @property
    def block(self) -> str:
        return self.point.block

    def shifted(self, scale: int, offset: int) -> "Fixed":
        return self

    def __str__(self) -> str:
        return str(self.point)


@dataclass(frozen=True, order=True)
class Indexed:
    """The point ``block_{a*k+b}`` of a seq block, a moving target."""

    block: str
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 1:
            raise CalculusError("indexed targets need a >= 1")

    def at(self, k: int) -> Point:
        return Point(self.block, self.a * k + self.b)

    @property
    def limit(self) -> Point:
        return Point(self.block, INF)

    def shifted(self, scale: int, offset: int) -> "Indexed":
        """Re-parametrize by ``k = scale*k' + offset``."""
        return Indexed(self.block, self.a * scale, self.a * offset + self.b)

    def least_valid(self) -> int:
        """Least ``k`` with a nonnegative index."""
        return max(0, -(self.b // self.a))

    def first_k_at_least(self, n: int) -> int:
        """Least ``k`` with ``a*k + b >= n``."""
        return -((self.b - n) // self.a)

    def __str__(self) -> str:
        if self.a == 1:
            expr = "k"
        else:
            expr = f"{self.a}*k"
        if self.b > 0:
            expr += f"+{self.b}"
        elif self.b < 0:
            expr += f"-{-self.b}"
        return f"{self.block}[{expr}]"


Target = Union[Fixed, Indexed]


def target_sort_key(t: Target):
    if isinstance(t, Fixed):
        return (0, t.point.block, t.point.index, 0, 0)
    return (1, t.block, 0, t.a, t.b)


def check_target(space: SpaceDesc, t: Target) -> str | None:
    if isinstance(t, Fixed):
        if not space.contains(t.point):
            return f"target {t} is not a point of the space"
        return None
    if not space.has_block(t.block):
        return f"unknown block id {t.block!r} in target {t}"
    if not space.block(t.block).is_seq:
        return f"indexed target {t} needs a seq block"
    return None


def collision_horizon(targets: Iterable[Target], k0: int) -> int:
    """Least ``k >= k0`` beyond which the targets are pairwise distinct."""
    ts = list(targets)
    h = k0
    for i, t1 in enumerate(ts):
        for t2 in ts[i + 1:]:
            k = _collision(t1, t2)
            if k is not None and k >= h:
                h = k + 1
    return h


def _collision(t1: Target, t2: Target) -> int | None:
    if t1.block != t2.block:
        return None
    if isinstance(t1, Fixed) and isinstance(t2, Fixed):
        return None
    if isinstance(t1, Fixed):
        t1, t2 = t2, t1
    if isinstance(t2, Fixed):
        i = t2.point.index
        if i == INF or (i - t1.b) % t1.a:
            return None
        return (i - t1.b) // t1.a
    if t1.a == t2.a:
        return None
    num, den = t2.b - t1.b, t1.a - t2.a
    if num % den:
        return None
    return num // den


def duplicate_targets(targets: Iterable[Target]) -> list[Target]:
    seen, dup = set(), []
    for t in targets:
        if t in seen:
            dup.append(t)
        seen.add(t)
    return dup


def instantiate(space: SpaceDesc, atoms: Iterable[tuple[Target, Fraction]], k: int) -> Meas:
    return Meas(space, [(t.at(k), w) for t, w in atoms])


def symbolic_limit(space: SpaceDesc, atoms: Iterable[tuple[Target, Fraction]]) -> Meas:
    return Meas(space, [(t.limit, w) for t, w in atoms])


# -- measure paths ----------------------------------------------------------


@dataclass(frozen=True)
class MeasPath:
    """``mu_n = sum_i w_i * delta_{target_i(n)}`` for ``n >= n0``."""

    space: SpaceDesc
    atoms: tuple[tuple[Target, Fraction], ...]
    n0: int
    limit: Meas

    def at(self, n: int) -> Meas:
        if n < self.n0:
            raise CalculusError(f"path is only defined from n = {self.n0}")
        return instantiate(self.space, self.atoms, n)

    def variation(self) -> Fraction:
        """``||mu_n||``, constant in ``n`` in normal form."""
        return sum((abs(w) for _, w in self.atoms), Fraction(0))

    def validate(self) -> list[str]:
        out = []
        for t, w in self.atoms:
            msg = check_target(self.space, t)
            if msg:
                out.append(msg)
            if w == 0:
                out.append(f"zero weight at {t}")
            if isinstance(t, Indexed) and t.a * self.n0 + t.b < 0:
                out.append(f"negative index for {t} at n = {self.n0}")
        if duplicate_targets(t for t, _ in self.atoms):
            out.append("duplicate targets")
        elif collision_horizon((t for t, _ in self.atoms), self.n0) != self.n0:
            out.append("targets collide beyond n0")
        if not out and path_limit(self) != self.limit:
            out.append("declared limit differs from the symbolic limit")
        return out

    def horizon(self, g: Fn) -> int:
        """First ``n`` from which every moving target has left ``g``'s exceptions."""
        n = self.n0
        for t, _ in self.atoms:
            if isinstance(t, Indexed):
                n = max(n, t.first_k_at_least(g.max_exception(t.block) + 1))
        return n


def path_limit(P: MeasPath) -> Meas:
    return symbolic_limit(P.space, P.atoms)


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: Fraction | None
    rhs: Fraction | None
    verdict: str  # PASS, FAIL or SKIPPED
    note: str = ""


@dataclass(frozen=True)
class SemicontinuityReport:
    checks: tuple[InequalityCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.verdict != "FAIL" for c in self.checks)

    def by_name(self, name: str) -> InequalityCheck:
        return next(c for c in self.checks if c.name == name)


def eventual_abs_value(P: MeasPath, g: Fn) -> Fraction:
    """``lim_n |mu_n|(g)``, read off at the horizon and cross-checked one step later."""
    n = P.horizon(g)
    a, b = P.at(n).abs()(g), P.at(n + 1).abs()(g)
    if a != b:
        raise CalculusError("|mu_n|(g) is not eventually constant; path not in normal form")
    return a


def check_variation_semicontinuity(P: MeasPath, g: Fn) -> SemicontinuityReport:
    """Lower semicontinuity of ``mu -> |mu|`` along a path, with both sides exposed.

    (a) ``|mu|(g) <= lim |mu_n|(g)`` for ``g >= 0``;
    (b) ``|mu|(g) >= |mu|(K) + lim |mu_n|(g) - 1`` for ``0 <= g <= 1`` and
        ``||mu_n|| <= 1``;
    (c) when ``||mu_n|| = ||mu|| = 1``: ``lim |mu_n|(g) = |mu|(g)``.
    """
    problems = P.validate()
    if problems:
        raise CalculusError("invalid path: " + "; ".join(problems))
    mu = path_limit(P)
    abs_mu = mu.abs()
    lhs = abs_mu(g)
    lim = eventual_abs_value(P, g)
    var = P.variation()
    gmin = g.minimum()
    gmax = max(g.values())
    checks = []
    if gmin >= 0:
        checks.append(InequalityCheck("lsc", lhs, lim, "PASS" if lhs <= lim else "FAIL"))
    else:
        checks.append(InequalityCheck("lsc", lhs, lim, "SKIPPED", "precondition failed: g is not >= 0"))
    rhs_b = mu.norm() + lim - 1
    if var > 1:
        checks.append(InequalityCheck("upper", lhs, rhs_b, "SKIPPED",
                                      f"precondition failed: ||mu_n|| = {var} > 1"))
    elif gmin < 0 or gmax > 1:
        checks.append(InequalityCheck("upper", lhs, rhs_b, "SKIPPED",
                                      "precondition failed: g not within [0, 1]"))
    else:
        checks.append(InequalityCheck("upper", lhs, rhs_b, "PASS" if lhs >= rhs_b else "FAIL"))
    if var == 1 and mu.norm() == 1:
        checks.append(InequalityCheck("continuity", lhs, lim, "PASS" if lhs == lim else "FAIL"))
    else:
        checks.append(InequalityCheck("continuity", lhs, lim, "SKIPPED",
                                      "norms are not both one"))
    return SemicontinuityReport(tuple(checks))
