"""Countable compacta of Cantor-Bendixson rank at most one.

A space is a finite list of blocks.  A ``seq`` block is a convergent
sequence ``b_0, b_1, ...`` together with its limit ``b_inf``; a ``fin``
block is a finite discrete set ``b_0 .. b_{k-1}``.

Subsets are stored block-wise as :class:`Trace` objects.  A trace is an
eventually periodic set of indices (a finite part below ``start`` and a set
of residues modulo ``period`` from ``start`` on) plus a flag for the limit
point.  Finite and cofinite traces are the special cases with no residues
and with all residues; progressions such as the even indices are needed by
preimages of template maps.  All objects are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

INF = math.inf  # index of the limit point of a seq block


class SpaceError(ValueError):
    pass


class Point(NamedTuple):
    block: str
    index: int | float

    def __str__(self) -> str:
        return f"{self.block}:{'inf' if self.index == INF else self.index}"

    @property
    def is_limit(self) -> bool:
        return self.index == INF


@dataclass(frozen=True)
class Block:
    id: str
    kind: str  # "seq" or "fin"
    size: int | None = None

    @property
    def is_seq(self) -> bool:
        return self.kind == "seq"


@dataclass(frozen=True)
class SpaceDesc:
    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @classmethod
    def of(cls, *specs: str | tuple[str, int]) -> "SpaceDesc":
        """``SpaceDesc.of("X", "Y", ("W", 3))``: names are seq blocks, pairs finite."""
        blocks = []
        for s in specs:
            if isinstance(s, tuple):
                blocks.append(Block(s[0], "fin", s[1]))
            else:
                blocks.append(Block(s, "seq"))
        return cls(tuple(blocks))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.blocks)

    def block(self, bid: str) -> Block:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise SpaceError(f"unknown block id {bid!r}")

    def has_block(self, bid: str) -> bool:
        return any(b.id == bid for b in self.blocks)

    def seq_blocks(self) -> list[Block]:
        return [b for b in self.blocks if b.is_seq]

    def contains(self, p: Point) -> bool:
        if not self.has_block(p.block):
            return False
        b = self.block(p.block)
        if p.index == INF:
            return b.is_seq
        if not isinstance(p.index, int) or p.index < 0:
            return False
        return b.is_seq or p.index < b.size

    def check_point(self, p: Point) -> None:
        if not self.contains(p):
            raise SpaceError(f"point {p} is not in the space")

    def limit(self, bid: str) -> Point:
        return Point(bid, INF)

    def is_finite(self) -> bool:
        return not self.seq_blocks()

    def finite_points(self) -> list[Point]:
        """All points of a space without seq blocks."""
        if not self.is_finite():
            raise SpaceError("space is infinite")
        return [Point(b.id, i) for b in self.blocks for i in range(b.size)]

    def whole(self) -> "SubsetDesc":
        return SubsetDesc.from_traces(self, {b.id: Trace.full(b) for b in self.blocks})

    def empty(self) -> "SubsetDesc":
        return SubsetDesc.from_traces(self, {})

    def __str__(self) -> str:
        parts = []
        for b in self.blocks:
            parts.append(f"block {b.id} seq;" if b.is_seq else f"block {b.id} fin {b.size};")
        return "{ " + " ".join(parts) + " }"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_space(s: SpaceDesc) -> ValidationReport:
    out = []
    if not s.blocks:
        out.append("space has no blocks")
    seen = set()
    for b in s.blocks:
        if not b.id:
            out.append("empty block id")
        if b.id in seen:
            out.append(f"duplicate id {b.id!r}")
        seen.add(b.id)
        if b.kind == "fin":
            if not isinstance(b.size, int) or b.size <= 0:
                out.append(f"empty block {b.id!r}")
        elif b.kind != "seq":
            out.append(f"unknown block kind {b.kind!r} for {b.id!r}")
    return ValidationReport(tuple(out))


# -- traces -----------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    """Eventually periodic index set plus limit flag, in canonical form.

    ``n`` belongs iff ``n in finite`` (for ``n < start``) or
    ``n % period in residues`` (for ``n >= start``).
    """

    finite: frozenset[int] = frozenset()
    start: int = 0
    period: int = 1
    residues: frozenset[int] = frozenset()
    inf: bool = False

    @classmethod
    def make(cls, finite: Iterable[int] = (), start: int = 0, period: int = 1,
             residues: Iterable[int] = (), inf: bool = False) -> "Trace":
        period = max(1, period)
        res = frozenset(r % period for r in residues)
        fin = set(i for i in finite if i >= 0)
        if start < 0:
            raise SpaceError("negative trace start")
        # points of `finite` at or beyond start are added on top of the periodic part
        extra = {i for i in fin if i >= start and i % period not in res}
        fin = {i for i in fin if i < start}
        if extra:
            new_start = max(extra) + 1
            fin |= extra
            fin |= {n for n in range(start, new_start) if n % period in res}
            start = new_start
        # minimal period
        for d in sorted(_divisors(period)):
            if all(((r + d) % period) in res for r in res):
                res = frozenset(r % d for r in res)
                period = d
                break
        if not res:
            period = 1
        # minimal start
        while start > 0 and ((start - 1) in fin) == (((start - 1) % period) in res):
            fin.discard(start - 1)
            start -= 1
        return cls(frozenset(fin), start, period, res, bool(inf))

    @classmethod
    def points(cls, indices: Iterable[int | float]) -> "Trace":
        idx = list(indices)
        return cls.make(finite=[i for i in idx if i != INF], inf=INF in idx)

    @classmethod
    def tail(cls, n: int, inf: bool = True) -> "Trace":
        return cls.make(start=n, period=1, residues=[0], inf=inf)

    @classmethod
    def progression(cls, a: int, b: int, k0: int, inf: bool = False) -> "Trace":
        """``{a*k + b : k >= k0}``."""
        first = a * k0 + b
        return cls.make(start=max(first, 0), period=a, residues=[b % a], inf=inf,
                        finite=())

    @classmethod
    def full(cls, block: Block) -> "Trace":
        if block.is_seq:
            return cls.tail(0, inf=True)
        return cls.points(range(block.size))

    def __contains__(self, n: int | float) -> bool:
        if n == INF:
            return self.inf
        if n < 0:
            return False
        if n < self.start:
            return n in self.finite
        return (n % self.period) in self.residues

    @property
    def is_infinite(self) -> bool:
        return bool(self.residues)

    @property
    def is_empty(self) -> bool:
        return not self.finite and not self.residues and not self.inf

    @property
    def is_cofinite(self) -> bool:
        return len(self.residues) == self.period

    def finite_indices(self) -> list[int]:
        if self.is_infinite:
            raise SpaceError("trace is infinite")
        return sorted(self.finite)

    def iter_indices(self) -> Iterator[int]:
        """Ascending finite indices (endless for infinite traces)."""
        yield from sorted(self.finite)
        if self.residues:
            n = self.start
            while True:
                if n % self.period in self.residues:
                    yield n
                n += 1

    def combine(self, other: "Trace", op) -> "Trace":
        start = max(self.start, other.start)
        period = math.lcm(self.period, other.period)
        fin = [n for n in range(start) if op(n in self, n in other)]
        res = [n % period for n in range(start, start + period) if op(n in self, n in other)]
        return Trace.make(fin, start, period, res, op(self.inf, other.inf))

    def __or__(self, other: "Trace") -> "Trace":
        return self.combine(other, lambda a, b: a or b)

    def __and__(self, other: "Trace") -> "Trace":
        return self.combine(other, lambda a, b: a and b)

    def __sub__(self, other: "Trace") -> "Trace":
        return self.combine(other, lambda a, b: a and not b)

    def shifted_members(self, a: int, b: int, k_from: int) -> tuple[int, int, frozenset[int], frozenset[int]]:
        """Membership of ``a*k + b`` for ``k >= k_from`` as an eventually periodic set.

        Returns ``(k1, period, finite_ks, residues)``: for ``k_from <= k < k1``
        membership is listed in ``finite_ks``, from ``k1`` on it holds iff
        ``k % period in residues``.
        """
        k1 = max(k_from, -((b - self.start) // a))  # least k with a*k+b >= start
        fin = frozenset(k for k in range(k_from, k1) if (a * k + b) in self)
        res = frozenset(k % self.period for k in range(k1, k1 + self.period)
                        if (a * k + b) in self)
        return k1, self.period, fin, res

    def describe(self) -> str:
        parts = [str(i) for i in sorted(self.finite)]
        if self.residues:
            if self.period == 1:
                parts.append(f"{self.start}..")
            else:
                rs = " ".join(str(r) for r in sorted(self.residues))
                parts.append(f"mod {self.period} = {rs} from {self.start}")
        if self.inf:
            parts.append("inf")
        return ", ".join(parts)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@dataclass(frozen=True)
class SubsetDesc:
    space: SpaceDesc
    traces: tuple[tuple[str, Trace], ...] = field(default=())

    @classmethod
    def from_traces(cls, space: SpaceDesc, traces: dict[str, Trace]) -> "SubsetDesc":
        items = []
        for b in space.blocks:
            t = traces.get(b.id)
            if t is None or t.is_empty:
                continue
            if not b.is_seq:
                if t.is_infinite or t.inf or any(i >= b.size for i in t.finite):
                    raise SpaceError(f"trace {t.describe()} does not fit finite block {b.id}")
            items.append((b.id, t))
        unknown = set(traces) - set(space.ids)
        if unknown:
            raise SpaceError(f"unknown block id {sorted(unknown)[0]!r}")
        return cls(space, tuple(items))

    @classmethod
    def from_points(cls, space: SpaceDesc, pts: Iterable[Point]) -> "SubsetDesc":
        by_block: dict[str, list] = {}
        for p in pts:
            space.check_point(p)
            by_block.setdefault(p.block, []).append(p.index)
        return cls.from_traces(space, {b: Trace.points(ix) for b, ix in by_block.items()})

    def trace(self, bid: str) -> Trace:
        self.space.block(bid)
        for b, t in self.traces:
            if b == bid:
                return t
        return Trace()

    def as_dict(self) -> dict[str, Trace]:
        return dict(self.traces)

    def __contains__(self, p: Point) -> bool:
        return self.space.contains(p) and p.index in self.trace(p.block)

    def _binary(self, other: "SubsetDesc", method: str) -> "SubsetDesc":
        if other.space != self.space:
            raise SpaceError("subsets live in different spaces")
        out = {}
        for b in self.space.ids:
            out[b] = getattr(self.trace(b), method)(other.trace(b))
        return SubsetDesc.from_traces(self.space, out)

    def __or__(self, other: "SubsetDesc") -> "SubsetDesc":
        return self._binary(other, "__or__")

    def __and__(self, other: "SubsetDesc") -> "SubsetDesc":
        return self._binary(other, "__and__")

    def __sub__(self, other: "SubsetDesc") -> "SubsetDesc":
        return self._binary(other, "__sub__")

    def complement(self) -> "SubsetDesc":
        return self.space.whole() - self

    def is_empty(self) -> bool:
        return not self.traces

    def issubset(self, other: "SubsetDesc") -> bool:
        return (self - other).is_empty()

    def is_finite(self) -> bool:
        return all(not t.is_infinite for _, t in self.traces)

    def points(self) -> list[Point]:
        """Points of a finite subset, in block order."""
        out = []
        for b, t in self.traces:
            out.extend(Point(b, i) for i in t.finite_indices())
            if t.inf:
                out.append(Point(b, INF))
        return out

    def is_closed(self) -> bool:
        return all(t.inf or not t.is_infinite for _, t in self.traces)

    def is_open(self) -> bool:
        return all(not t.inf or t.is_cofinite for _, t in self.traces)

    def is_clopen(self) -> bool:
        return self.is_closed() and self.is_open()

    def closure(self) -> "SubsetDesc":
        out = {}
        for b, t in self.traces:
            out[b] = Trace(t.finite, t.start, t.period, t.residues, t.inf or t.is_infinite)
        return SubsetDesc.from_traces(self.space, out)

    def interior(self) -> "SubsetDesc":
        out = {}
        for b, t in self.traces:
            out[b] = Trace(t.finite, t.start, t.period, t.residues, t.inf and t.is_cofinite)
        return SubsetDesc.from_traces(self.space, out)

    def first_isolated(self) -> Point | None:
        for b, t in self.traces:
            idx = next(t.iter_indices(), None)
            if idx is not None:
                return Point(b, idx)
        return None

    def __str__(self) -> str:
        parts = [f"{b}: {t.describe()}" for b, t in self.traces]
        return "{ " + "; ".join(parts) + " }" if parts else "{ }"


def closure(s: SpaceDesc, A: SubsetDesc) -> SubsetDesc:
    if A.space != s:
        raise SpaceError("subset does not belong to the space")
    return A.closure()


def is_clopen(s: SpaceDesc, A: SubsetDesc) -> bool:
    if A.space != s:
        raise SpaceError("subset does not belong to the space")
    return A.is_clopen()


# -- constructions of spaces ------------------------------------------------


def _fresh_id(s: SpaceDesc, base: str) -> str:
    if not s.has_block(base):
        return base
    i = 1
    while s.has_block(f"{base}{i}"):
        i += 1
    return f"{base}{i}"


def adjoin_point(s: SpaceDesc) -> tuple[SpaceDesc, Point]:
    """``K + 1``: the space with one isolated point added."""
    bid = _fresh_id(s, "z")
    return SpaceDesc(s.blocks + (Block(bid, "fin", 1),)), Point(bid, 0)


def doubled_id(bid: str, bit: int) -> str:
    return f"{bid}@{bit}"


def pair_point(p: Point, bit: int) -> Point:
    """Canonical name of ``(p, bit)`` in the product with the two-point space."""
    return Point(doubled_id(p.block, bit), p.index)


def product_with_two(s: SpaceDesc) -> SpaceDesc:
    blocks = []
    for bit in (0, 1):
        for b in s.blocks:
            blocks.append(Block(doubled_id(b.id, bit), b.kind, b.size))
    return SpaceDesc(tuple(blocks))


@dataclass(frozen=True)
class PointEmbedding:
    """Order-preserving embedding of a closed subspace back into its parent."""

    sub: SpaceDesc
    parent: SpaceDesc
    image: SubsetDesc

    def _enum(self, bid: str) -> tuple[list[int], Trace, list[int]]:
        t = self.image.trace(bid)
        offs = [o for o in range(t.period) if (t.start + o) % t.period in t.residues]
        return sorted(t.finite), t, offs

    def forward(self, p: Point) -> Point:
        self.sub.check_point(p)
        if p.index == INF:
            return p
        fin, t, offs = self._enum(p.block)
        j = p.index
        if j < len(fin):
            return Point(p.block, fin[j])
        if not self.sub.block(p.block).is_seq:
            # finite block built from a finite trace that may contain the limit
            return Point(p.block, INF)
        q, rem = divmod(j - len(fin), len(offs))
        return Point(p.block, t.start + q * t.period + offs[rem])

    def backward(self, p: Point) -> Point:
        if p not in self.image:
            raise SpaceError(f"point {p} is outside the subspace")
        fin, t, offs = self._enum(p.block)
        if p.index == INF:
            if self.sub.block(p.block).is_seq:
                return p
            return Point(p.block, len(fin))
        n = p.index
        if n < t.start:
            return Point(p.block, fin.index(n))
        q, rest = divmod(n - t.start, t.period)
        return Point(p.block, len(fin) + q * len(offs) + offs.index(rest))


def closed_subspace(s: SpaceDesc, F: SubsetDesc) -> tuple[SpaceDesc, PointEmbedding]:
    """Re-present a closed subset as a space of the same class."""
    if F.space != s:
        raise SpaceError("subset does not belong to the space")
    if not F.is_closed():
        raise SpaceError("subset is not closed")
    if F.is_empty():
        raise SpaceError("subset is empty")
    blocks = []
    for bid, t in F.traces:
        if t.is_infinite:
            blocks.append(Block(bid, "seq"))
        else:
            blocks.append(Block(bid, "fin", len(t.finite) + (1 if t.inf else 0)))
    sub = SpaceDesc(tuple(blocks))
    return sub, PointEmbedding(sub, s, F)
