"""Named example kernels and seeded random generators for property tests."""
from __future__ import annotations

import random
from fractions import Fraction
from importlib import resources

from .calculus import Fixed, Fn, Indexed, Meas, MeasPath, Target, collision_horizon, instantiate, symbolic_limit
from .kernels import Kernel, ResidueClass, Template, checked, identity_kernel
from .spaces import INF, Block, Point, SpaceDesc

HALF = Fraction(1, 2)


def ex52() -> Kernel:
    """Two convergent sequences ``X, Y`` seen from one sequence ``Z``.

    ``Z_0`` sees ``Y_inf``; odd ``Z_{2k+1}`` average ``X_k`` and ``Y_inf``;
    even ``Z_{2k}`` (``k >= 1``) average ``X_inf`` and ``Y_{k-1}``; the
    limit averages both limits.
    """
    K = SpaceDesc.of("X", "Y")
    L = SpaceDesc.of("Z")
    xinf, yinf = Point("X", INF), Point("Y", INF)
    rows = {
        Point("Z", 0): Meas(K, {yinf: 1}),
        Point("Z", INF): Meas(K, {xinf: HALF, yinf: HALF}),
    }
    temps = {"Z": [
        Template(ResidueClass(2, 1, 0), [(Indexed("X", 1, 0), HALF), (Fixed(yinf), HALF)]),
        Template(ResidueClass(2, 0, 1), [(Fixed(xinf), HALF), (Indexed("Y", 1, -1), HALF)]),
    ]}
    return checked(Kernel(K, L, rows, temps))


def ex52_text() -> str:
    return resources.files("ckembed").joinpath("data/ex52.ck").read_text(encoding="utf-8")


def split_mix(s) -> Kernel:
    """A two-block relative of :func:`ex52` with mixing weight ``s``.

    ``Z_k`` sees ``(1-s) X_k + s Y_inf`` and ``W_k`` sees
    ``(1-s) Y_k + s X_inf``.  The embedding constant is at least
    ``1 - 2s``, so small ``s`` gives constants above one half.
    """
    s = Fraction(s)
    if not 0 < s < 1:
        raise ValueError("mixing weight must lie in (0, 1)")
    K = SpaceDesc.of("X", "Y")
    L = SpaceDesc.of("Z", "W")
    xinf, yinf = Point("X", INF), Point("Y", INF)
    rows = {
        Point("Z", INF): Meas(K, {xinf: 1 - s, yinf: s}),
        Point("W", INF): Meas(K, {yinf: 1 - s, xinf: s}),
    }
    temps = {
        "Z": [Template(ResidueClass(1, 0, 0), [(Indexed("X", 1, 0), 1 - s), (Fixed(yinf), s)])],
        "W": [Template(ResidueClass(1, 0, 0), [(Indexed("Y", 1, 0), 1 - s), (Fixed(xinf), s)])],
    }
    return checked(Kernel(K, L, rows, temps))


def identity(K: SpaceDesc | None = None) -> Kernel:
    return checked(identity_kernel(K or SpaceDesc.of("A")))


def cancel() -> Kernel:
    """``B_k -> delta_{A_k} - delta_{A_{k+1}}``, ``B_inf -> 0``."""
    K, L = SpaceDesc.of("A"), SpaceDesc.of("B")
    temps = {"B": [Template(ResidueClass(1, 0, 0), [(Indexed("A", 1, 0), Fraction(1)),
                                                     (Indexed("A", 1, 1), Fraction(-1))])]}
    return checked(Kernel(K, L, {Point("B", INF): Meas(K)}, temps))


def signed2() -> Kernel:
    """Two points ``a, b`` read through ``(a - b)/2`` and ``(a + b)/2``."""
    K = SpaceDesc((Block("P", "fin", 2),))
    L = SpaceDesc((Block("Q", "fin", 2),))
    a, b = Point("P", 0), Point("P", 1)
    rows = {Point("Q", 0): Meas(K, {a: HALF, b: -HALF}), Point("Q", 1): Meas(K, {a: HALF, b: HALF})}
    return checked(Kernel(K, L, rows))


def zero(K: SpaceDesc | None = None, L: SpaceDesc | None = None) -> Kernel:
    K = K or SpaceDesc.of("A")
    L = L or SpaceDesc.of("B")
    rows = {}
    temps = {}
    for b in L.blocks:
        if b.is_seq:
            rows[Point(b.id, INF)] = Meas(K)
            temps[b.id] = [Template(ResidueClass(1, 0, 0), [])]
        else:
            rows.update({Point(b.id, i): Meas(K) for i in range(b.size)})
    return checked(Kernel(K, L, rows, temps))


NAMED = {
    "ex52": ex52,
    "identity": identity,
    "cancel": cancel,
    "signed2": signed2,
    "zero": zero,
}


# -- random generators ---------------------------------------------------------


def random_space(rng: random.Random, prefix: str, max_blocks: int = 3, fin_ok: bool = True) -> SpaceDesc:
    blocks = []
    for i in range(rng.randint(1, max_blocks)):
        if i == 0 or not fin_ok or rng.random() < 0.6:
            blocks.append(Block(f"{prefix}{i}", "seq"))
        else:
            blocks.append(Block(f"{prefix}{i}", "fin", rng.randint(1, 3)))
    return SpaceDesc(tuple(blocks))


def random_point(rng: random.Random, K: SpaceDesc, top: int = 4) -> Point:
    b = rng.choice(K.blocks)
    if b.is_seq:
        return Point(b.id, rng.choice([INF] + list(range(top))))
    return Point(b.id, rng.randrange(b.size))


def random_weights(rng: random.Random, n: int, total: Fraction) -> list[Fraction]:
    """``n`` positive rationals summing to ``total``."""
    parts = [rng.randint(1, 4) for _ in range(n)]
    s = sum(parts)
    return [total * Fraction(p, s) for p in parts]


def _pieces(rng: random.Random, K: SpaceDesc, p: Point, w: Fraction, signed_split: bool) -> list[tuple[Target, Fraction]]:
    """Targets whose symbolic limit is ``w * delta_p``."""
    if p.index != INF:
        return [(Fixed(p), w)]
    moving = [Indexed(p.block, a, b) for a in (1, 2) for b in (-1, 0, 1, 2)]
    choice = rng.random()
    if choice < 0.3:
        return [(Fixed(p), w)]
    if choice < 0.6:
        return [(rng.choice(moving), w)]
    t1, t2 = rng.sample(moving, 2)
    if signed_split and rng.random() < 0.5:
        w1 = Fraction(rng.randint(-3, 3), 2) or Fraction(1)
        if w1 == w:
            return [(t1, w)]
        return [(t1, w1), (t2, w - w1)]
    w1, w2 = random_weights(rng, 2, w)
    return [(Fixed(p), w1), (t2, w2)] if rng.random() < 0.5 else [(t1, w1), (t2, w2)]


def _limit_measure(rng: random.Random, K: SpaceDesc, total: Fraction, signs: bool) -> Meas:
    pts = {random_point(rng, K) for _ in range(rng.randint(1, 3))}
    pts = sorted(pts)
    ws = random_weights(rng, len(pts), total)
    if signs:
        ws = [w * rng.choice((1, -1)) for w in ws]
    return Meas(K, dict(zip(pts, ws)))


def _template_for(rng: random.Random, K: SpaceDesc, cls: ResidueClass, lam: Meas, signed_split: bool) -> Template:
    atoms: list[tuple[Target, Fraction]] = []
    for p, w in lam.atoms.items():
        atoms += _pieces(rng, K, p, w, signed_split)
    merged: dict[Target, Fraction] = {}
    for t, w in atoms:
        merged[t] = merged.get(t, Fraction(0)) + w
    atoms = [(t, w) for t, w in merged.items() if w != 0]
    k0 = cls.k0
    for t, _ in atoms:
        if isinstance(t, Indexed):
            k0 = max(k0, t.least_valid())
    k0 = collision_horizon([t for t, _ in atoms], k0)
    return Template(ResidueClass(cls.d, cls.r, k0), atoms)


def random_kernel(rng: random.Random, kind: str = "positive", max_blocks: int = 3,
                  max_classes: int = 3, K: SpaceDesc | None = None) -> Kernel:
    """A valid random kernel.

    ``positive``: positive and unital.
    ``signed``: signed, continuous and strictly positive envelope.
    ``general``: signed, cancellations in the limit allowed.
    """
    if kind not in ("positive", "signed", "general"):
        raise ValueError(f"unknown kernel kind {kind!r}")
    K = K or random_space(rng, "X", max_blocks)
    L = random_space(rng, "Y", max_blocks)

    def row_measure() -> Meas:
        if kind == "positive":
            return _limit_measure(rng, K, Fraction(1), False)
        return _limit_measure(rng, K, Fraction(rng.randint(1, 4), 2), True)

    rows: dict[Point, Meas] = {}
    temps: dict[str, list[Template]] = {}
    for b in L.blocks:
        if not b.is_seq:
            for i in range(b.size):
                rows[Point(b.id, i)] = row_measure()
            continue
        if kind == "general" and rng.random() < 0.3:
            lam = Meas(K)
        else:
            lam = row_measure()
        rows[Point(b.id, INF)] = lam
        d = rng.randint(1, max_classes)
        ts = [_template_for(rng, K, ResidueClass(d, r, rng.randint(0, 2)), lam, kind == "general")
              for r in range(d)]
        temps[b.id] = ts
        for t in ts:
            for k in range(t.cls.k0):
                k_ok = all(not isinstance(tg, Indexed) or tg.a * k + tg.b >= 0 for tg, _ in t.atoms)
                mu = instantiate(K, t.atoms, k) if k_ok else row_measure()
                if kind == "signed" and not mu:
                    mu = row_measure()
                rows[Point(b.id, t.cls.index(k))] = mu
    return checked(Kernel(K, L, rows, temps))


def random_embedding(rng: random.Random, s=None, max_blocks: int = 2, max_classes: int = 2) -> Kernel:
    """A positive unital embedding with constant at least ``1 - 2s``.

    Block ``Ci`` of ``L`` copies block ``Xi`` of ``K`` with each point
    ``x`` seen as ``(1-s) delta_x + s delta_p`` for one fixed ``p``; the
    remaining blocks carry a random positive unital kernel.
    """
    s = Fraction(s) if s is not None else rng.choice([Fraction(1, 8), Fraction(1, 5), Fraction(1, 3), Fraction(2, 5)])
    K = random_space(rng, "X", max_blocks)
    R = random_kernel(rng, "positive", max_blocks, max_classes, K=K)
    p = random_point(rng, K)
    rows = {Point(y.block, y.index): mu for y, mu in R.rows.items()}
    temps: dict[str, list[Template]] = {bid: list(ts) for bid, ts in R.templates.items()}
    blocks = []
    for b in K.blocks:
        cid = "C" + b.id[1:]
        blocks.append(Block(cid, b.kind, b.size))
        if not b.is_seq:
            for i in range(b.size):
                rows[Point(cid, i)] = Meas(K, [(Point(b.id, i), 1 - s), (p, s)])
            continue
        rows[Point(cid, INF)] = Meas(K, [(Point(b.id, INF), 1 - s), (p, s)])
        atoms = [(Indexed(b.id, 1, 0), 1 - s), (Fixed(p), s)]
        k0 = collision_horizon([t for t, _ in atoms], 0)
        for k in range(k0):
            rows[Point(cid, k)] = instantiate(K, atoms, k)
        temps[cid] = [Template(ResidueClass(1, 0, k0), atoms)]
    L = SpaceDesc(tuple(blocks) + R.codomain.blocks)
    return checked(Kernel(K, L, rows, temps))


def random_path(rng: random.Random, unit: bool = False) -> MeasPath:
    """A measure path with ``||mu_n|| <= 1`` (``= 1`` with ``unit``)."""
    K = random_space(rng, "X", 2)
    atoms: dict[Target, Fraction] = {}
    for _ in range(rng.randint(1, 4)):
        p = random_point(rng, K)
        if p.index == INF and rng.random() < 0.7:
            t: Target = Indexed(p.block, rng.randint(1, 2), rng.randint(-1, 2))
        else:
            t = Fixed(p)
        atoms[t] = Fraction(0)
    total = Fraction(1) if unit else Fraction(rng.randint(1, 4), 4)
    ws = random_weights(rng, len(atoms), total)
    items = [(t, w * rng.choice((1, -1))) for t, w in zip(atoms, ws)]
    n0 = max([0] + [t.least_valid() for t, _ in items if isinstance(t, Indexed)])
    n0 = collision_horizon([t for t, _ in items], n0)
    return MeasPath(K, tuple(items), n0, symbolic_limit(K, items))


def random_fn(rng: random.Random, K: SpaceDesc, lo: int = 0, hi: int = 1, den: int = 4) -> Fn:
    def val() -> Fraction:
        return Fraction(rng.randint(lo * den, hi * den), den)

    data = {}
    for b in K.blocks:
        if b.is_seq:
            data[b.id] = (val(), {i: val() for i in range(rng.randint(0, 4))})
        else:
            data[b.id] = [val() for _ in range(b.size)]
    return Fn(K, data)


def random_rows(rng: random.Random, n: int, m: int, den: int = 4) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    """``m`` homogeneous minimax rows in ``n`` variables."""
    rows = []
    for _ in range(m):
        coeffs = tuple(Fraction(rng.randint(-den, den), den) for _ in range(n))
        rows.append((coeffs, Fraction(0)))
    return rows
