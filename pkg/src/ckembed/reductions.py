"""Reductions of a general embedding to the positive unital case.

* :func:`envelope` computes ``y -> ||T*delta_y||`` exactly.
* :func:`normalize_positive` turns a positive embedding into a positive
  unital one on a closed subspace of ``L``.
* :func:`positive_reduction` splits every row into its positive and
  negative parts, giving a positive embedding into ``C(L x 2)``.  It needs
  a continuous, strictly positive envelope.
* :func:`adjoin_and_lift` adds a fresh isolated point ``z`` to ``K`` and the
  atom ``delta_z`` to every row, which lifts the envelope by one.
* :func:`pipeline` chains all of the above with the constructions module
  and records every checked claim in a :class:`Report`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .calculus import Fixed, Fn, Meas, Q, pullback
from .constructions import (
    ConstructionError,
    check_onto_at_m,
    filtration,
    pi_base,
    top_level_witness,
)
from .kernels import (
    Kernel,
    KernelError,
    ResidueClass,
    Template,
    apply,
    checked,
    is_positive,
    is_unital,
    operator_norm,
    restrict_codomain,
    scale_by_function,
    validate_kernel,
)
from .fileformat import problem_for, serialize
from .norms import embedding_constant
from .report import ClauseFailure, Report
from .spaces import (
    INF,
    Point,
    PointEmbedding,
    SpaceDesc,
    SubsetDesc,
    Trace,
    adjoin_point,
    closed_subspace,
    doubled_id,
    pair_point,
    product_with_two,
)


class HypothesisFailure(ConstructionError):
    pass


# -- envelopes -----------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    """``y -> ||nu_y||``; along a seq block the value is constant on each
    residue class from its start on, and the limit value is stored apart."""

    space: SpaceDesc
    explicit: dict[Point, Fraction]
    tails: dict[str, tuple[tuple[ResidueClass, Fraction], ...]] = field(default_factory=dict)

    def __call__(self, y: Point) -> Fraction:
        self.space.check_point(y)
        v = self.explicit.get(y)
        if v is not None:
            return v
        for cls, val in self.tails.get(y.block, ()):
            if y.index != INF and cls.matches(y.index):
                return val
        raise KernelError(f"envelope has no value at {y}")

    def limit(self, bid: str) -> Fraction:
        return self.explicit[Point(bid, INF)]

    def lsc_violations(self) -> list[str]:
        return [f"block {bid} class {cls}: limit value {self.limit(bid)} exceeds tail {v}"
                for bid, ts in self.tails.items() for cls, v in ts if self.limit(bid) > v]

    @property
    def lsc(self) -> bool:
        return not self.lsc_violations()

    @property
    def continuous(self) -> bool:
        return all(v == self.limit(bid) for bid, ts in self.tails.items() for _, v in ts)

    @property
    def minimum(self) -> Fraction:
        vals = list(self.explicit.values()) + [v for ts in self.tails.values() for _, v in ts]
        return min(vals)

    @property
    def strictly_positive(self) -> bool:
        return self.minimum > 0

    def plus(self, c) -> "Envelope":
        c = Q(c)
        return Envelope(self.space, {y: v + c for y, v in self.explicit.items()},
                        {b: tuple((cls, v + c) for cls, v in ts) for b, ts in self.tails.items()})

    def horizon(self, bid: str) -> int:
        h = max((p.index + 1 for p in self.explicit if p.block == bid and p.index != INF), default=0)
        return max([h] + [cls.start for cls, _ in self.tails.get(bid, ())])

    def as_fn(self) -> Fn:
        if not self.continuous:
            raise KernelError("envelope is not continuous")
        data = {}
        for b in self.space.blocks:
            if b.is_seq:
                data[b.id] = (self.limit(b.id), {n: self(Point(b.id, n)) for n in range(self.horizon(b.id))})
            else:
                data[b.id] = [self.explicit[Point(b.id, i)] for i in range(b.size)]
        return Fn(self.space, data)

    def describe(self) -> str:
        parts = []
        for b in self.space.blocks:
            if b.is_seq:
                tails = ", ".join(f"{cls}: {v}" for cls, v in self.tails.get(b.id, ()))
                parts.append(f"{b.id}: limit {self.limit(b.id)}, tails {{{tails}}}")
            else:
                vals = ", ".join(str(self.explicit[Point(b.id, i)]) for i in range(b.size))
                parts.append(f"{b.id}: [{vals}]")
        return "; ".join(parts)


def pointwise_equal(e1: Envelope, e2: Envelope) -> bool:
    """Exact equality at every point.

    Beyond both horizons each envelope is periodic with period dividing the
    lcm of all class moduli, so one period past the horizon decides it.
    """
    if e1.space != e2.space:
        return False
    for b in e1.space.blocks:
        if not b.is_seq:
            if any(e1(Point(b.id, i)) != e2(Point(b.id, i)) for i in range(b.size)):
                return False
            continue
        if e1.limit(b.id) != e2.limit(b.id):
            return False
        D = lcm(*(cls.d for cls, _ in e1.tails.get(b.id, ()) + e2.tails.get(b.id, ())))
        H = max(e1.horizon(b.id), e2.horizon(b.id))
        if any(e1(Point(b.id, n)) != e2(Point(b.id, n)) for n in range(H + D)):
            return False
    return True


def envelope(T: Kernel) -> Envelope:
    T = checked(T)
    explicit = {y: mu.norm() for y, mu in T.rows.items()}
    # normal form: template targets are distinct for k >= k0, so no cancellation
    tails = {bid: tuple((t.cls, t.variation()) for t in ts) for bid, ts in T.templates.items()}
    env = Envelope(T.codomain, explicit, tails)
    bad = env.lsc_violations()
    if bad:
        raise ClauseFailure("envelope", "lower semicontinuous", bad[0])
    return env


# -- positive normalization -------------------------------------------------------


@dataclass(frozen=True)
class Normalized:
    kernel: Kernel
    support: SubsetDesc  # L_0 inside L
    embedding: PointEmbedding
    norm: Fraction  # operator norm of the input
    m: Fraction  # working constant of the input scaled to norm one
    m_out: Fraction  # constant of the output at the same window


def normalize_positive(T: Kernel, m=None, window: int = 2) -> Normalized:
    """Positive unital kernel on ``L_0 = {y : (T1)(y) >= m}`` after scaling to norm one.

    ``m`` is the working constant of ``T`` itself; it is computed at the
    window when omitted.
    """
    T = checked(T)
    if not is_positive(T):
        raise ConstructionError("kernel is not positive")
    n = operator_norm(T)
    if n == 0:
        raise ConstructionError("zero kernel")
    T1 = T.scaled(1 / n)
    m1 = embedding_constant(T1, window).value if m is None else Q(m) / n
    if m1 <= 0:
        raise ConstructionError("working constant is zero: the kernel is not an embedding at this window")
    h = apply(T1, Fn.one(T1.domain))
    L0 = h.superlevel(m1)
    if L0.is_empty():
        raise ClauseFailure("positive normalization", "L_0 is nonempty",
                            f"m = {m1} exceeds max T1 = {max(h.values())}")
    if L0 == T1.codomain.whole():
        Tr, emb = T1, closed_subspace(T1.codomain, L0)[1]
    else:
        Tr, emb = restrict_codomain(T1, L0)
    S = checked(scale_by_function(Tr, pullback(h, emb).reciprocal()))
    if not is_unital(S):
        raise ClauseFailure("positive normalization", "S1 = 1")
    if not is_positive(S):
        raise ClauseFailure("positive normalization", "S is positive")
    mS = embedding_constant(S, window).value
    if mS < m1:
        raise ClauseFailure("positive normalization", "inverse norm does not grow",
                            f"constant {mS} < {m1} at window {window}")
    return Normalized(S, L0, emb, n, m1, mS)


# -- positive reduction onto L x 2 ----------------------------------------------------


@dataclass(frozen=True)
class Reduction:
    kernel: Kernel  # positive, on C(K) -> C(L x 2)
    rescaled: Kernel  # T' with envelope identically one
    m: Fraction
    m_out: Fraction


def split_signs(T: Kernel) -> Kernel:
    """Rows ``(y, 0) -> nu_y^+`` and ``(y, 1) -> nu_y^-`` on ``L x 2``."""
    L2 = product_with_two(T.codomain)
    rows = {}
    for y, mu in T.rows.items():
        rows[pair_point(y, 0)] = mu.plus()
        rows[pair_point(y, 1)] = mu.minus()
    temps = {}
    for bid, ts in T.templates.items():
        temps[doubled_id(bid, 0)] = [Template(t.cls, [(tg, w) for tg, w in t.atoms if w > 0]) for t in ts]
        temps[doubled_id(bid, 1)] = [Template(t.cls, [(tg, -w) for tg, w in t.atoms if w < 0]) for t in ts]
    return Kernel(T.domain, L2, rows, temps)


def positive_reduction(T: Kernel, m=None, window: int = 2) -> Reduction:
    """Positive embedding into ``C(L x 2)`` with constant at least ``m/2``.

    ``m`` is the constant of the rescaled kernel ``T' = T / e^T``.
    """
    T = checked(T)
    env = envelope(T)
    if not env.continuous:
        raise HypothesisFailure("envelope is not continuous; no reduction applies")
    if not env.strictly_positive:
        raise HypothesisFailure("envelope vanishes somewhere; adjoin a point with adjoin_and_lift first")
    Tp = checked(scale_by_function(T, env.as_fn().reciprocal()))
    envp = envelope(Tp)
    if not (envp.continuous and envp.as_fn() == Fn.one(T.codomain)):
        raise ClauseFailure("positive reduction", "rescaled kernel has envelope 1")
    S = checked(split_signs(Tp))
    if not is_positive(S):
        raise ClauseFailure("positive reduction", "S is positive")
    m = embedding_constant(Tp, window).value if m is None else Q(m)
    mS = embedding_constant(S, window).value
    if mS < m / 2:
        raise ClauseFailure("positive reduction", "constant of S is at least m/2",
                            f"{mS} < {m / 2} at window {window}")
    return Reduction(S, Tp, m, mS)


# -- K + 1 lift -------------------------------------------------------------------


@dataclass(frozen=True)
class Lift:
    kernel: Kernel  # on C(K + 1) -> C(L)
    point: Point  # the adjoined point z
    m: Fraction | None
    m_out: Fraction | None
    envelope_vanishes: bool  # the m/2 bound is only claimed in this case


def adjoin_and_lift(T: Kernel, m=None, window: int | None = None) -> Lift:
    """``Sf = T(f|K) + f(z) 1_L``, so ``e^S = e^T + 1``.

    When ``e^T`` has a zero, ``S`` keeps at least half the constant of
    ``T``; otherwise ``S`` need not be an embedding at all (a unital ``T``
    sends ``1_K - delta_z`` to zero).
    """
    T = checked(T)
    env = envelope(T)
    K1, z = adjoin_point(T.domain)
    dz = Meas.dirac(K1, z)
    rows = {y: Meas(K1, mu.atoms) + dz for y, mu in T.rows.items()}
    temps = {bid: [Template(t.cls, list(t.atoms) + [(Fixed(z), Fraction(1))]) for t in ts]
             for bid, ts in T.templates.items()}
    S = checked(Kernel(K1, T.codomain, rows, temps))
    if not pointwise_equal(envelope(S), env.plus(1)):
        raise ClauseFailure("K+1 lift", "envelope of S equals envelope of T plus one")
    vanishes = env.minimum == 0
    mS = None
    if window is not None:
        m = embedding_constant(T, window).value if m is None else Q(m)
        mS = embedding_constant(S, window).value
        if vanishes and mS < m / 2:
            raise ClauseFailure("K+1 lift", "constant of S is at least m/2", f"{mS} < {m / 2}")
    return Lift(S, z, None if m is None else Q(m), mS, vanishes)


# -- pipeline ----------------------------------------------------------------------


@dataclass
class PipelineResult:
    report: Report
    kernel: Kernel | None = None  # the positive unital kernel reached, if any
    m: Fraction | None = None
    p: int | None = None
    current: Kernel | None = None  # kernel entering the stage that ran last


def pipeline(T: Kernel, window: int = 2, search_bound: int = 64) -> PipelineResult:
    rep = Report("pipeline")
    out = PipelineResult(rep)
    problems = validate_kernel(T).violations
    rep.add("input", "kernel is valid", not problems, "; ".join(problems))
    if problems:
        return out
    T = checked(T)
    out.current = T
    try:
        _run(T, window, search_bound, out)
    except ClauseFailure as e:
        rep.add(e.stage, e.claim, False, e.detail)
    except HypothesisFailure as e:
        rep.add("positive reduction", "hypothesis holds", False, str(e))
    rep.attach(serialize(problem_for(out.current)))
    return out


def _run(T: Kernel, window: int, search_bound: int, out: PipelineResult) -> None:
    rep = out.report
    env = envelope(T)
    rep.add("envelope", "lower semicontinuous", True, envelope=env.describe())
    rep.add("envelope", "minimum", None, "informational", min=env.minimum)
    if env.minimum == 0:
        lift = adjoin_and_lift(T)
        T = out.current = lift.kernel
        rep.add("K+1 lift", "envelope of S equals envelope of T plus one", True, point=str(lift.point))
        env = envelope(T)
    if not env.continuous:
        rep.add("envelope", "envelope is continuous", False,
                "the positive reduction needs a continuous envelope; stopping", envelope=env.describe())
        return
    rep.add("envelope", "envelope is continuous", True)
    if is_positive(T):
        rep.add("positive reduction", "input already positive", None, "reduction not needed")
    else:
        red = positive_reduction(T, window=window)
        T = out.current = red.kernel
        rep.add("positive reduction", "rescaled kernel has envelope 1", True)
        rep.add("positive reduction", "S is positive", True)
        rep.add("positive reduction", "constant of S is at least m/2", True, m=red.m, constant=red.m_out)
    norm = normalize_positive(T, window=window)
    S = out.current = norm.kernel
    rep.add("positive normalization", "S1 = 1", True, L0=str(norm.support))
    rep.add("positive normalization", "S is positive", True)
    rep.add("positive normalization", "inverse norm does not grow", True, m=norm.m, constant=norm.m_out)
    m = norm.m_out
    out.kernel, out.m = S, m
    onto = check_onto_at_m(S, m)
    rep.extend(onto.to_report())
    if not onto.onto:
        return
    F = filtration(S, m)
    out.p = F.p
    rep.extend(F.to_report())
    top = top_level_witness(S, F)
    rep.add("top level witness", "continuous surjection onto K_p", True,
            source=str(top.source), target=str(top.target), map=top.describe())
    K = S.domain
    samples = [K.whole()] + [SubsetDesc.from_traces(K, {b.id: Trace.full(b)}) for b in K.blocks]
    for W in dict.fromkeys(samples):
        res = pi_base(S, W, m, window, search_bound)
        rep.add("pi-base", "closure of U is a continuous image", True, W=str(W), level=res.level,
                U=str(res.U), map=res.witness.describe())
