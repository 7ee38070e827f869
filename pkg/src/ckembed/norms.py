"""Operator norms and embedding constants ``inf { ||Tg|| : ||g|| = 1 }``.

The infimum is taken over *windowed* functions: on every seq block of ``K``
the function may differ from its tail only at indices below the window.
For such ``g`` the function ``Tg`` takes finitely many values, each a linear
functional of the unknown values of ``g``, so ``min ||Tg||`` is a minimax
problem.  The sphere ``||g|| = 1`` is handled by pinning one coordinate to
``1`` at a time (``g`` and ``-g`` have the same image norm) and solving the
resulting linear programs exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import simplex
from .calculus import Fn, Indexed, Meas, fn_norm, instantiate
from .kernels import Kernel, apply, checked
from .spaces import INF, Point

Row = tuple[tuple[Fraction, ...], Fraction]


class OracleTooLarge(ValueError):
    pass


# -- the minimax LP ---------------------------------------------------------


def lp_minimax(rows: Sequence[Row], box: Sequence[tuple[Fraction, Fraction]],
               fixed: tuple[int, Fraction]) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Exact ``min max_j |a_j.g + c_j|`` over the box with ``g[fixed[0]] = fixed[1]``.

    Returns the optimum and a deterministic minimizer (full vector, pinned
    coordinate included).
    """
    if not rows:
        raise ValueError("lp_minimax needs at least one row")
    n = len(box)
    pin, pval = fixed[0], Fraction(fixed[1])
    lo_pin, hi_pin = box[pin]
    if not lo_pin <= pval <= hi_pin:
        raise simplex.Infeasible("pinned value lies outside its box")
    free = [i for i in range(n) if i != pin]
    for i in free:
        if box[i][0] > box[i][1]:
            raise simplex.Infeasible(f"empty box for variable {i}")
    A, b = [], []
    f = len(free)
    for coeffs, const in rows:
        if len(coeffs) != n:
            raise ValueError("row width does not match the box")
        cp = Fraction(const) + Fraction(coeffs[pin]) * pval
        cp += sum((Fraction(coeffs[i]) * box[i][0] for i in free), Fraction(0))
        a = [Fraction(coeffs[i]) for i in free]
        A.append(a + [Fraction(-1)])
        b.append(-cp)
        A.append([-v for v in a] + [Fraction(-1)])
        b.append(cp)
    for j, i in enumerate(free):
        e = [Fraction(0)] * (f + 1)
        e[j] = Fraction(1)
        A.append(e)
        b.append(Fraction(box[i][1]) - Fraction(box[i][0]))
    cost = [Fraction(0)] * f + [Fraction(1)]
    res = simplex.solve(cost, A, b)
    g = [Fraction(0)] * n
    g[pin] = pval
    for j, i in enumerate(free):
        g[i] = box[i][0] + res.x[j]
    return res.value, tuple(g)


def minimax_value(rows: Sequence[Row], g: Sequence[Fraction]) -> Fraction:
    return max(abs(sum((a * x for a, x in zip(coeffs, g)), Fraction(0)) + c) for coeffs, c in rows)


# -- windowed problems ------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    block: str
    index: int | None  # None is the tail (value at and near the limit)

    def __str__(self) -> str:
        return f"{self.block}:{'tail' if self.index is None else self.index}"


@dataclass(frozen=True)
class WindowProblem:
    kernel: Kernel
    window: int
    variables: tuple[Variable, ...]
    rows: tuple[Row, ...]

    def var_index(self, p: Point) -> int:
        b = self.kernel.domain.block(p.block)
        if b.is_seq and (p.index == INF or p.index >= self.window):
            return self.variables.index(Variable(p.block, None))
        return self.variables.index(Variable(p.block, int(p.index)))

    def functional(self, mu: Meas) -> tuple[Fraction, ...]:
        coeffs = [Fraction(0)] * len(self.variables)
        for p, w in mu.atoms.items():
            coeffs[self.var_index(p)] += w
        return tuple(coeffs)

    def to_fn(self, values: Sequence[Fraction]) -> Fn:
        data: dict[str, object] = {}
        for v, x in zip(self.variables, values):
            b = self.kernel.domain.block(v.block)
            if b.is_seq:
                tail, exc = data.get(v.block, (Fraction(0), {}))
                if v.index is None:
                    tail = x
                else:
                    exc[v.index] = x
                data[v.block] = (tail, exc)
            else:
                data.setdefault(v.block, {})[v.index] = x
        return Fn(self.kernel.domain, data)

    def box(self) -> list[tuple[Fraction, Fraction]]:
        return [(Fraction(-1), Fraction(1))] * len(self.variables)


def window_problem(T: Kernel, window: int) -> WindowProblem:
    if window < 0:
        raise ValueError("window must be nonnegative")
    T = checked(T)
    K = T.domain
    variables = []
    for b in K.blocks:
        if b.is_seq:
            variables += [Variable(b.id, i) for i in range(window)] + [Variable(b.id, None)]
        else:
            variables += [Variable(b.id, i) for i in range(b.size)]
    wp = WindowProblem(T, window, tuple(variables), ())
    measures = list(T.rows.values())
    for bid, t in T.all_templates():
        k_end = t.cls.k0
        for tg, _ in t.atoms:
            if isinstance(tg, Indexed):
                k_end = max(k_end, tg.first_k_at_least(window))
        for k in range(t.cls.k0, k_end + 1):
            if Point(bid, t.cls.index(k)) not in T.rows:
                measures.append(instantiate(K, t.atoms, k))
    seen: dict[tuple[Fraction, ...], None] = {}
    for mu in measures:
        coeffs = wp.functional(mu)
        neg = tuple(-c for c in coeffs)
        if coeffs not in seen and neg not in seen:
            seen[coeffs] = None
    rows = tuple((c, Fraction(0)) for c in seen)
    return WindowProblem(T, window, tuple(variables), rows)


@dataclass(frozen=True)
class ConstantEstimate:
    value: Fraction
    witness: Fn
    window: int | None  # None for estimates not tied to a window


def embedding_constant(T: Kernel, window: int) -> ConstantEstimate:
    """Exact infimum of ``||Tg||`` over norm-one functions supported in the window."""
    wp = window_problem(T, window)
    best = None
    for i in range(len(wp.variables)):
        value, g = lp_minimax(wp.rows, wp.box(), (i, Fraction(1)))
        if best is None or value < best[0]:
            best = (value, g)
    value, g = best
    return ConstantEstimate(value, wp.to_fn(g), window)


# -- brute force lattice oracle --------------------------------------------


def lattice_minimax(rows: Sequence[Row], n: int, denominator: int,
                    max_points: int = 5_000_000) -> Fraction:
    """``min max_j |a_j.g + c_j|`` over ``g in {-1, -1+1/q, ..., 1}^n`` with ``max|g| = 1``."""
    q = denominator
    if q < 1:
        raise ValueError("denominator must be positive")
    if (2 * q + 1) ** n > max_points:
        raise OracleTooLarge(f"{(2 * q + 1) ** n} lattice points exceed the limit {max_points}")
    den = math.lcm(*(Fraction(x).denominator for coeffs, c in rows for x in (*coeffs, c)))
    A = np.array([[int(Fraction(x) * den) for x in coeffs] for coeffs, _ in rows], dtype=np.int64)
    # constants multiply the lattice scale q
    C = np.array([int(Fraction(c) * den) * q for _, c in rows], dtype=np.int64)
    vals = np.arange(-q, q + 1, dtype=np.int64)
    if n == 1:
        chunks = [vals[:, None]]
    else:
        rest = np.stack(np.meshgrid(*([vals] * (n - 1)), indexing="ij"), -1).reshape(-1, n - 1)
        chunks = (np.column_stack([np.full(len(rest), v0, dtype=np.int64), rest]) for v0 in vals)
    best = None
    for G in chunks:
        sphere = np.abs(G).max(axis=1) == q
        if not sphere.any():
            continue
        G = G[sphere]
        vals_ = np.abs(G @ A.T + C).max(axis=1).min()
        best = int(vals_) if best is None else min(best, int(vals_))
    return Fraction(best, den * q)


def lattice_oracle(T: Kernel, window: int, denominator: int, max_points: int = 5_000_000) -> Fraction:
    wp = window_problem(T, window)
    return lattice_minimax(wp.rows, len(wp.variables), denominator, max_points)


# -- norming sets -----------------------------------------------------------


@dataclass(frozen=True)
class NormingReport:
    m: Fraction
    failures: tuple[Fn, ...]
    improved: ConstantEstimate | None

    @property
    def ok(self) -> bool:
        return not self.failures


def norming_check(T: Kernel, m: Fraction, probes: Sequence[Fn]) -> NormingReport:
    """Check that ``{T*delta_y}`` is ``m``-norming on the probes.

    A failing probe, once normalized, is a better witness than ``m``.
    """
    m = Fraction(m)
    failures = []
    improved = None
    for g in probes:
        ng = fn_norm(g)
        if ng == 0:
            continue
        nt = fn_norm(apply(T, g))
        if nt < m * ng:
            failures.append(g)
            est = ConstantEstimate(nt / ng, g.scale(1 / ng), None)
            if improved is None or est.value < improved.value:
                improved = est
    return NormingReport(m, tuple(failures), improved)
