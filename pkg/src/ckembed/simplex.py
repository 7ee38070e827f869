"""Exact dual simplex on an integer-preserving tableau.

Solves ``min c.x  s.t.  A x <= b, x >= 0`` for ``c >= 0`` (so the slack
basis is dual feasible and no phase one is needed).  Tableau entries are
integers over a common positive denominator; every pivot divides exactly by
the previous denominator.  Bland's rule (least index) is used for both the
leaving and the entering variable, which rules out cycling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class LPError(ArithmeticError):
    pass


class Infeasible(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    value: Fraction
    x: tuple[Fraction, ...]
    pivots: int


def _integer_row(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[list[int], int]:
    den = math.lcm(*(Fraction(c).denominator for c in coeffs), Fraction(rhs).denominator)
    return [int(Fraction(c) * den) for c in coeffs], int(Fraction(rhs) * den)


def solve(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction],
          max_pivots: int = 100_000) -> LPResult:
    n = len(c)
    if any(Fraction(v) < 0 for v in c):
        raise LPError("dual simplex start requires a nonnegative cost vector")
    # row i: x_B[i] = M[i][0]/D - sum_j M[i][j+1]/D * x_N[j]
    M: list[list[int]] = []
    for coeffs, rhs in zip(A, b):
        if len(coeffs) != n:
            raise LPError("constraint width does not match the cost vector")
        ints, r = _integer_row(coeffs, rhs)
        M.append([r] + ints)
    # objective as a row:  z = z0 - sum_j (-c_j) x_j
    cden = math.lcm(*(Fraction(v).denominator for v in c)) if c else 1
    Z = [0] + [-int(Fraction(v) * cden) for v in c]
    D = 1
    m = len(M)
    basic = list(range(n, n + m))
    nonbasic = list(range(n))
    pivots = 0
    while True:
        leave = None
        for i in range(m):
            if M[i][0] < 0 and (leave is None or basic[i] < basic[leave]):
                leave = i
        if leave is None:
            break
        Rw = M[leave]
        enter = None
        for j in range(n):
            a = Rw[j + 1]
            if a >= 0:
                continue
            if enter is None:
                enter = j
                continue
            # compare Z_j / a_j with Z_e / a_e  (both ratios >= 0, denominators < 0)
            ae, ze = Rw[enter + 1], Z[enter + 1]
            lhs, rhs = Z[j + 1] * ae, ze * a
            if lhs < rhs or (lhs == rhs and nonbasic[j] < nonbasic[enter]):
                enter = j
        if enter is None:
            raise Infeasible("linear program is infeasible")
        D = _pivot(M, Z, D, leave, enter)
        basic[leave], nonbasic[enter] = nonbasic[enter], basic[leave]
        pivots += 1
        if pivots > max_pivots:
            raise LPError("pivot limit exceeded")
    x = [Fraction(0)] * n
    for i, v in enumerate(basic):
        if v < n:
            x[v] = Fraction(M[i][0], D)
    value = Fraction(Z[0], D * cden)
    return LPResult(value, tuple(x), pivots)


def _pivot(M: list[list[int]], Z: list[int], D: int, r: int, s: int) -> int:
    col = s + 1
    R = M[r]
    p = R[col]
    width = len(R)
    for row in M + [Z]:
        if row is R:
            continue
        f = row[col]
        if f == 0:
            for k in range(width):
                if k != col:
                    row[k] = row[k] * p // D
        else:
            for k in range(width):
                if k != col:
                    row[k] = (row[k] * p - f * R[k]) // D
        row[col] = -f
    R[col] = D
    if p < 0:
        for row in M + [Z]:
            for k in range(width):
                row[k] = -row[k]
        p = -p
    return p
