"""Exact rational linear programming.

Two-phase primal simplex on a fraction-free integer tableau (Edmonds/Bareiss
integer pivoting): every row is kept as an integer vector and a single
common denominator ``d`` (the previous pivot) is carried along, so all
divisions are exact and no gcd work is done per entry. Bland's rule is used
for both entering and leaving variables, which rules out cycling on the
highly degenerate problems that arise from boundary points of polytopes.

Problems are stated as::

    minimize  c_1 . x, then c_2 . x on the optimal face, ...
    s.t.      A_eq x == b_eq,  A_ub x <= b_ub,  x >= 0
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple[Fraction, ...] | None
    objectives: tuple[Fraction, ...]
    farkas: tuple[Fraction, ...] | None = None
    pivots: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


def _integer_row(coeffs: Sequence[Fraction]) -> list[int]:
    den = 1
    for v in coeffs:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return [int(v * den) for v in coeffs]


class _Tableau:
    """Fraction-free tableau.

    ``rows[i]`` holds ``d * (B^-1 A | B^-1 b)`` for constraint row ``i``;
    ``objs[k]`` holds ``d * (reduced costs | -objective)`` for objective ``k``.
    """

    def __init__(self, rows: list[list[int]], objs: list[list[int]], basis: list[int]):
        self.rows = rows
        self.objs = objs
        self.basis = basis
        self.d = 1
        self.pivots = 0

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) - 1 if self.rows else len(self.objs[0]) - 1

    def pivot(self, r: int, s: int) -> None:
        rows, d = self.rows, self.d
        prow = rows[r]
        p = prow[s]
        width = len(prow)
        nz = [j for j in range(width) if prow[j]]
        for i, row in enumerate(rows):
            if i != r:
                rows[i] = self._update(row, prow, nz, p, d, s)
        self.objs = [self._update(obj, prow, nz, p, d, s) for obj in self.objs]
        self.basis[r] = s
        self.d = p
        if p < 0:
            # keep d > 0 so that sign tests read directly off the integers
            self.rows = [[-v for v in row] for row in self.rows]
            self.objs = [[-v for v in obj] for obj in self.objs]
            self.d = -p
        self.pivots += 1

    @staticmethod
    def _update(row, prow, nz, p, d, s):
        f = row[s]
        if f == 0:
            if p == d:
                return row
            return [v * p // d for v in row]
        new = [v * p for v in row]
        for j in nz:
            new[j] -= f * prow[j]
        if d != 1:
            new = [v // d for v in new]
        return new

    def entering(self, obj: list[int], allowed: Sequence[bool]) -> int | None:
        for j in range(self.ncols):
            if allowed[j] and obj[j] < 0:
                return j
        return None

    def leaving(self, s: int) -> int | None:
        best = None
        for i, row in enumerate(self.rows):
            a = row[s]
            if a <= 0:
                continue
            if best is None:
                best = i
                continue
            # compare row[-1]/a with best ratio; ties -> smaller basic index
            lhs = row[-1] * self.rows[best][s]
            rhs = self.rows[best][-1] * a
            if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[best]):
                best = i
        return best

    def optimize(self, k: int, allowed: list[bool]) -> str:
        while True:
            s = self.entering(self.objs[k], allowed)
            if s is None:
                return OPTIMAL
            r = self.leaving(s)
            if r is None:
                return UNBOUNDED
            self.pivot(r, s)


def solve(
    objectives: Sequence[Sequence] | None,
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    n: int | None = None,
) -> LPResult:
    """Lexicographically minimize ``objectives`` over the polyhedron.

    ``objectives`` may be empty or None for a pure feasibility problem. When
    the problem is infeasible, ``farkas`` holds multipliers ``y`` (one per
    equality row, then one per inequality row) with ``y.A <= 0`` columnwise,
    ``y_ub <= 0`` and ``y.b > 0``.
    """
    objectives = [list(map(Fraction, c)) for c in (objectives or [])]
    A_eq = [list(map(Fraction, row)) for row in A_eq]
    A_ub = [list(map(Fraction, row)) for row in A_ub]
    b_eq = list(map(Fraction, b_eq))
    b_ub = list(map(Fraction, b_ub))
    if n is None:
        n = len((A_eq or A_ub or objectives)[0])
    if len(A_eq) != len(b_eq) or len(A_ub) != len(b_ub):
        raise ValueError("constraint matrix and right-hand side lengths differ")
    for row in A_eq + A_ub + objectives:
        if len(row) != n:
            raise ValueError("inconsistent column count")

    m_eq, m_ub = len(A_eq), len(A_ub)
    m = m_eq + m_ub
    n_struct = n + m_ub  # structural + slack columns
    ncols = n_struct + m  # + one artificial per row

    rows: list[list[int]] = []
    row_scale: list[Fraction] = []  # integer_row = scale * original row
    for i in range(m):
        if i < m_eq:
            coeffs = A_eq[i] + [Fraction(0)] * m_ub
            rhs = b_eq[i]
        else:
            coeffs = A_ub[i - m_eq] + [Fraction(int(k == i - m_eq)) for k in range(m_ub)]
            rhs = b_ub[i - m_eq]
        sign = -1 if rhs < 0 else 1
        full = [sign * v for v in coeffs] + [sign * rhs]
        ints = _integer_row(full)
        nzv = next((v for v in full if v != 0), None)
        scale = Fraction(ints[full.index(nzv)]) / nzv if nzv is not None else Fraction(1)
        row_scale.append(scale * sign)
        art = [0] * m
        art[i] = 1
        rows.append(ints[:-1] + art + [ints[-1]])

    phase1 = [-sum(row[j] for row in rows) for j in range(n_struct)] + [0] * m + [-sum(row[-1] for row in rows)]
    objs = [phase1]
    for c in objectives:
        ci = _integer_row(c + [Fraction(0)] * m_ub)
        objs.append(ci + [0] * m + [0])
    tab = _Tableau(rows, objs, [n_struct + i for i in range(m)])

    allowed = [True] * ncols
    status = tab.optimize(0, allowed)
    assert status == OPTIMAL  # phase 1 is bounded below by 0

    if tab.objs[0][-1] != 0:
        # Farkas certificate: duals of the phase-1 problem
        y = [Fraction(0)] * m
        for i in range(m):
            red = Fraction(tab.objs[0][n_struct + i], tab.d)
            y_scaled = 1 - red
            y[i] = y_scaled * row_scale[i]
        return LPResult(INFEASIBLE, None, (), tuple(y), tab.pivots)

    # drive zero-level artificials out of the basis; drop redundant rows
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] >= n_struct:
            row = tab.rows[i]
            s = next((j for j in range(n_struct) if row[j] != 0), None)
            if s is None:
                del tab.rows[i], tab.basis[i]
                continue
            tab.pivot(i, s)
        i += 1
    for j in range(n_struct, ncols):
        allowed[j] = False

    for k in range(1, len(tab.objs)):
        status = tab.optimize(k, allowed)
        if status == UNBOUNDED:
            return LPResult(UNBOUNDED, None, (), None, tab.pivots)
        # optimal face: nonbasic columns with positive reduced cost stay at 0
        obj = tab.objs[k]
        for j in range(n_struct):
            if obj[j] > 0:
                allowed[j] = False

    x = [Fraction(0)] * n_struct
    for i, bj in enumerate(tab.basis):
        x[bj] = Fraction(tab.rows[i][-1], tab.d)
    x = x[:n]
    values = tuple(sum((ci * xi for ci, xi in zip(c, x)), Fraction(0)) for c in objectives)
    return LPResult(OPTIMAL, tuple(x), values, None, tab.pivots)
