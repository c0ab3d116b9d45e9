"""Tripartite no-signaling LPs: CHSH monogamy and the no-cloning argument.

Variables are the 64 probabilities P(a,b,c|x,y,z) of a binary three-party
box. No-signaling is imposed on every two-party marginal (each must not
depend on the remaining party's input), which also fixes all one-party
marginals.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import lp
from .correlation import TripartiteCorrelation, to_fraction
from .errors import InfeasibleTarget

BITS = range(2)


def _var(x, y, z, a, b, c) -> int:
    return ((((x * 2 + y) * 2 + z) * 2 + a) * 2 + b) * 2 + c


def _equalities() -> tuple[list[list[int]], list[int]]:
    rows, rhs = [], []
    for x, y, z in itertools.product(BITS, repeat=3):
        row = [0] * 64
        for a, b, c in itertools.product(BITS, repeat=3):
            row[_var(x, y, z, a, b, c)] = 1
        rows.append(row)
        rhs.append(1)
    # AB marginal independent of z, AC of y, BC of x
    for p, q, o1, o2 in itertools.product(BITS, repeat=4):
        for which in ("z", "y", "x"):
            row = [0] * 64
            for free in BITS:
                for third, sign in ((0, 1), (1, -1)):
                    if which == "z":
                        idx = _var(p, q, third, o1, o2, free)
                    elif which == "y":
                        idx = _var(p, third, q, o1, free, o2)
                    else:
                        idx = _var(third, p, q, free, o1, o2)
                    row[idx] += sign
            rows.append(row)
            rhs.append(0)
    return rows, rhs


def _mark_row(pair: str) -> list[int]:
    """Coefficients of the CHSH mark of the AB (z=0) or AC (y=0) marginal."""
    row = [0] * 64
    for x, w, a, o, free in itertools.product(BITS, repeat=5):
        if a ^ o != x * w:
            continue
        if pair == "AB":
            row[_var(x, w, 0, a, o, free)] = 1
        else:
            row[_var(x, 0, w, a, free, o)] = 1
    return row


_EQ = _equalities()
MARK_AB = _mark_row("AB")
MARK_AC = _mark_row("AC")


def _box(x) -> TripartiteCorrelation:
    table = np.array(x, dtype=object).reshape((2,) * 6)
    return TripartiteCorrelation.from_table(table)


@dataclass(frozen=True, eq=False)
class MonogamyResult:
    m_ab: Fraction
    max_m_ac: Fraction
    box: TripartiteCorrelation


def solve_monogamy(m_ab) -> MonogamyResult:
    """Maximize M_AC over tripartite no-signaling boxes with M_AB >= m_ab."""
    m_ab = to_fraction(m_ab)
    if m_ab > 4:
        raise InfeasibleTarget(f"CHSH mark {m_ab} exceeds the algebraic maximum 4")
    if m_ab < 0:
        raise ValueError("target mark must be nonnegative")
    rows, rhs = _EQ
    res = lp.solve([[-c for c in MARK_AC]], rows, rhs, [[-c for c in MARK_AB]], [-m_ab])
    if not res.feasible:  # pragma: no cover - every m_ab <= 4 is attainable by a PR box with Bob
        raise InfeasibleTarget(f"no tripartite box reaches M_AB >= {m_ab}")
    return MonogamyResult(m_ab, -res.objectives[0], _box(res.x))


def monogamy_max(m_ab) -> Fraction:
    return solve_monogamy(m_ab).max_m_ac


@dataclass(frozen=True, eq=False)
class CloningVerdict:
    feasible: bool
    m_ab: Fraction
    m_ac: Fraction
    box: TripartiteCorrelation | None = None
    witness: dict | None = None


def signaling_witness() -> dict:
    """Direct arithmetic: a xor b = xy and a xor c = xz force b xor c = x at y=1, z=0.

    For each of Alice's inputs, the parity b xor c seen jointly by Bob and
    Charly is enumerated over every output a consistent with both constraints.
    """
    y, z = 1, 0
    parity = {}
    for x in BITS:
        seen = {(a ^ (x * y)) ^ (a ^ (x * z)) for a in BITS}
        (parity[x],) = seen
    return {
        "y": y,
        "z": z,
        "bc_parity_by_x": parity,
        "signals": parity[0] != parity[1],
    }


def cloning_feasible(m_ab=4, m_ac=4) -> CloningVerdict:
    """Can one Alice share CHSH marks >= m_ab with Bob and >= m_ac with Charly?"""
    m_ab, m_ac = to_fraction(m_ab), to_fraction(m_ac)
    rows, rhs = _EQ
    res = lp.solve(
        None, rows, rhs,
        [[-c for c in MARK_AB], [-c for c in MARK_AC]], [-m_ab, -m_ac], n=64,
    )
    witness = signaling_witness() if (m_ab == 4 and m_ac == 4) else None
    box = _box(res.x) if res.feasible else None
    return CloningVerdict(res.feasible, m_ab, m_ac, box, witness)
