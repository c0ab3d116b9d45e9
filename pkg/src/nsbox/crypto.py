"""Key distribution against a no-signaling eavesdropper.

Eve distributes the devices: each round she sends one of the 24 vertices of
the binary no-signaling polytope and remembers which. She never learns the
inputs before they are announced. Her knowledge of a party's output is
therefore all-or-nothing per vertex: a deterministic vertex whose output does
not depend on the unknown input is known exactly, anything else is a uniform
bit to her. PR-class vertices have uniform outputs and are never known.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .correlation import (
    Correlation,
    fraction_str,
    mix,
    pr_box,
    rationalize,
    require_no_signaling,
    to_fraction,
    uniform_box,
)
from .errors import OutOfRange, RangeError, UnsupportedScenario
from .polytope import NSVertex, _vertex_lp, chsh, decomposition_from_weights, evaluate, ns_vertex_list

SCHEMA = 1
TARGETS = ("A", "B")


# -- isotropic family -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IsotropicBox:
    p: object
    correlation: Correlation

    @property
    def chsh(self):
        return evaluate(chsh(), self.correlation)


def isotropic(p) -> IsotropicBox:
    """(1+p)/2 PR + (1-p)/2 uniform noise; exact unless ``p`` is a float."""
    exact = not isinstance(p, float)
    pv = to_fraction(p) if exact else float(p)
    if not -1 <= pv <= 1:
        raise OutOfRange(f"p = {p} outside [-1, 1]")
    pr, noise = pr_box(), uniform_box()
    if not exact:
        pr, noise = pr.as_float(), noise.as_float()
    return IsotropicBox(pv, mix([((1 + pv) / 2, pr), ((1 - pv) / 2, noise)]))


# -- sifting ------------------------------------------------------------------------


def _require_binary(corr: Correlation) -> None:
    if not corr.scenario.is_binary:
        raise UnsupportedScenario("key analysis needs the binary scenario")


@dataclass(frozen=True, eq=False)
class SiftedData:
    """Statistics of (a, b') with b' = b xor xy, after Alice announces x."""

    source: Correlation
    correlation: Correlation

    def channel(self, x: int, y: int) -> np.ndarray:
        """Joint table P(a, b' | x, y)."""
        return self.correlation.table[x, y]

    def error(self, x: int, y: int):
        t = self.channel(x, y)
        return t[0, 1] + t[1, 0]


def sift(corr) -> SiftedData:
    """Bob's flip b' = b xor xy. Sifting sifted data returns it unchanged."""
    if isinstance(corr, SiftedData):
        return corr
    _require_binary(corr)
    out = corr.relabel(lambda x, y, a, b: (x, y, a, b ^ (x & y)))
    return SiftedData(corr, out)


def qber(sifted, x: int):
    """Error rate for announced ``x``, averaged over Bob's uniform input."""
    s = sift(sifted)
    return (s.error(x, 0) + s.error(x, 1)) / 2


def binary_entropy(q) -> float:
    q = float(q)
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def _mutual_info(joint) -> float:
    j = np.asarray(joint, dtype=np.float64)
    pa, pb = j.sum(axis=1), j.sum(axis=0)
    total = 0.0
    for a, b in itertools.product(range(2), repeat=2):
        if j[a, b] > 0:
            total += j[a, b] * math.log2(j[a, b] / (pa[a] * pb[b]))
    return max(0.0, float(total))


def mutual_info_ab(sifted, x: int | None = None) -> float:
    """I(A;B') in bits given the announced x (averaged over x when None).

    Bob's input is uniform and private, so the channel for announced x is
    the average of the two (x, y) tables.
    """
    s = sift(sifted)
    xs = range(2) if x is None else (x,)
    vals = [_mutual_info((s.channel(xx, 0) + s.channel(xx, 1)) / 2) for xx in xs]
    return sum(vals) / len(vals)


# -- Eve's individual attack ------------------------------------------------------


def vertex_knows(vertex: NSVertex, target: str, x: int | None = None, bases_public: bool = False) -> bool:
    """Whether Eve, holding ``vertex``, knows the target's (sifted) output bit.

    ``x`` is Alice's announced input, ``bases_public`` means both inputs are
    announced (BB84-style basis reconciliation).
    """
    if target not in TARGETS:
        raise ValueError(f"target must be 'A' or 'B', not {target!r}")
    if vertex.strategy is None:
        return False
    if bases_public:
        return True
    alice, bob = vertex.strategy.alice, vertex.strategy.bob
    if target == "A":
        return x is not None or alice[0] == alice[1]
    if x is None:
        return bob[0] == bob[1]
    return bob[0] == bob[1] ^ x  # b'(y) = b(y) xor xy constant in y


def _entropy_of_output(corr: Correlation, target: str, x: int | None, bases_public: bool):
    """Distribution of the bit Eve is after, as seen by someone ignorant of the vertex."""
    t = corr.table
    if target == "A":
        xs = range(2) if x is None else (x,)
        p0 = sum(t[xx, y, 0, :].sum() for xx in xs for y in range(2)) / (2 * len(xs))
    else:
        s = sift(corr).correlation.table if x is not None else t
        xs = range(2) if x is None else (x,)
        p0 = sum(s[xx, y, :, 0].sum() for xx in xs for y in range(2)) / (2 * len(xs))
    return p0


def _information(known: Fraction, p0) -> object:
    """H(out) - H(out | E): unknown vertices leave a uniform bit."""
    if p0 == Fraction(1, 2):
        return known
    return max(0.0, binary_entropy(p0) - (1 - float(known)))


@dataclass(frozen=True, eq=False)
class AttackDecomposition:
    target: str
    x: int | None
    bases_public: bool
    weights: tuple[Fraction, ...]
    labels: tuple[str, ...]
    knows_a: tuple[bool, ...]
    knows_b: tuple[bool, ...]
    i_ae: object
    i_be: object
    residual: Fraction
    nonlocal_weight: Fraction

    @property
    def information(self):
        return self.i_be if self.target == "B" else self.i_ae

    def reconstruct(self) -> Correlation:
        verts = ns_vertex_list()
        return mix([(w, v.box) for w, v in zip(self.weights, verts) if w])

    def to_json(self) -> dict:
        def num(v):
            return fraction_str(v) if isinstance(v, Fraction) else float(v)

        return {
            "schema": SCHEMA,
            "target": self.target,
            "announced_x": self.x,
            "bases_public": self.bases_public,
            "vertices": [
                {
                    "index": i,
                    "label": self.labels[i],
                    "weight": fraction_str(w),
                    "knows_a": self.knows_a[i],
                    "knows_b": self.knows_b[i],
                }
                for i, w in enumerate(self.weights)
                if w
            ],
            "i_ae": num(self.i_ae),
            "i_be": num(self.i_be),
            "nonlocal_weight": fraction_str(self.nonlocal_weight),
            "residual": fraction_str(self.residual),
        }


def eve_individual_attack(
    corr: Correlation, target: str = "B", x: int | None = None, bases_public: bool = False
) -> AttackDecomposition:
    """Decomposition over the 24 vertices that maximizes Eve's knowledge of the target.

    Among optimal decompositions the one with least nonlocal weight is
    returned. Float boxes are first replaced by their exact rationalization.
    """
    _require_binary(corr)
    require_no_signaling(corr)
    corr = corr if corr.is_rational else rationalize(corr)
    verts = ns_vertex_list()
    knows = {t: tuple(vertex_knows(v, t, x, bases_public) for v in verts) for t in TARGETS}
    gain = [-int(k) for k in knows[target]]
    nonlocal_cost = [int(v.strategy is None) for v in verts]
    _, res = _vertex_lp(corr, [gain, nonlocal_cost])
    weights = tuple(res.x)
    dec = decomposition_from_weights(corr, weights)
    info = {}
    for t in TARGETS:
        known = sum((w for w, k in zip(weights, knows[t]) if k), Fraction(0))
        info[t] = _information(known, _entropy_of_output(corr, t, x, bases_public))
    return AttackDecomposition(
        target, x, bases_public, weights, tuple(v.label for v in verts),
        knows["A"], knows["B"], info["A"], info["B"], dec.residual, dec.nonlocal_weight,
    )


@dataclass(frozen=True)
class InfoDisturbanceReport:
    i0: object
    i1: object
    qber0: object
    qber1: object
    residual0: object
    residual1: object
    isotropic: bool

    @property
    def identity_holds(self) -> bool:
        return self.residual0 == 0 and self.residual1 == 0

    def to_json(self) -> dict:
        def num(v):
            return fraction_str(v) if isinstance(v, Fraction) else float(v)

        return {
            "schema": SCHEMA,
            "i0_be": num(self.i0),
            "i1_be": num(self.i1),
            "qber0": num(self.qber0),
            "qber1": num(self.qber1),
            "residual0": num(self.residual0),
            "residual1": num(self.residual1),
            "isotropic": self.isotropic,
            "identity_holds": self.identity_holds,
        }


def _is_isotropic(corr: Correlation) -> bool:
    if not corr.is_rational:
        return False
    p = evaluate(chsh(), corr) - 3
    return -1 <= p <= 1 and isotropic(p).correlation == corr


def info_disturbance_check(corr: Correlation) -> InfoDisturbanceReport:
    """Compare I_x(B,E) against 2 QBER_{1-x} with the announced-x attack."""
    corr = corr if corr.is_rational else rationalize(corr)
    s = sift(corr)
    i = [eve_individual_attack(corr, "B", x=x).i_be for x in range(2)]
    q = [qber(s, x) for x in range(2)]
    return InfoDisturbanceReport(
        i[0], i[1], q[0], q[1], abs(i[0] - 2 * q[1]), abs(i[1] - 2 * q[0]), _is_isotropic(corr)
    )


# -- key rates --------------------------------------------------------------------


@dataclass(frozen=True)
class KeyRateReport:
    p: object
    qber0: object
    qber1: object
    i_ab: float
    i_be: object

    @property
    def advantage(self) -> float:
        return self.i_ab - float(self.i_be)

    @property
    def qber(self):
        return (self.qber0 + self.qber1) / 2

    def csv_row(self) -> list[str]:
        return [repr(float(self.p)), repr(float(self.qber)), repr(self.i_ab),
                repr(float(self.i_be)), repr(self.advantage)]


CSV_HEADER = ["p", "qber", "i_ab", "i_be", "advantage"]


def key_rate(p) -> KeyRateReport:
    box = isotropic(p)
    if box.p < 0:
        raise RangeError("key analysis is defined for p in [0, 1]")
    s = sift(box.correlation)
    return KeyRateReport(
        box.p, qber(s, 0), qber(s, 1), mutual_info_ab(s),
        eve_individual_attack(box.correlation, "B").i_be,
    )


def key_advantage_curve(grid: Sequence) -> list[KeyRateReport]:
    for p in grid:
        if not 0 <= to_fraction(p) <= 1:
            raise RangeError(f"grid point {p} outside [0, 1]")
    return [key_rate(p) for p in grid]


def grid(pmin, pmax, steps: int) -> list[Fraction]:
    """``steps`` evenly spaced exact points from pmin to pmax inclusive."""
    lo, hi = to_fraction(pmin), to_fraction(pmax)
    if not (0 <= lo < hi <= 1):
        raise RangeError(f"need 0 <= pmin < pmax <= 1, got {pmin}, {pmax}")
    if steps < 2:
        raise RangeError("need at least two grid points")
    return [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]


def crossing(lo, hi, tol: float = 1e-6) -> Fraction:
    """Bisect the advantage sign change inside [lo, hi] on exact dyadic points."""
    lo, hi = to_fraction(lo), to_fraction(hi)
    f_lo, f_hi = key_rate(lo).advantage, key_rate(hi).advantage
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError("advantage does not change sign on the bracket")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if (key_rate(mid).advantage > 0) == (f_hi > 0):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def find_crossing(curve: Sequence[KeyRateReport], tol: float = 1e-6) -> Fraction | None:
    """First sign change of the advantage along a curve, refined by bisection."""
    for left, right in zip(curve, curve[1:]):
        if left.advantage == 0:
            return to_fraction(left.p)
        if (left.advantage > 0) != (right.advantage > 0):
            return crossing(left.p, right.p, tol)
    return None


def curve_csv(curve: Sequence[KeyRateReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in curve:
        w.writerow(r.csv_row())
    return buf.getvalue()


# -- protocol comparison -----------------------------------------------------------


def _protocol_box(family_name: str) -> Correlation:
    from .quantum import SINGLET, family_correlation, named_family

    return family_correlation(SINGLET, named_family(family_name, SINGLET))


def bb84_vs_chsh_comparison() -> dict:
    """Singlet data under the BB84 and CHSH-protocol measurement families.

    BB84 announces both bases and keeps matching rounds, so Eve is told both
    inputs; the CHSH protocol announces only Alice's input.
    """
    out = {"schema": SCHEMA}
    bb84 = _protocol_box("bb84")
    bb84_exact = rationalize(bb84)
    attack = eve_individual_attack(bb84_exact, "B", bases_public=True)
    agree = [bb84_exact.table[k, k, 0, 1] + bb84_exact.table[k, k, 1, 0] for k in range(2)]
    i_ab_bb84 = 1 - binary_entropy(sum(agree) / 2)
    out["bb84"] = {
        "chsh": float(evaluate(chsh(), bb84)),
        "i_ab": i_ab_bb84,
        "i_be": float(attack.i_be),
        "nonlocal_weight": float(attack.nonlocal_weight),
        "advantage": i_ab_bb84 - float(attack.i_be),
        "secure": i_ab_bb84 - float(attack.i_be) > 0,
    }
    proto = _protocol_box("chsh-protocol")
    proto_exact = rationalize(proto)
    s = sift(proto_exact)
    attack = eve_individual_attack(proto_exact, "B")
    i_ab = float(mutual_info_ab(s))
    out["chsh_protocol"] = {
        "chsh": float(evaluate(chsh(), proto)),
        "qber": float(qber(s, 0) + qber(s, 1)) / 2,
        "i_ab": i_ab,
        "i_be": float(attack.i_be),
        "nonlocal_weight": float(attack.nonlocal_weight),
        "advantage": i_ab - float(attack.i_be),
        "secure": i_ab - float(attack.i_be) > 0,
    }
    return out
