"""Finite-alphabet conditional probability tables ("boxes").

A box is stored as an array indexed ``[x, y, a, b]``. Two numeric modes exist:
``"rational"`` keeps every entry as a :class:`fractions.Fraction` (object
array) and all checks are exact; ``"float"`` keeps float64 entries and checks
within a tolerance.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    MissingSetting,
    NegativeEntry,
    NotNoSignaling,
    NotNormalized,
    ParseError,
    ScenarioMismatch,
    ShapeMismatch,
    WeightSumInvalid,
)

DEFAULT_TOL = 1e-9
RATIONAL = "rational"
FLOAT = "float"


def to_fraction(value) -> Fraction:
    """Exact conversion; floats go through their shortest repr (0.1 -> 1/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational number: {value!r}") from exc
    raise ParseError(f"cannot interpret {value!r} as a rational number")


def fraction_str(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Scenario:
    nx: int
    ny: int
    na: int
    nb: int

    def __post_init__(self):
        for name in ("nx", "ny", "na", "nb"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ShapeMismatch(f"{name} must be a positive integer, got {v!r}")

    @classmethod
    def binary(cls) -> "Scenario":
        return cls(2, 2, 2, 2)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.nx, self.ny, self.na, self.nb)

    @property
    def is_binary(self) -> bool:
        return self.shape == (2, 2, 2, 2)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "na": self.na, "nb": self.nb}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Correlation:
    """Validated box P(a,b|x,y); build instances through :func:`validate`."""

    scenario: Scenario
    table: np.ndarray
    mode: str = RATIONAL
    counts: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, key):
        x, y, a, b = key
        return self.table[x, y, a, b]

    @property
    def is_rational(self) -> bool:
        return self.mode == RATIONAL

    def __eq__(self, other) -> bool:
        if not isinstance(other, Correlation):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.scenario == other.scenario
            and bool(np.all(self.table == other.table))
        )

    def __hash__(self):
        return hash((self.mode, self.scenario, tuple(self.table.ravel().tolist())))

    def as_float(self) -> "Correlation":
        if self.mode == FLOAT:
            return self
        return Correlation(self.scenario, _freeze(self.table.astype(np.float64)), FLOAT)

    def relabel(self, func) -> "Correlation":
        """Apply ``(x, y, a, b) -> (x', y', a', b')`` bijectively to the entries."""
        out = np.empty_like(self.table)
        for idx in itertools.product(*map(range, self.scenario.shape)):
            out[func(*idx)] = self.table[idx]
        return Correlation(self.scenario, _freeze(out), self.mode)


@dataclass(frozen=True)
class MarginalReport:
    party: str
    input: int
    distribution: tuple
    per_other_input: tuple
    deviation: object


@dataclass(frozen=True)
class SignalingCheck:
    no_signaling: bool
    deviation: object

    def __bool__(self) -> bool:
        return self.no_signaling


def validate(raw, scenario: Scenario | None = None, mode: str = RATIONAL, tol: float = DEFAULT_TOL) -> Correlation:
    """Build a Correlation from nested lists / arrays indexed [x][y][a][b].

    Rational mode requires exact normalization for every (x, y); float mode
    accepts deviations up to ``tol``.
    """
    if mode not in (RATIONAL, FLOAT):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(raw, Correlation):
        raw = raw.table
    if mode == RATIONAL:
        arr = np.asarray(raw, dtype=object)
    else:
        try:
            arr = np.asarray(raw, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ParseError("table entries must be numeric") from exc
    if scenario is None:
        if arr.ndim != 4:
            raise ShapeMismatch(f"table must be 4-dimensional, got shape {arr.shape}")
        scenario = Scenario(*arr.shape)
    if arr.shape != scenario.shape:
        raise ShapeMismatch(f"table shape {arr.shape} does not match scenario {scenario.shape}")

    if mode == RATIONAL:
        conv = np.empty(arr.shape, dtype=object)
        for idx in np.ndindex(arr.shape):
            conv[idx] = to_fraction(arr[idx])
        arr = conv
        neg = [idx for idx in np.ndindex(arr.shape) if arr[idx] < 0]
        if neg:
            raise NegativeEntry(f"negative entry {arr[neg[0]]} at (x,y,a,b)={neg[0]}")
        sums = arr.sum(axis=(2, 3))
        for idx in np.ndindex(sums.shape):
            if sums[idx] != 1:
                raise NotNormalized(f"setting (x,y)={idx} sums to {sums[idx]}")
    else:
        arr = arr.copy()
        if not np.all(np.isfinite(arr)):
            raise ParseError("table contains non-finite entries")
        if np.any(arr < 0):
            idx = tuple(int(i) for i in np.argwhere(arr < 0)[0])
            raise NegativeEntry(f"negative entry {arr[idx]} at (x,y,a,b)={idx}")
        sums = arr.sum(axis=(2, 3))
        bad = np.abs(sums - 1.0) > tol
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NotNormalized(f"setting (x,y)={idx} sums to {sums[idx]!r}")
    return Correlation(scenario, _freeze(arr), mode)


def uniform_box(scenario: Scenario | None = None) -> Correlation:
    scenario = scenario or Scenario.binary()
    value = Fraction(1, scenario.na * scenario.nb)
    table = np.full(scenario.shape, value, dtype=object)
    return Correlation(scenario, _freeze(table), RATIONAL)


def pr_box() -> Correlation:
    """P(a,b|x,y) = 1/2 when a xor b == x*y, else 0."""
    table = np.empty((2, 2, 2, 2), dtype=object)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        table[x, y, a, b] = Fraction(1, 2) if (a ^ b) == x * y else Fraction(0)
    return Correlation(Scenario.binary(), _freeze(table), RATIONAL)


def _check_range(value: int, bound: int, what: str) -> None:
    if not (0 <= value < bound):
        raise IndexOutOfRange(f"{what}={value} outside 0..{bound - 1}")


def marginal(corr: Correlation, party: str, input: int) -> tuple[tuple, MarginalReport]:
    """Output distribution of one party for a fixed own input.

    The returned distribution averages over the other party's inputs (it is
    the common value whenever the box is no-signaling); the report carries the
    per-other-input distributions and their largest spread.
    """
    sc = corr.scenario
    party = party.upper()
    if party == "A":
        _check_range(input, sc.nx, "x")
        per = corr.table[input].sum(axis=2)  # [y, a]
    elif party == "B":
        _check_range(input, sc.ny, "y")
        per = corr.table[:, input].sum(axis=1)  # [x, b]
    else:
        raise ValueError(f"party must be 'A' or 'B', got {party!r}")
    n_other = per.shape[0]
    if corr.is_rational:
        dist = tuple(sum(per[:, k], Fraction(0)) / n_other for k in range(per.shape[1]))
        deviation = max(max(per[:, k]) - min(per[:, k]) for k in range(per.shape[1]))
    else:
        dist = tuple(float(v) for v in per.mean(axis=0))
        deviation = float(np.max(per.max(axis=0) - per.min(axis=0)))
    rows = tuple(tuple(row) for row in per.tolist())
    return dist, MarginalReport(party, input, dist, rows, deviation)


def signaling_deviation(corr: Correlation):
    """Largest change of any one-party marginal under a change of the far input."""
    alice = corr.table.sum(axis=3)  # [x, y, a]
    bob = corr.table.sum(axis=2)  # [x, y, b]
    dev_a = alice.max(axis=1) - alice.min(axis=1)
    dev_b = bob.max(axis=0) - bob.min(axis=0)
    return max(dev_a.max(), dev_b.max())


def is_no_signaling(corr: Correlation, tol: float = DEFAULT_TOL) -> SignalingCheck:
    deviation = signaling_deviation(corr)
    if corr.is_rational:
        return SignalingCheck(deviation == 0, deviation)
    return SignalingCheck(bool(deviation <= tol), float(deviation))


def require_no_signaling(corr: Correlation, tol: float = DEFAULT_TOL) -> None:
    check = is_no_signaling(corr, tol)
    if not check:
        raise NotNoSignaling(f"box signals (marginal deviation {check.deviation})")


def mix(weighted: Iterable[tuple[object, Correlation]], tol: float = DEFAULT_TOL) -> Correlation:
    """Entrywise convex combination of ``(weight, box)`` pairs."""
    weighted = list(weighted)
    if not weighted:
        raise WeightSumInvalid("empty mixture")
    scenario = weighted[0][1].scenario
    for _, c in weighted:
        if c.scenario != scenario:
            raise ScenarioMismatch(f"{c.scenario} != {scenario}")
    rational = all(c.is_rational for _, c in weighted) and all(
        isinstance(w, (int, Fraction, np.integer, str)) for w, _ in weighted
    )
    if rational:
        weights = [to_fraction(w) for w, _ in weighted]
        if any(w < 0 for w in weights):
            raise WeightSumInvalid("negative weight")
        if sum(weights) != 1:
            raise WeightSumInvalid(f"weights sum to {sum(weights)}")
        table = np.full(scenario.shape, Fraction(0), dtype=object)
        for w, (_, c) in zip(weights, weighted):
            if w:
                table = table + w * c.table
        return Correlation(scenario, _freeze(table), RATIONAL)
    weights = np.array([float(w) for w, _ in weighted])
    if np.any(weights < 0):
        raise WeightSumInvalid("negative weight")
    if abs(weights.sum() - 1.0) > tol:
        raise WeightSumInvalid(f"weights sum to {weights.sum()!r}")
    table = np.zeros(scenario.shape)
    for w, (_, c) in zip(weights, weighted):
        table += w * c.table.astype(np.float64)
    return Correlation(scenario, _freeze(table), FLOAT)


def from_samples(x, y, a, b, scenario: Scenario | None = None) -> Correlation:
    """Empirical conditional frequencies from per-round records.

    The per-cell counts are kept on ``Correlation.counts`` so callers can
    compute binomial standard errors.
    """
    scenario = scenario or Scenario.binary()
    x, y, a, b = (np.asarray(v, dtype=np.int64) for v in (x, y, a, b))
    if not (x.shape == y.shape == a.shape == b.shape):
        raise ShapeMismatch("sample columns differ in length")
    for arr, bound, name in ((x, scenario.nx, "x"), (y, scenario.ny, "y"), (a, scenario.na, "a"), (b, scenario.nb, "b")):
        if arr.size and (arr.min() < 0 or arr.max() >= bound):
            raise IndexOutOfRange(f"{name} outside 0..{bound - 1}")
    flat = ((x * scenario.ny + y) * scenario.na + a) * scenario.nb + b
    counts = np.bincount(flat, minlength=int(np.prod(scenario.shape))).reshape(scenario.shape)
    per_setting = counts.sum(axis=(2, 3))
    missing = np.argwhere(per_setting == 0)
    if missing.size:
        raise MissingSetting(f"no rounds for setting (x,y)={tuple(int(i) for i in missing[0])}")
    table = counts / per_setting[:, :, None, None]
    counts.setflags(write=False)
    return Correlation(scenario, _freeze(table), FLOAT, counts)


def from_correlators(E, alice=(0, 0), bob=(0, 0)) -> Correlation:
    """Binary box from +/-1 correlators E[x][y] and one-party means.

    P(a,b|x,y) = (1 + s_a A_x + s_b B_y + s_a s_b E_xy) / 4 with s = +1 for
    bit 0 and -1 for bit 1. Rational inputs give a rational box.
    """
    values = [alice[0], alice[1], bob[0], bob[1]] + [E[x][y] for x in range(2) for y in range(2)]
    exact = all(isinstance(v, (int, Fraction, np.integer)) for v in values)
    conv = to_fraction if exact else float
    table = np.empty((2, 2, 2, 2), dtype=object if exact else np.float64)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        sa, sb = 1 - 2 * a, 1 - 2 * b
        table[x, y, a, b] = (1 + sa * conv(alice[x]) + sb * conv(bob[y]) + sa * sb * conv(E[x][y])) / 4
    return validate(table, Scenario.binary(), RATIONAL if exact else FLOAT)


def rationalize(corr: Correlation, max_denominator: int = 10**9, tol: float = DEFAULT_TOL) -> Correlation:
    """Exact no-signaling box closest (entrywise) to a float box.

    Works in the marginal/joint (Collins-Gisin) coordinates so the result is
    exactly normalized and exactly no-signaling by construction.
    """
    if corr.is_rational:
        return corr
    require_no_signaling(corr, tol)
    sc = corr.scenario
    t = corr.table

    def r(v):
        return Fraction(float(v)).limit_denominator(max_denominator)

    pa = [[r(t[x, :, a, :].sum(axis=1).mean()) for a in range(sc.na - 1)] for x in range(sc.nx)]
    pb = [[r(t[:, y, :, b].sum(axis=1).mean()) for b in range(sc.nb - 1)] for y in range(sc.ny)]
    out = np.empty(sc.shape, dtype=object)
    for x, y in itertools.product(range(sc.nx), range(sc.ny)):
        joint = [[r(t[x, y, a, b]) for b in range(sc.nb - 1)] for a in range(sc.na - 1)]
        for a in range(sc.na - 1):
            for b in range(sc.nb - 1):
                out[x, y, a, b] = joint[a][b]
            out[x, y, a, sc.nb - 1] = pa[x][a] - sum(joint[a], Fraction(0))
        for b in range(sc.nb - 1):
            out[x, y, sc.na - 1, b] = pb[y][b] - sum((joint[a][b] for a in range(sc.na - 1)), Fraction(0))
        out[x, y, sc.na - 1, sc.nb - 1] = (
            1 - sum(pa[x], Fraction(0)) - sum(pb[y], Fraction(0)) + sum((sum(row, Fraction(0)) for row in joint), Fraction(0))
        )
    return validate(out, sc, RATIONAL)


# -- tripartite -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TripartiteCorrelation:
    """P(a,b,c|x,y,z) stored as an array indexed [x, y, z, a, b, c]."""

    inputs: tuple[int, int, int]
    outputs: tuple[int, int, int]
    table: np.ndarray
    mode: str = RATIONAL

    @classmethod
    def from_table(cls, raw, mode: str = RATIONAL, tol: float = DEFAULT_TOL) -> "TripartiteCorrelation":
        arr = np.asarray(raw, dtype=object if mode == RATIONAL else np.float64)
        if arr.ndim != 6:
            raise ShapeMismatch(f"tripartite table must be 6-dimensional, got {arr.shape}")
        if mode == RATIONAL:
            conv = np.empty(arr.shape, dtype=object)
            for idx in np.ndindex(arr.shape):
                conv[idx] = to_fraction(arr[idx])
            arr = conv
        if any(v < 0 for v in arr.ravel()):
            raise NegativeEntry("negative tripartite entry")
        sums = arr.sum(axis=(3, 4, 5))
        for idx in np.ndindex(sums.shape):
            off = sums[idx] - 1
            if (mode == RATIONAL and off != 0) or (mode != RATIONAL and abs(off) > tol):
                raise NotNormalized(f"setting (x,y,z)={idx} sums to {sums[idx]}")
        return cls(arr.shape[:3], arr.shape[3:], _freeze(arr), mode)

    def pair(self, parties: str, fixed_input: int = 0) -> Correlation:
        """Two-party marginal box ('AB', 'AC' or 'BC'), third input fixed."""
        t = self.table
        if parties == "AB":
            sub = t[:, :, fixed_input].sum(axis=4)
        elif parties == "AC":
            sub = t[:, fixed_input].sum(axis=3)
        elif parties == "BC":
            sub = t[fixed_input].sum(axis=2)
        else:
            raise ValueError(f"unknown party pair {parties!r}")
        return Correlation(Scenario(*sub.shape), _freeze(np.array(sub)), self.mode)

    def signaling_deviation(self):
        """Largest dependence of any two-party marginal on the third input."""
        t = self.table
        devs = []
        for axis_in, axis_out in ((2, 5), (1, 4), (0, 3)):
            m = t.sum(axis=axis_out)
            devs.append((m.max(axis=axis_in) - m.min(axis=axis_in)).max())
        return max(devs)


# -- JSON box files ---------------------------------------------------------


def to_json_dict(corr: Correlation) -> dict:
    if corr.is_rational:
        table = np.vectorize(fraction_str, otypes=[object])(corr.table).tolist()
    else:
        table = corr.table.tolist()
    return {"schema": 1, "scenario": corr.scenario.to_dict(), "mode": corr.mode, "table": table}


def from_json_dict(doc: dict, tol: float = DEFAULT_TOL) -> Correlation:
    try:
        sc = doc["scenario"]
        scenario = Scenario(int(sc["nx"]), int(sc["ny"]), int(sc["na"]), int(sc["nb"]))
        mode = doc.get("mode", RATIONAL)
        table = doc["table"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed box document: {exc}") from exc
    if mode == RATIONAL:
        table = _map_nested(table, to_fraction)
    return validate(table, scenario, mode, tol)


def _map_nested(obj, func):
    if isinstance(obj, list):
        return [_map_nested(v, func) for v in obj]
    return func(obj)


def dumps_box(corr: Correlation) -> str:
    return json.dumps(to_json_dict(corr))


def loads_box(text: str, tol: float = DEFAULT_TOL) -> Correlation:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("box document must be a JSON object")
    return from_json_dict(doc, tol)


def load_box(path, tol: float = DEFAULT_TOL) -> Correlation:
    with open(path) as fh:
        return loads_box(fh.read(), tol)


def save_box(corr: Correlation, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_box(corr))
        fh.write("\n")


def settings_of(scenario: Scenario) -> Sequence[tuple[int, int]]:
    return list(itertools.product(range(scenario.nx), range(scenario.ny)))
