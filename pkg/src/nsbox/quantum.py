"""Projective measurements on two-qubit pure states.

States are ``cos(theta)|00> + sin(theta)|11>`` with ``theta`` in [0, pi/4], plus
the singlet. Outcome bit 0 stands for spin +1 and bit 1 for spin -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .correlation import Correlation, Scenario, validate
from .errors import BudgetExceeded, NotUnitVector, OutOfRange, ParseError
from .polytope import chsh, evaluate

UNIT_TOL = 1e-12
TSIRELSON = 2 + math.sqrt(2)


@dataclass(frozen=True)
class Direction:
    """Unit vector on the Bloch (Poincare) sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not abs(norm - 1.0) <= UNIT_TOL:
            raise NotUnitVector(f"|({self.x}, {self.y}, {self.z})| = {norm!r}")

    @classmethod
    def normalized(cls, v: Sequence[float]) -> "Direction":
        arr = np.asarray(v, dtype=np.float64)
        n = float(np.linalg.norm(arr))
        if n == 0.0:
            raise NotUnitVector("zero vector has no direction")
        arr = arr / n
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        st = math.sin(theta)
        return cls.normalized((st * math.cos(phi), st * math.sin(phi), math.cos(theta)))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def dot(self, other: "Direction") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)


X = Direction(1.0, 0.0, 0.0)
Y = Direction(0.0, 1.0, 0.0)
Z = Direction(0.0, 0.0, 1.0)


def as_direction(v) -> Direction:
    if isinstance(v, Direction):
        return v
    try:
        vals = [float(c) for c in v]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"not a 3-vector: {v!r}") from exc
    if len(vals) != 3:
        raise ParseError(f"not a 3-vector: {v!r}")
    return Direction(*vals)


@dataclass(frozen=True)
class SchmidtState:
    theta: float
    singlet: bool = False

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= math.pi / 4 + 1e-9):
            raise OutOfRange(f"Schmidt angle {self.theta} outside [0, pi/4]")

    @classmethod
    def singlet_state(cls) -> "SchmidtState":
        return cls(math.pi / 4, singlet=True)

    @property
    def maximally_entangled(self) -> bool:
        return self.singlet or abs(self.theta - math.pi / 4) < 1e-12


SINGLET = SchmidtState.singlet_state()


@dataclass(frozen=True)
class SettingFamily:
    """One direction per input for each party, with optional output flips."""

    name: str
    alice: tuple[Direction, ...]
    bob: tuple[Direction, ...]
    alice_flips: tuple[int, ...] = field(default=None)
    bob_flips: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        if self.alice_flips is None:
            object.__setattr__(self, "alice_flips", (0,) * len(self.alice))
        if self.bob_flips is None:
            object.__setattr__(self, "bob_flips", (0,) * len(self.bob))
        if len(self.alice_flips) != len(self.alice) or len(self.bob_flips) != len(self.bob):
            raise ValueError("one output flip per input is required")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "alice": [list(d.as_tuple()) for d in self.alice],
            "bob": [list(d.as_tuple()) for d in self.bob],
            "alice_flips": list(self.alice_flips),
            "bob_flips": list(self.bob_flips),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SettingFamily":
        try:
            return cls(
                doc.get("name", "inline"),
                tuple(as_direction(v) for v in doc["alice"]),
                tuple(as_direction(v) for v in doc["bob"]),
                tuple(int(f) for f in doc["alice_flips"]) if "alice_flips" in doc else None,
                tuple(int(f) for f in doc["bob_flips"]) if "bob_flips" in doc else None,
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed setting family: {exc}") from exc


FAMILY_NAMES = ("chsh-optimal", "chsh-protocol", "bb84")


def named_family(name: str, state: SchmidtState = SINGLET) -> SettingFamily:
    """Named families: Alice measures z then x.

    ``chsh-optimal`` and ``chsh-protocol`` give Bob the +45 and -45 degree
    directions in the x-z plane; for the singlet Bob's outputs are flipped so
    that its anticorrelation maps onto the 'same answer' success convention.
    ``bb84`` gives Bob z then x, without flips.
    """
    s = 1 / math.sqrt(2)
    plus45 = Direction(s, 0.0, s)
    minus45 = Direction(-s, 0.0, s)
    if name in ("chsh-optimal", "chsh-protocol"):
        flip = 1 if state.singlet else 0
        return SettingFamily(name, (Z, X), (plus45, minus45), (0, 0), (flip, flip))
    if name == "bb84":
        return SettingFamily(name, (Z, X), (Z, X))
    raise ParseError(f"unknown setting family {name!r}; choose from {', '.join(FAMILY_NAMES)}")


def _distribution(one_a: float, one_b: float, corr: float) -> np.ndarray:
    out = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            sa, sb = 1 - 2 * a, 1 - 2 * b
            out[a, b] = 0.25 * (1 + sa * one_a + sb * one_b + sa * sb * corr)
    return out


def singlet_correlation(a, b) -> np.ndarray:
    """Outcome distribution P[a_bit, b_bit] = (1 - s_a s_b a.b) / 4."""
    a, b = as_direction(a), as_direction(b)
    return _distribution(0.0, 0.0, -a.dot(b))


def schmidt_correlation(state: SchmidtState, a, b) -> np.ndarray:
    a, b = as_direction(a), as_direction(b)
    if state.singlet:
        return singlet_correlation(a, b)
    c2, s2 = math.cos(2 * state.theta), math.sin(2 * state.theta)
    corr = a.z * b.z + s2 * (a.x * b.x - a.y * b.y)
    return _distribution(c2 * a.z, c2 * b.z, corr)


def family_correlation(state: SchmidtState, family: SettingFamily) -> Correlation:
    sc = Scenario(len(family.alice), len(family.bob), 2, 2)
    table = np.empty(sc.shape)
    for x, ad in enumerate(family.alice):
        for y, bd in enumerate(family.bob):
            dist = schmidt_correlation(state, ad, bd)
            for a in range(2):
                for b in range(2):
                    table[x, y, a ^ family.alice_flips[x], b ^ family.bob_flips[y]] = dist[a, b]
    return validate(table, sc, "float")


def chsh_mark_for_settings(state: SchmidtState, family: SettingFamily) -> tuple[float, Correlation]:
    if len(family.alice) != 2 or len(family.bob) != 2:
        raise ValueError("CHSH needs exactly two inputs per party")
    corr = family_correlation(state, family)
    return evaluate(chsh(), corr), corr


def closed_form_max_chsh(state: SchmidtState) -> float:
    """2 + sqrt(1 + sin^2 2theta); the singlet gives the Tsirelson value."""
    if state.singlet:
        return TSIRELSON
    return 2 + math.sqrt(1 + math.sin(2 * state.theta) ** 2)


# -- numerical search -------------------------------------------------------


def correlator_matrix(state: SchmidtState) -> np.ndarray:
    """G with <A(a) B(b)> = a^T G b."""
    if state.singlet:
        return -np.eye(3)
    s2 = math.sin(2 * state.theta)
    return np.diag([s2, -s2, 1.0])


def marks(state: SchmidtState, a0, a1, b0, b1) -> np.ndarray:
    """CHSH marks for batches of unit vectors, each of shape (n, 3)."""
    G = correlator_matrix(state)
    ga0, ga1 = a0 @ G, a1 @ G
    e = lambda ga, b: np.einsum("ij,ij->i", ga, b)
    return 2 + 0.5 * (e(ga0, b0) + e(ga0, b1) + e(ga1, b0) - e(ga1, b1))


@dataclass(frozen=True)
class SearchResult:
    value: float
    family: SettingFamily
    restarts: int
    closed_form: float


def _best_response(target: np.ndarray, current: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(target, axis=1, keepdims=True)
    safe = norm[:, 0] > 1e-300
    out = current.copy()
    out[safe] = target[safe] / norm[safe]
    return out


def max_chsh(
    state: SchmidtState,
    restarts: int = 10_000,
    seed: int = 0,
    sweeps: int = 60,
    max_restarts: int = 1_000_000,
) -> SearchResult:
    """Largest CHSH mark over projective settings, by random-restart search.

    Each restart starts from four independent uniform directions. The mark is
    bilinear in the two parties' directions, so each half-step replaces one
    party's pair by its exact best response to the other's; the mark never
    decreases along the way.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    if restarts > max_restarts:
        raise BudgetExceeded(f"{restarts} restarts exceed the budget of {max_restarts}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((4, restarts, 3))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    a0, a1, b0, b1 = v
    G = correlator_matrix(state)
    for _ in range(sweeps):
        a0 = _best_response((b0 + b1) @ G.T, a0)
        a1 = _best_response((b0 - b1) @ G.T, a1)
        b0 = _best_response((a0 + a1) @ G, b0)
        b1 = _best_response((a0 - a1) @ G, b1)
    values = marks(state, a0, a1, b0, b1)
    i = int(np.argmax(values))
    d = [Direction.normalized(u[i]) for u in (a0, a1, b0, b1)]
    family = SettingFamily("search-optimum", (d[0], d[1]), (d[2], d[3]))
    return SearchResult(float(values[i]), family, restarts, closed_form_max_chsh(state))
