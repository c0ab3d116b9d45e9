"""Local and no-signaling polytopes.

Deterministic strategies span the local polytope; in the binary scenario the
no-signaling polytope adds eight PR-class vertices, one above each CHSH-class
facet. Every membership and decomposition question is answered by the exact
LP in :mod:`nsbox.lp`, so boundary points (for example the isotropic box at
p = 0, which sits on the CHSH facet) are classified correctly.

Canonical vertex order (binary scenario): indices 0-15 are deterministic
strategies in lexicographic order of ``(a(0), a(1), b(0), b(1))``; indices
16-23 are PR-class boxes ``a xor b = xy xor alpha*x xor beta*y xor gamma``
in lexicographic order of ``(alpha, beta, gamma)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lp
from .correlation import (
    Correlation,
    Scenario,
    _freeze,
    fraction_str,
    mix,
    rationalize,
    require_no_signaling,
)
from .errors import CapExceeded, Infeasible, ScenarioMismatch, UnsupportedScenario

DEFAULT_CAP = 10**6
TSIRELSON_MARK = 2 + math.sqrt(2)


@dataclass(frozen=True)
class DeterministicStrategy:
    """Response functions ``a = alice[x]`` and ``b = bob[y]``."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def box(self, scenario: Scenario) -> Correlation:
        if len(self.alice) != scenario.nx or len(self.bob) != scenario.ny:
            raise ScenarioMismatch("strategy does not match scenario inputs")
        table = np.full(scenario.shape, Fraction(0), dtype=object)
        for x, y in itertools.product(range(scenario.nx), range(scenario.ny)):
            table[x, y, self.alice[x], self.bob[y]] = Fraction(1)
        return Correlation(scenario, _freeze(table), "rational")

    @property
    def label(self) -> str:
        return f"A{''.join(map(str, self.alice))}B{''.join(map(str, self.bob))}"


def enumerate_deterministic(scenario: Scenario, cap: int = DEFAULT_CAP) -> list[DeterministicStrategy]:
    count = scenario.na**scenario.nx * scenario.nb**scenario.ny
    if count > cap:
        raise CapExceeded(f"{count} deterministic strategies exceed cap {cap}")
    alice_maps = itertools.product(range(scenario.na), repeat=scenario.nx)
    bob_maps = list(itertools.product(range(scenario.nb), repeat=scenario.ny))
    return [DeterministicStrategy(am, bm) for am in alice_maps for bm in bob_maps]


@dataclass(frozen=True, eq=False)
class BellFunctional:
    """Linear functional sum c(x,y,a,b) P(a,b|x,y) with known bounds.

    ``quantum_bound`` may be None when unknown.
    """

    coefficients: np.ndarray
    local_bound: Fraction | None = None
    quantum_bound: float | None = None
    ns_bound: Fraction | None = None
    name: str = ""

    def __post_init__(self):
        bounds = [b for b in (self.local_bound, self.quantum_bound, self.ns_bound) if b is not None]
        if any(lo > hi + 1e-12 for lo, hi in zip(bounds, bounds[1:])):
            raise ValueError(f"bounds out of order for {self.name or 'functional'}: {bounds}")

    @property
    def scenario(self) -> Scenario:
        return Scenario(*self.coefficients.shape)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "coefficients": np.vectorize(fraction_str, otypes=[object])(self.coefficients).tolist(),
            "local_bound": None if self.local_bound is None else fraction_str(self.local_bound),
            "quantum_bound": self.quantum_bound,
            "ns_bound": None if self.ns_bound is None else fraction_str(self.ns_bound),
        }


def chsh(alpha: int = 0, beta: int = 0, gamma: int = 0) -> BellFunctional:
    """CHSH-class mark: success probability sum of a xor b = xy xor alpha x xor beta y xor gamma."""
    coeffs = np.full((2, 2, 2, 2), Fraction(0), dtype=object)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if a ^ b == (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma:
            coeffs[x, y, a, b] = Fraction(1)
    coeffs.setflags(write=False)
    return BellFunctional(coeffs, Fraction(3), TSIRELSON_MARK, Fraction(4), f"CHSH[{alpha}{beta}{gamma}]")


CHSH_PATTERNS = tuple(itertools.product(range(2), repeat=3))


def chsh_facets() -> list[BellFunctional]:
    return [chsh(*pat) for pat in CHSH_PATTERNS]


def _check_scenario(functional: BellFunctional, corr: Correlation) -> None:
    if functional.coefficients.shape != corr.scenario.shape:
        raise ScenarioMismatch(f"functional shape {functional.coefficients.shape} vs box {corr.scenario.shape}")


def evaluate(functional: BellFunctional, corr: Correlation):
    _check_scenario(functional, corr)
    if corr.is_rational:
        return sum((c * p for c, p in zip(functional.coefficients.ravel(), corr.table.ravel()) if c), Fraction(0))
    coeffs = functional.coefficients.astype(np.float64)
    return float(np.sum(coeffs * corr.table))


def _evaluate_strategy(functional: BellFunctional, s: DeterministicStrategy):
    c = functional.coefficients
    return sum(
        (c[x, y, s.alice[x], s.bob[y]] for x in range(len(s.alice)) for y in range(len(s.bob))),
        Fraction(0),
    )


def local_bound(functional: BellFunctional, cap: int = DEFAULT_CAP) -> tuple[Fraction, DeterministicStrategy]:
    """Maximum over deterministic strategies; the first maximizer in lexicographic order."""
    best_value, best = None, None
    for s in enumerate_deterministic(functional.scenario, cap):
        v = _evaluate_strategy(functional, s)
        if best_value is None or v > best_value:
            best_value, best = v, s
    return best_value, best


def facet_values(corr: Correlation) -> list:
    """Values of the eight CHSH-class functionals, ordered by (alpha, beta, gamma)."""
    return [evaluate(f, corr) for f in chsh_facets()]


# -- decompositions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Convex weights over a list of vertex boxes."""

    weights: tuple[Fraction, ...]
    labels: tuple[str, ...]
    components: tuple[Correlation, ...]
    indices: tuple[int, ...]
    residual: object = Fraction(0)
    nonlocal_indices: frozenset = frozenset()

    @property
    def nonlocal_weight(self) -> Fraction:
        return sum((w for w, i in zip(self.weights, self.indices) if i in self.nonlocal_indices), Fraction(0))

    def reconstruct(self) -> Correlation:
        return mix(zip(self.weights, self.components))

    def support(self) -> list[tuple[int, str, Fraction]]:
        return [(i, lab, w) for i, lab, w in zip(self.indices, self.labels, self.weights) if w]

    def to_json(self) -> dict:
        return {
            "type": "decomposition",
            "weights": [
                {"index": i, "label": lab, "weight": fraction_str(w)} for i, lab, w in self.support()
            ],
            "nonlocal_weight": fraction_str(self.nonlocal_weight),
            "residual": fraction_str(self.residual),
        }


@dataclass(frozen=True, eq=False)
class NonlocalityCertificate:
    functional: BellFunctional
    value: Fraction
    margin: Fraction

    def __post_init__(self):
        if not self.margin > 0:
            raise ValueError("certificate margin must be positive")

    def to_json(self) -> dict:
        return {
            "type": "certificate",
            "functional": self.functional.name,
            "value": fraction_str(self.value),
            "local_bound": fraction_str(self.functional.local_bound),
            "margin": fraction_str(self.margin),
        }


def _exact(corr: Correlation) -> Correlation:
    return corr if corr.is_rational else rationalize(corr)


def _columns(boxes: Sequence[Correlation]) -> list[list[Fraction]]:
    """Equality rows: one per table cell, one column per vertex box."""
    flat = [b.table.ravel() for b in boxes]
    ncell = len(flat[0])
    return [[f[k] for f in flat] for k in range(ncell)]


def _residual(target: Correlation, weights, boxes) -> Fraction:
    recon = sum((w * b.table for w, b in zip(weights, boxes) if w), np.full(target.scenario.shape, Fraction(0), dtype=object))
    return max(abs(v) for v in (recon - target.table).ravel())


def is_local(corr: Correlation, cap: int = DEFAULT_CAP) -> Decomposition | NonlocalityCertificate:
    """Exact membership test for the local polytope.

    Returns a decomposition over deterministic strategies, or a violated
    Bell functional. In the binary scenario the certificate is the most
    violated CHSH-class facet (ties broken by lexicographic pattern);
    otherwise it is the Farkas functional of the infeasible LP.
    """
    require_no_signaling(corr)
    corr = _exact(corr)
    strategies = enumerate_deterministic(corr.scenario, cap)
    boxes = [s.box(corr.scenario) for s in strategies]
    res = lp.solve(None, _columns(boxes), list(corr.table.ravel()), n=len(boxes))
    if res.feasible:
        return Decomposition(
            res.x, tuple(s.label for s in strategies), tuple(boxes), tuple(range(len(boxes))),
            _residual(corr, res.x, boxes),
        )
    if corr.scenario.is_binary:
        values = facet_values(corr)
        best = max(range(8), key=lambda k: (values[k], -k))
        if values[best] <= 3:
            raise Infeasible("LP rejects locality but no CHSH-class facet is violated")
        f = chsh(*CHSH_PATTERNS[best])
        return NonlocalityCertificate(f, values[best], values[best] - f.local_bound)
    coeffs = np.empty(corr.scenario.shape, dtype=object)
    coeffs.ravel()[:] = res.farkas
    coeffs.setflags(write=False)
    provisional = BellFunctional(coeffs, name="farkas")
    bound, _ = local_bound(provisional, cap)
    f = BellFunctional(coeffs, bound, None, None, "farkas")
    value = evaluate(f, corr)
    return NonlocalityCertificate(f, value, value - bound)


# -- no-signaling vertices (binary scenario) -------------------------------


@dataclass(frozen=True, eq=False)
class NSVertex:
    index: int
    box: Correlation
    strategy: DeterministicStrategy | None = None
    pattern: tuple[int, int, int] | None = None

    @property
    def is_local(self) -> bool:
        return self.strategy is not None

    @property
    def label(self) -> str:
        if self.strategy is not None:
            return self.strategy.label
        return "PR[{}{}{}]".format(*self.pattern)


def pr_class_box(alpha: int, beta: int, gamma: int) -> Correlation:
    table = np.empty((2, 2, 2, 2), dtype=object)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        ok = a ^ b == (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma
        table[x, y, a, b] = Fraction(1, 2) if ok else Fraction(0)
    return Correlation(Scenario.binary(), _freeze(table), "rational")


def ns_vertex_list(scenario: Scenario | None = None) -> list[NSVertex]:
    scenario = scenario or Scenario.binary()
    if not scenario.is_binary:
        raise UnsupportedScenario("the vertex list is only available for the binary scenario")
    out = [NSVertex(i, s.box(scenario), strategy=s) for i, s in enumerate(enumerate_deterministic(scenario))]
    for k, pat in enumerate(CHSH_PATTERNS):
        out.append(NSVertex(16 + k, pr_class_box(*pat), pattern=pat))
    return out


NONLOCAL_INDICES = frozenset(range(16, 24))


def _require_binary(corr: Correlation) -> None:
    if not corr.scenario.is_binary:
        raise UnsupportedScenario("operation requires the binary scenario")


def _vertex_lp(corr: Correlation, objectives):
    verts = ns_vertex_list()
    boxes = [v.box for v in verts]
    res = lp.solve(objectives, _columns(boxes), list(corr.table.ravel()), n=24)
    return verts, res


def decomposition_from_weights(corr: Correlation, weights) -> Decomposition:
    verts = ns_vertex_list()
    boxes = tuple(v.box for v in verts)
    return Decomposition(
        tuple(weights), tuple(v.label for v in verts), boxes, tuple(range(24)),
        _residual(corr, weights, boxes), NONLOCAL_INDICES,
    )


def decompose_ns(corr: Correlation) -> Decomposition:
    """Exact decomposition over the 24 vertices with minimal nonlocal weight."""
    _require_binary(corr)
    require_no_signaling(corr)
    corr = _exact(corr)
    nonlocal_cost = [0] * 16 + [1] * 8
    _, res = _vertex_lp(corr, [nonlocal_cost])
    if not res.feasible:
        raise Infeasible("no-signaling box failed to decompose over the vertex list")
    return decomposition_from_weights(corr, res.x)


def verify_vertex(corr: Correlation) -> bool:
    """True iff the box is one of the 24 candidates and cannot be written
    as a mixture that puts weight < 1 on itself."""
    _require_binary(corr)
    require_no_signaling(corr)
    corr = _exact(corr)
    verts = ns_vertex_list()
    own = [v.index for v in verts if v.box == corr]
    if not own:
        return False
    cost = [int(i == own[0]) for i in range(24)]
    _, res = _vertex_lp(corr, [cost])
    if not res.feasible:
        raise Infeasible("candidate vertex failed to decompose over the vertex list")
    return res.objectives[0] == 1


def exact_rank(rows: Sequence[Sequence]) -> int:
    mat = [[Fraction(v) for v in row] for row in rows]
    rank, ncol = 0, len(mat[0]) if mat else 0
    for col in range(ncol):
        piv = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / mat[rank][col]
                mat[r] = [u - f * v for u, v in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def affine_dimension(boxes: Sequence[Correlation]) -> int:
    base = boxes[0].table.ravel()
    return exact_rank([list(b.table.ravel() - base) for b in boxes[1:]])


# -- symmetries -------------------------------------------------------------


def flip_box(corr: Correlation, flip_x=0, flip_y=0, flip_a=(0, 0), flip_b=(0, 0)) -> Correlation:
    """Relabel inputs and (input-dependent) outputs of a binary box."""
    _require_binary(corr)
    return corr.relabel(
        lambda x, y, a, b: (x ^ flip_x, y ^ flip_y, a ^ flip_a[x], b ^ flip_b[y])
    )
