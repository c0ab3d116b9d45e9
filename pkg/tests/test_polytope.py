import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from nsbox.correlation import Scenario, mix, pr_box, uniform_box, validate
from nsbox.errors import CapExceeded, NotNoSignaling, UnsupportedScenario
from nsbox.polytope import (
    NONLOCAL_INDICES,
    BellFunctional,
    Decomposition,
    NonlocalityCertificate,
    affine_dimension,
    chsh,
    chsh_facets,
    decompose_ns,
    enumerate_deterministic,
    evaluate,
    facet_values,
    flip_box,
    is_local,
    local_bound,
    ns_vertex_list,
    verify_vertex,
)

from conftest import VERTICES, ns_boxes, random_ns_box


def iso(p):
    p = Fraction(p)
    return mix([((1 + p) / 2, pr_box()), ((1 - p) / 2, uniform_box())])


def test_sixteen_strategies_in_lexicographic_order():
    strategies = enumerate_deterministic(Scenario.binary())
    assert len(strategies) == 16
    assert [s.label for s in strategies[:3]] == ["A00B00", "A00B01", "A00B10"]
    assert strategies[-1].label == "A11B11"


def test_enumeration_cap():
    with pytest.raises(CapExceeded):
        enumerate_deterministic(Scenario(20, 20, 2, 2))


def test_chsh_bounds_and_values():
    # hand-counted: every deterministic strategy wins at most 3 of 4 settings
    value, best = local_bound(chsh())
    assert value == 3
    assert best.label == "A00B00"
    assert evaluate(chsh(), pr_box()) == 4
    assert evaluate(chsh(), uniform_box()) == 2
    with pytest.raises(ValueError):
        BellFunctional(chsh().coefficients, Fraction(5), None, Fraction(4), "bad")


def test_every_chsh_class_facet_has_local_bound_three():
    assert [local_bound(f)[0] for f in chsh_facets()] == [3] * 8


@pytest.mark.parametrize("k", range(11))
def test_isotropic_locality_threshold(k):
    p = Fraction(k, 10)
    box = iso(p)
    assert evaluate(chsh(), box) == 3 + p
    result = is_local(box)
    if p == 0:
        assert isinstance(result, Decomposition)
        assert result.residual == 0
        assert result.reconstruct() == box
    else:
        assert isinstance(result, NonlocalityCertificate)
        assert result.functional.name == "CHSH[000]"
        assert result.margin == p


def test_slightly_negative_isotropic_is_local():
    assert isinstance(is_local(iso(Fraction(-1, 10))), Decomposition)


def test_signaling_box_is_rejected():
    t = np.zeros((2, 2, 2, 2), dtype=object)
    for x, y in itertools.product(range(2), repeat=2):
        t[x, y, y, x] = 1
    with pytest.raises(NotNoSignaling):
        is_local(validate(t))


def fine_local(box):
    """Independent oracle: binary NS box is local iff all 8 CHSH facets <= 3."""
    return max(facet_values(box)) <= 3


def scipy_local(box):
    boxes = [v.box for v in VERTICES[:16]]
    A = np.array([[float(b.table.ravel()[k]) for b in boxes] for k in range(16)])
    res = linprog(np.zeros(16), A_eq=A, b_eq=box.as_float().table.ravel(),
                  bounds=[(0, None)] * 16, method="highs")
    return res.status == 0


@settings(max_examples=150, deadline=None)
@given(ns_boxes())
def test_is_local_matches_facet_oracle(box):
    result = is_local(box)
    assert isinstance(result, Decomposition) == fine_local(box)
    if isinstance(result, Decomposition):
        assert result.reconstruct() == box
    else:
        assert evaluate(result.functional, box) == result.value
        assert result.value > result.functional.local_bound


def test_is_local_matches_scipy_away_from_boundary(rng):
    for _ in range(60):
        box = random_ns_box(rng)
        m = max(facet_values(box))
        if abs(m - 3) < Fraction(1, 100):
            continue
        assert isinstance(is_local(box), Decomposition) == scipy_local(box)


def test_nonbinary_farkas_certificate():
    # PR box embedded in a 3-input scenario (third input: constant outputs)
    sc = Scenario(3, 2, 2, 2)
    t = np.zeros(sc.shape, dtype=object)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        t[x, y, a, b] = pr_box()[x, y, a, b]
    for y in range(2):
        t[2, y, 0, 0] = Fraction(1, 2)
        t[2, y, 0, 1] = Fraction(1, 2)
    box = validate(t, sc)
    cert = is_local(box)
    assert isinstance(cert, NonlocalityCertificate)
    assert cert.functional.local_bound == local_bound(cert.functional)[0]
    assert evaluate(cert.functional, box) > cert.functional.local_bound


def test_vertex_census():
    verts = ns_vertex_list()
    assert len(verts) == 24
    assert sum(v.is_local for v in verts) == 16
    assert {v.index for v in verts if not v.is_local} == NONLOCAL_INDICES
    assert verts[16].box == pr_box()
    assert all(verify_vertex(v.box) for v in verts)
    assert affine_dimension([v.box for v in verts]) == 8
    with pytest.raises(UnsupportedScenario):
        ns_vertex_list(Scenario(3, 2, 2, 2))


def ns_rank_oracle(box):
    """Vertex iff NS equalities plus the active nonnegativity constraints have rank 16."""
    rows = []
    for x, y in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[x, y] = 1
        rows.append(r.ravel())
    for x, a in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[x, 0, a, :] = 1
        r[x, 1, a, :] = -1
        rows.append(r.ravel())
    for y, b in itertools.product(range(2), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[0, y, :, b] = 1
        r[1, y, :, b] = -1
        rows.append(r.ravel())
    for k, v in enumerate(box.table.ravel()):
        if v == 0:
            e = np.zeros(16)
            e[k] = 1
            rows.append(e)
    return np.linalg.matrix_rank(np.array(rows)) == 16


def test_verify_vertex_matches_rank_oracle(rng):
    cases = [v.box for v in VERTICES] + [iso(Fraction(1, 2)), uniform_box()]
    cases += [random_ns_box(rng, support=rng.choice(24, size=2, replace=False)) for _ in range(30)]
    for box in cases:
        assert verify_vertex(box) == ns_rank_oracle(box)


def test_half_pr_half_noise_is_not_a_vertex():
    assert not verify_vertex(iso(0))


def test_decompose_ns_minimizes_nonlocal_weight():
    for k in range(11):
        p = Fraction(k, 10)
        dec = decompose_ns(iso(p))
        assert dec.residual == 0
        assert dec.nonlocal_weight == p


@settings(max_examples=100, deadline=None)
@given(ns_boxes())
def test_decompose_ns_reconstructs_exactly(box):
    dec = decompose_ns(box)
    assert dec.residual == 0
    assert dec.reconstruct() == box
    assert all(w >= 0 for w in dec.weights) and sum(dec.weights) == 1


flips = st.tuples(st.integers(0, 1), st.integers(0, 1),
                  st.tuples(st.integers(0, 1), st.integers(0, 1)),
                  st.tuples(st.integers(0, 1), st.integers(0, 1)))


@settings(max_examples=80, deadline=None)
@given(ns_boxes(), flips)
def test_relabeling_permutes_facet_values(box, f):
    flipped = flip_box(box, *f)
    assert sorted(facet_values(flipped)) == sorted(facet_values(box))
    assert isinstance(is_local(flipped), Decomposition) == isinstance(is_local(box), Decomposition)


def test_relabelings_map_vertex_set_to_itself():
    boxes = {v.box for v in VERTICES}
    for f in itertools.product(range(2), range(2), itertools.product(range(2), repeat=2),
                               itertools.product(range(2), repeat=2)):
        assert {flip_box(b, *f) for b in boxes} == boxes


def test_perfect_agreement_on_equal_questions_does_not_force_locality():
    # a^b = xy^y agrees whenever x == y yet is a nonlocal vertex
    table = np.empty((2, 2, 2, 2), dtype=object)
    for x, y, a, b in itertools.product(range(2), repeat=4):
        table[x, y, a, b] = Fraction(1, 2) if a ^ b == (x & y) ^ y else Fraction(0)
    box = validate(table, Scenario.binary(), "rational")
    assert all(box.table[x, x, a, a] * 2 == 1 for x in range(2) for a in range(2))
    assert verify_vertex(box)
    assert isinstance(is_local(box), NonlocalityCertificate)
    assert any(v.box == box for v in ns_vertex_list())
