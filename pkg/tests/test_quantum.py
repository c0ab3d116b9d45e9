import math

import numpy as np
import pytest

from nsbox.correlation import is_no_signaling
from nsbox.errors import BudgetExceeded, NotUnitVector, OutOfRange, ParseError
from nsbox.quantum import (
    SINGLET,
    TSIRELSON,
    Direction,
    SchmidtState,
    SettingFamily,
    chsh_mark_for_settings,
    closed_form_max_chsh,
    family_correlation,
    marks,
    max_chsh,
    named_family,
    schmidt_correlation,
    singlet_correlation,
)

from conftest import unit_vectors

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2)


def projector(n, bit):
    s = 1 - 2 * bit
    return (I2 + s * (n[0] * SX + n[1] * SY + n[2] * SZ)) / 2


def density_oracle(psi, a, b):
    rho = np.outer(psi, psi.conj())
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            out[i, j] = np.trace(rho @ np.kron(projector(a, i), projector(b, j))).real
    return out


def schmidt_vector(theta):
    return np.array([math.cos(theta), 0, 0, math.sin(theta)], dtype=complex)


SINGLET_VECTOR = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


def test_direction_validation():
    with pytest.raises(NotUnitVector):
        Direction(1.0, 1.0, 0.0)
    d = Direction.from_angles(math.pi / 2, 0.0)
    assert d.x == pytest.approx(1.0)
    assert Direction.normalized([0, 0, 2]) == Direction(0.0, 0.0, 1.0)


def test_state_range():
    with pytest.raises(OutOfRange):
        SchmidtState(1.0)


def test_schmidt_matches_density_matrix(rng):
    thetas = rng.uniform(0, math.pi / 4, 10_000)
    A, B = unit_vectors(rng, 10_000), unit_vectors(rng, 10_000)
    for k in range(10_000):
        got = schmidt_correlation(SchmidtState(float(thetas[k])), A[k], B[k])
        want = density_oracle(schmidt_vector(thetas[k]), A[k], B[k])
        assert np.max(np.abs(got - want)) < 1e-12


def test_singlet_matches_density_matrix(rng):
    A, B = unit_vectors(rng, 500), unit_vectors(rng, 500)
    for a, b in zip(A, B):
        assert np.max(np.abs(singlet_correlation(a, b) - density_oracle(SINGLET_VECTOR, a, b))) < 1e-12


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_singlet_rotation_invariance(rng):
    a, b = unit_vectors(rng, 2)
    base = singlet_correlation(a, b)
    for _ in range(100):
        R = random_rotation(rng)
        ra, rb = R @ a, R @ b
        ra, rb = ra / np.linalg.norm(ra), rb / np.linalg.norm(rb)
        assert np.max(np.abs(singlet_correlation(ra, rb) - base)) < 1e-12


def test_quantum_boxes_are_no_signaling(rng):
    for _ in range(200):
        theta = float(rng.uniform(0, math.pi / 4))
        d = [Direction.normalized(v) for v in unit_vectors(rng, 4)]
        fam = SettingFamily("r", (d[0], d[1]), (d[2], d[3]))
        assert is_no_signaling(family_correlation(SchmidtState(theta), fam), 1e-12)


def test_named_families():
    m, box = chsh_mark_for_settings(SINGLET, named_family("chsh-optimal"))
    assert m == pytest.approx(TSIRELSON, abs=1e-12)
    m, _ = chsh_mark_for_settings(SINGLET, named_family("bb84"))
    assert m == pytest.approx(2.0, abs=1e-12)
    # BB84 correlators on the singlet: (-1, 0, 0, -1)
    _, box = chsh_mark_for_settings(SINGLET, named_family("bb84"))
    E = [[box.table[x, y, 0, 0] + box.table[x, y, 1, 1] - box.table[x, y, 0, 1] - box.table[x, y, 1, 0]
          for y in range(2)] for x in range(2)]
    assert np.allclose(E, [[-1, 0], [0, -1]], atol=1e-12)
    with pytest.raises(ParseError):
        named_family("e91")


def test_family_json_round_trip():
    fam = named_family("chsh-protocol")
    assert SettingFamily.from_json(fam.to_json()) == fam


def test_tsirelson_ceiling_on_random_draws(rng):
    n = 100_000
    params = [unit_vectors(rng, n) for _ in range(4)]
    thetas = rng.uniform(0, math.pi / 4, n)
    top = 0.0
    for chunk in np.array_split(np.arange(n), 50):
        theta = float(thetas[chunk[0]])
        top = max(top, float(np.max(marks(SchmidtState(theta), *(p[chunk] for p in params)))))
        top = max(top, float(np.max(marks(SINGLET, *(p[chunk] for p in params)))))
    assert top <= TSIRELSON + 1e-9


@pytest.mark.parametrize("theta", [0.0, 0.1, math.pi / 8, 0.6, math.pi / 4])
def test_search_matches_closed_form(theta):
    state = SchmidtState(theta)
    res = max_chsh(state, restarts=2000, seed=1)
    assert res.value == pytest.approx(closed_form_max_chsh(state), abs=1e-6)
    assert res.value <= TSIRELSON + 1e-9
    m, _ = chsh_mark_for_settings(state, res.family)
    assert m == pytest.approx(res.value, abs=1e-12)


def test_closed_form_anchors():
    assert closed_form_max_chsh(SchmidtState(0.0)) == 3.0
    assert closed_form_max_chsh(SchmidtState(math.pi / 8)) == pytest.approx(2 + math.sqrt(1.5))
    assert closed_form_max_chsh(SINGLET) == TSIRELSON


def test_search_budget():
    with pytest.raises(BudgetExceeded):
        max_chsh(SINGLET, restarts=10, max_restarts=5)


def test_search_is_seeded():
    a = max_chsh(SchmidtState(0.3), restarts=50, seed=9)
    b = max_chsh(SchmidtState(0.3), restarts=50, seed=9)
    assert a.family == b.family
