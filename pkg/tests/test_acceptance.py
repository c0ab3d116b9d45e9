"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from nsbox.correlation import Scenario, mix, pr_box
from nsbox.crypto import bb84_vs_chsh_comparison, crossing, eve_individual_attack, info_disturbance_check, isotropic
from nsbox.games import coin_game, estimate, exam1_guess_game, random_direction_pairs
from nsbox.monogamy import cloning_feasible, monogamy_max
from nsbox.polytope import (
    Decomposition,
    affine_dimension,
    chsh,
    decompose_ns,
    enumerate_deterministic,
    evaluate,
    is_local,
    ns_vertex_list,
    verify_vertex,
)
from nsbox.quantum import (
    SINGLET,
    TSIRELSON,
    SchmidtState,
    chsh_mark_for_settings,
    closed_form_max_chsh,
    max_chsh,
    named_family,
)

ROUNDS = 10**6
SIGMA = 4.0


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} {detail}".rstrip())
        assert ok, f"criterion {number} failed: {detail}"
    return emit


# stochastic runs are shared with criterion 12
_RUNS = {}


def stochastic_runs(workers):
    if workers not in _RUNS:
        pairs = random_direction_pairs(20, seed=2024)
        _RUNS[workers] = {
            "toner-bacon": estimate("toner-bacon", pairs, ROUNDS, seed=7, sigma=SIGMA, workers=workers),
            "prbox-singlet": estimate("prbox-singlet", pairs, ROUNDS, seed=7, sigma=SIGMA, workers=workers),
            "coin": coin_game(ROUNDS, seed=8, sigma=SIGMA, workers=workers),
            "exam": exam1_guess_game(ROUNDS, seed=9, sigma=SIGMA, workers=workers),
        }
    return _RUNS[workers]


def test_c01_local_bound(verdict):
    import time

    t0 = time.perf_counter()
    strategies = enumerate_deterministic(Scenario.binary())
    marks = [evaluate(chsh(), s.box(Scenario.binary())) for s in strategies]
    elapsed = time.perf_counter() - t0
    ok = len(strategies) == 16 and max(marks) == Fraction(3) and elapsed < 1.0
    verdict(1, "local bound", ok, f"max over {len(strategies)} strategies = {max(marks)} in {elapsed:.3f}s")


def test_c02_pr_maximum(verdict):
    m = evaluate(chsh(), pr_box())
    verdict(2, "PR maximum", m == 4 and isinstance(m, Fraction), f"M(PR) = {m}")


def test_c03_tsirelson(verdict):
    m, _ = chsh_mark_for_settings(SINGLET, named_family("chsh-optimal"))
    rng = np.random.default_rng(3)
    states = [SINGLET] + [SchmidtState(float(t)) for t in rng.uniform(0, math.pi / 4, 5)]
    searched = [max_chsh(s, restarts=10_000, seed=k) for k, s in enumerate(states)]
    top = max(r.value for r in searched)
    gap = max(abs(r.value - closed_form_max_chsh(s)) for r, s in zip(searched, states))
    ok = abs(m - TSIRELSON) <= 1e-9 and top <= TSIRELSON + 1e-6 and gap <= 1e-6
    verdict(3, "Tsirelson", ok,
            f"singlet M - (2+sqrt2) = {m - TSIRELSON:.2e}; search max {top:.12f}; closed-form gap {gap:.1e}")


def test_c04_isotropic_algebra(verdict):
    exact = True
    local_ok = True
    for k in range(11):
        p = Fraction(k, 10)
        box = isotropic(p).correlation
        exact &= evaluate(chsh(), box) == 3 + p
        local_ok &= isinstance(is_local(box), Decomposition) == (p <= 0)
    m = evaluate(chsh(), isotropic(math.sqrt(2) - 1).correlation)
    ok = exact and local_ok and abs(m - TSIRELSON) <= 1e-12
    verdict(4, "isotropic algebra", ok,
            f"M = 3+p exact: {exact}; local iff p<=0: {local_ok}; M(sqrt2-1) err {abs(m - TSIRELSON):.1e}")


def test_c05_polytope_census(verdict):
    verts = ns_vertex_list()
    all_vertices = all(verify_vertex(v.box) for v in verts)
    dim = affine_dimension([v.box for v in verts])
    rng = np.random.default_rng(5)
    worst = Fraction(0)
    for _ in range(1000):
        support = rng.choice(24, size=int(rng.integers(1, 25)), replace=False)
        w = rng.integers(1, 50, size=len(support))
        box = mix([(Fraction(int(k), int(w.sum())), verts[i].box) for k, i in zip(w, support)])
        dec = decompose_ns(box)
        worst = max(worst, dec.residual)
        if dec.reconstruct() != box:
            worst = max(worst, Fraction(1))
    ok = len(verts) == 24 and all_vertices and dim == 8 and worst == 0
    verdict(5, "polytope census", ok,
            f"{len(verts)} vertices, all verified: {all_vertices}, dim {dim}, max residual over 1000 boxes {worst}")


def test_c06_monogamy(verdict):
    rows = [(m, monogamy_max(m)) for m in (Fraction(2), Fraction(5, 2), Fraction(3), Fraction(7, 2), Fraction(4))]
    law = all(mac == min(4, 6 - mab) for mab, mac in rows)
    no_double = all(mac <= 3 for mab, mac in rows if mab > 3)
    clone = cloning_feasible(4, 4)
    w = clone.witness or {}
    ok = law and no_double and not clone.feasible and w.get("signals") and w.get("bc_parity_by_x") == {0: 0, 1: 1}
    table = ", ".join(f"{mab}->{mac}" for mab, mac in rows)
    verdict(6, "monogamy", ok, f"[{table}]; cloning(4,4) feasible={clone.feasible}; b^c=x witness={w.get('signals')}")


def test_c07_simulation_fidelity(verdict):
    runs = stochastic_runs(1)
    tb, cg = runs["toner-bacon"], runs["prbox-singlet"]
    n = 20 * ROUNDS
    resources = (tb.report.extra["totals"] == {"rounds": n, "bits_communicated": n, "prbox_uses": 0}
                 and cg.report.extra["totals"] == {"rounds": n, "bits_communicated": 0, "prbox_uses": n})
    ok = tb.report.passed and cg.report.passed and resources
    verdict(7, "simulation fidelity", ok,
            f"max|z| TB {tb.report.max_abs_z:.2f}, PR-model {cg.report.max_abs_z:.2f}; resources exact: {resources}")


def test_c08_coin_game(verdict):
    _, rep = stochastic_runs(1)["coin"]
    ok = rep.violations == 0 and rep.passed
    verdict(8, "coin game", ok,
            f"violations {rep.violations}, heads z {rep.heads_z[0]:.2f}/{rep.heads_z[1]:.2f}, CHSH {rep.chsh} (z {rep.chsh_z:.2f})")


def test_c09_exam1(verdict):
    _, rep = stochastic_runs(1)["exam"]
    verdict(9, "exam #1 guessing", rep.passed, f"success {rep.frequency:.6f} vs 0.5 (z {rep.z:.2f})")


def test_c10_crypto(verdict):
    attack_ok = identity_ok = True
    for k in range(11):
        p = Fraction(k, 10)
        box = isotropic(p).correlation
        attack_ok &= eve_individual_attack(box).i_be == (1 - p) / 2
        rep = info_disturbance_check(box)
        identity_ok &= rep.residual0 == 0 and rep.residual1 == 0
    x = float(crossing(0, 1, 1e-6))
    ok = attack_ok and identity_ok and 0.308 <= x <= 0.328
    verdict(10, "crypto", ok,
            f"I(B;E)=(1-p)/2 exact: {attack_ok}; identity residual 0: {identity_ok}; crossing {x:.6f}")


def test_c11_protocol_comparison(verdict):
    rep = bb84_vs_chsh_comparison()
    bb, ch = rep["bb84"]["chsh"], rep["chsh_protocol"]["chsh"]
    ok = abs(bb - 2) <= 1e-9 and abs(ch - TSIRELSON) <= 1e-9
    verdict(11, "protocol comparison", ok,
            f"BB84 M = {bb:.12f} (secure={rep['bb84']['secure']}), CHSH protocol M = {ch:.12f}")


def test_c12_reproducibility(verdict):
    base, other = stochastic_runs(1), stochastic_runs(3)
    same = []
    for key in ("toner-bacon", "prbox-singlet"):
        same.append(base[key].transcript == other[key].transcript
                    and base[key].report.to_json() == other[key].report.to_json())
    for key in ("coin", "exam"):
        (t1, r1), (t2, r2) = base[key], other[key]
        same.append(t1 == t2 and r1.to_json() == r2.to_json())
    verdict(12, "reproducibility", all(same), f"workers 1 vs 3 identical per run: {same}")
