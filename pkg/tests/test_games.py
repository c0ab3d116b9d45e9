import json
import math
import random

import numpy as np
import pytest

from nsbox import kernels
from nsbox.errors import NotUnitVector, OutOfRange, UnknownModel
from nsbox.games import (
    RoundStream,
    SharedRandomness,
    Setting,
    cell_counts,
    prbox_singlet_round,
    coin_game,
    empirical_chsh,
    estimate,
    exam1_guess_game,
    local_round,
    pr_box_round,
    random_direction_pairs,
    simulate,
    standard_error,
    toner_bacon_round,
)
from nsbox.quantum import named_family


def test_pr_box_round_relation():
    r = random.Random(3)
    for _ in range(200):
        x, y = r.getrandbits(1), r.getrandbits(1)
        a, b = pr_box_round(x, y, r)
        assert a ^ b == x & y
    with pytest.raises(OutOfRange):
        pr_box_round(2, 0, r)


@pytest.mark.parametrize("xy", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_pr_box_output_is_unbiased(xy):
    n = 100_000
    est = estimate("pr-box", [xy], n, seed=11)
    a0 = est.counts[0, 0].sum() / n
    assert abs(a0 - 0.5) < 4 * standard_error(0.5, n)
    assert est.report.passed


def test_coin_game_pattern():
    tr, rep = coin_game(200_000, seed=5)
    assert rep.violations == 0
    assert rep.passed
    assert rep.chsh == 4.0
    right = (tr.x == 0) | (tr.y == 0)
    assert np.all(tr.a[right] == tr.b[right])
    assert np.all(tr.a[~right] != tr.b[~right])
    assert tr.totals() == {"rounds": 200_000, "bits_communicated": 0, "prbox_uses": 200_000}


def test_single_round_is_reproducible():
    a, _ = coin_game(1, seed=42)
    b, _ = coin_game(1, seed=42)
    assert list(a.records()) == list(b.records())


def test_exam1_strategies():
    tr, rep = exam1_guess_game(200_000, seed=2)
    assert rep.passed and rep.target == 0.5
    same = tr.x == tr.y
    assert np.all((tr.a == tr.y)[same] & (tr.b == tr.x)[same])
    _, rep = exam1_guess_game(200_000, seed=2, strategy="uniform")
    assert rep.passed and rep.target == 0.25
    with pytest.raises(UnknownModel):
        exam1_guess_game(10, seed=1, strategy="telepathy")


def test_scalar_rounds_match_kernels():
    pairs = random_direction_pairs(3, seed=8)
    tb = simulate("toner-bacon", [Setting(0, 0, a.as_tuple(), b.as_tuple()) for a, b in pairs], 40, seed=4)
    cg = simulate("prbox-singlet", [Setting(0, 0, a.as_tuple(), b.as_tuple()) for a, b in pairs], 40, seed=4)
    lo = simulate("local-lhv", [Setting(0, 0, a.as_tuple(), b.as_tuple()) for a, b in pairs], 40, seed=4)
    for k in range(len(tb)):
        s, i = int(tb.setting[k]), int(tb.index[k])
        a, b = pairs[s]
        shared = SharedRandomness.draw(4, s, i)
        spin = lambda bit: 1 - 2 * int(bit)
        out = toner_bacon_round(a, b, shared)
        assert (out.alpha, out.beta) == (spin(tb.a[k]), spin(tb.b[k]))
        assert (out.bits_communicated, out.prbox_uses) == (1, 0)
        stream = RoundStream(4, s, i)
        out = prbox_singlet_round(a, b, shared, lambda x, y: pr_box_round(x, y, stream))
        assert (out.alpha, out.beta) == (spin(cg.a[k]), spin(cg.b[k]))
        assert (out.bits_communicated, out.prbox_uses) == (0, 1)
        out = local_round(a, b, shared)
        assert (out.alpha, out.beta) == (spin(lo.a[k]), spin(lo.b[k]))


def test_shared_randomness_is_unit():
    s = SharedRandomness.draw(1, 2, 3)
    assert math.isclose(sum(v * v for v in s.lam1), 1.0, abs_tol=1e-15)
    with pytest.raises(NotUnitVector):
        SharedRandomness((1.0, 1.0, 0.0), s.lam2)


@pytest.mark.parametrize("model", ["toner-bacon", "prbox-singlet"])
def test_simulation_models_reproduce_singlet(model):
    pairs = random_direction_pairs(5, seed=21)
    est = estimate(model, pairs, 100_000, seed=3)
    assert est.report.passed
    for s, (a, b) in enumerate(pairs):
        c = est.counts[s] / 100_000
        E = c[0, 0] + c[1, 1] - c[0, 1] - c[1, 0]
        assert abs(E + a.dot(b)) < 4 * 2 / math.sqrt(100_000)


def test_aligned_and_orthogonal_directions():
    z, x = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)
    est = estimate("toner-bacon", [(z, z), (z, x)], 100_000, seed=9)
    c = est.counts / 100_000
    assert c[0, 0, 0] == 0 and c[0, 1, 1] == 0  # perfect anticorrelation
    assert est.report.passed
    assert est.report.extra["totals"]["bits_communicated"] == 200_000


def test_prbox_singlet_marginals_unbiased():
    pairs = random_direction_pairs(20, seed=33)
    n = 20_000
    est = estimate("prbox-singlet", pairs, n, seed=6)
    se = standard_error(0.5, n)
    for s in range(20):
        assert abs(est.counts[s, 0].sum() / n - 0.5) < 4 * se
        assert abs(est.counts[s, :, 0].sum() / n - 0.5) < 4 * se


def test_local_model_respects_bell_bound():
    fam = named_family("chsh-optimal")
    marks, errs = zip(*(empirical_chsh("local-lhv", fam, 2000, seed=s) for s in range(100)))
    mean = float(np.mean(marks))
    combined = math.sqrt(sum(e * e for e in errs)) / 100
    assert mean <= 3 + 4 * combined


def test_entanglement_models_beat_local_model():
    fam = named_family("chsh-optimal")
    m, se = empirical_chsh("toner-bacon", fam, 50_000, seed=1)
    assert abs(m - (2 + math.sqrt(2))) < 4 * se


def test_tiny_sample_cannot_pass_strict_threshold():
    assert not estimate("pr-box", None, 10, seed=3, sigma=0.1).report.passed


@pytest.mark.parametrize("model", ["coin-game", "toner-bacon", "prbox-singlet"])
def test_worker_count_does_not_change_transcript(model):
    sts = [Setting()] if model == "coin-game" else [
        Setting(0, 0, a.as_tuple(), b.as_tuple()) for a, b in random_direction_pairs(2, seed=1)]
    base = simulate(model, sts, 30_001, seed=77, workers=1)
    for w in (2, 3, 8):
        assert simulate(model, sts, 30_001, seed=77, workers=w) == base


def test_backends_give_same_transcript():
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled kernels not built")
    pairs = random_direction_pairs(2, seed=1)
    sts = [Setting(0, 0, a.as_tuple(), b.as_tuple()) for a, b in pairs]
    assert simulate("prbox-singlet", sts, 5000, 1, backend="python") == \
        simulate("prbox-singlet", sts, 5000, 1, backend="cython")


def test_transcript_jsonl_and_report_formats():
    est = estimate("pr-box", [(1, 1)], 5, seed=1)
    lines = est.transcript.to_jsonl().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert rec["schema"] == 1 and rec["prbox_uses"] == 1 and rec["a"] ^ rec["b"] == 1
    doc = est.report.to_json()
    assert doc["schema"] == 1 and doc["verdict"] in ("pass", "fail")
    rows = est.report.to_csv().splitlines()
    assert rows[0] == "setting,a,b,empirical,target,se,z" and len(rows) == 5


def test_unknown_model():
    with pytest.raises(UnknownModel):
        simulate("8-bit-model", [Setting()], 10, 1)


def test_estimate_correlation_for_family():
    est = estimate("toner-bacon", named_family("chsh-optimal"), 20_000, seed=2)
    assert est.correlation.scenario.shape == (2, 2, 2, 2)
    assert est.report.passed
    assert cell_counts(est.transcript).sum() == 80_000
