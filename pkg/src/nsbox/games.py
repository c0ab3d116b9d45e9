"""Seeded Monte Carlo games and entanglement simulation models.

Every random number is a hash of (seed, stream, round, label, draw), see
:mod:`nsbox._pykernels`. A stream is one experimental setting; round ``i`` of
a stream yields the same record however the rounds are split across workers.

Outputs are stored as bits. For direction-input models bit 0 means spin +1
and bit 1 means spin -1.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .correlation import Correlation, Scenario, from_samples, validate
from .errors import OutOfRange, UnknownModel
from .quantum import Direction, SettingFamily, as_direction, singlet_correlation

SCHEMA = 1


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str  # "bits" or "dirs"
    code: int
    bits_per_round: int
    prbox_per_round: int


MODELS = {
    "pr-box": ModelSpec("pr-box", "bits", kernels.BITS_PRBOX, 0, 1),
    "coin-game": ModelSpec("coin-game", "bits", kernels.BITS_PRBOX, 0, 1),
    "exam1-own": ModelSpec("exam1-own", "bits", kernels.BITS_EXAM_OWN, 0, 0),
    "exam1-uniform": ModelSpec("exam1-uniform", "bits", kernels.BITS_EXAM_UNIFORM, 0, 0),
    "toner-bacon": ModelSpec("toner-bacon", "dirs", kernels.DIR_TONER_BACON, 1, 0),
    "prbox-singlet": ModelSpec("prbox-singlet", "dirs", kernels.DIR_PRBOX_SINGLET, 0, 1),
    "local-lhv": ModelSpec("local-lhv", "dirs", kernels.DIR_LOCAL, 0, 0),
}


def model_spec(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise UnknownModel(f"unknown model {name!r}; choose from {', '.join(MODELS)}") from None


# -- scalar rounds -------------------------------------------------------------


class RoundStream:
    """Random bits for one round, derived from the counter-based generator.

    Exposes ``getrandbits`` so it can stand in for :class:`random.Random`
    in the scalar round functions.
    """

    def __init__(self, seed: int, stream: int, index: int, label: int = kernels.LABEL_LOCAL):
        self.round_key = kernels.round_key(kernels.stream_key(seed, stream), index)
        self._sk = kernels.subkey(self.round_key, label)
        self._j = 0

    def getrandbits(self, k: int) -> int:
        out = 0
        for _ in range(k):
            out = (out << 1) | (kernels.draw(self._sk, self._j) >> 63)
            self._j += 1
        return out


@dataclass(frozen=True)
class SharedRandomness:
    """Two independent uniform unit vectors shared by both parties."""

    lam1: tuple[float, float, float]
    lam2: tuple[float, float, float]

    def __post_init__(self):
        for v in (self.lam1, self.lam2):
            Direction(*v)

    @classmethod
    def draw(cls, seed: int, stream: int, index: int) -> "SharedRandomness":
        rk = kernels.round_key(kernels.stream_key(seed, stream), index)
        return cls(
            kernels.sphere_point(kernels.subkey(rk, kernels.LABEL_LAMBDA1)),
            kernels.sphere_point(kernels.subkey(rk, kernels.LABEL_LAMBDA2)),
        )


@dataclass(frozen=True)
class RoundOutcome:
    alpha: int
    beta: int
    bits_communicated: int
    prbox_uses: int


def sgn(v: float) -> int:
    """Sign with the tie rule sgn(0) = +1."""
    return 1 if v >= 0.0 else -1


def _dot(u, v) -> float:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def pr_box_round(x: int, y: int, rng) -> tuple[int, int]:
    """One use of the PR box: a uniform, b = a xor xy."""
    if x not in (0, 1) or y not in (0, 1):
        raise OutOfRange("PR box inputs are bits")
    a = rng.getrandbits(1)
    return a, a ^ (x & y)


def toner_bacon_round(adir, bdir, shared: SharedRandomness) -> RoundOutcome:
    """One bit of communication from Alice reproduces the singlet correlator."""
    adir, bdir = as_direction(adir).as_tuple(), as_direction(bdir).as_tuple()
    s1 = sgn(_dot(adir, shared.lam1))
    c = s1 * sgn(_dot(adir, shared.lam2))  # the bit Alice sends
    w = tuple(l1 + c * l2 for l1, l2 in zip(shared.lam1, shared.lam2))
    return RoundOutcome(-s1, sgn(_dot(bdir, w)), 1, 0)


def prbox_singlet_round(adir, bdir, shared: SharedRandomness, prbox: Callable[[int, int], tuple[int, int]]) -> RoundOutcome:
    """Singlet statistics from one PR box use and no communication.

    ``prbox(x, y)`` must return PR box outputs (a, b) with a xor b = xy.
    """
    adir, bdir = as_direction(adir).as_tuple(), as_direction(bdir).as_tuple()
    l1, l2 = shared.lam1, shared.lam2
    s1, s2 = sgn(_dot(adir, l1)), sgn(_dot(adir, l2))
    tp = sgn(_dot(bdir, tuple(p + q for p, q in zip(l1, l2))))
    tm = sgn(_dot(bdir, tuple(p - q for p, q in zip(l1, l2))))
    a_pr, b_pr = prbox(int(s1 != s2), int(tp != tm))
    return RoundOutcome(-s1 * (1 - 2 * a_pr), tp * (1 - 2 * b_pr), 0, 1)


def local_round(adir, bdir, shared: SharedRandomness) -> RoundOutcome:
    """Baseline using shared randomness only."""
    adir, bdir = as_direction(adir).as_tuple(), as_direction(bdir).as_tuple()
    return RoundOutcome(sgn(_dot(adir, shared.lam1)), -sgn(_dot(bdir, shared.lam1)), 0, 0)


# -- transcripts ----------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    index: int
    setting: int
    x: int | None
    y: int | None
    alice_dir: tuple | None
    bob_dir: tuple | None
    a: int
    b: int
    bits_communicated: int
    prbox_uses: int
    digest: int

    def to_json(self) -> dict:
        out = {"schema": SCHEMA, "round": self.index, "setting": self.setting}
        if self.x is not None:
            out["x"], out["y"] = self.x, self.y
        else:
            out["alice_dir"], out["bob_dir"] = list(self.alice_dir), list(self.bob_dir)
        out.update(
            a=self.a, b=self.b,
            bits_communicated=self.bits_communicated, prbox_uses=self.prbox_uses,
            digest=f"{self.digest:016x}",
        )
        return out


@dataclass(frozen=True)
class Setting:
    """One stream: fixed inputs (bit models) or a direction pair with output flips."""

    x: int = -1
    y: int = -1
    alice_dir: tuple | None = None
    bob_dir: tuple | None = None
    flip_a: int = 0
    flip_b: int = 0


@dataclass(eq=False)
class Transcript:
    """Columnar record of every round, in (setting, round) order."""

    model: str
    seed: int
    settings: list[Setting]
    setting: np.ndarray
    index: np.ndarray
    x: np.ndarray | None
    y: np.ndarray | None
    a: np.ndarray
    b: np.ndarray
    digest: np.ndarray
    bits_per_round: int
    prbox_per_round: int

    def __len__(self) -> int:
        return int(self.a.shape[0])

    @property
    def bits_communicated(self) -> int:
        return self.bits_per_round * len(self)

    @property
    def prbox_uses(self) -> int:
        return self.prbox_per_round * len(self)

    def totals(self) -> dict:
        return {
            "rounds": len(self),
            "bits_communicated": self.bits_communicated,
            "prbox_uses": self.prbox_uses,
        }

    def record(self, k: int) -> RoundRecord:
        s = self.settings[int(self.setting[k])]
        return RoundRecord(
            int(self.index[k]), int(self.setting[k]),
            None if self.x is None else int(self.x[k]),
            None if self.y is None else int(self.y[k]),
            s.alice_dir, s.bob_dir, int(self.a[k]), int(self.b[k]),
            self.bits_per_round, self.prbox_per_round, int(self.digest[k]),
        )

    def records(self) -> Iterator[RoundRecord]:
        for k in range(len(self)):
            yield self.record(k)

    def write_jsonl(self, fh) -> None:
        for rec in self.records():
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")))
            fh.write("\n")

    def to_jsonl(self) -> str:
        buf = io.StringIO()
        self.write_jsonl(buf)
        return buf.getvalue()

    def fingerprint(self) -> str:
        """SHA-256 over every column; equal fingerprints mean equal transcripts."""
        h = hashlib.sha256()
        h.update(f"{self.model}|{self.seed}|{self.bits_per_round}|{self.prbox_per_round}".encode())
        for s in self.settings:
            h.update(repr(s).encode())
        for arr in (self.setting, self.index, self.x, self.y, self.a, self.b, self.digest):
            if arr is not None:
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        return isinstance(other, Transcript) and self.fingerprint() == other.fingerprint()

    __hash__ = None


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), n)) if n else 1
    step = -(-n // workers) if n else 0
    return [(lo, min(n, lo + step)) for lo in range(0, n, step)] if n else []


def _run_chunked(func, n: int, workers: int):
    """Run func(start, count) over [0, n) split in chunks, concatenated in order."""
    parts = _chunks(n, workers)
    if len(parts) <= 1:
        results = [func(lo, hi - lo) for lo, hi in parts]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(lambda p: func(p[0], p[1] - p[0]), parts))
    if not results:
        return None
    return tuple(np.concatenate(cols) for cols in zip(*results))


def simulate(
    model: str,
    settings: Sequence[Setting],
    rounds: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> Transcript:
    """Play ``rounds`` rounds for each setting; setting ``s`` uses stream ``s``."""
    spec = model_spec(model)
    if rounds < 1:
        raise OutOfRange("rounds must be at least 1")
    kern = kernels.get_backend(backend)
    cols = {k: [] for k in ("setting", "index", "x", "y", "a", "b", "digest")}
    for s_idx, st in enumerate(settings):
        key = kernels.stream_key(seed, s_idx)
        if spec.kind == "bits":
            x, y, a, b, dg = _run_chunked(
                lambda lo, n: kern.run_bits(spec.code, key, lo, n, st.x, st.y), rounds, workers)
            cols["x"].append(x)
            cols["y"].append(y)
        else:
            ad, bd = st.alice_dir, st.bob_dir
            a, b, dg = _run_chunked(
                lambda lo, n: kern.run_dirs(spec.code, key, lo, n, ad, bd), rounds, workers)
        if st.flip_a:
            a = a ^ np.uint8(1)
        if st.flip_b:
            b = b ^ np.uint8(1)
        cols["a"].append(a)
        cols["b"].append(b)
        cols["digest"].append(dg)
        cols["setting"].append(np.full(rounds, s_idx, dtype=np.int32))
        cols["index"].append(np.arange(rounds, dtype=np.int64))
    cat = {k: (np.concatenate(v) if v else None) for k, v in cols.items()}
    return Transcript(
        model, seed, list(settings), cat["setting"], cat["index"], cat["x"], cat["y"],
        cat["a"], cat["b"], cat["digest"], spec.bits_per_round, spec.prbox_per_round,
    )


# -- statistics -----------------------------------------------------------------


def standard_error(target: float, n: int) -> float:
    """Binomial standard error of a frequency; 1/n when the target is 0 or 1."""
    var = target * (1.0 - target)
    return math.sqrt(var / n) if var > 0 else 1.0 / n


def z_score(value: float, target: float, se: float) -> float:
    return 0.0 if value == target else (value - target) / se


@dataclass(frozen=True)
class StatCell:
    setting: int
    a: int
    b: int
    empirical: float
    target: float
    se: float
    z: float


@dataclass(frozen=True)
class StatTestReport:
    model: str
    seed: int
    rounds_per_setting: int
    sigma: float
    cells: tuple[StatCell, ...]
    extra: dict = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        return max((abs(c.z) for c in self.cells), default=0.0)

    @property
    def passed(self) -> bool:
        return all(abs(c.z) < self.sigma for c in self.cells)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "model": self.model,
            "seed": self.seed,
            "rounds_per_setting": self.rounds_per_setting,
            "sigma": self.sigma,
            "verdict": "pass" if self.passed else "fail",
            "max_abs_z": self.max_abs_z,
            "cells": [c.__dict__ for c in self.cells],
            **self.extra,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "a", "b", "empirical", "target", "se", "z"])
        for c in self.cells:
            w.writerow([c.setting, c.a, c.b, repr(c.empirical), repr(c.target), repr(c.se), repr(c.z)])
        return buf.getvalue()


def cell_counts(transcript: Transcript) -> np.ndarray:
    """Counts indexed [setting, a, b]."""
    k = len(transcript.settings)
    flat = (transcript.setting.astype(np.int64) * 4 + transcript.a.astype(np.int64) * 2
            + transcript.b.astype(np.int64))
    return np.bincount(flat, minlength=4 * k).reshape(k, 2, 2)


def _pr_oracle(st: Setting) -> np.ndarray:
    out = np.zeros((2, 2))
    for a in range(2):
        out[a, a ^ (st.x & st.y)] = 0.5
    return out


def _exam_own_oracle(st: Setting) -> np.ndarray:
    out = np.zeros((2, 2))
    out[st.x, st.y] = 1.0
    return out


def _uniform_oracle(st: Setting) -> np.ndarray:
    return np.full((2, 2), 0.25)


def singlet_oracle(st: Setting) -> np.ndarray:
    dist = singlet_correlation(st.alice_dir, st.bob_dir)
    out = np.empty((2, 2))
    for a in range(2):
        for b in range(2):
            out[a ^ st.flip_a, b ^ st.flip_b] = dist[a, b]
    return out


DEFAULT_ORACLES = {
    "pr-box": _pr_oracle,
    "coin-game": _pr_oracle,
    "exam1-own": _exam_own_oracle,
    "exam1-uniform": _uniform_oracle,
    "toner-bacon": singlet_oracle,
    "prbox-singlet": singlet_oracle,
}


@dataclass(eq=False)
class Estimate:
    correlation: Correlation
    counts: np.ndarray
    report: StatTestReport
    transcript: Transcript


def settings_from(model: str, settings) -> tuple[list[Setting], Scenario | None]:
    """Normalize a setting list.

    Bit models take (x, y) pairs (default: all four). Direction models take a
    :class:`SettingFamily` (every Alice/Bob pair, with the family's output
    flips) or a list of (alice_dir, bob_dir) pairs.
    """
    spec = model_spec(model)
    if spec.kind == "bits":
        pairs = settings if settings is not None else [(0, 0), (0, 1), (1, 0), (1, 1)]
        return [Setting(int(x), int(y)) for x, y in pairs], None
    if isinstance(settings, SettingFamily):
        out = []
        for x, ad in enumerate(settings.alice):
            for y, bd in enumerate(settings.bob):
                out.append(Setting(x, y, ad.as_tuple(), bd.as_tuple(),
                                   settings.alice_flips[x], settings.bob_flips[y]))
        return out, Scenario(len(settings.alice), len(settings.bob), 2, 2)
    if settings is None:
        raise ValueError("direction models need settings")
    out = []
    for s, (ad, bd) in enumerate(settings):
        out.append(Setting(s, 0, as_direction(ad).as_tuple(), as_direction(bd).as_tuple()))
    return out, Scenario(len(out), 1, 2, 2)


def estimate(
    model: str,
    settings=None,
    rounds: int = 10**6,
    seed: int = 0,
    oracle: Callable[[Setting], np.ndarray] | None = None,
    sigma: float = 4.0,
    workers: int = 1,
    backend: str | None = None,
) -> Estimate:
    """Empirical outcome tables per setting, z-tested cell by cell against ``oracle``.

    The returned correlation indexes settings as inputs: for a direction
    pair list, input x is the pair index and Bob has a single input.
    """
    spec = model_spec(model)
    sts, scenario = settings_from(model, settings)
    oracle = oracle or DEFAULT_ORACLES.get(model)
    if oracle is None:
        raise ValueError(f"model {model!r} has no default oracle; supply one")
    tr = simulate(model, sts, rounds, seed, workers, backend)
    counts = cell_counts(tr)
    cells = []
    for s, st in enumerate(sts):
        target = np.asarray(oracle(st), dtype=np.float64)
        for a in range(2):
            for b in range(2):
                f = counts[s, a, b] / rounds
                t = float(target[a, b])
                se = standard_error(t, rounds)
                cells.append(StatCell(s, a, b, float(f), t, se, z_score(float(f), t, se)))
    report = StatTestReport(model, seed, rounds, sigma, tuple(cells), {"totals": tr.totals()})
    if spec.kind == "bits":
        corr = from_samples(tr.x, tr.y, tr.a, tr.b, Scenario.binary()) if settings is None \
            else _table_correlation(sts, counts, rounds, None)
    else:
        corr = _table_correlation(sts, counts, rounds, scenario)
    return Estimate(corr, counts, report, tr)


def _table_correlation(sts, counts, rounds, scenario) -> Correlation:
    if scenario is None:
        scenario = Scenario(max(s.x for s in sts) + 1, max(s.y for s in sts) + 1, 2, 2)
    table = np.zeros(scenario.shape)
    seen = np.zeros(scenario.shape[:2], dtype=bool)
    for s, st in enumerate(sts):
        table[st.x, st.y] = counts[s] / rounds
        seen[st.x, st.y] = True
    table[~seen] = 0.25
    return validate(table, scenario, "float")


# -- the games --------------------------------------------------------------------


@dataclass(frozen=True)
class CoinGameReport:
    rounds: int
    violations: int
    heads: tuple[int, int]
    heads_z: tuple[float, float]
    chsh: float | None
    chsh_se: float | None
    chsh_z: float | None
    sigma: float

    @property
    def passed(self) -> bool:
        chsh_ok = self.chsh_z is None or abs(self.chsh_z) < self.sigma
        return self.violations == 0 and all(abs(z) < self.sigma for z in self.heads_z) and chsh_ok

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "rounds": self.rounds,
            "violations": self.violations,
            "heads": list(self.heads),
            "heads_z": list(self.heads_z),
            "chsh": self.chsh,
            "chsh_se": self.chsh_se,
            "chsh_z": self.chsh_z,
            "sigma": self.sigma,
            "verdict": "pass" if self.passed else "fail",
        }


def chsh_from_bits(x, y, a, b, target: float = 4.0) -> tuple[float, float]:
    """Empirical CHSH mark from raw bits and its standard error.

    The error combines per-setting binomial errors; when a setting's success
    frequency is 0 or 1 the 1/n floor is used.
    """
    win = ((a ^ b) == (x & y))
    flat = x.astype(np.int64) * 2 + y.astype(np.int64)
    n = np.bincount(flat, minlength=4)
    w = np.bincount(flat, weights=win.astype(np.float64), minlength=4)
    if np.any(n == 0):
        raise ValueError("every (x, y) setting must occur at least once")
    p = w / n
    var = sum(standard_error(float(pi), int(ni)) ** 2 for pi, ni in zip(p, n))
    return float(p.sum()), math.sqrt(var)


def coin_report(tr: Transcript, sigma: float = 4.0) -> CoinGameReport:
    """Right hand is input 0, left hand input 1, heads is output 0."""
    n = len(tr)
    both_left = (tr.x & tr.y).astype(bool)
    equal = tr.a == tr.b
    violations = int(np.count_nonzero(equal == both_left))
    heads = (int(np.count_nonzero(tr.a == 0)), int(np.count_nonzero(tr.b == 0)))
    se = standard_error(0.5, n)
    hz = tuple(z_score(h / n, 0.5, se) for h in heads)
    flat = tr.x.astype(np.int64) * 2 + tr.y
    if np.all(np.bincount(flat, minlength=4) > 0):
        m, m_se = chsh_from_bits(tr.x, tr.y, tr.a, tr.b)
        mz = z_score(m, 4.0, m_se)
    else:  # too few rounds to see every setting
        m = m_se = mz = None
    return CoinGameReport(n, violations, heads, hz, m, m_se, mz, sigma)


def coin_game(rounds: int, seed: int, sigma: float = 4.0, workers: int = 1,
              backend: str | None = None) -> tuple[Transcript, CoinGameReport]:
    """Each round both players pick a hand uniformly and press the PR box."""
    tr = simulate("coin-game", [Setting()], rounds, seed, workers, backend)
    return tr, coin_report(tr, sigma)


@dataclass(frozen=True)
class GuessReport:
    strategy: str
    rounds: int
    successes: int
    target: float
    se: float
    z: float
    sigma: float

    @property
    def frequency(self) -> float:
        return self.successes / self.rounds

    @property
    def passed(self) -> bool:
        return abs(self.z) < self.sigma

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "strategy": self.strategy,
            "rounds": self.rounds,
            "successes": self.successes,
            "frequency": self.frequency,
            "target": self.target,
            "se": self.se,
            "z": self.z,
            "sigma": self.sigma,
            "verdict": "pass" if self.passed else "fail",
        }


def exam1_guess_game(rounds: int, seed: int, strategy: str = "own", sigma: float = 4.0,
                     workers: int = 1, backend: str | None = None) -> tuple[Transcript, GuessReport]:
    """Each player guesses the other's input bit; success needs both right.

    ``own``: each player answers their own input (success 1/2).
    ``uniform``: independent coin flips (success 1/4).
    """
    targets = {"own": ("exam1-own", 0.5), "uniform": ("exam1-uniform", 0.25)}
    if strategy not in targets:
        raise UnknownModel(f"unknown guessing strategy {strategy!r}")
    model, target = targets[strategy]
    tr = simulate(model, [Setting()], rounds, seed, workers, backend)
    succ = int(np.count_nonzero((tr.a == tr.y) & (tr.b == tr.x)))
    se = standard_error(target, rounds)
    return tr, GuessReport(strategy, rounds, succ, target, se,
                           z_score(succ / rounds, target, se), sigma)


def empirical_chsh(model: str, family: SettingFamily, rounds: int, seed: int,
                   workers: int = 1, backend: str | None = None) -> tuple[float, float]:
    """CHSH mark of a direction model under a two-by-two setting family."""
    sts, _ = settings_from(model, family)
    tr = simulate(model, sts, rounds, seed, workers, backend)
    counts = cell_counts(tr)
    total, var = 0.0, 0.0
    for s, st in enumerate(sts):
        p = sum(counts[s, a, b] for a in range(2) for b in range(2) if a ^ b == st.x * st.y) / rounds
        total += p
        var += standard_error(p, rounds) ** 2
    return float(total), math.sqrt(var)


def random_direction_pairs(count: int, seed: int) -> list[tuple[Direction, Direction]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.standard_normal((2, 3))
        out.append((Direction.normalized(v[0]), Direction.normalized(v[1])))
    return out
