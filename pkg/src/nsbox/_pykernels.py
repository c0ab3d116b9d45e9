"""Pure-Python/numpy implementation of the Monte Carlo round kernels.

This is the reference the compiled ``_kernels`` extension must match bit for
bit. Randomness is counter based: every draw is a splitmix64 hash of
(stream key, round index, label, draw index), so any subrange of rounds can be
computed independently and in any order.

Sphere points are drawn by rejection from the cube [-1, 1]^3. Only +, *, /
and sqrt are involved, all correctly rounded in IEEE arithmetic, which is
what makes the two backends agree exactly.
"""
from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SUBKEY = 0xD6E8FEB86659FD93
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB
MAX_ATTEMPTS = 64
INV53 = 1.0 / 9007199254740992.0

LABEL_LAMBDA1 = 1
LABEL_LAMBDA2 = 2
LABEL_INPUTS = 3
LABEL_LOCAL = 4

BITS_PRBOX = 0
BITS_EXAM_OWN = 1
BITS_EXAM_UNIFORM = 2

DIR_TONER_BACON = 0
DIR_PRBOX_SINGLET = 1
DIR_LOCAL = 2

BACKEND = "python"


# -- scalar reference (Python ints) ----------------------------------------


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * M1) & MASK
    z = ((z ^ (z >> 27)) * M2) & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed & MASK) ^ ((stream * GOLDEN) & MASK))


def round_key(key: int, i: int) -> int:
    return mix64(key + i * GOLDEN)


def subkey(rk: int, label: int) -> int:
    return mix64(rk ^ ((label * SUBKEY) & MASK))


def draw(sk: int, j: int) -> int:
    return mix64(sk + (j + 1) * GOLDEN)


def uniform(w: int) -> float:
    return (w >> 11) * INV53


def sphere_point(sk: int) -> tuple[float, float, float]:
    for k in range(MAX_ATTEMPTS):
        v0 = 2.0 * uniform(draw(sk, 3 * k)) - 1.0
        v1 = 2.0 * uniform(draw(sk, 3 * k + 1)) - 1.0
        v2 = 2.0 * uniform(draw(sk, 3 * k + 2)) - 1.0
        r2 = v0 * v0 + v1 * v1 + v2 * v2
        if 0.0 < r2 <= 1.0:
            s = math.sqrt(r2)
            return (v0 / s, v1 / s, v2 / s)
    return (0.0, 0.0, 1.0)


# -- vectorized kernels ----------------------------------------------------

_U = np.uint64


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(M1)
    z = (z ^ (z >> _U(27))) * _U(M2)
    return z ^ (z >> _U(31))


def _round_keys(key: int, start: int, n: int) -> np.ndarray:
    idx = np.arange(start, start + n, dtype=np.uint64)
    return _mix(_U(key) + idx * _U(GOLDEN))


def _subkeys(rk: np.ndarray, label: int) -> np.ndarray:
    return _mix(rk ^ _U((label * SUBKEY) & MASK))


def _draw(sk: np.ndarray, j: int) -> np.ndarray:
    return _mix(sk + _U(((j + 1) * GOLDEN) & MASK))


def _bit(w: np.ndarray) -> np.ndarray:
    return (w >> _U(63)).astype(np.uint8)


def _uniform(w: np.ndarray) -> np.ndarray:
    return (w >> _U(11)).astype(np.float64) * INV53


def _sphere(sk: np.ndarray) -> np.ndarray:
    n = sk.shape[0]
    out = np.empty((n, 3))
    out[:] = (0.0, 0.0, 1.0)
    pending = np.arange(n)
    for k in range(MAX_ATTEMPTS):
        if pending.size == 0:
            break
        s = sk[pending]
        v0 = 2.0 * _uniform(_draw(s, 3 * k)) - 1.0
        v1 = 2.0 * _uniform(_draw(s, 3 * k + 1)) - 1.0
        v2 = 2.0 * _uniform(_draw(s, 3 * k + 2)) - 1.0
        r2 = v0 * v0 + v1 * v1 + v2 * v2
        ok = (r2 > 0.0) & (r2 <= 1.0)
        norm = np.sqrt(r2[ok])
        rows = pending[ok]
        out[rows, 0] = v0[ok] / norm
        out[rows, 1] = v1[ok] / norm
        out[rows, 2] = v2[ok] / norm
        pending = pending[~ok]
    return out


def sphere(key: int, start: int, n: int, label: int) -> np.ndarray:
    return _sphere(_subkeys(_round_keys(key, start, n), label))


def run_bits(model: int, key: int, start: int, n: int, fx: int = -1, fy: int = -1):
    """Rounds of a bit-input model; returns (x, y, a, b, digest)."""
    rk = _round_keys(key, start, n)
    sk_in = _subkeys(rk, LABEL_INPUTS)
    sk_loc = _subkeys(rk, LABEL_LOCAL)
    x = np.full(n, fx, dtype=np.uint8) if fx >= 0 else _bit(_draw(sk_in, 0))
    y = np.full(n, fy, dtype=np.uint8) if fy >= 0 else _bit(_draw(sk_in, 1))
    if model == BITS_PRBOX:
        a = _bit(_draw(sk_loc, 0))
        b = a ^ (x & y)
    elif model == BITS_EXAM_OWN:
        a = x.copy()
        b = y.copy()
    elif model == BITS_EXAM_UNIFORM:
        a = _bit(_draw(sk_loc, 0))
        b = _bit(_draw(sk_loc, 1))
    else:
        raise ValueError(f"unknown bit model code {model}")
    return x, y, a, b, rk


def _dot(v: np.ndarray, d) -> np.ndarray:
    return v[:, 0] * d[0] + v[:, 1] * d[1] + v[:, 2] * d[2]


def _sgn(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0.0, 1.0, -1.0)


def _spin_bit(s: np.ndarray) -> np.ndarray:
    return (s < 0).astype(np.uint8)


def run_dirs(model: int, key: int, start: int, n: int, adir, bdir):
    """Rounds of a direction-input model; returns (a, b, digest) with bits 0 <-> +1."""
    adir = tuple(float(v) for v in adir)
    bdir = tuple(float(v) for v in bdir)
    rk = _round_keys(key, start, n)
    lam1 = _sphere(_subkeys(rk, LABEL_LAMBDA1))
    s1 = _sgn(_dot(lam1, adir))
    if model == DIR_LOCAL:
        alpha = s1
        beta = -_sgn(_dot(lam1, bdir))
        return _spin_bit(alpha), _spin_bit(beta), rk
    lam2 = _sphere(_subkeys(rk, LABEL_LAMBDA2))
    s2 = _sgn(_dot(lam2, adir))
    if model == DIR_TONER_BACON:
        c = s1 * s2
        w = lam1 + c[:, None] * lam2
        alpha = -s1
        beta = _sgn(_dot(w, bdir))
    elif model == DIR_PRBOX_SINGLET:
        tp = _sgn(_dot(lam1 + lam2, bdir))
        tm = _sgn(_dot(lam1 - lam2, bdir))
        x = (s1 != s2).astype(np.uint8)
        y = (tp != tm).astype(np.uint8)
        a_pr = _bit(_draw(_subkeys(rk, LABEL_LOCAL), 0))
        b_pr = a_pr ^ (x & y)
        alpha = -s1 * (1.0 - 2.0 * a_pr)
        beta = tp * (1.0 - 2.0 * b_pr)
    else:
        raise ValueError(f"unknown direction model code {model}")
    return _spin_bit(alpha), _spin_bit(beta), rk
