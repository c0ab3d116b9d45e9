# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo round kernels; must agree bit for bit with _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint8_t, uint64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t SUBKEY = 0xD6E8FEB86659FD93ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef int MAX_ATTEMPTS = 64
cdef double INV53 = 1.0 / 9007199254740992.0

cdef enum:
    LABEL_LAMBDA1 = 1
    LABEL_LAMBDA2 = 2
    LABEL_INPUTS = 3
    LABEL_LOCAL = 4


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline uint64_t subkey(uint64_t rk, uint64_t label) noexcept nogil:
    return mix64(rk ^ (label * SUBKEY))


cdef inline uint64_t draw(uint64_t sk, uint64_t j) noexcept nogil:
    return mix64(sk + (j + 1) * GOLDEN)


cdef inline double uniform(uint64_t w) noexcept nogil:
    return <double>(w >> 11) * INV53


cdef inline void sphere_point(uint64_t sk, double* out) noexcept nogil:
    cdef int k
    cdef double v0, v1, v2, r2, s
    for k in range(MAX_ATTEMPTS):
        v0 = 2.0 * uniform(draw(sk, 3 * k)) - 1.0
        v1 = 2.0 * uniform(draw(sk, 3 * k + 1)) - 1.0
        v2 = 2.0 * uniform(draw(sk, 3 * k + 2)) - 1.0
        r2 = v0 * v0 + v1 * v1 + v2 * v2
        if r2 > 0.0 and r2 <= 1.0:
            s = sqrt(r2)
            out[0] = v0 / s
            out[1] = v1 / s
            out[2] = v2 / s
            return
    out[0] = 0.0
    out[1] = 0.0
    out[2] = 1.0


cdef inline double sgn(double v) noexcept nogil:
    return 1.0 if v >= 0.0 else -1.0


cdef inline uint8_t spin_bit(double s) noexcept nogil:
    return 1 if s < 0.0 else 0


def sphere(uint64_t key, long long start, long long n, uint64_t label):
    out = np.empty((n, 3))
    cdef double[:, ::1] o = out
    cdef long long i
    cdef uint64_t rk
    with nogil:
        for i in range(n):
            rk = mix64(key + <uint64_t>(start + i) * GOLDEN)
            sphere_point(subkey(rk, label), &o[i, 0])
    return out


def run_bits(int model, uint64_t key, long long start, long long n, int fx=-1, int fy=-1):
    if model not in (0, 1, 2):
        raise ValueError(f"unknown bit model code {model}")
    xs = np.empty(n, dtype=np.uint8)
    ys = np.empty(n, dtype=np.uint8)
    as_ = np.empty(n, dtype=np.uint8)
    bs = np.empty(n, dtype=np.uint8)
    dg = np.empty(n, dtype=np.uint64)
    cdef uint8_t[::1] X = xs, Y = ys, A = as_, B = bs
    cdef uint64_t[::1] D = dg
    cdef long long i
    cdef uint64_t rk, sk_in, sk_loc
    cdef uint8_t x, y
    with nogil:
        for i in range(n):
            rk = mix64(key + <uint64_t>(start + i) * GOLDEN)
            sk_in = subkey(rk, LABEL_INPUTS)
            sk_loc = subkey(rk, LABEL_LOCAL)
            x = <uint8_t>fx if fx >= 0 else <uint8_t>(draw(sk_in, 0) >> 63)
            y = <uint8_t>fy if fy >= 0 else <uint8_t>(draw(sk_in, 1) >> 63)
            X[i] = x
            Y[i] = y
            D[i] = rk
            if model == 0:
                A[i] = <uint8_t>(draw(sk_loc, 0) >> 63)
                B[i] = A[i] ^ (x & y)
            elif model == 1:
                A[i] = x
                B[i] = y
            else:
                A[i] = <uint8_t>(draw(sk_loc, 0) >> 63)
                B[i] = <uint8_t>(draw(sk_loc, 1) >> 63)
    return xs, ys, as_, bs, dg


def run_dirs(int model, uint64_t key, long long start, long long n, adir, bdir):
    if model not in (0, 1, 2):
        raise ValueError(f"unknown direction model code {model}")
    cdef double a0 = float(adir[0]), a1 = float(adir[1]), a2 = float(adir[2])
    cdef double b0 = float(bdir[0]), b1 = float(bdir[1]), b2 = float(bdir[2])
    as_ = np.empty(n, dtype=np.uint8)
    bs = np.empty(n, dtype=np.uint8)
    dg = np.empty(n, dtype=np.uint64)
    cdef uint8_t[::1] A = as_, B = bs
    cdef uint64_t[::1] D = dg
    cdef long long i
    cdef uint64_t rk
    cdef double l1[3]
    cdef double l2[3]
    cdef double w0, w1, w2, s1, s2, c, alpha, beta, tp, tm
    cdef uint8_t xin, yin, apr, bpr
    with nogil:
        for i in range(n):
            rk = mix64(key + <uint64_t>(start + i) * GOLDEN)
            D[i] = rk
            sphere_point(subkey(rk, LABEL_LAMBDA1), l1)
            s1 = sgn(l1[0] * a0 + l1[1] * a1 + l1[2] * a2)
            if model == 2:
                alpha = s1
                beta = -sgn(l1[0] * b0 + l1[1] * b1 + l1[2] * b2)
            else:
                sphere_point(subkey(rk, LABEL_LAMBDA2), l2)
                s2 = sgn(l2[0] * a0 + l2[1] * a1 + l2[2] * a2)
                if model == 0:
                    c = s1 * s2
                    w0 = l1[0] + c * l2[0]
                    w1 = l1[1] + c * l2[1]
                    w2 = l1[2] + c * l2[2]
                    alpha = -s1
                    beta = sgn(w0 * b0 + w1 * b1 + w2 * b2)
                else:
                    tp = sgn((l1[0] + l2[0]) * b0 + (l1[1] + l2[1]) * b1 + (l1[2] + l2[2]) * b2)
                    tm = sgn((l1[0] - l2[0]) * b0 + (l1[1] - l2[1]) * b1 + (l1[2] - l2[2]) * b2)
                    xin = 1 if s1 != s2 else 0
                    yin = 1 if tp != tm else 0
                    apr = <uint8_t>(draw(subkey(rk, LABEL_LOCAL), 0) >> 63)
                    bpr = apr ^ (xin & yin)
                    alpha = -s1 * (1.0 - 2.0 * apr)
                    beta = tp * (1.0 - 2.0 * bpr)
            A[i] = spin_bit(alpha)
            B[i] = spin_bit(beta)
    return as_, bs, dg
