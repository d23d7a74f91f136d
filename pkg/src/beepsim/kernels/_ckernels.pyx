# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors _pykernels.py bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t KEY_SALT = 0xD1B54A32D192ED03ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t index) nogil:
    return mix64(seed ^ mix64(index * GOLDEN + KEY_SALT))


cdef inline uint64_t draw(uint64_t key, uint64_t counter) nogil:
    return mix64(key + (counter + 1) * GOLDEN)


cdef inline uint64_t randbelow(uint64_t key, uint64_t *counter, uint64_t m) nogil:
    cdef uint64_t threshold = (0 - m) % m
    cdef uint64_t x, xh, xl, hp, lp, hi, lo
    while True:
        x = draw(key, counter[0])
        counter[0] += 1
        xh = x >> 32
        xl = x & 0xFFFFFFFFULL
        hp = xh * m
        lp = xl * m
        hi = (hp + (lp >> 32)) >> 32
        lo = (hp << 32) + lp
        if lo >= threshold:
            return hi


cdef void support_into(uint64_t seed, uint64_t payload, int64_t b, int64_t w,
                       int64_t *perm, int64_t *js, int64_t *out) nogil:
    # perm must hold the identity on entry; it is restored on exit
    cdef uint64_t key = stream_key(seed, payload)
    cdef uint64_t ctr = 0
    cdef int64_t i, j, t
    for i in range(w):
        j = i + <int64_t>randbelow(key, &ctr, <uint64_t>(b - i))
        js[i] = j
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t
        out[i] = perm[i]
    i = w - 1
    while i >= 0:
        t = perm[i]
        perm[i] = perm[js[i]]
        perm[js[i]] = t
        i -= 1


def beep_supports(seed, payloads, Py_ssize_t b, Py_ssize_t w):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] pl = np.ascontiguousarray(payloads, dtype=np.uint64).ravel()
    cdef Py_ssize_t p = pl.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.empty((p, w), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] perm = np.arange(max(b, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] js = np.empty(max(w, 1), dtype=np.int64)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t r
    if p == 0 or w == 0:
        return out
    with nogil:
        for r in range(p):
            support_into(s, pl[r], b, w, &perm[0], &js[0], &out[r, 0])
    out.sort(axis=1)
    return out


def dist_bits(seed, payloads, Py_ssize_t b):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] pl = np.ascontiguousarray(payloads, dtype=np.uint64).ravel()
    cdef Py_ssize_t p = pl.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.empty((p, b), dtype=np.uint8)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t key, word = 0
    cdef Py_ssize_t r, k
    with nogil:
        for r in range(p):
            key = stream_key(s, pl[r])
            for k in range(b):
                if k % 64 == 0:
                    word = draw(key, <uint64_t>(k // 64))
                out[r, k] = (word >> (k % 64)) & 1
    return out


def noise_flips(seed, nodes, t0, Py_ssize_t length, threshold):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] nd = np.ascontiguousarray(nodes, dtype=np.uint64).ravel()
    cdef Py_ssize_t n = nd.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((n, length), dtype=np.uint8)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t start = <uint64_t>t0
    cdef uint64_t thr = <uint64_t>threshold
    cdef uint64_t key
    cdef Py_ssize_t i, t
    if thr == 0 or length == 0:
        return out.view(bool)
    with nogil:
        for i in range(n):
            key = stream_key(s, nd[i])
            for t in range(length):
                out[i, t] = (draw(key, start + t) >> 11) < thr
    return out.view(bool)


def scan_candidates(seed, lo, hi, Py_ssize_t b, Py_ssize_t w, notx, double tau):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] nx = np.ascontiguousarray(notx, dtype=np.uint8)
    cdef Py_ssize_t rows = nx.shape[0]
    cdef Py_ssize_t batch = 4096
    cdef cnp.ndarray[cnp.int64_t, ndim=1] perm = np.arange(max(b, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] js = np.empty(max(w, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sup = np.empty(max(w, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] hits = np.zeros((max(rows, 1), batch), dtype=np.uint8)
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t start = <uint64_t>lo, stop = <uint64_t>hi, p
    cdef Py_ssize_t row, i, k, m
    cdef int64_t count
    found = [[] for _ in range(rows)]
    while start < stop:
        m = <Py_ssize_t>min(<uint64_t>batch, stop - start)
        with nogil:
            for k in range(m):
                p = start + k
                support_into(s, p, b, w, &perm[0], &js[0], &sup[0])
                for row in range(rows):
                    count = 0
                    for i in range(w):
                        count += nx[row, sup[i]]
                        if count >= tau:
                            break
                    hits[row, k] = count < tau
        for row in range(rows):
            idx = np.flatnonzero(hits[row, :m])
            if idx.size:
                found[row].append(idx.astype(np.int64) + <int64_t>start)
        start += m
    return [np.concatenate(f) if f else np.zeros(0, dtype=np.int64) for f in found]
