"""Pure numpy implementation of the hot kernels.

Every function here must stay bit-identical to ``_ckernels.pyx``; the test
suite compares both backends when the extension is available.
"""

import numpy as np

from .._prf import GOLDEN, KEY_SALT, randbelow, stream_key

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_G = np.uint64(GOLDEN)
_SALT = np.uint64(KEY_SALT)
_LOW32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# Upper bound on perm-matrix cells materialised per chunk.
_CHUNK_CELLS = 1 << 23


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def _keys(seed, indices):
    idx = np.asarray(indices, dtype=np.uint64)
    return _mix(np.uint64(seed) ^ _mix(idx * _G + _SALT))


def _draw(keys, counters):
    return _mix(keys + (counters + np.uint64(1)) * _G)


def _mulhi_lo(x, m):
    """High and low 64-bit halves of x*m for m < 2**32."""
    mm = np.uint64(m)
    xh = x >> _S32
    xl = x & _LOW32
    hi_part = xh * mm
    lo_part = xl * mm
    hi = (hi_part + (lo_part >> _S32)) >> _S32
    lo = (hi_part << _S32) + lo_part
    return hi, lo


def _supports_chunk(seed, payloads, b, w):
    p = len(payloads)
    keys = _keys(seed, payloads)
    counters = np.zeros(p, dtype=np.uint64)
    perm = np.tile(np.arange(b, dtype=np.int64), (p, 1))
    rows = np.arange(p)
    for i in range(w):
        m = b - i
        threshold = np.uint64(((1 << 64) - m) % m)
        x = _draw(keys, counters)
        counters += np.uint64(1)
        hi, lo = _mulhi_lo(x, m)
        bad = np.flatnonzero(lo < threshold)
        if bad.size:
            # rejection is rare (probability < m / 2**64); redo those lanes exactly
            for lane in bad:
                key = int(keys[lane])
                val, ctr = randbelow(key, int(counters[lane]), m)
                hi[lane] = val
                counters[lane] = ctr
        j = hi.astype(np.int64) + i
        a = perm[:, i].copy()
        perm[:, i] = perm[rows, j]
        perm[rows, j] = a
    return np.sort(perm[:, :w], axis=1)


def beep_supports(seed, payloads, b, w):
    """Sorted 1-positions of the weight-``w`` codewords of ``payloads``."""
    payloads = np.asarray(payloads, dtype=np.uint64).ravel()
    out = np.empty((len(payloads), w), dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(b, 1))
    for start in range(0, len(payloads), step):
        out[start:start + step] = _supports_chunk(seed, payloads[start:start + step], b, w)
    return out


def dist_bits(seed, payloads, b):
    """Uniform ``b``-bit codewords as a uint8 matrix, one row per payload."""
    payloads = np.asarray(payloads, dtype=np.uint64).ravel()
    nwords = (b + 63) // 64
    keys = _keys(seed, payloads)[:, None]
    ctr = np.arange(nwords, dtype=np.uint64)[None, :]
    words = _draw(keys, ctr)
    shifts = np.arange(64, dtype=np.uint64)
    bits = ((words[:, :, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return bits.reshape(len(payloads), nwords * 64)[:, :b]


def noise_flips(seed, nodes, t0, length, threshold):
    """Flip mask for (node, round) pairs, rounds ``t0 .. t0+length-1``."""
    nodes = np.asarray(nodes, dtype=np.uint64).ravel()
    if threshold <= 0 or length == 0:
        return np.zeros((len(nodes), length), dtype=bool)
    keys = _keys(seed, nodes)[:, None]
    t = np.arange(t0, t0 + length, dtype=np.uint64)[None, :]
    return (_draw(keys, t) >> np.uint64(11)) < np.uint64(threshold)


def scan_candidates(seed, lo, hi, b, w, notx, tau):
    """Payloads in [lo, hi) whose codeword meets each row of ``notx`` fewer than ``tau`` times.

    Returns a list with one sorted int64 array per row of ``notx``.
    """
    notx = np.ascontiguousarray(notx, dtype=np.uint8)
    found = [[] for _ in range(notx.shape[0])]
    step = max(1, min(1 << 12, _CHUNK_CELLS // max(b, 1)))
    for start in range(lo, hi, step):
        payloads = np.arange(start, min(hi, start + step), dtype=np.uint64)
        sup = beep_supports(seed, payloads, b, w)
        for row in range(notx.shape[0]):
            counts = notx[row][sup].sum(axis=1, dtype=np.int64)
            hit = payloads[counts < tau]
            if hit.size:
                found[row].append(hit.astype(np.int64))
    return [np.concatenate(f) if f else np.zeros(0, dtype=np.int64) for f in found]


def scalar_key(seed, index):
    return stream_key(seed, index)
