"""Bit strings, beep codes, distance codes and the combined code.

Codewords are never stored as full codebooks unless asked for: each code is a
seeded pure function from payload to codeword, so any single codeword is
computable on demand.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels
from ._prf import BEEP_CODE, DISTANCE_CODE, derive_seed, fold_payload, randbelow, stream_key

THEORY = "theory"
EMPIRICAL = "empirical"
MODES = (THEORY, EMPIRICAL)

# Largest codeword length we agree to build.
MAX_CODE_LENGTH = 1 << 31


class ExhaustiveLimitError(ValueError):
    """Raised when an exhaustive enumeration exceeds its configured cap."""


class BitString:
    """Immutable fixed-length binary word. Position 0 is transmitted first."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        if isinstance(bits, BitString):
            arr = bits._bits
        elif isinstance(bits, str):
            if bits and set(bits) - {"0", "1"}:
                raise ValueError(f"not a binary string: {bits!r}")
            arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits)
            if arr.ndim != 1:
                raise ValueError("BitString needs a one-dimensional sequence")
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise ValueError("BitString entries must be 0 or 1")
        arr = np.array(arr, dtype=np.uint8)
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, length):
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def ones(cls, length):
        return cls(np.ones(length, dtype=np.uint8))

    @classmethod
    def from_int(cls, value, length):
        """Big-endian rendering of ``value`` on ``length`` bits."""
        if value < 0 or value.bit_length() > length:
            raise ValueError(f"{value} does not fit in {length} bits")
        return cls([(value >> (length - 1 - i)) & 1 for i in range(length)])

    def to_int(self):
        v = 0
        for bit in self._bits:
            v = (v << 1) | int(bit)
        return v

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def weight(self):
        return int(self._bits.sum(dtype=np.int64))

    def __len__(self):
        return len(self._bits)

    def __str__(self):
        return (self._bits + ord("0")).tobytes().decode("ascii")

    def __repr__(self):
        s = str(self)
        if len(s) > 64:
            s = s[:61] + "..."
        return f"BitString({s!r})"

    def __eq__(self, other):
        if isinstance(other, str):
            other = BitString(other)
        if not isinstance(other, BitString):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash(self._bits.tobytes())

    def _binary(self, other, op):
        other = as_bitstring(other)
        _check_lengths(self, other)
        return BitString(op(self._bits, other._bits))

    def __or__(self, other):
        return self._binary(other, np.bitwise_or)

    def __and__(self, other):
        return self._binary(other, np.bitwise_and)

    def __xor__(self, other):
        return self._binary(other, np.bitwise_xor)

    def __invert__(self):
        return BitString(1 - self._bits)


def as_bitstring(s) -> BitString:
    return s if isinstance(s, BitString) else BitString(s)


def _check_lengths(*strings):
    lengths = {len(s) for s in strings}
    if len(lengths) > 1:
        raise ValueError(f"length mismatch: {sorted(lengths)}")


def weight(s):
    """Number of 1s in ``s``."""
    return as_bitstring(s).weight()


def intersect_count(s, s2):
    """Number of positions where both strings carry a 1.

    ``s`` d-intersects ``s2`` exactly when this count is at least d.
    """
    s, s2 = as_bitstring(s), as_bitstring(s2)
    _check_lengths(s, s2)
    return int(np.count_nonzero(s.bits & s2.bits))


def hamming(s, s2):
    s, s2 = as_bitstring(s), as_bitstring(s2)
    _check_lengths(s, s2)
    return int(np.count_nonzero(s.bits != s2.bits))


def superimpose(strings: Iterable, length: int | None = None) -> BitString:
    """Bitwise OR of all strings; the empty set gives ``length`` zeros."""
    strings = [as_bitstring(s) for s in strings]
    if not strings:
        if length is None:
            raise ValueError("length is required to superimpose an empty set")
        return BitString.zeros(length)
    _check_lengths(*strings)
    if length is not None and len(strings[0]) != length:
        raise ValueError(f"length mismatch: {len(strings[0])} != {length}")
    out = np.zeros(len(strings[0]), dtype=np.uint8)
    for s in strings:
        out |= s.bits
    return BitString(out)


def ones_position(s, i):
    """0-based position of the i-th 1 (1-based i), or None if there are fewer than i."""
    if i < 1:
        raise ValueError("i is 1-based")
    pos = np.flatnonzero(as_bitstring(s).bits)
    return int(pos[i - 1]) if i <= len(pos) else None


def extract_subsequence(y, mask) -> BitString:
    """Bits of ``y`` at the 1-positions of ``mask``, in order."""
    y, mask = as_bitstring(y), as_bitstring(mask)
    _check_lengths(y, mask)
    return BitString(y.bits[mask.bits.astype(bool)])


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


# --------------------------------------------------------------------------
# distance codes


@dataclass(frozen=True)
class DistanceCodeParams:
    a: int
    delta: float
    c_delta: int
    mode: str = EMPIRICAL

    def __post_init__(self):
        _check_mode(self.mode)
        if self.a < 0:
            raise ValueError("a must be non-negative")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if int(self.c_delta) != self.c_delta or self.c_delta < 1:
            raise ValueError("c_delta must be a positive integer")
        if self.mode == THEORY and self.c_delta < self.theory_min_c_delta(self.delta) - 1e-9:
            raise ValueError(
                f"theory mode needs c_delta >= 12(1-2 delta)^-2 = "
                f"{self.theory_min_c_delta(self.delta):.3f}, got {self.c_delta}"
            )
        if self.b > MAX_CODE_LENGTH:
            raise ValueError(f"codeword length {self.b} exceeds {MAX_CODE_LENGTH}")

    @staticmethod
    def theory_min_c_delta(delta):
        return 12.0 / (1.0 - 2.0 * delta) ** 2

    @property
    def b(self):
        return int(self.c_delta) * self.a

    @property
    def min_distance_required(self):
        return self.delta * self.b


@dataclass(frozen=True, eq=False)
class DistanceCode:
    """Uniformly random b-bit codewords, one per a-bit payload."""

    params: DistanceCodeParams
    seed: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def a(self):
        return self.params.a

    @property
    def b(self):
        return self.params.b

    @property
    def kernel_seed(self):
        return derive_seed(self.seed, DISTANCE_CODE)

    def _check_payload(self, m):
        if not 0 <= m < (1 << self.a):
            raise ValueError(f"payload {m} outside {self.a}-bit range")

    def rows(self, payloads) -> np.ndarray:
        """Codewords of ``payloads`` as a uint8 matrix."""
        payloads = _payload_array(payloads)
        book = self._cache.get("book")
        if book is not None:
            return book[payloads]
        return kernels.dist_bits(self.kernel_seed, payloads, self.b)

    def codebook(self, limit=16) -> np.ndarray:
        """All 2^a codewords; refuses above ``limit`` payload bits."""
        if self.a > limit:
            raise ExhaustiveLimitError(f"a={self.a} is too large to materialise (limit {limit})")
        book = self._cache.get("book")
        if book is None:
            book = kernels.dist_bits(self.kernel_seed, np.arange(1 << self.a, dtype=np.uint64), self.b)
            book.setflags(write=False)
            self._cache["book"] = book
        return book

    def codeword(self, m) -> BitString:
        self._check_payload(m)
        return BitString(self.rows([m])[0])

    def manifest(self):
        return {
            "family": "distance",
            "a": self.a,
            "k": None,
            "c": self.params.c_delta,
            "delta": self.params.delta,
            "b": self.b,
            "w": None,
            "seed": self.seed,
            "mode": self.params.mode,
        }


def _payload_array(payloads):
    """uint64 kernel indices; payloads wider than 64 bits are folded."""
    if isinstance(payloads, np.ndarray) and payloads.dtype != object:
        return payloads.astype(np.uint64, copy=False).ravel()
    return np.array([fold_payload(int(p)) for p in payloads], dtype=np.uint64)


def gen_distance_code(params: DistanceCodeParams, seed) -> DistanceCode:
    return DistanceCode(params, seed)


@dataclass(frozen=True)
class DistanceVerification:
    min_distance: int
    passed: bool
    pairs_checked: int


def verify_distance_code(code, a_max=14) -> DistanceVerification:
    """Exhaustive check of every unordered codeword pair."""
    if code.a > a_max:
        raise ExhaustiveLimitError(
            f"a={code.a} too large to verify exhaustively (limit a_max={a_max})"
        )
    if isinstance(code, DistanceCode):
        book = code.codebook(limit=a_max)
    else:
        book = np.asarray(code, dtype=np.uint8)
    return _min_pairwise_distance(book, getattr(code, "params", None))


def verify_codebook(codewords, delta) -> DistanceVerification:
    """Exhaustive check of an explicit codebook (rows are codewords)."""
    book = np.array([as_bitstring(c).bits for c in codewords], dtype=np.uint8)
    v = _min_pairwise_distance(book)
    return DistanceVerification(v.min_distance, v.min_distance >= delta * book.shape[1] - 1e-9,
                                v.pairs_checked)


def _min_pairwise_distance(book, params=None, block=1024):
    count = book.shape[0]
    pairs = count * (count - 1) // 2
    if count < 2:
        best = book.shape[1] if book.ndim == 2 else 0
    else:
        signs = book.astype(np.float32) * 2 - 1
        b = book.shape[1]
        best = b
        for start in range(0, count, block):
            chunk = signs[start:start + block]
            # d_H = (b - <s, t>) / 2 for +-1 vectors
            dots = chunk @ signs[start:].T
            dist = (b - dots) / 2
            rows = np.arange(chunk.shape[0])
            dist[rows, rows] = b + 1  # ignore self pairs
            lower = np.tril_indices(chunk.shape[0], -1)
            dist[lower] = b + 1
            best = min(best, int(round(float(dist.min()))))
    required = params.min_distance_required if params is not None else 0
    return DistanceVerification(best, best >= required - 1e-9, pairs)


def find_verified_distance_code(params, seed, max_tries=64, a_max=14):
    """Resample the code seed until exhaustive verification passes."""
    for attempt in range(max_tries):
        code = gen_distance_code(params, derive_seed(seed, attempt) if attempt else seed)
        if verify_distance_code(code, a_max=a_max).passed:
            return code
    raise RuntimeError(f"no verified distance code within {max_tries} seeds")


# --------------------------------------------------------------------------
# beep codes


@dataclass(frozen=True)
class BeepCodeParams:
    """Sizes of an (a, k, 1/c) beep code.

    ``b`` defaults to c^2 k a and ``w`` to b/(c k) = c a. An explicit ``b``
    is allowed in empirical mode; ``w`` is then rounded to the nearest
    integer (at least 1).
    """

    a: int
    k: int
    c: int
    b: int | None = None
    mode: str = EMPIRICAL
    w: int = field(init=False)

    def __post_init__(self):
        _check_mode(self.mode)
        if self.a < 0 or self.k < 1 or self.c < 1:
            raise ValueError("need a >= 0, k >= 1, c >= 1")
        b = self.c * self.c * self.k * self.a if self.b is None else int(self.b)
        if self.b is not None and self.mode == THEORY and b != self.c * self.c * self.k * self.a:
            raise ValueError("theory mode fixes b = c^2 k a")
        object.__setattr__(self, "b", b)
        exact = b / (self.c * self.k)
        w = int(exact) if exact == int(exact) else max(1, int(round(exact)))
        object.__setattr__(self, "w", w)
        if w > b:
            raise ValueError(f"weight {w} exceeds length {b}")
        if b > MAX_CODE_LENGTH:
            raise ValueError(f"codeword length {b} exceeds {MAX_CODE_LENGTH}")

    @property
    def t_code(self):
        """Intersection threshold 5 b / (c^2 k)."""
        return 5 * self.b / (self.c * self.c * self.k)


@dataclass(frozen=True, eq=False)
class BeepCode:
    """Constant-weight random code; codeword(r) depends only on (seed, r)."""

    params: BeepCodeParams
    seed: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def a(self):
        return self.params.a

    @property
    def b(self):
        return self.params.b

    @property
    def w(self):
        return self.params.w

    @property
    def kernel_seed(self):
        return derive_seed(self.seed, BEEP_CODE)

    def _check_payload(self, r):
        if not 0 <= r < (1 << self.a):
            raise ValueError(f"payload {r} outside {self.a}-bit range")

    def supports(self, payloads) -> np.ndarray:
        """Sorted 1-positions for each payload, shape (len(payloads), w)."""
        payloads = _payload_array(payloads)
        book = self._cache.get("book")
        if book is not None:
            return book[payloads]
        return kernels.beep_supports(self.kernel_seed, payloads, self.b, self.w)

    def support(self, r) -> np.ndarray:
        self._check_payload(r)
        return self.supports([r])[0]

    def materialise(self, limit=16):
        """Cache the full support table (2^a rows); refuses above ``limit``."""
        if self.a > limit:
            raise ExhaustiveLimitError(f"a={self.a} is too large to materialise (limit {limit})")
        if "book" not in self._cache:
            book = kernels.beep_supports(
                self.kernel_seed, np.arange(1 << self.a, dtype=np.uint64), self.b, self.w
            )
            book.setflags(write=False)
            self._cache["book"] = book
        return self._cache["book"]

    def codeword(self, r) -> BitString:
        bits = np.zeros(self.b, dtype=np.uint8)
        bits[self.support(r)] = 1
        return BitString(bits)

    def manifest(self):
        return {
            "family": "beep",
            "a": self.a,
            "k": self.params.k,
            "c": self.params.c,
            "delta": None,
            "b": self.b,
            "w": self.w,
            "seed": self.seed,
            "mode": self.params.mode,
        }


def gen_beep_code(params: BeepCodeParams, seed) -> BeepCode:
    return BeepCode(params, seed)


def support_reference(seed, r, b, w):
    """Slow scalar codeword support; independent of both kernels."""
    key = stream_key(seed, r)
    ctr = 0
    perm = {}
    picked = []
    for i in range(w):
        j, ctr = randbelow(key, ctr, b - i)
        j += i
        vi, vj = perm.get(i, i), perm.get(j, j)
        perm[i], perm[j] = vj, vi
        picked.append(vj)
    return sorted(picked)


def estimate_beep_violation_rate(code: BeepCode, trials, seed, batch=2048):
    """Fraction of sampled (S, r) with C(r) t_code-intersecting the OR of C(S).

    Each sample draws k distinct payloads S and one more payload r outside S.
    """
    p = code.params
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if (1 << p.a) <= p.k:
        raise ValueError(f"cannot draw k+1={p.k + 1} distinct payloads from 2^{p.a}")
    rng = np.random.default_rng(derive_seed(seed, 9))
    space = 1 << p.a
    violations = 0
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        draws = _distinct_rows(rng, space, p.k + 1, m)
        sup = code.supports(draws.ravel()).reshape(m, p.k + 1, p.w)
        union = np.zeros((m, p.b), dtype=bool)
        rows = np.arange(m)[:, None]
        for j in range(p.k):
            union[rows, sup[:, j, :]] = True
        hits = union[rows, sup[:, p.k, :]].sum(axis=1)
        violations += int(np.count_nonzero(hits >= p.t_code))
        done += m
    return violations / trials


def _distinct_rows(rng, space, width, count):
    """``count`` rows of ``width`` distinct integers from [0, space), uniformly ordered."""
    if space * count <= (1 << 24):
        return np.argsort(rng.random((count, space)), axis=1)[:, :width].astype(np.int64)
    out = rng.integers(space, size=(count, width), dtype=np.int64)
    while True:
        srt = np.sort(out, axis=1)
        bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
        if not bad.size:
            return out
        out[bad] = rng.integers(space, size=(len(bad), width), dtype=np.int64)


# --------------------------------------------------------------------------
# combined code


def combined_encode(beep: BeepCode, dist: DistanceCode, r, m) -> BitString:
    """D(m) written into the 1-positions of C(r); zeros elsewhere."""
    if beep.w != dist.b:
        raise ValueError(f"beep weight {beep.w} != distance length {dist.b}")
    return BitString(combined_bits(beep.support(r), dist.rows([m])[0], beep.b))


def combined_bits(support, dist_row, length):
    out = np.zeros(length, dtype=np.uint8)
    out[np.asarray(support)] = dist_row
    return out


# --------------------------------------------------------------------------
# manifests


def manifest_json(code) -> str:
    return json.dumps(code.manifest(), sort_keys=True)


def code_from_manifest(record) -> BeepCode | DistanceCode:
    if isinstance(record, str):
        record = json.loads(record)
    if record["family"] == "beep":
        params = BeepCodeParams(record["a"], record["k"], record["c"], b=record["b"],
                                mode=record.get("mode", EMPIRICAL))
        return BeepCode(params, record["seed"])
    if record["family"] == "distance":
        params = DistanceCodeParams(record["a"], record["delta"], record["c"],
                                    mode=record.get("mode", EMPIRICAL))
        return DistanceCode(params, record["seed"])
    raise ValueError(f"unknown code family {record['family']!r}")


def log2_ceil(n):
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0
