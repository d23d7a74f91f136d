"""Counter-based 64-bit pseudorandom function shared by every random object.

All randomness in the package flows through ``mix64`` so that the compiled
and pure-Python kernels produce bit-identical codewords and noise.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
KEY_SALT = 0xD1B54A32D192ED03

# Domain separators for derive_seed.
BEEP_CODE = 1
DISTANCE_CODE = 2
NOISE = 3
PAYLOAD_DRAW = 4
TRIAL = 5
PROGRAM = 6
GRAPH = 7
MESSAGE = 8


def mix64(z):
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, index):
    """Key of the sub-stream ``index`` under ``seed``."""
    return mix64((seed & MASK64) ^ mix64((index * GOLDEN + KEY_SALT) & MASK64))


def draw(key, counter):
    """The ``counter``-th 64-bit output of the stream with the given key."""
    return mix64((key + (counter + 1) * GOLDEN) & MASK64)


def derive_seed(seed, *parts):
    """Fold integer ``parts`` into ``seed``; order matters."""
    h = seed & MASK64
    for p in parts:
        h = stream_key(h, p & MASK64)
    return h


def randbelow(key, counter, m):
    """Unbiased integer in [0, m) from the stream; returns (value, next_counter).

    Lemire's multiply-shift with rejection. ``m`` must be below 2**32.
    """
    threshold = ((1 << 64) - m) % m
    while True:
        x = draw(key, counter)
        counter += 1
        prod = x * m
        if (prod & MASK64) >= threshold:
            return prod >> 64, counter


def bernoulli_threshold(p):
    """Integer cutoff t such that ``draw >> 11 < t`` happens with probability p."""
    if p <= 0:
        return 0
    return min(1 << 53, int(round(p * (1 << 53))))


def randbelow_big(key, counter, m):
    """Like ``randbelow`` but for any positive ``m``; uses rejection above 2**64."""
    if m <= (1 << 64):
        return randbelow(key, counter, m)
    bits = (m - 1).bit_length()
    words = (bits + 63) // 64
    while True:
        x = 0
        for _ in range(words):
            x = (x << 64) | draw(key, counter)
            counter += 1
        x >>= words * 64 - bits
        if x < m:
            return x, counter


def fold_payload(p):
    """64-bit kernel index of a payload; identity below 2**64."""
    if p <= MASK64:
        return p
    h = 0
    while p:
        h = mix64(h ^ (p & MASK64)) ^ 0x5851F42D4C957F2D
        p >>= 64
    return h


def random_bits(key, counter, nbits):
    """``nbits`` uniform bits as an int; returns (value, next_counter)."""
    x = 0
    for _ in range((nbits + 63) // 64):
        x = (x << 64) | draw(key, counter)
        counter += 1
    return x >> (((nbits + 63) // 64) * 64 - nbits), counter
