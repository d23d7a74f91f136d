import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beepsim.codes import (
    EMPIRICAL,
    THEORY,
    BeepCode,
    BeepCodeParams,
    BitString,
    DistanceCode,
    DistanceCodeParams,
    ExhaustiveLimitError,
    code_from_manifest,
    combined_encode,
    estimate_beep_violation_rate,
    extract_subsequence,
    gen_beep_code,
    gen_distance_code,
    hamming,
    intersect_count,
    manifest_json,
    ones_position,
    superimpose,
    verify_codebook,
    verify_distance_code,
    weight,
)

bitstrings = st.integers(1, 40).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 1), min_size=n, max_size=n), min_size=1, max_size=4))


# ---- primitives --------------------------------------------------------


@pytest.mark.parametrize("s,expected", [("0000", 0), ("1111", 4), ("0101", 2)])
def test_weight(s, expected):
    assert weight(s) == expected


def test_intersect_count_examples():
    assert intersect_count("1100", "1010") == 1
    assert intersect_count("1100", "0011") == 0
    assert intersect_count("1011", "1011") == weight("1011")
    with pytest.raises(ValueError):
        intersect_count("11", "111")


def test_superimpose_examples():
    assert superimpose(["1100", "1010"]) == "1110"
    assert superimpose([], length=4) == "0000"
    assert superimpose(["0110"]) == "0110"
    with pytest.raises(ValueError):
        superimpose(["01", "011"])
    with pytest.raises(ValueError):
        superimpose([])


def test_ones_position_examples():
    assert ones_position("0101", 1) == 1
    assert ones_position("0101", 2) == 3
    assert ones_position("0101", 3) is None
    with pytest.raises(ValueError):
        ones_position("0101", 0)


def test_extract_subsequence_examples():
    assert extract_subsequence("010001", "010101") == "101"
    assert len(extract_subsequence("110011", "000000")) == 0
    with pytest.raises(ValueError):
        extract_subsequence("01", "011")


def test_bitstring_basics():
    s = BitString("0110")
    assert len(s) == 4 and str(s) == "0110"
    assert BitString.from_int(6, 4) == s and s.to_int() == 6
    assert ~s == "1001"
    assert (s ^ "1111") == "1001"
    assert hash(s) == hash(BitString([0, 1, 1, 0]))
    with pytest.raises(ValueError):
        BitString("012")
    with pytest.raises(ValueError):
        BitString.from_int(16, 4)


@given(bitstrings)
def test_superimpose_algebra(rows):
    strings = [BitString(r) for r in rows]
    fwd = superimpose(strings)
    assert superimpose(list(reversed(strings))) == fwd
    assert superimpose(strings + strings) == fwd
    left = superimpose([superimpose(strings[:1]), superimpose(strings[1:], length=len(fwd))])
    assert left == fwd


@given(bitstrings)
def test_pairwise_identities(rows):
    s = BitString(rows[0])
    t = BitString(rows[-1])
    assert intersect_count(s, t) == intersect_count(t, s)
    assert hamming(s, t) == weight(s ^ t)


# ---- distance codes ----------------------------------------------------


def test_distance_code_sizes_and_determinism():
    code = gen_distance_code(DistanceCodeParams(2, 1 / 3, 108), seed=1)
    assert code.b == 216
    book = code.codebook()
    assert book.shape == (4, 216)
    again = gen_distance_code(DistanceCodeParams(2, 1 / 3, 108), seed=1)
    assert np.array_equal(book, again.codebook())
    assert code.codeword(3) == BitString(book[3])


def test_theory_mode_enforces_c_delta():
    with pytest.raises(ValueError):
        DistanceCodeParams(4, 1 / 3, 100, mode=THEORY)
    DistanceCodeParams(4, 1 / 3, 108, mode=THEORY)
    DistanceCodeParams(4, 1 / 3, 2, mode=EMPIRICAL)


def test_verify_tiny_codebooks():
    v = verify_codebook(["0000", "1111"], delta=1)
    assert v.min_distance == 4 and v.passed and v.pairs_checked == 1
    dup = verify_codebook(["0101", "0101", "1111"], delta=0.1)
    assert dup.min_distance == 0 and not dup.passed


def test_verify_checks_every_pair():
    code = gen_distance_code(DistanceCodeParams(6, 1 / 3, 30), seed=2)
    v = verify_distance_code(code)
    book = code.codebook().astype(int)
    brute = min(int((book[i] != book[j]).sum()) for i in range(64) for j in range(i + 1, 64))
    assert v.min_distance == brute
    assert v.pairs_checked == 64 * 63 // 2


def test_verify_refuses_large_a():
    code = gen_distance_code(DistanceCodeParams(20, 1 / 3, 108), seed=0)
    with pytest.raises(ExhaustiveLimitError, match="too large to verify exhaustively"):
        verify_distance_code(code)


def test_distance_code_a8_passes():
    code = gen_distance_code(DistanceCodeParams(8, 1 / 3, 108), seed=7)
    v = verify_distance_code(code)
    assert v.passed and v.pairs_checked == 32640


# ---- beep codes --------------------------------------------------------


def test_beep_code_sizes(backend):
    code = gen_beep_code(BeepCodeParams(4, 2, 3), seed=1)
    assert code.b == 72 and code.w == 12
    assert code.params.t_code == 20
    assert all(weight(code.codeword(r)) == 12 for r in range(16))


def test_beep_weight_exact_over_many_payloads():
    code = gen_beep_code(BeepCodeParams(16, 4, 5), seed=3)
    sup = code.supports(np.arange(1000))
    assert sup.shape == (1000, 80)
    assert all(len(set(row)) == 80 for row in sup.tolist())


def test_beep_code_deterministic():
    p = BeepCodeParams(8, 3, 4)
    a = gen_beep_code(p, 5).supports(range(50))
    b = gen_beep_code(p, 5).supports(range(50))
    c = gen_beep_code(p, 6).supports(range(50))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_wide_payloads_are_supported():
    code = gen_beep_code(BeepCodeParams(171, 5, 3), seed=1)
    sup = code.supports([2**170 + 5, 2**170 + 6])
    assert sup.shape == (2, 513) and not np.array_equal(sup[0], sup[1])


def test_empirical_rounding_of_weight():
    p = BeepCodeParams(8, 8, 6, b=100)
    assert p.w == 2  # 100 / 48 rounds to 2


def test_estimator_zero_on_good_code():
    code = gen_beep_code(BeepCodeParams(8, 8, 6), seed=3)
    assert estimate_beep_violation_rate(code, 2000, seed=1) <= 1e-2


class _CollapsedCode(BeepCode):
    """Every payload maps to the same codeword; every sample must violate."""

    def supports(self, payloads):
        payloads = np.asarray(list(payloads)).ravel()
        return np.tile(np.arange(self.w), (len(payloads), 1))


def test_estimator_flags_bad_code():
    code = _CollapsedCode(BeepCodeParams(8, 4, 6), seed=0)
    assert estimate_beep_violation_rate(code, 500, seed=1) == 1.0


def test_estimator_counts_zero_for_disjoint_samples():
    class Disjoint(BeepCode):
        def supports(self, payloads):
            payloads = np.asarray(list(payloads), dtype=np.int64).ravel()
            return (payloads[:, None] % 32) * self.w + np.arange(self.w)[None, :]

    code = Disjoint(BeepCodeParams(5, 2, 16), seed=0)  # b = 2560, w = 80
    assert estimate_beep_violation_rate(code, 200, seed=2) == 0.0


def test_estimator_errors():
    code = gen_beep_code(BeepCodeParams(2, 4, 6), seed=0)
    with pytest.raises(ValueError):
        estimate_beep_violation_rate(code, 10, seed=0)
    with pytest.raises(ValueError):
        estimate_beep_violation_rate(gen_beep_code(BeepCodeParams(8, 2, 6), 0), 0, seed=0)


def test_violation_rate_non_increasing_in_c():
    # at these sizes the rates are tiny (often exactly zero); the check guards
    # against a regression that makes larger c worse
    rates = {}
    for c in (5, 6, 8):
        vals = [estimate_beep_violation_rate(gen_beep_code(BeepCodeParams(4, 4, c), s), 400, s)
                for s in range(10)]
        rates[c] = (np.mean(vals), np.std(vals, ddof=1) / np.sqrt(len(vals)))
    for lo, hi in ((5, 6), (6, 8)):
        slack = 2 * np.hypot(rates[lo][1], rates[hi][1])
        assert rates[hi][0] <= rates[lo][0] + slack


# ---- combined code -----------------------------------------------------


class _FixedBeep:
    def __init__(self, word):
        self.word = BitString(word)
        self.w = weight(self.word)
        self.b = len(self.word)

    def support(self, r):
        return np.flatnonzero(self.word.bits)


class _FixedDist:
    def __init__(self, word):
        self.word = BitString(word)
        self.b = len(self.word)

    def rows(self, payloads):
        return self.word.bits[None, :]


def test_combined_encode_definition():
    assert combined_encode(_FixedBeep("010101"), _FixedDist("101"), 0, 0) == "010001"
    assert combined_encode(_FixedBeep("010101"), _FixedDist("111"), 0, 0) == "010101"
    assert combined_encode(_FixedBeep("010101"), _FixedDist("000"), 0, 0) == "000000"
    with pytest.raises(ValueError):
        combined_encode(_FixedBeep("0101"), _FixedDist("101"), 0, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 255), st.integers(0, 15), st.integers(0, 2**32))
def test_combined_round_trip(r, m, seed):
    beep = gen_beep_code(BeepCodeParams(8, 3, 2), seed)  # w = 16
    dist = gen_distance_code(DistanceCodeParams(4, 1 / 3, 4), seed)  # b = 16
    cd = combined_encode(beep, dist, r, m)
    assert extract_subsequence(cd, beep.codeword(r)) == dist.codeword(m)


def test_manifest_round_trip():
    beep = gen_beep_code(BeepCodeParams(8, 3, 4), 9)
    dist = gen_distance_code(DistanceCodeParams(5, 0.25, 40), 9)
    for code in (beep, dist):
        rec = json.loads(manifest_json(code))
        assert "bits" not in json.dumps(rec)
        clone = code_from_manifest(rec)
        assert clone.manifest() == code.manifest()
    assert np.array_equal(code_from_manifest(beep.manifest()).supports(range(5)), beep.supports(range(5)))
    assert np.array_equal(code_from_manifest(dist.manifest()).rows(range(5)), dist.rows(range(5)))
