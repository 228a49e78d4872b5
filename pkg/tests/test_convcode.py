import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmalink.convcode import (
    CodeSpec,
    SearchBudgetExceeded,
    build_trellis,
    distance_spectrum,
    encode,
    trellis_states,
    viterbi_decode,
)

C57 = CodeSpec.from_octal(3, ["5", "7"])


def reference_encode(code, bits):
    # polynomial multiplication over GF(2), one output stream per generator
    bits = np.asarray(bits, dtype=int)
    taps = code.taps()
    if len(bits) == 0:
        return np.zeros(code.rate_inverse * code.memory, dtype=int)
    streams = [np.convolve(bits, t)[: len(bits) + code.memory] % 2 for t in taps]
    return np.stack(streams, axis=1).ravel()


def all_words(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)


def exhaustive_ml(code, metrics, words):
    """Maximum-correlation word; ties go to the lexicographically smallest word."""
    signs = 1.0 - 2.0 * encode(code, words)
    score = metrics @ signs.T
    # words are in lexicographic order, argmax returns the first maximum
    return words[np.argmax(score, axis=-1)]


# -- CodeSpec / trellis --------------------------------------------------------


def test_codespec_validation():
    with pytest.raises(ValueError):
        CodeSpec(2, 3, (5,))
    with pytest.raises(ValueError):
        CodeSpec(2, 3, (5, 0))
    with pytest.raises(ValueError):
        CodeSpec(2, 3, (5, 0o17))
    with pytest.raises(ValueError):
        CodeSpec(1, 17, (1,))
    assert C57.generators == (5, 7)
    assert C57.octal == ["5", "7"]
    assert C57.num_states == 4
    assert C57.coded_length(10) == 24


@pytest.mark.parametrize("code", [C57, CodeSpec.from_octal(7, ["171", "133"]), CodeSpec.from_octal(5, ["25", "33", "37"])])
def test_trellis_structure(code):
    t = build_trellis(code)
    assert t.next_state.shape == (code.num_states, 2)
    incoming = np.bincount(t.next_state.ravel(), minlength=code.num_states)
    assert np.all(incoming == 2)
    # leaving state 0 with input 1 emits the first column of taps
    np.testing.assert_array_equal(t.outputs[0, 1], encode(code, [1])[: code.rate_inverse])
    assert not t.outputs[0, 0].any()


# -- encoder ----------------------------------------------------------------------


def test_encode_examples():
    assert not encode(C57, np.zeros(8)).any()
    assert len(encode(C57, np.zeros(8))) == 2 * (8 + 2)
    np.testing.assert_array_equal(encode(C57, [1]), [1, 1, 0, 1, 1, 1])
    np.testing.assert_array_equal(encode(CodeSpec.from_octal(3, ["7", "5"]), [1]), [1, 1, 1, 0, 1, 1])
    assert encode(C57, []).shape == (4,)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=0, max_size=40))
def test_encode_matches_polynomial_reference(bits):
    np.testing.assert_array_equal(encode(C57, bits), reference_encode(C57, bits))


def test_encode_linearity_random_pairs():
    rng = np.random.default_rng(3)
    code = CodeSpec.from_octal(7, ["171", "133"])
    for _ in range(100):
        a, b = rng.integers(0, 2, (2, 37), dtype=np.uint8)
        np.testing.assert_array_equal(encode(code, a ^ b), encode(code, a) ^ encode(code, b))


def test_encode_batch_equals_rows():
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, (5, 20), dtype=np.uint8)
    batch = encode(C57, bits)
    for row, out in zip(bits, batch):
        np.testing.assert_array_equal(encode(C57, row), out)


def test_zero_termination():
    rng = np.random.default_rng(5)
    code = CodeSpec.from_octal(5, ["25", "33", "37"])
    for _ in range(20):
        assert trellis_states(code, rng.integers(0, 2, 30))[-1] == 0


def test_encode_rejects_non_bits():
    with pytest.raises(ValueError):
        encode(C57, [0, 2])


# -- decoder ------------------------------------------------------------------------


def test_noiseless_decoding():
    rng = np.random.default_rng(6)
    x = rng.integers(0, 2, (1000, 50), dtype=np.uint8)
    metrics = 1.0 - 2.0 * encode(C57, x)
    np.testing.assert_array_equal(viterbi_decode(C57, metrics), x)
    np.testing.assert_array_equal(viterbi_decode(C57, metrics[0]), x[0])


def test_single_and_double_flip_corrected():
    rng = np.random.default_rng(7)
    x = rng.integers(0, 2, 8, dtype=np.uint8)
    signs = 1.0 - 2.0 * encode(C57, x)
    assert len(signs) == 20
    for i in range(len(signs)):
        flipped = signs.copy()
        flipped[i] *= -1
        np.testing.assert_array_equal(viterbi_decode(C57, flipped), x)
    for i, j in itertools.combinations(range(len(signs)), 2):
        flipped = signs.copy()
        flipped[[i, j]] *= -1
        np.testing.assert_array_equal(viterbi_decode(C57, flipped), x)


def test_viterbi_equals_exhaustive_ml_all_words():
    rng = np.random.default_rng(8)
    words = all_words(10)
    tx = 1.0 - 2.0 * encode(C57, words)
    metrics = np.repeat(tx, 50, axis=0) + rng.normal(0, 1.0, (len(words) * 50, tx.shape[1]))
    np.testing.assert_array_equal(viterbi_decode(C57, metrics), exhaustive_ml(C57, metrics, words))


@pytest.mark.parametrize("code", [CodeSpec.from_octal(4, ["15", "17"]), CodeSpec.from_octal(3, ["5", "7", "7"])])
def test_viterbi_equals_exhaustive_ml_other_codes(code):
    rng = np.random.default_rng(9)
    words = all_words(9)
    n = code.coded_length(9)
    metrics = rng.normal(0, 1.0, (400, n)) + (1 - 2.0 * encode(code, words[rng.integers(0, 512, 400)]))
    np.testing.assert_array_equal(viterbi_decode(code, metrics), exhaustive_ml(code, metrics, words))


def test_exact_ties_resolve_to_lexicographic_minimum():
    # small integer metrics make equal path metrics common
    rng = np.random.default_rng(10)
    words = all_words(8)
    metrics = rng.integers(-1, 2, (3000, C57.coded_length(8))).astype(float)
    np.testing.assert_array_equal(viterbi_decode(C57, metrics), exhaustive_ml(C57, metrics, words))
    assert not viterbi_decode(C57, np.zeros(C57.coded_length(12))).any()


def test_decoding_is_deterministic():
    rng = np.random.default_rng(11)
    metrics = rng.normal(size=(130, C57.coded_length(40)))
    first = viterbi_decode(C57, metrics)
    np.testing.assert_array_equal(first, viterbi_decode(C57, metrics))
    # lane grouping must not matter
    np.testing.assert_array_equal(first[70], viterbi_decode(C57, metrics[70]))


def test_decoder_length_errors():
    with pytest.raises(ValueError):
        viterbi_decode(C57, np.zeros(7))
    with pytest.raises(ValueError):
        viterbi_decode(C57, np.zeros(2))


# -- distance spectrum ------------------------------------------------------------------


def detour_oracle(code, max_len, max_distance):
    """Enumerate every detour of up to max_len inputs that leaves and first re-enters state 0."""
    trellis = build_trellis(code)
    spectrum = {}
    for length in range(1, max_len + 1):
        for body in itertools.product((0, 1), repeat=length):
            if body[0] != 1:
                continue
            u = list(body) + [0] * code.memory
            state, weight, ok = 0, 0, True
            for t, b in enumerate(u):
                weight += int(trellis.outputs[state, b].sum())
                state = int(trellis.next_state[state, b])
                if state == 0 and t < len(u) - 1:
                    ok = False
                    break
            if ok and weight <= max_distance:
                spectrum[weight] = spectrum.get(weight, 0) + sum(body)
    return dict(sorted(spectrum.items()))


def test_spectrum_57():
    s = distance_spectrum(C57, 10)
    assert s.free_distance == 5
    assert s.weights == {5: 1.0, 6: 4.0, 7: 12.0, 8: 32.0, 9: 80.0, 10: 192.0}
    assert s.weights == detour_oracle(C57, 14, 10)


@pytest.mark.parametrize("code", [CodeSpec.from_octal(4, ["15", "17"]), CodeSpec.from_octal(3, ["5", "7", "7"])])
def test_spectrum_matches_detour_oracle(code):
    s = distance_spectrum(code, 12)
    assert s.weights == detour_oracle(code, 14, 12)


@pytest.mark.parametrize("code", [C57, CodeSpec.from_octal(4, ["15", "17"]), CodeSpec.from_octal(5, ["25", "33", "37"])])
def test_free_distance_equals_min_codeword_weight(code):
    words = all_words(12)[1:]
    weights = encode(code, words).sum(axis=1)
    assert distance_spectrum(code, 20).free_distance == weights.min()


def test_duplicated_generators_double_distances():
    single = distance_spectrum(C57, 10)
    doubled = distance_spectrum(CodeSpec.from_octal(3, ["5", "7", "5", "7"]), 20)
    assert doubled.weights == {2 * d: c for d, c in single.weights.items()}


def test_spectrum_truncation():
    s = distance_spectrum(C57, 7)
    assert max(s.weights) <= 7
    assert s.truncation_distance == 7


def test_catastrophic_code_exhausts_budget():
    # 1+D and 1+D^2 share the factor 1+D
    with pytest.raises(SearchBudgetExceeded):
        distance_spectrum(CodeSpec.from_octal(3, ["6", "5"]), 10, max_steps=200)
