import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmlab import _kernels
from ccmlab.baseline import BaselineLink
from ccmlab.ccm import MAPS, CcmEncoder, ConjugationFunction, MapKind
from ccmlab.channel import HpaModel
from ccmlab.decoding import DecoderConfig, map_decode, map_decode_log, viterbi_decode

from oracles import bcjr_enumeration, cc_pam_oracle, ml_brute_force


def _block(enc, n_info, sigma2, seed):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_info)
    x = enc.encode(enc.terminate(bits), initial_state=int(rng.integers(enc.n_states))).x
    return bits, x + np.sqrt(sigma2) * rng.standard_normal(x.size)


@pytest.mark.parametrize("kind", list(MapKind))
@pytest.mark.parametrize("q,n_info", [(2, 6), (2, 8), (3, 5), (3, 7)])
@pytest.mark.parametrize("sigma2", [0.05, 0.4])
def test_bcjr_matches_enumeration(kind, q, n_info, sigma2):
    h = ConjugationFunction(np.array([0.0, 0.1, 0.45, 0.7, 1.0]))
    enc = CcmEncoder(q, kind, h)
    _, r = _block(enc, n_info, sigma2, seed=q * 100 + n_info)
    want = bcjr_enumeration(MAPS[kind], q, enc.levels, r, sigma2, n_info)
    post = map_decode(enc, r, sigma2, n_info=n_info)
    got = 1.0 / (1.0 + np.exp(-post.llr))
    assert np.max(np.abs(got - want)) < 1e-9
    log_llr = map_decode_log(enc, r, sigma2)[:n_info]
    assert np.max(np.abs(1.0 / (1.0 + np.exp(-log_llr)) - want)) < 1e-9
    assert np.all(np.isneginf(map_decode_log(enc, r, sigma2)[n_info:]))


def test_scaled_kernel_flags_underflow_and_log_kernel_survives():
    enc = CcmEncoder(3)
    table = enc.trellis.next_state
    c = np.ascontiguousarray(enc.levels[table])
    r = np.full(8, 50.0)  # every branch metric underflows
    prior = np.full(8, 1 / 8)
    assert np.isnan(_kernels.bcjr_scaled(table, c, r, 1e-3, 3, prior)[0])
    assert np.all(np.isfinite(_kernels.bcjr_log(table, c, r, 1e-3, 3, prior)[:5]))
    post = map_decode(enc, r, 1e-3)
    assert post.llr.shape == (5,)


@pytest.mark.parametrize("kind", list(MapKind))
def test_known_start_matches_enumeration(kind):
    enc = CcmEncoder(3, kind)
    rng = np.random.default_rng(8)
    x = enc.encode(enc.terminate(rng.integers(0, 2, 6)), initial_state=5).x
    r = x + 0.5 * rng.standard_normal(x.size)
    want = bcjr_enumeration(MAPS[kind], 3, enc.levels, r, 0.25, 6, starts=[5])
    for fn in (lambda c: map_decode(enc, r, 0.25, c).llr, lambda c: map_decode_log(enc, r, 0.25, c)[:6]):
        got = 1.0 / (1.0 + np.exp(-fn(DecoderConfig(initial_state=5))))
        assert np.max(np.abs(got - want)) < 1e-9


def test_noiseless_decoding_is_exact():
    enc = CcmEncoder(5, MapKind.MTM)
    bits = np.random.default_rng(3).integers(0, 2, 500)
    x = enc.encode(enc.terminate(bits)).x
    assert np.array_equal(map_decode(enc, x, 1e-3).bits, bits)


def test_hpa_aware_metric_needs_amplifier():
    enc = CcmEncoder(3)
    with pytest.raises(ValueError):
        map_decode(enc, np.zeros(8), 0.1, DecoderConfig("hpa_aware"))
    hpa = HpaModel(ibo_db=3.0).normalized(enc.stationary().dist, enc.levels)
    y = hpa.output(enc.encode(enc.terminate([1, 0, 1])).x)
    assert map_decode(enc, y, 1e-2, DecoderConfig("hpa_aware"), hpa).bits.tolist() == [1, 0, 1]


def test_map_decode_argument_checks():
    enc = CcmEncoder(3)
    with pytest.raises(ValueError):
        map_decode(enc, np.zeros(8), 0.0)
    with pytest.raises(ValueError):
        map_decode(enc, np.zeros(8), 0.1, n_info=4)
    with pytest.raises(ValueError):
        DecoderConfig("fancy")


@pytest.mark.parametrize("seed", range(6))
def test_viterbi_is_exhaustive_ml_on_8_bits(seed):
    link = BaselineLink()
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, 8)
    r = link.modulate(bits) + 0.7 * rng.standard_normal(14)
    assert np.array_equal(link.decode(r), ml_brute_force(r, 8))


def test_viterbi_strips_tail_and_checks_length():
    link = BaselineLink()
    assert link.decode(cc_pam_oracle([1, 1, 0])).tolist() == [1, 1, 0]
    with pytest.raises(ValueError):
        viterbi_decode(link.trellis, np.zeros(6), 6)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40))
@settings(max_examples=40, deadline=None)
def test_modulator_matches_shift_register_oracle(bits):
    assert np.allclose(BaselineLink().modulate(bits), cc_pam_oracle(bits))


def test_flat_channel_gives_zero_llr():
    enc = CcmEncoder(4, MapKind.MTM)
    r = np.random.default_rng(0).standard_normal(20)
    assert np.max(np.abs(map_decode(enc, r, 1e12).llr)) < 1e-9


def test_common_shift_leaves_llr_unchanged():
    # moving every received sample and every branch expectation by the same offset
    enc = CcmEncoder(3)
    table = enc.trellis.next_state
    c = np.ascontiguousarray(enc.levels[table])
    prior = np.full(8, 1 / 8)
    r = np.random.default_rng(1).standard_normal(12)
    a = _kernels.bcjr_log(table, c, r, 0.3, 3, prior)
    b = _kernels.bcjr_log(table, c + 0.7, r + 0.7, 0.3, 3, prior)
    assert np.allclose(a[:9], b[:9], atol=1e-9)


def test_viterbi_corrects_one_symbol_inside_half_distance():
    link = BaselineLink()
    words = [np.array(w) for w in itertools.product((0, 1), repeat=8)]
    cws = np.array([link.modulate(w) for w in words])
    sq = ((cws[:, None, :] - cws[None, :, :]) ** 2).sum(axis=2)
    d_min = np.sqrt(sq[sq > 0].min())
    bits = words[0b10110010]
    x = link.modulate(bits)
    for k in range(x.size):
        for sign in (-1.0, 1.0):
            r = x.copy()
            r[k] += sign * 0.49 * d_min
            assert np.array_equal(link.decode(r), bits)
