import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmlab.baseline import BaselineLink, ConvCode, PamMapper, cc_encode, pam_map, run_baseline
from ccmlab.channel import HpaModel, NoiseModel


def test_code_parameters():
    code = ConvCode()
    assert code.taps() == ("1011011", "1111001")
    assert code.n_states == 64


def test_impulse_response():
    # a single 1 walks through both generators
    out = cc_encode(ConvCode(), [1], terminate=True)
    assert out[0::2].tolist() == [int(c) for c in "1011011"]
    assert out[1::2].tolist() == [int(c) for c in "1111001"]


def test_gray_levels_unit_power():
    m = PamMapper()
    assert np.mean(m.level_array() ** 2) == pytest.approx(1.0)
    assert m.scale == pytest.approx(1 / math.sqrt(5))
    got = pam_map(m, [0, 0, 0, 1, 1, 1, 1, 0]) * math.sqrt(5)
    assert np.allclose(got, [-3, -1, 1, 3])
    with pytest.raises(ValueError):
        pam_map(m, [1, 0, 1])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=30), st.data())
@settings(max_examples=50, deadline=None)
def test_codeword_linearity(a, data):
    b = data.draw(st.lists(st.integers(0, 1), min_size=len(a), max_size=len(a)))
    code = ConvCode()
    lhs = cc_encode(code, np.bitwise_xor(a, b))
    assert np.array_equal(lhs, cc_encode(code, a) ^ cc_encode(code, b))


def test_compressed_levels_stay_ordered_at_3db():
    # the nominal-metric decoder survives distortion without noise
    link = BaselineLink()
    hpa = link.amplifier(HpaModel(ibo_db=3.0))
    y = hpa.output(link.mapper.level_array())
    assert np.all(np.diff(y) > 0)
    mid = (link.mapper.level_array()[1:] + link.mapper.level_array()[:-1]) / 2
    # outer points compress inward but stay on their side of every boundary
    assert y[0] < mid[0] < y[1] < mid[1] < y[2] < mid[2] < y[3]
    bits = np.random.default_rng(0).integers(0, 2, 2000)
    noise = NoiseModel(300.0, p=1.0)
    assert np.array_equal(run_baseline(link, HpaModel(ibo_db=3.0), noise, bits), bits)


def test_linear_regime_noiseless_recovery():
    link = BaselineLink()
    bits = np.random.default_rng(1).integers(0, 2, 1000)
    assert np.array_equal(run_baseline(link, HpaModel(ibo_db=40.0), NoiseModel(300.0, 1.0), bits), bits)
