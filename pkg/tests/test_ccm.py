from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmlab.ccm import (
    CcmEncoder,
    ConjugationFunction,
    MapKind,
    build_trellis,
    encode_step,
    eval_h,
)


def test_bsm_step_examples():
    # z = 3/8 -> 2z mod 1 = 6/8, plus one grid cell for b = 1
    assert encode_step(3, 0, 3, MapKind.BSM) == 6
    assert encode_step(3, 1, 3, MapKind.BSM) == 7
    assert encode_step(5, 1, 3, MapKind.BSM) == 3


def test_mtm_step_examples():
    # tent on cells: k < 4 -> 2k, else 2(7 - k); b = 1 adds half a turn and a cell
    assert [encode_step(k, 0, 3, MapKind.MTM) for k in range(8)] == [0, 2, 4, 6, 6, 4, 2, 0]
    assert [encode_step(k, 1, 3, MapKind.MTM) for k in range(8)] == [5, 7, 1, 3, 3, 1, 7, 5]


@pytest.mark.parametrize("kind", list(MapKind))
@pytest.mark.parametrize("q", [2, 3, 5])
def test_every_state_has_two_successors_and_two_predecessors(kind, q):
    t = build_trellis(q, kind).next_state
    n = 1 << q
    assert np.all(t[:, 0] != t[:, 1])
    assert np.array_equal(np.bincount(t.ravel(), minlength=n), np.full(n, 2))


def test_step_rejects_bad_input():
    with pytest.raises(ValueError):
        encode_step(8, 0, 3)
    with pytest.raises(ValueError):
        encode_step(0, 2, 3)


@pytest.mark.parametrize("kind", list(MapKind))
def test_stationary_law_is_uniform(kind):
    stats = CcmEncoder(5, kind).stationary()
    assert np.allclose(stats.dist, 1 / 32, atol=1e-12)


def test_bsm_identity_power_exact():
    levels = [Fraction(2 * k, 32) - 1 for k in range(32)]
    exact = sum(v * v for v in levels) / 32
    assert exact == Fraction(2736, 8192)
    assert CcmEncoder(5).stationary().p == pytest.approx(float(exact), abs=1e-15)


def test_encode_walks_the_map():
    enc = CcmEncoder(3)
    seq = enc.encode([1, 0, 1, 1], initial_state=2)
    assert seq.z.tolist() == [5, 2, 5, 3]
    assert np.allclose(seq.x, 2 * seq.z / 8 - 1)
    assert enc.terminate([1, 1]).tolist() == [1, 1, 0, 0, 0]


def test_termination_returns_bsm_to_zero():
    enc = CcmEncoder(4)
    z = enc.states(enc.terminate(np.ones(9, dtype=int)), initial_state=11)
    assert z[-1] == 0


def test_conjugation_rejects_with_index():
    with pytest.raises(ValueError, match="sample 2"):
        ConjugationFunction(np.array([0.0, 0.4, 0.4, 1.0]))
    with pytest.raises(ValueError, match="sample 0"):
        ConjugationFunction(np.array([0.1, 0.4, 1.0]))
    with pytest.raises(ValueError, match="sample 3"):
        ConjugationFunction(np.array([0.0, 0.4, 0.5, 0.9]))


def test_conjugation_text_rejects_count_mismatch():
    with pytest.raises(ValueError, match="expected 4 samples"):
        ConjugationFunction.from_text("3\n0\n0.5\n1\n")


def test_eval_h_domain():
    h = ConjugationFunction.identity(10)
    assert h(0.35) == pytest.approx(0.35)
    with pytest.raises(ValueError):
        eval_h(h, 1.2)


@st.composite
def monotone_samples(draw):
    m = draw(st.integers(2, 60))
    inc = np.array(draw(st.lists(st.floats(1e-3, 1.0), min_size=m, max_size=m)))
    s = np.concatenate([[0.0], np.cumsum(inc) / inc.sum()])
    s[-1] = 1.0
    return s


@given(monotone_samples())
@settings(max_examples=50, deadline=None)
def test_conjugation_text_round_trip(s):
    h = ConjugationFunction(s)
    back = ConjugationFunction.from_text(h.to_text())
    assert np.array_equal(back.samples, h.samples)
    # 17 significant digits: every double survives the trip
    lines = h.to_text().splitlines()
    assert int(lines[0]) == h.m
    assert [float(v) for v in lines[1:]] == h.samples.tolist()


@given(monotone_samples(), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_h_is_monotone_and_onto(s, z):
    h = ConjugationFunction(s)
    assert h(0.0) == 0.0 and h(1.0) == 1.0
    assert h(z) <= h(min(1.0, z + 1e-3)) + 1e-15


@given(st.sampled_from(list(MapKind)), st.integers(1, 8), st.data())
def test_step_stays_on_grid(kind, q, data):
    k = data.draw(st.integers(0, (1 << q) - 1))
    b = data.draw(st.integers(0, 1))
    assert 0 <= encode_step(k, b, q, kind) < (1 << q)
