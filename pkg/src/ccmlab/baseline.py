"""Uncompensated reference link: rate-1/2 (133, 171) code, Gray 4-PAM, soft Viterbi."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .channel import HpaModel, NoiseModel, transmit
from .decoding import viterbi_decode


@dataclass(frozen=True)
class ConvCode:
    constraint_length: int = 7
    generators: tuple[int, int] = (0o133, 0o171)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    def taps(self) -> tuple[str, str]:
        k = self.constraint_length
        return tuple(format(g, f"0{k}b") for g in self.generators)


# Gray labels (c1, c2): 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_GRAY_INDEX = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}


@dataclass(frozen=True)
class PamMapper:
    levels: tuple[float, ...] = tuple(v / math.sqrt(5.0) for v in (-3.0, -1.0, 1.0, 3.0))

    @property
    def scale(self) -> float:
        return self.levels[3] / 3.0

    def level_array(self) -> np.ndarray:
        return np.array(self.levels)


def cc_encode(code: ConvCode, bits, terminate: bool = True) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size == 0:
        raise ValueError("empty bit block")
    if terminate:
        bits = np.concatenate([bits, np.zeros(code.memory, dtype=np.int64)])
    g1, g2 = code.generators
    return _kernels.conv_encode_bits(g1, g2, code.constraint_length, bits)


def pam_map(mapper: PamMapper, coded) -> np.ndarray:
    coded = np.asarray(coded, dtype=np.int64)
    if coded.size % 2:
        raise ValueError("coded length must be even")
    idx = np.array([0, 1, 3, 2])[2 * coded[0::2] + coded[1::2]]
    return mapper.level_array()[idx]


@dataclass(frozen=True)
class CcTrellis:
    """Code trellis with branches labelled by their 4-PAM symbol index."""

    next_state: np.ndarray
    branch_symbol: np.ndarray
    levels: np.ndarray


def build_cc_trellis(code: ConvCode, mapper: PamMapper) -> CcTrellis:
    # state = last `memory` inputs, most recent in the top bit
    m = code.memory
    n = code.n_states
    g1, g2 = code.generators
    nxt = np.empty((n, 2), dtype=np.int64)
    sym = np.empty((n, 2), dtype=np.int64)
    for s in range(n):
        for b in (0, 1):
            reg = (b << m) | s
            c1 = bin(reg & g1).count("1") & 1
            c2 = bin(reg & g2).count("1") & 1
            nxt[s, b] = reg >> 1
            sym[s, b] = _GRAY_INDEX[(c1, c2)]
    return CcTrellis(nxt, sym, mapper.level_array())


@dataclass(frozen=True)
class BaselineLink:
    code: ConvCode = ConvCode()
    mapper: PamMapper = PamMapper()

    @cached_property
    def trellis(self) -> CcTrellis:
        return build_cc_trellis(self.code, self.mapper)

    @property
    def power(self) -> float:
        return float(np.mean(self.mapper.level_array() ** 2))

    def amplifier(self, hpa: HpaModel) -> HpaModel:
        lv = self.mapper.level_array()
        return hpa.normalized(np.full(lv.size, 1.0 / lv.size), lv)

    def modulate(self, bits) -> np.ndarray:
        return pam_map(self.mapper, cc_encode(self.code, bits))

    def decode(self, r) -> np.ndarray:
        return viterbi_decode(self.trellis, r, self.code.memory)


def run_baseline(link: BaselineLink, hpa: HpaModel, noise: NoiseModel, bits,
                 key: tuple[int, ...] = (), rng=None) -> np.ndarray:
    """Send ``bits`` through code, mapper, amplifier and AWGN; return decisions.

    The Viterbi metric uses the nominal levels whatever the back-off.
    """
    hpa = link.amplifier(hpa)
    out = transmit(hpa, noise, link.modulate(bits), key=key, rng=rng)
    return link.decode(out.r)
