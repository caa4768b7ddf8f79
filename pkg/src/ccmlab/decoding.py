"""MAP decoding of CCM blocks and soft Viterbi decoding of the baseline code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ccm import CcmEncoder
from .channel import HpaModel


@dataclass(frozen=True)
class DecoderConfig:
    metric_constellation: str = "nominal"  # or "hpa_aware"
    termination: bool = True
    initial_state: int | None = None  # None: uniform over the grid

    def __post_init__(self):
        if self.metric_constellation not in ("nominal", "hpa_aware"):
            raise ValueError(f"unknown metric constellation {self.metric_constellation!r}")

    def prior(self, n_states: int) -> np.ndarray:
        if self.initial_state is None:
            return np.full(n_states, 1.0 / n_states)
        if not 0 <= self.initial_state < n_states:
            raise ValueError(f"initial state {self.initial_state} outside the grid")
        p = np.zeros(n_states)
        p[self.initial_state] = 1.0
        return p


@dataclass
class PosteriorBlock:
    llr: np.ndarray
    bits: np.ndarray


def branch_expectations(encoder: CcmEncoder, cfg: DecoderConfig, hpa: HpaModel | None = None) -> np.ndarray:
    """Expected received sample on every trellis branch, shape (2**q, 2)."""
    levels = encoder.levels
    if cfg.metric_constellation == "hpa_aware":
        if hpa is None:
            raise ValueError("hpa_aware metrics need the amplifier model")
        levels = hpa.output(levels)
    return np.ascontiguousarray(levels[encoder.trellis.next_state])


def map_decode(
    encoder: CcmEncoder,
    r,
    sigma2: float,
    cfg: DecoderConfig = DecoderConfig(),
    hpa: HpaModel | None = None,
    n_info: int | None = None,
) -> PosteriorBlock:
    """Exact forward-backward posteriors for the information bits of ``r``.

    The initial state is uniform over the grid unless ``cfg.initial_state``
    pins it. With termination on, the
    last ``q`` stages only admit zero-input branches and are excluded from
    the returned block.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    r = np.ascontiguousarray(r, dtype=float)
    n_tail = encoder.q if cfg.termination else 0
    if n_info is not None and r.size != n_info + n_tail:
        raise ValueError(f"received {r.size} samples, expected {n_info + n_tail}")
    if r.size <= n_tail:
        raise ValueError("block shorter than the termination tail")
    c = branch_expectations(encoder, cfg, hpa)
    table = encoder.trellis.next_state
    prior = cfg.prior(encoder.n_states)
    llr = _kernels.bcjr_scaled(table, c, r, float(sigma2), n_tail, prior)
    if np.isnan(llr[0]):
        llr = _kernels.bcjr_log(table, c, r, float(sigma2), n_tail, prior)
    llr = llr[: r.size - n_tail]
    return PosteriorBlock(llr=llr, bits=(llr > 0).astype(np.int64))


def map_decode_log(encoder, r, sigma2, cfg=DecoderConfig(), hpa=None) -> np.ndarray:
    """Full-length LLRs from the log-domain recursion, tail stages included."""
    r = np.ascontiguousarray(r, dtype=float)
    n_tail = encoder.q if cfg.termination else 0
    return _kernels.bcjr_log(encoder.trellis.next_state, branch_expectations(encoder, cfg, hpa),
                             r, float(sigma2), n_tail, cfg.prior(encoder.n_states))


def viterbi_decode(cc_trellis, r, n_tail: int) -> np.ndarray:
    """Soft Viterbi over ``cc_trellis`` (see ``baseline.CcTrellis``); returns info bits."""
    r = np.ascontiguousarray(r, dtype=float)
    if r.size <= n_tail:
        raise ValueError("block shorter than the termination tail")
    out = _kernels.viterbi_pam(cc_trellis.next_state, cc_trellis.branch_symbol,
                               cc_trellis.levels, r, n_tail)
    return out[: r.size - n_tail]
