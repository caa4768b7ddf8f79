"""Chaos-coded modulation over a nonlinear amplifier channel."""

from .baseline import BaselineLink, ConvCode, PamMapper, cc_encode, pam_map, run_baseline
from .bound import BoundObjective, BoundResult, ErrorLoop, LoopTable, d_eq, enumerate_loops, pep, union_bound
from .ccm import (
    CcmEncoder,
    ConjugationFunction,
    MapKind,
    Trellis,
    build_trellis,
    encode_block,
    encode_step,
    stationary_distribution,
    terminate_block,
)
from .channel import HpaModel, NoiseModel, compute_norm, saleh_am_am, transmit
from .decoding import DecoderConfig, PosteriorBlock, map_decode, viterbi_decode
from .experiment import BerCurve, ConfigError, ExperimentConfig, emit_pdf_histogram, run_ber, run_bound, run_optimize
from .optimizer import OptimizationError, OptimizationTrace, OptimizerConfig, optimize_h

__version__ = "0.1.0"
