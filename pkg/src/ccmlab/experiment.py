"""Experiment configuration and the Monte Carlo / bound / design drivers."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .baseline import BaselineLink
from .bound import BoundResult, LoopTable, union_bound
from .ccm import CcmEncoder, ConjugationFunction, MapKind
from .channel import HpaModel, NoiseModel
from .decoding import DecoderConfig, branch_expectations
from .optimizer import OptimizationTrace, OptimizerConfig, optimize_h

log = logging.getLogger(__name__)

SCHEMES = ("ccm_bsm", "ccm_mtm", "baseline")
PDF_STREAM = 0x5D_F0  # keys the histogram bit stream apart from BER blocks


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _key(name, kind=str):
    return field(metadata={"key": name, "kind": kind})


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = field(default="ccm_bsm", metadata={"key": "scheme"})
    q: int = field(default=5, metadata={"key": "q", "kind": int})
    conj_source: str = field(default="identity", metadata={"key": "conj_source"})
    hpa_alpha: float = field(default=2.1587, metadata={"key": "hpa.alpha", "kind": float})
    hpa_beta: float = field(default=1.1517, metadata={"key": "hpa.beta", "kind": float})
    ibo_db: float = field(default=40.0, metadata={"key": "hpa.ibo_db", "kind": float})
    backoff_reference: str = field(default="peak", metadata={"key": "hpa.reference"})
    ebn0_db: float = field(default=10.0, metadata={"key": "channel.ebn0_db", "kind": float})
    master_seed: int = field(default=1, metadata={"key": "channel.seed", "kind": int})
    ebn0_grid: tuple[float, ...] = field(default=(10.0,), metadata={"key": "ebn0_grid", "kind": _floats})
    block_info_bits: int = field(default=10_000, metadata={"key": "block_info_bits", "kind": int})
    stop_min_errors: int = field(default=100, metadata={"key": "stop_min_errors", "kind": int})
    stop_max_bits: int = field(default=10**8, metadata={"key": "stop_max_bits", "kind": int})
    workers: int = field(default=1, metadata={"key": "workers", "kind": int})
    initial_state: int = field(default=0, metadata={"key": "encoder.initial_state", "kind": int})
    decoder_metric: str = field(default="nominal", metadata={"key": "decoder.metric"})
    # known: the decoder starts from encoder.initial_state; uniform: any grid state
    decoder_prior: str = field(default="known", metadata={"key": "decoder.initial_prior"})
    opt_m: int = field(default=101, metadata={"key": "optimizer.m", "kind": int})
    opt_max_iterations: int = field(default=2000, metadata={"key": "optimizer.max_iterations", "kind": int})
    opt_objective_tolerance: float = field(default=1e-8, metadata={"key": "optimizer.objective_tolerance", "kind": float})
    opt_step_tolerance: float = field(default=1e-10, metadata={"key": "optimizer.step_tolerance", "kind": float})
    opt_seed_shape: str = field(default="linear", metadata={"key": "optimizer.seed_shape"})
    opt_seed: int = field(default=0, metadata={"key": "optimizer.seed", "kind": int})
    opt_param_bound: float = field(default=0.0, metadata={"key": "optimizer.param_bound", "kind": float})  # 0: per-map default
    loop_l_min: int = field(default=0, metadata={"key": "bound.l_min", "kind": int})  # 0: use q
    loop_l_max: int = field(default=0, metadata={"key": "bound.l_max", "kind": int})  # 0: use 2q
    pdf_samples: int = field(default=10**6, metadata={"key": "pdf.samples", "kind": int})

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.q < 1:
            raise ConfigError("q must be positive")
        if not self.ebn0_grid:
            raise ConfigError("ebn0_grid is empty")
        if not all(math.isfinite(v) for v in self.ebn0_grid) or not math.isfinite(self.ebn0_db):
            raise ConfigError("Eb/N0 values must be finite")
        if any(b <= a for a, b in zip(self.ebn0_grid, self.ebn0_grid[1:])):
            raise ConfigError("ebn0_grid must be strictly increasing")
        if self.scheme != "baseline" and self.block_info_bits < self.q:
            raise ConfigError("block_info_bits must be at least q")
        if self.block_info_bits < 1 or self.stop_min_errors < 1 or self.stop_max_bits < 1:
            raise ConfigError("block size and stopping limits must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.master_seed < 0:
            raise ConfigError("channel.seed must be non-negative")
        if self.backoff_reference not in ("peak", "average"):
            raise ConfigError("hpa.reference must be 'peak' or 'average'")
        if self.decoder_metric not in ("nominal", "hpa_aware"):
            raise ConfigError("decoder.metric must be 'nominal' or 'hpa_aware'")
        if self.opt_param_bound < 0:
            raise ConfigError("optimizer.param_bound must be non-negative (0 selects the default)")
        if self.decoder_prior not in ("known", "uniform"):
            raise ConfigError("decoder.initial_prior must be 'known' or 'uniform'")
        if not 0 <= self.initial_state < (1 << self.q):
            raise ConfigError("encoder.initial_state outside the state grid")

    # -- text form ---------------------------------------------------------

    @classmethod
    def keys(cls) -> dict[str, str]:
        return {f.metadata["key"]: f.name for f in fields(cls)}

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        kinds = {f.metadata["key"]: f.metadata.get("kind", str) for f in fields(cls)}
        names = cls.keys()
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in names:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[names[key]] = kinds[key](value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.from_text(text, **overrides)

    def to_lines(self) -> list[str]:
        """Resolved settings as ``key=value`` lines.

        ``workers`` is left out: it never changes a result, and keeping it
        would make otherwise identical outputs differ.
        """
        out = []
        for f in fields(self):
            if f.name in _NOT_ECHOED:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(float(x)) for x in v)
            out.append(f"{f.metadata['key']}={v}")
        return out

    # -- derived objects ---------------------------------------------------

    @property
    def map_kind(self) -> MapKind:
        if self.scheme == "baseline":
            raise ConfigError("the baseline scheme has no chaotic map")
        return MapKind(self.scheme.split("_", 1)[1])

    def hpa(self) -> HpaModel:
        return HpaModel(alpha=self.hpa_alpha, beta=self.hpa_beta, ibo_db=self.ibo_db,
                        reference=self.backoff_reference)

    def optimizer_config(self) -> OptimizerConfig:
        try:
            return self._optimizer_config()
        except ValueError as exc:
            raise ConfigError(f"optimizer: {exc}") from None

    def _optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            m=self.opt_m, ebn0_db=self.ebn0_db, max_iterations=self.opt_max_iterations,
            objective_tolerance=self.opt_objective_tolerance, step_tolerance=self.opt_step_tolerance,
            seed_shape=self.opt_seed_shape, seed=self.opt_seed, param_bound=self.opt_param_bound or None,
        )

    def loop_table(self) -> LoopTable:
        enc = CcmEncoder(self.q, self.map_kind)
        return LoopTable.for_encoder(enc, self.loop_l_min or None, self.loop_l_max or None)


_NOT_ECHOED = {"workers"}


# -- conjugation resolution ---------------------------------------------------

def run_optimize(cfg: ExperimentConfig) -> OptimizationTrace:
    enc = CcmEncoder(cfg.q, cfg.map_kind)
    return optimize_h(enc, cfg.hpa(), cfg.loop_table(), cfg.optimizer_config())


def resolve_conj(cfg: ExperimentConfig) -> ConjugationFunction:
    if cfg.conj_source == "identity":
        return ConjugationFunction.identity(cfg.opt_m)
    if cfg.conj_source == "optimize":
        return run_optimize(cfg).final
    try:
        return ConjugationFunction.load(cfg.conj_source)
    except OSError as exc:
        raise ConfigError(f"cannot read conjugation file: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad conjugation file {cfg.conj_source}: {exc}") from None


def build_encoder(cfg: ExperimentConfig, conj: ConjugationFunction | None = None) -> CcmEncoder:
    return CcmEncoder(cfg.q, cfg.map_kind, conj if conj is not None else resolve_conj(cfg))


# -- Monte Carlo ---------------------------------------------------------------

@dataclass
class BerPoint:
    ebn0_db: float
    bits_sent: int
    bit_errors: int
    capped: bool

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_sent if self.bits_sent else float("nan")


@dataclass
class BerCurve:
    points: list[BerPoint]
    config: ExperimentConfig

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.config.to_lines():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ebn0_db", "bits_sent", "bit_errors", "ber", "capped"])
        for p in self.points:
            w.writerow([f"{p.ebn0_db:g}", p.bits_sent, p.bit_errors, f"{p.ber:.6e}", int(p.capped)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


class _CcmBlocks:
    def __init__(self, cfg: ExperimentConfig, encoder: CcmEncoder):
        self.n = cfg.block_info_bits
        self.q = encoder.q
        self.init = cfg.initial_state
        self.table = encoder.trellis.next_state
        self.levels = encoder.levels
        stats = encoder.stationary()
        self.p = stats.p
        self.hpa = cfg.hpa().normalized(stats.dist, self.levels)
        dec = DecoderConfig(cfg.decoder_metric,
                            initial_state=cfg.initial_state if cfg.decoder_prior == "known" else None)
        self.expected = branch_expectations(encoder, dec, self.hpa)
        self.prior = dec.prior(encoder.n_states)

    def errors(self, rng: np.random.Generator, sigma2: float) -> int:
        bits = rng.integers(0, 2, self.n, dtype=np.int64)
        tx = np.concatenate([bits, np.zeros(self.q, dtype=np.int64)])
        z = _kernels.walk_trellis(self.table, tx, self.init)
        r = self.hpa.output(self.levels[z]) + math.sqrt(sigma2) * rng.standard_normal(z.size)
        llr = _kernels.bcjr_scaled(self.table, self.expected, r, sigma2, self.q, self.prior)
        if np.isnan(llr[0]):
            llr = _kernels.bcjr_log(self.table, self.expected, r, sigma2, self.q, self.prior)
        return int(np.count_nonzero((llr[: self.n] > 0) != bits))


class _BaselineBlocks:
    def __init__(self, cfg: ExperimentConfig):
        self.n = cfg.block_info_bits
        self.link = BaselineLink()
        self.p = self.link.power
        self.hpa = self.link.amplifier(cfg.hpa())

    def errors(self, rng: np.random.Generator, sigma2: float) -> int:
        bits = rng.integers(0, 2, self.n, dtype=np.int64)
        x = self.link.modulate(bits)
        r = self.hpa.output(x) + math.sqrt(sigma2) * rng.standard_normal(x.size)
        return int(np.count_nonzero(self.link.decode(r) != bits))


def make_blocks(cfg: ExperimentConfig, conj: ConjugationFunction | None = None):
    if cfg.scheme == "baseline":
        return _BaselineBlocks(cfg)
    return _CcmBlocks(cfg, build_encoder(cfg, conj))


def _ber_point(cfg: ExperimentConfig, sim, pool, i: int, ebn0: float) -> BerPoint:
    noise = NoiseModel(ebn0, sim.p, cfg.master_seed)
    sigma2 = noise.sigma2
    batch = max(4 * cfg.workers, 4)
    sent = errors = j = 0
    while True:
        counts = pool.map(lambda jj: sim.errors(noise.rng(i, jj), sigma2), range(j, j + batch))
        for c in counts:
            sent += sim.n
            errors += c
            j += 1
            if errors >= cfg.stop_min_errors or sent >= cfg.stop_max_bits:
                log.info("Eb/N0 %g dB: %d errors in %d bits", ebn0, errors, sent)
                return BerPoint(ebn0, sent, errors, capped=errors < cfg.stop_min_errors)


def run_ber(cfg: ExperimentConfig, conj: ConjugationFunction | None = None) -> BerCurve:
    """Bit error rate over ``cfg.ebn0_grid``.

    Block ``j`` at grid index ``i`` draws its data and noise from the stream
    keyed ``(master_seed, i, j)``; blocks are accumulated in index order and
    the run stops at the first block meeting a stopping rule, so the result
    does not depend on ``workers``.
    """
    sim = make_blocks(cfg, conj)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        points = [_ber_point(cfg, sim, pool, i, eb) for i, eb in enumerate(cfg.ebn0_grid)]
    return BerCurve(points, cfg)


def required_ebn0(cfg: ExperimentConfig, target: float, conj: ConjugationFunction | None = None,
                  max_points: int = 40) -> tuple[float, BerCurve]:
    """Eb/N0 where the BER crosses ``target``.

    Walks ``cfg.ebn0_grid`` (extended with its last spacing if needed) until
    a point falls below ``target``, then interpolates log10(BER) linearly
    between the two bracketing points. Returns NaN if the first point is
    already below target or no crossing is found.
    """
    grid = list(cfg.ebn0_grid)
    step = grid[-1] - grid[-2] if len(grid) > 1 else 0.5
    sim = make_blocks(cfg, conj)
    points: list[BerPoint] = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for i in range(max_points):
            eb = grid[i] if i < len(grid) else grid[-1] + step * (i - len(grid) + 1)
            points.append(_ber_point(cfg, sim, pool, i, eb))
            if points[-1].ber < target:
                break
    curve = BerCurve(points, replace(cfg, ebn0_grid=tuple(p.ebn0_db for p in points)))
    return interpolate_crossing(points, target), curve


def interpolate_crossing(points, target: float) -> float:
    for a, b in zip(points, points[1:]):
        if a.ber >= target > b.ber:
            if b.ber == 0:
                return b.ebn0_db
            la, lb, lt = math.log10(a.ber), math.log10(b.ber), math.log10(target)
            return a.ebn0_db + (la - lt) / (la - lb) * (b.ebn0_db - a.ebn0_db)
    return float("nan")


# -- bound tables and histograms --------------------------------------------------

def run_bound(cfg: ExperimentConfig, conj: ConjugationFunction | None = None) -> list[BoundResult]:
    enc = build_encoder(cfg, conj)
    table = cfg.loop_table()
    return [union_bound(table.loops, enc, cfg.hpa(), eb, table) for eb in cfg.ebn0_grid]


def sample_stream(cfg: ExperimentConfig, samples: int, conj: ConjugationFunction | None = None) -> np.ndarray:
    """``s_n`` for ``samples`` encoder steps driven by the seeded bit stream."""
    enc = build_encoder(cfg, conj)
    rng = np.random.default_rng([cfg.master_seed, PDF_STREAM])
    bits = rng.integers(0, 2, samples, dtype=np.int64)
    z = _kernels.walk_trellis(enc.trellis.next_state, bits, cfg.initial_state)
    return (enc.levels[z] + 1.0) / 2.0


def mass_near(s, centers=(0.0, 0.5, 1.0), half_width: float = 0.05) -> float:
    s = np.asarray(s, dtype=float)
    hit = np.zeros(s.shape, dtype=bool)
    for c in centers:
        hit |= np.abs(s - c) <= half_width
    return float(hit.mean()) if s.size else 0.0


def emit_pdf_histogram(cfg: ExperimentConfig, samples: int | None = None,
                       conj: ConjugationFunction | None = None, bins: int = 101):
    """Histogram of the conjugated samples ``s_n`` over [0, 1]; returns (edges, counts)."""
    samples = cfg.pdf_samples if samples is None else samples
    if samples < 0:
        raise ConfigError("sample count must be non-negative")
    edges = np.linspace(0.0, 1.0, bins + 1)
    if samples == 0:
        return edges, np.zeros(bins, dtype=np.int64)
    counts, _ = np.histogram(sample_stream(cfg, samples, conj), bins=edges)
    return edges, counts


def histogram_csv(cfg: ExperimentConfig, edges, counts) -> str:
    buf = io.StringIO()
    for line in cfg.to_lines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count"])
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        w.writerow([f"{lo:.6f}", f"{hi:.6f}", int(c)])
    return buf.getvalue()


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
