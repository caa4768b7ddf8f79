"""Memoryless Saleh amplifier (AM/AM only) followed by AWGN."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SALEH_ALPHA = 2.1587
SALEH_BETA = 1.1517


def ibo_to_scale(
    alpha: float,
    beta: float,
    ibo_db: float,
    reference: str = "peak",
    input_power: float = 1.0,
) -> float:
    """Input scale ``B`` placing the drive ``ibo_db`` below saturation.

    With ``reference="peak"`` the unit peak amplitude is backed off from the
    saturation amplitude ``1/sqrt(beta)``; with ``"average"`` the RMS
    amplitude ``sqrt(input_power)`` is.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if reference == "peak":
        drive = 1.0
    elif reference == "average":
        drive = math.sqrt(input_power)
    else:
        raise ValueError(f"unknown back-off reference {reference!r}")
    return 10.0 ** (-ibo_db / 20.0) / (math.sqrt(beta) * drive)


@dataclass(frozen=True)
class HpaModel:
    alpha: float = SALEH_ALPHA
    beta: float = SALEH_BETA
    ibo_db: float = 40.0
    reference: str = "peak"
    input_power: float = 1.0  # only used by the average reference
    a_norm: float = 1.0
    ideal: bool = False  # g(x) = x, for linear-channel cross-checks

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.a_norm <= 0:
            raise ValueError("a_norm must be positive")

    @classmethod
    def linear(cls) -> "HpaModel":
        return cls(ideal=True)

    @property
    def b_scale(self) -> float:
        return ibo_to_scale(self.alpha, self.beta, self.ibo_db, self.reference, self.input_power)

    def am_am(self, x):
        if self.ideal:
            return np.asarray(x, dtype=float) * 1.0
        return saleh_am_am(self, x)

    def output(self, x):
        """``A * g(x)``."""
        return self.a_norm * self.am_am(x)

    def normalized(self, dist, levels) -> "HpaModel":
        """Copy with ``a_norm`` set so that E[y^2] = E[x^2] over ``levels``."""
        dist = np.asarray(dist, dtype=float)
        levels = np.asarray(levels, dtype=float)
        p = float(np.dot(dist, levels**2))
        hpa = replace(self, input_power=p) if self.reference == "average" else self
        return replace(hpa, a_norm=compute_norm(hpa, dist, levels))


def saleh_am_am(hpa: HpaModel, x):
    u = hpa.b_scale * np.asarray(x, dtype=float)
    return hpa.alpha * u / (1.0 + hpa.beta * u * u)


def compute_norm(hpa: HpaModel, dist, levels) -> float:
    dist = np.asarray(dist, dtype=float)
    levels = np.asarray(levels, dtype=float)
    p = float(np.dot(dist, levels**2))
    out_power = float(np.dot(dist, hpa.am_am(levels) ** 2))
    if out_power == 0.0:
        raise ValueError("amplifier output has zero power; degenerate constellation")
    return math.sqrt(p / out_power)


@dataclass(frozen=True)
class NoiseModel:
    """AWGN calibrated so that Eb/N0 = P / (2 sigma^2), one bit per sample."""

    ebn0_db: float
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("signal power must be positive")

    @property
    def sigma2(self) -> float:
        if math.isinf(self.ebn0_db) and self.ebn0_db > 0:
            return 0.0
        return self.p / (2.0 * 10.0 ** (self.ebn0_db / 10.0))

    def rng(self, *key: int) -> np.random.Generator:
        """Independent stream for ``key`` (e.g. grid index, block index)."""
        return np.random.default_rng([self.seed, *key])


@dataclass
class ChannelOutput:
    y: np.ndarray
    r: np.ndarray


def transmit(hpa: HpaModel, noise: NoiseModel, x, key: tuple[int, ...] = (), rng=None) -> ChannelOutput:
    y = hpa.output(x)
    if rng is None:
        rng = noise.rng(*key)
    sigma = math.sqrt(noise.sigma2)
    r = y + sigma * rng.standard_normal(y.shape) if sigma > 0 else y.copy()
    return ChannelOutput(y=y, r=r)
