"""Chaos-coded modulation encoder on a dyadic grid.

The encoder state is an integer ``k`` in ``[0, 2**q)`` standing for the
chaotic sample ``z = k / 2**q``. Each information bit drives one step of a
piecewise-linear map plus a ``b * 2**-q`` perturbation, so the whole
transmitter is a finite-state machine whose branch output is the successor
state passed through the conjugation function.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np


class MapKind(enum.Enum):
    BSM = "bsm"
    MTM = "mtm"

    @classmethod
    def parse(cls, name: str) -> "MapKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown map {name!r}; expected 'bsm' or 'mtm'") from None


def _bernoulli_shift(k: int, b: int, q: int) -> int:
    n = 1 << q
    return ((2 * k) % n + b) % n


def _tent_multimap(k: int, b: int, q: int) -> int:
    # Tent acting on the 2**q cells of its Markov partition (fold maps cell k
    # to cell n-1-k), so the image is always an even index. The bit selects
    # the branch shifted by one half, f(z, 1) = T(z) + 1/2 mod 1.
    n = 1 << q
    tent = 2 * k if 2 * k < n else 2 * (n - 1 - k)
    f = (tent + b * (n >> 1)) % n
    return (f + b) % n


MAPS: dict[MapKind, Callable[[int, int, int], int]] = {
    MapKind.BSM: _bernoulli_shift,
    MapKind.MTM: _tent_multimap,
}


def encode_step(state: int, bit: int, q: int, kind: MapKind = MapKind.BSM) -> int:
    """Grid index of ``f(z, b) + b * 2**-q`` for ``z = state / 2**q``."""
    if not 0 <= state < (1 << q):
        raise ValueError(f"state {state} outside [0, {1 << q})")
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    return MAPS[kind](int(state), int(bit), q)


@dataclass(frozen=True, eq=False)
class ConjugationFunction:
    """Strictly increasing map of [0, 1] onto itself, sampled at ``i / m``."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        check_samples(s)

    @property
    def m(self) -> int:
        return len(self.samples) - 1

    @classmethod
    def identity(cls, m: int = 101) -> "ConjugationFunction":
        s = np.arange(m + 1) / m
        return cls(s)

    def __call__(self, z):
        return eval_h(self, z)

    def to_text(self) -> str:
        lines = [str(self.m)] + [f"{v:.17g}" for v in self.samples]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ConjugationFunction":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty conjugation file")
        try:
            m = int(lines[0])
        except ValueError:
            raise ValueError(f"first line must be the integer M, got {lines[0]!r}") from None
        if len(lines) != m + 2:
            raise ValueError(f"expected {m + 1} samples for M={m}, found {len(lines) - 1}")
        values = []
        for i, ln in enumerate(lines[1:]):
            try:
                values.append(float(ln))
            except ValueError:
                raise ValueError(f"sample {i}: cannot parse {ln!r}") from None
        return cls(np.array(values))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "ConjugationFunction":
        return cls.from_text(Path(path).read_text())


def check_samples(s: np.ndarray) -> None:
    """Raise ValueError naming the first sample that breaks the constraints."""
    if s.ndim != 1 or len(s) < 3:
        raise ValueError("need at least M+1 = 3 samples")
    if not np.all(np.isfinite(s)):
        i = int(np.flatnonzero(~np.isfinite(s))[0])
        raise ValueError(f"sample {i} is not finite")
    if s[0] != 0.0:
        raise ValueError("sample 0 must be exactly 0")
    if s[-1] != 1.0:
        raise ValueError(f"sample {len(s) - 1} must be exactly 1")
    bad = np.flatnonzero(np.diff(s) <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise ValueError(f"sample {i} is not strictly greater than sample {i - 1}")


def eval_h(conj: ConjugationFunction, z):
    """Piecewise-linear interpolation of the conjugation samples."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise ValueError("h is defined on [0, 1] only")
    grid = np.arange(conj.m + 1) / conj.m
    out = np.interp(z, grid, conj.samples)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Trellis:
    """State-transition tables of a CCM encoder.

    ``next_state[k, b]`` is the successor of state ``k`` under input ``b``;
    the branch output is the successor's grid value, so ``out`` is the
    same table. Both are independent of the conjugation function.
    """

    q: int
    next_state: np.ndarray

    @property
    def out(self) -> np.ndarray:
        return self.next_state

    @property
    def n_states(self) -> int:
        return 1 << self.q


_TRELLIS_CACHE: dict[tuple[MapKind, int], Trellis] = {}


def build_trellis(q: int, kind: MapKind = MapKind.BSM) -> Trellis:
    key = (kind, q)
    if key not in _TRELLIS_CACHE:
        n = 1 << q
        f = MAPS[kind]
        table = np.array([[f(k, b, q) for b in (0, 1)] for k in range(n)], dtype=np.int64)
        table.setflags(write=False)
        _TRELLIS_CACHE[key] = Trellis(q, table)
    return _TRELLIS_CACHE[key]


@dataclass
class SymbolSequence:
    z: np.ndarray  # grid states
    s: np.ndarray  # h(z / 2**q)
    x: np.ndarray  # 2 s - 1


@dataclass
class StationaryStats:
    dist: np.ndarray
    p: float


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CcmEncoder:
    q: int = 5
    kind: MapKind = MapKind.BSM
    conj: ConjugationFunction = field(default_factory=ConjugationFunction.identity)

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        if not isinstance(self.conj, ConjugationFunction):
            raise TypeError("conj must be a ConjugationFunction")

    @property
    def n_states(self) -> int:
        return 1 << self.q

    @property
    def trellis(self) -> Trellis:
        return build_trellis(self.q, self.kind)

    @cached_property
    def levels(self) -> np.ndarray:
        """Transmitted value ``2 h(k / 2**q) - 1`` for every grid state ``k``."""
        z = np.arange(self.n_states) / self.n_states
        return 2.0 * eval_h(self.conj, z) - 1.0

    def with_conj(self, conj: ConjugationFunction) -> "CcmEncoder":
        return CcmEncoder(self.q, self.kind, conj)

    def states(self, bits, initial_state: int = 0) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.size == 0:
            raise ValueError("empty bit block")
        if not 0 <= initial_state < self.n_states:
            raise ValueError(f"initial state {initial_state} outside the grid")
        table = self.trellis.next_state
        z = np.empty(bits.size, dtype=np.int64)
        k = initial_state
        for n, b in enumerate(bits):
            k = table[k, b]
            z[n] = k
        return z

    def encode(self, bits, initial_state: int = 0) -> SymbolSequence:
        z = self.states(bits, initial_state)
        x = self.levels[z]
        return SymbolSequence(z=z, s=(x + 1.0) / 2.0, x=x)

    def terminate(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        if bits.size == 0:
            raise ValueError("empty bit block")
        return np.concatenate([bits, np.zeros(self.q, dtype=np.int64)])

    def transition_matrix(self) -> np.ndarray:
        n = self.n_states
        t = np.zeros((n, n))
        for k in range(n):
            for b in (0, 1):
                t[k, self.trellis.next_state[k, b]] += 0.5
        return t

    def stationary(self, tol: float = 1e-12, max_iter: int = 100_000) -> StationaryStats:
        # Lazy chain shares the stationary law and cannot oscillate.
        t = 0.5 * (np.eye(self.n_states) + self.transition_matrix())
        pi = np.full(self.n_states, 1.0 / self.n_states)
        for _ in range(max_iter):
            nxt = pi @ t
            nxt /= nxt.sum()
            if np.abs(nxt - pi).sum() < tol:
                pi = nxt
                break
            pi = nxt
        else:
            raise ConvergenceError("stationary distribution did not converge")
        return StationaryStats(dist=pi, p=float(np.dot(pi, self.levels**2)))


def encode_block(encoder: CcmEncoder, bits, initial_state: int = 0) -> SymbolSequence:
    return encoder.encode(bits, initial_state)


def stationary_distribution(encoder: CcmEncoder) -> StationaryStats:
    return encoder.stationary()


def terminate_block(encoder: CcmEncoder, bits) -> np.ndarray:
    return encoder.terminate(bits)
