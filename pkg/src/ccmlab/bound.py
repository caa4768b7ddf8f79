"""Error-loop enumeration and the union bound on bit error probability.

An error loop of length ``L`` is an input error pattern ``e`` (``e[0] = 1``)
for which the correct and the competing path, started from the same state,
produce ``L`` differing output samples and then re-merge on the next common
input. Instances are the (start state, data) pairs for which that happens
exactly, so each bound evaluation only has to re-map grid states through
``h`` and the amplifier.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .ccm import CcmEncoder, MapKind, build_trellis
from .channel import HpaModel, ibo_to_scale


@dataclass
class ErrorLoop:
    e: tuple[int, ...]
    starts: np.ndarray  # (n_inst,)
    data: np.ndarray  # (n_inst, L) correct-path input bits

    @property
    def length(self) -> int:
        return len(self.e)

    @property
    def weight(self) -> int:
        return sum(self.e)

    def paths(self, next_state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Grid states of the correct and competing paths, each (n_inst, L)."""
        err = np.array(self.e, dtype=np.int64)
        z = np.empty_like(self.data)
        zalt = np.empty_like(self.data)
        s = self.starts.copy()
        sa = self.starts.copy()
        for j in range(self.length):
            s = next_state[s, self.data[:, j]]
            sa = next_state[sa, self.data[:, j] ^ err[j]]
            z[:, j] = s
            zalt[:, j] = sa
        return z, zalt


def _all_words(length: int) -> np.ndarray:
    idx = np.arange(1 << length)
    return (idx[:, None] >> np.arange(length - 1, -1, -1)) & 1


@lru_cache(maxsize=None)
def _enumerate_cached(kind: MapKind, q: int, l_min: int, l_max: int) -> tuple[ErrorLoop, ...]:
    table = build_trellis(q, kind).next_state
    n = 1 << q
    loops = []
    for length in range(l_min, l_max + 1):
        words = _all_words(length)
        starts = np.repeat(np.arange(n), len(words))
        data = np.tile(words, (n, 1))
        for tail in range(1 << (length - 1)):
            err = np.array([1] + [(tail >> (length - 2 - j)) & 1 for j in range(length - 1)],
                           dtype=np.int64)
            s = starts.copy()
            sa = starts.copy()
            ok = np.ones(len(starts), dtype=bool)
            for j in range(length):
                s = table[s, data[:, j]]
                sa = table[sa, data[:, j] ^ err[j]]
                ok &= s != sa
            # re-merge on the next input, whichever value it takes
            ok &= (table[s, 0] == table[sa, 0]) & (table[s, 1] == table[sa, 1])
            if ok.any():
                loops.append(ErrorLoop(tuple(int(v) for v in err), starts[ok], data[ok]))
    return tuple(loops)


def enumerate_loops(q: int, kind: MapKind = MapKind.BSM, l_min: int | None = None,
                    l_max: int | None = None) -> tuple[ErrorLoop, ...]:
    """Error loops with lengths in ``[l_min, l_max]`` (default ``[q, 2q]``)."""
    l_min = q if l_min is None else l_min
    l_max = 2 * q if l_max is None else l_max
    if not 1 <= l_min <= l_max:
        raise ValueError("need 1 <= l_min <= l_max")
    return _enumerate_cached(kind, q, l_min, l_max)


def d_eq(y, x, x_alt) -> float:
    y, x, x_alt = (np.asarray(a, dtype=float) for a in (y, x, x_alt))
    den = float(np.sum((x - x_alt) ** 2))
    if den == 0.0:
        raise ValueError("competing sequences are identical")
    return float((np.sum((y - x_alt) ** 2) - np.sum((y - x) ** 2)) / math.sqrt(den))


def pep(d, p_power: float, ebn0_db: float):
    """Pairwise error probability, signed so that d < 0 gives more than 1/2."""
    arg = np.asarray(d, dtype=float) / (2.0 * math.sqrt(p_power)) * math.sqrt(10.0 ** (ebn0_db / 10.0))
    out = 0.5 * erfc(arg)
    return float(out) if out.ndim == 0 else out


@dataclass
class BoundResult:
    value: float
    per_loop: np.ndarray
    ebn0_db: float
    loops: tuple[ErrorLoop, ...] = field(default=(), repr=False)

    def rows(self):
        for i, (lp, c) in enumerate(zip(self.loops, self.per_loop)):
            yield (self.ebn0_db, self.value, i, lp.length, lp.weight, float(c))


class LoopTable:
    """Flattened instances of a loop set, ready for repeated evaluation.

    Every instance becomes a row of ``(state, competing state)`` pair codes
    padded with a self-pair, which contributes nothing to any distance.
    """

    def __init__(self, loops, q: int, kind: MapKind = MapKind.BSM):
        self.q = q
        self.kind = kind
        self.loops = tuple(loops)
        self.n_states = 1 << q
        table = build_trellis(q, kind).next_state
        width = max((lp.length for lp in self.loops), default=1)
        rows, weights, owner = [], [], []
        for i, lp in enumerate(self.loops):
            z, za = lp.paths(table)
            codes = np.zeros((len(z), width), dtype=np.int64)
            codes[:, : lp.length] = z * self.n_states + za
            rows.append(codes)
            weights.append(np.full(len(z), lp.weight / 2.0 ** (q + lp.length)))
            owner.append(np.full(len(z), i))
        if rows:
            self.codes = np.concatenate(rows)
            self.weights = np.concatenate(weights)
            self.owner = np.concatenate(owner)
        else:
            self.codes = np.zeros((0, width), dtype=np.int64)
            self.weights = np.zeros(0)
            self.owner = np.zeros(0, dtype=np.int64)

    @classmethod
    def for_encoder(cls, encoder: CcmEncoder, l_min=None, l_max=None) -> "LoopTable":
        return cls(enumerate_loops(encoder.q, encoder.kind, l_min, l_max), encoder.q, encoder.kind)

    def __len__(self):
        return len(self.weights)

    def distances(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Numerator and squared-norm denominator of ``d_eq`` per instance."""
        a = (y[:, None] - x[None, :]) ** 2 - ((y - x) ** 2)[:, None]
        b = (x[:, None] - x[None, :]) ** 2
        num = a.ravel()[self.codes].sum(axis=1)
        den = b.ravel()[self.codes].sum(axis=1)
        return num, den

    def evaluate(self, x, y, dist, ebn0_db: float) -> BoundResult:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = float(np.dot(dist, x**2))
        if len(self) == 0:
            return BoundResult(0.0, np.zeros(len(self.loops)), ebn0_db, self.loops)
        num, den = self.distances(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = num / np.sqrt(den)
        # coincident levels make a loop invisible to the decoder
        d = np.where(den > 0, d, 0.0)
        contrib = self.weights * pep(d, p, ebn0_db)
        per_loop = np.bincount(self.owner, weights=contrib, minlength=len(self.loops))
        return BoundResult(float(per_loop.sum()), per_loop, ebn0_db, self.loops)


def union_bound(loops, encoder: CcmEncoder, hpa: HpaModel, ebn0_db: float,
                table: LoopTable | None = None) -> BoundResult:
    """Union bound for ``encoder`` (including its conjugation) through ``hpa``.

    The amplifier normalization is recomputed for this encoder's levels.
    """
    stats = encoder.stationary()
    x = encoder.levels
    hpa = hpa.normalized(stats.dist, x)
    if table is None:
        table = LoopTable(loops, encoder.q, encoder.kind)
    return table.evaluate(x, hpa.output(x), stats.dist, ebn0_db)


class BoundObjective:
    """Union bound as a function of the conjugated grid values ``v = h(k/2**q)``.

    ``value_and_grad`` returns the natural log of the bound and its gradient
    with respect to ``v``; the amplifier normalization and signal power are
    recomputed inside, so the gradient accounts for them too.
    """

    def __init__(self, table: LoopTable, hpa: HpaModel, dist, ebn0_db: float):
        self.table = table
        self.hpa = hpa
        self.dist = np.asarray(dist, dtype=float)
        self.ebn0_db = ebn0_db
        self.gamma = 10.0 ** (ebn0_db / 10.0)
        self.n_evals = 0

    def bound(self, v) -> float:
        x = 2.0 * np.asarray(v, dtype=float) - 1.0
        hpa = self.hpa.normalized(self.dist, x)
        return self.table.evaluate(x, hpa.output(x), self.dist, self.ebn0_db).value

    def value_and_grad(self, v) -> tuple[float, np.ndarray]:
        self.n_evals += 1
        t = self.table
        pi = self.dist
        ns = t.n_states
        x = 2.0 * np.asarray(v, dtype=float) - 1.0
        p = float(np.dot(pi, x**2))

        if self.hpa.ideal:
            g, dg = x.copy(), np.ones_like(x)
        else:
            bsc = ibo_to_scale(self.hpa.alpha, self.hpa.beta, self.hpa.ibo_db,
                               self.hpa.reference, p)
            u = bsc * x
            den_g = 1.0 + self.hpa.beta * u * u
            g = self.hpa.alpha * u / den_g
            dg = self.hpa.alpha * bsc * (1.0 - self.hpa.beta * u * u) / den_g**2
        gpow = float(np.dot(pi, g**2))
        amp = math.sqrt(p / gpow)
        y = amp * g

        num, den = t.distances(x, y)
        ok = den > 0
        sd = np.sqrt(np.where(ok, den, 1.0))
        d = np.where(ok, num / sd, 0.0)
        c = math.sqrt(self.gamma) / (2.0 * math.sqrt(p))
        arg = c * d
        peps = 0.5 * erfc(arg)
        total = float(np.dot(t.weights, peps))
        if total <= 0.0:
            return -np.inf, np.zeros_like(x)

        # d(total)/d(arg) per instance, then split through d = num / sqrt(den)
        dens = -t.weights * np.exp(-arg * arg) / math.sqrt(math.pi)
        dens = np.where(ok, dens, 0.0)
        g_num = dens * c / sd
        g_den = dens * c * (-0.5 * d / (sd * sd))
        g_c = float(np.dot(dens, d))

        width = t.codes.shape[1]
        gn = np.bincount(t.codes.ravel(), weights=np.repeat(g_num, width), minlength=ns * ns)
        gd = np.bincount(t.codes.ravel(), weights=np.repeat(g_den, width), minlength=ns * ns)
        gn = gn.reshape(ns, ns)  # [i, j]: correct state i, competing state j
        gd = gd.reshape(ns, ns)

        # a_ij = (y_i - x_j)^2 - (y_i - x_i)^2 ; b_ij = (x_i - x_j)^2
        diff_yx = y[:, None] - x[None, :]
        grad_x = -2.0 * np.sum(gn * diff_yx, axis=0)
        grad_x += 2.0 * np.sum(gn, axis=1) * (y - x)
        grad_y = 2.0 * np.sum(gn * diff_yx, axis=1) - 2.0 * np.sum(gn, axis=1) * (y - x)
        xx = x[:, None] - x[None, :]
        grad_x += 2.0 * np.sum(gd * xx, axis=1) - 2.0 * np.sum(gd * xx, axis=0)

        # y = amp * g(x), amp = sqrt(p / sum(pi g^2)), p = sum(pi x^2)
        d_amp = float(np.dot(grad_y, g))
        grad_g = grad_y * amp - d_amp * amp * pi * g / gpow
        grad_x += grad_g * dg
        grad_x += d_amp * amp * pi * x / p
        grad_x += g_c * (-c / p) * pi * x
        if not self.hpa.ideal and self.hpa.reference == "average":
            # B scales as 1/sqrt(p); dg/dB = dg * x / B
            grad_x -= float(np.dot(grad_g, dg * x)) * pi * x / p

        return math.log(total), 2.0 * grad_x / total


def write_bound_csv(path, results: list[BoundResult], header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["ebn0_db", "bound", "loop_id", "loop_length", "loop_weight", "contribution"])
        for res in results:
            for row in res.rows():
                w.writerow([f"{row[0]:g}", f"{row[1]:.12e}", row[2], row[3], row[4], f"{row[5]:.12e}"])
