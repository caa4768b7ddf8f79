"""Design of the conjugation function by minimizing the union bound.

The samples are parameterized as ``s^i = sum_{j<=i} softmax(u)_j``, which
meets ``s^0 = 0 < s^1 < ... < s^M = 1`` for every real ``u``; the search is
then unconstrained. The bound only sees ``h`` at the ``2**q`` grid states, so
the gradient is computed with respect to those values and pulled back
through the interpolation and the softmax.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bound import BoundObjective, LoopTable
from .ccm import CcmEncoder, ConjugationFunction, MapKind
from .channel import HpaModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    m: int = 101
    ebn0_db: float = 10.0
    max_iterations: int = 2000
    objective_tolerance: float = 1e-8
    step_tolerance: float = 1e-10
    seed_shape: str = "linear"  # or "random"
    seed: int = 0
    patience: int = 5
    # |u_j| <= param_bound keeps every increment above exp(-2 bound) / m;
    # None picks the per-map default below
    param_bound: float | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.objective_tolerance <= 0 or self.step_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.seed_shape not in ("linear", "random"):
            raise ValueError(f"unknown seed shape {self.seed_shape!r}")
        if self.param_bound is not None and self.param_bound <= 0:
            raise ValueError("param_bound must be positive")


# The loop set stops at length 2q. Under the shift map two paths fed the same
# q inputs always re-merge, so a flat h cannot hide long ambiguous events from
# the bound. The fold of the tent map can keep paths apart indefinitely, and a
# wide box lets the optimizer exploit that truncation; keep its slopes tame.
DEFAULT_PARAM_BOUND = {MapKind.BSM: 8.0, MapKind.MTM: 1.5}


def resolve_param_bound(cfg: OptimizerConfig, kind: MapKind) -> float:
    return DEFAULT_PARAM_BOUND[kind] if cfg.param_bound is None else float(cfg.param_bound)


@dataclass
class OptimizationTrace:
    iterations: list[tuple[float, float]] = field(default_factory=list)  # (objective, margin)
    final: ConjugationFunction | None = None
    final_objective: float = float("nan")
    seed_objective: float = float("nan")
    converged: bool = False
    message: str = ""

    def write_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "constraint_margin"])
            for i, (obj, margin) in enumerate(self.iterations):
                w.writerow([i, f"{obj:.15e}", f"{margin:.6e}"])


class OptimizationError(RuntimeError):
    pass


def samples_from_params(u: np.ndarray) -> np.ndarray:
    w = np.exp(u - u.max())
    delta = w / w.sum()
    s = np.concatenate([[0.0], np.cumsum(delta)])
    s[-1] = 1.0
    return s


def params_from_samples(s: np.ndarray) -> np.ndarray:
    delta = np.diff(np.asarray(s, dtype=float))
    if np.any(delta <= 0):
        raise OptimizationError("seed is not strictly increasing")
    u = np.log(delta)
    return u - u.mean()


def min_increment(m: int, param_bound: float) -> float:
    return float(np.exp(-2.0 * param_bound) / m)


def interpolation_matrix(q: int, m: int) -> np.ndarray:
    """``W`` with ``h(k / 2**q) = (W @ s)[k]`` for piecewise-linear ``h``."""
    n = 1 << q
    w = np.zeros((n, m + 1))
    for k in range(n):
        pos = k * m / n
        i = min(int(np.floor(pos)), m - 1)
        t = pos - i
        w[k, i] += 1.0 - t
        w[k, i + 1] += t
    return w


def margin(s: np.ndarray) -> float:
    return float(np.min(np.diff(s)))


def seed_samples(cfg: OptimizerConfig) -> np.ndarray:
    if cfg.seed_shape == "linear":
        return np.arange(cfg.m + 1) / cfg.m
    rng = np.random.default_rng(cfg.seed)
    # clipped so the seed sits inside every default parameter box
    return samples_from_params(np.clip(rng.normal(0.0, 0.5, cfg.m), -1.0, 1.0))


class _Problem:
    def __init__(self, q: int, m: int, objective):
        self.w = interpolation_matrix(q, m)
        self.objective = objective

    def __call__(self, u):
        w = np.exp(u - u.max())
        delta = w / w.sum()
        s = samples_from_params(u)
        value, grad_v = self.objective(self.w @ s)
        grad_s = self.w.T @ grad_v
        # s^i = sum_{j<=i} delta_j
        grad_delta = np.cumsum(grad_s[::-1])[::-1][1:]
        grad_u = delta * (grad_delta - np.dot(delta, grad_delta))
        return value, grad_u


def optimize_h(
    encoder: CcmEncoder,
    hpa: HpaModel,
    table: LoopTable | None = None,
    cfg: OptimizerConfig = OptimizerConfig(),
    objective=None,
    seed: np.ndarray | None = None,
) -> OptimizationTrace:
    """Minimize the union bound over the sampled conjugation function.

    ``objective`` may replace the bound: it maps grid values ``h(k/2**q)`` to
    ``(log objective, gradient)``. The reported objectives are exponentiated.
    """
    if objective is None:
        if table is None:
            table = LoopTable.for_encoder(encoder)
        stats = encoder.stationary()
        objective = BoundObjective(table, hpa, stats.dist, cfg.ebn0_db).value_and_grad

    s0 = seed_samples(cfg) if seed is None else np.asarray(seed, dtype=float)
    try:
        ConjugationFunction(s0)
    except ValueError as exc:
        raise OptimizationError(f"infeasible seed: {exc}") from exc
    if len(s0) != cfg.m + 1:
        raise OptimizationError(f"seed has {len(s0) - 1} segments, config says {cfg.m}")
    u0 = params_from_samples(s0)
    box = resolve_param_bound(cfg, encoder.kind)
    if np.any(np.abs(u0) > box):
        raise OptimizationError("seed increments are too uneven for the parameter box")
    problem = _Problem(encoder.q, cfg.m, objective)

    f0, _ = problem(u0)
    trace = OptimizationTrace(seed_objective=float(np.exp(f0)))
    trace.iterations.append((trace.seed_objective, margin(samples_from_params(u0))))
    state = {"best_u": u0, "best_f": f0, "prev_u": u0, "stall": 0, "stop": ""}

    def callback(intermediate_result):
        u = intermediate_result.x
        f = float(intermediate_result.fun)
        trace.iterations.append((float(np.exp(f)), margin(samples_from_params(u))))
        prev = state["best_f"]
        if f <= prev:
            state["best_u"], state["best_f"] = u.copy(), f
        # objective is a log, so an absolute change here is a relative one in the bound
        state["stall"] = state["stall"] + 1 if abs(prev - f) < cfg.objective_tolerance else 0
        step = float(np.linalg.norm(u - state["prev_u"]))
        state["prev_u"] = u.copy()
        if state["stall"] >= cfg.patience:
            state["stop"] = "objective change below tolerance"
            raise StopIteration
        if step < cfg.step_tolerance:
            state["stop"] = "step below tolerance"
            raise StopIteration

    res = minimize(
        problem,
        u0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(-box, box)] * cfg.m,
        callback=callback,
        options={"maxiter": cfg.max_iterations, "ftol": 0.0, "gtol": 1e-12, "maxcor": 20},
    )
    if res.fun < state["best_f"]:
        state["best_u"], state["best_f"] = res.x, float(res.fun)

    s = s0 if state["best_u"] is u0 else samples_from_params(state["best_u"])
    trace.final = ConjugationFunction(s)
    trace.final_objective = float(np.exp(state["best_f"]))
    n_iter = len(trace.iterations) - 1
    # a line search that cannot improve further ends the run as converged too;
    # only the iteration cap counts as non-convergence
    trace.converged = bool(state["stop"]) or n_iter < cfg.max_iterations
    trace.message = state["stop"] or str(res.message)
    log.info("optimize_h: %d iterations, objective %.6e -> %.6e (%s)",
             n_iter, trace.seed_objective, trace.final_objective, trace.message)
    return trace
