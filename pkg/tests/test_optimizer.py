import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmlab.bound import BoundObjective, LoopTable, union_bound
from ccmlab.ccm import CcmEncoder, ConjugationFunction, MapKind
from ccmlab.channel import HpaModel
from ccmlab.optimizer import (
    OptimizationError,
    OptimizerConfig,
    _Problem,
    interpolation_matrix,
    min_increment,
    optimize_h,
    params_from_samples,
    resolve_param_bound,
    samples_from_params,
)


@given(st.lists(st.floats(-6, 6), min_size=2, max_size=50))
@settings(max_examples=60)
def test_reparameterization_is_always_feasible(u):
    s = samples_from_params(np.array(u))
    ConjugationFunction(s)
    assert np.allclose(samples_from_params(params_from_samples(s)), s, atol=1e-12)


def test_min_increment_holds_in_the_box():
    u = np.full(101, -8.0)
    u[0] = 8.0
    assert np.diff(samples_from_params(u)).min() >= min_increment(101, 8.0) >= 1e-9


def test_interpolation_matrix_reproduces_h():
    rng = np.random.default_rng(2)
    s = samples_from_params(rng.normal(size=37))
    h = ConjugationFunction(s)
    w = interpolation_matrix(5, 37)
    assert np.allclose(w @ s, h(np.arange(32) / 32), atol=1e-14)


def test_default_box_depends_on_map():
    cfg = OptimizerConfig()
    assert resolve_param_bound(cfg, MapKind.BSM) > resolve_param_bound(cfg, MapKind.MTM)
    assert resolve_param_bound(OptimizerConfig(param_bound=3.0), MapKind.MTM) == 3.0
    with pytest.raises(ValueError):
        OptimizerConfig(param_bound=-1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(m=1)


def test_parameter_gradient_matches_finite_differences():
    enc = CcmEncoder(3, MapKind.MTM)
    obj = BoundObjective(LoopTable.for_encoder(enc), HpaModel(ibo_db=3.0), enc.stationary().dist, 10.0)
    prob = _Problem(3, 11, obj.value_and_grad)
    u = np.random.default_rng(4).normal(0, 0.5, 11)
    _, g = prob(u)
    fd = np.array([(prob(u + e)[0] - prob(u - e)[0]) / 2e-6 for e in np.eye(11) * 1e-6])
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-8)


def test_constant_objective_returns_seed():
    enc = CcmEncoder(3)
    cfg = OptimizerConfig(m=9)
    trace = optimize_h(enc, HpaModel(), cfg=cfg, objective=lambda v: (0.0, np.zeros_like(v)))
    assert np.array_equal(trace.final.samples, np.arange(10) / 9)
    assert trace.final_objective == trace.seed_objective == 1.0
    assert trace.converged


@pytest.mark.parametrize("kind", list(MapKind))
def test_descent_and_feasible_trace(kind, tmp_path):
    enc = CcmEncoder(3, kind)
    hpa = HpaModel(ibo_db=3.0)
    table = LoopTable.for_encoder(enc)
    cfg = OptimizerConfig(m=21, max_iterations=200)
    trace = optimize_h(enc, hpa, table, cfg)
    objs = [o for o, _ in trace.iterations]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(objs, objs[1:]))
    assert min(m for _, m in trace.iterations) >= 1e-9
    assert trace.final_objective < trace.seed_objective
    # the reported objective is the bound of the returned h
    check = union_bound(table.loops, enc.with_conj(trace.final), hpa, cfg.ebn0_db, table).value
    assert check == pytest.approx(trace.final_objective, rel=1e-10)
    path = tmp_path / "trace.csv"
    trace.write_csv(path, ["q=3"])
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# q=3", "iteration,objective,constraint_margin"]
    assert len(lines) == 2 + len(trace.iterations)


def test_iteration_cap_reports_non_convergence():
    enc = CcmEncoder(3)
    trace = optimize_h(enc, HpaModel(ibo_db=3.0), cfg=OptimizerConfig(m=21, max_iterations=2))
    assert not trace.converged
    assert trace.final_objective <= trace.seed_objective


def test_bad_seeds_rejected():
    enc = CcmEncoder(3)
    cfg = OptimizerConfig(m=4)
    with pytest.raises(OptimizationError, match="infeasible"):
        optimize_h(enc, HpaModel(), cfg=cfg, seed=np.array([0.0, 0.5, 0.4, 0.8, 1.0]))
    with pytest.raises(OptimizationError, match="segments"):
        optimize_h(enc, HpaModel(), cfg=cfg, seed=np.linspace(0, 1, 7))
    with pytest.raises(OptimizationError, match="box"):
        optimize_h(enc, HpaModel(), cfg=cfg, seed=np.array([0.0, 1e-9, 2e-9, 0.5, 1.0]))
