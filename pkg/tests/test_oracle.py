import numpy as np
import pytest

from hnep.aggregative import (
    SMALL_INSTANCES, AggregativeGame, binding_instance, build_game_spec, closed_form_instance,
    random_instance, segment_instance,
)
from hnep.errors import InvalidParameterError, UnsupportedOperationError
from hnep.operator import OperatorConfig
from hnep.oracle import (
    CheckReport, brute_force_ve, check_gradient, finite_diff_gradient, sample_equilibria,
    ve_fixed_point_residual, vi_certificate,
)
from hnep.solver import SolverConfig, StepsizeSchedule, random_start, run_fbf, run_hsdm
from hnep.space import BlockVector, LiftedPoint

OP = OperatorConfig(0.25, 0.75, 1e15)


def test_check_report_semantics():
    assert CheckReport.from_violation("a", 1e-7, 1e-6, 3).passed
    assert not CheckReport.from_violation("a", 2e-6, 1e-6, 3).passed
    assert CheckReport.from_violation("a", 1e-6, 1e-6, 3).passed


def test_finite_diff_examples():
    q = lambda i, x: 0.5 * x.norm() ** 2
    assert finite_diff_gradient(q, 0, BlockVector([3.0], (1,)), 1e-5)[0] == pytest.approx(3.0, abs=1e-9)

    up = build_game_spec(AggregativeGame(a=[[-5.0], [-5.0]], b=[[5.0], [5.0]], c=[1.0], p=[1.0],
                                         W_diag=[1.0], t=[[0.0], [0.0]]))
    x = BlockVector([1.0, 3.0], (1, 1))
    assert finite_diff_gradient(up.upper_cost, 0, x)[0] == pytest.approx(-1.0, abs=1e-6)

    low = build_game_spec(closed_form_instance())
    assert finite_diff_gradient(low.lower_cost, 0, BlockVector([1.0], (1,)))[0] == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(InvalidParameterError):
        finite_diff_gradient(q, 0, x, 0.0)


def test_gradient_gate_catches_wrong_gradient():
    import dataclasses
    spec = build_game_spec(random_instance(0))
    wrong = dataclasses.replace(spec, lower_grad=lambda i, x: 1.01 * spec.lower_grad(i, x))
    assert check_gradient(spec, "lower").passed
    assert not check_gradient(wrong, "lower").passed


def test_ve_residual_examples():
    spec = build_game_spec(closed_form_instance())
    star = LiftedPoint(BlockVector([1.0], (1,)), [0.0])
    assert ve_fixed_point_residual(spec, OP, star) <= 1e-12
    infeasible = LiftedPoint(BlockVector([25.0], (1,)), [0.0])
    assert ve_fixed_point_residual(spec, OP, infeasible) > 0


def test_ve_residual_at_computed_fixed_point(exp_spec, exp_fixed_point):
    assert ve_fixed_point_residual(exp_spec, OP, exp_fixed_point) <= 1e-12


def test_vi_certificate_singleton():
    spec = build_game_spec(closed_form_instance())
    x = BlockVector([1.0], (1,))
    rep = vi_certificate(spec, x, [x])
    assert rep.passed and rep.worst_violation == 0.0
    with pytest.raises(InvalidParameterError):
        vi_certificate(spec, x, [])


@pytest.fixture(scope="module")
def segment_setup():
    spec = build_game_spec(segment_instance())
    fbf_cfg = SolverConfig(OP, max_iters=100_000, residual_tol=1e-12)
    samples = sample_equilibria(spec, fbf_cfg, n_starts=50, seed=0)
    return spec, samples


def test_sampled_equilibria_lie_on_segment(segment_setup):
    spec, samples = segment_setup
    assert len(samples) >= 40
    xs = np.array([s.data for s in samples])
    assert np.allclose(xs.sum(1), 1.0, atol=1e-9)
    assert xs[:, 0].min() < 0.3 and xs[:, 0].max() > 0.7
    for s in samples:
        d = [(s - o).norm() for o in samples if o is not s]
        assert min(d) >= 1e-6


def test_vi_certificate_segment(segment_setup):
    spec, samples = segment_setup
    hsdm = run_hsdm(spec, SolverConfig(OP, StepsizeSchedule(1, 3), max_iters=20_000, residual_tol=1e-12),
                    random_start(spec, 0))
    assert vi_certificate(spec, hsdm.final.x, samples, 1e-4).passed

    biased = LiftedPoint(BlockVector([1.5, -0.5], (1, 1)), [0.0])
    fbf = run_fbf(spec, SolverConfig(OP, max_iters=100_000, residual_tol=1e-12), biased)
    rep = vi_certificate(spec, fbf.final.x, samples, 1e-4)
    assert not rep.passed and rep.worst_violation > 1e-2

    # move 0.1 along the segment
    d = BlockVector([1.0, -1.0], (1, 1)) * (0.1 / np.sqrt(2))
    for sign in (1, -1):
        assert not vi_certificate(spec, hsdm.final.x + d * sign, samples, 1e-4).passed


def test_brute_force_closed_form():
    pts = [p.data[0] for p in brute_force_ve(build_game_spec(closed_form_instance()), 1e-3)]
    # tol = kappa * h * diam = 0.02; with G(v) = 2v - 2 on [0, 10] the accepted band is
    # 2 d (1 + d) <= tol above 1 and 2 d (9 + d) <= tol below 1, d = |v - 1|
    tol = 2 * 1e-3 * 10
    hi = (-1 + np.sqrt(1 + 2 * tol)) / 2
    lo = (-9 + np.sqrt(81 + 2 * tol)) / 2
    assert 1.0 in pts
    assert all(1 - lo - 1e-12 <= v <= 1 + hi + 1e-12 for v in pts)
    assert max(pts) > 1 + hi - 1e-3 and min(pts) < 1 - lo + 1e-3


def test_brute_force_binding_feasible():
    pts = brute_force_ve(build_game_spec(binding_instance()), 1e-3)
    assert pts and all(p.data.sum() <= 0.5 + 1e-3 for p in pts)
    assert min(abs(p.data[0] - 0.5) for p in pts) <= 1e-12


@pytest.mark.parametrize("name", ["closed_form", "binding", "segment"])
def test_brute_force_agrees_with_fbf(name):
    spec = build_game_spec(SMALL_INSTANCES[name]())
    res = run_fbf(spec, SolverConfig(OP, max_iters=100_000, residual_tol=1e-12), random_start(spec, 0))
    pts = brute_force_ve(spec, 1e-3)
    assert min((p - res.final.x).norm() for p in pts) <= 2e-3


def test_brute_force_limits():
    with pytest.raises(UnsupportedOperationError):
        brute_force_ve(build_game_spec(random_instance(0)), 1e-3)
    with pytest.raises(InvalidParameterError):
        brute_force_ve(build_game_spec(closed_form_instance()), 0.0)
