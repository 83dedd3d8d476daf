import numpy as np
import pytest

from hnep.aggregative import build_game_spec, random_instance
from hnep.operator import OperatorConfig
from hnep.solver import SolverConfig, StepsizeSchedule, random_start, run_fbf

SHIPPED_SEED = 1
EXP_OP = OperatorConfig(gamma=0.25, alpha=0.75, radius=1e15)
EXP_SCHEDULE = StepsizeSchedule(scale=1.0, offset=3.0)


@pytest.fixture(scope="session")
def exp_game():
    return random_instance(SHIPPED_SEED, 6, 3)


@pytest.fixture(scope="session")
def exp_spec(exp_game):
    return build_game_spec(exp_game)


@pytest.fixture(scope="session")
def exp_fixed_point(exp_spec):
    """Lifted VE of the shipped instance, residual <= 1e-12."""
    cfg = SolverConfig(EXP_OP, max_iters=200_000, residual_tol=1e-12, trace_every=10_000)
    res = run_fbf(exp_spec, cfg, random_start(exp_spec, SHIPPED_SEED))
    assert res.converged
    return res.final


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
