"""Iteration drivers: clamped FBF fixed-point iteration and the hybrid steepest descent method."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameterError, UnsupportedOperationError
from .game import GameSpec
from .operator import OperatorConfig, clamped_flat
from .space import BlockVector, LiftedPoint


@dataclass(frozen=True)
class StepsizeSchedule:
    """lambda_n = scale / (n + offset), n >= 1."""

    scale: float = 1.0
    offset: float = 3.0
    kind: str = "reciprocal"

    def __post_init__(self):
        if self.kind != "reciprocal":
            raise InvalidParameterError(f"unknown schedule kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidParameterError(f"schedule scale must be positive, got {self.scale}")
        if not (self.offset >= 0 and math.isfinite(self.offset)):
            raise InvalidParameterError(f"schedule offset must be nonnegative, got {self.offset}")


def schedule_eval(s: StepsizeSchedule, n: int) -> float:
    if n < 1:
        raise InvalidParameterError(f"stepsize index starts at 1, got {n}")
    return s.scale / (n + s.offset)


@dataclass(frozen=True)
class SolverConfig:
    operator: OperatorConfig
    schedule: Optional[StepsizeSchedule] = None
    max_iters: int = 100_000
    residual_tol: float = 1e-8
    trace_every: int = 10
    keep_snapshots: bool = False

    def __post_init__(self):
        # max_iters = 0 only evaluates the residual at the starting point
        if self.max_iters < 0:
            raise InvalidParameterError(f"max_iters must be nonnegative, got {self.max_iters}")
        if not self.residual_tol >= 0:
            raise InvalidParameterError(f"residual_tol must be nonnegative, got {self.residual_tol}")
        if self.trace_every < 1:
            raise InvalidParameterError(f"trace_every must be positive, got {self.trace_every}")


@dataclass
class TraceRecord:
    n: int
    residual: float
    lam: float
    upper_costs: list[float] = field(default_factory=list)
    x_snapshot: Optional[BlockVector] = None


@dataclass
class SolveResult:
    final: LiftedPoint
    iterations: int
    converged: bool
    trace: list[TraceRecord]

    @property
    def residual(self) -> float:
        return self.trace[-1].residual


def _upper_costs(spec: GameSpec, x: np.ndarray) -> list[float]:
    if spec.upper_cost is None:
        return []
    prof = spec.as_profile(x)
    return [float(spec.upper_cost(i, prof)) for i in range(spec.m)]


def _record(spec: GameSpec, cfg: SolverConfig, n: int, z: np.ndarray, residual: float, lam: float):
    x = z[:spec.n]
    snap = spec.as_profile(x) if cfg.keep_snapshots else None
    return TraceRecord(n, residual, lam, _upper_costs(spec, x), snap)


Callback = Callable[[int, LiftedPoint], None]


def _iterate(spec: GameSpec, cfg: SolverConfig, xi0: LiftedPoint, hsdm: bool,
             callback: Optional[Callback]) -> SolveResult:
    op = cfg.operator
    if op.radius is None:
        op = OperatorConfig(op.gamma, op.alpha, math.inf)
    op.check(spec)
    spec.conform_lifted(xi0)
    n_primal = spec.n

    z = xi0.flat()
    trace: list[TraceRecord] = []
    converged = False
    n = 0
    while True:
        if callback is not None:
            callback(n, LiftedPoint.from_flat(z, spec.dims, spec.dim_g))
        s = clamped_flat(spec, op, z)
        residual = float(np.linalg.norm(s - z))
        lam = 0.0
        step = None
        done = residual <= cfg.residual_tol
        if hsdm:
            lam = schedule_eval(cfg.schedule, n + 1)
            g = spec.upper_grad_flat(s[:n_primal])
            step = lam * g
            done = done and float(np.linalg.norm(step)) <= cfg.residual_tol
        last = done or n >= cfg.max_iters
        if last or n % cfg.trace_every == 0:
            trace.append(_record(spec, cfg, n, z, residual, lam))
        if done:
            converged = True
            break
        if n >= cfg.max_iters:
            break
        if step is not None:
            s[:n_primal] -= step
        z = s
        n += 1

    final = LiftedPoint.from_flat(z, spec.dims, spec.dim_g)
    return SolveResult(final=final, iterations=n, converged=converged, trace=trace)


def run_fbf(spec: GameSpec, cfg: SolverConfig, xi0: LiftedPoint,
            callback: Optional[Callback] = None) -> SolveResult:
    """Iterate xi <- P_ball(T_alpha(xi)) until the fixed-point residual is below tolerance.

    The residual recorded at index n is ||P_ball(T_alpha(xi_n)) - xi_n||; the
    returned point is the last iterate whose residual was measured.
    ``callback(n, xi_n)`` is called with every iterate.
    """
    return _iterate(spec, cfg, xi0, False, callback)


def run_hsdm(spec: GameSpec, cfg: SolverConfig, xi0: LiftedPoint,
             callback: Optional[Callback] = None) -> SolveResult:
    """Hybrid steepest descent over Fix(P_ball o T_alpha).

    xi_{n+1} = s_n - lambda_{n+1} (upper pseudo-gradient(s_n), 0) with
    s_n = P_ball(T_alpha(xi_n)). Stops once both the residual and the
    descent step ``lambda_{n+1} * ||upper gradient||`` are below tolerance.
    """
    if not spec.has_upper:
        raise UnsupportedOperationError("HSDM needs upper-level gradients")
    if cfg.schedule is None:
        raise UnsupportedOperationError("HSDM needs a stepsize schedule")
    return _iterate(spec, cfg, xi0, True, callback)


def random_start(spec: GameSpec, seed: int, low: float = 0.0, high: float = 1.0) -> LiftedPoint:
    """Initial point with coordinates uniform on [low, high].

    Drawn from ``numpy.random.default_rng([seed, 1])``, a stream separate
    from the one used to generate instances with the same seed.
    """
    rng = np.random.default_rng([seed, 1])
    z = rng.uniform(low, high, spec.n + spec.dim_g)
    return LiftedPoint.from_flat(z, spec.dims, spec.dim_g)
