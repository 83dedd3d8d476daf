"""Independent numerical checks: finite differences, operator properties, residuals, brute force."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import InvalidParameterError, UnsupportedOperationError
from .game import GameSpec, pseudo_gradient, upper_pseudo_gradient
from .operator import OperatorConfig, apply_T_alpha
from .solver import SolverConfig, run_fbf
from .space import BlockVector, LiftedPoint


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_violation: float
    samples: int
    tolerance: float = 0.0

    @classmethod
    def from_violation(cls, name: str, worst: float, tol: float, samples: int) -> "CheckReport":
        worst = float(worst)
        return cls(name, bool(worst <= tol), worst, int(samples), float(tol))

    def to_dict(self) -> dict:
        return asdict(self)


def finite_diff_gradient(cost: Callable[[int, BlockVector], float], i: int, x: BlockVector,
                         h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of cost(i, .) with respect to block i."""
    if not h > 0:
        raise InvalidParameterError(f"step must be positive, got {h}")
    xi = x.block(i)
    grad = np.empty(xi.shape[0])
    for k in range(xi.shape[0]):
        e = np.zeros_like(xi)
        e[k] = h
        grad[k] = (cost(i, x.substitute(i, xi + e)) - cost(i, x.substitute(i, xi - e))) / (2 * h)
    return grad


def _sample_box(spec: GameSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sampling box twice the size of the local feasible boxes (or [-10, 10])."""
    if spec.local_boxes is None:
        return np.full(spec.n, -10.0), np.full(spec.n, 10.0)
    lo = np.concatenate([b[0] for b in spec.local_boxes])
    hi = np.concatenate([b[1] for b in spec.local_boxes])
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    return mid - 2 * half, mid + 2 * half


def _random_profiles(spec: GameSpec, rng: np.random.Generator, k: int) -> np.ndarray:
    lo, hi = _sample_box(spec, rng)
    return rng.uniform(lo, hi, (k, spec.n))


def check_gradient(spec: GameSpec, which: str = "lower", n_points: int = 100, seed: int = 0,
                   h: float = 1e-5, tol: float = 1e-6) -> CheckReport:
    """Relative error ||g - g_fd||_inf / max(1, ||g_fd||_inf) over random profiles."""
    if which == "lower":
        grad, cost = spec.lower_grad, spec.lower_cost
    elif which == "upper":
        grad, cost = spec.upper_grad, spec.upper_cost
    else:
        raise InvalidParameterError(f"unknown gradient kind {which!r}")
    if grad is None or cost is None:
        raise UnsupportedOperationError(f"game lacks {which}-level gradient or cost oracle")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for row in _random_profiles(spec, rng, n_points):
        x = spec.as_profile(row)
        for i in range(spec.m):
            fd = finite_diff_gradient(cost, i, x, h)
            err = np.max(np.abs(np.asarray(grad(i, x)) - fd)) / max(1.0, np.max(np.abs(fd)))
            worst = max(worst, float(err))
    return CheckReport.from_violation(f"{which}_gradient", worst, tol, n_points * spec.m)


def check_stacked_consistency(spec: GameSpec, n_points: int = 100, seed: int = 0,
                              tol: float = 1e-12) -> CheckReport:
    """Stacked (vectorized) oracles agree with the per-player ones."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for row in _random_profiles(spec, rng, n_points):
        x = spec.as_profile(row)
        pairs = [(spec.grad_flat(row), pseudo_gradient(spec, x).data)]
        if spec.has_upper:
            pairs.append((spec.upper_grad_flat(row), upper_pseudo_gradient(spec, x).data))
        per_player = np.concatenate([spec.local_proj(i, b) for i, b in enumerate(x.blocks)])
        pairs.append((spec.local_proj_flat(row), per_player))
        for fast, slow in pairs:
            worst = max(worst, float(np.max(np.abs(fast - slow)) / max(1.0, np.max(np.abs(slow)))))
    return CheckReport.from_violation("stacked_consistency", worst, tol, n_points)


def check_adjoint(spec: GameSpec, n_points: int = 100, seed: int = 0, tol: float = 1e-10) -> CheckReport:
    """|<Lx, y> - <x, L*y>| relative to ||x|| ||L*y|| + ||Lx|| ||y||."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        x = rng.standard_normal(spec.n)
        y = rng.standard_normal(spec.dim_g)
        lx, lty = spec.couple_apply(x), spec.couple_adjoint(y)
        scale = 1.0 + np.linalg.norm(lx) * np.linalg.norm(y)
        worst = max(worst, abs(float(lx @ y) - float(x @ lty)) / scale)
    return CheckReport.from_violation("adjoint", worst, tol, n_points)


def check_coupling_norm(spec: GameSpec, n_points: int = 1000, seed: int = 0,
                        tol: float = 1e-8) -> CheckReport:
    """max ||Lx|| / ||x|| - L_norm over random x."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_points, spec.n))
    X[0] = _dominant_direction(spec.couple_apply, spec.couple_adjoint, spec.n, seed)
    ratios = [np.linalg.norm(spec.couple_apply(x)) / np.linalg.norm(x) for x in X]
    return CheckReport.from_violation("coupling_norm_bound", max(ratios) - spec.L_norm, tol, n_points)


def _pairs(spec: GameSpec, rng: np.random.Generator, k: int):
    X = _random_profiles(spec, rng, k)
    Y = _random_profiles(spec, rng, k)
    # half of the pairs are close together to probe local behaviour
    Y[k // 2:] = X[k // 2:] + 1e-3 * rng.standard_normal((k - k // 2, spec.n))
    return X, Y


def check_lipschitz(spec: GameSpec, n_points: int = 1000, seed: int = 0,
                    tol: float = 1e-8) -> CheckReport:
    """max ||G(x) - G(y)|| / ||x - y|| - kappa_G over random pairs."""
    rng = np.random.default_rng(seed)
    X, Y = _pairs(spec, rng, n_points)
    # one pair along the dominant direction of the linearization at 0
    g0 = spec.grad_flat(np.zeros(spec.n))

    def lin(v):
        return spec.grad_flat(v) - g0

    Y[0] = X[0] + _dominant_direction(lin, lin, spec.n, seed)
    worst = -math.inf
    for x, y in zip(X, Y):
        ratio = np.linalg.norm(spec.grad_flat(x) - spec.grad_flat(y)) / np.linalg.norm(x - y)
        worst = max(worst, float(ratio) - spec.kappa_G)
    return CheckReport.from_violation("lipschitz_bound", worst, tol, n_points)


def check_monotone(spec: GameSpec, which: str = "lower", n_points: int = 1000, seed: int = 0,
                   tol: float = 1e-10) -> CheckReport:
    """max -<F(x) - F(y), x - y> for F = G or the upper pseudo-gradient."""
    f = spec.grad_flat if which == "lower" else spec.upper_grad_flat
    rng = np.random.default_rng(seed)
    X, Y = _pairs(spec, rng, n_points)
    worst = -math.inf
    for x, y in zip(X, Y):
        worst = max(worst, -float((f(x) - f(y)) @ (x - y)))
    return CheckReport.from_violation(f"{which}_monotone", worst, tol, n_points)


def _power_iterate(apply, adjoint, dim, iters=2000, seed=0, rtol=1e-14):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = adjoint(apply(v))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return v, 0.0
        v = w / nw
        converged = abs(nw - est) <= rtol * nw
        est = nw
        if converged:
            break
    return v, est


def _dominant_direction(apply, adjoint, dim, seed=0) -> np.ndarray:
    return _power_iterate(apply, adjoint, dim, iters=500, seed=seed)[0]


def power_iteration_norm(apply: Callable[[np.ndarray], np.ndarray],
                         adjoint: Callable[[np.ndarray], np.ndarray], dim: int,
                         iters: int = 2000, seed: int = 0, rtol: float = 1e-14) -> float:
    """Operator norm of a linear map by power iteration on adjoint o apply."""
    return math.sqrt(_power_iterate(apply, adjoint, dim, iters, seed, rtol)[1])


def estimate_kappa_G(spec: GameSpec, **kw) -> float:
    """Norm of the linear part of an affine G with symmetric Jacobian, x -> G(x) - G(0)."""
    g0 = spec.grad_flat(np.zeros(spec.n))

    def lin(v):
        return spec.grad_flat(v) - g0

    return power_iteration_norm(lin, lin, spec.n, **kw)


def estimate_L_norm(spec: GameSpec, **kw) -> float:
    return power_iteration_norm(spec.couple_apply, spec.couple_adjoint, spec.n, **kw)


def check_gamma(spec: GameSpec, cfg: OperatorConfig) -> CheckReport:
    """gamma * (kappa_G + ||L||) must stay below 1."""
    return CheckReport.from_violation(
        "gamma_admissible", cfg.gamma * (spec.kappa_G + spec.L_norm) - 1.0, -1e-12, 1
    )


def run_property_suite(spec: GameSpec, cfg: Optional[OperatorConfig] = None, seed: int = 0,
                       n_points: int = 1000, n_grad_points: int = 100) -> list[CheckReport]:
    reports = [
        check_adjoint(spec, n_points, seed),
        check_coupling_norm(spec, n_points, seed),
        check_lipschitz(spec, n_points, seed),
        check_monotone(spec, "lower", n_points, seed),
    ]
    if spec.lower_cost is not None:
        reports.append(check_gradient(spec, "lower", n_grad_points, seed))
    if spec.has_upper:
        reports.append(check_monotone(spec, "upper", n_points, seed))
        if spec.upper_cost is not None:
            reports.append(check_gradient(spec, "upper", n_grad_points, seed))
    reports.append(check_stacked_consistency(spec, n_grad_points, seed))
    if cfg is not None:
        reports.append(check_gamma(spec, cfg))
    return reports


def ve_fixed_point_residual(spec: GameSpec, cfg: OperatorConfig, xi: LiftedPoint) -> float:
    """||T_alpha(xi) - xi||; zero exactly on lifted variational equilibria."""
    return (apply_T_alpha(spec, cfg, xi) - xi).norm()


def vi_certificate(spec: GameSpec, x_star: BlockVector, samples: Sequence[BlockVector],
                   tol: float = 1e-4) -> CheckReport:
    """Sampled check of <Gu(x*), w - x*> >= 0 over equilibria w.

    The violation for sample w is -<Gu(x*), w - x*> / (1 + ||w - x*||).
    """
    if len(samples) == 0:
        raise InvalidParameterError("vi_certificate needs at least one sample")
    g = upper_pseudo_gradient(spec, x_star)
    worst = -math.inf
    for w in samples:
        d = w - x_star
        worst = max(worst, -g.dot(d) / (1.0 + d.norm()))
    return CheckReport.from_violation("upper_vi_certificate", worst, tol, len(samples))


def sample_equilibria(spec: GameSpec, cfg: SolverConfig, n_starts: int = 50, seed: int = 0,
                      ve_tol: float = 1e-8, dedup: float = 1e-6) -> list[BlockVector]:
    """Variational equilibria reached by FBF from uniform starts in a box twice the feasible one.

    Runs that do not reach ``ve_tol`` are discarded; near-duplicates are merged.
    """
    rng = np.random.default_rng(seed)
    lo, hi = _sample_box(spec, rng)
    out: list[BlockVector] = []
    for _ in range(n_starts):
        x0 = rng.uniform(lo, hi)
        u0 = rng.uniform(0.0, 1.0, spec.dim_g)
        res = run_fbf(spec, cfg, LiftedPoint(spec.as_profile(x0), u0))
        if not res.converged or ve_fixed_point_residual(spec, cfg.operator, res.final) > ve_tol:
            continue
        x = res.final.x
        if all((x - y).norm() >= dedup for y in out):
            out.append(x)
    return out


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    if points.shape[1] == 1:
        return np.array([points.min(0), points.max(0)])
    try:
        return points[ConvexHull(points).vertices]
    except QhullError:
        # degenerate (lower-dimensional) feasible grid: every point is a candidate vertex
        return points


def brute_force_ve(spec: GameSpec, grid_step: float, chunk: int = 200_000) -> list[BlockVector]:
    """Grid points of the feasible set passing the variational inequality on the grid.

    Point v is kept when <G(v), w - v> >= -tol for every feasible grid point w,
    with tol = kappa_G * grid_step * diam(box) plus a rounding allowance.
    The minimum over w of the linear form is taken over the convex-hull
    vertices of the feasible grid, which is exact for a finite point set.
    """
    if not grid_step > 0:
        raise InvalidParameterError(f"grid step must be positive, got {grid_step}")
    if spec.n > 3:
        raise UnsupportedOperationError(f"brute force needs total dimension <= 3, got {spec.n}")
    if spec.local_boxes is None or spec.shared_upper is None:
        raise UnsupportedOperationError("brute force needs box bounds for C_i and D")
    lo = np.concatenate([b[0] for b in spec.local_boxes])
    hi = np.concatenate([b[1] for b in spec.local_boxes])
    axes = [l + grid_step * np.arange(int(math.floor((h - l) / grid_step + 1e-9)) + 1)
            for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.n)
    # L is linear: assemble its matrix from the basis
    Lmat = np.column_stack([spec.couple_apply(e) for e in np.eye(spec.n)])
    c = np.asarray(spec.shared_upper)
    feas = grid[np.all(grid @ Lmat.T <= c + 1e-12 * (1 + np.abs(c)), axis=1)]
    if feas.shape[0] == 0:
        return []
    verts = _hull_vertices(feas)
    diam = float(np.linalg.norm(hi - lo))
    tol = spec.kappa_G * grid_step * diam
    kept = []
    for start in range(0, feas.shape[0], chunk):
        v = feas[start:start + chunk]
        if spec.stacked_lower_grad is not None:
            g = spec.stacked_lower_grad(v)
        else:
            g = np.array([spec.grad_flat(row) for row in v])
        worst = np.min(g @ verts.T, axis=1) - np.einsum("ij,ij->i", g, v)
        slack = tol + 1e-12 * (1.0 + np.linalg.norm(g, axis=1) * diam)
        kept.append(v[worst >= -slack])
    return [spec.as_profile(row) for row in np.concatenate(kept)]
