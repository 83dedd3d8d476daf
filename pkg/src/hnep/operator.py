"""Lifted monotone operators and the forward-backward-forward fixed-point map.

On H x G we use

    A(x, u) = (G(x) + L* u, -L x)
    J(x, u) = (P_C(x), u - gamma * P_D(u / gamma))      resolvent of B
    T_FBF   = (Id - gamma A) o J o (Id - gamma A) + gamma A
    T_alpha = (1 - alpha) Id + alpha T_FBF

The dual part of J is the resolvent of the conjugate subdifferential of the
indicator of D, evaluated through the Moreau identity.

All public functions take and return ``LiftedPoint``; the ``*_flat``
helpers work on concatenated ``(x, u)`` arrays and back the solver loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .game import GameSpec
from .space import BlockVector, LiftedPoint, ball_scale

GAMMA_MARGIN = 1e-12


@dataclass(frozen=True)
class OperatorConfig:
    gamma: float
    alpha: float
    radius: Optional[float] = None

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.radius is not None and not self.radius > 0:
            raise InvalidParameterError(f"radius must be positive, got {self.radius}")

    def gamma_bound(self, spec: GameSpec) -> float:
        total = spec.kappa_G + spec.L_norm
        return math.inf if total == 0 else 1.0 / total

    def check(self, spec: GameSpec) -> "OperatorConfig":
        """Reject gamma outside (0, 1/(kappa_G + ||L||)), boundary included."""
        bound = self.gamma_bound(spec)
        if not self.gamma < bound * (1 - GAMMA_MARGIN):
            raise InvalidParameterError(
                f"gamma={self.gamma} is not below 1/(kappa_G + ||L||) = {bound}"
            )
        return self


def _split(spec: GameSpec, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return z[:spec.n], z[spec.n:]


def a_flat(spec: GameSpec, z: np.ndarray) -> np.ndarray:
    x, u = _split(spec, z)
    return np.concatenate((spec.grad_flat(x) + spec.couple_adjoint(u), -spec.couple_apply(x)))


def resolvent_flat(spec: GameSpec, gamma: float, z: np.ndarray) -> np.ndarray:
    x, u = _split(spec, z)
    return np.concatenate((spec.local_proj_flat(x), u - gamma * spec.shared_proj(u / gamma)))


def t_fbf_flat(spec: GameSpec, gamma: float, z: np.ndarray) -> np.ndarray:
    az = a_flat(spec, z)
    y = resolvent_flat(spec, gamma, z - gamma * az)
    return y - gamma * a_flat(spec, y) + gamma * az


def t_alpha_flat(spec: GameSpec, cfg: OperatorConfig, z: np.ndarray) -> np.ndarray:
    return (1 - cfg.alpha) * z + cfg.alpha * t_fbf_flat(spec, cfg.gamma, z)


def clamped_flat(spec: GameSpec, cfg: OperatorConfig, z: np.ndarray) -> np.ndarray:
    s = t_alpha_flat(spec, cfg, z)
    radius = math.inf if cfg.radius is None else cfg.radius
    scale = ball_scale(float(np.linalg.norm(s)), radius)
    return s if scale == 1.0 else scale * s


def _lift(spec: GameSpec, z: np.ndarray) -> LiftedPoint:
    return LiftedPoint.from_flat(z, spec.dims, spec.dim_g)


def apply_A(spec: GameSpec, xi: LiftedPoint) -> LiftedPoint:
    spec.conform_lifted(xi)
    return _lift(spec, a_flat(spec, xi.flat()))


def resolvent_B(spec: GameSpec, gamma: float, xi: LiftedPoint) -> LiftedPoint:
    """(Id + gamma B)^{-1}: blockwise P_{C_i} and the Moreau-identity dual step."""
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    spec.conform_lifted(xi)
    return _lift(spec, resolvent_flat(spec, gamma, xi.flat()))


def apply_T_FBF(spec: GameSpec, cfg: OperatorConfig, xi: LiftedPoint) -> LiftedPoint:
    cfg.check(spec)
    spec.conform_lifted(xi)
    return _lift(spec, t_fbf_flat(spec, cfg.gamma, xi.flat()))


def apply_T_alpha(spec: GameSpec, cfg: OperatorConfig, xi: LiftedPoint) -> LiftedPoint:
    cfg.check(spec)
    spec.conform_lifted(xi)
    return _lift(spec, t_alpha_flat(spec, cfg, xi.flat()))


def apply_clamped(spec: GameSpec, cfg: OperatorConfig, xi: LiftedPoint) -> LiftedPoint:
    """P_ball o T_alpha."""
    if cfg.radius is None:
        raise InvalidParameterError("clamped operator needs a ball radius")
    cfg.check(spec)
    spec.conform_lifted(xi)
    return _lift(spec, clamped_flat(spec, cfg, xi.flat()))


def fbf_step_by_player(spec: GameSpec, gamma: float, xi: LiftedPoint) -> LiftedPoint:
    """T_FBF evaluated player by player, as written in the iteration listing.

    Uses only the per-player oracles (never the stacked ones), so it serves
    as an independent route for checking ``apply_T_FBF``. The dual
    forward-backward step is w = v - gamma P_D(v / gamma) with
    v = u + gamma L x.
    """
    spec.conform_lifted(xi)
    x, u = xi.x, xi.u
    m = spec.m

    def player_part(v: np.ndarray, i: int) -> np.ndarray:
        return BlockVector(v, spec.dims).block(i)

    # forward-backward step
    adj_u = spec.couple_adjoint(u)
    fx = [spec.lower_grad(i, x) + player_part(adj_u, i) for i in range(m)]
    y = BlockVector.from_blocks(
        [spec.local_proj(i, x.block(i) - gamma * fx[i]) for i in range(m)]
    )
    lx = spec.couple_apply(x.data)
    v = u + gamma * lx
    w = v - gamma * spec.shared_proj(v / gamma)

    # forward step
    adj_w = spec.couple_adjoint(w)
    y_tilde = BlockVector.from_blocks(
        [
            y.block(i) - gamma * ((spec.lower_grad(i, y) + player_part(adj_w, i)) - fx[i])
            for i in range(m)
        ]
    )
    w_tilde = w + gamma * (spec.couple_apply(y.data) - lx)
    return LiftedPoint(y_tilde, w_tilde)
