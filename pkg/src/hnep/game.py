"""Lower-level game (pseudo-gradient, constraint oracles) and upper-level costs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation, UnsupportedOperationError
from .space import BlockVector, LiftedPoint

PlayerGrad = Callable[[int, BlockVector], np.ndarray]
PlayerCost = Callable[[int, BlockVector], float]
PlayerProj = Callable[[int, np.ndarray], np.ndarray]
FlatMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GameSpec:
    """Oracles of a generalized Nash game with a linear coupling constraint.

    Per-player oracles take the player index and the whole profile. The
    coupling oracles work on flat arrays: ``couple_apply`` maps a flat
    profile to G and ``couple_adjoint`` maps G back to a flat profile.

    The ``stacked_*`` oracles are optional vectorized versions of the
    per-player ones acting on flat arrays (or stacks of them along the
    leading axes). When present they must agree with the per-player oracles;
    the operator and solver use them on the hot path.
    """

    dims: tuple[int, ...]
    dim_g: int
    lower_grad: PlayerGrad
    local_proj: PlayerProj
    couple_apply: FlatMap
    couple_adjoint: FlatMap
    shared_proj: FlatMap
    kappa_G: float
    L_norm: float
    upper_grad: Optional[PlayerGrad] = None
    lower_cost: Optional[PlayerCost] = None
    upper_cost: Optional[PlayerCost] = None
    stacked_lower_grad: Optional[FlatMap] = None
    stacked_local_proj: Optional[FlatMap] = None
    stacked_upper_grad: Optional[FlatMap] = None
    # bounds of C_i and D = {y <= c}, when they are boxes; used by brute-force checks
    local_boxes: Optional[Sequence[tuple[np.ndarray, np.ndarray]]] = None
    shared_upper: Optional[np.ndarray] = None
    name: str = "game"

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims or any(d < 1 for d in self.dims):
            raise ContractViolation(f"invalid block dims {self.dims}")
        if self.dim_g < 1:
            raise ContractViolation(f"coupling dimension must be positive, got {self.dim_g}")
        if self.kappa_G < 0 or self.L_norm < 0:
            raise ContractViolation("Lipschitz constants must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return sum(self.dims)

    @property
    def has_upper(self) -> bool:
        return self.upper_grad is not None

    def conform(self, x: BlockVector) -> BlockVector:
        if not isinstance(x, BlockVector):
            raise ContractViolation(f"expected BlockVector, got {type(x).__name__}")
        if x.dims != self.dims:
            raise ContractViolation(f"profile dims {x.dims} do not match game dims {self.dims}")
        return x

    def conform_lifted(self, xi: LiftedPoint) -> LiftedPoint:
        self.conform(xi.x)
        if xi.dim_g != self.dim_g:
            raise ContractViolation(f"dual dimension {xi.dim_g} != {self.dim_g}")
        return xi

    def as_profile(self, flat) -> BlockVector:
        return BlockVector(flat, self.dims)

    # flat-array paths used by the operator kernels

    def grad_flat(self, x: np.ndarray) -> np.ndarray:
        if self.stacked_lower_grad is not None:
            return self.stacked_lower_grad(x)
        prof = self.as_profile(x)
        return np.concatenate([self.lower_grad(i, prof) for i in range(self.m)])

    def upper_grad_flat(self, x: np.ndarray) -> np.ndarray:
        if self.upper_grad is None:
            raise UnsupportedOperationError("game has no upper-level gradient oracle")
        if self.stacked_upper_grad is not None:
            return self.stacked_upper_grad(x)
        prof = self.as_profile(x)
        return np.concatenate([self.upper_grad(i, prof) for i in range(self.m)])

    def local_proj_flat(self, x: np.ndarray) -> np.ndarray:
        if self.stacked_local_proj is not None:
            return self.stacked_local_proj(x)
        prof = self.as_profile(x)
        return np.concatenate([self.local_proj(i, b) for i, b in enumerate(prof.blocks)])


def pseudo_gradient(spec: GameSpec, x: BlockVector) -> BlockVector:
    """G(x) = (grad_1 f_1(x), ..., grad_m f_m(x))."""
    spec.conform(x)
    return BlockVector.from_blocks(
        [_checked_block(spec, i, spec.lower_grad(i, x)) for i in range(spec.m)]
    )


def upper_pseudo_gradient(spec: GameSpec, x: BlockVector) -> BlockVector:
    """Stacked partial gradients of the upper-level costs."""
    if spec.upper_grad is None:
        raise UnsupportedOperationError("game has no upper-level gradient oracle")
    spec.conform(x)
    return BlockVector.from_blocks(
        [_checked_block(spec, i, spec.upper_grad(i, x)) for i in range(spec.m)]
    )


def lift_upper_gradient(spec: GameSpec, xi: LiftedPoint) -> LiftedPoint:
    """(x, u) -> (upper pseudo-gradient at x, 0)."""
    spec.conform_lifted(xi)
    return LiftedPoint(upper_pseudo_gradient(spec, xi.x), np.zeros(spec.dim_g))


def upper_costs(spec: GameSpec, x: BlockVector) -> np.ndarray:
    if spec.upper_cost is None:
        raise UnsupportedOperationError("game has no upper-level cost oracle")
    spec.conform(x)
    return np.array([spec.upper_cost(i, x) for i in range(spec.m)])


def lower_costs(spec: GameSpec, x: BlockVector) -> np.ndarray:
    if spec.lower_cost is None:
        raise UnsupportedOperationError("game has no lower-level cost oracle")
    spec.conform(x)
    return np.array([spec.lower_cost(i, x) for i in range(spec.m)])


def _checked_block(spec: GameSpec, i: int, g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (spec.dims[i],):
        raise ContractViolation(f"oracle for player {i} returned shape {g.shape}")
    return g
