"""Block-structured vectors and the elementary projections.

Strategy profiles live in H = H_1 x ... x H_m and are stored as one flat
float64 array plus the per-player block sizes. Lifted (primal, dual) points
pair such a profile with a dual vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, InvalidParameterError, InvalidSetError


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolation(f"expected a 1-D array, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BlockVector:
    """Strategy profile x = (x_1, ..., x_m) backed by a flat array."""

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        data = _as_vector(self.data)
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ContractViolation(f"block dimensions must be positive, got {dims}")
        if data.shape[0] != sum(dims):
            raise ContractViolation(
                f"flat length {data.shape[0]} does not match block dims {dims}"
            )
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_blocks(cls, blocks: Sequence) -> "BlockVector":
        arrays = [_as_vector(b) for b in blocks]
        if not arrays:
            raise ContractViolation("a block vector needs at least one block")
        return cls(np.concatenate(arrays), tuple(a.shape[0] for a in arrays))

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "BlockVector":
        return cls(np.zeros(sum(dims)), tuple(dims))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.dims)))

    @property
    def n_blocks(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.data.shape[0]

    def block(self, i: int) -> np.ndarray:
        off = self.offsets
        return self.data[off[i]:off[i + 1]]

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.block(i) for i in range(self.n_blocks)]

    def others(self, i: int) -> list[np.ndarray]:
        """Blocks of every player except i, in order."""
        return [b for j, b in enumerate(self.blocks) if j != i]

    def substitute(self, i: int, xi) -> "BlockVector":
        """Profile with block i replaced by xi and the rest kept."""
        xi = _as_vector(xi)
        if xi.shape[0] != self.dims[i]:
            raise ContractViolation(
                f"block {i} has dimension {self.dims[i]}, got {xi.shape[0]}"
            )
        off = self.offsets
        out = self.data.copy()
        out[off[i]:off[i + 1]] = xi
        return BlockVector(out, self.dims)

    def _check(self, other: "BlockVector"):
        if not isinstance(other, BlockVector):
            raise ContractViolation(f"expected BlockVector, got {type(other).__name__}")
        if other.dims != self.dims:
            raise ContractViolation(f"block layouts differ: {self.dims} vs {other.dims}")

    def __add__(self, other: "BlockVector") -> "BlockVector":
        self._check(other)
        return BlockVector(self.data + other.data, self.dims)

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        self._check(other)
        return BlockVector(self.data - other.data, self.dims)

    def __neg__(self) -> "BlockVector":
        return BlockVector(-self.data, self.dims)

    def __mul__(self, scalar: float) -> "BlockVector":
        return BlockVector(float(scalar) * self.data, self.dims)

    __rmul__ = __mul__

    def dot(self, other: "BlockVector") -> float:
        self._check(other)
        return float(self.data @ other.data)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BlockVector)
            and other.dims == self.dims
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"BlockVector(dims={self.dims}, blocks={[b.tolist() for b in self.blocks]})"


@dataclass(frozen=True, eq=False)
class LiftedPoint:
    """Primal-dual pair xi = (x, u) in H x G."""

    x: BlockVector
    u: np.ndarray

    def __post_init__(self):
        if not isinstance(self.x, BlockVector):
            raise ContractViolation("primal part must be a BlockVector")
        object.__setattr__(self, "u", _frozen(_as_vector(self.u)))

    @classmethod
    def from_flat(cls, flat, dims: Sequence[int], dim_g: int) -> "LiftedPoint":
        flat = _as_vector(flat)
        n = sum(dims)
        if flat.shape[0] != n + dim_g:
            raise ContractViolation(
                f"flat length {flat.shape[0]} != {n} + {dim_g}"
            )
        return cls(BlockVector(flat[:n], tuple(dims)), flat[n:])

    @property
    def dim_g(self) -> int:
        return self.u.shape[0]

    def flat(self) -> np.ndarray:
        return np.concatenate((self.x.data, self.u))

    def _check(self, other: "LiftedPoint"):
        if not isinstance(other, LiftedPoint):
            raise ContractViolation(f"expected LiftedPoint, got {type(other).__name__}")
        self.x._check(other.x)
        if other.u.shape != self.u.shape:
            raise ContractViolation(f"dual dimensions differ: {self.u.shape} vs {other.u.shape}")

    def __add__(self, other: "LiftedPoint") -> "LiftedPoint":
        self._check(other)
        return LiftedPoint(self.x + other.x, self.u + other.u)

    def __sub__(self, other: "LiftedPoint") -> "LiftedPoint":
        self._check(other)
        return LiftedPoint(self.x - other.x, self.u - other.u)

    def __mul__(self, scalar: float) -> "LiftedPoint":
        return LiftedPoint(self.x * scalar, float(scalar) * self.u)

    __rmul__ = __mul__

    def dot(self, other: "LiftedPoint") -> float:
        self._check(other)
        return self.x.dot(other.x) + float(self.u @ other.u)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LiftedPoint)
            and self.x == other.x
            and np.array_equal(self.u, other.u)
        )

    def __repr__(self) -> str:
        return f"LiftedPoint(x={self.x!r}, u={self.u.tolist()})"


def project_box(v, lo, hi) -> np.ndarray:
    """Euclidean projection onto the box [lo, hi] (componentwise clamp)."""
    v, lo, hi = _as_vector(v), _as_vector(lo), _as_vector(hi)
    if not (v.shape == lo.shape == hi.shape):
        raise ContractViolation(
            f"box projection shapes differ: {v.shape}, {lo.shape}, {hi.shape}"
        )
    if np.any(lo > hi):
        raise InvalidSetError("empty box: lo > hi in some component")
    return np.maximum(lo, np.minimum(v, hi))


def project_upper_bound(y, c) -> np.ndarray:
    """Projection onto {y : y <= c}."""
    y, c = _as_vector(y), _as_vector(c)
    if y.shape != c.shape:
        raise ContractViolation(f"shapes differ: {y.shape} vs {c.shape}")
    return np.minimum(y, c)


def ball_scale(norm: float, r: float) -> float:
    """Radial factor of the projection onto the closed ball B(0, r)."""
    if norm <= r:
        return 1.0
    return r / norm


def project_ball(xi: LiftedPoint, r: float) -> LiftedPoint:
    """Projection of a lifted point onto the closed ball of radius r.

    ``r = inf`` gives the identity.
    """
    r = float(r)
    if not r > 0:
        raise InvalidParameterError(f"ball radius must be positive, got {r}")
    s = ball_scale(xi.norm(), r)
    if s == 1.0:
        return xi
    return xi * s
