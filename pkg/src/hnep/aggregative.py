"""Linearly-coupled aggregative games with box constraints and targeted upper-level costs.

Player i picks x_i in the box [a_i, b_i] of R^M and pays

    f_i(x) = ((1/m) sum_j W x_j - p)^T x_i

subject to the shared capacity sum_i x_i <= c. The upper-level cost is

    fu_i(x) = 0.5 * (||x_i - t_i||^2 + sum_{j != i} ||x_i - x_j||^2)

with W a nonnegative diagonal matrix (stored as its diagonal).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidInstanceError
from .game import GameSpec
from .space import BlockVector


@dataclass(frozen=True, eq=False)
class AggregativeGame:
    a: np.ndarray  # (m, M)
    b: np.ndarray  # (m, M)
    c: np.ndarray  # (M,)
    p: np.ndarray  # (M,)
    W_diag: np.ndarray  # (M,)
    t: np.ndarray  # (m, M)
    seed: Optional[int] = None
    # stated constants; None means "derive from the data"
    kappa_G: Optional[float] = None
    L_norm: Optional[float] = None

    def __post_init__(self):
        for name in ("a", "b", "t"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise InvalidInstanceError(f"{name} must be an (m, M) array, got shape {arr.shape}")
            object.__setattr__(self, name, arr)
        for name in ("c", "p", "W_diag"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise InvalidInstanceError(f"{name} must be a length-M vector, got shape {arr.shape}")
            object.__setattr__(self, name, arr)
        m, M = self.a.shape
        if m < 1 or M < 1:
            raise InvalidInstanceError("need at least one player and one dimension")
        if self.b.shape != (m, M) or self.t.shape != (m, M):
            raise InvalidInstanceError("a, b and t must share the shape (m, M)")
        if any(v.shape != (M,) for v in (self.c, self.p, self.W_diag)):
            raise InvalidInstanceError("c, p and W_diag must have length M")
        arrays = (self.a, self.b, self.c, self.p, self.W_diag, self.t)
        if not all(np.all(np.isfinite(v)) for v in arrays):
            raise InvalidInstanceError("instance data must be finite")
        if not np.all(self.a < self.b):
            i, j = np.argwhere(self.a >= self.b)[0]
            raise InvalidInstanceError(f"empty box: a[{i},{j}] >= b[{i},{j}]")
        if not np.all(self.c > 0):
            raise InvalidInstanceError("shared bound c must be positive")
        # p = 0 coordinates are allowed: U[0, 10] draws can produce them and G stays monotone
        if not np.all(self.p >= 0):
            raise InvalidInstanceError("price vector p must be nonnegative")
        if not np.all(self.W_diag >= 0):
            raise InvalidInstanceError("W must be a nonnegative diagonal")
        for name in ("kappa_G", "L_norm"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise InvalidInstanceError(f"{name} must be a nonnegative number")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def M(self) -> int:
        return self.a.shape[1]

    def lower_cost(self, i: int, x: BlockVector) -> float:
        X = np.reshape(x.data, (self.m, self.M))
        return float(((self.W_diag * X.sum(0)) / self.m - self.p) @ X[i])

    def upper_cost(self, i: int, x: BlockVector) -> float:
        X = np.reshape(x.data, (self.m, self.M))
        return 0.5 * float(np.sum((X[i] - self.t[i]) ** 2) + np.sum((X[i] - X) ** 2))

    def to_dict(self) -> dict:
        doc = {
            "m": self.m,
            "M": self.M,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "p": self.p.tolist(),
            "W_diag": self.W_diag.tolist(),
            "t": self.t.tolist(),
            "seed": self.seed,
        }
        if self.kappa_G is not None:
            doc["kappa_G"] = self.kappa_G
        if self.L_norm is not None:
            doc["L_norm"] = self.L_norm
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "AggregativeGame":
        try:
            game = cls(
                a=doc["a"], b=doc["b"], c=doc["c"], p=doc["p"],
                W_diag=doc["W_diag"], t=doc["t"],
                seed=doc.get("seed"),
                kappa_G=doc.get("kappa_G"), L_norm=doc.get("L_norm"),
            )
        except KeyError as exc:
            raise InvalidInstanceError(f"instance document lacks field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInstanceError):
                raise
            raise InvalidInstanceError(f"malformed instance document: {exc}") from None
        if "m" in doc and doc["m"] != game.m or "M" in doc and doc["M"] != game.M:
            raise InvalidInstanceError("declared (m, M) disagree with the array shapes")
        return game


def save_instance(game: AggregativeGame, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(game.to_dict(), indent=2) + "\n")


def load_instance(path) -> AggregativeGame:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInstanceError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InvalidInstanceError(f"{path}: expected a JSON object")
    return AggregativeGame.from_dict(doc)


def compute_kappa_G(g: AggregativeGame) -> float:
    """Spectral norm of the linear part (1/m)(I + 11^T) kron W of G."""
    return (g.m + 1) / g.m * float(np.max(g.W_diag))


def compute_L_norm(g: AggregativeGame) -> float:
    """||L||_op for L x = sum_i x_i, i.e. sqrt(m)."""
    return math.sqrt(g.m)


def random_instance(seed: int, m: int = 6, M: int = 3) -> AggregativeGame:
    """Instance drawn like the published experiment.

    Uses ``numpy.random.default_rng(seed)`` (PCG64) and draws, in this order:
    a ~ U[-1, 1]^(m x M), p ~ U[0, 10]^M, diag(W) ~ U[0, 1]^M, t_i ~ U(C_i).
    b = 100 and c = 120 everywhere.
    """
    if m < 1 or M < 1:
        raise InvalidInstanceError("need m >= 1 and M >= 1")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, (m, M))
    p = rng.uniform(0.0, 10.0, M)
    W = rng.uniform(0.0, 1.0, M)
    b = np.full((m, M), 100.0)
    t = rng.uniform(a, b)
    c = np.full(M, 120.0)
    return AggregativeGame(a=a, b=b, c=c, p=p, W_diag=W, t=t, seed=seed)


def build_game_spec(g: AggregativeGame) -> GameSpec:
    m, M = g.m, g.M
    W, p, t, a, b, c = g.W_diag, g.p, g.t, g.a, g.b, g.c

    def stacked_grad(x):
        X = np.reshape(x, x.shape[:-1] + (m, M))
        G = (W * X + W * X.sum(-2, keepdims=True)) / m - p
        return np.reshape(G, x.shape)

    def stacked_upper(x):
        X = np.reshape(x, x.shape[:-1] + (m, M))
        G = (m + 1) * X - t - X.sum(-2, keepdims=True)
        return np.reshape(G, x.shape)

    def stacked_proj(x):
        X = np.reshape(x, x.shape[:-1] + (m, M))
        return np.reshape(np.maximum(a, np.minimum(X, b)), x.shape)

    def lower_grad(i, x: BlockVector):
        X = np.reshape(x.data, (m, M))
        return W * X[i] / m + W * X.sum(0) / m - p

    def upper_grad(i, x: BlockVector):
        X = np.reshape(x.data, (m, M))
        return m * X[i] - t[i] - (X.sum(0) - X[i])

    def local_proj(i, v):
        return np.maximum(a[i], np.minimum(v, b[i]))

    def couple_apply(x):
        return np.reshape(x, x.shape[:-1] + (m, M)).sum(-2)

    def couple_adjoint(u):
        return np.tile(u, m)

    def shared_proj(y):
        return np.minimum(y, c)

    kappa = compute_kappa_G(g) if g.kappa_G is None else g.kappa_G
    lnorm = compute_L_norm(g) if g.L_norm is None else g.L_norm
    return GameSpec(
        dims=(M,) * m,
        dim_g=M,
        lower_grad=lower_grad,
        local_proj=local_proj,
        couple_apply=couple_apply,
        couple_adjoint=couple_adjoint,
        shared_proj=shared_proj,
        kappa_G=kappa,
        L_norm=lnorm,
        upper_grad=upper_grad,
        lower_cost=g.lower_cost,
        upper_cost=g.upper_cost,
        stacked_lower_grad=stacked_grad,
        stacked_local_proj=stacked_proj,
        stacked_upper_grad=stacked_upper,
        local_boxes=[(a[i].copy(), b[i].copy()) for i in range(m)],
        shared_upper=c.copy(),
        name=f"aggregative(m={m}, M={M}, seed={g.seed})",
    )


def closed_form_instance() -> AggregativeGame:
    """m = 1, M = 1, W = 1, p = 2 on [0, 10] with c = 10; unique VE x = 1, u = 0."""
    return AggregativeGame(a=[[0.0]], b=[[10.0]], c=[10.0], p=[2.0], W_diag=[1.0], t=[[0.0]])


def binding_instance() -> AggregativeGame:
    """Same cost as the closed-form instance but c = 0.5 binds: VE x = 0.5, u = 1."""
    return AggregativeGame(a=[[0.0]], b=[[10.0]], c=[0.5], p=[2.0], W_diag=[1.0], t=[[0.0]])


def segment_instance() -> AggregativeGame:
    """Two players, W = 0, binding capacity: the VE set is the segment x_1 + x_2 = 1 in [0, 1]^2.

    With targets t = (0.2, 0.6) the upper-level selection is x = (13/30, 17/30).
    """
    return AggregativeGame(
        a=[[0.0], [0.0]], b=[[1.0], [1.0]], c=[1.0], p=[1.0], W_diag=[0.0], t=[[0.2], [0.6]]
    )


def interior_3d_instance() -> AggregativeGame:
    """Three players in [0, 0.2], interior unique VE x_i = 3p/4 = 0.06."""
    return AggregativeGame(
        a=[[0.0]] * 3, b=[[0.2]] * 3, c=[0.5], p=[0.08], W_diag=[1.0], t=[[0.1]] * 3
    )


SMALL_INSTANCES = {
    "closed_form": closed_form_instance,
    "binding": binding_instance,
    "segment": segment_instance,
    "interior_3d": interior_3d_instance,
}
