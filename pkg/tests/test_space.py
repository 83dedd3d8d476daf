import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hnep.errors import ContractViolation, InvalidParameterError, InvalidSetError
from hnep.space import BlockVector, LiftedPoint, project_ball, project_box, project_upper_bound

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
# projection properties carry an absolute 1e-10 slack, so sample at unit scale
unit = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vec(n, elements=unit):
    return arrays(np.float64, n, elements=elements)


def test_project_box_examples():
    assert np.array_equal(project_box([0.5], [-1], [1]), [0.5])
    assert np.array_equal(project_box([150, 80, 101], [0, 0, 0], [100, 100, 100]), [100, 80, 100])
    assert np.array_equal(project_box([-5], [-1], [1]), [-1])


def test_project_box_errors():
    with pytest.raises(ContractViolation):
        project_box([1, 2], [0], [1])
    with pytest.raises(InvalidSetError):
        project_box([0.0], [1.0], [0.0])


def test_project_upper_bound_examples():
    c = np.array([120.0, 120, 120])
    assert np.array_equal(project_upper_bound([130, 100, 90], c), [120, 100, 90])
    assert np.array_equal(project_upper_bound(c, c), c)
    assert np.array_equal(project_upper_bound([0, 0, 0], c), [0, 0, 0])
    with pytest.raises(ContractViolation):
        project_upper_bound([1, 2], [1])


def _lifted(flat, dims=(2, 1), dim_g=2):
    return LiftedPoint.from_flat(flat, dims, dim_g)


def test_project_ball_examples():
    xi = _lifted([6.0, 0, 0, 8.0, 0])  # norm 10
    assert project_ball(xi, 1e15) == xi
    zero = _lifted(np.zeros(5))
    assert project_ball(zero, 1.0) == zero
    xi4 = _lifted([0, 4.0, 0, 0, 0])
    out = project_ball(xi4, 2.0)
    assert np.allclose(out.flat(), xi4.flat() / 2, rtol=0, atol=1e-15)
    assert out.norm() == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(InvalidParameterError):
        project_ball(xi, 0.0)
    assert project_ball(xi, np.inf) == xi


@settings(max_examples=200, deadline=None)
@given(vec(4), vec(4), vec(4), vec(4))
def test_box_projection_properties(v, w, l1, l2):
    lo, hi = np.minimum(l1, l2), np.maximum(l1, l2)
    pv, pw = project_box(v, lo, hi), project_box(w, lo, hi)
    assert np.array_equal(project_box(pv, lo, hi), pv)
    s = np.random.default_rng(0).uniform(lo, hi)
    # variational characterization and firm nonexpansiveness
    assert (v - pv) @ (s - pv) <= 1e-10
    assert np.sum((pv - pw) ** 2) <= (pv - pw) @ (v - w) + 1e-10


@settings(max_examples=200, deadline=None)
@given(vec(3), vec(3), vec(3))
def test_upper_bound_projection_properties(y, z, c):
    py, pz = project_upper_bound(y, c), project_upper_bound(z, c)
    assert np.array_equal(project_upper_bound(py, c), py)
    s = c - np.abs(np.random.default_rng(1).standard_normal(3))
    assert (y - py) @ (s - py) <= 1e-10
    assert np.sum((py - pz) ** 2) <= (py - pz) @ (y - z) + 1e-10


@settings(max_examples=200, deadline=None)
@given(vec(5), vec(5), st.floats(1e-2, 30))
def test_ball_projection_properties(a, b, r):
    xa, xb = _lifted(a), _lifted(b)
    pa, pb = project_ball(xa, r), project_ball(xb, r)
    assert pa.norm() <= r * (1 + 1e-12)
    assert np.allclose(project_ball(pa, r).flat(), pa.flat(), rtol=1e-14, atol=0)
    d = np.random.default_rng(2).standard_normal(5)
    s = _lifted(d / np.linalg.norm(d) * r * 0.5)
    assert (xa - pa).dot(s - pa) <= 1e-10
    assert (pa - pb).norm() ** 2 <= (pa - pb).dot(xa - xb) + 1e-10


@settings(max_examples=100, deadline=None)
@given(vec(6, finite), vec(6, finite), finite)
def test_block_arithmetic_matches_flat(a, b, s):
    dims = (1, 3, 2)
    x, y = BlockVector(a, dims), BlockVector(b, dims)
    assert np.array_equal((x + y).data, a + b)
    assert np.array_equal((x - y).data, a - b)
    assert np.array_equal((s * x).data, s * a)
    assert x.dot(y) == float(a @ b)
    assert x.norm() == float(np.linalg.norm(a))
    assert x.norm() ** 2 == pytest.approx(sum(float(blk @ blk) for blk in x.blocks), rel=1e-12, abs=1e-12)


def test_block_layout():
    x = BlockVector.from_blocks([[1.0], [2.0, 3.0], [4.0]])
    assert x.dims == (1, 2, 1) and x.size == 4
    assert np.array_equal(x.block(1), [2, 3])
    assert [b.tolist() for b in x.others(1)] == [[1.0], [4.0]]
    z = x.substitute(1, [9.0, 9.0])
    assert np.array_equal(z.data, [1, 9, 9, 4]) and np.array_equal(x.data, [1, 2, 3, 4])
    with pytest.raises(ValueError):
        x.data[0] = 5.0
    with pytest.raises(ContractViolation):
        x + BlockVector([1.0, 2, 3, 4], (2, 2))
    with pytest.raises(ContractViolation):
        x.substitute(0, [1.0, 2.0])
    with pytest.raises(ContractViolation):
        BlockVector([1.0, 2.0], (3,))


def test_lifted_norm_is_product_norm():
    xi = LiftedPoint(BlockVector.from_blocks([[3.0], [0.0]]), [4.0])
    assert xi.norm() == 5.0
    assert xi.dot(xi) == pytest.approx(25.0)
    with pytest.raises(ContractViolation):
        xi + LiftedPoint(xi.x, [1.0, 2.0])
