"""Cost families: evaluation, analytic cross blocks, finite differences."""

import numpy as np
import pytest

from mmotsig import (InputError, UnsupportedOperation, as_coords, bilinear,
                     cross_hessian_block, evaluate, external, fd_cross_hessian,
                     hedonic, hedonic_inner_minimize, neg_determinant, point,
                     sum_function, tabulated)
from conftest import random_spd, rng_for


def fd_matches_analytic(cost, x, rtol):
    worst = 0.0
    for i in range(1, cost.m + 1):
        for j in range(i + 1, cost.m + 1):
            ana = cross_hessian_block(cost, x, i, j, method="analytic").matrix
            num = cross_hessian_block(cost, x, i, j, method="finite_difference").matrix
            scale = max(1.0, float(np.abs(ana).max()))
            worst = max(worst, float(np.abs(ana - num).max()) / scale)
    assert worst <= rtol, f"finite differences off by {worst:.3e}"
    return worst


def test_sum_function_value_and_blocks():
    cost = sum_function(3, [[2.0]], [-1.0])
    x = [[0.2], [0.3], [0.5]]
    s = 1.0
    assert evaluate(cost, x) == pytest.approx(0.5 * 2.0 * s * s - s, abs=1e-15)
    blk = cross_hessian_block(cost, x, 1, 3).matrix
    assert blk.shape == (1, 1) and blk[0, 0] == 2.0


def test_sum_function_fd_agreement():
    for k in range(20):
        rng = rng_for("sumfd", k)
        n = int(rng.integers(1, 4))
        m = int(rng.integers(2, 5))
        q = rng.standard_normal((n, n))
        cost = sum_function(m, q + q.T, rng.standard_normal(n))
        x = [rng.uniform(-1, 1, n) for _ in range(m)]
        fd_matches_analytic(cost, x, 1e-6)


def test_bilinear_value_and_blocks():
    a = np.array([[1.0, -2.0], [0.5, 3.0]])
    cost = bilinear([2, 2, 2], {(1, 2): a, (1, 3): 2.0, (2, 3): 0.0})
    x = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])]
    want = x[0] @ a @ x[1] + 2.0 * x[0] @ x[2]
    assert evaluate(cost, x) == pytest.approx(want, abs=1e-15)
    assert np.array_equal(cross_hessian_block(cost, x, 1, 2).matrix, a)
    assert np.array_equal(cross_hessian_block(cost, x, 1, 3).matrix, 2.0 * np.eye(2))
    assert np.array_equal(cross_hessian_block(cost, x, 2, 3).matrix, np.zeros((2, 2)))


def test_bilinear_fd_agreement():
    for k in range(20):
        rng = rng_for("bilfd", k)
        dims = [int(rng.integers(1, 4)) for _ in range(3)]
        coeffs = {(i, j): rng.standard_normal((dims[i - 1], dims[j - 1]))
                  for i in range(1, 4) for j in range(i + 1, 4)}
        cost = bilinear(dims, coeffs)
        x = [rng.uniform(-1, 1, d) for d in dims]
        fd_matches_analytic(cost, x, 1e-6)


def test_bilinear_rejects_bad_pairs():
    with pytest.raises(InputError):
        bilinear([1, 1], {(2, 1): 1.0})
    with pytest.raises(InputError):
        bilinear([1, 1], {(1, 3): 1.0})
    with pytest.raises(InputError):
        bilinear([2, 2], {(1, 2): np.ones((3, 2))})


def test_neg_determinant_value_and_blocks():
    cost = neg_determinant(3)
    x = [np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])]
    assert evaluate(cost, x) == -1.0
    rng = rng_for("negdet-x")
    for k in range(20):
        y = [rng.uniform(-1, 1, 3) for _ in range(3)]
        X = np.column_stack(y)
        assert evaluate(cost, y) == pytest.approx(-np.linalg.det(X), rel=1e-12, abs=1e-12)
        fd_matches_analytic(cost, y, 1e-5)


def test_neg_determinant_requires_square():
    with pytest.raises(InputError):
        neg_determinant(1)


def test_hedonic_inner_minimize_matches_direct_formula():
    for k in range(10):
        rng = rng_for("hedonic-inner", k)
        n = int(rng.integers(1, 4))
        m = int(rng.integers(2, 5))
        P = [random_spd(rng, n) for _ in range(m)]
        cost = hedonic(P)
        x = [rng.uniform(-1, 1, n) for _ in range(m)]
        y, val = hedonic_inner_minimize(cost, x)
        M = np.sum(P, axis=0)
        y_direct = np.linalg.solve(M, np.sum([p @ xi for p, xi in zip(P, x)], axis=0))
        assert np.allclose(y, y_direct, atol=1e-10)
        # any perturbation of y must not lower the inner objective
        def inner(z):
            return sum(0.5 * (xi - z) @ p @ (xi - z) for p, xi in zip(P, x))
        assert val == pytest.approx(inner(y), abs=1e-12)
        for _ in range(5):
            z = y + rng.uniform(-0.1, 0.1, n)
            assert inner(z) >= val - 1e-12


def test_hedonic_blocks_and_fd():
    rng = rng_for("hedonic-fd")
    P = [random_spd(rng, 2) for _ in range(3)]
    cost = hedonic(P)
    x = [rng.uniform(-1, 1, 2) for _ in range(3)]
    M = np.sum(P, axis=0)
    for i, j in [(1, 2), (1, 3), (2, 3)]:
        blk = cross_hessian_block(cost, x, i, j).matrix
        want = -P[i - 1] @ np.linalg.solve(M, P[j - 1])
        assert np.allclose(blk, want, atol=1e-14)
    fd_matches_analytic(cost, x, 1e-6)


def test_hedonic_rejects_non_spd():
    with pytest.raises(InputError):
        hedonic([np.eye(2), -np.eye(2)])
    with pytest.raises(InputError):
        hedonic([np.eye(2), np.array([[1.0, 2.0], [0.0, 1.0]])])


def test_fd_block_transpose_symmetry():
    rng = rng_for("fd-sym")
    cost = bilinear([2, 3], {(1, 2): rng.standard_normal((2, 3))})
    x = [rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 3)]
    b12, _ = fd_cross_hessian(cost, x, 1, 2)
    b21, _ = fd_cross_hessian(cost, x, 2, 1)
    assert np.array_equal(b12, b21.T)


def test_fd_affine_shift_invariance():
    # cross blocks of a quadratic are constant; finite differences must agree
    # at shifted base points to the stencil's accuracy
    rng = rng_for("fd-shift")
    q = rng.standard_normal((2, 2))
    cost = sum_function(3, q + q.T)
    x = [rng.uniform(-0.3, 0.3, 2) for _ in range(3)]
    shift = rng.uniform(-0.3, 0.3, 2)
    a, _ = fd_cross_hessian(cost, x, 1, 2)
    b, _ = fd_cross_hessian(cost, [xi + shift for xi in x], 1, 2)
    assert np.abs(a - b).max() <= 1e-7


def test_external_cost_fd_only():
    fn = lambda coords: float(np.sin(coords[0][0]) * coords[1][0] ** 2)
    cost = external([1, 1], fn)
    x = [np.array([0.4]), np.array([0.7])]
    blk = cross_hessian_block(cost, x, 1, 2)
    want = np.cos(0.4) * 2 * 0.7
    assert blk.matrix[0, 0] == pytest.approx(want, rel=1e-6)
    assert blk.provenance == "finite_difference"
    with pytest.raises(UnsupportedOperation):
        cross_hessian_block(cost, x, 1, 2, method="analytic")


def test_tabulated_matches_nodes_and_rejects_blocks():
    axes = [np.linspace(0, 1, 5), np.linspace(0, 1, 4)]
    vals = np.add.outer(axes[0] ** 2, -axes[1])
    cost = tabulated(axes, vals)
    assert evaluate(cost, [[axes[0][2]], [axes[1][1]]]) == pytest.approx(
        axes[0][2] ** 2 - axes[1][1], abs=1e-15)
    mid = evaluate(cost, [[0.5], [0.5]])
    assert abs(mid - (0.25 - 0.5)) < 0.1
    with pytest.raises(UnsupportedOperation):
        cross_hessian_block(cost, [[0.5], [0.5]], 1, 2)
    with pytest.raises(ValueError):
        evaluate(cost, [[2.0], [0.5]])


def test_tabulated_validation():
    with pytest.raises(InputError):
        tabulated([[0.0, 0.0, 1.0]], [1.0, 2.0, 3.0])
    with pytest.raises(InputError):
        tabulated([[0.0, 1.0]], [[1.0, 2.0], [3.0, 4.0]])


def test_as_coords_validation():
    cost = bilinear([2, 1], {(1, 2): np.ones((2, 1))})
    with pytest.raises(InputError):
        as_coords(cost, [[1.0, 2.0]])
    with pytest.raises(InputError):
        as_coords(cost, [[1.0], [2.0]])
    with pytest.raises(InputError):
        as_coords(cost, [[np.nan, 0.0], [1.0]])
    pt = point(cost, [[1.0, 2.0], [3.0]])
    assert np.array_equal(pt.stacked, [1.0, 2.0, 3.0])


def test_describe_mentions_family_and_dims():
    cost = sum_function(4, [[1.0]])
    text = cost.describe()
    assert "sum_function" in text and "4" in text
