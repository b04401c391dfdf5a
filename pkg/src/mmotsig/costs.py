"""Cost functions on products of Euclidean marginals.

A cost couples m >= 2 marginal spaces R^{n_1} x ... x R^{n_m}. Four builtin
families carry analytic cross derivatives; tabulated and external costs are
evaluated pointwise, with finite differences available for smooth externals.

Builtin families
----------------
sum_function     c(x) = h(x_1 + ... + x_m) with h(s) = s'Qs/2 + b's
bilinear         c(x) = sum_{i<j} x_i' A_ij x_j   (scalar A_ij means A_ij * I)
neg_determinant  c(x) = -det([x_1 ... x_n]),  m = n
hedonic          c(x) = min_y sum_i (x_i - y)' P_i (x_i - y) / 2,  P_i SPD

Marginal indices are 1-based throughout the public API.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Mapping

import numpy as np

from .errors import InputError, NumericalError, UnsupportedOperation

BUILTIN_NAMES = ("sum_function", "bilinear", "neg_determinant", "hedonic")

#: Default scale factor for finite-difference steps. The quarter power is the
#: standard balance for second central differences; h = _FD_SCALE * max(1, |coord|).
_FD_SCALE = float(np.finfo(float).eps ** 0.25)


@dataclasses.dataclass(frozen=True, eq=False)
class Point:
    """One point of the product space: a coordinate vector per marginal."""

    coords: tuple

    @property
    def stacked(self):
        """All coordinates concatenated into one vector of length sum(dims)."""
        return np.concatenate([np.atleast_1d(c) for c in self.coords])

    def __len__(self):
        return len(self.coords)


@dataclasses.dataclass(frozen=True, eq=False)
class CrossHessianBlock:
    """Mixed second derivative block of a cost at a point.

    Attributes
    ----------
    i, j : int
        1-based marginal indices, i != j.
    matrix : ndarray, shape (n_i, n_j)
    provenance : str
        "analytic" or "finite_difference".
    step : float or None
        Step scale used when provenance is "finite_difference".
    """

    i: int
    j: int
    matrix: np.ndarray
    provenance: str
    step: float | None = None


@dataclasses.dataclass(frozen=True, eq=False)
class CostSpec:
    """Immutable description of a cost function.

    kind is "builtin", "tabulated" or "external". Builtins carry a family
    name plus validated parameter arrays. Tabulated costs interpolate a value
    array over a product of 1-D axes (scalar marginals only). External costs
    wrap a caller-supplied evaluator.
    """

    m: int
    dims: tuple
    kind: str
    name: str | None = None
    params: Mapping | None = None
    evaluator: Callable | None = None
    axes: tuple | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.m < 2:
            raise InputError(f"need at least two marginals, got m={self.m}")
        if len(self.dims) != self.m:
            raise InputError(f"dims has {len(self.dims)} entries for m={self.m} marginals")
        if any(int(n) < 1 for n in self.dims):
            raise InputError(f"marginal dimensions must be positive, got {self.dims}")
        if self.kind not in ("builtin", "tabulated", "external"):
            raise InputError(f"unknown cost kind {self.kind!r}")
        if self.kind == "builtin" and self.name not in BUILTIN_NAMES:
            raise InputError(f"unknown builtin {self.name!r}; known: {BUILTIN_NAMES}")

    @property
    def total_dim(self):
        return int(sum(self.dims))

    def describe(self):
        """Short human-readable label for reports."""
        if self.kind == "builtin":
            return f"{self.name}(m={self.m}, dims={list(self.dims)})"
        return f"{self.kind}(m={self.m}, dims={list(self.dims)})"


def _symmetric(a, what, tol=1e-12):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{what} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{what} contains non-finite entries")
    if np.abs(a - a.T).max() > tol * max(1.0, np.abs(a).max()):
        raise InputError(f"{what} must be symmetric")
    return 0.5 * (a + a.T)


def sum_function(m, Q, b=None):
    """Cost c(x) = h(sum_i x_i) with quadratic h(s) = s'Qs/2 + b's."""
    Q = _symmetric(Q, "Q")
    n = Q.shape[0]
    if b is None:
        b = np.zeros(n)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape != (n,):
        raise InputError(f"b has shape {b.shape}, expected ({n},)")
    return CostSpec(m=int(m), dims=(n,) * int(m), kind="builtin", name="sum_function",
                    params={"Q": Q, "b": b})


def bilinear(dims, coeffs):
    """Cost c(x) = sum over pairs i<j of x_i' A_ij x_j.

    coeffs maps 1-based pairs (i, j), i < j, to either a scalar (shorthand
    for scalar * identity, requiring n_i == n_j) or an (n_i, n_j) array.
    Missing pairs contribute nothing.
    """
    dims = tuple(int(n) for n in dims)
    m = len(dims)
    table = {}
    for key, val in dict(coeffs).items():
        i, j = (int(key[0]), int(key[1]))
        if not (1 <= i < j <= m):
            raise InputError(f"bilinear pair {key} out of range for m={m} (need 1 <= i < j <= m)")
        if np.ndim(val) == 0:
            if dims[i - 1] != dims[j - 1]:
                raise InputError(
                    f"scalar coefficient for pair ({i},{j}) needs equal dims, "
                    f"got {dims[i - 1]} and {dims[j - 1]}")
            table[(i, j)] = float(val)
        else:
            a = np.asarray(val, dtype=float)
            if a.shape != (dims[i - 1], dims[j - 1]):
                raise InputError(
                    f"coefficient for pair ({i},{j}) has shape {a.shape}, "
                    f"expected ({dims[i - 1]}, {dims[j - 1]})")
            if not np.all(np.isfinite(a)):
                raise InputError(f"coefficient for pair ({i},{j}) contains non-finite entries")
            table[(i, j)] = a
    return CostSpec(m=m, dims=dims, kind="builtin", name="bilinear", params={"coeffs": table})


def neg_determinant(n):
    """Cost c(x) = -det of the matrix with columns x_1, ..., x_n; m = n."""
    n = int(n)
    if n < 2:
        raise InputError(f"neg_determinant needs n >= 2, got {n}")
    return CostSpec(m=n, dims=(n,) * n, kind="builtin", name="neg_determinant", params={})


def hedonic(P):
    """Matching cost c(x) = min_y sum_i (x_i - y)' P_i (x_i - y) / 2.

    Each P_i must be symmetric positive definite; all marginals share the
    dimension of the reference variable y.
    """
    mats = [(_symmetric(Pi, f"P[{k + 1}]")) for k, Pi in enumerate(P)]
    m = len(mats)
    if m < 2:
        raise InputError("hedonic needs at least two marginals")
    n = mats[0].shape[0]
    for k, Pi in enumerate(mats):
        if Pi.shape != (n, n):
            raise InputError(f"P[{k + 1}] has shape {Pi.shape}, expected ({n}, {n})")
        if np.linalg.eigvalsh(Pi).min() <= 0:
            raise InputError(f"P[{k + 1}] is not positive definite")
    return CostSpec(m=m, dims=(n,) * m, kind="builtin", name="hedonic",
                    params={"P": tuple(mats)})


def tabulated(axes, values):
    """Cost given by multilinear interpolation of values over scalar axes."""
    axes = tuple(np.asarray(a, dtype=float).reshape(-1) for a in axes)
    m = len(axes)
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(len(a) for a in axes):
        raise InputError(
            f"table shape {values.shape} does not match axis lengths {[len(a) for a in axes]}")
    for k, a in enumerate(axes):
        if len(a) < 2 or np.any(np.diff(a) <= 0):
            raise InputError(f"axis {k + 1} must be strictly increasing with >= 2 entries")
    if not np.all(np.isfinite(values)):
        raise InputError("table contains non-finite values")
    return CostSpec(m=m, dims=(1,) * m, kind="tabulated", axes=axes, table=values)


def external(dims, fn):
    """Cost evaluated by a caller-supplied function of m coordinate vectors."""
    dims = tuple(int(n) for n in dims)
    if not callable(fn):
        raise InputError("external cost needs a callable evaluator")
    return CostSpec(m=len(dims), dims=dims, kind="external", evaluator=fn)


def as_coords(cost, x):
    """Validate a point against the cost layout; return a list of float vectors."""
    coords = x.coords if isinstance(x, Point) else x
    if len(coords) != cost.m:
        raise InputError(f"point has {len(coords)} marginals, cost has {cost.m}")
    out = []
    for k, c in enumerate(coords):
        v = np.asarray(c, dtype=float).reshape(-1)
        if v.shape != (cost.dims[k],):
            raise InputError(
                f"marginal {k + 1} coordinate has length {v.shape[0]},"
                f" expected {cost.dims[k]}")
        if not np.all(np.isfinite(v)):
            raise InputError(f"marginal {k + 1} coordinate is not finite")
        out.append(v)
    return out


def point(cost, x):
    """Coerce raw coordinates to a validated Point."""
    return Point(tuple(as_coords(cost, x)))


def evaluate(cost, x):
    """Evaluate the cost at a point (any m-sequence of coordinate vectors)."""
    coords = as_coords(cost, x)
    if cost.kind == "builtin":
        return _evaluate_builtin(cost, coords)
    if cost.kind == "tabulated":
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator(cost.axes, cost.table, method="linear",
                                         bounds_error=True)
        return float(interp(np.array([c[0] for c in coords]))[0])
    value = float(cost.evaluator(coords))
    if not math.isfinite(value):
        raise NumericalError(f"external cost returned non-finite value {value}")
    return value


def _evaluate_builtin(cost, coords):
    name = cost.name
    if name == "sum_function":
        s = np.sum(coords, axis=0)
        Q, b = cost.params["Q"], cost.params["b"]
        return float(0.5 * s @ Q @ s + b @ s)
    if name == "bilinear":
        total = 0.0
        for (i, j), a in cost.params["coeffs"].items():
            xi, xj = coords[i - 1], coords[j - 1]
            total += float(a * xi @ xj) if np.ndim(a) == 0 else float(xi @ a @ xj)
        return total
    if name == "neg_determinant":
        return float(-np.linalg.det(np.column_stack(coords)))
    # hedonic
    _, value = hedonic_inner_minimize(cost, coords)
    return value


def hedonic_inner_minimize(cost, x):
    """Solve the inner minimization of a hedonic cost.

    Returns (y, value) where y minimizes sum_i (x_i - y)' P_i (x_i - y) / 2.
    The first-order condition (sum_i P_i) y = sum_i P_i x_i is solved directly
    and the residual gradient is required to be below 1e-10.
    """
    if cost.kind != "builtin" or cost.name != "hedonic":
        raise InputError("hedonic_inner_minimize requires a hedonic cost")
    coords = as_coords(cost, x)
    P = cost.params["P"]
    M = np.sum(P, axis=0)
    rhs = np.sum([Pi @ c for Pi, c in zip(P, coords)], axis=0)
    try:
        y = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"hedonic inner system is singular: {exc}") from exc
    grad = M @ y - rhs
    gnorm = float(np.linalg.norm(grad))
    if gnorm > 1e-10:
        raise NumericalError(
            f"hedonic inner solve did not reach stationarity: |grad| = {gnorm:.3e}, "
            f"y = {y!r}")
    value = float(sum(0.5 * (c - y) @ Pi @ (c - y) for Pi, c in zip(P, coords)))
    return y, value


def _det_second_partial(X, a, b, i, j):
    # d^2 det / dX[a,i] dX[b,j] for i != j: signed second-order cofactor.
    if a == b:
        return 0.0
    minor = np.delete(np.delete(X, (a, b), axis=0), (i, j), axis=1)
    sign = -1.0 if (a + b + i + j) % 2 else 1.0
    if (a < b) != (i < j):
        sign = -sign
    return sign * (float(np.linalg.det(minor)) if minor.size else 1.0)


def _analytic_block(cost, coords, i, j):
    name = cost.name
    if name == "sum_function":
        return cost.params["Q"].copy()
    if name == "bilinear":
        key = (i, j) if i < j else (j, i)
        a = cost.params["coeffs"].get(key)
        ni, nj = cost.dims[i - 1], cost.dims[j - 1]
        if a is None:
            return np.zeros((ni, nj))
        B = a * np.eye(ni) if np.ndim(a) == 0 else np.asarray(a)
        return B.copy() if i < j else B.T.copy()
    if name == "neg_determinant":
        X = np.column_stack(coords)
        n = X.shape[0]
        B = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                B[a, b] = -_det_second_partial(X, a, b, i - 1, j - 1)
        return B
    # hedonic: differentiate x_i -> P_i (x_i - y*), with dy*/dx_j = M^{-1} P_j
    P = cost.params["P"]
    M = np.sum(P, axis=0)
    try:
        return -P[i - 1] @ np.linalg.solve(M, P[j - 1])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"hedonic inner system is singular: {exc}") from exc


def fd_cross_hessian(cost, x, i, j, step_scale=None):
    """Mixed second derivative block by 4-point central differences.

    Steps are per coordinate: h = step_scale * max(1, |coordinate|). The
    stencil is symmetric in the roles of (i, j), so the block already equals
    the transpose of the (j, i) evaluation entry by entry.
    """
    coords = as_coords(cost, x)
    if cost.kind == "tabulated":
        raise UnsupportedOperation(
            "cross-Hessian is undefined for tabulated costs (piecewise multilinear)")
    scale = _FD_SCALE if step_scale is None else float(step_scale)
    if scale <= 0:
        raise InputError(f"step scale must be positive, got {scale}")
    ii, jj = i - 1, j - 1
    ni, nj = cost.dims[ii], cost.dims[jj]
    B = np.zeros((ni, nj))
    for a in range(ni):
        ha = scale * max(1.0, abs(coords[ii][a]))
        for b in range(nj):
            hb = scale * max(1.0, abs(coords[jj][b]))
            vals = []
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                shifted = [c.copy() for c in coords]
                shifted[ii][a] += sa * ha
                shifted[jj][b] += sb * hb
                vals.append(evaluate(cost, shifted))
            B[a, b] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * ha * hb)
    if not np.all(np.isfinite(B)):
        raise NumericalError(f"finite differences produced non-finite entries for pair ({i},{j})")
    return B, scale


def cross_hessian_block(cost, x, i, j, method="auto", step_scale=None):
    """Cross derivative block D^2_{x_i x_j} c at a point, as CrossHessianBlock.

    method: "auto" picks analytic formulas for builtins and finite differences
    for external costs; "analytic" and "finite_difference" force a path.
    Tabulated costs do not admit cross derivatives.
    """
    i, j = int(i), int(j)
    if not (1 <= i <= cost.m and 1 <= j <= cost.m) or i == j:
        raise InputError(f"need distinct marginal indices in 1..{cost.m}, got ({i}, {j})")
    coords = as_coords(cost, x)
    if method not in ("auto", "analytic", "finite_difference"):
        raise InputError(f"unknown method {method!r}")
    if cost.kind == "tabulated":
        raise UnsupportedOperation(
            "cross-Hessian is undefined for tabulated costs (piecewise multilinear)")
    if method == "analytic" or (method == "auto" and cost.kind == "builtin"):
        if cost.kind != "builtin":
            raise UnsupportedOperation("analytic blocks are only available for builtin costs")
        return CrossHessianBlock(i=i, j=j, matrix=_analytic_block(cost, coords, i, j),
                                 provenance="analytic")
    B, scale = fd_cross_hessian(cost, coords, i, j, step_scale=step_scale)
    return CrossHessianBlock(i=i, j=j, matrix=B, provenance="finite_difference", step=scale)
