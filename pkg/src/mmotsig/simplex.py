"""Primal simplex on the multi-marginal transportation polytope.

Variables are the cells of an m-way product grid; row r constrains one
marginal weight. One constraint per marginal group is redundant, so the last
row of every group except the first is dropped up front, leaving a full-rank
system with sum(K_i) - (m - 1) rows. Columns never materialize as a matrix:
each cell hits exactly one kept row per marginal, so pricing reduces to an
outer sum of per-marginal dual vectors over the grid.

Pivoting follows Bland's rule on both the entering and the leaving side
(lowest variable index), which precludes cycling; the basis inverse is
maintained by eta updates and rebuilt from scratch every 64 pivots.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

_REFACTOR_EVERY = 64


class TransportSimplex:
    """Two-phase revised simplex for  min c'x : marginals fixed, x >= 0."""

    def __init__(self, sizes, costs, weights, max_pivots=None):
        self.sizes = tuple(int(k) for k in sizes)
        self.m = len(self.sizes)
        self.V = int(np.prod(self.sizes))
        self.c = np.asarray(costs, dtype=float).reshape(-1)
        if self.c.shape != (self.V,):
            raise NumericalError(f"cost vector has {self.c.shape[0]} entries for {self.V} cells")
        # kept rows: all of group 1, all but the last of groups 2..m
        self.row_of = []
        base = 0
        for i, K in enumerate(self.sizes):
            kept = K if i == 0 else K - 1
            ids = np.full(K, -1, dtype=int)
            ids[:kept] = base + np.arange(kept)
            self.row_of.append(ids)
            base += kept
        self.R = base
        b = [np.asarray(weights[0], dtype=float)]
        b += [np.asarray(w, dtype=float)[:-1] for w in weights[1:]]
        self.b = np.concatenate(b)
        self.max_pivots = int(max_pivots) if max_pivots else 20000 + 200 * self.R
        self.pivots = 0

        self.basis = np.array([self.V + r for r in range(self.R)], dtype=int)
        self.in_basis = np.zeros(self.V, dtype=bool)
        self.Binv = np.eye(self.R)
        self.xB = self.b.copy()

    # -- column access ----------------------------------------------------

    def column_rows(self, v):
        idx = np.unravel_index(v, self.sizes)
        return [self.row_of[i][k] for i, k in enumerate(idx) if self.row_of[i][k] >= 0]

    def _column(self, v):
        a = np.zeros(self.R)
        if v >= self.V:
            a[v - self.V] = 1.0
            return a
        a[self.column_rows(v)] = 1.0
        return a

    def _grid_sum(self, y):
        """For every cell v, the sum of y over the rows the cell hits."""
        total = np.zeros(self.sizes)
        for i, K in enumerate(self.sizes):
            u = np.where(self.row_of[i] >= 0, y[np.clip(self.row_of[i], 0, None)], 0.0)
            shape = [1] * self.m
            shape[i] = K
            total = total + u.reshape(shape)
        return total.reshape(-1)

    # -- basis maintenance -------------------------------------------------

    def _refactor(self):
        B = np.column_stack([self._column(v) for v in self.basis])
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"basis matrix became singular after {self.pivots} pivots") from exc
        self.xB = self.Binv @ self.b

    def _pivot(self, row, v, d):
        self.pivots += 1
        leaving = self.basis[row]
        if leaving < self.V:
            self.in_basis[leaving] = False
        self.basis[row] = v
        if v < self.V:
            self.in_basis[v] = True
        piv = d[row]
        theta = max(self.xB[row] / piv, 0.0)
        self.xB -= theta * d
        self.xB[row] = theta
        self.Binv[row] /= piv
        others = np.arange(self.R) != row
        self.Binv[others] -= np.outer(d[others], self.Binv[row])
        if self.pivots % _REFACTOR_EVERY == 0:
            self._refactor()

    # -- simplex core -------------------------------------------------------

    def _phase_costs(self, phase):
        if phase == 1:
            return np.where(self.basis >= self.V, 1.0, 0.0)
        cB = np.empty(self.R)
        for r, v in enumerate(self.basis):
            cB[r] = 0.0 if v >= self.V else self.c[v]
        return cB

    def _run_phase(self, phase):
        tol_rc = 1e-10 * (1.0 + (np.abs(self.c).max() if phase == 2 else 1.0))
        while True:
            if self.pivots > self.max_pivots:
                raise NumericalError(
                    f"pivot limit {self.max_pivots} exceeded in phase {phase} "
                    f"(R={self.R}, V={self.V})")
            cB = self._phase_costs(phase)
            y = self.Binv.T @ cB
            rc = (self.c if phase == 2 else 0.0) - self._grid_sum(y)
            rc[self.in_basis] = 0.0
            candidates = np.flatnonzero(rc < -tol_rc)
            if candidates.size == 0:
                return y
            v = int(candidates[0])  # Bland: lowest variable index enters
            d = self.Binv @ self._column(v)
            pos = d > 1e-9
            if not pos.any():
                raise NumericalError(
                    f"unbounded direction at variable {v}; the polytope should be bounded")
            ratios = np.where(pos, self.xB / np.where(pos, d, 1.0), np.inf)
            theta = max(ratios.min(), 0.0)
            near = np.flatnonzero(pos & (ratios <= theta + 1e-12 * (1.0 + theta)))
            row = int(near[np.argmin(self.basis[near])])  # Bland: lowest index leaves
            self._pivot(row, v, d)

    def _drive_out_artificials(self):
        for row in range(self.R):
            if self.basis[row] < self.V:
                continue
            w = self.Binv[row]
            vals = self._grid_sum(w)
            vals[self.in_basis] = 0.0
            cand = np.flatnonzero(np.abs(vals) > 1e-9)
            if cand.size == 0:
                raise NumericalError(
                    f"row {row} appears redundant; cannot replace its artificial variable")
            v = int(cand[0])
            d = self.Binv @ self._column(v)
            self._pivot(row, v, d)

    def solve(self):
        """Run both phases; return (basis, xB, y) at the optimum."""
        self._run_phase(1)
        infeas = sum(self.xB[r] for r in range(self.R) if self.basis[r] >= self.V)
        if infeas > 1e-9 * (1.0 + np.abs(self.b).sum()):
            raise NumericalError(f"marginal constraints are infeasible (residual {infeas:.3e})")
        if np.any(self.basis >= self.V):
            self._drive_out_artificials()
        self._refactor()
        y = self._run_phase(2)
        self._refactor()
        cB = self._phase_costs(2)
        y = self.Binv.T @ cB
        return self.basis.copy(), np.maximum(self.xB, 0.0), y
