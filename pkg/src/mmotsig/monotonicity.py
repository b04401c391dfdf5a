"""Monotonicity diagnostics for costs and discrete supports.

A support is monotone with respect to a two-group partition when swapping the
coordinates of one group between any two of its points never lowers the total
cost. For scalar marginals the pairwise rectangle increment of the cost gives
each pair (i, j) a sign; signs of +1/-1 classify costs whose optimal supports
order the pair co- or anti-monotonically, and a triple-product relation ties
the pairwise signs together.
"""

from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from .costs import Point, UnsupportedOperation, as_coords, cross_hessian_block, evaluate
from .errors import InputError


@dataclasses.dataclass(frozen=True, eq=False)
class SupportSet:
    """Finite set of product-space points, optionally weighted.

    Points must be pairwise distinct: stacked coordinates at least 1e-12
    apart in the max norm.
    """

    points: tuple
    masses: tuple | None = None

    def __post_init__(self):
        if not self.points:
            raise InputError("support set is empty")
        if self.masses is not None and len(self.masses) != len(self.points):
            raise InputError("masses and points disagree in length")
        stacked = self.stacked()
        if not np.all(np.isfinite(stacked)):
            raise InputError("support contains non-finite coordinates")
        for a in range(len(self.points)):
            for b in range(a + 1, len(self.points)):
                if np.abs(stacked[a] - stacked[b]).max() <= 1e-12:
                    raise InputError(f"support points {a} and {b} coincide within 1e-12")

    def __len__(self):
        return len(self.points)

    def stacked(self):
        """Array of shape (len(S), sum(dims)) with one stacked point per row."""
        return np.array([p.stacked for p in self.points])


def support_from_raw(cost, rows, masses=None):
    """Build a SupportSet from raw per-marginal coordinate rows."""
    pts = tuple(Point(tuple(as_coords(cost, r))) for r in rows)
    return SupportSet(points=pts, masses=None if masses is None else tuple(masses))


@dataclasses.dataclass(frozen=True)
class Violation:
    """One failed swap test: pair of support indices, partition, defect size."""

    pair: tuple
    partition: object
    defect: float


@dataclasses.dataclass(frozen=True)
class MonotonicityReport:
    """Outcome of the pairwise swap test over a set of partitions."""

    violations: tuple
    tolerance: float
    pairs_checked: int
    max_defect: float

    @property
    def passed(self):
        return not self.violations


def _swap(py, pz, partition):
    w1, w2 = [], []
    for k in range(1, len(py.coords) + 1):
        take_y = k in partition.plus
        w1.append(py.coords[k - 1] if take_y else pz.coords[k - 1])
        w2.append(pz.coords[k - 1] if take_y else py.coords[k - 1])
    return w1, w2


def c_monotone_violations(cost, support, partitions, tol=None):
    """Swap-test every support pair against every partition.

    The defect of a pair (y, z) under partition p is
    c(y) + c(z) - c(swap) - c(co-swap); a positive defect beyond tolerance is
    a violation, meaning the pair could be rewired across p at lower cost.
    The default tolerance is 1e-9 times the largest |cost| encountered.
    """
    pts = support.points
    values = [evaluate(cost, p) for p in pts]
    records = []
    vmax = max((abs(v) for v in values), default=0.0)
    for a, b in itertools.combinations(range(len(pts)), 2):
        for p in partitions:
            w1, w2 = _swap(pts[a], pts[b], p)
            c1, c2 = evaluate(cost, w1), evaluate(cost, w2)
            vmax = max(vmax, abs(c1), abs(c2))
            records.append(((a, b), p, values[a] + values[b] - c1 - c2))
    tolerance = (1e-9 * max(vmax, 1e-300)) if tol is None else float(tol)
    violations = tuple(Violation(pair=pair, partition=p, defect=float(d))
                       for pair, p, d in records if d > tolerance)
    max_defect = max((d for _, _, d in records), default=0.0)
    npairs = len(pts) * (len(pts) - 1) // 2
    return MonotonicityReport(violations=violations, tolerance=tolerance,
                              pairs_checked=npairs, max_defect=float(max_defect))


@dataclasses.dataclass(frozen=True)
class TwoMonotoneReport:
    """Rectangle-increment sign of a cost on one scalar pair.

    sign is +1 when every sampled increment is positive, -1 when every one is
    negative, and None when samples disagree, vanish, or (for twice
    differentiable costs) the grid-sampled mixed partial changes sign.
    """

    i: int
    j: int
    sign: int | None
    samples: int
    negative: int
    positive: int
    zero: int
    hessian_sign: int | None


def _require_scalar(cost):
    if any(d != 1 for d in cost.dims):
        raise InputError("pairwise sign analysis requires scalar marginals")


def _box_for(cost, box):
    box = [(float(lo), float(hi)) for lo, hi in box]
    if len(box) != cost.m:
        raise InputError(f"box has {len(box)} intervals, cost has m={cost.m}")
    if any(hi <= lo for lo, hi in box):
        raise InputError("box intervals must have positive width")
    return box


def _hessian_grid_sign(cost, i, j, box, per_axis):
    # Uniform sign of d2c/dx_i dx_j over a coarse product grid, None if mixed.
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
    vals = []
    for combo in itertools.product(*axes):
        x = [np.array([v]) for v in combo]
        blk = cross_hessian_block(cost, x, i, j)
        vals.append(float(blk.matrix[0, 0]))
    vals = np.array(vals)
    tol = 1e-12 * max(np.abs(vals).max(), 1e-300)
    if np.all(vals > tol):
        return 1
    if np.all(vals < -tol):
        return -1
    return None


def two_monotone_sign(cost, i, j, box, samples=200, seed=0, grid_per_axis=None):
    """Classify the rectangle increment sign of pair (i, j) on a box.

    Draws base points uniformly in the box and positive offsets that stay
    inside it, then evaluates
    c(x) + c(x + t e_i + s e_j) - c(x + t e_i) - c(x + s e_j).
    For differentiable kinds the verdict additionally requires the mixed
    partial to keep one sign on a coarse grid; tabulated costs rely on
    samples alone.
    """
    _require_scalar(cost)
    if i == j or not (1 <= i <= cost.m and 1 <= j <= cost.m):
        raise InputError(f"need distinct indices in 1..{cost.m}, got ({i}, {j})")
    if samples < 100:
        raise InputError(f"need at least 100 samples for a sign verdict, got {samples}")
    box = _box_for(cost, box)
    rng = np.random.default_rng(seed)
    vmax = 0.0
    defects = np.empty(samples)
    for k in range(samples):
        x = np.array([rng.uniform(lo, hi) for lo, hi in box])
        # offsets in (0, hi - x], so all four corners stay inside the box
        t = (box[i - 1][1] - x[i - 1]) * (1.0 - rng.uniform())
        s = (box[j - 1][1] - x[j - 1]) * (1.0 - rng.uniform())
        def val(ti, sj):
            y = x.copy()
            y[i - 1] += ti
            y[j - 1] += sj
            return evaluate(cost, [np.array([v]) for v in y])
        corners = [val(0, 0), val(t, s), val(t, 0), val(0, s)]
        defects[k] = corners[0] + corners[1] - corners[2] - corners[3]
        vmax = max(vmax, *map(abs, corners))
    # increments below the rounding floor of the four evaluations are zero
    tol = 64.0 * np.finfo(float).eps * max(vmax, 1e-300)
    neg = int((defects < -tol).sum())
    pos = int((defects > tol).sum())
    zero = samples - neg - pos
    sample_sign = -1 if neg == samples else (1 if pos == samples else None)

    hess_sign = None
    if cost.kind != "tabulated":
        per_axis = grid_per_axis or max(2, int(round(256 ** (1.0 / cost.m))))
        hess_sign = _hessian_grid_sign(cost, i, j, box, per_axis)
        verdict = sample_sign if (sample_sign is not None and hess_sign == sample_sign) else None
    else:
        verdict = sample_sign
    return TwoMonotoneReport(i=i, j=j, sign=verdict, samples=samples, negative=neg,
                             positive=pos, zero=zero, hessian_sign=hess_sign)


@dataclasses.dataclass(frozen=True)
class CompatibilityReport:
    """Triple-product consistency of the pairwise signs.

    Every unordered triple must multiply its three pair signs to -1. verdict
    is "compatible", "incompatible" or "inconclusive"; offending lists the
    failing triples or the undetermined pairs.
    """

    pair_signs: dict
    triples: dict
    verdict: str
    offending: tuple


def compatibility_check(cost, box, samples=200, seed=0):
    """Determine all pairwise signs and test the triple-product relation."""
    _require_scalar(cost)
    signs = {}
    for i, j in itertools.combinations(range(1, cost.m + 1), 2):
        signs[(i, j)] = two_monotone_sign(cost, i, j, box, samples=samples, seed=seed).sign
    undetermined = tuple(p for p, s in signs.items() if s is None)
    if undetermined:
        return CompatibilityReport(pair_signs=signs, triples={}, verdict="inconclusive",
                                   offending=undetermined)
    triples = {}
    bad = []
    for i, j, k in itertools.combinations(range(1, cost.m + 1), 3):
        prod = signs[(i, j)] * signs[(j, k)] * signs[(i, k)]
        triples[(i, j, k)] = prod
        if prod != -1:
            bad.append((i, j, k))
    verdict = "compatible" if not bad else "incompatible"
    return CompatibilityReport(pair_signs=signs, triples=triples, verdict=verdict,
                               offending=tuple(bad))


@dataclasses.dataclass(frozen=True)
class ProjectionReport:
    """Pairwise monotone coupling test of marginal j against marginal 1."""

    j: int
    passed: bool
    violating_pairs: tuple


def projection_monotone_check(support, j, tol=1e-12):
    """Check (x_1 - y_1)(x_j - y_j) >= -tol over all support pairs (scalar marginals)."""
    pts = support.points
    if any(len(c) != 1 for p in pts for c in p.coords):
        raise InputError("projection checks require scalar marginals")
    if not (2 <= j <= len(pts[0].coords)):
        raise InputError(f"marginal index j must be in 2..{len(pts[0].coords)}, got {j}")
    bad = []
    for a, b in itertools.combinations(range(len(pts)), 2):
        d1 = pts[a].coords[0][0] - pts[b].coords[0][0]
        dj = pts[a].coords[j - 1][0] - pts[b].coords[j - 1][0]
        if d1 * dj < -tol:
            bad.append((a, b))
    return ProjectionReport(j=j, passed=not bad, violating_pairs=tuple(bad))


__all__ = [
    "SupportSet", "support_from_raw", "Violation", "MonotonicityReport",
    "c_monotone_violations", "TwoMonotoneReport", "two_monotone_sign",
    "CompatibilityReport", "compatibility_check", "ProjectionReport",
    "projection_monotone_check", "UnsupportedOperation",
]
