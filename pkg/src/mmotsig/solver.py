"""Discrete multi-marginal transport: LP construction, solving, diagnostics.

A problem couples m finite marginal grids through a cost; the solver returns
a vertex plan together with dual potentials certifying optimality. Support
diagnostics relate the solved plan to the partition metric: affine hull
dimension, worst normalized metric value over nearby pairs, and the residual
of the frame inequality |u_plus|^2 <= 3 |u_minus|^2 + |u_null|^2 satisfied by
displacement vectors between points of a non-spacelike set.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools

import numpy as np

from .costs import Point, evaluate
from .errors import InputError, NumericalError, SizeGuardExceeded
from .metric import numerical_rank
from .monotonicity import SupportSet
from .simplex import TransportSimplex

SIZE_GUARD = 200_000
MASS_TOL = 1e-10


@dataclasses.dataclass(frozen=True, eq=False)
class MarginalGrid:
    """Finite marginal: point coordinates (K, n) with probability weights (K,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2:
            raise InputError(f"grid points must form a (K, n) array, got shape {pts.shape}")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(w) != len(pts):
            raise InputError(f"{len(w)} weights for {len(pts)} grid points")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise InputError("grid contains non-finite entries")
        if w.min() < 0:
            raise InputError(f"negative marginal weight {w.min()!r}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InputError(f"marginal weights sum to {w.sum()!r}, expected 1 within 1e-12")
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if np.abs(pts[a] - pts[b]).max() <= 1e-12:
                    raise InputError(f"grid points {a} and {b} coincide")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def uniform(values):
        """Equal-weight scalar grid from a list of values."""
        vals = np.asarray(values, dtype=float).reshape(-1, 1)
        return MarginalGrid(points=vals, weights=np.full(len(vals), 1.0 / len(vals)))

    @property
    def size(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]


@dataclasses.dataclass(frozen=True, eq=False)
class MmotLp:
    """Discretized problem: cost values over the product of the grids."""

    cost: object
    grids: tuple
    values: np.ndarray

    @property
    def sizes(self):
        return tuple(g.size for g in self.grids)

    @property
    def n_variables(self):
        return int(np.prod(self.sizes))

    @property
    def n_constraints(self):
        """Marginal constraints as stated; one per group is redundant."""
        return int(sum(self.sizes))

    @property
    def n_independent_rows(self):
        return self.n_constraints - (len(self.grids) - 1)

    @property
    def scale(self):
        return 1.0 + float(np.abs(self.values).max())

    def tuple_point(self, key):
        return Point(tuple(self.grids[i].points[k] for i, k in enumerate(key)))


def build_lp(cost, grids, size_guard=SIZE_GUARD):
    """Evaluate the cost over the product grid and package the LP data."""
    grids = tuple(grids)
    if len(grids) != cost.m:
        raise InputError(f"{len(grids)} grids for a cost with m={cost.m}")
    for i, g in enumerate(grids):
        if g.dim != cost.dims[i]:
            raise InputError(
                f"grid {i + 1} has dimension {g.dim}, cost expects {cost.dims[i]}")
    sizes = tuple(g.size for g in grids)
    total = int(np.prod(sizes))
    if total > size_guard:
        raise SizeGuardExceeded(
            f"product grid has {total} cells, above the guard of {size_guard}", total)
    values = np.empty(sizes)
    for key in np.ndindex(*sizes):
        values[key] = evaluate(cost, [grids[i].points[k] for i, k in enumerate(key)])
    return MmotLp(cost=cost, grids=grids, values=values)


@dataclasses.dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling: grid-index tuples -> mass, plus its cost objective."""

    entries: dict
    objective: float
    pivots: int | None = None

    @property
    def support_size(self):
        return len(self.entries)

    def mass(self):
        return float(sum(self.entries.values()))


@dataclasses.dataclass(frozen=True, eq=False)
class DualCertificate:
    """One potential vector per marginal; their outer sum under-estimates the cost."""

    potentials: tuple
    dual_objective: float
    gap: float


def plan_from_entries(lp, entries):
    """Attach an objective to raw {tuple: mass} entries."""
    obj = float(sum(m * lp.values[key] for key, m in entries.items()))
    return TransportPlan(entries=dict(entries), objective=obj)


def solve_lp(lp, max_pivots=None):
    """Minimize the coupling cost; return a vertex plan and dual certificate."""
    weights = [g.weights for g in lp.grids]
    sx = TransportSimplex(lp.sizes, lp.values.reshape(-1), weights, max_pivots=max_pivots)
    basis, xB, y = sx.solve()
    entries = {}
    for r, v in enumerate(basis):
        if v < sx.V and xB[r] > 0.0:
            key = tuple(int(k) for k in np.unravel_index(v, lp.sizes))
            entries[key] = float(xB[r])
    objective = float(sum(m * lp.values[key] for key, m in entries.items()))
    potentials = []
    for i, g in enumerate(lp.grids):
        ids = sx.row_of[i]
        u = np.where(ids >= 0, y[np.clip(ids, 0, None)], 0.0)
        potentials.append(u)
    dual = float(sum(u @ g.weights for u, g in zip(potentials, lp.grids)))
    plan = TransportPlan(entries=entries, objective=objective, pivots=sx.pivots)
    cert = DualCertificate(potentials=tuple(potentials), dual_objective=dual,
                           gap=float(objective - dual))
    return plan, cert


def marginals_of(plan, sizes):
    """Per-marginal mass vectors induced by a plan."""
    out = [np.zeros(K) for K in sizes]
    for key, m in plan.entries.items():
        for i, k in enumerate(key):
            out[i][k] += m
    return out


@dataclasses.dataclass(frozen=True)
class OptimalityReport:
    """Feasibility and certificate checks for a (plan, certificate) pair."""

    passed: bool
    marginal_error: float
    min_slack: float
    complementary_slackness: float
    gap: float
    scale: float


def verify_optimality(lp, plan, cert, feas_tol=1e-9, opt_tol=1e-8, mass_tol=MASS_TOL):
    """Check marginals, dual feasibility, complementary slackness and the gap.

    Dual feasibility requires sum_i u_i <= cost on every product cell; slack
    must vanish on cells carrying mass. Tolerances on the dual side scale
    with 1 + max |cost|.
    """
    sizes = lp.sizes
    scale = lp.scale
    emax = 0.0
    for i, got in enumerate(marginals_of(plan, sizes)):
        emax = max(emax, float(np.abs(got - lp.grids[i].weights).max()))
    pot_sum = np.zeros(sizes)
    for i, u in enumerate(cert.potentials):
        shape = [1] * len(sizes)
        shape[i] = sizes[i]
        pot_sum = pot_sum + u.reshape(shape)
    slack = lp.values - pot_sum
    min_slack = float(slack.min())
    comp = 0.0
    for key, m in plan.entries.items():
        if m > mass_tol:
            comp = max(comp, abs(float(slack[key])))
    dual = float(sum(u @ g.weights for u, g in zip(cert.potentials, lp.grids)))
    gap = float(plan.objective - dual)
    ok = (emax <= feas_tol and min_slack >= -opt_tol * scale
          and comp <= opt_tol * scale and abs(gap) <= opt_tol * scale)
    return OptimalityReport(passed=bool(ok), marginal_error=emax, min_slack=min_slack,
                            complementary_slackness=comp, gap=gap, scale=scale)


def extract_support(lp, plan, mass_tol=MASS_TOL):
    """Support points of a plan above the mass threshold, as a SupportSet."""
    keys = sorted(k for k, m in plan.entries.items() if m > mass_tol)
    if not keys:
        raise InputError(f"plan carries no mass above {mass_tol}")
    pts = tuple(lp.tuple_point(k) for k in keys)
    masses = tuple(float(plan.entries[k]) for k in keys)
    return SupportSet(points=pts, masses=masses)


# -- geometric diagnostics --------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SpacelikeReport:
    """Largest normalized metric value over support displacements.

    score = max of (d' G d) / |d|^2 over pairs within the radius; a
    non-spacelike support keeps the score at or below zero up to
    discretization effects. None when no pair falls inside the radius.
    """

    score: float | None
    pair: tuple | None
    pairs_checked: int


def spacelike_score(support, metric, radius=np.inf):
    G = metric.dense()
    pts = support.stacked()
    best, arg, count = None, None, 0
    for a, b in itertools.combinations(range(len(pts)), 2):
        d = pts[a] - pts[b]
        nrm2 = float(d @ d)
        if nrm2 == 0.0 or np.sqrt(nrm2) > radius:
            continue
        count += 1
        val = float(d @ G @ d) / nrm2
        if best is None or val > best:
            best, arg = val, (a, b)
    return SpacelikeReport(score=best, pair=arg, pairs_checked=count)


@dataclasses.dataclass(frozen=True)
class GraphInequalityReport:
    """Worst residual of |u_plus|^2 - 3 |u_minus|^2 - |u_null|^2 over pairs."""

    max_residual: float | None
    pair: tuple | None
    pairs_checked: int


def graph_inequality_check(support, frame, radius=np.inf, center=None):
    """Evaluate the frame inequality on support displacements near a basepoint.

    Displacements of a non-spacelike set satisfy
    |u_plus|^2 <= 3 |u_minus|^2 + |u_null|^2 in frame coordinates, so the
    reported maximum should not exceed zero beyond discretization error.
    """
    pts = support.stacked()
    idx = range(len(pts))
    if center is not None:
        c = np.asarray(center, dtype=float)
        idx = [k for k in idx if np.linalg.norm(pts[k] - c) <= radius]
    worst, arg, count = None, None, 0
    for a, b in itertools.combinations(idx, 2):
        d = pts[a] - pts[b]
        if center is None and np.linalg.norm(d) > radius:
            continue
        count += 1
        up, um, uz = frame.split(d)
        res = float(up @ up - 3.0 * (um @ um) - uz @ uz)
        if worst is None or res > worst:
            worst, arg = res, (a, b)
    return GraphInequalityReport(max_residual=worst, pair=arg, pairs_checked=count)


@dataclasses.dataclass(frozen=True)
class SupportDiagnostics:
    """Size and geometry summary of a solved support."""

    support_size: int
    affine_dimension: int
    spacelike: SpacelikeReport | None = None
    graph: GraphInequalityReport | None = None


def support_diagnostics(support, metric=None, frame=None, radius=np.inf):
    pts = support.stacked()
    affine = numerical_rank(pts - pts.mean(axis=0)) if len(pts) > 1 else 0
    spc = spacelike_score(support, metric, radius) if metric is not None else None
    gic = graph_inequality_check(support, frame, radius) if frame is not None else None
    return SupportDiagnostics(support_size=len(pts), affine_dimension=affine,
                              spacelike=spc, graph=gic)


# -- plan comparison ---------------------------------------------------------


def total_variation(plan_a, plan_b):
    """TV distance between two plans on the same grid: half the L1 mass gap."""
    keys = set(plan_a.entries) | set(plan_b.entries)
    return 0.5 * float(sum(abs(plan_a.entries.get(k, 0.0) - plan_b.entries.get(k, 0.0))
                           for k in keys))


@dataclasses.dataclass(frozen=True)
class NonUniquenessReport:
    """Comparison of candidate plans against the LP optimum.

    nonunique is True when every candidate is feasible and optimal within
    tolerance yet at least one pair of candidates differs in TV distance.
    """

    optimum: float
    objectives: tuple
    feasible: tuple
    objective_match: bool
    tv_distance: float
    nonunique: bool


def nonuniqueness_probe(lp, plans, obj_tol=None, tv_tol=1e-8, feas_tol=1e-9):
    if len(plans) < 2:
        raise InputError("need at least two candidate plans to probe uniqueness")
    best, _ = solve_lp(lp)
    tol = (1e-9 * lp.scale) if obj_tol is None else float(obj_tol)
    objectives, feasible = [], []
    for plan in plans:
        err = max(float(np.abs(got - g.weights).max())
                  for got, g in zip(marginals_of(plan, lp.sizes), lp.grids))
        feasible.append(err <= feas_tol)
        objectives.append(plan.objective)
    match = all(feasible) and all(abs(o - best.objective) <= tol for o in objectives)
    tv = max(total_variation(a, b) for a, b in itertools.combinations(plans, 2))
    return NonUniquenessReport(optimum=best.objective, objectives=tuple(objectives),
                               feasible=tuple(feasible), objective_match=match,
                               tv_distance=tv, nonunique=bool(match and tv > tv_tol))


def reflection_pair_plans(lp):
    """Two mirror-image couplings for four identical symmetric scalar grids.

    The grids must be equal, one dimensional, and invariant under reflection
    about their midpoint (weights included). Writing s for the reflection
    index map, the plans place mass w_a * w_b on (a, s(b), s(a), b) and on
    (a, s(a), s(b), b); both have all four prescribed marginals.
    """
    if len(lp.grids) != 4:
        raise InputError("reflection construction needs exactly four marginals")
    g0 = lp.grids[0]
    if g0.dim != 1:
        raise InputError("reflection construction needs scalar marginals")
    for g in lp.grids[1:]:
        if g.size != g0.size or np.abs(g.points - g0.points).max() > 1e-12 \
                or np.abs(g.weights - g0.weights).max() > 1e-12:
            raise InputError("reflection construction needs four identical grids")
    x = g0.points[:, 0]
    lo, hi = x.min(), x.max()
    span = max(hi - lo, 1e-300)
    sigma = np.full(len(x), -1, dtype=int)
    for k, v in enumerate(x):
        target = lo + hi - v
        hits = np.flatnonzero(np.abs(x - target) <= 1e-9 * span)
        if hits.size != 1:
            raise InputError("grid is not symmetric under reflection about its midpoint")
        sigma[k] = hits[0]
    if np.abs(g0.weights[sigma] - g0.weights).max() > 1e-12:
        raise InputError("grid weights are not reflection symmetric")
    w = g0.weights
    first, second = {}, {}
    for a in range(len(x)):
        for b in range(len(x)):
            first[(a, int(sigma[b]), int(sigma[a]), b)] = float(w[a] * w[b])
            second[(a, int(sigma[a]), int(sigma[b]), b)] = float(w[a] * w[b])
    return plan_from_entries(lp, first), plan_from_entries(lp, second)


# -- delimited exports --------------------------------------------------------


def export_plan_csv(plan, grids, path, mass_tol=0.0):
    """Write one row per support atom: grid indices, coordinates, mass."""
    m = len(grids)
    header = [f"k{i + 1}" for i in range(m)]
    for i, g in enumerate(grids):
        header += [f"x{i + 1}_{d + 1}" for d in range(g.dim)]
    header.append("mass")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for key in sorted(plan.entries):
            mass = plan.entries[key]
            if mass <= mass_tol:
                continue
            row = [str(k) for k in key]
            for i, k in enumerate(key):
                row += [f"{v:.17g}" for v in grids[i].points[k]]
            row.append(f"{mass:.17g}")
            writer.writerow(row)


def load_plan_entries(path, m):
    """Read {index tuple: mass} back from a plan CSV."""
    entries = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = tuple(int(rec[f"k{i + 1}"]) for i in range(m))
            entries[key] = float(rec["mass"])
    return entries


def export_certificate_csv(cert, grids, path):
    """Write one row per marginal point: marginal, index, coordinates, potential."""
    nmax = max(g.dim for g in grids)
    header = ["marginal", "point_index"] + [f"x_{d + 1}" for d in range(nmax)] + ["potential"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, (u, g) in enumerate(zip(cert.potentials, grids)):
            for k in range(g.size):
                coords = [f"{v:.17g}" for v in g.points[k]]
                coords += [""] * (nmax - g.dim)
                writer.writerow([str(i + 1), str(k)] + coords + [f"{u[k]:.17g}"])
