"""Run configuration: JSON schema, validation, and canonical hashing.

A configuration bundles one cost, one partition weight family, evaluation
points for the metric analysis, an optional discrete solve, and check
switches. Validation walks the whole document and reports every violation it
finds with a dotted path, instead of stopping at the first problem.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import os

import numpy as np

from . import costs as costs_mod
from .errors import ConfigError, InputError
from .metric import Bipartition, PartitionWeights
from .solver import MarginalGrid

CONFIG_VERSION = 1
SWEEP_GUARD = 512

_TOP_KEYS = {"version", "cost", "weights", "points", "sweep", "solve", "checks",
             "zero_tol", "seed", "output"}
_CHECK_DEFAULTS = {
    "c_monotonicity": True,
    "two_monotone": False,
    "compatibility": False,
    "projection": False,
    "rank_bounds": True,
    "necessary_condition": True,
    "shortcut": True,
    "recursion": True,
}


@dataclasses.dataclass(frozen=True)
class SolveSettings:
    grids: tuple
    radius: float
    probe_reflection_pair: bool
    plan_files: tuple


@dataclasses.dataclass(frozen=True)
class CheckSettings:
    c_monotonicity: bool
    two_monotone: bool
    compatibility: bool
    projection: bool
    rank_bounds: bool
    necessary_condition: bool
    shortcut: bool
    recursion: bool
    box: tuple | None
    samples: int


@dataclasses.dataclass(frozen=True)
class OutputSettings:
    path: str | None
    format: str
    figures: str | None


@dataclasses.dataclass(frozen=True, eq=False)
class RunConfig:
    raw: dict
    cost: object
    weights: PartitionWeights
    points: tuple
    solve: SolveSettings | None
    checks: CheckSettings
    zero_tol: float | None
    seed: int
    output: OutputSettings

    @property
    def config_hash(self):
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, path, message):
        self.errors.append((path, str(message)))

    def raise_if_any(self):
        if self.errors:
            raise ConfigError(self.errors)


def _number(err, data, path, default=None, positive=False, integer=False):
    if data is None:
        return default
    if isinstance(data, bool) or not isinstance(data, (int, float)):
        err.add(path, f"expected a number, got {type(data).__name__}")
        return default
    if integer and int(data) != data:
        err.add(path, f"expected an integer, got {data}")
        return default
    if positive and data <= 0:
        err.add(path, f"expected a positive value, got {data}")
        return default
    return int(data) if integer else float(data)


def _matrix(err, data, path):
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        err.add(path, "expected a numeric array")
        return None
    if not np.all(np.isfinite(a)):
        err.add(path, "array contains non-finite entries")
        return None
    return a


def _parse_cost(err, data):
    if not isinstance(data, dict):
        err.add("cost", "expected an object")
        return None
    kind = data.get("kind", "builtin")
    if kind == "builtin":
        name = data.get("name")
        if name not in costs_mod.BUILTIN_NAMES:
            err.add("cost.name", f"unknown builtin {name!r}; known: {list(costs_mod.BUILTIN_NAMES)}")
            return None
        try:
            if name == "sum_function":
                m = _number(err, data.get("m"), "cost.m", integer=True, positive=True)
                Q = _matrix(err, data.get("Q"), "cost.Q")
                b = data.get("b")
                if m is None or Q is None:
                    return None
                return costs_mod.sum_function(m, Q, b)
            if name == "bilinear":
                dims = data.get("dims")
                if not isinstance(dims, list) or not dims:
                    err.add("cost.dims", "bilinear needs a list of marginal dimensions")
                    return None
                coeffs = {}
                for k, rec in enumerate(data.get("pairs", [])):
                    if not isinstance(rec, dict) or "i" not in rec or "j" not in rec:
                        err.add(f"cost.pairs[{k}]", "expected an object with keys i, j, value")
                        continue
                    coeffs[(int(rec["i"]), int(rec["j"]))] = rec.get("value", 0.0)
                return costs_mod.bilinear(dims, coeffs)
            if name == "neg_determinant":
                n = _number(err, data.get("n"), "cost.n", integer=True, positive=True)
                if n is None:
                    return None
                if data.get("m") not in (None, n):
                    err.add("cost.m", f"neg_determinant requires m = n, got m={data['m']} n={n}")
                    return None
                return costs_mod.neg_determinant(n)
            if name == "hedonic":
                P = data.get("P")
                if not isinstance(P, list) or len(P) < 2:
                    err.add("cost.P", "hedonic needs a list of at least two matrices")
                    return None
                return costs_mod.hedonic(P)
        except InputError as exc:
            err.add(f"cost.{name}", exc)
            return None
    elif kind == "tabulated":
        axes = data.get("axes")
        if not isinstance(axes, list) or not axes:
            err.add("cost.axes", "tabulated needs a list of 1-D axes")
            return None
        values = data.get("values")
        vfile = data.get("values_file")
        if (values is None) == (vfile is None):
            err.add("cost.values", "provide exactly one of values / values_file")
            return None
        if vfile is not None:
            if not os.path.exists(vfile):
                err.add("cost.values_file", f"file does not exist: {vfile}")
                return None
            values = np.load(vfile)
        try:
            return costs_mod.tabulated(axes, values)
        except InputError as exc:
            err.add("cost.tabulated", exc)
            return None
    else:
        err.add("cost.kind", f"unknown kind {kind!r} (configs support builtin and tabulated)")
    return None


def _parse_weights(err, data, m):
    if data is None:
        return PartitionWeights.uniform(m) if m else None
    if not isinstance(data, dict):
        err.add("weights", "expected an object")
        return None
    mode = data.get("mode")
    if mode not in ("uniform", "single_partition", "explicit"):
        err.add("weights.mode",
                f"unknown mode {mode!r}; use uniform, single_partition or explicit")
        return None
    if m is None:
        return None
    try:
        if mode == "uniform":
            return PartitionWeights.uniform(m)
        if mode == "single_partition":
            return PartitionWeights.single(Bipartition.of(data.get("plus", []), m))
        if mode == "explicit":
            terms = data.get("terms")
            if not isinstance(terms, list) or not terms:
                err.add("weights.terms", "explicit mode needs a nonempty list of terms")
                return None
            table = {}
            for k, rec in enumerate(terms):
                p = Bipartition.of(rec.get("plus", []), m)
                table[p] = table.get(p, 0.0) + float(rec.get("weight", 0.0))
            return PartitionWeights.explicit(m, table)
    except InputError as exc:
        err.add("weights", exc)
    return None


def _parse_points(err, data, sweep, cost):
    pts = []
    if data is not None and sweep is not None:
        err.add("points", "provide either points or sweep, not both")
        return ()
    if sweep is not None:
        N = cost.total_dim if cost else 0
        low = _matrix(err, sweep.get("low"), "sweep.low")
        high = _matrix(err, sweep.get("high"), "sweep.high")
        counts = sweep.get("counts")
        if low is None or high is None or not isinstance(counts, list):
            err.add("sweep", "needs low, high and counts of equal length")
            return ()
        if not (len(low) == len(high) == len(counts) == N):
            err.add("sweep", f"low/high/counts must each have length {N} (total dimension)")
            return ()
        total = int(np.prod([int(c) for c in counts]))
        if total > SWEEP_GUARD:
            err.add("sweep.counts", f"sweep would produce {total} points, above the guard {SWEEP_GUARD}")
            return ()
        axes = [np.linspace(lo, hi, int(c)) for lo, hi, c in zip(low, high, counts)]
        offs = np.concatenate([[0], np.cumsum(cost.dims)]).astype(int)
        for combo in itertools.product(*axes):
            stacked = np.array(combo)
            pts.append([stacked[offs[i]:offs[i + 1]].tolist() for i in range(cost.m)])
        return tuple(pts)
    if data is None:
        return ()
    if not isinstance(data, list):
        err.add("points", "expected a list of points")
        return ()
    for k, raw in enumerate(data):
        if cost is None:
            continue
        try:
            coords = costs_mod.as_coords(cost, raw)
            pts.append([c.tolist() for c in coords])
        except (InputError, TypeError, ValueError) as exc:
            err.add(f"points[{k}]", exc)
    return tuple(pts)


def _parse_grid(err, data, path, expected_dim):
    if not isinstance(data, dict):
        err.add(path, "expected an object describing one marginal grid")
        return None
    try:
        if "linspace" in data:
            lo, hi, K = data["linspace"]
            return MarginalGrid.uniform(np.linspace(float(lo), float(hi), int(K)))
        if "values" in data:
            return MarginalGrid.uniform(data["values"])
        if "points" in data:
            pts = _matrix(err, data["points"], f"{path}.points")
            w = _matrix(err, data.get("weights"), f"{path}.weights")
            if pts is None or w is None:
                return None
            return MarginalGrid(points=pts.reshape(len(w), -1), weights=w)
        err.add(path, "grid needs one of linspace / values / points")
    except (InputError, TypeError, ValueError) as exc:
        err.add(path, exc)
    return None


def _parse_solve(err, data, cost):
    if data is None:
        return None
    if not isinstance(data, dict):
        err.add("solve", "expected an object")
        return None
    raw_grids = data.get("grids")
    if not isinstance(raw_grids, list) or (cost and len(raw_grids) != cost.m):
        err.add("solve.grids", f"need one grid per marginal ({cost.m if cost else '?'})")
        return None
    grids = []
    for i, g in enumerate(raw_grids):
        grid = _parse_grid(err, g, f"solve.grids[{i}]", cost.dims[i] if cost else None)
        if grid is not None and cost and grid.dim != cost.dims[i]:
            err.add(f"solve.grids[{i}]", f"grid dimension {grid.dim} != marginal dimension {cost.dims[i]}")
            grid = None
        grids.append(grid)
    if any(g is None for g in grids):
        return None
    radius = _number(err, data.get("radius"), "solve.radius", default=np.inf, positive=True)
    plan_files = data.get("plan_files", [])
    if not isinstance(plan_files, list):
        err.add("solve.plan_files", "expected a list of paths")
        plan_files = []
    for k, p in enumerate(plan_files):
        if not os.path.exists(p):
            err.add(f"solve.plan_files[{k}]", f"file does not exist: {p}")
    return SolveSettings(grids=tuple(grids), radius=radius,
                         probe_reflection_pair=bool(data.get("probe_reflection_pair", False)),
                         plan_files=tuple(plan_files))


def _parse_checks(err, data, cost):
    data = data or {}
    if not isinstance(data, dict):
        err.add("checks", "expected an object")
        data = {}
    known = set(_CHECK_DEFAULTS) | {"box", "samples"}
    for key in data:
        if key not in known:
            err.add(f"checks.{key}", "unknown check switch")
    flags = {}
    for key, dflt in _CHECK_DEFAULTS.items():
        val = data.get(key, dflt)
        if not isinstance(val, bool):
            err.add(f"checks.{key}", f"expected a boolean, got {val!r}")
            val = dflt
        flags[key] = val
    box = data.get("box")
    if box is not None:
        ok = isinstance(box, list) and cost and len(box) == cost.m and all(
            isinstance(iv, list) and len(iv) == 2 and iv[0] < iv[1] for iv in box)
        if not ok:
            err.add("checks.box", "expected one [lo, hi] interval per marginal with lo < hi")
            box = None
        else:
            box = tuple((float(lo), float(hi)) for lo, hi in box)
    samples = _number(err, data.get("samples"), "checks.samples", default=200,
                      positive=True, integer=True)
    if samples is not None and samples < 100:
        err.add("checks.samples", f"need at least 100 samples, got {samples}")
        samples = 200
    return CheckSettings(box=box, samples=samples or 200, **flags)


def parse_config(data):
    """Validate a config dict (or JSON text); raise ConfigError listing all problems."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError([("$", f"not valid JSON: {exc}")]) from exc
    if not isinstance(data, dict):
        raise ConfigError([("$", "top level must be an object")])
    err = _Collector()
    for key in data:
        if key not in _TOP_KEYS:
            err.add(key, "unknown top-level key")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        err.add("version", f"unsupported config version {version!r}, expected {CONFIG_VERSION}")
    cost = _parse_cost(err, data.get("cost")) if "cost" in data else None
    if "cost" not in data:
        err.add("cost", "missing required section")
    weights = _parse_weights(err, data.get("weights"), cost.m if cost else None)
    points = _parse_points(err, data.get("points"), data.get("sweep"), cost)
    solve = _parse_solve(err, data.get("solve"), cost) if cost else None
    checks = _parse_checks(err, data.get("checks"), cost)
    zero_tol = _number(err, data.get("zero_tol"), "zero_tol", positive=True)
    seed = _number(err, data.get("seed"), "seed", default=0, integer=True)
    out = data.get("output") or {}
    if not isinstance(out, dict):
        err.add("output", "expected an object")
        out = {}
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        err.add("output.format", f"unknown format {fmt!r}; use json or csv")
        fmt = "json"
    output = OutputSettings(path=out.get("path"), format=fmt, figures=out.get("figures"))
    err.raise_if_any()
    return RunConfig(raw=data, cost=cost, weights=weights, points=points, solve=solve,
                     checks=checks, zero_tol=zero_tol, seed=seed, output=output)
