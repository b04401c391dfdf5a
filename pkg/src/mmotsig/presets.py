"""Named example configurations with known outcomes.

Each preset is a complete config dict (see config.parse_config) plus an
``expected`` record that tests and the CLI assert against: signatures,
eigenvalues, verdicts, and where a closed form exists, the optimal value of
the discrete problem.
"""

from __future__ import annotations

import dataclasses
import math


@dataclasses.dataclass(frozen=True)
class Preset:
    name: str
    description: str
    config: dict
    expected: dict


def _trio_points(*vals):
    return [[[v] for v in vals]]


def _concave_sum_trio():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 3, "Q": [[-1.0]]},
        "points": _trio_points(0.0, 0.0, 0.0),
        "solve": {"grids": [{"linspace": [0.0, 1.0, 5]}] * 3, "radius": 0.5},
        "checks": {"two_monotone": True, "compatibility": True, "projection": True,
                   "box": [[0.0, 1.0]] * 3},
    }
    third = 2.0 / 3.0
    return Preset(
        name="concave-sum-trio",
        description="three scalar marginals, concave function of the coordinate sum; "
                    "one flat direction short of Riemannian, comonotone optimizer",
        config=cfg,
        expected={
            "signature": (2, 1, 0),
            "eigenvalues": sorted([-2 * third, third, third]),
            "dimension_bound": 2,
            "objective": -1.6875,
            "pair_signs": {-1},
            "compatible": True,
            "necessary_condition": True,
        },
    )


def _convex_sum_trio():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 3, "Q": [[1.0]]},
        "points": _trio_points(0.0, 0.0, 0.0),
        "solve": {"grids": [{"linspace": [0.0, 1.0, 5]}] * 3},
        "checks": {"two_monotone": True, "compatibility": True,
                   "box": [[0.0, 1.0]] * 3},
    }
    third = 2.0 / 3.0
    return Preset(
        name="convex-sum-trio",
        description="three scalar marginals, convex function of the coordinate sum; "
                    "spreads mass to balance the sums",
        config=cfg,
        expected={
            "signature": (1, 2, 0),
            "eigenvalues": sorted([2 * third, -third, -third]),
            "dimension_bound": 1,
            "pair_signs": {1},
            "compatible": False,
            "necessary_condition": False,
        },
    )


def _saddle_sum_trio():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 3,
                 "Q": [[1.0, 0.0], [0.0, -1.0]]},
        "points": [[[0.0, 0.0]] * 3],
    }
    third = 2.0 / 3.0
    eigs = [2 * third, -third, -third, -2 * third, third, third]
    return Preset(
        name="saddle-sum-trio",
        description="three planar marginals with an indefinite quadratic of the sum; "
                    "each coordinate axis contributes with opposite orientation",
        config=cfg,
        expected={
            "signature": (3, 3, 0),
            "eigenvalues": sorted(eigs),
            "dimension_bound": 3,
        },
    )


def _hedonic_identity_trio():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "hedonic", "P": [[[1.0]], [[1.0]], [[1.0]]]},
        "points": _trio_points(0.2, 0.5, 0.8),
        "solve": {"grids": [{"linspace": [0.0, 1.0, 4]}] * 3, "radius": 0.5},
        "checks": {"projection": True},
    }
    return Preset(
        name="hedonic-identity-trio",
        description="three agents matched through a shared location, unit preference "
                    "matrices; diagonal support costs exactly zero",
        config=cfg,
        expected={
            "signature": (2, 1, 0),
            "eigenvalues": sorted([-4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0]),
            "dimension_bound": 2,
            "objective": 0.0,
            "necessary_condition": True,
        },
    )


def _negdet_orthobasis():
    r = 1.0
    basis = [[0.0] * 3 for _ in range(3)]
    for i in range(3):
        basis[i][i] = r
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "neg_determinant", "n": 3},
        "points": [basis],
    }
    third = 2.0 / 3.0
    eigs = [third * r] * 5 + [-third * r] * 3 + [-2 * third * r]
    return Preset(
        name="negdet-orthobasis",
        description="three spatial marginals priced by negative volume, evaluated on "
                    "a scaled orthonormal frame",
        config=cfg,
        expected={
            "signature": (5, 4, 0),
            "eigenvalues": sorted(eigs),
            "dimension_bound": 5,
        },
    )


def _lopsided_quartet():
    pairs = [{"i": 1, "j": 2, "value": -1.0}, {"i": 1, "j": 3, "value": -1.0},
             {"i": 1, "j": 4, "value": -1.0}, {"i": 2, "j": 3, "value": -1.0},
             {"i": 2, "j": 4, "value": -1.0}, {"i": 3, "j": 4, "value": -5.0}]
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "bilinear", "dims": [1, 1, 1, 1],
                 "pairs": pairs},
        "points": [[[0.0]] * 4],
        "checks": {"two_monotone": True, "compatibility": True,
                   "box": [[0.0, 1.0]] * 4},
    }
    s = 4.0 / 7.0
    r2 = 2.0 * math.sqrt(2.0)
    eigs = [-s * (3.0 + r2), -s * (3.0 - r2), s, 5.0 * s]
    return Preset(
        name="lopsided-quartet",
        description="four scalar marginals, all pairwise products attract but one "
                    "pair five times harder; passes every pairwise test yet fails "
                    "the index count",
        config=cfg,
        expected={
            "signature": (2, 2, 0),
            "eigenvalues": sorted(eigs),
            "dimension_bound": 2,
            "pair_signs": {-1},
            "compatible": True,
            "necessary_condition": True,
        },
    )


def _rank_deficient_pair():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "bilinear", "dims": [3, 2],
                 "pairs": [{"i": 1, "j": 2,
                            "value": [[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]}]},
        "points": [[[0.0, 0.0, 0.0], [0.0, 0.0]]],
    }
    return Preset(
        name="rank-deficient-pair",
        description="two marginals of unequal dimension coupled through a rank-two "
                    "interaction; the null space shows up in the signature",
        config=cfg,
        expected={
            "signature": (2, 2, 1),
            "dimension_bound": 3,
            "cross_rank": 2,
        },
    )


def _comonotone_pair():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "bilinear", "dims": [1, 1],
                 "pairs": [{"i": 1, "j": 2, "value": -1.0}]},
        "points": [[[0.5], [0.5]]],
        "solve": {"grids": [{"values": [0.0, 0.5, 1.0]}] * 2, "radius": 1.0},
        "checks": {"two_monotone": True, "projection": True,
                   "box": [[0.0, 1.0]] * 2},
    }
    return Preset(
        name="comonotone-pair",
        description="two scalar marginals with an attractive product cost on a "
                    "three point grid; the sorted coupling is optimal",
        config=cfg,
        expected={
            "signature": (1, 1, 0),
            "dimension_bound": 1,
            "objective": -5.0 / 12.0,
            "pair_signs": {-1},
            "support_keys": [(0, 0), (1, 1), (2, 2)],
        },
    )


def _negative_interactions_trio():
    pairs = [{"i": 1, "j": 2, "value": -1.0}, {"i": 1, "j": 3, "value": -1.0},
             {"i": 2, "j": 3, "value": -1.0}]
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "bilinear", "dims": [1, 1, 1],
                 "pairs": pairs},
        "points": _trio_points(0.0, 0.0, 0.0),
        "solve": {"grids": [{"linspace": [0.0, 1.0, 4]}] * 3, "radius": 0.5},
        "checks": {"two_monotone": True, "compatibility": True, "projection": True,
                   "box": [[0.0, 1.0]] * 3},
    }
    return Preset(
        name="negative-interactions-trio",
        description="three scalar marginals, every pair attracts equally; optimal "
                    "support is monotone in each pair of coordinates",
        config=cfg,
        expected={
            "signature": (2, 1, 0),
            "eigenvalues": sorted([-4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]),
            "dimension_bound": 2,
            "objective": -7.0 / 6.0,
            "pair_signs": {-1},
            "compatible": True,
            "necessary_condition": True,
        },
    )


def _sum_surface_quartet():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 4,
                 "Q": [[2.0]], "b": [-4.0]},
        "points": [[[0.5]] * 4],
        "solve": {"grids": [{"linspace": [0.0, 1.0, 8]}] * 4, "radius": 0.3},
        "checks": {"projection": False},
    }
    # uniform coefficient for m=4 is 4/7; every cross block is the scalar 2
    s = 4.0 / 7.0 * 2.0
    eigs = sorted([3 * s, -s, -s, -s])
    return Preset(
        name="sum-surface-quartet",
        description="four scalar marginals, strictly convex function of the sum "
                    "minimized on the level set where the sum equals two",
        config=cfg,
        expected={
            "signature": (1, 3, 0),
            "eigenvalues": eigs,
            "dimension_bound": 1,
            "objective": -4.0,
            "support_sum": 2.0,
        },
    )


def _nonunique_quartet():
    cfg = {
        "version": 1,
        "cost": {"kind": "builtin", "name": "sum_function", "m": 4,
                 "Q": [[2.0]], "b": [-4.0]},
        "solve": {"grids": [{"linspace": [0.0, 1.0, 8]}] * 4, "radius": 0.3,
                  "probe_reflection_pair": True},
        "checks": {"rank_bounds": False, "necessary_condition": False,
                   "shortcut": False, "recursion": False},
    }
    return Preset(
        name="nonunique-quartet",
        description="same convex quartet, probed with two mirror couplings that both "
                    "sit on the optimal level set but differ on most of their mass",
        config=cfg,
        expected={
            "objective": -4.0,
            "nonunique": True,
            "tv_distance": 0.875,
        },
    )


_BUILDERS = (
    _concave_sum_trio,
    _convex_sum_trio,
    _saddle_sum_trio,
    _hedonic_identity_trio,
    _negdet_orthobasis,
    _lopsided_quartet,
    _rank_deficient_pair,
    _comonotone_pair,
    _negative_interactions_trio,
    _sum_surface_quartet,
    _nonunique_quartet,
)

_REGISTRY = {p.name: p for p in (b() for b in _BUILDERS)}


def names():
    return sorted(_REGISTRY)


def get(name):
    if name not in _REGISTRY:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(names())}")
    return _REGISTRY[name]
