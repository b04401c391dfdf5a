"""Shared builders for randomized test instances."""

import zlib

import numpy as np
import pytest

from mmotsig import (MarginalGrid, assemble_metric, bilinear, hedonic,
                     neg_determinant, sum_function)
from mmotsig.metric import PartitionWeights


def rng_for(name, k=0):
    # Stable per-test streams so failures reproduce in isolation.
    return np.random.default_rng(zlib.crc32(f"{name}:{k}".encode()))


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_neg_definite(rng, n):
    a = rng.standard_normal((n, n))
    return -(a @ a.T + 0.3 * n * np.eye(n))


def random_spd(rng, n):
    return -random_neg_definite(rng, n)


def random_signature_matrix(rng, n, q):
    """Symmetric nonsingular matrix with exactly q positive eigenvalues."""
    d = np.concatenate([rng.uniform(0.5, 2.0, q), -rng.uniform(0.5, 2.0, n - q)])
    u = random_orthogonal(rng, n)
    return u @ np.diag(d) @ u.T


def random_bilinear_cost(rng, m, n):
    coeffs = {}
    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            coeffs[(i, j)] = rng.standard_normal((n, n))
    return bilinear([n] * m, coeffs)


def random_metric(rng, m, n, kind="bilinear"):
    """Assembled uniform-weight metric at a random point."""
    if kind == "bilinear":
        cost = random_bilinear_cost(rng, m, n)
    elif kind == "sum":
        cost = sum_function(m, random_signature_matrix(rng, n, rng.integers(0, n + 1)))
    elif kind == "hedonic":
        cost = hedonic([random_spd(rng, n) for _ in range(m)])
    elif kind == "negdet":
        assert m == n
        cost = neg_determinant(n)
    else:
        raise ValueError(kind)
    x = [rng.uniform(-1.0, 1.0, n) for _ in range(m)]
    return assemble_metric(cost, x, PartitionWeights.uniform(m))


def uniform_grids(m, K, lo=0.0, hi=1.0):
    return tuple(MarginalGrid.uniform(np.linspace(lo, hi, K)) for _ in range(m))


def random_grid(rng, K, lo=0.0, hi=1.0):
    pts = np.sort(rng.uniform(lo, hi, K))
    while len(np.unique(pts)) < K:
        pts = np.sort(rng.uniform(lo, hi, K))
    w = rng.uniform(0.2, 1.0, K)
    return MarginalGrid(points=pts.reshape(-1, 1), weights=w / w.sum())


@pytest.fixture
def tmp_json(tmp_path):
    def write(name, payload):
        import json
        p = tmp_path / name
        p.write_text(json.dumps(payload))
        return str(p)
    return write
