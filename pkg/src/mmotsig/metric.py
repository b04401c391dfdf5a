"""Partition-indexed metrics on product spaces and their signatures.

Every two-group partition p of the marginals {1, ..., m} induces a symmetric
bilinear form whose only nonzero blocks are the cross derivatives between
groups. A convex combination over partitions assembles into one symmetric
matrix G with zero diagonal blocks and off-diagonal blocks a_ij * D^2_{ij} c,
where a_ij sums the weights of the partitions separating i from j. Signature
computations (direct, three-marginal shortcut, Schur-complement recursion,
two-block rank form) and the associated diagnostics live here.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Mapping

import numpy as np

from .costs import cross_hessian_block
from .errors import InputError, NumericalError, ShortcutNotApplicable

_COND_LIMIT = 1e12


@dataclasses.dataclass(frozen=True, order=True)
class Bipartition:
    """Unordered split of {1, ..., m} into two nonempty groups.

    Canonical form keeps marginal 1 in `plus`; both groups are sorted tuples.
    """

    plus: tuple
    minus: tuple

    @staticmethod
    def of(group, m):
        """Build the canonical bipartition of {1..m} with the given group on one side."""
        g = frozenset(int(v) for v in group)
        full = frozenset(range(1, int(m) + 1))
        if not g or g == full or not g <= full:
            raise InputError(f"group {sorted(group)} is not a proper nonempty subset of 1..{m}")
        if 1 not in g:
            g = full - g
        return Bipartition(tuple(sorted(g)), tuple(sorted(full - g)))

    @property
    def m(self):
        return len(self.plus) + len(self.minus)

    def separates(self, i, j):
        return (i in self.plus) != (j in self.plus)

    def __str__(self):
        return f"{{{','.join(map(str, self.plus))}}}|{{{','.join(map(str, self.minus))}}}"


def enumerate_partitions(m):
    """All 2^(m-1) - 1 canonical bipartitions of {1..m}, lexicographic in `plus`."""
    m = int(m)
    if not (2 <= m <= 20):
        raise InputError(f"partition enumeration supports 2 <= m <= 20, got {m}")
    rest = list(range(2, m + 1))
    parts = []
    for r in range(0, m - 1):
        for extra in itertools.combinations(rest, r):
            parts.append(Bipartition.of({1, *extra}, m))
    return sorted(parts)


@dataclasses.dataclass(frozen=True, eq=False)
class PartitionWeights:
    """Convex weights over the bipartitions of {1..m}.

    `table` maps Bipartition -> weight; omitted partitions carry weight zero.
    The uniform family is stored symbolically (table=None) so that large m
    never materializes the full partition list; its pair coefficient has the
    closed form 2^(m-2) / (2^(m-1) - 1).
    """

    m: int
    table: Mapping | None = None

    def __post_init__(self):
        if self.m < 2:
            raise InputError(f"need m >= 2, got {self.m}")
        if self.table is None:
            return
        total = 0.0
        for p, t in self.table.items():
            if not isinstance(p, Bipartition) or p.m != self.m:
                raise InputError(f"partition {p} does not match m={self.m}")
            if t < 0:
                raise InputError(f"negative weight {t} on partition {p}")
            total += float(t)
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"partition weights sum to {total!r}, expected 1 within 1e-12")

    @staticmethod
    def uniform(m):
        return PartitionWeights(m=int(m), table=None)

    @staticmethod
    def single(partition):
        return PartitionWeights(m=partition.m, table={partition: 1.0})

    @staticmethod
    def explicit(m, table):
        return PartitionWeights(m=int(m), table=dict(table))

    @property
    def is_uniform(self):
        return self.table is None

    def items(self):
        """(partition, weight) pairs; materializes the uniform family on demand."""
        if self.table is None:
            parts = enumerate_partitions(self.m)
            w = 1.0 / len(parts)
            return [(p, w) for p in parts]
        return sorted(self.table.items())

    def coefficient(self, i, j):
        """Total weight of the partitions separating marginals i and j."""
        if i == j or not (1 <= i <= self.m and 1 <= j <= self.m):
            raise InputError(f"need distinct indices in 1..{self.m}, got ({i}, {j})")
        if self.table is None:
            return 2.0 ** (self.m - 2) / (2.0 ** (self.m - 1) - 1.0)
        return float(sum(t for p, t in self.table.items() if p.separates(i, j)))


@dataclasses.dataclass(frozen=True, eq=False)
class MetricMatrix:
    """Assembled partition metric at a point.

    `blocks` holds the raw cross derivative blocks D^2_{ij} c for i < j;
    `coefficients` the pair weights a_ij. The dense matrix carries blocks
    a_ij * D^2_{ij} c off the diagonal and zero diagonal blocks.
    """

    dims: tuple
    blocks: Mapping
    coefficients: Mapping
    provenance: Mapping

    @property
    def m(self):
        return len(self.dims)

    @property
    def total_dim(self):
        return int(sum(self.dims))

    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)

    def raw_block(self, i, j):
        """Cross derivative block for any ordered pair (transpose below the diagonal)."""
        if i < j:
            return self.blocks[(i, j)]
        return self.blocks[(j, i)].T

    def scaled_block(self, i, j):
        key = (i, j) if i < j else (j, i)
        return self.coefficients[key] * self.raw_block(i, j)

    def dense(self):
        off = self.offsets()
        G = np.zeros((self.total_dim, self.total_dim))
        for (i, j), B in self.blocks.items():
            S = self.coefficients[(i, j)] * B
            G[off[i - 1]:off[i], off[j - 1]:off[j]] = S
            G[off[j - 1]:off[j], off[i - 1]:off[i]] = S.T
        return G


def assemble_metric(cost, x, weights, method="auto", step_scale=None):
    """Assemble the partition metric of a cost at a point under given weights."""
    if weights.m != cost.m:
        raise InputError(f"weights are for m={weights.m}, cost has m={cost.m}")
    blocks, coeffs, prov = {}, {}, {}
    for i in range(1, cost.m + 1):
        for j in range(i + 1, cost.m + 1):
            blk = cross_hessian_block(cost, x, i, j, method=method, step_scale=step_scale)
            blocks[(i, j)] = blk.matrix
            coeffs[(i, j)] = weights.coefficient(i, j)
            prov[(i, j)] = blk.provenance
    return MetricMatrix(dims=tuple(cost.dims), blocks=blocks, coefficients=coeffs,
                        provenance=prov)


@dataclasses.dataclass(frozen=True)
class Signature:
    """Inertia (q_plus, q_minus, q_zero) of a symmetric matrix.

    zero_tol is the absolute eigenvalue threshold that was applied;
    eigenvalues (ascending) are kept for diagnostics when the computation
    produced them. method records which path computed the signature.
    """

    q_plus: int
    q_minus: int
    q_zero: int
    zero_tol: float
    eigenvalues: tuple | None = None
    method: str = "direct"
    note: str | None = None

    @property
    def total_dim(self):
        return self.q_plus + self.q_minus + self.q_zero

    def counts(self):
        return (self.q_plus, self.q_minus, self.q_zero)

    def __str__(self):
        return f"({self.q_plus}, {self.q_minus}, {self.q_zero})"


def _as_dense(M):
    if isinstance(M, MetricMatrix):
        return M.dense()
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if np.abs(A - A.T).max() > 1e-10 * max(1.0, np.abs(A).max()):
        raise InputError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def _default_zero_tol(eigenvalues):
    # N * ||M||_2 * 1e-12; the spectral norm of a symmetric matrix is max |eig|.
    n = len(eigenvalues)
    return n * (np.abs(eigenvalues).max() if n else 0.0) * 1e-12


def _count(eigenvalues, zero_tol):
    w = np.asarray(eigenvalues)
    plus = int((w > zero_tol).sum())
    minus = int((w < -zero_tol).sum())
    return plus, minus, len(w) - plus - minus


def signature(M, zero_tol=None, method="direct", note=None):
    """Signature of a symmetric matrix or assembled metric by eigendecomposition."""
    A = _as_dense(M)
    try:
        w = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    tol = _default_zero_tol(w) if zero_tol is None else float(zero_tol)
    qp, qm, qz = _count(w, tol)
    return Signature(q_plus=qp, q_minus=qm, q_zero=qz, zero_tol=tol,
                     eigenvalues=tuple(float(v) for v in w), method=method, note=note)


def dimension_bound(sig):
    """Upper bound on the dimension of an optimal support: N - q_minus."""
    return sig.total_dim - sig.q_minus


@dataclasses.dataclass(frozen=True, eq=False)
class Frame:
    """Congruence U with U G U' = H, H diagonal with +1 / -1 / 0 entries.

    Rows of U are ordered positive block first, then negative, then null.
    """

    U: np.ndarray
    H: np.ndarray
    signature: Signature

    def split(self, delta):
        """Project a stacked displacement and split it by the sign blocks of H."""
        u = self.U @ np.asarray(delta, dtype=float)
        h = np.diag(self.H)
        return u[h > 0.5], u[h < -0.5], u[np.abs(h) <= 0.5]


def diagonalizing_frame(M, zero_tol=None):
    """Build a diagonalizing frame for a symmetric matrix or metric."""
    A = _as_dense(M)
    w, V = np.linalg.eigh(A)
    tol = _default_zero_tol(w) if zero_tol is None else float(zero_tol)
    pos = [k for k in range(len(w)) if w[k] > tol]
    neg = [k for k in range(len(w)) if w[k] < -tol]
    nul = [k for k in range(len(w)) if abs(w[k]) <= tol]
    pos.sort(key=lambda k: -w[k])
    neg.sort(key=lambda k: w[k])
    order = pos + neg + nul
    scale = np.array([1.0 / np.sqrt(abs(w[k])) if abs(w[k]) > tol else 1.0 for k in order])
    U = scale[:, None] * V[:, order].T
    H = np.diag([1.0] * len(pos) + [-1.0] * len(neg) + [0.0] * len(nul))
    sig = Signature(q_plus=len(pos), q_minus=len(neg), q_zero=len(nul), zero_tol=tol,
                    eigenvalues=tuple(float(v) for v in np.sort(w)), method="direct")
    return Frame(U=U, H=H, signature=sig)


def frame_residual(frame, M):
    """Max-norm defect of the congruence relation U G U' = H."""
    A = _as_dense(M)
    return float(np.abs(frame.U @ A @ frame.U.T - frame.H).max())


def _cond(A):
    try:
        return float(np.linalg.cond(A, 2))
    except np.linalg.LinAlgError:
        return np.inf


def signature_m3_shortcut(metric, zero_tol=None):
    """Three-marginal signature from one small eigenproblem.

    With equal block dimensions n and invertible off-diagonal blocks, the
    matrix A = G[1,2] G[3,2]^{-1} G[3,1] determines the signature: if
    sym(2A) = A + A' has inertia (r_plus, r_minus, z) then the full metric has
    (n + r_minus, n + r_plus, z). Raises ShortcutNotApplicable when the
    preconditions fail; callers fall back to the direct path.
    """
    if not isinstance(metric, MetricMatrix) or metric.m != 3:
        raise ShortcutNotApplicable("shortcut requires an assembled metric with m = 3")
    n = metric.dims[0]
    if any(d != n for d in metric.dims):
        raise ShortcutNotApplicable(f"shortcut requires equal block dims, got {metric.dims}")
    G12 = metric.scaled_block(1, 2)
    G32 = metric.scaled_block(3, 2)
    G31 = metric.scaled_block(3, 1)
    for label, B in (("(1,2)", G12), ("(3,2)", G32), ("(3,1)", G31)):
        c = _cond(B)
        if not np.isfinite(c) or c > _COND_LIMIT:
            raise ShortcutNotApplicable(
                f"block {label} is numerically singular (cond {c:.3e} > {_COND_LIMIT:.0e})")
    A = G12 @ np.linalg.solve(G32, G31)
    S = A + A.T
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    tol = _default_zero_tol(w) if zero_tol is None else float(zero_tol)
    rp, rm, rz = _count(w, tol)
    return Signature(q_plus=n + rm, q_minus=n + rp, q_zero=rz, zero_tol=tol,
                     eigenvalues=None, method="m3_shortcut")


def signature_recursive(metric, zero_tol=None):
    """Signature by inertia additivity over nested trailing block groups.

    Starting from the trailing two-marginal block G_2, each step adjoins the
    next marginal on top and adds the inertia of the Schur complement
    -B G_l^{-1} B'. A numerically singular G_l aborts the recursion and falls
    back to the dense eigendecomposition, with the reason recorded on the
    returned signature.
    """
    if not isinstance(metric, MetricMatrix) or metric.m < 2:
        raise InputError("recursive signature requires an assembled metric")
    G = metric.dense()
    off = metric.offsets()
    m = metric.m
    lo = off[m - 2]
    w = np.linalg.eigvalsh(G[lo:, lo:])
    tol0 = _default_zero_tol(w) if zero_tol is None else float(zero_tol)
    qp, qm, qz = _count(w, tol0)
    for k in range(m - 3, -1, -1):
        tail = G[off[k + 1]:, off[k + 1]:]
        c = _cond(tail)
        if not np.isfinite(c) or c > _COND_LIMIT:
            reason = (f"trailing block group at marginal {k + 2} is numerically singular "
                      f"(cond {c:.3e}); fell back to dense eigendecomposition")
            sig = signature(metric, zero_tol=zero_tol)
            return dataclasses.replace(sig, method="direct_fallback", note=reason)
        B = G[off[k]:off[k + 1], off[k + 1]:]
        S = B @ np.linalg.solve(tail, B.T)
        S = 0.5 * (S + S.T)
        ws = np.linalg.eigvalsh(S)
        tol = _default_zero_tol(ws) if zero_tol is None else float(zero_tol)
        rp, rm, rz = _count(ws, tol)
        qp, qm, qz = qp + rm, qm + rp, qz + rz
    return Signature(q_plus=qp, q_minus=qm, q_zero=qz,
                     zero_tol=tol0 if zero_tol is None else float(zero_tol),
                     eigenvalues=None, method="recursive")


def numerical_rank(A, zero_tol_factor=1e-12):
    """Rank by SVD: singular values above max(shape) * s_max * factor."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int((s > max(A.shape) * s[0] * zero_tol_factor).sum())


def bipartite_signature(metric, partition, zero_tol_factor=1e-12):
    """Signature of the single-partition metric: (r, r, N - 2r).

    r is the numerical rank of the cross block stacked over the pairs the
    partition separates; the raw cross derivative blocks are used (the single
    partition carries weight one).
    """
    if not isinstance(metric, MetricMatrix):
        raise InputError("bipartite_signature expects an assembled metric")
    if partition.m != metric.m:
        raise InputError(f"partition is over m={partition.m}, metric has m={metric.m}")
    off = metric.offsets()
    rows = [(i, off[i] - off[i - 1]) for i in partition.plus]
    cols = [(j, off[j] - off[j - 1]) for j in partition.minus]
    C = np.zeros((sum(n for _, n in rows), sum(n for _, n in cols)))
    r0 = 0
    for i, ni in rows:
        c0 = 0
        for j, nj in cols:
            C[r0:r0 + ni, c0:c0 + nj] = metric.raw_block(i, j)
            c0 += nj
        r0 += ni
    r = numerical_rank(C, zero_tol_factor)
    N = metric.total_dim
    return Signature(q_plus=r, q_minus=r, q_zero=N - 2 * r, zero_tol=float(zero_tol_factor),
                     eigenvalues=None, method="bipartite")


@dataclasses.dataclass(frozen=True)
class RankBoundReport:
    """Block ranks of a metric against its signature: q_pm >= max block rank."""

    block_ranks: Mapping
    max_rank: int
    q_plus: int
    q_minus: int
    satisfied: bool

    @property
    def margins(self):
        return (self.q_plus - self.max_rank, self.q_minus - self.max_rank)


def rank_bound_check(metric, sig, zero_tol_factor=1e-12):
    """Check that both inertia counts dominate every off-diagonal block rank."""
    ranks = {}
    for i in range(1, metric.m + 1):
        for j in range(i + 1, metric.m + 1):
            ranks[(i, j)] = numerical_rank(metric.scaled_block(i, j), zero_tol_factor)
    rmax = max(ranks.values()) if ranks else 0
    ok = sig.q_plus >= rmax and sig.q_minus >= rmax
    return RankBoundReport(block_ranks=ranks, max_rank=rmax, q_plus=sig.q_plus,
                           q_minus=sig.q_minus, satisfied=ok)


@dataclasses.dataclass(frozen=True)
class TripleVerdict:
    triple: tuple
    applicable: bool
    max_eigenvalue: float | None
    negative_definite: bool


@dataclasses.dataclass(frozen=True)
class NecessaryConditionReport:
    """Per-triple definiteness of T + T', T = C_ij C_kj^{-1} C_ki.

    holds is True only when every ordered triple is applicable (invertible
    middle block) and yields a negative definite symmetrized product. The
    condition is necessary, not sufficient, for the fully concave-type
    signature ((m-1) n, n, 0).
    """

    triples: tuple
    holds: bool
    all_applicable: bool


def necessary_condition_check(metric):
    """Evaluate the triple-product definiteness condition on raw cross blocks."""
    if metric.m < 3:
        return NecessaryConditionReport(triples=(), holds=True, all_applicable=True)
    verdicts = []
    for i, j, k in itertools.permutations(range(1, metric.m + 1), 3):
        Ckj = metric.raw_block(k, j)
        if Ckj.shape[0] != Ckj.shape[1] or _cond(Ckj) > _COND_LIMIT:
            verdicts.append(TripleVerdict(triple=(i, j, k), applicable=False,
                                          max_eigenvalue=None, negative_definite=False))
            continue
        T = metric.raw_block(i, j) @ np.linalg.solve(Ckj, metric.raw_block(k, i))
        S = T + T.T
        w = np.linalg.eigvalsh(0.5 * (S + S.T))
        tol = _default_zero_tol(w)
        verdicts.append(TripleVerdict(triple=(i, j, k), applicable=True,
                                      max_eigenvalue=float(w.max()),
                                      negative_definite=bool(w.max() < -tol)))
    all_app = all(v.applicable for v in verdicts)
    holds = all_app and all(v.negative_definite for v in verdicts)
    return NecessaryConditionReport(triples=tuple(verdicts), holds=holds,
                                    all_applicable=all_app)
