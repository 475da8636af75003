"""Clique complex of the complete graph and its discrete differential operators.

Vertices are ``0..N-1`` internally. Edges ``(i, j)`` with ``i < j`` and
triangles ``(i, j, k)`` with ``i < j < k`` are enumerated in lexicographic
order. An edge flow is a length-``|E|`` array holding ``X(i, j)`` for the
canonical orientation; a triangle flow is a length-``|T|`` array holding
``Phi(i, j, k)`` for ``i < j < k``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np


@dataclass(frozen=True)
class ComplexIndex:
    n_entities: int
    edges: np.ndarray  # (|E|, 2) int
    triangles: np.ndarray  # (|T|, 3) int
    edge_lookup: dict = field(repr=False)
    triangle_lookup: dict = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def cyclomatic(self) -> int:
        return comb(self.n_entities - 1, 2)

    def edge_index(self, i: int, j: int) -> int:
        """Position of the unordered pair {i, j} in the edge list."""
        if i == j:
            raise ValueError("an edge needs two distinct vertices")
        return self.edge_lookup[(min(i, j), max(i, j))]

    def triangle_index(self, i: int, j: int, k: int) -> int:
        return self.triangle_lookup[tuple(sorted((i, j, k)))]


@dataclass(frozen=True)
class OperatorSet:
    """Dense operator matrices for one complete graph.

    ``G`` is grad (|E| x N), ``C`` is curl (|T| x |E|), ``H`` is an
    orthonormal basis of im(C) (|T| x K) and ``A`` spans ker(C^T).
    ``curl_basis`` caches ``C^T H``, the edge flows of the K basis weights.
    """

    index: ComplexIndex
    G: np.ndarray
    C: np.ndarray
    H: np.ndarray
    A: np.ndarray
    curl_basis: np.ndarray

    @property
    def C_star(self) -> np.ndarray:
        return self.C.T

    @property
    def K(self) -> int:
        return self.H.shape[1]

    @property
    def n_entities(self) -> int:
        return self.index.n_entities


def build_complex(n_entities: int) -> ComplexIndex:
    if int(n_entities) != n_entities or n_entities < 3:
        raise ValueError(f"need at least 3 entities to form a triangle, got {n_entities}")
    n = int(n_entities)
    edges = np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64)
    triangles = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    edge_lookup = {(int(i), int(j)): e for e, (i, j) in enumerate(edges)}
    triangle_lookup = {(int(i), int(j), int(k)): t for t, (i, j, k) in enumerate(triangles)}
    return ComplexIndex(n, edges, triangles, edge_lookup, triangle_lookup)


def edge_value(x: np.ndarray, idx: ComplexIndex, i: int, j: int) -> float:
    """X(i, j) for either orientation; X(j, i) = -X(i, j)."""
    value = x[idx.edge_index(i, j)]
    return value if i < j else -value


def _permutation_sign(triple) -> int:
    a, b, c = triple
    inversions = (a > b) + (a > c) + (b > c)
    return -1 if inversions % 2 else 1


def triangle_value(phi: np.ndarray, idx: ComplexIndex, i: int, j: int, k: int) -> float:
    """Phi(i, j, k) with the sign of the permutation from the sorted triple."""
    if len({i, j, k}) < 3:
        return 0.0
    return _permutation_sign((i, j, k)) * phi[idx.triangle_index(i, j, k)]


def grad_matrix(idx: ComplexIndex) -> np.ndarray:
    G = np.zeros((idx.n_edges, idx.n_entities))
    rows = np.arange(idx.n_edges)
    G[rows, idx.edges[:, 0]] = 1.0
    G[rows, idx.edges[:, 1]] = -1.0
    return G


def curl_matrix(idx: ComplexIndex) -> np.ndarray:
    # (curl X)(i,j,k) = X(i,j) + X(j,k) + X(k,i) = X(i,j) + X(j,k) - X(i,k)
    C = np.zeros((idx.n_triangles, idx.n_edges))
    for t, (i, j, k) in enumerate(idx.triangles):
        C[t, idx.edge_lookup[(i, j)]] = 1.0
        C[t, idx.edge_lookup[(j, k)]] = 1.0
        C[t, idx.edge_lookup[(i, k)]] = -1.0
    return C


def _check_length(x, expected: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (expected,):
        raise ValueError(f"{what} must have shape ({expected},), got {x.shape}")
    return x


def grad_apply(s, idx: ComplexIndex) -> np.ndarray:
    s = _check_length(s, idx.n_entities, "score vector")
    return s[idx.edges[:, 0]] - s[idx.edges[:, 1]]


def curl_apply(x, idx: ComplexIndex) -> np.ndarray:
    x = _check_length(x, idx.n_edges, "edge flow")
    t = idx.triangles
    n = idx.n_entities
    # lexicographic edge position of (a, b), a < b
    pos = lambda a, b: a * n - a * (a + 1) // 2 + (b - a - 1)  # noqa: E731
    return x[pos(t[:, 0], t[:, 1])] + x[pos(t[:, 1], t[:, 2])] - x[pos(t[:, 0], t[:, 2])]


def grad_adjoint_apply(x, idx: ComplexIndex) -> np.ndarray:
    x = _check_length(x, idx.n_edges, "edge flow")
    out = np.zeros(idx.n_entities)
    np.add.at(out, idx.edges[:, 0], x)
    np.add.at(out, idx.edges[:, 1], -x)
    return out


def curl_adjoint_apply(phi, idx: ComplexIndex) -> np.ndarray:
    phi = _check_length(phi, idx.n_triangles, "triangle flow")
    t = idx.triangles
    n = idx.n_entities
    pos = lambda a, b: a * n - a * (a + 1) // 2 + (b - a - 1)  # noqa: E731
    out = np.zeros(idx.n_edges)
    np.add.at(out, pos(t[:, 0], t[:, 1]), phi)
    np.add.at(out, pos(t[:, 1], t[:, 2]), phi)
    np.add.at(out, pos(t[:, 0], t[:, 2]), -phi)
    return out


def _fix_signs(Q: np.ndarray) -> np.ndarray:
    # first clearly nonzero entry of every column made positive
    Q = Q.copy()
    for col in range(Q.shape[1]):
        v = Q[:, col]
        nz = np.flatnonzero(np.abs(v) > 1e-12 * max(np.abs(v).max(), 1e-300))
        if nz.size and v[nz[0]] < 0:
            Q[:, col] = -v
    return Q


def build_curl_basis(idx: ComplexIndex, rank_tol: float = 1e-10) -> OperatorSet:
    """Assemble grad/curl and an orthonormal parameterisation of curl flows.

    The columns of ``H`` are the left singular vectors of ``C`` with singular
    values above ``rank_tol`` times the largest one; ``A`` holds the rest of
    the left singular basis.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    G = grad_matrix(idx)
    C = curl_matrix(idx)
    U, sv, _ = np.linalg.svd(C, full_matrices=True)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    K = idx.cyclomatic
    if rank != K:
        raise RuntimeError(
            f"curl matrix has numerical rank {rank}, expected the cyclomatic number {K}"
        )
    H = _fix_signs(U[:, :K])
    A = U[:, K:]
    return OperatorSet(idx, G, C, H, A, C.T @ H)


def build_operators(n_entities: int, rank_tol: float = 1e-10) -> OperatorSet:
    return build_curl_basis(build_complex(n_entities), rank_tol)


def helmholtzian(idx: ComplexIndex) -> np.ndarray:
    G = grad_matrix(idx)
    C = curl_matrix(idx)
    return G @ G.T + C.T @ C


@dataclass
class HodgeParts:
    m_grad: np.ndarray
    m_curl: np.ndarray
    s_hat: np.ndarray
    residual: float

    def __iter__(self):
        return iter((self.m_grad, self.m_curl, self.s_hat, self.residual))


def hodge_project(m, ops: OperatorSet, tol: float = 1e-8) -> HodgeParts:
    """Split an edge flow into its gradient and curl components.

    Both projections are least-squares fits through pseudoinverses, so the
    rank deficiency of grad (constants) and of curl* (its kernel) is
    harmless. ``s_hat`` is the centred minimum-norm potential.
    """
    m = _check_length(m, ops.index.n_edges, "edge flow")
    s_hat = np.linalg.pinv(ops.G) @ m
    s_hat -= s_hat.mean()
    m_grad = ops.G @ s_hat
    phi_hat = np.linalg.pinv(ops.C.T) @ m
    m_curl = ops.C.T @ phi_hat
    residual = float(np.linalg.norm(m - m_grad - m_curl))
    if residual > tol * max(1.0, float(np.linalg.norm(m))):
        warnings.warn(f"Hodge projection left a harmonic residual of {residual:.3g}")
    return HodgeParts(m_grad, m_curl, s_hat, residual)
