import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bibt.complex import (build_complex, build_curl_basis, build_operators, curl_adjoint_apply,
                          curl_apply, curl_matrix, edge_value, grad_adjoint_apply, grad_apply,
                          grad_matrix, helmholtzian, hodge_project, triangle_value)


# Brute-force oracles written straight from the cochain definitions, on
# dictionaries of alternating functions rather than the lexicographic arrays.

def _edge_dict(x, idx):
    d = {}
    for e, (i, j) in enumerate(idx.edges):
        d[(i, j)] = x[e]
        d[(j, i)] = -x[e]
    return d


def _tri_dict(phi, idx):
    d = {}
    for t, (i, j, k) in enumerate(idx.triangles):
        for perm in itertools.permutations((i, j, k)):
            inv = sum(perm[a] > perm[b] for a in range(3) for b in range(a + 1, 3))
            d[perm] = phi[t] * (-1) ** inv
    return d


def oracle_curl(x, idx):
    X = _edge_dict(x, idx)
    return np.array([X[(i, j)] + X[(j, k)] + X[(k, i)] for i, j, k in idx.triangles])


def oracle_grad_adjoint(x, idx):
    X = _edge_dict(x, idx)
    n = idx.n_entities
    return np.array([sum(X[(i, j)] for j in range(n) if j != i) for i in range(n)])


def oracle_curl_adjoint(phi, idx):
    P = _tri_dict(phi, idx)
    n = idx.n_entities
    return np.array([sum(P[(i, j, k)] for k in range(n) if k not in (i, j))
                     for i, j in idx.edges])


@pytest.mark.parametrize("n,edges,tris", [(3, 3, 1), (10, 45, 120), (30, 435, 4060)])
def test_build_complex_sizes(n, edges, tris):
    idx = build_complex(n)
    assert idx.n_edges == edges
    assert idx.n_triangles == tris


@pytest.mark.parametrize("bad", [0, 1, 2, -4])
def test_build_complex_rejects_small(bad):
    with pytest.raises(ValueError):
        build_complex(bad)


def test_index_is_lexicographic_bijection():
    idx = build_complex(7)
    edges = [tuple(e) for e in idx.edges]
    tris = [tuple(t) for t in idx.triangles]
    assert edges == sorted(edges) and len(set(edges)) == comb(7, 2)
    assert tris == sorted(tris) and len(set(tris)) == comb(7, 3)
    for e, (i, j) in enumerate(edges):
        assert idx.edge_index(i, j) == e == idx.edge_index(j, i)
    for t, tri in enumerate(tris):
        for perm in itertools.permutations(tri):
            assert idx.triangle_index(*perm) == t


def test_alternating_accessors():
    idx = build_complex(4)
    x = np.arange(1.0, 7.0)
    assert edge_value(x, idx, 0, 2) == 2.0
    assert edge_value(x, idx, 2, 0) == -2.0
    phi = np.array([5.0, 0.0, 0.0, 0.0])
    assert triangle_value(phi, idx, 0, 1, 2) == 5.0
    assert triangle_value(phi, idx, 1, 2, 0) == 5.0
    assert triangle_value(phi, idx, 2, 0, 1) == 5.0
    assert triangle_value(phi, idx, 1, 0, 2) == -5.0
    assert triangle_value(phi, idx, 0, 2, 1) == -5.0
    assert triangle_value(phi, idx, 2, 1, 0) == -5.0


def test_hand_examples_n3():
    idx = build_complex(3)
    np.testing.assert_array_equal(grad_apply([1, 0, -1], idx), [1, 2, 1])
    np.testing.assert_array_equal(curl_apply([1, -1, 1], idx), [3])
    np.testing.assert_array_equal(grad_adjoint_apply([1, 2, 1], idx), [3, 0, -3])
    np.testing.assert_array_equal(curl_adjoint_apply([1], idx), [1, -1, 1])


def test_zero_and_constant_inputs():
    idx = build_complex(6)
    np.testing.assert_array_equal(grad_apply(np.full(6, 2.5), idx), 0)
    np.testing.assert_array_equal(grad_apply(np.zeros(6), idx), 0)
    np.testing.assert_array_equal(curl_apply(np.zeros(idx.n_edges), idx), 0)
    np.testing.assert_array_equal(grad_adjoint_apply(np.zeros(idx.n_edges), idx), 0)
    np.testing.assert_array_equal(curl_adjoint_apply(np.zeros(idx.n_triangles), idx), 0)


@pytest.mark.parametrize("fn,length", [(grad_apply, 4), (curl_apply, 5),
                                        (grad_adjoint_apply, 5), (curl_adjoint_apply, 3)])
def test_dimension_mismatch(fn, length):
    with pytest.raises(ValueError):
        fn(np.zeros(length), build_complex(5))


@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_operators_match_brute_force(n):
    rng = np.random.default_rng(n)
    idx = build_complex(n)
    x = rng.normal(size=idx.n_edges)
    phi = rng.normal(size=idx.n_triangles)
    np.testing.assert_allclose(curl_apply(x, idx), oracle_curl(x, idx), atol=1e-12)
    np.testing.assert_allclose(grad_adjoint_apply(x, idx), oracle_grad_adjoint(x, idx), atol=1e-12)
    np.testing.assert_allclose(curl_adjoint_apply(phi, idx), oracle_curl_adjoint(phi, idx),
                               atol=1e-12)
    np.testing.assert_allclose(grad_matrix(idx).T @ x, oracle_grad_adjoint(x, idx), atol=1e-12)
    np.testing.assert_allclose(curl_matrix(idx) @ x, oracle_curl(x, idx), atol=1e-12)


@pytest.mark.parametrize("n", range(3, 31))
def test_curl_grad_is_exactly_zero_and_rank(n):
    idx = build_complex(n)
    G, C = grad_matrix(idx), curl_matrix(idx)
    assert np.array_equal(C.astype(np.int64) @ G.astype(np.int64), np.zeros((idx.n_triangles, n)))
    assert np.all((G == 1).sum(axis=1) == 1) and np.all((G == -1).sum(axis=1) == 1)
    assert np.all((G != 0).sum(axis=1) == 2)
    if n <= 20:
        assert np.linalg.matrix_rank(C) == comb(n - 1, 2)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 9), seed=st.integers(0, 2**32 - 1))
def test_adjointness_and_orthogonality(n, seed):
    rng = np.random.default_rng(seed)
    idx = build_complex(n)
    s = rng.normal(size=n)
    x = rng.normal(size=idx.n_edges)
    phi = rng.normal(size=idx.n_triangles)
    gs, cphi = grad_apply(s, idx), curl_adjoint_apply(phi, idx)
    assert abs(gs @ x - s @ grad_adjoint_apply(x, idx)) < 1e-10
    assert abs(curl_apply(x, idx) @ phi - x @ cphi) < 1e-10
    assert abs(gs @ cphi) <= 1e-10 * (np.linalg.norm(gs) * np.linalg.norm(cphi) + 1)


@pytest.mark.parametrize("n,K,rest", [(3, 1, 0), (4, 3, 1), (10, 36, 84)])
def test_curl_basis_dimensions(n, K, rest):
    ops = build_curl_basis(build_complex(n))
    assert ops.K == K
    assert ops.A.shape == (comb(n, 3), rest)
    np.testing.assert_allclose(ops.H.T @ ops.H, np.eye(K), atol=1e-10)
    if rest:
        np.testing.assert_allclose(ops.A.T @ ops.H, 0, atol=1e-10)
        np.testing.assert_allclose(ops.C.T @ ops.A, 0, atol=1e-10)


def test_curl_basis_n3_and_sign_convention():
    ops = build_operators(3)
    np.testing.assert_allclose(ops.H, [[1.0]])
    ops = build_operators(6)
    for col in ops.H.T:
        first = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert first > 0


def test_curl_basis_spans_image_of_curl():
    ops = build_operators(6)
    rng = np.random.default_rng(0)
    y = ops.C @ rng.normal(size=ops.index.n_edges)
    np.testing.assert_allclose(ops.H @ (ops.H.T @ y), y, atol=1e-10)


def test_curl_basis_is_deterministic():
    a, b = build_operators(8), build_operators(8)
    assert np.array_equal(a.H, b.H)


def test_rank_tol_must_be_positive():
    with pytest.raises(ValueError):
        build_curl_basis(build_complex(4), rank_tol=0)


def test_rank_check_fails_loudly():
    with pytest.raises(RuntimeError):
        build_curl_basis(build_complex(5), rank_tol=1.5)


@pytest.mark.parametrize("n", range(3, 13))
def test_helmholtzian(n):
    idx = build_complex(n)
    L = helmholtzian(idx)
    assert np.array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).min() > 0
    rng = np.random.default_rng(n)
    s = rng.normal(size=n)
    gs = grad_apply(s, idx)
    np.testing.assert_allclose(L @ gs, grad_apply(grad_adjoint_apply(gs, idx), idx), atol=1e-8)


def test_hodge_project_pure_components():
    ops = build_operators(6)
    rng = np.random.default_rng(1)
    s = rng.normal(size=6)
    parts = hodge_project(ops.G @ s, ops)
    np.testing.assert_allclose(parts.m_grad, ops.G @ s, atol=1e-10)
    np.testing.assert_allclose(parts.m_curl, 0, atol=1e-10)
    np.testing.assert_allclose(parts.s_hat, s - s.mean(), atol=1e-10)
    assert parts.residual < 1e-10

    m = curl_adjoint_apply(rng.normal(size=ops.index.n_triangles), ops.index)
    g, c, s_hat, res = hodge_project(m, ops)
    np.testing.assert_allclose(g, 0, atol=1e-10)
    np.testing.assert_allclose(c, m, atol=1e-10)
    np.testing.assert_allclose(s_hat, 0, atol=1e-10)
    assert res < 1e-10


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 8), seed=st.integers(0, 2**32 - 1))
def test_hodge_project_complete_and_idempotent(n, seed):
    ops = build_operators(n)
    m = np.random.default_rng(seed).normal(size=ops.index.n_edges) * 3
    g, c, s_hat, res = hodge_project(m, ops)
    np.testing.assert_allclose(g + c, m, atol=1e-8)
    assert abs(m @ m - g @ g - c @ c) <= 1e-8 * (m @ m)
    assert abs(s_hat.sum()) < 1e-10
    g2, c2, _, _ = hodge_project(g, ops)
    np.testing.assert_allclose(g2, g, atol=1e-8)
    np.testing.assert_allclose(c2, 0, atol=1e-8)
