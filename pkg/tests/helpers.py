"""Shared oracles and builders for the test suite.

The oracles here deliberately take the dumb route: explicit loops,
literal block extraction, textbook recursions. They exist so the fast
index-arithmetic implementations have something independent to be
checked against.
"""

import numpy as np


def complex_gauss(rng, shape):
    """Standard complex normal draws, unit variance per entry."""
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return (real + 1j * imag) / np.sqrt(2.0)


def matmul_loops(a, b):
    """Triple-loop matrix product."""
    a = np.asarray(a)
    b = np.asarray(b)
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=np.complex128)
    for i in range(n):
        for j in range(m):
            acc = 0.0 + 0.0j
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def kron_loops(a, b):
    """Kronecker product straight from the block definition."""
    a = np.asarray(a)
    b = np.asarray(b)
    pa, qa = a.shape
    pb, qb = b.shape
    out = np.zeros((pa * pb, qa * qb), dtype=np.complex128)
    for i in range(pa):
        for j in range(qa):
            out[i * pb:(i + 1) * pb, j * qb:(j + 1) * qb] = a[i, j] * b
    return out


def vec_loops(m):
    """Column-major vectorization by explicit iteration."""
    m = np.asarray(m)
    rows, cols = m.shape
    out = np.zeros(rows * cols, dtype=np.complex128)
    for c in range(cols):
        for r in range(rows):
            out[c * rows + r] = m[r, c]
    return out


def block_rearrange(s, p, q):
    """Literal block-extraction rearrangement oracle.

    Cuts the pq x pq matrix into its p x p grid of q x q blocks and
    writes the vec of block (i, j) into output row j*p + i, one block
    at a time.
    """
    s = np.asarray(s)
    out = np.zeros((p * p, q * q), dtype=np.complex128)
    for i in range(p):
        for j in range(p):
            block = s[i * q:(i + 1) * q, j * q:(j + 1) * q]
            out[j * p + i] = vec_loops(block)
    return out


def charpoly_coeffs(m):
    """Characteristic polynomial coefficients by the Faddeev-LeVerrier
    recursion. Only matrix products and traces, no eigensolver."""
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    coeffs[0] = 1.0
    work = np.zeros_like(m)
    for k in range(1, n + 1):
        work = m @ work + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(m @ work) / k
    return coeffs


def eigvals_from_charpoly(m):
    """Real eigenvalues of a Hermitian matrix via its characteristic
    polynomial, sorted descending."""
    roots = np.roots(charpoly_coeffs(m))
    return np.sort(roots.real)[::-1]


def svd_truncate(m, rank):
    """Best rank-`rank` approximation through the SVD."""
    u, s, vh = np.linalg.svd(np.asarray(m))
    return (u[:, :rank] * s[:rank]) @ vh[:rank]


def subspace_angle(u, v):
    """Largest principal angle (radians) between two column spans."""
    qu, _ = np.linalg.qr(np.asarray(u))
    qv, _ = np.linalg.qr(np.asarray(v))
    sv = np.linalg.svd(qu.conj().T @ qv, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))


def random_psd(rng, n, rank=None):
    """Random Hermitian PSD matrix with the given eigen-rank."""
    rank = n if rank is None else rank
    g = complex_gauss(rng, (n, rank))
    m = g @ g.conj().T
    return (m + m.conj().T) / 2.0


def random_kron_cov(rng, p, q, rank_spatial, rank_temporal):
    """PSD factors with prescribed ranks and their Kronecker product."""
    a = random_psd(rng, p, rank_spatial)
    b = random_psd(rng, q, rank_temporal)
    return a, b, np.kron(a, b)


def relative_error(approx, exact):
    exact = np.asarray(exact)
    scale = np.linalg.norm(exact)
    if scale == 0.0:
        return float(np.linalg.norm(approx))
    return float(np.linalg.norm(np.asarray(approx) - exact) / scale)
