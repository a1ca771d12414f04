"""Block rearrangement that turns Kronecker structure into rank-one structure.

A pq x pq matrix S is viewed as a p x p grid of q x q blocks S(i, j).
The rearranged matrix R has one row per block and one column per
within-block position: the row holding vec(S(i, j)) sits where the
column-major vec of a p x p matrix puts entry (i, j), and likewise for
columns. With that alignment

    rearrange(kron(A, B)) == outer(vec(A), vec(B))

for every A, B, so a Kronecker product of any two factors collapses to
a rank-one matrix. The map is a pure permutation of entries: it is
exactly invertible and preserves the Frobenius norm.

rearrange computes each output element through closed-form integer
index maps (block row, block column, and flattened source position),
independently per element, so rows can be filled on any schedule
without changing the result. The test suite checks those maps against
a literal block-extraction oracle.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix
from .parallel import chunk_spans, get_pool


@dataclass
class RearrangedMatrix:
    """p^2 x q^2 rearrangement of a pq x pq matrix, with its block shape."""

    p: int
    q: int
    data: np.ndarray


def _check_dims(s, p, q, name="matrix"):
    if p < 1 or q < 1:
        raise DimensionError(f"block shape must be positive, got p={p}, q={q}")
    s = as_matrix(s, name)
    if s.shape != (p * q, p * q):
        raise DimensionError(
            f"{name} shape {s.shape} does not match p*q = {p * q}"
        )
    return s


def _source_offsets(p, q):
    """Flattened source index = row_base[t] + col_offset[u].

    Output element (t, u) pulls S[i*q + r, j*q + c] where i = t mod p,
    j = t div p index the block and r = u mod q, c = u div q the entry
    inside it. On the row-major flat view of S that source position
    separates into a per-row base and a per-column offset.
    """
    t = np.arange(p * p)
    i = t % p
    j = t // p
    row_base = (i * q) * (p * q) + j * q
    u = np.arange(q * q)
    r = u % q
    c = u // q
    col_offset = r * (p * q) + c
    return row_base, col_offset


def rearrange(s, p, q, pool=None):
    """Rearrange a pq x pq matrix into its p^2 x q^2 block form."""
    s = _check_dims(s, p, q)
    flat = np.ascontiguousarray(s).reshape(-1)
    row_base, col_offset = _source_offsets(p, q)
    out = np.empty((p * p, q * q), dtype=np.complex128)

    def fill(t0, t1):
        for t in range(t0, t1):
            out[t] = flat[row_base[t] + col_offset]

    get_pool(pool).run(fill, chunk_spans(p * p))
    return RearrangedMatrix(p, q, out)


def unrearrange(r, pool=None):
    """Invert rearrange exactly (entry permutation, no arithmetic)."""
    if not isinstance(r, RearrangedMatrix):
        raise DimensionError("unrearrange expects a RearrangedMatrix")
    p, q = r.p, r.q
    data = as_matrix(r.data, "rearranged data")
    if data.shape != (p * p, q * q):
        raise DimensionError(
            f"rearranged data shape {data.shape} does not match p={p}, q={q}"
        )
    row_base, col_offset = _source_offsets(p, q)
    flat = np.empty(p * q * p * q, dtype=np.complex128)

    def fill(t0, t1):
        # rows scatter to disjoint source positions, so spans are independent
        for t in range(t0, t1):
            flat[row_base[t] + col_offset] = data[t]

    get_pool(pool).run(fill, chunk_spans(p * p))
    return flat.reshape(p * q, p * q)


def lr_kron_init(r):
    """Spatial factor initialization: block sums over the rearrangement.

    Averages the rearranged columns, which amounts to compressing each
    q x q block of the source to its entry sum. Returns a length p^2
    vector; its p x p unvec is Hermitian PSD whenever the source is,
    and for a Kronecker product input it is already proportional to
    the vec of the spatial factor.
    """
    if not isinstance(r, RearrangedMatrix):
        raise DimensionError("lr_kron_init expects a RearrangedMatrix")
    q = r.q
    data = as_matrix(r.data, "rearranged data")
    return data.sum(axis=1) / float(q * q)
