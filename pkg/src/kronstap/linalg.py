"""Dense complex matrix helpers.

The carrier type throughout the package is a 2-D numpy array of
complex128. Eigenwork delegates to LAPACK through numpy, with the
ordering and phase conventions pinned down here so repeated runs give
identical output.
"""

from collections import namedtuple

import numpy as np

from .errors import DataError, DimensionError

#: Eigendecomposition result: real values sorted descending, vectors in
#: matching columns with orthonormal columns.
EigenPairs = namedtuple("EigenPairs", ["values", "vectors"])

_HERMITIAN_RTOL = 1e-8
# Relative magnitude below which a negative eigenvalue of a nominally
# PSD matrix is treated as rounding noise.
_CLAMP_RTOL = 1e-10


def as_matrix(m, name="matrix"):
    """Validate and return a 2-D complex128 array with finite entries."""
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def matmul(a, b):
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"inner dimensions disagree: {a.shape} x {b.shape}"
        )
    return a @ b


def frobenius_norm(m):
    return float(np.linalg.norm(as_matrix(m)))


def vec(m):
    """Stack columns of m into a single vector (column-major)."""
    return as_matrix(m).ravel(order="F")


def unvec(v, rows, cols):
    """Inverse of vec for a rows x cols target shape."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != rows * cols:
        raise DimensionError(
            f"cannot reshape length {v.size} into {rows}x{cols}"
        )
    return v.reshape((rows, cols), order="F")


def kron(a, b):
    """Kronecker product of two matrices."""
    return np.kron(as_matrix(a, "left factor"), as_matrix(b, "right factor"))


def _check_square_hermitian(m, name):
    m = as_matrix(m, name)
    rows, cols = m.shape
    if rows != cols:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.conj().T) > _HERMITIAN_RTOL * scale:
        raise DataError(f"{name} deviates from Hermitian beyond tolerance")
    return m


def hermitian_eig(m):
    """Eigendecomposition of a (numerically) Hermitian matrix.

    The input is symmetrized before the solve so rounding-level
    asymmetry cannot leak into the result. Values come back real and
    sorted descending. Ties are ordered by the index of each vector's
    largest-magnitude component, and every vector is rotated so that
    component is real and positive, which makes the output reproducible.
    """
    m = _check_square_hermitian(m, "matrix")
    sym = (m + m.conj().T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    n = values.size
    if n > 1:
        tie_tol = np.max(np.abs(values)) * 1e-12
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and abs(values[stop] - values[stop - 1]) <= tie_tol:
                stop += 1
            if stop - start > 1:
                dominant = [
                    int(np.argmax(np.abs(vectors[:, k])))
                    for k in range(start, stop)
                ]
                order = np.argsort(dominant, kind="stable") + start
                values[start:stop] = values[order]
                vectors[:, start:stop] = vectors[:, order]
            start = stop

    for k in range(n):
        pivot = int(np.argmax(np.abs(vectors[:, k])))
        entry = vectors[pivot, k]
        mag = abs(entry)
        if mag > 0:
            vectors[:, k] *= entry.conj() / mag
    return EigenPairs(values, vectors)


def eig_truncate(m, rank):
    """Best Hermitian approximation keeping the top `rank` eigenpairs.

    Negative eigenvalues within rounding distance of zero are clamped
    before truncation, so a PSD input yields a PSD result. rank equal to
    the full dimension short-circuits to the symmetrized input.
    """
    m = _check_square_hermitian(m, "matrix")
    n = m.shape[0]
    if not 1 <= rank <= n:
        raise DimensionError(f"rank must be in [1, {n}], got {rank}")
    if rank == n:
        return (m + m.conj().T) / 2.0
    values, vectors = hermitian_eig(m)
    top = np.max(np.abs(values)) if values.size else 0.0
    clamp = (values < 0) & (np.abs(values) <= _CLAMP_RTOL * top)
    values = np.where(clamp, 0.0, values)
    u = vectors[:, :rank]
    lam = values[:rank]
    out = (u * lam) @ u.conj().T
    return (out + out.conj().T) / 2.0
