"""Low-rank Kronecker-factored covariance estimation.

Fits kron(A, B) to a sample covariance by alternating least squares,
which on the rearranged matrix is a rank-one fit. The sweeps never
materialize the rearrangement: each one streams over the q x q blocks
of the covariance in place. The spatial factor is eigen-truncated to
its rank budget every iteration, the temporal factor once at the end.
Residuals are the relative Frobenius misfit of the rank-one model,
recorded after the spatial truncation, and iteration stops when the
residual stops moving by more than the tolerance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateInputError, DimensionError
from .linalg import as_matrix, eig_truncate, kron
from .parallel import chunk_spans, get_pool

_HERMITIAN_RTOL = 1e-8
_HERMITIAN_TILE = 512


@dataclass
class SampleCovariance:
    """Mean of snapshot outer products, tagged with the bin shape."""

    matrix: np.ndarray
    n_samples: int
    p: int
    q: int


@dataclass
class KronCovEstimate:
    """Kronecker-factored covariance estimate and its fit history."""

    spatial: np.ndarray
    temporal: np.ndarray
    rank_spatial: int
    rank_temporal: int
    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = True

    def product(self):
        """Materialize kron(spatial, temporal). Small sizes only."""
        return kron(self.spatial, self.temporal)


def sample_covariance(snapshots, p, q, pool=None):
    """Average of x x^H over snapshot rows, symmetrized.

    No mean is subtracted; the clutter model is zero mean. Snapshots
    are length p*q vectors in the channel-major layout.
    """
    x = np.asarray(snapshots, dtype=np.complex128)
    if x.ndim != 2:
        raise DimensionError(f"snapshots must be 2-D, got shape {x.shape}")
    n, d = x.shape
    if n < 1:
        raise DimensionError("need at least one snapshot")
    if d != p * q:
        raise DimensionError(f"snapshot length {d} does not match p*q = {p * q}")
    x = np.ascontiguousarray(x)
    xc = np.conj(x)
    out = np.empty((d, d), dtype=np.complex128)
    spans = chunk_spans(d, min_chunk=32)

    def fill(r0, r1):
        out[r0:r1] = x[:, r0:r1].T @ xc

    get_pool(pool).run(fill, spans)
    out /= n
    out = (out + out.conj().T) / 2.0
    return SampleCovariance(out, n, p, q)


def _asymmetry(s):
    """Frobenius norm of s - s^H, accumulated over tile pairs.

    Tiling bounds the temporary to one tile pair; a full s.conj().T
    copy of a large covariance would briefly double its footprint.
    """
    n = s.shape[0]
    acc = 0.0
    for i0 in range(0, n, _HERMITIAN_TILE):
        i1 = min(i0 + _HERMITIAN_TILE, n)
        d = s[i0:i1, i0:i1] - s[i0:i1, i0:i1].conj().T
        acc += np.vdot(d, d).real
        for j0 in range(i1, n, _HERMITIAN_TILE):
            j1 = min(j0 + _HERMITIAN_TILE, n)
            d = s[i0:i1, j0:j1] - s[j0:j1, i0:i1].conj().T
            acc += 2.0 * np.vdot(d, d).real
    return math.sqrt(acc)


def _validate_covariance(scm):
    if not isinstance(scm, SampleCovariance):
        raise DimensionError("estimator expects a SampleCovariance")
    p, q = scm.p, scm.q
    s = as_matrix(scm.matrix, "covariance")
    if s.shape != (p * q, p * q):
        raise DimensionError(
            f"covariance shape {s.shape} does not match p*q = {p * q}"
        )
    scale = math.sqrt(np.vdot(s, s).real)
    if scale > 0 and _asymmetry(s) > _HERMITIAN_RTOL * scale:
        raise DataError("covariance deviates from Hermitian beyond tolerance")
    diag = s.diagonal().real
    if diag.size and np.min(diag) < -_HERMITIAN_RTOL * max(np.max(diag), 0.0):
        raise DataError("covariance has a negative diagonal, not PSD")
    return s, p, q


def lr_kron_estimate(scm, rank_spatial, rank_temporal, tol=1e-4,
                     max_iter=100, pool=None, keep_iterates=False):
    """Alternating Kronecker-factor fit to a sample covariance.

    Parameters
    ----------
    scm : SampleCovariance
        Hermitian PSD covariance of p*q snapshots.
    rank_spatial, rank_temporal : int
        Eigen-rank budgets for the p x p and q x q factors.
    tol : float
        Stop once the residual changes by no more than this between
        iterations. The residual is quadratically flat near the
        optimum, so a stall guarantees factor accuracy only to about
        sqrt(machine epsilon); pass a negative tol to disable the
        stall check and run exactly max_iter iterations instead.
    max_iter : int
        Iteration cap. Hitting it flags the estimate as not converged
        but still returns the partial factors.
    pool : WorkerPool, optional
        Thread pool for the block sweeps. Does not change the result.
    keep_iterates : bool
        Record the per-iteration factor matrices on the estimate as
        an `iterates` attribute (testing hook).
    """
    s, p, q = _validate_covariance(scm)
    if not 1 <= rank_spatial <= p:
        raise DimensionError(f"spatial rank must be in [1, {p}], got {rank_spatial}")
    if not 1 <= rank_temporal <= q:
        raise DimensionError(f"temporal rank must be in [1, {q}], got {rank_temporal}")
    if max_iter < 1:
        raise DimensionError(f"max_iter must be >= 1, got {max_iter}")

    fro = math.sqrt(np.vdot(s, s).real)
    if fro == 0.0:
        est = KronCovEstimate(
            np.zeros((p, p), dtype=np.complex128),
            np.zeros((q, q), dtype=np.complex128),
            rank_spatial, rank_temporal, 0, [0.0], True,
        )
        if keep_iterates:
            est.iterates = []
        return est

    pool = get_pool(pool)
    # axes (i, r, j, c): S[i*q + r, j*q + c] is entry (r, c) of block (i, j)
    s4 = np.ascontiguousarray(s).reshape(p, q, p, q)
    spans = chunk_spans(q, min_chunk=16)

    def reduce_spans(parts):
        total = parts[0].copy()
        for part in parts[1:]:
            total += part
        return total

    a_mat = reduce_spans(
        pool.run(lambda r0, r1: np.einsum("irjc->ij", s4[:, r0:r1]), spans)
    ) / float(q * q)
    b_mat = np.empty((q, q), dtype=np.complex128)
    residuals = []
    iterates = []
    spatial = None
    eta_prev = math.inf
    converged = False
    iterations = 0

    for _ in range(max_iter):
        iterations += 1
        norm_a2 = np.vdot(a_mat, a_mat).real
        if norm_a2 == 0.0:
            raise DegenerateInputError("spatial iterate collapsed to zero")
        conj_a = np.conj(a_mat)

        def b_step(r0, r1):
            b_mat[r0:r1] = np.einsum("irjc,ij->rc", s4[:, r0:r1], conj_a)

        pool.run(b_step, spans)
        b_mat /= norm_a2

        norm_b2 = np.vdot(b_mat, b_mat).real
        if norm_b2 == 0.0:
            raise DegenerateInputError("temporal iterate collapsed to zero")
        conj_b = np.conj(b_mat)

        v_mat = reduce_spans(pool.run(
            lambda r0, r1: np.einsum("irjc,rc->ij", s4[:, r0:r1], conj_b[r0:r1]),
            spans,
        ))

        spatial = eig_truncate(v_mat / norm_b2, rank_spatial)
        a_mat = spatial

        # || R - a b^T ||^2 expanded; v_mat already holds R conj(b)
        cross = np.vdot(a_mat, v_mat).real
        eta2 = fro * fro + np.vdot(a_mat, a_mat).real * norm_b2 - 2.0 * cross
        eta = math.sqrt(max(eta2, 0.0)) / fro
        residuals.append(eta)
        if keep_iterates:
            iterates.append((spatial.copy(), b_mat.copy()))

        if abs(eta_prev - eta) <= tol:
            converged = True
            break
        eta_prev = eta

    temporal = eig_truncate(b_mat, rank_temporal)
    est = KronCovEstimate(
        spatial, temporal, rank_spatial, rank_temporal,
        iterations, residuals, converged,
    )
    if keep_iterates:
        est.iterates = iterates
    return est
