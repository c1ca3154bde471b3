"""Randomized range approximation and randomized SVD.

The rank-l approximation pipeline: sketch the row space with a seeded
embedding, optionally sharpen the spectrum with power iterations (plain or
re-orthonormalized), then recover an SVD-form approximation from the small
projected matrix. All functions accept either a dense matrix or an implicit
operator exposing ``matmat``/``rmatmat``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dense import as_matrix, qr_ortho, svd_thin
from .errors import BadShape, RankDeficient, ShapeMismatch
from .sketch import make_embedding


def _shape(A):
    return A.shape


def _is_implicit(A):
    return hasattr(A, "rmatmat")


def _matmat(A, M):
    """A @ M for dense or implicit A."""
    return A.matmat(M) if _is_implicit(A) else A @ M


def _rmatmat(A, M):
    """A.T @ M for dense or implicit A."""
    return A.rmatmat(M) if _is_implicit(A) else A.T @ M


@dataclass(frozen=True)
class LowRankSVD:
    """Rank-l approximation ``A ~= U_hat @ diag(sigma_hat) @ V_hat.T``."""

    U_hat: np.ndarray
    sigma_hat: np.ndarray
    V_hat: np.ndarray
    l: int
    q: int
    seed: object
    embedding_kind: str = "gaussian"

    def approx(self):
        """Materialize the rank-l approximation."""
        return (self.U_hat * self.sigma_hat) @ self.V_hat.T


def _right_sketch(A, omega):
    """A @ Omega.T for an l x n embedding ``omega``."""
    m, n = _shape(A)
    if omega.in_dim != n:
        raise ShapeMismatch(
            f"embedding expects {omega.in_dim} columns, got matrix with {n}"
        )
    if _is_implicit(A):
        return A.matmat(np.ascontiguousarray(omega.to_dense().T))
    return omega.apply_t(A)


def power_iter_plain(A, omega, q):
    """(A A^T)^q A Omega^T by repeated multiplication.

    Exact per the defining product, but numerically unstable for q > 1 on
    ill-conditioned inputs; prefer :func:`power_iter_stable` there.
    """
    if q < 0:
        raise BadShape(f"q must be >= 0, got {q}")
    Y = _right_sketch(A, omega)
    for _ in range(q):
        Y = _matmat(A, _rmatmat(A, Y))
    return Y


def power_iter_stable(A, omega, q):
    """Orthonormal basis of (A A^T)^q A Omega^T with per-step re-orthonormalization.

    Orthonormalizes after every half iteration, so the returned basis keeps
    orthonormality even when the plain product would underflow its trailing
    directions.
    """
    if q < 0:
        raise BadShape(f"q must be >= 0, got {q}")
    Q = qr_ortho(_right_sketch(A, omega))
    for _ in range(q):
        Q = qr_ortho(_matmat(A, qr_ortho(_rmatmat(A, Q))))
    return Q


def _ortho_trunc(M, rtol=1e-12):
    """Orthonormal basis truncated at the numerical rank (SVD route)."""
    f = svd_thin(M)
    rank = f.rank if rtol == 1e-12 else int(
        np.count_nonzero(f.sigma > rtol * f.sigma[0]))
    if rank == 0:
        raise RankDeficient("input has no numerically nonzero directions")
    return f.U[:, :rank]


#: Default oversampling margin when only a target rank is given.
DEFAULT_OVERSAMPLING = 10


def randomized_svd(A, l=None, q=0, seed=None, embedding_kind="gaussian",
                   target_rank=None):
    """Rank-l randomized SVD with q re-orthonormalized power iterations.

    Callers may pass the sample size ``l`` directly or a ``target_rank`` k,
    in which case ``l = k + 10``. The column basis comes from
    :func:`power_iter_stable`; the small matrix ``A^T Q`` is then decomposed
    exactly, which hands the right factor half a power iteration more
    accuracy than the left one. When the input's rank falls below l the
    factors truncate to the detected rank instead of failing (the range is
    then captured exactly).
    """
    m, n = _shape(A)
    if l is None:
        if target_rank is None:
            raise BadShape("pass either l or target_rank")
        l = min(target_rank + DEFAULT_OVERSAMPLING, min(m, n))
    if not 1 <= l <= min(m, n):
        raise BadShape(f"need 1 <= l <= min(m,n), got l={l} for {m}x{n}")
    omega = make_embedding(embedding_kind, l, n, seed=seed)
    try:
        Q = power_iter_stable(A, omega, q)
    except RankDeficient:
        Q = _ortho_trunc(_right_sketch(A, omega))
        for _ in range(q):
            Q = _ortho_trunc(_matmat(A, _ortho_trunc(_rmatmat(A, Q))))
    B = _rmatmat(A, Q)  # n x rank
    f = svd_thin(B)     # B = f.U diag(f.sigma) f.V^T
    U_hat = Q @ f.V
    return LowRankSVD(U_hat=U_hat, sigma_hat=f.sigma, V_hat=f.U,
                      l=U_hat.shape[1], q=q, seed=seed,
                      embedding_kind=embedding_kind)


def rangefinder_error(A, X):
    """Frobenius and spectral norm of ``A (I - X^+ X)`` for a row approximator X.

    Computed by projecting onto an orthonormal basis of the rows of X (never
    through an explicit pseudoinverse). Raises :class:`RankDeficient` when X
    loses row rank.
    """
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    if X.shape[1] != A.shape[1]:
        raise ShapeMismatch(
            f"X has {X.shape[1]} columns, A has {A.shape[1]}"
        )
    try:
        Qr = qr_ortho(X.T)
    except RankDeficient as exc:
        raise RankDeficient(f"row approximator lost rank: {exc}") from exc
    E = A - (A @ Qr) @ Qr.T
    return float(np.linalg.norm(E)), float(np.linalg.norm(E, 2))
