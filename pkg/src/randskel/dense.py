"""Dense factorization kernels.

Thin wrappers over LAPACK (via numpy/scipy) that add the rank checks,
pivot bookkeeping, and error contracts the rest of the library relies on:

* :func:`qr_ortho` -- orthonormal basis of a full-column-rank tall matrix,
* :func:`svd_thin` -- economy SVD with a numerical-rank report,
* :func:`lupp` -- LU with partial (row) pivoting on a tall matrix,
* :func:`cpqr` -- QR with greedy column pivoting,
* :func:`spectral_norm_estimate` -- randomized power-method lower estimate.

All routines take 2-D float64 arrays, treat inputs as immutable, and are
pure functions of their arguments (safe to call concurrently).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import BadShape, ConvergenceFailure, RankDeficient, ZeroDimension

#: Relative magnitude below which a pivot/diagonal counts as zero.
RANK_RTOL = 1e-12


def as_matrix(a, name="matrix"):
    """Validate ``a`` as a finite 2-D float64 array and return it C-ordered."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise BadShape(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size and not np.isfinite(arr).all():
        raise BadShape(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class PivotedLU:
    """Row-pivoted LU of a tall matrix: ``M[perm] = L @ U``.

    ``perm[:cols]`` are the pivot rows in selection order; ``L`` is unit
    lower trapezoidal with off-diagonal magnitudes <= 1; ``U`` is upper
    triangular. ``rank_detected`` counts pivots above the rank tolerance.
    """

    perm: np.ndarray
    L: np.ndarray
    U: np.ndarray
    rank_detected: int


@dataclass(frozen=True)
class PivotedQR:
    """Column-pivoted QR: ``M[:, perm] = Q @ R`` with |R_ii| nonincreasing."""

    perm: np.ndarray
    Q: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class ThinSVD:
    """Economy SVD ``M = U @ diag(sigma) @ V.T`` with nonincreasing sigma."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self):
        """Numerical rank: singular values above ``RANK_RTOL * sigma[0]``."""
        if self.sigma.size == 0 or self.sigma[0] == 0.0:
            return 0
        return int(np.count_nonzero(self.sigma > RANK_RTOL * self.sigma[0]))


def qr_ortho(M, rtol=RANK_RTOL):
    """Return an orthonormal basis ``Q`` with span(Q) = span(M).

    ``M`` must be tall (rows >= cols) and numerically full column rank;
    otherwise :class:`RankDeficient` is raised. The rank test compares the
    smallest |R_ii| of the reduced QR against ``rtol * ||M||_F``.
    """
    M = as_matrix(M, "M")
    m, n = M.shape
    if m < n:
        raise BadShape(f"need rows >= cols, got {m}x{n}")
    q, r = np.linalg.qr(M)
    if n:
        fro = np.linalg.norm(M)
        dmin = np.abs(np.diag(r)).min()
        if fro == 0.0 or dmin < rtol * fro:
            raise RankDeficient(
                f"column norm {dmin:.3e} below {rtol:.1e} * ||M||_F = {rtol * fro:.3e}"
            )
    return q


def svd_thin(M):
    """Economy SVD of ``M`` as a :class:`ThinSVD`."""
    M = as_matrix(M, "M")
    try:
        u, s, vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # LAPACK iteration cap exceeded
        raise ConvergenceFailure(str(exc)) from exc
    return ThinSVD(U=u, sigma=s, V=vt.T)


def lupp(M, rtol=RANK_RTOL):
    """LU with partial row pivoting of a tall matrix ``M`` (rows >= cols).

    Ties between equal pivot magnitudes break toward the lowest row index.
    Raises :class:`RankDeficient` when the pivot at step ``t`` falls below
    ``rtol * max|M|``; the exception carries ``rank_detected = t`` and a
    ``partial`` :class:`PivotedLU` truncated to the detected rank.
    """
    M = as_matrix(M, "M")
    m, n = M.shape
    if m < n:
        raise BadShape(f"need rows >= cols, got {m}x{n}")
    if n == 0:
        return PivotedLU(perm=np.arange(m), L=np.zeros((m, 0)), U=np.zeros((0, 0)),
                         rank_detected=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # LinAlgWarning on exact singularity
        lu, piv = sla.lu_factor(M, check_finite=False)
    perm = np.arange(m)
    for t, p in enumerate(piv):
        perm[t], perm[p] = perm[p], perm[t]
    L = np.tril(lu, -1)[:, :n] + np.eye(m, n)
    U = np.triu(lu[:n])

    maxabs = np.abs(M).max() if M.size else 0.0
    diag = np.abs(np.diag(U))
    small = np.flatnonzero(diag < rtol * maxabs) if maxabs > 0 else np.arange(n)
    if small.size:
        t = int(small[0])
        partial = PivotedLU(perm=perm, L=L[:, :t], U=U[:t, :t], rank_detected=t)
        raise RankDeficient(
            f"pivot magnitude {diag[t] if maxabs > 0 else 0.0:.3e} at step {t} "
            f"below {rtol:.1e} * max|M|",
            rank_detected=t,
            partial=partial,
        )
    return PivotedLU(perm=perm, L=L, U=U, rank_detected=n)


def cpqr(M):
    """Column-pivoted QR of ``M``.

    Rank deficiency is reported through trailing ~0 diagonal entries of
    ``R`` rather than raised; the first pivot is the column of maximal
    2-norm (lowest index on ties).
    """
    M = as_matrix(M, "M")
    q, r, p = sla.qr(M, mode="economic", pivoting=True, check_finite=False)
    return PivotedQR(perm=p, Q=q, R=r)


def spectral_norm_estimate(apply, apply_adjoint, dim, iters, seed=None):
    """Estimate ||A||_2 from below via power iteration on ``A^T A``.

    ``apply``/``apply_adjoint`` are matvec oracles for ``A`` and ``A^T``,
    ``dim`` the domain dimension of ``A``. The returned value is
    ``||A v||_2`` for a unit vector ``v``, hence never exceeds the true
    spectral norm.
    """
    if dim == 0:
        raise ZeroDimension("operator has dimension zero")
    if iters < 1:
        raise BadShape(f"iters must be >= 1, got {iters}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = np.asarray(apply(v), dtype=np.float64)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        est = wn
        v = np.asarray(apply_adjoint(w), dtype=np.float64)
        vn = np.linalg.norm(v)
        if vn == 0.0:
            return 0.0
        v /= vn
    return float(est)
