"""Skeleton selection and natural-basis decompositions.

Column/row subsets are picked by pivoting on a randomized row-space
approximator (partial-pivoted LU or column-pivoted QR on a sketch, pivoting
on approximated singular vectors, or leverage-score sampling), optionally in
a single streaming pass. Builders assemble the interpolative and CUR
decompositions from the selected indices, always through orthonormal bases
rather than explicit pseudoinverses.

Every pivoting-based result carries the row approximator ``X`` it pivoted
on plus the a-posteriori factor ``eta = sqrt(1 + ||X1^+ X2||_2^2)``, which
multiplies the range-approximation error into a deterministic bound on the
skeleton error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dense import as_matrix, cpqr, lupp, qr_ortho, svd_thin, RANK_RTOL
from .errors import (
    BadShape,
    DegenerateDistribution,
    RankDeficient,
    ShapeMismatch,
    SingularPivotBlock,
    SingularSkeleton,
    StreamExhausted,
)
from .rangefinder import _is_implicit, _matmat, _rmatmat, randomized_svd
from .sketch import make_embedding, sketch_rows

#: Column width of the internal panels used by the streaming accumulator.
#: Re-chunking to fixed panels makes results bitwise independent of how the
#: caller splits the stream.
_STREAM_PANEL = 64


@dataclass(frozen=True)
class SkeletonResult:
    """Selected skeleton indices plus the evidence behind them."""

    J_s: np.ndarray
    I_s: np.ndarray | None
    method: str
    eta_column: float | None
    eta_row: float | None
    seed: object
    X: np.ndarray | None = field(default=None, repr=False)
    Y: np.ndarray | None = field(default=None, repr=False)
    rank_detected: int | None = None


@dataclass(frozen=True)
class ColumnID:
    """A ~= A[:, J_s] @ coeffs with coeffs[:, J_s] = I."""

    J_s: np.ndarray
    coeffs: np.ndarray  # l x n

    def reconstruct(self, A):
        return as_matrix(A, "A")[:, self.J_s] @ self.coeffs


@dataclass(frozen=True)
class RowID:
    """A ~= coeffs @ A[I_s, :] with coeffs[I_s, :] = I."""

    I_s: np.ndarray
    coeffs: np.ndarray  # m x l

    def reconstruct(self, A):
        return self.coeffs @ as_matrix(A, "A")[self.I_s, :]


@dataclass(frozen=True)
class TwoSidedID:
    """A ~= left @ S @ right, stored without inverting the skeleton block."""

    I_s: np.ndarray
    J_s: np.ndarray
    left: np.ndarray   # m x l, equals C S^{-1}
    S: np.ndarray      # l x l skeleton block A[I_s, J_s]
    right: np.ndarray  # l x n, equals C^+ A

    def reconstruct(self):
        return self.left @ (self.S @ self.right)


@dataclass(frozen=True)
class CurFactors:
    """Skeleton decomposition assembled through orthonormal bases.

    ``C`` and ``R`` are the actual skeleton columns/rows; the reconstruction
    is ``Q_C @ U_mid @ Q_R.T`` with ``U_mid = Q_C.T A Q_R``.
    """

    C: np.ndarray
    U_mid: np.ndarray
    R: np.ndarray
    Q_C: np.ndarray = field(repr=False)
    Q_R: np.ndarray = field(repr=False)

    def reconstruct(self):
        return self.Q_C @ self.U_mid @ self.Q_R.T


def posterior_eta(X, J_s):
    """sqrt(1 + ||X1^+ X2||_2^2) for X1 = X[:, J_s], X2 the other columns.

    This is the computable multiplier relating the skeleton error to the
    range-approximation error of X; cost O(l^2 (n - l)) plus one small SVD.
    """
    X = as_matrix(X, "X")
    J_s = np.asarray(J_s, dtype=np.intp)
    n = X.shape[1]
    mask = np.ones(n, dtype=bool)
    mask[J_s] = False
    X1 = X[:, J_s]
    X2 = X[:, mask]
    try:
        q1, r1 = np.linalg.qr(X1)
        dmin = np.abs(np.diag(r1)).min() if J_s.size else 0.0
        if J_s.size and (dmin == 0.0 or dmin < RANK_RTOL * np.linalg.norm(X1)):
            raise SingularPivotBlock(f"pivot block nearly singular (min |R_ii| = {dmin:.3e})")
    except np.linalg.LinAlgError as exc:
        raise SingularPivotBlock(str(exc)) from exc
    if X2.shape[1] == 0:
        return 1.0
    Z = sla.solve_triangular(r1, q1.T @ X2)
    return float(np.sqrt(1.0 + np.linalg.svd(Z, compute_uv=False)[0] ** 2))


def _take_columns(A, J):
    if _is_implicit(A):
        return A.columns(J)
    return np.ascontiguousarray(as_matrix(A, "A")[:, J])


def _take_rows(A, I):
    if _is_implicit(A):
        return A.rows(I)
    return np.ascontiguousarray(as_matrix(A, "A")[I, :])


def _lupp_pivots(M, count):
    """First ``count`` partial pivots of the tall matrix M, truncated to the
    detected rank when M falls short."""
    try:
        fac = lupp(M)
        rank = fac.rank_detected
        perm = fac.perm
    except RankDeficient as exc:
        rank = exc.rank_detected
        perm = exc.partial.perm
    take = min(count, rank)
    return perm[:take], rank


def _cpqr_pivots(M, count):
    """First ``count`` column pivots of M, truncated to the detected rank."""
    fac = cpqr(M)
    diag = np.abs(np.diag(fac.R))
    maxabs = np.abs(M).max() if M.size else 0.0
    if maxabs == 0.0:
        rank = 0
    else:
        small = np.flatnonzero(diag < RANK_RTOL * maxabs)
        rank = int(small[0]) if small.size else diag.size
    take = min(count, rank)
    return fac.perm[:take], rank


def _plain_power_sketch(A, l, q, seed, embedding):
    """Row approximator Gamma (A A^T)^q A; q = 0 is the plain row sketch."""
    m = A.shape[0]
    gamma = make_embedding(embedding, l, m, seed=seed)
    X = sketch_rows(gamma, A)
    for _ in range(q):
        T = np.ascontiguousarray(_matmat(A, X.T).T)    # X A^T  (l x m)
        X = np.ascontiguousarray(_rmatmat(A, T.T).T)   # (X A^T) A  (l x n)
    return X


def select_columns_lupp(A, l, q=0, seed=None, embedding="gaussian"):
    """Column (and row) skeletons by partial-pivoted LU on a row sketch.

    ``q`` in {0, 1}: the 1-iteration variant sharpens the sketch with one
    plain (unorthogonalized) power iteration before pivoting.
    """
    if q not in (0, 1):
        raise BadShape(f"q must be 0 or 1, got {q}")
    X = _plain_power_sketch(A, l, q, seed, embedding)
    J_s, rank = _lupp_pivots(X.T, l)
    C = _take_columns(A, J_s)
    I_s, _ = _lupp_pivots(C, J_s.size)
    eta = posterior_eta(X, J_s)
    method = "rand-lupp-1piter" if q == 1 else "rand-lupp"
    return SkeletonResult(J_s=J_s, I_s=I_s, method=method, eta_column=eta,
                          eta_row=None, seed=seed, X=X,
                          rank_detected=min(rank, l))


def select_columns_cpqr(A, l, q=0, seed=None, embedding="gaussian"):
    """Column (and row) skeletons by column-pivoted QR on a row sketch."""
    if q not in (0, 1):
        raise BadShape(f"q must be 0 or 1, got {q}")
    X = _plain_power_sketch(A, l, q, seed, embedding)
    J_s, rank = _cpqr_pivots(X, l)
    C = _take_columns(A, J_s)
    I_s, _ = _cpqr_pivots(C.T, J_s.size)
    eta = posterior_eta(X, J_s)
    method = "rand-cpqr-1piter" if q == 1 else "rand-cpqr"
    return SkeletonResult(J_s=J_s, I_s=I_s, method=method, eta_column=eta,
                          eta_row=None, seed=seed, X=X,
                          rank_detected=min(rank, l))


def select_deim(A, l, q=0, seed=None, embedding="gaussian"):
    """Skeletons by partial-pivoted LU on approximated right singular vectors."""
    lr = randomized_svd(A, l, q=q, seed=seed, embedding_kind=embedding)
    J_s, rank = _lupp_pivots(lr.V_hat, l)
    C = _take_columns(A, J_s)
    I_s, _ = _lupp_pivots(C, J_s.size)
    X = np.ascontiguousarray(lr.V_hat.T)
    eta = posterior_eta(X, J_s)
    return SkeletonResult(J_s=J_s, I_s=I_s, method="rsvd-deim", eta_column=eta,
                          eta_row=None, seed=seed, X=X,
                          rank_detected=min(rank, l))


def _as_seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed if seed is not None else 0)


def _sample_without_replacement(rng, scores, count):
    scores = np.asarray(scores, dtype=np.float64).copy()
    if scores.max(initial=0.0) < 1e-15:
        raise DegenerateDistribution("all sampling scores below 1e-15")
    picked = np.empty(count, dtype=np.intp)
    for t in range(count):
        total = scores.sum()
        if total <= 0:
            raise DegenerateDistribution("sampling scores exhausted")
        j = rng.choice(scores.size, p=scores / total)
        picked[t] = j
        scores[j] = 0.0
    return picked


def select_leverage(A, k, l, seed=None):
    """Skeletons sampled from approximated leverage scores.

    Scores come from a rank-k randomized SVD: squared row norms of the
    approximated singular-vector factors, normalized by k. ``l`` distinct
    columns (and rows) are drawn sequentially without replacement.
    """
    m, n = A.shape
    if not k <= l:
        raise BadShape(f"need k <= l, got k={k}, l={l}")
    s_svd, s_col, s_row = _as_seed_sequence(seed).spawn(3)
    lr = randomized_svd(A, k, q=0, seed=s_svd)
    col_scores = (lr.V_hat ** 2).sum(axis=1) / k
    row_scores = (lr.U_hat ** 2).sum(axis=1) / k
    J_s = _sample_without_replacement(np.random.default_rng(s_col), col_scores, l)
    I_s = _sample_without_replacement(np.random.default_rng(s_row), row_scores, l)
    return SkeletonResult(J_s=J_s, I_s=I_s, method="rsvd-ls", eta_column=None,
                          eta_row=None, seed=seed, X=None, rank_detected=None)


class _PanelAccumulator:
    """Re-chunk an incoming column stream into fixed-width panels.

    The sketches are updated once per complete panel, so the arithmetic (and
    hence the bit pattern of the result) depends only on the absolute column
    positions, not on where the caller's blocks begin and end.
    """

    def __init__(self, gamma_dense, omega_dense, m, n):
        self.G = gamma_dense          # l x m
        self.W = omega_dense          # l x n
        self.X = np.zeros((self.G.shape[0], n))
        self.Y = np.zeros((m, self.W.shape[0]))
        self.m = m
        self.n = n
        self.filled = 0
        self._buf = np.empty((m, _STREAM_PANEL))
        self._buf_cols = 0

    def _flush(self):
        w = self._buf_cols
        if w == 0:
            return
        j0 = self.filled
        panel = self._buf[:, :w]
        self.X[:, j0:j0 + w] = self.G @ panel
        self.Y += panel @ self.W[:, j0:j0 + w].T
        self.filled += w
        self._buf_cols = 0

    def push(self, block):
        block = as_matrix(block, "block")
        if block.shape[0] != self.m:
            raise ShapeMismatch(
                f"block has {block.shape[0]} rows, stream declared {self.m}"
            )
        if self.filled + self._buf_cols + block.shape[1] > self.n:
            raise ShapeMismatch("stream delivered more columns than declared")
        j = 0
        while j < block.shape[1]:
            take = min(_STREAM_PANEL - self._buf_cols, block.shape[1] - j)
            self._buf[:, self._buf_cols:self._buf_cols + take] = block[:, j:j + take]
            self._buf_cols += take
            j += take
            if self._buf_cols == _STREAM_PANEL:
                self._flush()

    def finish(self):
        self._flush()
        if self.filled != self.n:
            raise StreamExhausted(
                f"stream ended after {self.filled} of {self.n} columns"
            )
        return self.X, self.Y


def select_streaming(blocks, l, seed=None, pivot="lupp", *, m, n):
    """One-pass skeleton selection from a column-block iterator.

    Accumulates a row sketch ``X = Gamma A`` and a column sketch
    ``Y = A Omega^T`` while touching each block exactly once, then pivots X
    column-wise for ``J_s`` and Y row-wise for ``I_s``. The input matrix is
    never stored.
    """
    if pivot not in ("lupp", "cpqr"):
        raise BadShape(f"pivot must be 'lupp' or 'cpqr', got {pivot!r}")
    # the row embedding matches select_columns_lupp's draw for the same seed,
    # so a single-block stream reproduces its column pivots exactly
    gamma = make_embedding("gaussian", l, m, seed=seed)
    omega = make_embedding("gaussian", l, n,
                           seed=_as_seed_sequence(seed).spawn(1)[0])
    acc = _PanelAccumulator(gamma.to_dense(), omega.to_dense(), m, n)
    for block in blocks:
        acc.push(block)
    X, Y = acc.finish()
    if pivot == "lupp":
        J_s, rank = _lupp_pivots(X.T, l)
        I_s, _ = _lupp_pivots(Y, l)
    else:
        J_s, rank = _cpqr_pivots(X, l)
        I_s, _ = _cpqr_pivots(Y.T, l)
    eta_col = posterior_eta(X, J_s)
    eta_row = posterior_eta(np.ascontiguousarray(Y.T), I_s)
    return SkeletonResult(J_s=J_s, I_s=I_s, method=f"streaming-{pivot}",
                          eta_column=eta_col, eta_row=eta_row, seed=seed,
                          X=X, Y=Y, rank_detected=min(rank, l))


def streaming_interp_coeffs(result):
    """Estimate the column-ID coefficients from the row sketch alone.

    Returns ``X1^+ X`` where ``X1 = X[:, J_s]`` -- an approximation of the
    exact coefficients that avoids a second pass over the input.
    """
    if result.X is None:
        raise BadShape("result carries no row sketch")
    X1 = result.X[:, result.J_s]
    coeffs, *_ = np.linalg.lstsq(X1, result.X, rcond=None)
    return coeffs


def estimate_cur_from_skeletons(C, S, R, *, allow_unstable=False):
    """One-pass middle-factor estimate ``C S^{-1} R``.

    Disabled by default: inverting the skeleton block trades away both
    accuracy and stability, so callers must opt in explicitly.
    """
    if not allow_unstable:
        raise BadShape(
            "C S^{-1} R estimation is numerically unstable; "
            "pass allow_unstable=True to opt in"
        )
    C = as_matrix(C, "C")
    S = as_matrix(S, "S")
    R = as_matrix(R, "R")
    try:
        mid = sla.solve(S, R)
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularSkeleton(str(exc)) from exc
    return C @ mid


def _ortho_or_singular(M, what):
    try:
        return qr_ortho(M)
    except RankDeficient as exc:
        raise SingularSkeleton(f"{what} not full rank: {exc}") from exc


def _interp_from_basis(M, target):
    """M^+ @ target through a QR of M (no explicit pseudoinverse)."""
    q, r = np.linalg.qr(M)
    dmin = np.abs(np.diag(r)).min()
    if dmin == 0.0 or dmin < RANK_RTOL * np.linalg.norm(M):
        raise SingularSkeleton(f"skeleton block nearly singular (min |R_ii| = {dmin:.3e})")
    return sla.solve_triangular(r, q.T @ target)


def build_column_id(A, J_s):
    """Column interpolative decomposition A ~= C (C^+ A)."""
    A = as_matrix(A, "A")
    J_s = np.asarray(J_s, dtype=np.intp)
    C = A[:, J_s]
    coeffs = _interp_from_basis(C, A)
    return ColumnID(J_s=J_s, coeffs=coeffs)


def build_row_id(A, I_s):
    """Row interpolative decomposition A ~= (A R^+) R."""
    A = as_matrix(A, "A")
    I_s = np.asarray(I_s, dtype=np.intp)
    R = A[I_s, :]
    coeffs = _interp_from_basis(R.T, A.T).T
    return RowID(I_s=I_s, coeffs=coeffs)


def build_two_sided_id(A, I_s, J_s):
    """Two-sided interpolative decomposition (C S^{-1}) S (C^+ A).

    Equals the column ID in exact arithmetic; both outer factors are
    evaluated by solving against S and C, never by inversion.
    """
    A = as_matrix(A, "A")
    I_s = np.asarray(I_s, dtype=np.intp)
    J_s = np.asarray(J_s, dtype=np.intp)
    if I_s.size != J_s.size:
        raise ShapeMismatch("two-sided skeleton needs |I_s| = |J_s|")
    C = A[:, J_s]
    S = C[I_s, :]
    right = _interp_from_basis(C, A)
    try:
        left = sla.solve(S.T, C.T).T
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularSkeleton(f"skeleton block singular: {exc}") from exc
    return TwoSidedID(I_s=I_s, J_s=J_s, left=left, S=S, right=right)


def build_cur_stable(A, I_s, J_s):
    """CUR decomposition assembled through orthonormal skeleton bases."""
    I_s = np.asarray(I_s, dtype=np.intp)
    J_s = np.asarray(J_s, dtype=np.intp)
    C = _take_columns(A, J_s)
    R = _take_rows(A, I_s)
    Q_C = _ortho_or_singular(C, "skeleton columns")
    Q_R = _ortho_or_singular(R.T, "skeleton rows")
    U_mid = Q_C.T @ _matmat(A, Q_R)
    return CurFactors(C=C, U_mid=U_mid, R=R, Q_C=Q_C, Q_R=Q_R)
