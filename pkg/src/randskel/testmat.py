"""Synthetic test matrices and CSV ingestion.

Generators are deterministic per seed and return their exact ground-truth
factors where defined, so downstream tests can use them as oracles:

* :func:`gen_snn` / :func:`gen_snn_operator` -- sparse non-negative sums of
  rank-one products with prescribed weights,
* :func:`gen_gaussian_spectrum` -- dense matrix with an exactly known SVD,
* :func:`load_csv` / :func:`save_csv` -- lossless dense-matrix round trip.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dense import as_matrix, qr_ortho
from .errors import (
    BadShape,
    EmptyFactor,
    NonNumericCell,
    RaggedRows,
    ShapeMismatch,
)

#: Default fill fraction of the sparse factor vectors (the source experiments
#: never state one).
SNN_DEFAULT_DENSITY = 0.025


@dataclass(frozen=True)
class SnnParams:
    """Parameters of a sparse non-negative test matrix sum_i s_i x_i y_i^T."""

    m: int
    n: int
    r: int
    s: np.ndarray
    density: float = SNN_DEFAULT_DENSITY
    seed: object = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        object.__setattr__(self, "s", s)
        if self.r > min(self.m, self.n):
            raise BadShape(f"r={self.r} exceeds min(m,n)={min(self.m, self.n)}")
        if s.shape != (self.r,):
            raise BadShape(f"weights must have length r={self.r}")
        if not (s > 0).all() or (np.diff(s) > 0).any():
            raise BadShape("weights must be positive and nonincreasing")
        if not 0 < self.density <= 1:
            raise BadShape(f"density must be in (0, 1], got {self.density}")


def snn_weights(a, r1, r):
    """Weight profile a/i for i <= r1, then 1/i up to r."""
    i = np.arange(1, r + 1, dtype=np.float64)
    s = 1.0 / i
    s[:r1] = a / i[:r1]
    return s


def _sparse_nonneg_vector(rng, dim, density, retries=100):
    for _ in range(retries):
        mask = rng.random(dim) < density
        vals = rng.random(dim)
        v = np.where(mask, vals, 0.0)
        if v.any():
            return v
    raise EmptyFactor(
        f"all-zero factor after {retries} retries (dim={dim}, density={density})"
    )


def _snn_factors(params):
    rng = np.random.default_rng(params.seed)
    X = np.empty((params.m, params.r))
    Y = np.empty((params.n, params.r))
    for i in range(params.r):
        X[:, i] = _sparse_nonneg_vector(rng, params.m, params.density)
        Y[:, i] = _sparse_nonneg_vector(rng, params.n, params.density)
    return X, Y


@dataclass(frozen=True)
class ImplicitSnnOperator:
    """Matvec-only access to an SNN matrix; cost O((m+n) * r * density)."""

    params: SnnParams
    x_factors: sp.csr_matrix = field(repr=False)  # m x r
    y_factors: sp.csr_matrix = field(repr=False)  # n x r

    @property
    def shape(self):
        return (self.params.m, self.params.n)

    def matvec(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.params.n,):
            raise ShapeMismatch(f"expected length {self.params.n}, got {v.shape}")
        return self.x_factors @ (self.params.s * (self.y_factors.T @ v))

    def matvec_adjoint(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.params.m,):
            raise ShapeMismatch(f"expected length {self.params.m}, got {w.shape}")
        return self.y_factors @ (self.params.s * (self.x_factors.T @ w))

    def matmat(self, M):
        M = as_matrix(M, "M")
        if M.shape[0] != self.params.n:
            raise ShapeMismatch(f"expected {self.params.n} rows, got {M.shape[0]}")
        return self.x_factors @ (self.params.s[:, None] * (self.y_factors.T @ M))

    def rmatmat(self, M):
        M = as_matrix(M, "M")
        if M.shape[0] != self.params.m:
            raise ShapeMismatch(f"expected {self.params.m} rows, got {M.shape[0]}")
        return self.y_factors @ (self.params.s[:, None] * (self.x_factors.T @ M))

    def columns(self, J):
        J = np.asarray(J, dtype=np.intp)
        Yj = self.y_factors[J].toarray()  # |J| x r
        return self.x_factors @ (self.params.s[:, None] * Yj.T)

    def rows(self, I):
        I = np.asarray(I, dtype=np.intp)
        Xi = self.x_factors[I].toarray()  # |I| x r
        return (Xi * self.params.s) @ self.y_factors.toarray().T

    def to_dense(self):
        X = self.x_factors.toarray()
        Y = self.y_factors.toarray()
        return (X * self.params.s) @ Y.T


def gen_snn(params):
    """Dense SNN matrix; entries are nonnegative by construction."""
    X, Y = _snn_factors(params)
    return (X * params.s) @ Y.T


def gen_snn_operator(params):
    """SNN matrix exposed only through (ad)joint products."""
    X, Y = _snn_factors(params)
    return ImplicitSnnOperator(
        params=params,
        x_factors=sp.csr_matrix(X),
        y_factors=sp.csr_matrix(Y),
    )


@dataclass(frozen=True)
class SlowDecay:
    """Flat head of length r1, then 1/sqrt(i - r1 + 1)."""

    r1: int = 20


@dataclass(frozen=True)
class FastDecay:
    """Flat head of length r1, then max(0.99**(i - r1), 1e-3)."""

    r1: int = 20


@dataclass(frozen=True)
class StepSpectrum:
    """k copies of sigma1 followed by copies of sigma_k1."""

    k: int
    sigma1: float
    sigma_k1: float = 1.0


@dataclass(frozen=True)
class ExplicitSpectrum:
    values: np.ndarray


def spectrum_values(profile, r):
    """Materialize a spectrum profile at length ``r`` (positive, nonincreasing)."""
    i = np.arange(1, r + 1, dtype=np.float64)
    if isinstance(profile, SlowDecay):
        s = np.where(i <= profile.r1, 1.0, 1.0 / np.sqrt(np.maximum(i - profile.r1 + 1, 1.0)))
    elif isinstance(profile, FastDecay):
        s = np.where(i <= profile.r1, 1.0,
                     np.maximum(0.99 ** (i - profile.r1), 1e-3))
    elif isinstance(profile, StepSpectrum):
        if profile.k > r:
            raise BadShape(f"step k={profile.k} exceeds r={r}")
        s = np.full(r, float(profile.sigma_k1))
        s[: profile.k] = profile.sigma1
    elif isinstance(profile, ExplicitSpectrum):
        s = np.asarray(profile.values, dtype=np.float64)
        if s.shape != (r,):
            raise BadShape(f"explicit spectrum length {s.size} != r={r}")
    else:
        raise BadShape(f"unknown spectrum profile {profile!r}")
    if not (s > 0).all() or (np.diff(s) > 1e-15).any():
        raise BadShape("spectrum must be positive and nonincreasing")
    return s


def gen_gaussian_spectrum(m, n, profile, seed=None, r=None):
    """Dense matrix U diag(sigma) V^T with random orthonormal factors.

    Returns ``(A, U, sigma, V)`` so that exact singular subspaces are
    available downstream.
    """
    if r is None:
        r = min(m, n)
    if r > min(m, n):
        raise BadShape(f"r={r} exceeds min(m,n)={min(m, n)}")
    sigma = spectrum_values(profile, r)
    rng = np.random.default_rng(seed)
    U = qr_ortho(rng.standard_normal((m, r)))
    V = qr_ortho(rng.standard_normal((n, r)))
    A = (U * sigma) @ V.T
    return A, U, sigma, V


def _parse_cell(text, row, col):
    try:
        return float(text)
    except ValueError:
        raise NonNumericCell(f"cell ({row}, {col}) is not numeric: {text!r}") from None


def load_csv(path):
    """Load a rectangular numeric CSV as a dense matrix.

    A single leading header row is skipped automatically when any of its
    cells fails to parse as a number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw = [row for row in reader if row]
    if not raw:
        raise RaggedRows("empty CSV")

    def _numeric_row(cells):
        try:
            [float(c) for c in cells]
            return True
        except ValueError:
            return False

    start = 0 if _numeric_row(raw[0]) else 1
    body = raw[start:]
    if not body:
        raise RaggedRows("CSV holds a header but no data rows")
    width = len(body[0])
    data = np.empty((len(body), width))
    for i, cells in enumerate(body):
        if len(cells) != width:
            raise RaggedRows(
                f"row {i + start} has {len(cells)} cells, expected {width}"
            )
        for j, cell in enumerate(cells):
            data[i, j] = _parse_cell(cell, i + start, j)
    return data


def save_csv(path, A):
    """Write a dense matrix with 17 significant digits (lossless round trip)."""
    A = as_matrix(A, "A")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in A:
            writer.writerow([format(v, ".17g") for v in row])
