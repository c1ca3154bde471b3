"""Canonical angles between subspaces: exact values, prior probabilistic
bounds, unbiased Monte-Carlo estimates, posterior residual-based bounds, and
the oversampling-versus-iterations balance function.

Angles are always reported as sines in [0, 1], sorted nondecreasing (the
smallest angle first). The prior machinery needs only a spectrum; the
posterior machinery needs the computed low-rank factors and residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import as_matrix, qr_ortho, spectral_norm_estimate, svd_thin
from .errors import (
    BadShape,
    DistortionOutOfRange,
    EmptyTail,
    InadmissibleQ,
    ShapeMismatch,
    SingularOmega1,
    TailRankDeficient,
)
from .rangefinder import LowRankSVD


def canonical_angles(U, V):
    """Sines of the canonical angles between span(U) and span(V).

    ``U`` is d x a, ``V`` is d x b with a >= b; the result has length b,
    sorted nondecreasing. Computed from the singular values of
    ``(I - Q_U Q_U^T) Q_V`` (accurate near zero angles); see
    :func:`canonical_angles_cos` for the cosine-route cross-check.
    """
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    if U.shape[0] != V.shape[0]:
        raise ShapeMismatch("subspace bases live in different dimensions")
    if U.shape[1] < V.shape[1]:
        raise BadShape("first basis must span the larger subspace (a >= b)")
    Qu = qr_ortho(U)
    Qv = qr_ortho(V)
    W = Qv - Qu @ (Qu.T @ Qv)
    s = np.linalg.svd(W, compute_uv=False)
    return np.clip(s[::-1], 0.0, 1.0)


def canonical_angles_cos(U, V):
    """Same angles via cosines sigma_i(Q_U^T Q_V); loses accuracy near zero."""
    U = as_matrix(U, "U")
    V = as_matrix(V, "V")
    Qu = qr_ortho(U)
    Qv = qr_ortho(V)
    c = np.clip(np.linalg.svd(Qu.T @ Qv, compute_uv=False), 0.0, 1.0)
    return np.sqrt(np.clip(1.0 - c ** 2, 0.0, 1.0))


def pad_spectrum(sigma_hat, r):
    """Extend an approximated length-l spectrum to length r with copies of
    its last value (the convention for evaluating bounds without the true
    spectrum)."""
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    if sigma_hat.ndim != 1 or sigma_hat.size == 0:
        raise BadShape("sigma_hat must be a nonempty vector")
    if r < sigma_hat.size:
        raise BadShape(f"r={r} shorter than the spectrum ({sigma_hat.size})")
    return np.concatenate([sigma_hat, np.full(r - sigma_hat.size, sigma_hat[-1])])


def default_distortions(k, l, r):
    """The experimental convention eps1 = sqrt(k/l), eps2 = sqrt(l/(r-k))."""
    return float(np.sqrt(k / l)), float(np.sqrt(l / (r - k)))


def tail_flatness(sigma, k, q):
    """(sum_{j>k} s_j^(4q+2))^2 / sum_{j>k} s_j^(2(4q+2)), in (1, r-k]."""
    sigma = np.asarray(sigma, dtype=np.float64)
    tail = sigma[k:]
    if tail.size == 0:
        raise EmptyTail(f"k={k} leaves no trailing spectrum (r={sigma.size})")
    # Normalize before powering to dodge under/overflow at large exponents.
    w = (tail / tail[0]) ** (4 * q + 2)
    return float(w.sum() ** 2 / (w ** 2).sum())


@dataclass(frozen=True)
class PriorBoundInputs:
    """Spectrum-only inputs for the prior probabilistic angle bounds.

    ``side`` selects the exponent: "left" uses 4q+2, "right" uses 4q+4
    (the right factor absorbs an extra half power iteration).
    Upper-bound distortions ``eps1``/``eps2`` default to sqrt(k/l) and
    sqrt(l/(r-k)); lower-bound ones default to twice that.
    """

    sigma: np.ndarray
    k: int
    l: int
    q: int
    side: str = "left"
    eps1: float | None = None
    eps2: float | None = None
    eps1_lower: float | None = None
    eps2_lower: float | None = None

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=np.float64)
        object.__setattr__(self, "sigma", sigma)
        r = sigma.size
        if not (sigma > 0).all() or (np.diff(sigma) > 1e-15).any():
            raise BadShape("spectrum must be positive and nonincreasing")
        if not 0 < self.k < self.l < r:
            raise BadShape(f"need 0 < k < l < r, got k={self.k}, l={self.l}, r={r}")
        if self.side not in ("left", "right"):
            raise BadShape(f"side must be 'left' or 'right', got {self.side!r}")
        if self.q < 0:
            raise BadShape(f"q must be >= 0, got {self.q}")
        e1, e2 = default_distortions(self.k, self.l, r)
        if self.eps1 is None:
            object.__setattr__(self, "eps1", e1)
        if self.eps2 is None:
            object.__setattr__(self, "eps2", e2)
        if self.eps1_lower is None:
            object.__setattr__(self, "eps1_lower", 2 * e1)
        if self.eps2_lower is None:
            object.__setattr__(self, "eps2_lower", 2 * e2)
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise DistortionOutOfRange(f"{name}={v:.4f} outside (0, 1)")
        if not self.eps1_lower > 0:
            raise DistortionOutOfRange("eps1_lower must be positive")

    @property
    def lower_defined(self):
        """The lower-bound formula needs eps2_lower < 1, i.e. l well below r - k."""
        return 0 < self.eps2_lower < 1

    @property
    def exponent(self):
        return 4 * self.q + 2 if self.side == "left" else 4 * self.q + 4


@dataclass(frozen=True)
class PriorBounds:
    upper: np.ndarray
    lower: np.ndarray | None
    tail_flatness: float


def prior_space_agnostic(inputs):
    """Prior upper/lower bounds on the first k angle sines from the spectrum alone.

    upper_i = (1 + (1-eps1)/(1+eps2) * l/sum_tail(s^p) * s_i^p)^(-1/2) with
    p the side exponent; the lower bound swaps in (1+eps1')/(1-eps2') and is
    ``None`` when eps2' >= 1 leaves its formula undefined. Evaluation is
    linear in the spectrum length.
    """
    p = inputs.exponent
    sigma = inputs.sigma
    k, l = inputs.k, inputs.l
    scale = sigma[0]
    pow_all = (sigma / scale) ** p
    tail_sum = pow_all[k:].sum()
    ratio_up = (1 - inputs.eps1) / (1 + inputs.eps2)
    head = pow_all[:k]
    upper = 1.0 / np.sqrt(1.0 + ratio_up * (l / tail_sum) * head)
    lower = None
    if inputs.lower_defined:
        ratio_lo = (1 + inputs.eps1_lower) / (1 - inputs.eps2_lower)
        lower = 1.0 / np.sqrt(1.0 + ratio_lo * (l / tail_sum) * head)
    eta = tail_flatness(sigma, k, inputs.q)
    return PriorBounds(upper=upper, lower=lower, tail_flatness=eta)


def prior_reference_bound(sigma, k, l, q, omega1, omega2, side="left"):
    """The reference prior bound that needs the projected test matrices.

    bound_i = (1 + s_i^p / (s_{k+1}^p ||Omega2 Omega1^+||_2^2))^(-1/2) with
    p = 4q+2 (left) or 4q+4 (right). ``omega1`` is k x l (the embedding
    projected onto the leading right subspace) and ``omega2`` the tail
    projection; synthetic matrices with known factors can supply both.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    omega1 = as_matrix(omega1, "omega1")
    omega2 = as_matrix(omega2, "omega2")
    if side not in ("left", "right"):
        raise BadShape(f"side must be 'left' or 'right', got {side!r}")
    if omega1.shape != (k, l):
        raise ShapeMismatch(f"omega1 must be {k}x{l}, got {omega1.shape}")
    if sigma.size <= k:
        raise EmptyTail(f"need a spectrum longer than k={k}")
    p = 4 * q + 2 if side == "left" else 4 * q + 4
    W, *_ = np.linalg.lstsq(omega1.T, omega2.T, rcond=None)
    if np.linalg.matrix_rank(omega1) < k:
        raise SingularOmega1("projected embedding lost row rank")
    cross = np.linalg.svd(W, compute_uv=False)[0] if W.size else 0.0
    head = (sigma[:k] / sigma[k]) ** p
    if cross == 0.0:
        return np.zeros(k)
    return 1.0 / np.sqrt(1.0 + head / cross ** 2)


@dataclass(frozen=True)
class EstimateReport:
    """Per-index mean/min/max of the unbiased angle estimates over trials."""

    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    n_trials: int


def unbiased_estimates(sigma, k, l, q, n_trials, seed=None, side="left"):
    """Unbiased Monte-Carlo estimates of E[sin angle_i] from the spectrum.

    Per trial: draw a Gaussian test matrix, weight its leading/trailing row
    blocks by the spectrum to powers 2q+1 (left) or 2q+2 (right), and read
    the angles off the singular values of the weighted quotient. Requires
    r - k >= l so the tail block keeps full rank.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    r = sigma.size
    if side not in ("left", "right"):
        raise BadShape(f"side must be 'left' or 'right', got {side!r}")
    if not k < l:
        raise BadShape(f"need k < l, got k={k}, l={l}")
    if r <= k:
        raise EmptyTail(f"need a spectrum longer than k={k}")
    if n_trials < 1:
        raise BadShape(f"n_trials must be >= 1, got {n_trials}")
    if r - k < l:
        raise TailRankDeficient(
            f"estimator needs r - k >= l, got r={r}, k={k}, l={l}"
        )
    half_p = 2 * q + 1 if side == "left" else 2 * q + 2
    w_head = (sigma[:k] / sigma[0]) ** half_p
    w_tail = (sigma[k:] / sigma[0]) ** half_p
    if isinstance(seed, np.random.SeedSequence):
        root = seed
    else:
        root = np.random.SeedSequence(seed if seed is not None else 0)
    streams = root.spawn(n_trials)
    thetas = np.empty((n_trials, k))
    for j, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        omega = rng.standard_normal((r, l)) / np.sqrt(l)
        w1 = w_head[:, None] * omega[:k]       # k x l
        w2 = w_tail[:, None] * omega[k:]       # (r-k) x l
        f = svd_thin(w2)
        smin = f.sigma.min() if f.sigma.size else 0.0
        if f.sigma.size < l or smin < 1e-13 * f.sigma.max():
            raise TailRankDeficient("weighted tail block lost rank")
        nu = np.linalg.svd((w1 @ f.V) / f.sigma, compute_uv=False)
        thetas[j] = 1.0 / np.sqrt(1.0 + nu ** 2)
    return EstimateReport(mean=thetas.mean(axis=0), min=thetas.min(axis=0),
                          max=thetas.max(axis=0), n_trials=n_trials)


def posterior_simple(A, basis, sigma, k, side="left"):
    """Residual/spectrum posterior upper bounds on the first k angle sines.

    ``basis`` is the computed orthonormal factor (left: m x l, right: n x l);
    ``sigma`` the true or padded spectrum. Per index the bound is
    ``min(s_{k-i+1}(residual)/s_k, s_1(residual)/s_i)``, clipped to [0, 1].
    """
    A = as_matrix(A, "A")
    basis = as_matrix(basis, "basis")
    sigma = np.asarray(sigma, dtype=np.float64)
    if side not in ("left", "right"):
        raise BadShape(f"side must be 'left' or 'right', got {side!r}")
    if sigma.size < k:
        raise ShapeMismatch(f"spectrum shorter than k={k}")
    if side == "left":
        if basis.shape[0] != A.shape[0]:
            raise ShapeMismatch("left basis rows must match A rows")
        E = A - basis @ (basis.T @ A)
    else:
        if basis.shape[0] != A.shape[1]:
            raise ShapeMismatch("right basis rows must match A columns")
        E = A - (A @ basis) @ basis.T
    s_res = np.linalg.svd(E, compute_uv=False)
    i = np.arange(1, k + 1)
    first = s_res[k - i] / sigma[k - 1]
    second = s_res[0] / sigma[i - 1]
    return np.clip(np.minimum(first, second), 0.0, 1.0)


@dataclass(frozen=True)
class PosteriorGapReport:
    """All gap-based posterior bounds plus the ingredients behind them.

    ``valid`` is False when a gap condition fails (s_k <= shat_{k+1} or
    s_k <= ||E33||); the numbers are still reported so benchmarks can log
    the violation, but they are not bounds in that case.
    """

    valid: bool
    norm_E3132_fro: float
    norm_E3132_spec: float
    norm_E32_spec: float
    norm_E33_spec: float
    gamma1: float
    gamma2: float
    big_gamma1: float
    big_gamma2: float
    bounds: dict = field(repr=False)
    anglewise: dict = field(repr=False)


def posterior_gap(A, lr, sigma, k, estimate_spectral=False,
                  estimate_iters=50, estimate_seed=None):
    """Gap-based posterior bounds from the residual norms of a rank-l SVD.

    ``sigma`` supplies the true (or padded) spectrum; the (k+1)-th
    approximated singular value comes from ``lr`` itself. Gap violations
    flag the report invalid instead of raising, since they are data
    facts a benchmark needs to record.

    Norms are exact by default; ``estimate_spectral=True`` swaps the three
    spectral norms for randomized power-method estimates (for inputs where
    exact dense norms are too expensive).
    """
    A = as_matrix(A, "A")
    if not isinstance(lr, LowRankSVD):
        raise BadShape("lr must be a LowRankSVD")
    sigma = np.asarray(sigma, dtype=np.float64)
    if lr.sigma_hat.size <= k:
        raise BadShape(f"need l > k, got l={lr.sigma_hat.size}, k={k}")
    if sigma.size < k:
        raise ShapeMismatch(f"spectrum shorter than k={k}")
    V = lr.V_hat
    resid = A - lr.approx()
    EV = resid @ V                      # [E31, E32] up to rotation
    E32 = resid @ V[:, k:]
    E33m = A - (A @ V) @ V.T
    n_fro = float(np.linalg.norm(EV))
    if estimate_spectral:
        def _est(M, salt):
            return spectral_norm_estimate(
                lambda v: M @ v, lambda w: M.T @ w, M.shape[1],
                estimate_iters,
                seed=np.random.SeedSequence([0 if estimate_seed is None
                                             else estimate_seed, salt]))
        n_spec = _est(EV, 0)
        n_e32 = _est(E32, 1)
        n_e33 = _est(E33m, 2)
    else:
        n_spec = float(np.linalg.norm(EV, 2))
        n_e32 = float(np.linalg.norm(E32, 2))
        n_e33 = float(np.linalg.norm(E33m, 2))
    s_k = float(sigma[k - 1])
    shat_k1 = float(lr.sigma_hat[k])
    valid = s_k > shat_k1 and s_k > n_e33

    gamma1 = (s_k ** 2 - shat_k1 ** 2) / s_k
    gamma2 = (s_k ** 2 - shat_k1 ** 2) / shat_k1 if shat_k1 > 0 else np.inf
    bg1 = (s_k ** 2 - n_e33 ** 2) / s_k
    bg2 = (s_k ** 2 - n_e33 ** 2) / n_e33 if n_e33 > 0 else np.inf

    def _safe(num, den):
        return float(num / den) if den > 0 else float("inf")

    uk_uk_extra = np.sqrt(1.0 + (n_e32 / gamma2) ** 2) if np.isfinite(gamma2) else 1.0
    vk_vk_extra = np.sqrt((n_e32 / gamma1) ** 2 + (n_e33 / s_k) ** 2) if gamma1 != 0 else np.inf
    bounds = {
        "Uk_Ul_fro": _safe(n_fro, bg1),
        "Uk_Ul_spec": _safe(n_spec, bg1),
        "Vk_Vl_fro": _safe(n_fro, bg2),
        "Vk_Vl_spec": _safe(n_spec, bg2),
        "Uk_Uk_fro": _safe(n_fro * uk_uk_extra, bg1),
        "Uk_Uk_spec": _safe(n_spec * uk_uk_extra, bg1),
        "Vk_Vk_fro": _safe(n_fro * vk_vk_extra, bg1),
        "Vk_Vk_spec": _safe(n_spec * vk_vk_extra, bg1),
    }

    head = sigma[:k]
    # i-th smallest angle pairs with s_i: tightest factor on the smallest
    # angle, factor 1 on the largest (arrays ascend with the sines).
    ratio = s_k / head
    base1 = _safe(n_spec, bg1)
    base2 = _safe(n_spec, bg2)
    anglewise = {
        "Uk_Ul": ratio * base1,
        "Vk_Vl": ratio * base2,
        "Uk_Uk": base1 * np.sqrt(1.0 + (ratio * _safe(n_e32, gamma2)) ** 2),
        "Vk_Vk": base1 * np.sqrt((ratio * _safe(n_e32, gamma1)) ** 2
                                 + (n_e33 / s_k) ** 2),
    }
    return PosteriorGapReport(
        valid=valid,
        norm_E3132_fro=n_fro,
        norm_E3132_spec=n_spec,
        norm_E32_spec=n_e32,
        norm_E33_spec=n_e33,
        gamma1=float(gamma1),
        gamma2=float(gamma2),
        big_gamma1=float(bg1),
        big_gamma2=float(bg2),
        bounds=bounds,
        anglewise=anglewise,
    )


@dataclass(frozen=True)
class BalanceConfig:
    """Budget/size/oversampling parameters for the balance study.

    A budget of N = alpha*k products with the matrix is split between the
    sample size l = N/(2q+1) and the iteration count q; ``gap`` is the
    spectral step sigma_1/sigma_{k+1}.
    """

    k: int
    alpha: float
    beta: float
    gamma: float
    gap: float

    def __post_init__(self):
        if self.gamma <= 1:
            raise BadShape(f"gamma must exceed 1, got {self.gamma}")
        if self.k < 1 or self.alpha <= 0 or self.beta <= 0 or self.gap <= 0:
            raise BadShape("k, alpha, beta, gap must be positive")

    @property
    def budget(self):
        return self.alpha * self.k

    @property
    def r(self):
        return int(round((1 + self.beta) * self.k))

    def max_q(self):
        """Largest q with 2q+1 <= alpha/gamma^2."""
        top = self.alpha / self.gamma ** 2
        if top < 1:
            raise InadmissibleQ(
                f"no admissible q: alpha/gamma^2 = {top:.3f} < 1"
            )
        return int((top - 1) // 2)

    def admissible_q(self):
        return list(range(self.max_q() + 1))

    def sample_size(self, q):
        """Integer l = floor(N / (2q+1)) actually usable at iteration count q."""
        return int(self.budget // (2 * q + 1))


def balance_phi(config, q):
    """The budget-balance value phi_gamma(q) in (0, 1).

    Evaluated in the closed budget form
    (1 + (alpha - gamma sqrt(alpha(2q+1))) /
         (beta(2q+1) + gamma sqrt(alpha beta (2q+1))) * gap^(4q+2))^(-1/2);
    q is admissible when 2q+1 <= alpha/gamma^2.
    """
    if q < 0 or 2 * q + 1 > config.alpha / config.gamma ** 2:
        raise InadmissibleQ(
            f"q={q} outside admissible range (2q+1 <= alpha/gamma^2 "
            f"= {config.alpha / config.gamma ** 2:.3f})"
        )
    a, b, g = config.alpha, config.beta, config.gamma
    t = 2 * q + 1
    num = a - g * np.sqrt(a * t)
    den = b * t + g * np.sqrt(a * b * t)
    return float(1.0 / np.sqrt(1.0 + (num / den) * config.gap ** (4 * q + 2)))


def balance_phi_from_l(config, q):
    """phi_gamma(q) in the sample-size form (cross-check of the identity)."""
    if q < 0 or 2 * q + 1 > config.alpha / config.gamma ** 2:
        raise InadmissibleQ(f"q={q} outside admissible range")
    l = config.budget / (2 * q + 1)
    k, g = config.k, config.gamma
    r_minus_k = config.beta * k
    eps1 = g * np.sqrt(k / l)
    eps2 = g * np.sqrt(l / r_minus_k)
    coeff = (1 - eps1) / (1 + eps2) * (l / r_minus_k)
    return float(1.0 / np.sqrt(1.0 + coeff * config.gap ** (4 * q + 2)))
