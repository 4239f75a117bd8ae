"""Data-driven denoisers: PCA projection and gradient-descent regression.

Both families are functions of the thin SVD of the noisy training matrix
Y = U_y diag(S_y) V_y^T, so the decomposition is computed once per dataset
and shared through :class:`SvdCache`.

Gradient descent on the regression loss L(W) = ||W Y - X||_F^2 from W = 0
admits a closed form after k steps:

    W^k = X V_y D_k U_y^T,   D_k[i] = (1 - (1 - eta S_y[i]^2)^k) / S_y[i],

valid for stepsizes with eta * S_y[0]^2 <= 1.  As k -> infinity the filter
tends to 1 / S_y[i] and W^k converges to the least-squares solution
X Y^+ (the pseudoinverse estimator); early stopping keeps the filter from
inverting the small, noise-dominated singular values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, DivergenceError, InvariantError, StepsizeError
from .model import Dataset, LinearEstimator, ModelParams, SubspaceBasis

#: Distinguished iteration count meaning "run gradient descent to convergence".
INFINITY: float = math.inf

_STEPSIZE_SLACK = 1e-12  # fp slack so the default eta = 1/S[0]^2 passes its own check
_MAX_ITERATIVE_K = 500


# =====================================================================
# SVD cache
# =====================================================================


@dataclass(eq=False)
class SvdCache:
    """Thin SVD of a noisy training matrix, with V_y materialized lazily.

    u_y      -- n x r left singular vectors
    s_y      -- r retained singular values, descending, all >= rank_tol
    rank_tol -- truncation threshold max(n, N) * eps * S_y[0]
    """

    u_y: np.ndarray
    s_y: np.ndarray
    rank_tol: float
    _noisy: np.ndarray = field(repr=False)
    _v_y: np.ndarray | None = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return int(self.s_y.size)

    @property
    def shape(self) -> tuple[int, int]:
        return self._noisy.shape

    @property
    def v_y(self) -> np.ndarray:
        """N x r right singular vectors (computed on first access)."""
        if self._v_y is None:
            self._v_y = (self._noisy.T @ self.u_y) / self.s_y
        return self._v_y

    def matmul_v(self, a: np.ndarray) -> np.ndarray:
        """Return ``a @ v_y`` without forcing v_y to materialize.

        Uses a @ Y^T @ U_y / S_y, which for a short-and-wide Y is much
        cheaper than building the N x r factor first.
        """
        if self._v_y is not None:
            return a @ self._v_y
        return ((a @ self._noisy.T) @ self.u_y) / self.s_y


def svd_of(dataset: Dataset) -> SvdCache:
    """Thin SVD of the noisy matrix, truncated at numerical rank.

    For wide, noisy matrices (N >= 2n and sigma_z > 0) the singular pairs
    come from an eigendecomposition of the n x n Gram matrix Y Y^T, which
    is an order of magnitude faster than a direct SVD at these aspect
    ratios; the noise keeps the whole spectrum far above the truncation
    threshold, so the squared conditioning of the Gram route is harmless
    there.  Every other case (including exactly rank-deficient sigma_z = 0
    data) takes the direct SVD.
    """
    y = dataset.noisy
    n, n_train = y.shape
    eps = float(np.finfo(y.dtype).eps)
    if n_train >= 2 * n and dataset.params.sigma_z > 0:
        gram = y @ y.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.arange(n - 1, -1, -1)
        s = np.sqrt(np.clip(evals[order], 0.0, None))
        u = np.ascontiguousarray(evecs[:, order])
        v: np.ndarray | None = None
    else:
        u, s, vt = np.linalg.svd(y, full_matrices=False)
        v = vt.T
    if s.size == 0 or s[0] <= 0.0:
        raise InvariantError("training matrix is identically zero; no singular directions")
    rank_tol = max(n, n_train) * eps * float(s[0])
    r = int(np.count_nonzero(s >= rank_tol))
    return SvdCache(
        u_y=np.ascontiguousarray(u[:, :r]),
        s_y=s[:r].copy(),
        rank_tol=rank_tol,
        _noisy=y,
        _v_y=None if v is None else np.ascontiguousarray(v[:, :r]),
    )


# =====================================================================
# PCA estimator
# =====================================================================


def pca_estimator(cache: SvdCache, params: ModelParams) -> LinearEstimator:
    """Shrunken projector onto the top-d empirical singular directions.

    Uses min(d, rank) directions, so with fewer than d training columns the
    projector is simply rank-deficient rather than an error.
    """
    r_use = min(params.d, cache.rank)
    shrink = 1.0 / (1.0 + params.sigma_z**2)
    return LinearEstimator.scaled_projection(shrink, cache.u_y[:, :r_use])


# =====================================================================
# Gradient descent family
# =====================================================================


@dataclass(frozen=True)
class GdConfig:
    """Stepsize and iteration count for gradient descent.

    k may be a nonnegative integer or INFINITY (run to convergence).
    """

    eta: float
    k: int | float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise StepsizeError(f"eta must be finite and > 0, got {self.eta}")
        k = self.k
        k_ok = (isinstance(k, (int, np.integer)) and k >= 0) or (
            isinstance(k, float) and math.isinf(k) and k > 0
        )
        if not k_ok:
            raise DimensionError(f"k must be a nonnegative integer or INFINITY, got {k!r}")


def default_k_grid() -> tuple[int | float, ...]:
    """Iteration grid {0, 1, 2, 4, ..., 2^20, INFINITY}.

    Geometric spacing brackets any optimal stopping time within a factor of
    two at 23 risk evaluations.
    """
    return (0, *(2**j for j in range(21)), INFINITY)


def _check_stepsize(eta: float, s_y: np.ndarray) -> None:
    top = float(s_y[0]) if s_y.size else 0.0
    if eta * top * top > 1.0 + _STEPSIZE_SLACK:
        raise StepsizeError(
            f"eta * S_y[0]^2 = {eta * top * top:.6g} exceeds the stability bound 1"
        )


def _gd_filter(s_y: np.ndarray, eta: float, k: int | float) -> np.ndarray:
    """Spectral filter D_k applied to each retained singular value."""
    if isinstance(k, float) and math.isinf(k):
        return 1.0 / s_y
    if k == 0:
        return np.zeros_like(s_y)
    base = 1.0 - eta * s_y * s_y
    return (1.0 - base ** int(k)) / s_y


def gd_estimator_closed(cache: SvdCache, clean: np.ndarray, cfg: GdConfig) -> LinearEstimator:
    """W^k = X V_y D_k U_y^T, materialized dense.

    ``clean`` is the training signal matrix X (n x N) the regression
    targets; it must have as many columns as the cached decomposition.
    """
    clean = np.asarray(clean, dtype=float)
    n, n_train = cache.shape
    if clean.shape != (n, n_train):
        raise DimensionError(
            f"clean matrix shape {clean.shape} does not match training data {(n, n_train)}"
        )
    _check_stepsize(cfg.eta, cache.s_y)
    if (isinstance(cfg.k, (int, np.integer)) and cfg.k == 0) or cache.rank == 0:
        return LinearEstimator.from_dense(np.zeros((n, n)))
    d_k = _gd_filter(cache.s_y, cfg.eta, cfg.k)
    g = cache.matmul_v(clean)  # n x r
    return LinearEstimator.from_dense((g * d_k) @ cache.u_y.T)


def gd_estimator_iterative(dataset: Dataset, cfg: GdConfig) -> LinearEstimator:
    """Reference implementation: k explicit gradient steps from W = 0.

    One step is W <- W + eta (X - W Y) Y^T.  Kept deliberately naive (dense
    n x n iterate, k <= 500) as the ground truth the closed form is checked
    against.
    """
    if not isinstance(cfg.k, (int, np.integer)):
        raise DimensionError("iterative reference requires a finite integer k")
    if cfg.k > _MAX_ITERATIVE_K:
        raise DimensionError(
            f"iterative reference is limited to k <= {_MAX_ITERATIVE_K}, got {cfg.k}"
        )
    x, y = dataset.clean, dataset.noisy
    n = x.shape[0]
    w = np.zeros((n, n))
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
        for step in range(int(cfg.k)):
            w = w + cfg.eta * (x - w @ y) @ y.T
            if not np.all(np.isfinite(w)):
                raise DivergenceError(f"gradient descent diverged at step {step + 1}")
    return LinearEstimator.from_dense(w)


def pinv_estimator(cache: SvdCache, clean: np.ndarray) -> LinearEstimator:
    """Converged estimator X Y^+ (gradient descent run to k = INFINITY)."""
    clean = np.asarray(clean, dtype=float)
    n, n_train = cache.shape
    if clean.shape != (n, n_train):
        raise DimensionError(
            f"clean matrix shape {clean.shape} does not match training data {(n, n_train)}"
        )
    g = cache.matmul_v(clean)
    return LinearEstimator.from_dense((g / cache.s_y) @ cache.u_y.T)


# =====================================================================
# Risk along the gradient-descent path, and oracle early stopping
# =====================================================================


def gd_risk_profile(
    cache: SvdCache,
    clean: np.ndarray,
    basis: SubspaceBasis,
    params: ModelParams,
    eta: float,
    k_grid: Sequence[int | float],
) -> np.ndarray:
    """Exact risk of W^k for every k in ``k_grid``, without densifying W^k.

    Writing G = X V_y, the three ingredients of the closed-form risk are
    quadratic forms in the r x r Gram G^T G, the overlaps G^T U, and
    U_y^T U, each built once; every additional k then costs O(r d^2).
    When X lies in span(U) -- always true for model-drawn data -- G = U B
    with the d x r matrix B = (U^T X) V_y, which shrinks the Gram work to
    O(r^2 d) and never touches an n x r intermediate.
    """
    clean = np.asarray(clean, dtype=float)
    u = basis.matrix
    n, n_train = cache.shape
    if clean.shape != (n, n_train):
        raise DimensionError(
            f"clean matrix shape {clean.shape} does not match training data {(n, n_train)}"
        )
    if u.shape[0] != n:
        raise DimensionError(f"basis has {u.shape[0]} rows, expected {n}")
    _check_stepsize(eta, cache.s_y)

    d = params.d
    sig2 = params.sigma_z**2
    m = cache.u_y.T @ u  # r x d

    coords = u.T @ clean  # d x N
    resid = clean - u @ coords
    if float(np.linalg.norm(resid)) <= 1e-8 * max(float(np.linalg.norm(clean)), 1e-300):
        b = cache.matmul_v(coords)  # d x r; G = U @ b
        gram = b.T @ b  # r x r
        h = b.T  # G^T U = b^T (U^T U) = b^T
    else:
        g = clean @ cache.v_y  # general fallback, n x r
        gram = g.T @ g
        h = g.T @ u
    diag_gram = np.diagonal(gram).copy()

    risks = np.empty(len(k_grid))
    for i, k in enumerate(k_grid):
        d_k = _gd_filter(cache.s_y, eta, k)
        e = m * d_k[:, None]
        fit = float(np.sum(e * (gram @ e)))  # ||G D_k M||_F^2
        cross = float(np.sum(d_k * np.einsum("ij,ij->i", m, h)))  # <G D_k M, U>
        w_norm2 = float(np.sum(d_k * d_k * diag_gram))  # ||W^k||_F^2
        risks[i] = (fit - 2.0 * cross + d) / d + sig2 * w_norm2 / d
    return risks


def normalize_k_grid(k_grid: Sequence[int | float]) -> tuple[int | float, ...]:
    """Validate, sort ascending, and deduplicate an iteration grid."""
    cleaned: list[int | float] = []
    for k in k_grid:
        if isinstance(k, float) and math.isinf(k) and k > 0:
            cleaned.append(INFINITY)
        elif isinstance(k, (int, np.integer)) and k >= 0:
            cleaned.append(int(k))
        else:
            raise DimensionError(f"iteration counts must be nonnegative ints or INFINITY, got {k!r}")
    if not cleaned:
        raise DimensionError("iteration grid is empty")
    return tuple(sorted(set(cleaned)))


def early_stopped_estimator(
    cache: SvdCache,
    clean: np.ndarray,
    basis: SubspaceBasis,
    params: ModelParams,
    k_grid: Sequence[int | float] | None = None,
    eta: float | None = None,
) -> tuple[LinearEstimator, int | float]:
    """Pick the risk-minimizing stopping time on the grid (oracle stopping).

    The exact closed-form risk under the true basis is evaluated at every k
    and the argmin is returned, ties resolved toward the smaller k.  The
    default stepsize eta = 1 / S_y[0]^2 saturates the stability bound.
    """
    grid = normalize_k_grid(default_k_grid() if k_grid is None else k_grid)
    if eta is None:
        eta = 1.0 / float(cache.s_y[0]) ** 2
    risks = gd_risk_profile(cache, clean, basis, params, eta, grid)
    k_opt = grid[int(np.argmin(risks))]
    if isinstance(k_opt, float) and math.isinf(k_opt):
        return pinv_estimator(cache, clean), k_opt
    return gd_estimator_closed(cache, clean, GdConfig(eta=eta, k=k_opt)), k_opt
