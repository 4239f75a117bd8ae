"""Linear subspace signal model and its core data types.

Signals live on an unknown d-dimensional subspace of R^n: a clean sample is
x = U c with U an n x d orthonormal basis and c ~ N(0, I_d); the observation
is y = x + z with isotropic Gaussian noise z ~ N(0, sigma_z^2 I_n).  This
module owns the parameter/data containers, the samplers, and the
risk-optimal linear denoiser for that model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EmptyDataError, InvariantError
from .rng import stream

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Problem dimensions and noise level.

    d        -- subspace (signal) dimension, 1 <= d < n
    n        -- ambient dimension
    sigma_z  -- noise standard deviation, >= 0
    """

    d: int
    n: int
    sigma_z: float

    def __post_init__(self) -> None:
        if not (isinstance(self.d, (int, np.integer)) and isinstance(self.n, (int, np.integer))):
            raise DimensionError(f"d and n must be integers, got d={self.d!r}, n={self.n!r}")
        if not 1 <= self.d < self.n:
            raise DimensionError(f"d must satisfy 1 <= d < n, got d={self.d}, n={self.n}")
        if not np.isfinite(self.sigma_z) or self.sigma_z < 0:
            raise DimensionError(f"sigma_z must be finite and >= 0, got sigma_z={self.sigma_z}")


@dataclass(eq=False)
class SubspaceBasis:
    """Orthonormal basis U (n x d, d < n) of the signal subspace."""

    matrix: np.ndarray
    basis_id: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise DimensionError(f"basis matrix must be 2-D, got shape {m.shape}")
        n, d = m.shape
        if not 1 <= d < n:
            raise DimensionError(f"basis must be n x d with 1 <= d < n, got shape {m.shape}")
        _check_orthonormal(m, "basis")
        self.matrix = m
        if not self.basis_id:
            self.basis_id = f"basis-sha1-{_content_digest(m)}"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


@dataclass(eq=False)
class Dataset:
    """Paired clean/noisy sample matrices, columns are samples.

    clean    -- n x N matrix X whose columns lie in the signal subspace
    noisy    -- n x N matrix Y = X + Z
    params   -- the ModelParams the data was drawn under
    basis_id -- identifier of the SubspaceBasis used
    seed     -- seed the dataset was drawn from
    """

    clean: np.ndarray
    noisy: np.ndarray
    params: ModelParams
    basis_id: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        x = np.asarray(self.clean, dtype=float)
        y = np.asarray(self.noisy, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise DimensionError(f"clean/noisy must be 2-D, got {x.shape} and {y.shape}")
        if x.shape != y.shape:
            raise DimensionError(f"clean and noisy shapes differ: {x.shape} vs {y.shape}")
        if x.shape[0] != self.params.n:
            raise DimensionError(
                f"rows must equal params.n={self.params.n}, got {x.shape[0]}"
            )
        if x.shape[1] == 0:
            raise EmptyDataError("dataset has zero columns (N = 0)")
        self.clean = x
        self.noisy = y

    @property
    def n_train(self) -> int:
        return self.clean.shape[1]

    def validate(self, basis: SubspaceBasis) -> None:
        """Check the clean columns actually lie in span(basis)."""
        if basis.matrix.shape[0] != self.clean.shape[0]:
            raise DimensionError(
                f"basis rows {basis.matrix.shape[0]} != dataset rows {self.clean.shape[0]}"
            )
        u = basis.matrix
        resid = self.clean - u @ (u.T @ self.clean)
        scale = max(float(np.linalg.norm(self.clean)), 1e-300)
        rel = float(np.linalg.norm(resid)) / scale
        if rel > 1e-8:
            raise InvariantError(
                f"clean columns leave the subspace: relative residual {rel:.3e}"
            )
        if not np.all(np.isfinite(self.noisy)):
            raise InvariantError("noisy matrix contains non-finite entries")


@dataclass(eq=False)
class LinearEstimator:
    """An n x n linear map W, stored dense or in factored form s * B B^T.

    The factored form keeps the scale s and an orthonormal n x r matrix B;
    it is preferred whenever the estimator is a scaled projection because
    risk evaluation and application are then O(n r) per sample instead of
    O(n^2).
    """

    dense: np.ndarray | None = None
    scale: float | None = None
    basis: np.ndarray | None = None

    # --- constructors -------------------------------------------------

    @classmethod
    def from_dense(cls, w: np.ndarray) -> "LinearEstimator":
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError(f"dense estimator must be square, got shape {w.shape}")
        return cls(dense=w)

    @classmethod
    def scaled_projection(cls, scale: float, basis: np.ndarray) -> "LinearEstimator":
        b = np.asarray(basis, dtype=float)
        if b.ndim != 2 or b.shape[1] > b.shape[0]:
            raise DimensionError(f"projection basis must be n x r with r <= n, got {b.shape}")
        if b.shape[1] == 0:
            raise DimensionError("projection basis has zero columns")
        if not np.isfinite(scale):
            raise DimensionError(f"scale must be finite, got {scale}")
        _check_orthonormal(b, "projection basis")
        return cls(scale=float(scale), basis=b)

    def __post_init__(self) -> None:
        if (self.dense is None) == (self.scale is None or self.basis is None):
            raise DimensionError(
                "estimator must be either dense or (scale, basis), not both/neither"
            )

    # --- queries ------------------------------------------------------

    @property
    def is_factored(self) -> bool:
        return self.dense is None

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0] if self.is_factored else self.dense.shape[0]

    @property
    def rank(self) -> int:
        """Rank of the factored form; dense maps report full ambient size."""
        return self.basis.shape[1] if self.is_factored else self.dense.shape[0]

    def as_matrix(self) -> np.ndarray:
        """Materialize W as a dense n x n array."""
        if not self.is_factored:
            return self.dense
        return self.scale * (self.basis @ self.basis.T)

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Compute W @ y without densifying a factored W."""
        y = np.asarray(y, dtype=float)
        rows = y.shape[0]
        if rows != self.ambient_dim:
            raise DimensionError(
                f"estimator acts on R^{self.ambient_dim}, got input with {rows} rows"
            )
        if self.is_factored:
            return self.scale * (self.basis @ (self.basis.T @ y))
        return self.dense @ y


# --- samplers ----------------------------------------------------------


def sample_basis(n: int, d: int, seed: int) -> SubspaceBasis:
    """Draw a uniformly random orthonormal n x d basis, deterministically.

    QR of a standard Gaussian matrix with the sign ambiguity removed by
    forcing the diagonal of R positive, which makes the decomposition (and
    hence the returned basis) unique and repeat-call identical.
    """
    if not 1 <= d < n:
        raise DimensionError(f"need 1 <= d < n, got d={d}, n={n}")
    g = stream(seed, "basis").standard_normal((n, d))
    q, r = np.linalg.qr(g, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    return SubspaceBasis(matrix=q, basis_id=f"qr-gauss:n={n}:d={d}:seed={seed}")


def sample_dataset(
    params: ModelParams, basis: SubspaceBasis, n_train: int, seed: int
) -> Dataset:
    """Draw N paired (clean, noisy) columns from the model.

    Coefficients and noise come from independent named streams of the same
    seed, so changing sigma_z rescales the identical noise draw rather than
    producing an unrelated dataset.
    """
    if basis.matrix.shape != (params.n, params.d):
        raise DimensionError(
            f"basis shape {basis.matrix.shape} does not match params (n={params.n}, d={params.d})"
        )
    if n_train < 1:
        raise EmptyDataError(f"n_train must be >= 1, got {n_train}")
    coeff = stream(seed, "coeff").standard_normal((params.d, n_train))
    clean = basis.matrix @ coeff
    if params.sigma_z > 0:
        noise = stream(seed, "noise").standard_normal((params.n, n_train))
        noisy = clean + params.sigma_z * noise
    else:
        noisy = clean.copy()
    return Dataset(clean=clean, noisy=noisy, params=params,
                   basis_id=basis.basis_id, seed=seed)


# --- the optimal linear denoiser ----------------------------------------


def optimal_estimator(basis: SubspaceBasis, params: ModelParams) -> LinearEstimator:
    """Risk-minimizing linear map: shrunken projection U U^T / (1 + sigma_z^2)."""
    if basis.matrix.shape != (params.n, params.d):
        raise DimensionError(
            f"basis shape {basis.matrix.shape} does not match params (n={params.n}, d={params.d})"
        )
    s = 1.0 / (1.0 + params.sigma_z**2)
    return LinearEstimator.scaled_projection(s, basis.matrix)


def optimal_risk(params: ModelParams) -> float:
    """Risk of the optimal estimator: sigma_z^2 / (1 + sigma_z^2).

    This is the noise floor no linear map can beat; it is independent of
    both dimensions.
    """
    s2 = params.sigma_z**2
    return s2 / (1.0 + s2)


# --- helpers ------------------------------------------------------------


def _check_orthonormal(m: np.ndarray, what: str) -> None:
    gram = m.T @ m
    err = float(np.max(np.abs(gram - np.eye(m.shape[1]))))
    if err > _ORTHO_TOL:
        raise InvariantError(f"{what} is not orthonormal: max |B^T B - I| = {err:.3e}")


def _content_digest(m: np.ndarray) -> str:
    import hashlib

    return hashlib.sha1(np.ascontiguousarray(m).tobytes()).hexdigest()[:12]
