"""SVD cache, PCA and gradient-descent estimators, and oracle stopping."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sldlab.errors import DimensionError, InvariantError, StepsizeError
from sldlab.estimators import (
    GdConfig,
    INFINITY,
    default_k_grid,
    early_stopped_estimator,
    gd_estimator_closed,
    gd_estimator_iterative,
    gd_risk_profile,
    normalize_k_grid,
    pca_estimator,
    pinv_estimator,
    svd_of,
)
from sldlab.model import Dataset, ModelParams, sample_basis, sample_dataset
from sldlab.risk import risk_closed_form


def _instance(n=20, d=3, sigma=0.2, n_train=15, seed=0):
    params = ModelParams(d=d, n=n, sigma_z=sigma)
    basis = sample_basis(n, d, seed=seed)
    ds = sample_dataset(params, basis, n_train, seed=seed)
    return params, basis, ds


# --- SVD cache ----------------------------------------------------------


def test_svd_cache_reconstructs_input():
    _, _, ds = _instance(n=12, d=2, sigma=0.3, n_train=8, seed=1)
    cache = svd_of(ds)
    approx = (cache.u_y * cache.s_y) @ cache.v_y.T
    assert np.allclose(approx, ds.noisy, atol=1e-10)
    assert cache.rank == 8  # noisy matrix has full column rank
    assert np.all(np.diff(cache.s_y) <= 0)  # descending


def test_svd_cache_gram_path_matches_direct():
    # Wide + noisy triggers the Gram-eigendecomposition route; compare its
    # singular values and subspace against numpy's direct SVD.
    _, _, ds = _instance(n=15, d=3, sigma=0.4, n_train=40, seed=2)
    assert ds.n_train >= 2 * 15
    cache = svd_of(ds)
    s_ref = np.linalg.svd(ds.noisy, compute_uv=False)
    assert cache.s_y == pytest.approx(s_ref, rel=1e-9)
    # Same column space: projectors agree even if individual signs differ.
    u = cache.u_y
    u_ref = np.linalg.svd(ds.noisy, full_matrices=False)[0]
    assert np.allclose(u @ u.T, u_ref @ u_ref.T, atol=1e-8)
    # And the lazy V factor still reconstructs the data.
    assert np.allclose((cache.u_y * cache.s_y) @ cache.v_y.T, ds.noisy, atol=1e-8)


def test_svd_cache_truncates_exact_rank():
    # Noiseless data from a d-dim subspace has numerical rank exactly d.
    _, _, ds = _instance(n=20, d=3, sigma=0.0, n_train=10, seed=3)
    cache = svd_of(ds)
    assert cache.rank == 3


def test_svd_cache_matmul_v_agrees_with_materialized():
    _, _, ds = _instance(n=10, d=2, sigma=0.2, n_train=30, seed=4)
    cache = svd_of(ds)
    a = np.random.default_rng(0).standard_normal((4, 30))
    lazy = cache.matmul_v(a)
    assert np.allclose(lazy, a @ cache.v_y, atol=1e-10)


def test_svd_of_zero_matrix_raises():
    params = ModelParams(d=2, n=6, sigma_z=0.0)
    ds = Dataset(
        clean=np.zeros((6, 4)), noisy=np.zeros((6, 4)), params=params
    )
    with pytest.raises(InvariantError):
        svd_of(ds)


# --- PCA ----------------------------------------------------------------


def test_pca_estimator_rank_and_shrinkage():
    params, basis, ds = _instance(n=25, d=4, sigma=0.5, n_train=30, seed=5)
    est = pca_estimator(svd_of(ds), params)
    assert est.is_factored
    assert est.rank == 4
    assert est.scale == pytest.approx(1.0 / 1.25, abs=1e-15)


def test_pca_estimator_rank_deficient_when_starved():
    # One training column can only ever give a rank-1 projector.
    params, basis, ds = _instance(n=25, d=4, sigma=0.5, n_train=1, seed=6)
    est = pca_estimator(svd_of(ds), params)
    assert est.rank == 1
    assert risk_closed_form(est, basis, params) > 0.5  # most signal missed


def test_pca_estimator_noiseless_recovery():
    # With sigma_z = 0 and n_train >= d, PCA recovers the subspace exactly
    # and the shrinkage factor is 1, so the risk vanishes.
    params, basis, ds = _instance(n=30, d=3, sigma=0.0, n_train=6, seed=7)
    est = pca_estimator(svd_of(ds), params)
    assert risk_closed_form(est, basis, params) <= 1e-10


# --- gradient descent: filter and closed form ---------------------------


def test_gd_filter_limits_via_closed_form():
    params, basis, ds = _instance(seed=8)
    cache = svd_of(ds)
    eta = 1.0 / float(cache.s_y[0]) ** 2
    w0 = gd_estimator_closed(cache, ds.clean, GdConfig(eta=eta, k=0))
    assert np.array_equal(w0.as_matrix(), np.zeros((20, 20)))
    w_inf = gd_estimator_closed(cache, ds.clean, GdConfig(eta=eta, k=INFINITY))
    assert np.allclose(w_inf.as_matrix(), pinv_estimator(cache, ds.clean).as_matrix(), atol=1e-12)


def test_gd_risk_decreases_then_increases_along_path():
    # The profile is smooth in k: large-k overfit raises the risk again when
    # the noise is strong enough, so min over the grid is interior.
    params, basis, ds = _instance(n=40, d=3, sigma=0.5, n_train=35, seed=9)
    cache = svd_of(ds)
    eta = 1.0 / float(cache.s_y[0]) ** 2
    grid = normalize_k_grid(default_k_grid())
    risks = gd_risk_profile(cache, ds.clean, basis, params, eta, grid)
    best = int(np.argmin(risks))
    assert 0 < best < len(grid) - 1
    assert risks[best] < risks[0] and risks[best] < risks[-1]


def test_gd_closed_matches_iterative():
    rng = np.random.default_rng(10)
    for trial in range(5):
        n = int(rng.integers(8, 30))
        d = int(rng.integers(1, 5))
        n_train = int(rng.integers(d, 25))
        sigma = float(rng.uniform(0.05, 0.6))
        k = int(rng.integers(1, 200))
        params = ModelParams(d=d, n=n, sigma_z=sigma)
        basis = sample_basis(n, d, seed=100 + trial)
        ds = sample_dataset(params, basis, n_train, seed=200 + trial)
        cache = svd_of(ds)
        eta = 1.0 / float(cache.s_y[0]) ** 2
        cfg = GdConfig(eta=eta, k=k)
        w_closed = gd_estimator_closed(cache, ds.clean, cfg).as_matrix()
        w_iter = gd_estimator_iterative(ds, cfg).as_matrix()
        denom = max(np.linalg.norm(w_iter), 1e-300)
        assert np.linalg.norm(w_closed - w_iter) / denom <= 1e-8


def test_gd_iterative_guards():
    _, _, ds = _instance(seed=11)
    with pytest.raises(DimensionError):
        gd_estimator_iterative(ds, GdConfig(eta=1e-3, k=501))
    with pytest.raises(DimensionError):
        gd_estimator_iterative(ds, GdConfig(eta=1e-3, k=INFINITY))


def test_gd_stepsize_bound_enforced():
    params, basis, ds = _instance(seed=12)
    cache = svd_of(ds)
    top = float(cache.s_y[0])
    # Saturating the bound is allowed...
    gd_estimator_closed(cache, ds.clean, GdConfig(eta=1.0 / top**2, k=4))
    # ...exceeding it is not.
    with pytest.raises(StepsizeError):
        gd_estimator_closed(cache, ds.clean, GdConfig(eta=1.5 / top**2, k=4))
    with pytest.raises(StepsizeError):
        GdConfig(eta=0.0, k=4)
    with pytest.raises(DimensionError):
        GdConfig(eta=1e-3, k=-1)
    with pytest.raises(DimensionError):
        GdConfig(eta=1e-3, k=2.5)


def test_gd_iterative_divergence_detected():
    # A stepsize far above the stability bound makes the iterates blow up;
    # the reference loop must notice rather than return NaNs.
    from sldlab.errors import DivergenceError

    _, _, ds = _instance(n=10, d=2, sigma=0.3, n_train=8, seed=13)
    cache = svd_of(ds)
    eta = 50.0 / float(cache.s_y[0]) ** 2
    with pytest.raises(DivergenceError):
        gd_estimator_iterative(ds, GdConfig(eta=eta, k=400))


# --- risk profile -------------------------------------------------------


def test_profile_matches_materialized_risks():
    params, basis, ds = _instance(n=30, d=4, sigma=0.3, n_train=20, seed=14)
    cache = svd_of(ds)
    eta = 0.7 / float(cache.s_y[0]) ** 2
    grid = (0, 1, 2, 8, 64, 1024, INFINITY)
    profile = gd_risk_profile(cache, ds.clean, basis, params, eta, grid)
    for k, expected in zip(grid, profile):
        w = gd_estimator_closed(cache, ds.clean, GdConfig(eta=eta, k=k))
        assert risk_closed_form(w, basis, params) == pytest.approx(expected, abs=1e-10)


def test_profile_general_fallback_matches_fast_path():
    # Feed a clean matrix that does NOT lie in span(U): only the general
    # branch applies, and it must agree with densified risk evaluation.
    params, basis, ds = _instance(n=15, d=2, sigma=0.4, n_train=10, seed=15)
    cache = svd_of(ds)
    eta = 1.0 / float(cache.s_y[0]) ** 2
    off_span = ds.clean + 0.3 * np.random.default_rng(1).standard_normal(ds.clean.shape)
    grid = (1, 16, 256, INFINITY)
    profile = gd_risk_profile(cache, off_span, basis, params, eta, grid)
    for k, expected in zip(grid, profile):
        w = gd_estimator_closed(cache, off_span, GdConfig(eta=eta, k=k))
        assert risk_closed_form(w, basis, params) == pytest.approx(expected, abs=1e-10)


def test_profile_rejects_mismatched_shapes():
    params, basis, ds = _instance(seed=16)
    cache = svd_of(ds)
    with pytest.raises(DimensionError):
        gd_risk_profile(cache, ds.clean[:, :-1], basis, params, 1e-3, (1,))


# --- oracle early stopping ----------------------------------------------


def test_early_stopping_is_grid_argmin():
    params, basis, ds = _instance(n=35, d=3, sigma=0.4, n_train=30, seed=17)
    cache = svd_of(ds)
    est, k_opt = early_stopped_estimator(cache, ds.clean, basis, params)
    risk_opt = risk_closed_form(est, basis, params)
    grid = normalize_k_grid(default_k_grid())
    profile = gd_risk_profile(
        cache, ds.clean, basis, params, 1.0 / float(cache.s_y[0]) ** 2, grid
    )
    assert risk_opt == pytest.approx(float(np.min(profile)), abs=1e-12)
    assert k_opt in grid
    # Oracle dominance: no grid iterate, including the converged one, wins.
    assert np.all(profile >= risk_opt - 1e-12)


def test_early_stopping_noiseless_reaches_zero_risk():
    # Without noise there is no overfitting penalty: the profile decreases
    # all the way to the pseudoinverse, and once the filter saturates the
    # remaining grid entries (including k = INFINITY) tie at zero risk.
    params, basis, ds = _instance(n=25, d=3, sigma=0.0, n_train=12, seed=18)
    cache = svd_of(ds)
    est, k_opt = early_stopped_estimator(cache, ds.clean, basis, params)
    assert risk_closed_form(est, basis, params) <= 1e-12
    eta = 1.0 / float(cache.s_y[0]) ** 2
    grid = normalize_k_grid(default_k_grid())
    profile = gd_risk_profile(cache, ds.clean, basis, params, eta, grid)
    assert profile[-1] <= 1e-12  # the converged endpoint is (numerically) exact
    assert np.all(np.diff(profile) <= 1e-12)  # and the path only improves


def test_early_stopping_breaks_ties_toward_smaller_k():
    # k=0 gives W=0; duplicating grid entries must not change the answer and
    # equal-risk entries resolve to the smaller iteration count.
    params, basis, ds = _instance(n=20, d=2, sigma=0.3, n_train=10, seed=19)
    cache = svd_of(ds)
    _, k_a = early_stopped_estimator(cache, ds.clean, basis, params, k_grid=(7, 7, 7))
    assert k_a == 7
    _, k_b = early_stopped_estimator(cache, ds.clean, basis, params, k_grid=(INFINITY, 9, 9))
    assert k_b in (9, INFINITY)
    profile = gd_risk_profile(
        cache, ds.clean, basis, params, 1.0 / float(cache.s_y[0]) ** 2, (9, INFINITY)
    )
    if profile[0] <= profile[1]:
        assert k_b == 9


def test_normalize_k_grid():
    assert normalize_k_grid([4, 0, 4, INFINITY, 2]) == (0, 2, 4, INFINITY)
    with pytest.raises(DimensionError):
        normalize_k_grid([])
    with pytest.raises(DimensionError):
        normalize_k_grid([-1])
    with pytest.raises(DimensionError):
        normalize_k_grid([1.5])
    with pytest.raises(DimensionError):
        normalize_k_grid([float("-inf")])


def test_default_k_grid_shape():
    grid = default_k_grid()
    assert grid[0] == 0
    assert grid[-1] == INFINITY
    assert grid[1:-1] == tuple(2**j for j in range(21))
    assert len(grid) == 23
