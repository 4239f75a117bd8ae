"""Power-law fitting in log-log space: single, floor-subtracted, segmented.

A power law value = beta * size^alpha is a line in (log size, log value),
so fitting is ordinary least squares on the logs (natural log throughout).
The excess variant subtracts a known risk floor before taking logs, which
turns floor-plus-power-law curves back into straight lines; the segmented
variant searches every admissible breakpoint for the best two-line fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FitDomainError, InsufficientDataError


@dataclass(frozen=True)
class PowerLawFit:
    """OLS fit of log(value) = log_beta + alpha * log(size).

    region is the half-open index range of the input that was fit;
    n_points counts the points actually used (after any floor drops) and
    n_dropped the points discarded as at-or-below the floor.  floor is the
    subtracted offset (None for plain fits).
    """

    alpha: float
    log_beta: float
    r_squared: float
    sse: float
    region: tuple[int, int]
    n_points: int
    n_dropped: int = 0
    floor: float | None = None


@dataclass(frozen=True)
class SegmentedFit:
    """Two power laws split at one breakpoint.

    break_index is the number of points in the left segment (indices are
    relative to the points the search ran on, i.e. after floor drops);
    break_size is the geometric mean of the sizes adjacent to the split.
    breakpoint_evidence is False when the two-segment fit improves the
    single-fit SSE by less than 5%.
    """

    left: PowerLawFit
    right: PowerLawFit
    break_index: int
    break_size: float
    total_sse: float
    single_sse: float
    breakpoint_evidence: bool


# =====================================================================
# Input preparation
# =====================================================================


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FitDomainError(f"points must be an (m, 2) array of (size, value), got shape {pts.shape}")
    return pts


def _check_region(region: tuple[int, int] | None, m: int) -> tuple[int, int]:
    if region is None:
        return (0, m)
    lo, hi = int(region[0]), int(region[1])
    if not (0 <= lo < hi <= m):
        raise FitDomainError(f"region {region} out of bounds for {m} points")
    return (lo, hi)


def _check_positive(sizes: np.ndarray, values: np.ndarray, offset: int) -> None:
    bad = np.nonzero((sizes <= 0) | ~np.isfinite(sizes) | (values <= 0) | ~np.isfinite(values))[0]
    if bad.size:
        idx = ", ".join(str(int(b) + offset) for b in bad[:8])
        more = "" if bad.size <= 8 else f" (+{bad.size - 8} more)"
        raise FitDomainError(
            f"log-log fit needs positive finite sizes and values; offending indices: {idx}{more}"
        )
    if np.unique(sizes).size != sizes.size:
        raise FitDomainError("duplicate sizes in fit input")


# =====================================================================
# Fits
# =====================================================================


def fit_powerlaw(
    points,
    region: tuple[int, int] | None = None,
    weights: np.ndarray | None = None,
) -> PowerLawFit:
    """Unweighted (default) OLS power-law fit over points[region].

    ``weights`` optionally weights the squared log-residuals, e.g. by
    inverse error-bar variance; indices align with the full input.
    """
    pts = _as_points(points)
    lo, hi = _check_region(region, pts.shape[0])
    sizes, values = pts[lo:hi, 0], pts[lo:hi, 1]
    if sizes.size < 2:
        raise InsufficientDataError(f"need at least 2 points to fit, got {sizes.size}")
    _check_positive(sizes, values, offset=lo)
    if weights is None:
        w = np.ones_like(sizes)
    else:
        w = np.asarray(weights, dtype=float)[lo:hi]
        if w.shape != sizes.shape or np.any(~np.isfinite(w) | (w <= 0)):
            raise FitDomainError("weights must be positive, finite, and aligned with points")

    lx, lv = np.log(sizes), np.log(values)
    x_bar = float(np.average(lx, weights=w))
    v_bar = float(np.average(lv, weights=w))
    sxx = float(np.sum(w * (lx - x_bar) ** 2))
    if sxx <= 0.0:
        raise FitDomainError("sizes are not distinct after log transform")
    alpha = float(np.sum(w * (lx - x_bar) * (lv - v_bar))) / sxx
    log_beta = v_bar - alpha * x_bar
    resid = lv - (log_beta + alpha * lx)
    sse = float(np.sum(w * resid**2))
    sst = float(np.sum(w * (lv - v_bar) ** 2))
    r_squared = 1.0 if sst <= 0.0 else max(0.0, min(1.0, 1.0 - sse / sst))
    return PowerLawFit(
        alpha=alpha,
        log_beta=log_beta,
        r_squared=r_squared,
        sse=sse,
        region=(lo, hi),
        n_points=int(sizes.size),
    )


def fit_excess_powerlaw(
    points,
    floor: float,
    region: tuple[int, int] | None = None,
    weights: np.ndarray | None = None,
) -> PowerLawFit:
    """Fit value - floor against size, dropping points at or below the floor.

    Points whose excess is within 1e-12 * max(value) of zero carry no
    usable log-scale information and are dropped; the count is recorded on
    the returned fit.
    """
    if not (np.isfinite(floor) and floor >= 0.0):
        raise FitDomainError(f"floor must be finite and >= 0, got {floor}")
    pts = _as_points(points)
    lo, hi = _check_region(region, pts.shape[0])
    sizes, values = pts[lo:hi, 0], pts[lo:hi, 1]
    if sizes.size < 2:
        raise InsufficientDataError(f"need at least 2 points to fit, got {sizes.size}")
    excess = values - floor
    drop_tol = 1e-12 * float(np.max(values)) if values.size else 0.0
    keep = excess > drop_tol
    n_dropped = int(np.count_nonzero(~keep))
    if np.count_nonzero(keep) < 2:
        raise InsufficientDataError(
            f"only {int(np.count_nonzero(keep))} points remain above the floor {floor:g}"
        )
    kept = np.column_stack([sizes[keep], excess[keep]])
    w = None if weights is None else np.asarray(weights, dtype=float)[lo:hi][keep]
    base = fit_powerlaw(kept, weights=w)
    return PowerLawFit(
        alpha=base.alpha,
        log_beta=base.log_beta,
        r_squared=base.r_squared,
        sse=base.sse,
        region=(lo, hi),
        n_points=base.n_points,
        n_dropped=n_dropped,
        floor=float(floor),
    )


def fit_segmented(
    points,
    min_seg: int = 3,
    floor: float | None = None,
) -> SegmentedFit:
    """Exhaustive best two-segment power-law fit with >= min_seg points a side.

    Points must be sorted by size.  The breakpoint minimizing total SSE
    wins; ties go to the earliest break.  With a floor given, sub-floor
    points are dropped before the search exactly as in
    :func:`fit_excess_powerlaw`.
    """
    if min_seg < 2:
        raise InsufficientDataError(f"min_seg must be >= 2, got {min_seg}")
    pts = _as_points(points)
    if np.any(np.diff(pts[:, 0]) <= 0):
        raise FitDomainError("points must be sorted by strictly ascending size")
    n_dropped = 0
    floor_val: float | None = None
    if floor is not None:
        if not (np.isfinite(floor) and floor >= 0.0):
            raise FitDomainError(f"floor must be finite and >= 0, got {floor}")
        floor_val = float(floor)
        excess = pts[:, 1] - floor_val
        drop_tol = 1e-12 * float(np.max(pts[:, 1]))
        keep = excess > drop_tol
        n_dropped = int(np.count_nonzero(~keep))
        pts = np.column_stack([pts[keep, 0], excess[keep]])
    m = pts.shape[0]
    if m < 2 * min_seg:
        raise InsufficientDataError(
            f"need at least 2*min_seg = {2 * min_seg} usable points, got {m}"
        )

    single = fit_powerlaw(pts)
    best_b = -1
    best_sse = math.inf
    best_pair: tuple[PowerLawFit, PowerLawFit] | None = None
    for b in range(min_seg, m - min_seg + 1):
        left = fit_powerlaw(pts, region=(0, b))
        right = fit_powerlaw(pts, region=(b, m))
        total = left.sse + right.sse
        if total < best_sse:
            best_sse = total
            best_b = b
            best_pair = (left, right)
    assert best_pair is not None
    left, right = best_pair
    if floor_val is not None:
        left = _with_floor(left, floor_val, n_dropped)
        right = _with_floor(right, floor_val, n_dropped)
    improvement = 0.0 if single.sse <= 1e-300 else 1.0 - best_sse / single.sse
    return SegmentedFit(
        left=left,
        right=right,
        break_index=best_b,
        break_size=float(math.sqrt(pts[best_b - 1, 0] * pts[best_b, 0])),
        total_sse=best_sse,
        single_sse=single.sse,
        breakpoint_evidence=improvement >= 0.05,
    )


def _with_floor(fit: PowerLawFit, floor: float, n_dropped: int) -> PowerLawFit:
    return PowerLawFit(
        alpha=fit.alpha,
        log_beta=fit.log_beta,
        r_squared=fit.r_squared,
        sse=fit.sse,
        region=fit.region,
        n_points=fit.n_points,
        n_dropped=n_dropped,
        floor=floor,
    )


# =====================================================================
# Using a fit
# =====================================================================


def predict(fit: PowerLawFit, size):
    """Predicted value at ``size`` on the original scale.

    For floor-subtracted fits the floor is added back, so the prediction is
    directly comparable to the data that produced the fit.
    """
    size = np.asarray(size, dtype=float)
    if np.any(size <= 0):
        raise FitDomainError("size must be positive")
    value = np.exp(fit.log_beta + fit.alpha * np.log(size))
    if fit.floor is not None:
        value = value + fit.floor
    return float(value) if value.ndim == 0 else value


def solve_for_size(fit: PowerLawFit, value: float) -> float:
    """Size at which the fitted curve reaches ``value`` (inverse of predict)."""
    excess = float(value) - (fit.floor or 0.0)
    if excess <= 0:
        raise FitDomainError(
            f"value {value:g} is not above the fitted floor {fit.floor or 0.0:g}"
        )
    if fit.alpha == 0.0:
        raise FitDomainError("fitted exponent is zero; size is not identifiable")
    return float(math.exp((math.log(excess) - fit.log_beta) / fit.alpha))
