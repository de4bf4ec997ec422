"""Dense SIFT: upright SIFT descriptors on a regular grid of patches."""

from __future__ import annotations

import numpy as np

from .base import FeatureVector, central_gradients, check_image
from .hog import l2_hys

GRID = 10
PATCH = 16
SPATIAL_BINS = 4
ORIENT_BINS = 8
CLIP = 0.2


def grid_origins(length: int, patch: int = PATCH, grid: int = GRID) -> np.ndarray:
    """Top-left coordinates of ``grid`` equally spaced patches along one axis."""
    return np.floor(np.linspace(0, length - patch, grid) + 0.5).astype(np.intp)


def _bin_split(pos: np.ndarray, n: int):
    """Linear split of continuous bin positions into (index, weight) pairs, dropping out-of-range bins."""
    lo = np.floor(pos)
    w_hi = pos - lo
    lo = lo.astype(np.intp)
    hi = lo + 1
    return [
        (np.clip(lo, 0, n - 1), np.where((lo >= 0) & (lo < n), 1 - w_hi, 0.0)),
        (np.clip(hi, 0, n - 1), np.where((hi >= 0) & (hi < n), w_hi, 0.0)),
    ]


def dsift_descriptors(img, grid: int = GRID, patch: int = PATCH, clip: float = CLIP) -> np.ndarray:
    """Return ``(grid*grid, 128)`` normalized descriptors in row-major grid order.

    Each 16x16 patch is split into 4x4 spatial bins with 8 orientation bins.
    Votes are gradient magnitudes times a Gaussian window (sigma = patch/2),
    trilinearly distributed over neighbouring spatial and orientation bins.
    """
    a = check_image(img, patch, "DSIFT")
    h, w = a.shape
    gx, gy = central_gradients(a)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), 2 * np.pi)

    ys = grid_origins(h, patch, grid)
    xs = grid_origins(w, patch, grid)
    local = np.arange(patch)
    rows = (ys[:, None, None, None] + local[None, None, :, None])  # (gy, 1, patch, 1)
    cols = (xs[None, :, None, None] + local[None, None, None, :])  # (1, gx, 1, patch)
    pm = mag[rows, cols].reshape(grid * grid, patch, patch)
    pa = ang[rows, cols].reshape(grid * grid, patch, patch)

    centre = patch / 2.0
    u = local + 0.5
    sigma = patch / 2.0
    g1 = np.exp(-((u - centre) ** 2) / (2 * sigma**2))
    weight = pm * (g1[:, None] * g1[None, :])

    cell = patch / SPATIAL_BINS
    by = np.broadcast_to((u / cell - 0.5)[:, None], (patch, patch))
    bx = np.broadcast_to((u / cell - 0.5)[None, :], (patch, patch))
    ob = pa / (2 * np.pi / ORIENT_BINS)
    o_lo = np.floor(ob)
    o_w = ob - o_lo
    o_lo = np.mod(o_lo.astype(np.intp), ORIENT_BINS)
    o_split = [(o_lo, 1 - o_w), (np.mod(o_lo + 1, ORIENT_BINS), o_w)]

    n_pts = grid * grid
    dim = SPATIAL_BINS * SPATIAL_BINS * ORIENT_BINS
    base = (np.arange(n_pts) * dim)[:, None, None]
    hist = np.zeros(n_pts * dim)
    for yi, yw in _bin_split(by, SPATIAL_BINS):
        for xi, xw in _bin_split(bx, SPATIAL_BINS):
            for oi, ow in o_split:
                idx = base + (yi * SPATIAL_BINS + xi) * ORIENT_BINS + oi
                hist += np.bincount(idx.ravel(), weights=(weight * yw * xw * ow).ravel(), minlength=n_pts * dim)
    return l2_hys(hist.reshape(n_pts, dim), clip)


def extract_dsift(img, grid: int = GRID, patch: int = PATCH) -> FeatureVector:
    """100 upright 128-d SIFT descriptors on a 10x10 grid of 16x16 patches."""
    return FeatureVector(dsift_descriptors(img, grid, patch).ravel(), "DSIFT")
