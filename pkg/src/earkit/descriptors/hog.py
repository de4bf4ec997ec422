"""Histogram of oriented gradients with L2-Hys block normalization."""

from __future__ import annotations

import numpy as np

from .base import FeatureVector, central_gradients, check_image

CELL = 8
BLOCK_CELLS = 2
BLOCK_STRIDE_CELLS = 1
N_BINS = 9
CLIP = 0.2


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale rows of ``v`` to unit L2 norm; all-zero rows stay zero."""
    norm = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def l2_hys(v: np.ndarray, clip: float = CLIP) -> np.ndarray:
    return l2_normalize(np.minimum(l2_normalize(v), clip))


def cell_histograms(img, cell: int = CELL, n_bins: int = N_BINS) -> np.ndarray:
    """``(cells_y, cells_x, n_bins)`` magnitude-weighted unsigned orientation histograms.

    Votes are split linearly between the two bins whose centers bracket the
    orientation; bins wrap around at pi. Trailing rows/columns that do not
    fill a cell are ignored.
    """
    a = check_image(img, cell, "HOG")
    gx, gy = central_gradients(a)
    ny, nx = a.shape[0] // cell, a.shape[1] // cell
    gx = gx[: ny * cell, : nx * cell]
    gy = gy[: ny * cell, : nx * cell]
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    pos = theta / (np.pi / n_bins) - 0.5
    lo = np.floor(pos)
    w_hi = pos - lo
    lo = np.mod(lo.astype(np.intp), n_bins)
    hi = np.mod(lo + 1, n_bins)

    cy = (np.arange(ny * cell) // cell)[:, None]
    cx = (np.arange(nx * cell) // cell)[None, :]
    base = (cy * nx + cx) * n_bins
    size = ny * nx * n_bins
    hist = np.bincount((base + lo).ravel(), weights=(mag * (1 - w_hi)).ravel(), minlength=size)
    hist += np.bincount((base + hi).ravel(), weights=(mag * w_hi).ravel(), minlength=size)
    return hist.reshape(ny, nx, n_bins)


def hog_blocks(img, cell: int = CELL, block_cells: int = BLOCK_CELLS,
               stride_cells: int = BLOCK_STRIDE_CELLS, n_bins: int = N_BINS, clip: float = CLIP) -> np.ndarray:
    """Normalized block vectors, shape ``(blocks_y, blocks_x, block_cells**2 * n_bins)``."""
    hist = cell_histograms(img, cell, n_bins)
    cy, cx = hist.shape[:2]
    by = (cy - block_cells) // stride_cells + 1
    bx = (cx - block_cells) // stride_cells + 1
    blocks = np.empty((by, bx, block_cells * block_cells * n_bins))
    for i in range(by):
        for j in range(bx):
            y, x = i * stride_cells, j * stride_cells
            blocks[i, j] = hist[y : y + block_cells, x : x + block_cells].ravel()
    return l2_hys(blocks, clip)


def extract_hog(img, cell: int = CELL, block_cells: int = BLOCK_CELLS,
                stride_cells: int = BLOCK_STRIDE_CELLS, n_bins: int = N_BINS) -> FeatureVector:
    """HOG with 8x8 cells and 16x16 blocks overlapping by 8 pixels."""
    check_image(img, cell * block_cells, "HOG")
    return FeatureVector(hog_blocks(img, cell, block_cells, stride_cells, n_bins).ravel(), "HOG")
