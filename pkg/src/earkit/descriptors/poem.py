"""Patterns of oriented edge magnitudes (POEM)."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .base import BlockSpec, FeatureVector, block_histogram_matrix, central_gradients, check_image
from .lbp import lbp_codes

N_ORIENTATIONS = 3
CELL = 7
RADIUS = 2
NEIGHBORS = 8
BLOCK = BlockSpec.square(12)


def oriented_magnitudes(img, n_orientations: int = N_ORIENTATIONS, cell: int = CELL) -> np.ndarray:
    """Accumulated edge-magnitude images, one per unsigned orientation sector.

    Each pixel's gradient magnitude is assigned to the sector of its
    orientation modulo pi, then summed over a ``cell x cell`` window
    (zero outside the image). Returns shape ``(n_orientations, h, w)``.
    """
    a = check_image(img, 3, "POEM")
    gx, gy = central_gradients(a)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.minimum((theta / (np.pi / n_orientations)).astype(np.intp), n_orientations - 1)
    box = np.ones((cell, cell))
    out = np.empty((n_orientations,) + a.shape)
    for k in range(n_orientations):
        out[k] = ndimage.correlate(np.where(sector == k, mag, 0.0), box, mode="constant", cval=0.0)
    return out


def extract_poem(img, n_orientations: int = N_ORIENTATIONS, cell: int = CELL,
                 radius: int = RADIUS, neighbors: int = NEIGHBORS, block: BlockSpec = BLOCK) -> FeatureVector:
    """Uniform LBP over each oriented magnitude image, 12x12 blocks, concatenated by orientation."""
    check_image(img, 2 * radius + max(block.block_w, block.block_h), "POEM")
    parts = [
        block_histogram_matrix(lbp_codes(m, radius, neighbors), block).ravel()
        for m in oriented_magnitudes(img, n_orientations, cell)
    ]
    return FeatureVector(np.concatenate(parts), "POEM")
