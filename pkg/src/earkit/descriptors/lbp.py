"""Uniform local binary patterns on a circular neighbourhood."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .base import BlockSpec, CodeMap, FeatureVector, block_histograms, check_image

RADIUS = 2
NEIGHBORS = 8
BLOCK = BlockSpec.square(8)

# Interpolated neighbour-minus-center differences that are zero in exact
# arithmetic come out as +-1e-14 noise; they count as ties (bit set).
TIE_EPS = 1e-9


def circular_transitions(pattern: int, n_bits: int = NEIGHBORS) -> int:
    """Count 0/1 changes between circularly adjacent bits of ``pattern``."""
    rotated = (pattern >> 1) | ((pattern & 1) << (n_bits - 1))
    return bin(pattern ^ rotated).count("1")


@lru_cache(maxsize=None)
def uniform_lut(n_bits: int = NEIGHBORS) -> np.ndarray:
    """Map every ``n_bits`` pattern to its uniform-LBP label.

    Uniform patterns (at most two circular transitions) get labels
    ``0 .. n_uniform-1`` in ascending pattern order; every other pattern maps
    to the single label ``n_uniform``.
    """
    lut = np.empty(1 << n_bits, dtype=np.intp)
    label = 0
    nonuniform = []
    for p in range(1 << n_bits):
        if circular_transitions(p, n_bits) <= 2:
            lut[p] = label
            label += 1
        else:
            nonuniform.append(p)
    lut[nonuniform] = label
    lut.setflags(write=False)
    return lut


def n_uniform_bins(n_bits: int = NEIGHBORS) -> int:
    return int(uniform_lut(n_bits).max()) + 1


def neighbor_offsets(radius: float, neighbors: int) -> np.ndarray:
    """``(neighbors, 2)`` array of (dy, dx) sample offsets, counter-clockwise from +x."""
    angles = 2 * np.pi * np.arange(neighbors) / neighbors
    offs = np.stack([-radius * np.sin(angles), radius * np.cos(angles)], axis=1)
    # snap cos(pi/2) style residue so axis-aligned samples hit pixels exactly
    return np.round(offs, 12)


def lbp_patterns(img, radius: int = RADIUS, neighbors: int = NEIGHBORS) -> np.ndarray:
    """Raw LBP pattern for every pixel at distance >= ``radius`` from the border.

    Neighbours are bilinearly interpolated and compared against the center
    with ``>=``. The result has shape ``(h - 2*radius, w - 2*radius)``.
    """
    a = check_image(img, 2 * radius + 1, "LBP")
    h, w = a.shape
    oh, ow = h - 2 * radius, w - 2 * radius
    center = a[radius : radius + oh, radius : radius + ow]
    patterns = np.zeros((oh, ow), dtype=np.intp)

    def shifted(dy: int, dx: int) -> np.ndarray:
        return a[radius + dy : radius + dy + oh, radius + dx : radius + dx + ow] - center

    for k, (dy, dx) in enumerate(neighbor_offsets(radius, neighbors)):
        y0, x0 = int(np.floor(dy)), int(np.floor(dx))
        fy, fx = dy - y0, dx - x0
        y1 = y0 + 1 if fy > 0 else y0
        x1 = x0 + 1 if fx > 0 else x0
        d00 = shifted(y0, x0)
        if fx == 0 and fy == 0:
            diff = d00
        else:
            d01, d10, d11 = shifted(y0, x1), shifted(y1, x0), shifted(y1, x1)
            top = d00 + fx * (d01 - d00)
            bottom = d10 + fx * (d11 - d10)
            diff = top + fy * (bottom - top)
        patterns |= (diff >= -TIE_EPS).astype(np.intp) << k
    return patterns


def lbp_codes(img, radius: int = RADIUS, neighbors: int = NEIGHBORS) -> CodeMap:
    lut = uniform_lut(neighbors)
    return CodeMap(lut[lbp_patterns(img, radius, neighbors)], n_uniform_bins(neighbors))


def extract_lbp(img, radius: int = RADIUS, neighbors: int = NEIGHBORS, block: BlockSpec = BLOCK) -> FeatureVector:
    """Uniform LBP (radius 2, 8 neighbours) histogrammed over 8x8 blocks."""
    check_image(img, 2 * radius + max(block.block_w, block.block_h), "LBP")
    return block_histograms(lbp_codes(img, radius, neighbors), block, "LBP")
