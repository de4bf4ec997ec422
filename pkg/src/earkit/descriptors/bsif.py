"""Binarized statistical image features.

Filter file format (plain text, any whitespace)::

    BSIF <n_filters> <size>
    <size*size reals, filter 0, row-major>
    ...
    <size*size reals, filter n_filters-1>
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from ..errors import FormatError, ValidationError
from .base import BlockSpec, CodeMap, FeatureVector, FilterBank, block_histograms, center, check_image

N_FILTERS = 8
FILTER_SIZE = 11
BLOCK = BlockSpec.square(18)
DEFAULT_SEED = 0

# Responses within this relative distance of zero are treated as zero
# (bit cleared); absorbs the float residue left by the zero-mean filters.
_ZERO_REL = 1e-12


def _check_bsif_shape(n: int, size: int) -> None:
    if n != N_FILTERS or size != FILTER_SIZE:
        raise ValidationError(
            f"BSIF bank must hold {N_FILTERS} filters of {FILTER_SIZE}x{FILTER_SIZE}, got {n} of {size}x{size}"
        )


def random_bsif_bank(seed: int = DEFAULT_SEED, n_filters: int = N_FILTERS, size: int = FILTER_SIZE) -> FilterBank:
    """Seeded stand-in for a learned bank: zero-mean, orthonormal random filters.

    An ``size x size x n_filters`` standard-normal tensor is drawn, each filter
    is centered, and the flattened filters are orthonormalized by modified
    Gram-Schmidt in index order.
    """
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((size, size, n_filters))
    vecs = [raw[:, :, i].ravel() - raw[:, :, i].mean() for i in range(n_filters)]
    basis: list[np.ndarray] = []
    for v in vecs:
        for b in basis:
            v = v - (v @ b) * b
        v = v / np.linalg.norm(v)
        basis.append(v)
    filters = np.stack(basis).reshape(n_filters, size, size)
    return FilterBank("BSIF", filters, {"bits": n_filters, "source": f"seed:{seed}"})


def read_bsif_bank(path) -> FilterBank:
    """Parse a BSIF filter file; see the module docstring for the format."""
    path = Path(path)
    tokens = path.read_text(encoding="utf-8").split()
    if len(tokens) < 3 or tokens[0] != "BSIF":
        raise FormatError(f"{path}: expected header 'BSIF <n_filters> <size>'")
    try:
        n, size = int(tokens[1]), int(tokens[2])
    except ValueError:
        raise FormatError(f"{path}: non-integer filter count or size") from None
    if n < 1 or size < 1:
        raise FormatError(f"{path}: filter count and size must be positive")
    body = tokens[3:]
    if len(body) != n * size * size:
        raise FormatError(f"{path}: expected {n * size * size} values, found {len(body)}")
    try:
        values = np.array([float(t) for t in body])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: non-finite filter value")
    _check_bsif_shape(n, size)
    return FilterBank("BSIF", values.reshape(n, size, size), {"bits": n, "source": str(path)})


def write_bsif_bank(bank: FilterBank, path) -> None:
    lines = [f"BSIF {len(bank)} {bank.size}"]
    for f in bank.filters:
        lines.extend(" ".join(repr(float(v)) for v in row) for row in f)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def learn_or_load_bsif_bank(source=None) -> FilterBank:
    """Load a bank from a filter file path, or build the seeded fallback from an int seed."""
    if source is None:
        return random_bsif_bank(DEFAULT_SEED)
    if isinstance(source, (int, np.integer)) and not isinstance(source, bool):
        return random_bsif_bank(int(source))
    return read_bsif_bank(source)


def bsif_responses(img, bank: FilterBank) -> np.ndarray:
    """Valid-region responses ``(n_filters, h - s + 1, w - s + 1)`` of the centered image."""
    if bank.kind != "BSIF":
        raise ValidationError(f"expected a BSIF filter bank, got {bank.kind}")
    a = center(check_image(img, bank.size, "BSIF"))
    resp = np.array([convolve2d(a, f, mode="valid") for f in bank.filters])
    scale = max(1.0, float(np.abs(a).max())) * float(np.abs(bank.filters).sum(axis=(1, 2)).max())
    resp[np.abs(resp) <= _ZERO_REL * scale] = 0.0
    return resp


def bsif_codes(img, bank: FilterBank) -> CodeMap:
    resp = bsif_responses(img, bank)
    codes = np.zeros(resp.shape[1:], dtype=np.intp)
    for bit, r in enumerate(resp):
        codes |= (r > 0).astype(np.intp) << bit
    return CodeMap(codes, 1 << len(bank))


def extract_bsif(img, bank: FilterBank | None = None, block: BlockSpec = BLOCK) -> FeatureVector:
    """BSIF codes from an 8-filter 11x11 bank, histogrammed over 18x18 blocks."""
    if bank is None:
        bank = random_bsif_bank(DEFAULT_SEED)
    if bank.kind != "BSIF":
        raise ValidationError(f"expected a BSIF filter bank, got {bank.kind}")
    check_image(img, bank.size - 1 + max(block.block_w, block.block_h), "BSIF")
    return block_histograms(bsif_codes(img, bank), block, "BSIF")
