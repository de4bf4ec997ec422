"""Types shared by the descriptor extractors and the block-histogram stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy import ndimage

from ..errors import ValidationError

DESCRIPTOR_IDS = ("LBP", "LPQ", "RILPQ", "BSIF", "POEM", "HOG", "DSIFT", "GABOR")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    descriptor_id: str

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise ValidationError("feature vector is empty")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True, eq=False)
class CodeMap:
    """Per-pixel integer labels in ``[0, n_bins)``."""

    codes: np.ndarray
    n_bins: int

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 2:
            raise ValidationError("code map must be 2-D")
        if not np.issubdtype(codes.dtype, np.integer):
            raise ValidationError("codes must be integers")
        if self.n_bins < 1:
            raise ValidationError("n_bins must be positive")
        if codes.size and (codes.min() < 0 or codes.max() >= self.n_bins):
            raise ValidationError(f"codes must lie in [0, {self.n_bins})")
        object.__setattr__(self, "codes", codes.astype(np.intp, copy=False))

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]


@dataclass(frozen=True, eq=False)
class FilterBank:
    """A stack of 2-D kernels; ``filters`` has shape ``(n, size, size)``."""

    kind: str
    filters: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        filters = np.asarray(self.filters)
        if filters.ndim != 3 or filters.shape[1] != filters.shape[2]:
            raise ValidationError(f"filters must have shape (n, size, size), got {filters.shape}")
        filters = filters.copy()
        filters.setflags(write=False)
        object.__setattr__(self, "filters", filters)

    @property
    def size(self) -> int:
        return self.filters.shape[1]

    def __len__(self) -> int:
        return self.filters.shape[0]


@dataclass(frozen=True)
class BlockSpec:
    block_w: int
    block_h: int
    overlap: int = 0

    def __post_init__(self):
        if self.block_w < 1 or self.block_h < 1:
            raise ValidationError("block sides must be positive")
        if not 0 <= self.overlap < min(self.block_w, self.block_h):
            raise ValidationError("overlap must be in [0, min(block_w, block_h))")

    @classmethod
    def square(cls, side: int, overlap: int = 0) -> "BlockSpec":
        return cls(side, side, overlap)

    def grid(self, width: int, height: int) -> tuple[int, int]:
        """Number of complete blocks ``(nx, ny)`` that tile a ``width x height`` map."""
        sx = self.block_w - self.overlap
        sy = self.block_h - self.overlap
        nx = (width - self.block_w) // sx + 1 if width >= self.block_w else 0
        ny = (height - self.block_h) // sy + 1 if height >= self.block_h else 0
        return nx, ny


def block_histogram_matrix(cmap: CodeMap, spec: BlockSpec) -> np.ndarray:
    """Return an ``(n_blocks, n_bins)`` array of L1-normalized block histograms.

    Blocks are enumerated left-to-right, top-to-bottom; pixels that do not
    fill a complete block at the right or bottom edge are dropped.
    """
    nx, ny = spec.grid(cmap.width, cmap.height)
    if nx == 0 or ny == 0:
        raise ValidationError(
            f"{cmap.width}x{cmap.height} code map is smaller than one "
            f"{spec.block_w}x{spec.block_h} block"
        )
    sx = spec.block_w - spec.overlap
    sy = spec.block_h - spec.overlap
    windows = sliding_window_view(cmap.codes, (spec.block_h, spec.block_w))
    windows = windows[: (ny - 1) * sy + 1 : sy, : (nx - 1) * sx + 1 : sx]
    n_blocks = ny * nx
    offsets = np.arange(n_blocks, dtype=np.intp).reshape(ny, nx, 1, 1) * cmap.n_bins
    counts = np.bincount((windows + offsets).ravel(), minlength=n_blocks * cmap.n_bins)
    hist = counts.reshape(n_blocks, cmap.n_bins).astype(np.float64)
    mass = hist.sum(axis=1, keepdims=True)
    np.divide(hist, mass, out=hist, where=mass > 0)
    return hist


def block_histograms(cmap: CodeMap, spec: BlockSpec, descriptor_id: str = "CODES") -> FeatureVector:
    """Concatenate the per-block histograms of ``cmap`` into a feature vector."""
    return FeatureVector(block_histogram_matrix(cmap, spec).ravel(), descriptor_id)


def check_image(img, min_side: int, name: str) -> np.ndarray:
    """Return ``img`` as a float64 2-D array, rejecting images below ``min_side``."""
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValidationError(f"{name}: expected a 2-D gray image, got shape {arr.shape}")
    if min(arr.shape) < min_side:
        raise ValidationError(f"{name}: image {arr.shape[1]}x{arr.shape[0]} is smaller than {min_side}x{min_side}")
    return arr.astype(np.float64)


def center(a: np.ndarray) -> np.ndarray:
    """Subtract the floored mean; for integer images this keeps values integral,
    so an intensity shift leaves the centered array unchanged bit for bit."""
    return a - np.floor(a.sum() / a.size)


def central_gradients(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences with [-1, 0, 1] masks; borders replicate the edge pixel."""
    gx = ndimage.correlate1d(a, [-1.0, 0.0, 1.0], axis=1, mode="nearest")
    gy = ndimage.correlate1d(a, [-1.0, 0.0, 1.0], axis=0, mode="nearest")
    return gx, gy


class SpectralBank:
    """A fixed stack of kernels applied by FFT, with kernel spectra cached per image shape."""

    def __init__(self, kernels):
        self.kernels = np.asarray(kernels)
        self._spectra: dict[tuple[int, int], np.ndarray] = {}

    def convolve(self, a: np.ndarray, mode: str = "valid") -> np.ndarray:
        """Convolve ``a`` with every kernel; returns ``(n_kernels, h', w')`` complex responses.

        ``mode`` follows :func:`scipy.signal.convolve2d`: ``"valid"`` or ``"same"``
        (zero padding, output centered like scipy's).
        """
        kh, kw = self.kernels.shape[1:]
        h, w = a.shape
        full = (h + kh - 1, w + kw - 1)
        fshape = (sp_fft.next_fast_len(full[0]), sp_fft.next_fast_len(full[1]))
        spec = self._spectra.get(fshape)
        if spec is None:
            spec = sp_fft.fft2(self.kernels, s=fshape, axes=(-2, -1))
            self._spectra[fshape] = spec
        out = sp_fft.ifft2(sp_fft.fft2(a, s=fshape)[None] * spec, axes=(-2, -1))
        if mode == "valid":
            if h < kh or w < kw:
                raise ValidationError("image is smaller than the kernel")
            return out[:, kh - 1 : h, kw - 1 : w]
        if mode == "same":
            y0, x0 = (kh - 1) // 2, (kw - 1) // 2
            return out[:, y0 : y0 + h, x0 : x0 + w]
        raise ValueError(f"unsupported mode {mode!r}")
