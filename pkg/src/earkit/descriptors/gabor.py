"""Gabor magnitude features from a bank of 8 orientations x 5 scales."""

from __future__ import annotations

import weakref

import numpy as np

from ..errors import ValidationError
from .base import FeatureVector, FilterBank, SpectralBank, check_image

N_ORIENTATIONS = 8
N_SCALES = 5
F_MAX = 0.25
SCALE_RATIO = np.sqrt(2.0)
SIGMA = 2 * np.pi
KERNEL_SIZE = 63
MIN_KERNEL_SIZE = 31
STEP = 8


def gabor_wavelet(x, y, frequency: float, theta: float, sigma: float = SIGMA) -> np.ndarray:
    """Complex Gabor wavelet with an isotropic envelope and analytic DC compensation.

    ``psi(z) = (k^2/sigma^2) exp(-k^2 |z|^2 / (2 sigma^2)) (exp(i k.z) - exp(-sigma^2/2))``
    with wave vector ``k = 2*pi*frequency*(cos theta, sin theta)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = 2 * np.pi * frequency
    along = x * np.cos(theta) + y * np.sin(theta)
    envelope = (k * k / sigma**2) * np.exp(-(k * k) * (x * x + y * y) / (2 * sigma**2))
    return envelope * (np.exp(1j * k * along) - np.exp(-(sigma**2) / 2))


def scale_frequency(v: int) -> float:
    return F_MAX / SCALE_RATIO**v


def make_gabor_bank(n_orientations: int = N_ORIENTATIONS, n_scales: int = N_SCALES,
                    size: int = KERNEL_SIZE) -> FilterBank:
    """Build ``n_scales * n_orientations`` zero-mean complex kernels.

    Filters are ordered scale-major: index ``v * n_orientations + u`` holds
    frequency ``F_MAX / sqrt(2)**v`` and orientation ``pi * u / n_orientations``.
    The discrete mean of every kernel is subtracted.
    """
    if size % 2 == 0:
        raise ValidationError(f"Gabor kernel size must be odd, got {size}")
    if size < MIN_KERNEL_SIZE:
        raise ValidationError(f"Gabor kernel size must be >= {MIN_KERNEL_SIZE}, got {size}")
    r = np.arange(size) - size // 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    filters = []
    params = []
    for v in range(n_scales):
        f = scale_frequency(v)
        for u in range(n_orientations):
            theta = np.pi * u / n_orientations
            g = gabor_wavelet(xx, yy, f, theta)
            filters.append(g - g.mean())
            params.append((f, theta))
    meta = {"orientations": n_orientations, "scales": n_scales, "params": tuple(params)}
    return FilterBank("GABOR", np.array(filters), meta)


_DEFAULT_BANK: FilterBank | None = None


def default_gabor_bank() -> FilterBank:
    global _DEFAULT_BANK
    if _DEFAULT_BANK is None:
        _DEFAULT_BANK = make_gabor_bank()
    return _DEFAULT_BANK


_SPECTRAL: "weakref.WeakKeyDictionary[FilterBank, SpectralBank]" = weakref.WeakKeyDictionary()


def gabor_magnitudes(img, bank: FilterBank) -> np.ndarray:
    """Same-size magnitude responses ``(n_filters, h, w)``; the image mean is removed first."""
    if bank.kind != "GABOR":
        raise ValidationError(f"expected a GABOR filter bank, got {bank.kind}")
    a = check_image(img, 1, "Gabor")
    a = a - a.mean()
    spectral = _SPECTRAL.get(bank)
    if spectral is None:
        spectral = _SPECTRAL[bank] = SpectralBank(bank.filters)
    return np.abs(spectral.convolve(a, "same"))


def _standardize(m: np.ndarray) -> np.ndarray:
    std = m.std()
    if std <= 1e-10 * np.abs(m).max():
        return np.zeros_like(m)
    return (m - m.mean()) / std


def extract_gabor(img, bank: FilterBank | None = None, step: int = STEP) -> FeatureVector:
    """Magnitudes sampled every ``step`` pixels (offset ``step // 2``), standardized per filter."""
    if bank is None:
        bank = default_gabor_bank()
    check_image(img, step, "Gabor")
    off = step // 2
    parts = [_standardize(m[off::step, off::step].ravel()) for m in gabor_magnitudes(img, bank)]
    return FeatureVector(np.concatenate(parts), "GABOR")
