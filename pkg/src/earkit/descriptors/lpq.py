"""Local phase quantization and its rotation-invariant variant.

Both descriptors quantize the signs of the real and imaginary parts of a
short-term Fourier transform (STFT) taken at four low frequencies, giving an
8-bit code per pixel. The STFT at pixel ``x`` for frequency ``u`` is::

    F(u, x) = sum_{y in window} f(x + y) * exp(-2j*pi * u . y)

with ``u . y = u_x * dx + u_y * dy``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import convolve2d

from .base import BlockSpec, CodeMap, FeatureVector, SpectralBank, block_histograms, center, check_image

LPQ_WINDOW = 5
LPQ_BLOCK = BlockSpec.square(18)
RILPQ_RADIUS = 6
RILPQ_ANGLES = 12
RILPQ_BLOCK = BlockSpec.square(16)
RHO = 0.9

# Relative magnitude below which a response counts as exactly zero.
_ZERO_REL = 1e-10
# Tiny diagonal perturbation that makes the SVD of a degenerate covariance
# pick a reproducible basis.
_SVD_JITTER = np.array([1.000007, 1.000006, 1.000005, 1.000004, 1.000003, 1.000002, 1.000001, 1.0])


def _frequency_points(a: float, angle: float = 0.0) -> np.ndarray:
    """The four (u_x, u_y) points (a,0), (0,a), (a,a), (a,-a), rotated by ``angle``."""
    pts = np.array([[a, 0.0], [0.0, a], [a, a], [a, -a]])
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return pts @ rot.T


def _window_offsets(radius: int, circular: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Offsets (dy, dx) of a (2r+1)^2 grid and the boolean support mask."""
    r = np.arange(-radius, radius + 1, dtype=np.float64)
    dy, dx = np.meshgrid(r, r, indexing="ij")
    mask = (dx**2 + dy**2 <= radius**2) if circular else np.ones_like(dx, dtype=bool)
    return dy, dx, mask


def _stft_kernels(freqs: np.ndarray, radius: int, circular: bool) -> list[np.ndarray]:
    # convolution flips the kernel, so store exp(+2j*pi*u.y) to obtain the
    # exp(-2j*pi*u.y) weighting of the forward STFT
    dy, dx, mask = _window_offsets(radius, circular)
    return [np.where(mask, np.exp(2j * np.pi * (ux * dx + uy * dy)), 0) for ux, uy in freqs]


def _whitening(freqs: np.ndarray, radius: int, circular: bool, rho: float) -> np.ndarray:
    """Rotation that decorrelates the 8 real responses under a ``rho**distance`` pixel model."""
    dy, dx, mask = _window_offsets(radius, circular)
    px, py = dx[mask], dy[mask]
    dist = np.hypot(px[:, None] - px[None, :], py[:, None] - py[None, :])
    cov = rho**dist
    rows = []
    for ux, uy in freqs:
        q = np.exp(-2j * np.pi * (ux * px + uy * py))
        rows.extend([q.real, q.imag])
    m = np.array(rows)
    d = m @ cov @ m.T
    jitter = np.diag(_SVD_JITTER)
    _, _, vt = np.linalg.svd(jitter @ d @ jitter)
    # fix the arbitrary sign of each singular vector
    idx = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(vt.shape[0]), idx])
    return vt * signs[:, None]


def _quantize(resp: np.ndarray, scale: float) -> np.ndarray:
    """Map ``(8, h, w)`` real responses to 8-bit codes; strictly positive sets a bit."""
    tol = _ZERO_REL * scale
    codes = np.zeros(resp.shape[1:], dtype=np.intp)
    for bit in range(resp.shape[0]):
        codes |= (resp[bit] > tol).astype(np.intp) << bit
    return codes


def _responses(a: np.ndarray, kernels: list[np.ndarray]) -> np.ndarray:
    out = []
    for k in kernels:
        f = convolve2d(a, k, mode="valid")
        out.extend([f.real, f.imag])
    return np.array(out)


def _split_complex(resp: np.ndarray) -> np.ndarray:
    """``(n, h, w)`` complex -> ``(2n, h, w)`` real, interleaving real and imaginary parts."""
    out = np.empty((2 * resp.shape[0],) + resp.shape[1:])
    out[0::2] = resp.real
    out[1::2] = resp.imag
    return out


def _snap(resp: np.ndarray, scale: float) -> np.ndarray:
    return np.where(np.abs(resp) <= _ZERO_REL * scale, 0.0, resp)


@lru_cache(maxsize=None)
def _lpq_setup(window: int, decorrelate: bool, rho: float):
    radius = window // 2
    freqs = _frequency_points(1.0 / window)
    kernels = _stft_kernels(freqs, radius, circular=False)
    white = _whitening(freqs, radius, False, rho) if decorrelate else None
    return kernels, white


def lpq_codes(img, window: int = LPQ_WINDOW, decorrelate: bool = True, rho: float = RHO) -> CodeMap:
    """LPQ code map over the valid region (``h - window + 1`` by ``w - window + 1``)."""
    a = check_image(img, window, "LPQ")
    kernels, white = _lpq_setup(window, decorrelate, rho)
    scale = window * window * max(1.0, float(np.abs(a).max()))
    resp = _snap(_responses(a, kernels), scale)
    if white is not None:
        resp = np.tensordot(white, resp, axes=1)
    return CodeMap(_quantize(resp, scale), 256)


def extract_lpq(img, window: int = LPQ_WINDOW, block: BlockSpec = LPQ_BLOCK,
                decorrelate: bool = True, rho: float = RHO) -> FeatureVector:
    """LPQ with a 5x5 uniform window, histogrammed over 18x18 blocks."""
    check_image(img, window - 1 + max(block.block_w, block.block_h), "LPQ")
    return block_histograms(lpq_codes(img, window, decorrelate, rho), block, "LPQ")


@lru_cache(maxsize=None)
def _rilpq_setup(radius: int, n_angles: int, decorrelate: bool, rho: float):
    a = 1.0 / (2 * radius + 1)
    steps = 2 * np.pi * np.arange(n_angles) / n_angles
    # orientation probes: one frequency per quantization angle on a circle of radius a
    probes = np.stack([a * np.cos(steps), a * np.sin(steps)], axis=1)
    probe_bank = SpectralBank(_stft_kernels(probes, radius, circular=True))
    kernels, whites = [], []
    for angle in steps:
        freqs = _frequency_points(a, angle)
        kernels.extend(_stft_kernels(freqs, radius, circular=True))
        whites.append(_whitening(freqs, radius, True, rho) if decorrelate else None)
    return steps, probe_bank, SpectralBank(kernels), whites


def rilpq_orientation(img, radius: int = RILPQ_RADIUS, n_angles: int = RILPQ_ANGLES) -> np.ndarray:
    """Quantized characteristic orientation index in ``[0, n_angles)`` per valid pixel.

    The orientation is the argument of ``sum_i Im F(v_i, x) * exp(1j * phi_i)``
    over probe frequencies ``v_i`` at angles ``phi_i = 2*pi*i/n_angles``,
    rounded to the nearest multiple of ``2*pi/n_angles``.
    """
    a = check_image(img, 2 * radius + 1, "RILPQ")
    steps, probe_bank, _, _ = _rilpq_setup(radius, n_angles, False, RHO)
    return _orientation_index(center(a), steps, probe_bank)


def _orientation_index(a: np.ndarray, steps: np.ndarray, probe_bank: SpectralBank) -> np.ndarray:
    resp = probe_bank.convolve(a, "valid").imag
    moment = np.tensordot(np.exp(1j * steps), resp, axes=1)
    n = len(steps)
    theta = np.angle(moment)
    return np.mod(np.rint(theta / (2 * np.pi / n)).astype(np.intp), n)


def rilpq_codes(img, radius: int = RILPQ_RADIUS, n_angles: int = RILPQ_ANGLES,
                decorrelate: bool = True, rho: float = RHO) -> CodeMap:
    """Rotation-invariant LPQ codes over the ``h - 2r`` by ``w - 2r`` valid region.

    Each pixel is coded with LPQ frequency points rotated to its quantized
    characteristic orientation, over a circular window of the given radius.
    """
    a = check_image(img, 2 * radius + 1, "RILPQ")
    steps, probe_bank, bank, whites = _rilpq_setup(radius, n_angles, decorrelate, rho)
    a = center(a)
    orient = _orientation_index(a, steps, probe_bank)
    scale = (2 * radius + 1) ** 2 * max(1.0, float(np.abs(a).max()))
    all_resp = bank.convolve(a, "valid")
    codes = np.zeros(orient.shape, dtype=np.intp)
    for m, white in enumerate(whites):
        sel = orient == m
        if not sel.any():
            continue
        resp = _snap(_split_complex(all_resp[4 * m : 4 * m + 4]), scale)
        if white is not None:
            resp = np.tensordot(white, resp, axes=1)
        codes[sel] = _quantize(resp, scale)[sel]
    return CodeMap(codes, 256)


def extract_rilpq(img, radius: int = RILPQ_RADIUS, n_angles: int = RILPQ_ANGLES,
                  block: BlockSpec = RILPQ_BLOCK, decorrelate: bool = True, rho: float = RHO) -> FeatureVector:
    """Rotation-invariant LPQ (radius 6, 12 angles) over 16x16 blocks."""
    check_image(img, 2 * radius + max(block.block_w, block.block_h), "RILPQ")
    return block_histograms(rilpq_codes(img, radius, n_angles, decorrelate, rho), block, "RILPQ")
