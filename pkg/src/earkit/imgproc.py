"""Image loading and the fixed preprocessing chain.

A gray image is represented as a 2-D ``numpy.uint8`` array of shape
``(height, width)``. Every function here is pure and returns a new array.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ValidationError

DEFAULT_TARGET = (100, 100)

# ITU-R BT.601 luma weights
# BT.601 weights in thousandths, so luma can be computed and rounded exactly
_LUMA = np.array([299, 587, 114], dtype=np.int64)


def _div_half_up(num: np.ndarray, den: int) -> np.ndarray:
    """``floor(num / den + 1/2)`` in integer arithmetic."""
    return (2 * num + den) // (2 * den)


def as_gray_image(img) -> np.ndarray:
    """Validate ``img`` as a gray image and return it as a uint8 array.

    Float or integer input is accepted only when every value is an integer
    in [0, 255]; nothing is silently clipped.
    """
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValidationError(f"gray image must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError("gray image has zero area")
    if arr.dtype == np.uint8:
        return arr
    if arr.dtype == bool or not np.issubdtype(arr.dtype, np.number):
        raise ValidationError(f"unsupported image dtype {arr.dtype}")
    if np.any(arr < 0) or np.any(arr > 255) or np.any(arr != np.round(arr)):
        raise ValidationError("intensities must be integers in [0, 255]")
    return arr.astype(np.uint8)


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an ``(h, w, 3)`` array, rounded half-up to uint8."""
    rgb = np.asarray(rgb).astype(np.int64)
    y = rgb[..., 0] * _LUMA[0] + rgb[..., 1] * _LUMA[1] + rgb[..., 2] * _LUMA[2]
    return np.clip(_div_half_up(y, 1000), 0, 255).astype(np.uint8)


def load_grayscale(path) -> np.ndarray:
    """Decode a PNG, JPEG or BMP file into a gray image.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        FormatError: the file is not a decodable raster image.
        ValidationError: the decoded image has zero area.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.array(im, dtype=np.uint8)
            elif mode in ("1", "LA"):
                arr = np.array(im.convert("L"), dtype=np.uint8)
            elif mode in ("I;16", "I;16B", "I;16L", "I"):
                raise FormatError(f"{path}: high bit-depth mode {mode} is not supported")
            else:
                arr = rgb_to_gray(np.array(im.convert("RGB")))
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise FormatError(f"{path}: cannot decode image ({exc})") from exc
    if arr.size == 0:
        raise ValidationError(f"{path}: image has zero area")
    return arr


def save_grayscale(img, path) -> None:
    Image.fromarray(as_gray_image(img), mode="L").save(path)


def _axis_weights(n: int, out_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer form of the clamped pixel-center mapping along one axis.

    The source coordinate of output ``i`` is ``((2i + 1) n - out_len) / (2 out_len)``;
    it is returned as lower index, upper index and the upper weight's numerator
    over the common denominator ``2 * out_len``.
    """
    den = 2 * out_len
    num = np.clip((2 * np.arange(out_len, dtype=np.int64) + 1) * n - out_len, 0, (n - 1) * den)
    lo = num // den
    frac = num - lo * den
    hi = np.minimum(lo + 1, n - 1)
    return lo, hi, frac


def _resize_axis(src: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    lo, hi, frac = _axis_weights(src.shape[axis], out_len)
    shape = [1, 1]
    shape[axis] = out_len
    frac = frac.reshape(shape)
    return np.take(src, lo, axis=axis) * (2 * out_len - frac) + np.take(src, hi, axis=axis) * frac


def resize_bilinear(img, out_w: int, out_h: int) -> np.ndarray:
    """Edge-clamped bilinear resize with pixel-center alignment.

    The source coordinate of output index ``i`` is ``(i + 0.5) * src / dst - 0.5``,
    clamped to the valid pixel range. Interpolation is carried out exactly in
    integers (rows first, then columns) and rounded half-up once at the end,
    so results do not depend on floating-point evaluation order.
    """
    img = as_gray_image(img)
    if out_w < 1 or out_h < 1:
        raise ValidationError(f"target size must be positive, got {out_w}x{out_h}")
    h, w = img.shape
    if (w, h) == (out_w, out_h):
        return img.copy()
    tmp = _resize_axis(img.astype(np.int64), out_h, axis=0)
    num = _resize_axis(tmp, out_w, axis=1)
    return np.clip(_div_half_up(num, 4 * out_h * out_w), 0, 255).astype(np.uint8)


def equalize_histogram(img) -> np.ndarray:
    """Global 256-level histogram equalization.

    ``out = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))`` where ``cdf_min``
    is the smallest nonzero cumulative count. A constant image is returned
    unchanged.
    """
    img = as_gray_image(img)
    n = img.size
    cdf = np.cumsum(np.bincount(img.ravel(), minlength=256))
    cdf_min = cdf[np.nonzero(cdf)[0][0]]
    if n == cdf_min:
        return img.copy()
    lut = _div_half_up(255 * (cdf - cdf_min), n - cdf_min)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


Normalizer = Callable[[np.ndarray], np.ndarray]

NORMALIZERS: dict[str, Normalizer] = {"histeq": equalize_histogram}


def register_normalizer(name: str, fn: Normalizer) -> None:
    """Make a photometric normalization available to :func:`preprocess`."""
    if name in NORMALIZERS:
        raise ValidationError(f"normalizer {name!r} already registered")
    NORMALIZERS[name] = fn


def preprocess(img, target: tuple[int, int] = DEFAULT_TARGET, normalization: str = "histeq") -> np.ndarray:
    """Resize to ``target`` (width, height), then apply photometric normalization."""
    try:
        normalize = NORMALIZERS[normalization]
    except KeyError:
        raise ValidationError(f"unknown normalization {normalization!r}") from None
    out_w, out_h = target
    return as_gray_image(normalize(resize_bilinear(img, out_w, out_h)))
