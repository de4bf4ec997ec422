"""Synthetic class-per-folder datasets for smoke tests and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .imgproc import save_grayscale


def subject_texture(rng: np.random.Generator, shape: tuple[int, int], smoothing: float = 1.5) -> np.ndarray:
    """Smoothed Gaussian noise rescaled to mean 128 and standard deviation 40."""
    t = ndimage.gaussian_filter(rng.standard_normal(shape), smoothing)
    return 128 + 40 * (t - t.mean()) / t.std()


def make_dataset(root, n_subjects: int = 10, per_subject: int = 10, noise: float = 10.0,
                 shape: tuple[int, int] = (120, 90), seed: int = 0, ext: str = ".png") -> Path:
    """Write ``n_subjects`` folders of noisy copies of a per-subject base texture.

    ``shape`` is (height, width). Each image adds i.i.d. Gaussian noise of
    standard deviation ``noise`` gray levels to its subject's texture.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    for s in range(n_subjects):
        base = subject_texture(rng, shape)
        folder = root / f"s{s:03d}"
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(per_subject):
            img = np.clip(np.rint(base + rng.normal(0.0, noise, shape)), 0, 255).astype(np.uint8)
            save_grayscale(img, folder / f"{i:02d}{ext}")
    return root
