"""Texture descriptor extractors and their registry.

``DESCRIPTORS`` maps each descriptor id to a :class:`DescriptorInfo` holding
the extractor, its default distance measure and its output dimension for a
100x100 input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import ValidationError
from .base import DESCRIPTOR_IDS, BlockSpec, CodeMap, FeatureVector, FilterBank, block_histograms
from .bsif import extract_bsif, learn_or_load_bsif_bank, random_bsif_bank, read_bsif_bank, write_bsif_bank
from .dsift import extract_dsift
from .gabor import default_gabor_bank, extract_gabor, make_gabor_bank
from .hog import extract_hog
from .lbp import extract_lbp, lbp_codes, uniform_lut
from .lpq import extract_lpq, extract_rilpq, lpq_codes, rilpq_codes
from .poem import extract_poem


@dataclass(frozen=True)
class DescriptorInfo:
    name: str
    extract: Callable[..., FeatureVector]
    measure: str
    dim: int
    bank: str | None = None


DESCRIPTORS: dict[str, DescriptorInfo] = {
    "LBP": DescriptorInfo("LBP", extract_lbp, "CHI2", 8496),
    "LPQ": DescriptorInfo("LPQ", extract_lpq, "CHI2", 6400),
    "RILPQ": DescriptorInfo("RILPQ", extract_rilpq, "CHI2", 6400),
    "BSIF": DescriptorInfo("BSIF", extract_bsif, "CHI2", 6400, bank="BSIF"),
    "POEM": DescriptorInfo("POEM", extract_poem, "CHI2", 11328),
    "HOG": DescriptorInfo("HOG", extract_hog, "CHI2", 4356),
    "DSIFT": DescriptorInfo("DSIFT", extract_dsift, "CHI2", 12800),
    "GABOR": DescriptorInfo("GABOR", extract_gabor, "COSINE", 5760, bank="GABOR"),
}


def descriptor_info(name: str) -> DescriptorInfo:
    try:
        return DESCRIPTORS[name.upper()]
    except KeyError:
        raise ValidationError(f"unknown descriptor {name!r}; choose from {', '.join(DESCRIPTOR_IDS)}") from None


def make_extractor(name: str, bsif_bank: FilterBank | None = None,
                   gabor_bank: FilterBank | None = None) -> Callable[..., FeatureVector]:
    """Return a one-argument extractor for ``name`` with its filter bank bound."""
    info = descriptor_info(name)
    if info.bank == "BSIF":
        bank = bsif_bank if bsif_bank is not None else random_bsif_bank()
        return lambda img: extract_bsif(img, bank)
    if info.bank == "GABOR":
        bank = gabor_bank if gabor_bank is not None else default_gabor_bank()
        return lambda img: extract_gabor(img, bank)
    return info.extract


__all__ = [
    "DESCRIPTORS", "DESCRIPTOR_IDS", "BlockSpec", "CodeMap", "DescriptorInfo", "FeatureVector", "FilterBank",
    "block_histograms", "descriptor_info", "extract_bsif", "extract_dsift", "extract_gabor", "extract_hog",
    "extract_lbp", "extract_lpq", "extract_poem", "extract_rilpq", "lbp_codes", "learn_or_load_bsif_bank",
    "lpq_codes", "make_extractor", "make_gabor_bank", "random_bsif_bank", "read_bsif_bank", "rilpq_codes",
    "uniform_lut", "write_bsif_bank",
]
