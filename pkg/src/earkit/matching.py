"""Distances between feature vectors and probe-by-gallery score matrices.

All scores are distances: lower means more similar. Matrix entries are
computed with exactly the same floating-point operations as the scalar
measures, so ``score_matrix(...).scores[i, j] == measure(p[i], g[j])``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

CHI2 = "CHI2"
COSINE = "COSINE"
MEASURES = (CHI2, COSINE)

# probe rows processed per vectorized chunk, bounded by this many float64 cells
_CHUNK_CELLS = 1 << 22


def _as_vector(x) -> np.ndarray:
    v = np.ascontiguousarray(getattr(x, "values", x), dtype=np.float64)
    if v.ndim != 1:
        v = v.ravel()
    return v


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.size} vs {b.size}")


def _chi2_terms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a - b
    denom = a + b
    return np.divide(diff * diff, denom, out=np.zeros(np.broadcast_shapes(a.shape, b.shape)), where=denom > 0)


def chi_square(a, b) -> float:
    """``sum_i (a_i - b_i)^2 / (a_i + b_i)``; terms with a zero denominator contribute 0."""
    a, b = _as_vector(a), _as_vector(b)
    _check_pair(a, b)
    if (a < 0).any() or (b < 0).any():
        raise ValidationError("chi-square distance requires non-negative entries")
    return float(np.sum(_chi2_terms(a, b), axis=-1))


def _cosine_from_parts(dot, na, nb):
    denom = na * nb
    sim = np.divide(dot, denom, out=np.zeros(np.broadcast_shapes(np.shape(dot), np.shape(denom))), where=denom > 0)
    dist = np.where(denom > 0, 1.0 - sim, 1.0)
    return np.clip(dist, 0.0, 2.0)


def cosine_distance(a, b) -> float:
    """``1 - cos(a, b)``, or 1 when either vector is all zeros."""
    a, b = _as_vector(a), _as_vector(b)
    _check_pair(a, b)
    dot = np.sum(a * b, axis=-1)
    na = np.sqrt(np.sum(a * a, axis=-1))
    nb = np.sqrt(np.sum(b * b, axis=-1))
    return float(_cosine_from_parts(dot, na, nb))


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    scores: np.ndarray
    probe_labels: np.ndarray
    gallery_labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        probe_labels = np.asarray(self.probe_labels)
        gallery_labels = np.asarray(self.gallery_labels)
        if scores.ndim != 2:
            raise ValidationError("score matrix must be 2-D")
        if scores.shape != (probe_labels.size, gallery_labels.size):
            raise ValidationError(
                f"score matrix shape {scores.shape} does not match label counts "
                f"({probe_labels.size}, {gallery_labels.size})"
            )
        if not np.all(np.isfinite(scores)):
            raise ValidationError("scores must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "probe_labels", probe_labels)
        object.__setattr__(self, "gallery_labels", gallery_labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.scores.shape


def _stack(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.ascontiguousarray(vectors, dtype=np.float64)
    rows = [_as_vector(v) for v in vectors]
    if not rows:
        raise ValidationError("empty feature list")
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise ValidationError(f"feature vectors have mixed dimensions {sorted(dims)}")
    return np.stack(rows)


def distance_matrix(probes, gallery, measure: str = CHI2) -> np.ndarray:
    """Pairwise distances between the rows of ``probes`` and ``gallery``."""
    p, g = _stack(probes), _stack(gallery)
    if p.shape[0] == 0 or g.shape[0] == 0:
        raise ValidationError("empty feature list")
    if p.shape[1] != g.shape[1]:
        raise ValidationError(f"dimension mismatch: {p.shape[1]} vs {g.shape[1]}")
    measure = measure.upper()
    if measure not in MEASURES:
        raise ValidationError(f"unknown measure {measure!r}")
    if measure == CHI2 and ((p < 0).any() or (g < 0).any()):
        raise ValidationError("chi-square distance requires non-negative entries")

    out = np.empty((p.shape[0], g.shape[0]))
    chunk = max(1, _CHUNK_CELLS // (g.shape[0] * g.shape[1]))
    if measure == COSINE:
        ng = np.sqrt(np.sum(g * g, axis=-1))
    for start in range(0, p.shape[0], chunk):
        blk = p[start : start + chunk, None, :]
        if measure == CHI2:
            out[start : start + chunk] = np.sum(_chi2_terms(blk, g[None, :, :]), axis=-1)
        else:
            dot = np.sum(blk * g[None, :, :], axis=-1)
            npr = np.sqrt(np.sum(blk * blk, axis=-1))
            out[start : start + chunk] = _cosine_from_parts(dot, npr, ng[None, :])
    return out


def score_matrix(probes, gallery, measure: str = CHI2,
                 probe_labels: Sequence | None = None, gallery_labels: Sequence | None = None) -> ScoreMatrix:
    """Build a :class:`ScoreMatrix` of ``measure(probes[i], gallery[j])``.

    Labels default to row indices, which makes every probe its own identity.
    """
    scores = distance_matrix(probes, gallery, measure)
    if probe_labels is None:
        probe_labels = np.arange(scores.shape[0])
    if gallery_labels is None:
        gallery_labels = np.arange(scores.shape[1])
    return ScoreMatrix(scores, np.asarray(probe_labels), np.asarray(gallery_labels))
