"""Identification and verification metrics, fold construction and bootstrapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ProtocolError, ValidationError
from .matching import CHI2, ScoreMatrix, score_matrix


@dataclass(frozen=True, eq=False)
class CmcCurve:
    """Recognition rate at ranks ``1 .. len(points)``."""

    points: np.ndarray

    def __getitem__(self, rank: int) -> float:
        if rank < 1:
            raise IndexError("ranks start at 1")
        return float(self.points[rank - 1])

    def __len__(self) -> int:
        return self.points.size

    def as_xy(self) -> np.ndarray:
        return np.column_stack([np.arange(1, self.points.size + 1), self.points])


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Operating points ordered by increasing acceptance threshold."""

    thresholds: np.ndarray
    far: np.ndarray
    vr: np.ndarray

    @property
    def frr(self) -> np.ndarray:
        return 1.0 - self.vr

    def as_xy(self) -> np.ndarray:
        return np.column_stack([self.far, self.vr])


@dataclass(frozen=True)
class FoldAssignment:
    fold_of_image: dict
    k: int

    def members(self, fold: int) -> list:
        return [img for img, f in self.fold_of_image.items() if f == fold]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for f in self.fold_of_image.values():
            counts[f] += 1
        return counts


@dataclass(frozen=True)
class MetricSummary:
    name: str
    values: tuple[float, ...]
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size == 0:
            raise ValidationError("metric summary needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "mean", float(vals.mean()))
        # sample standard deviation; a single value has zero spread
        object.__setattr__(self, "std", float(vals.std(ddof=1)) if vals.size > 1 else 0.0)

    def to_dict(self) -> dict:
        return {"name": self.name, "mean": self.mean, "std": self.std, "values": list(self.values)}


def pool_scores(m: ScoreMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Split the matrix into genuine (same label) and impostor scores, row-major order."""
    same = m.probe_labels[:, None] == m.gallery_labels[None, :]
    return m.scores[same], m.scores[~same]


def _identity_scores(m: ScoreMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Best (minimum) score per gallery identity; identities in order of first appearance."""
    ids, first, inverse = np.unique(m.gallery_labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank_of = np.empty_like(order)
    rank_of[order] = np.arange(order.size)
    col_id = rank_of[inverse.ravel()]
    best = np.full((m.scores.shape[0], ids.size), np.inf)
    for j in range(m.scores.shape[1]):
        np.minimum(best[:, col_id[j]], m.scores[:, j], out=best[:, col_id[j]])
    return ids[order], best


def probe_ranks(m: ScoreMatrix) -> np.ndarray:
    """1-based rank of each probe's true identity among gallery identities.

    Identities are ordered by their best score; equal scores keep the order
    in which identities first appear in the gallery.
    """
    ids, best = _identity_scores(m)
    index = {label: i for i, label in enumerate(ids.tolist())}
    missing = [p for p in m.probe_labels.tolist() if p not in index]
    if missing:
        raise ProtocolError(f"probe identities absent from gallery: {sorted(set(map(str, missing)))[:5]}")
    true_idx = np.array([index[p] for p in m.probe_labels.tolist()])
    rows = np.arange(best.shape[0])
    true_score = best[rows, true_idx][:, None]
    cols = np.arange(best.shape[1])[None, :]
    ahead = (best < true_score) | ((best == true_score) & (cols < true_idx[:, None]))
    return ahead.sum(axis=1) + 1


def cmc(m: ScoreMatrix) -> CmcCurve:
    """Cumulative match characteristic over ranks 1..G (G = gallery identities)."""
    ranks = probe_ranks(m)
    n_ids = np.unique(m.gallery_labels).size
    counts = np.bincount(ranks, minlength=n_ids + 1)[1:]
    return CmcCurve(np.cumsum(counts) / ranks.size)


def rank1(c: CmcCurve) -> float:
    if len(c) == 0:
        raise ValidationError("empty CMC curve")
    return c[1]


def roc(genuine: Sequence[float], impostor: Sequence[float]) -> RocCurve:
    """Sweep every distinct score as an acceptance threshold (accept iff distance <= t).

    A leading ``-inf`` threshold gives the (0, 0) point; the largest score
    gives (1, 1).
    """
    g = np.sort(np.asarray(genuine, dtype=np.float64))
    i = np.sort(np.asarray(impostor, dtype=np.float64))
    if g.size == 0 or i.size == 0:
        raise ValidationError("ROC needs at least one genuine and one impostor score")
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([g, i]))])
    vr = np.searchsorted(g, thresholds, side="right") / g.size
    far = np.searchsorted(i, thresholds, side="right") / i.size
    return RocCurve(thresholds, far, vr)


def eer(r: RocCurve) -> float:
    """Rate at which FAR equals FRR.

    Returns the exact crossing when a swept point has FAR == FRR, otherwise
    linearly interpolates between the two points bracketing the sign change.
    """
    d = r.far - r.frr
    idx = int(np.argmax(d >= 0))
    if d[idx] == 0 or idx == 0:
        return float(r.far[idx])
    lam = -d[idx - 1] / (d[idx] - d[idx - 1])
    return float(r.far[idx - 1] + lam * (r.far[idx] - r.far[idx - 1]))


def _entries(index) -> list[tuple[str, object]]:
    entries = getattr(index, "entries", index)
    out = []
    for e in entries:
        if hasattr(e, "image_id"):
            out.append((e.image_id, e.label))
        else:
            image_id, label = e[0], e[1]
            out.append((image_id, label))
    return out


def kfold_split(index, k: int = 5, seed: int = 0) -> FoldAssignment:
    """Subject-stratified fold assignment.

    Subjects are visited in sorted order; each subject's images are shuffled
    with a generator seeded by ``seed`` and dealt round-robin, with the deal
    position carried across subjects so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    by_subject: dict[str, list[str]] = {}
    for image_id, label in _entries(index):
        by_subject.setdefault(str(label), []).append(image_id)
    rng = np.random.default_rng(seed)
    folds: dict = {}
    pos = 0
    for subject in sorted(by_subject):
        images = sorted(by_subject[subject])
        for j in rng.permutation(len(images)):
            folds[images[j]] = pos % k
            pos += 1
    return FoldAssignment(folds, k)


def _subsample_size(n: int, fraction: float) -> int:
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    return max(1, math.ceil(round(fraction * n, 9)))


def bootstrap_stats(values, metric: Callable[[np.ndarray], float], n_sets: int = 100,
                    fraction: float = 0.6, seed: int = 0, name: str = "metric") -> MetricSummary:
    """Evaluate ``metric`` on ``n_sets`` random subsets drawn without replacement.

    Each subset holds ``ceil(fraction * N)`` items of ``values`` (rows, for a
    2-D array).
    """
    arr = np.asarray(values)
    if arr.size == 0 or len(arr) == 0:
        raise ValidationError("bootstrap source is empty")
    if n_sets < 1:
        raise ValidationError("n_sets must be positive")
    size = _subsample_size(len(arr), fraction)
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(n_sets):
        pick = np.sort(rng.choice(len(arr), size=size, replace=False))
        results.append(float(metric(arr[pick])))
    return MetricSummary(name, tuple(results))


def bootstrap_eer(genuine, impostor, n_sets: int = 100, fraction: float = 0.6, seed: int = 0) -> MetricSummary:
    """EER over subsets holding ``fraction`` of the genuine and of the impostor scores."""
    g = np.asarray(genuine, dtype=np.float64)
    i = np.asarray(impostor, dtype=np.float64)
    if g.size == 0 or i.size == 0:
        raise ValidationError("bootstrap source is empty")
    ng, ni = _subsample_size(g.size, fraction), _subsample_size(i.size, fraction)
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(n_sets):
        gs = g[rng.choice(g.size, size=ng, replace=False)]
        im = i[rng.choice(i.size, size=ni, replace=False)]
        results.append(eer(roc(gs, im)))
    return MetricSummary("EER", tuple(results))


def bootstrap_rank1(m: ScoreMatrix, n_sets: int = 100, fraction: float = 0.6, seed: int = 0) -> MetricSummary:
    """Rank-1 rate over subsets of the probes (rows) of ``m``."""
    hits = (probe_ranks(m) == 1).astype(np.float64)
    return bootstrap_stats(hits, np.mean, n_sets, fraction, seed, name="R1")


@dataclass(frozen=True, eq=False)
class FoldResult:
    fold: int
    cmc: CmcCurve
    roc: RocCurve
    rank1: float
    eer: float
    n_probes: int
    n_gallery: int
    n_genuine: int
    n_impostor: int


@dataclass(frozen=True, eq=False)
class ProtocolResult:
    folds: tuple[FoldResult, ...]

    @property
    def rank1(self) -> MetricSummary:
        return MetricSummary("R1", tuple(f.rank1 for f in self.folds))

    @property
    def eer(self) -> MetricSummary:
        return MetricSummary("EER", tuple(f.eer for f in self.folds))

    @property
    def n_identification(self) -> int:
        return sum(f.n_probes for f in self.folds)

    @property
    def n_genuine(self) -> int:
        return sum(f.n_genuine for f in self.folds)

    @property
    def n_impostor(self) -> int:
        return sum(f.n_impostor for f in self.folds)


def evaluate_fold(features: np.ndarray, labels: np.ndarray, probe_mask: np.ndarray,
                  measure: str = CHI2, fold: int = 0) -> FoldResult:
    """Score one fold: probes are the masked rows, the gallery is every other row."""
    probe_idx = np.flatnonzero(probe_mask)
    gallery_idx = np.flatnonzero(~probe_mask)
    if probe_idx.size == 0 or gallery_idx.size == 0:
        raise ProtocolError(f"fold {fold}: empty probe or gallery set")
    m = score_matrix(features[probe_idx], features[gallery_idx], measure,
                     labels[probe_idx], labels[gallery_idx])
    try:
        curve = cmc(m)
    except ProtocolError as exc:
        raise ProtocolError(f"fold {fold}: {exc}") from None
    genuine, impostor = pool_scores(m)
    if genuine.size == 0 or impostor.size == 0:
        raise ProtocolError(f"fold {fold}: needs both genuine and impostor comparisons")
    r = roc(genuine, impostor)
    return FoldResult(fold, curve, r, rank1(curve), eer(r), probe_idx.size, gallery_idx.size,
                      genuine.size, impostor.size)


def run_protocol(features, labels: Sequence, image_ids: Sequence[str], folds: FoldAssignment,
                 measure: str = CHI2) -> ProtocolResult:
    """Run every fold of ``folds`` over the images listed in it.

    Images of ``image_ids`` without a fold (e.g. test images) are ignored.
    """
    feats = np.asarray(features, dtype=np.float64)
    ids = list(image_ids)
    keep = np.array([i in folds.fold_of_image for i in ids])
    if not keep.any():
        raise ProtocolError("no image carries a fold assignment")
    feats = feats[keep]
    labs = np.asarray([str(l) for l in labels])[keep]
    fold_of = np.array([folds.fold_of_image[i] for i, k in zip(ids, keep) if k])
    results = [evaluate_fold(feats, labs, fold_of == f, measure, f) for f in range(folds.k)]
    return ProtocolResult(tuple(results))
