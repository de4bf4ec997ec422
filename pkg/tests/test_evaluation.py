import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from earkit.errors import ProtocolError, ValidationError
from earkit.evaluation import (FoldAssignment, MetricSummary, bootstrap_eer, bootstrap_rank1, bootstrap_stats, cmc,
                               eer, evaluate_fold, kfold_split, pool_scores, probe_ranks, rank1, roc, run_protocol)
from earkit.matching import ScoreMatrix
from oracles import eer_sweep, rank1_argmin, roc_sweep

scores = st.lists(st.integers(0, 20).map(float), min_size=1, max_size=30)


def test_eer_perfect_separation():
    assert eer(roc([0.1, 0.2], [0.5, 0.6])) == 0.0


def test_eer_interleaved_pair():
    # FAR and FRR cross exactly at threshold 0.2 where both equal 1/2
    r = roc([0.1, 0.3], [0.2, 0.4])
    assert r.far.tolist() == [0.0, 0.0, 0.5, 0.5, 1.0]
    assert r.vr.tolist() == [0.0, 0.5, 0.5, 1.0, 1.0]
    assert eer(r) == 0.5


def test_eer_total_overlap():
    # a single jump from (0, 0) to (1, 1) crosses FAR == FRR half way
    assert eer(roc([1.0, 1.0], [1.0, 1.0])) == 0.5


def test_eer_reversed_scores():
    assert eer(roc([0.9, 0.8], [0.1, 0.2])) == 1.0


def test_eer_linear_interpolation():
    # points (FAR, FRR): (0, 1), (0, 2/3), (1/2, 2/3), (1/2, 1/3), (1, 1/3), (1, 0)
    r = roc([1.0, 3.0, 5.0], [2.0, 4.0])
    assert eer(r) == pytest.approx(0.5)
    assert eer(roc([1.0, 2.0, 10.0], [3.0, 4.0, 5.0, 6.0])) == pytest.approx(1 / 3)


@settings(max_examples=150, deadline=None)
@given(scores, scores)
def test_eer_with_ties_brackets_sweep_oracle(genuine, impostor):
    r = roc(genuine, impostor)
    assert r.as_xy().tolist() == [list(p) for p in roc_sweep(genuine, impostor)]
    e = eer(r)
    assert 0.0 <= e <= 1.0
    # the interpolated crossing can never be worse than the best swept operating point
    assert e <= eer_sweep(genuine, impostor) + 1e-12


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=40, unique=True),
       st.lists(st.floats(0, 1), min_size=1, max_size=40, unique=True))
def test_eer_distinct_scores_matches_sweep(genuine, impostor):
    if set(genuine) & set(impostor):
        return
    assert abs(eer(roc(genuine, impostor)) - eer_sweep(genuine, impostor)) <= 1e-9


def test_roc_monotone_and_bounded(rng):
    r = roc(rng.random(50), rng.random(80) + 0.3)
    assert r.far[0] == 0 and r.vr[0] == 0 and r.far[-1] == 1 and r.vr[-1] == 1
    assert np.all(np.diff(r.far) >= 0) and np.all(np.diff(r.vr) >= 0)
    assert np.allclose(r.frr, 1 - r.vr)


def test_roc_rejects_empty():
    with pytest.raises(ValidationError):
        roc([], [1.0])


def _matrix(scores, probe_labels, gallery_labels):
    return ScoreMatrix(np.asarray(scores, float), np.asarray(probe_labels), np.asarray(gallery_labels))


def test_cmc_uses_best_score_per_identity():
    m = _matrix([[0.5, 0.1, 0.3, 0.9],
                 [0.2, 0.6, 0.7, 0.1]], ["b", "a"], ["a", "b", "b", "c"])
    # probe b: b best 0.1 < a 0.5 -> rank 1; probe a: c 0.1 < a 0.2 -> rank 2
    assert probe_ranks(m).tolist() == [1, 2]
    c = cmc(m)
    assert c.points.tolist() == [0.5, 1.0, 1.0]
    assert rank1(c) == 0.5 and c[3] == 1.0


def test_cmc_ties_follow_gallery_order():
    m = _matrix([[0.3, 0.3], [0.3, 0.3]], ["x", "y"], ["x", "y"])
    assert probe_ranks(m).tolist() == [1, 2]


def test_cmc_missing_identity_raises():
    with pytest.raises(ProtocolError):
        cmc(_matrix([[0.1]], ["z"], ["a"]))


def test_cmc_matches_argmin_oracle(rng):
    for _ in range(50):
        n_ids = int(rng.integers(2, 8))
        gl = rng.integers(0, n_ids, int(rng.integers(n_ids, 20)))
        gl[:n_ids] = np.arange(n_ids)
        pl = rng.integers(0, n_ids, int(rng.integers(1, 15)))
        s = rng.random((pl.size, gl.size))
        c = cmc(_matrix(s, pl, gl))
        assert c[1] == rank1_argmin(s.tolist(), pl.tolist(), gl.tolist())
        assert np.all(np.diff(c.points) >= 0) and c.points[-1] == 1.0
        assert len(c) == n_ids


def test_pool_scores():
    m = _matrix([[1, 2, 3], [4, 5, 6]], ["a", "b"], ["a", "b", "a"])
    g, i = pool_scores(m)
    assert g.tolist() == [1, 3, 5] and i.tolist() == [2, 4, 6]


def test_kfold_balanced_and_stratified():
    entries = [(f"s{s:03d}/{j}.png", f"s{s:03d}") for s in range(100) for j in range(6)]
    folds = kfold_split(entries, k=5, seed=0)
    assert folds.sizes() == [120] * 5
    for s in range(100):
        per_subject = [folds.fold_of_image[f"s{s:03d}/{j}.png"] for j in range(6)]
        counts = np.bincount(per_subject, minlength=5)
        assert counts.max() - counts.min() <= 1
    assert kfold_split(entries, 5, 0) == folds
    assert kfold_split(entries, 5, 1) != folds


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=15), st.integers(2, 7), st.integers(0, 10))
def test_kfold_sizes_differ_by_at_most_one(per_subject, k, seed):
    entries = [(f"{s}/{j}", str(s)) for s, n in enumerate(per_subject) for j in range(n)]
    folds = kfold_split(entries, k, seed)
    assert len(folds.fold_of_image) == len(entries)
    assert max(folds.sizes()) - min(folds.sizes()) <= 1


def test_kfold_rejects_small_k():
    with pytest.raises(ValidationError):
        kfold_split([("a", "a")], k=1)


def test_metric_summary():
    s = MetricSummary("R1", (0.5, 0.7, 0.9))
    assert s.mean == pytest.approx(0.7)
    assert s.std == pytest.approx(0.2)
    assert MetricSummary("R1", (0.4,)).std == 0.0
    with pytest.raises(ValidationError):
        MetricSummary("R1", ())


def test_bootstrap_draws_without_replacement():
    seen = []

    def metric(x):
        seen.append(x.copy())
        return x.mean()

    out = bootstrap_stats(np.arange(10.0), metric, n_sets=20, fraction=0.6, seed=3)
    assert len(out.values) == 20
    for s in seen:
        assert s.size == 6 and np.unique(s).size == 6
    again = bootstrap_stats(np.arange(10.0), np.mean, n_sets=20, fraction=0.6, seed=3)
    assert again.values == out.values


def test_bootstrap_full_fraction_is_constant():
    out = bootstrap_stats(np.arange(7.0), np.mean, n_sets=5, fraction=1.0)
    assert set(out.values) == {3.0} and out.std == 0.0


def test_bootstrap_eer_and_rank1(rng):
    g, i = rng.random(40), rng.random(200) + 0.5
    s = bootstrap_eer(g, i, n_sets=10)
    assert len(s.values) == 10 and all(0 <= v <= 1 for v in s.values)
    m = _matrix(rng.random((10, 4)), list("abab" * 2 + "ab"), list("abcd"))
    r = bootstrap_rank1(m, n_sets=10)
    assert all(v in {k / 6 for k in range(7)} for v in r.values)
    with pytest.raises(ValidationError):
        bootstrap_stats([], np.mean)
    with pytest.raises(ValidationError):
        bootstrap_stats([1.0], np.mean, fraction=0)


def test_evaluate_fold_counts(rng):
    labels = np.repeat(np.arange(4).astype(str), 3)
    feats = rng.random((12, 5))
    mask = np.zeros(12, bool)
    mask[::3] = True
    f = evaluate_fold(feats, labels, mask)
    assert (f.n_probes, f.n_gallery) == (4, 8)
    assert f.n_genuine == 4 * 2 and f.n_impostor == 4 * 6
    assert math.isclose(f.rank1, f.cmc[1])


def test_run_protocol_ignores_unassigned(rng):
    labels = np.repeat(["a", "b", "c"], 4)
    ids = [f"{l}/{i}" for i, l in enumerate(labels)]
    folds = kfold_split([(i, l) for i, l in zip(ids, labels) if not i.endswith(("/3", "/7"))], k=2)
    res = run_protocol(rng.random((12, 4)), labels, ids, folds)
    assert len(res.folds) == 2 and res.n_identification == 10


def test_run_protocol_missing_identity():
    folds = FoldAssignment({"a/0": 0, "b/0": 1, "b/1": 0}, 2)
    with pytest.raises(ProtocolError):
        run_protocol(np.eye(3), ["a", "b", "b"], ["a/0", "b/0", "b/1"], folds)
