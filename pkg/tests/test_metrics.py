import numpy as np
import pytest

from leakseg.data import Fold
from leakseg.metrics import (FrameResult, aggregate, boundary_f,
                             boundary_tolerance, evaluate_frame,
                             fold_weighted_average, jaccard, mask_boundary)

from oracles import naive_boundary, naive_boundary_f, naive_jaccard

# Frame counts of the 5-fold grouping used for the published cross-validation
# run (31 videos); the derived weights and the weighted aggregation below are
# internally checkable arithmetic.
FOLD_FRAME_COUNTS = (
    (451, 451, 451, 451, 451, 451, 451),
    (450, 450, 451, 300, 300, 300),
    (300, 551, 270, 270, 270, 250),
    (451, 551, 400, 393, 400, 400),
    (394, 370, 350, 350, 350, 400),
)
PUBLISHED_WEIGHTS = (0.2603, 0.1856, 0.1576, 0.2140, 0.1825)
PUBLISHED_FOLD_JF = (68.39, 58.14, 76.11, 64.78, 63.22)


def square_mask(h, w, y0, x0, size):
    m = np.zeros((h, w), dtype=np.uint8)
    m[y0 : y0 + size, x0 : x0 + size] = 1
    return m


# -- jaccard -------------------------------------------------------------------


def test_jaccard_identity():
    m = square_mask(10, 10, 2, 2, 5)
    assert jaccard(m, m) == 100.0


def test_jaccard_pixel_counting():
    pred = np.zeros((2, 2), dtype=np.uint8)
    gt = np.zeros((2, 2), dtype=np.uint8)
    pred[0, 0] = pred[0, 1] = 1
    gt[0, 1] = gt[1, 1] = 1
    assert jaccard(pred, gt) == pytest.approx(100.0 / 3.0)


def test_jaccard_empty_conventions():
    empty = np.zeros((5, 5), dtype=np.uint8)
    full = square_mask(5, 5, 1, 1, 2)
    assert jaccard(empty, empty) == 100.0
    assert jaccard(empty, full) == 0.0
    assert jaccard(full, empty) == 0.0


def test_jaccard_symmetry_and_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        pred = (rng.random((12, 12)) < 0.4).astype(np.uint8)
        gt = (rng.random((12, 12)) < 0.4).astype(np.uint8)
        assert jaccard(pred, gt) == pytest.approx(naive_jaccard(pred, gt))
        assert jaccard(pred, gt) == pytest.approx(jaccard(gt, pred))


def test_jaccard_shape_mismatch():
    with pytest.raises(ValueError):
        jaccard(np.zeros((2, 2)), np.zeros((3, 3)))


# -- boundary F -----------------------------------------------------------------


def test_boundary_extraction_matches_naive():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = (rng.random((10, 10)) < 0.5).astype(np.uint8)
        assert np.array_equal(mask_boundary(m), naive_boundary(m))


def test_boundary_border_counts_as_background():
    full = np.ones((6, 6), dtype=np.uint8)
    b = mask_boundary(full)
    assert b[0].all() and b[-1].all() and b[:, 0].all() and b[:, -1].all()
    assert not b[1:-1, 1:-1].any()


def test_boundary_f_identical_masks():
    m = square_mask(16, 16, 4, 4, 6)
    assert boundary_f(m, m) == 100.0


def test_boundary_f_one_pixel_shift_within_tolerance():
    gt = square_mask(16, 16, 4, 4, 6)
    pred = square_mask(16, 16, 4, 5, 6)
    assert boundary_tolerance((16, 16)) == 1
    assert boundary_f(pred, gt) == 100.0


def test_boundary_f_large_shift_thin_shape():
    gt = np.zeros((32, 32), dtype=np.uint8)
    gt[10, 4:28] = 1
    pred = np.zeros_like(gt)
    pred[15, 4:28] = 1  # shifted well beyond r = ceil(0.0075 * sqrt(2)*32) = 1
    assert boundary_f(pred, gt) == 0.0


def test_boundary_f_empty_conventions():
    empty = np.zeros((8, 8), dtype=np.uint8)
    assert boundary_f(empty, empty) == 100.0
    assert boundary_f(empty, square_mask(8, 8, 2, 2, 3)) == 0.0


def test_boundary_f_matches_naive_oracle():
    rng = np.random.default_rng(2)
    count = 0
    while count < 50:
        h = int(rng.integers(8, 17))
        w = int(rng.integers(8, 17))
        gt = square_mask(h, w, int(rng.integers(0, h // 2)), int(rng.integers(0, w // 2)),
                         int(rng.integers(2, 6)))
        dy, dx = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
        pred = np.roll(np.roll(gt, dy, axis=0), dx, axis=1)
        r = boundary_tolerance((h, w))
        assert boundary_f(pred, gt) == pytest.approx(naive_boundary_f(pred, gt, r))
        assert boundary_f(pred, gt) == pytest.approx(boundary_f(gt, pred))
        count += 1


# -- aggregation -----------------------------------------------------------------


def _frame(vid, idx, j, f, tp=0, fp=0, fn=0):
    return FrameResult(vid, idx, j, f, tp, fp, fn)


def test_unified_is_frame_mean_and_order_invariant():
    results = [
        _frame("a", 0, 100.0, 100.0),
        _frame("a", 1, 100.0, 100.0),
        _frame("b", 0, 0.0, 0.0),
        _frame("b", 1, 0.0, 0.0),
    ]
    rep = aggregate(results, "unified")
    assert rep.overall == (50.0, 50.0, 50.0)
    rep2 = aggregate(list(reversed(results)), "unified")
    assert rep2.overall == rep.overall


def test_singleton_mean():
    rep = aggregate([_frame("v", 0, 73.0, 81.0)], "unified")
    assert rep.overall == (73.0, 81.0, 77.0)


def test_unknown_protocol():
    with pytest.raises(ValueError):
        aggregate([_frame("v", 0, 1.0, 1.0)], "bogus")


def test_per_video_confusion_accumulates_counts():
    # video a: one frame dominated by FP, one perfect; accumulated J reflects counts
    results = [
        _frame("a", 0, 0.0, 50.0, tp=0, fp=10, fn=0),
        _frame("a", 1, 100.0, 100.0, tp=10, fp=0, fn=0),
        _frame("b", 0, 100.0, 100.0, tp=0, fp=0, fn=0),
    ]
    rep = aggregate(results, "per_video_confusion")
    va = next(v for v in rep.per_video if v.video_id == "a")
    assert va.j == pytest.approx(100.0 * 10 / 20)
    assert va.f == pytest.approx(75.0)
    vb = next(v for v in rep.per_video if v.video_id == "b")
    assert vb.j == 100.0  # no foreground anywhere, correctly empty
    assert rep.overall[0] == pytest.approx((va.j + vb.j) / 2)


def test_fold_weights_from_frame_counts_match_published():
    total = sum(sum(f) for f in FOLD_FRAME_COUNTS)
    weights = [sum(f) / total for f in FOLD_FRAME_COUNTS]
    for got, want in zip(weights, PUBLISHED_WEIGHTS):
        assert got == pytest.approx(want, abs=1e-4)
    assert sum(weights) == pytest.approx(1.0, abs=1e-4)


def test_weighted_aggregation_reproduces_headline_score():
    combined = fold_weighted_average(PUBLISHED_FOLD_JF, PUBLISHED_WEIGHTS)
    assert combined == pytest.approx(65.99, abs=0.01)


def test_fold_weighted_average_refuses_bad_weights():
    with pytest.raises(ValueError):
        fold_weighted_average([1.0, 2.0], [0.7, 0.7])


def test_aggregate_refuses_bad_fold_weights():
    results = [_frame("a", 0, 50.0, 50.0), _frame("b", 0, 50.0, 50.0)]
    folds = [Fold(videos=["a"], weight=0.7), Fold(videos=["b"], weight=0.7)]
    with pytest.raises(ValueError, match="sum"):
        aggregate(results, "fold_weighted", folds=folds)


def test_fold_weighted_protocol():
    results = [
        _frame("a", 0, 80.0, 60.0),
        _frame("b", 0, 40.0, 20.0),
    ]
    folds = [Fold(videos=["a"], weight=0.75), Fold(videos=["b"], weight=0.25)]
    rep = aggregate(results, "fold_weighted", folds=folds)
    assert rep.overall[0] == pytest.approx(0.75 * 80 + 0.25 * 40)
    assert rep.overall[2] == pytest.approx(0.75 * 70 + 0.25 * 30)
    assert len(rep.per_fold) == 2


def test_evaluate_frame_counts():
    pred = square_mask(8, 8, 0, 0, 4)
    gt = square_mask(8, 8, 0, 2, 4)
    r = evaluate_frame(pred, gt, "v", 3)
    assert r.tp == 8 and r.fp == 8 and r.fn == 8
    assert r.j == pytest.approx(100.0 * 8 / 24)
