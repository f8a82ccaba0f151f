import warnings

import numpy as np
import pytest

from src.simulator.metrics import compute_iou, compute_miou
from src.utils.helpers import LengthMismatch, ShapeMismatch


def brute_force(preds, gts, K):
    inter = np.zeros(K, dtype=np.int64)
    union = np.zeros(K, dtype=np.int64)
    for pred, gt in zip(preds, gts):
        for p, g in zip(pred.ravel().tolist(), gt.ravel().tolist()):
            for k in range(K):
                inter[k] += (p == k) and (g == k)
                union[k] += (p == k) or (g == k)
    per_class = [inter[k] / union[k] if union[k] else None for k in range(K)]
    defined = [v for v in per_class if v is not None]
    return per_class, (sum(defined) / len(defined) if defined else None)


def test_perfect_prediction():
    gt = np.array([[0, 1], [1, 2]])
    result = compute_miou([gt], [gt], 3)
    assert result.miou == 1.0
    assert result.per_class == (1.0, 1.0, 1.0)


def test_absent_class_excluded():
    """A class in neither prediction nor annotation is left out of the mean"""
    gt = np.array([[0, 0], [1, 1]])
    pred = np.array([[0, 1], [1, 1]])
    result = compute_miou([pred], [gt], 3)
    assert result.per_class[2] is None
    assert result.excluded == (2,)
    assert result.miou == pytest.approx((0.5 + 2 / 3) / 2)


def test_compute_iou():
    assert compute_iou(np.array([0, 1]), np.array([1, 1]), 1) == 0.5
    assert compute_iou(np.array([0, 0]), np.array([0, 0]), 3) is None


def test_errors():
    with pytest.raises(LengthMismatch):
        compute_miou([np.zeros((2, 2))], [], 2)
    with pytest.raises(ShapeMismatch):
        compute_miou([np.zeros((2, 2))], [np.zeros((3, 2))], 2)


def test_matches_brute_force_and_concatenation():
    rng = np.random.default_rng(0)
    for _ in range(100):
        K = int(rng.integers(2, 26))
        n = int(rng.integers(1, 4))
        h, w = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        gts = [rng.integers(K, size=(h, w)) for _ in range(n)]
        preds = [rng.integers(K, size=(h, w)) for _ in range(n)]
        result = compute_miou(preds, gts, K)
        per_class, miou = brute_force(preds, gts, K)
        assert result.per_class == tuple(per_class)
        assert result.miou == pytest.approx(miou, abs=1e-12)
        joined = compute_miou([np.concatenate(preds)], [np.concatenate(gts)], K)
        assert joined.per_class == result.per_class


def test_small_masks_raise_no_warnings():
    gts = [np.array([[0, 1]]), np.array([[2, 3]])]
    preds = [np.array([[0, 1]]), np.array([[3, 2]])]
    with warnings.catch_warnings():
        warnings.simplefilter("error", UserWarning)
        result = compute_miou(preds, gts, 4)
    assert result.per_class == (1.0, 1.0, 0.0, 0.0)
