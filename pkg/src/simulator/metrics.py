"""IoU and mean IoU with intersections and unions accumulated over frames."""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from src.utils.helpers import LengthMismatch, ShapeMismatch


@dataclass(frozen=True)
class MiouResult:
    miou: Optional[float]
    # None marks a class whose accumulated union is empty (excluded from the mean).
    per_class: Tuple[Optional[float], ...]

    @property
    def excluded(self) -> Tuple[int, ...]:
        return tuple(k for k, value in enumerate(self.per_class) if value is None)


def compute_iou(pred, gt, k: int) -> Optional[float]:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatch("prediction and annotation differ in shape",
                            {"pred": pred.shape, "gt": gt.shape})
    in_pred, in_gt = pred == k, gt == k
    union = int(np.count_nonzero(in_pred | in_gt))
    if union == 0:
        return None
    return np.count_nonzero(in_pred & in_gt) / union


def compute_miou(preds: Sequence, gts: Sequence, num_classes: int) -> MiouResult:
    if len(preds) != len(gts):
        raise LengthMismatch(f"{len(preds)} predictions for {len(gts)} annotations",
                             {"preds": len(preds), "gts": len(gts)})
    flat_preds, flat_gts = [], []
    for frame, (pred, gt) in enumerate(zip(preds, gts)):
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeMismatch("prediction and annotation differ in shape",
                                {"frame": frame, "pred": pred.shape, "gt": gt.shape})
        flat_preds.append(pred.ravel())
        flat_gts.append(gt.ravel())
    labels = np.arange(num_classes)
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    if sum(gt.size for gt in flat_gts):
        with warnings.catch_warnings():
            # Small masks hold few pixels per class.
            warnings.filterwarnings("ignore", message="The number of unique classes",
                                    category=UserWarning)
            confusion = confusion_matrix(np.concatenate(flat_gts), np.concatenate(flat_preds),
                                         labels=labels)

    intersection = np.diag(confusion)
    union = confusion.sum(axis=0) + confusion.sum(axis=1) - intersection
    per_class = tuple(float(intersection[k] / union[k]) if union[k] > 0 else None
                      for k in range(num_classes))
    defined = [value for value in per_class if value is not None]
    miou = float(np.mean(defined)) if defined else None
    return MiouResult(miou, per_class)
