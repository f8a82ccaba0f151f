"""Shared domain types: frame identities, records, pool state and round logs.

Tensors (feature vectors, probability maps, label masks, pixels) travel as
numpy arrays; the validators below check the invariants each kind carries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from src.utils.helpers import (
    DimensionMismatch,
    FrameSelectionError,
    NotNormalized,
    ShapeMismatch,
)

FeatureVector = NDArray[np.float64]
ProbMap = NDArray[np.float64]
LabelMask = NDArray[np.integer]

PROB_TOLERANCE = 1e-6
MAX_SEED = 2 ** 64 - 1


class Strategy(str, Enum):
    RANDOM = "random"
    ENTROPY = "entropy"
    EUCLIDEAN = "euclidean"
    COSINE = "cosine"
    # Anchor rows only: every non-test frame labeled.
    ALL = "all"

    @property
    def is_diversity(self) -> bool:
        return self in (Strategy.EUCLIDEAN, Strategy.COSINE)


@dataclass(frozen=True, order=True)
class FrameId:
    video: int
    index: int

    def __post_init__(self):
        if self.video < 0 or self.index < 0:
            raise FrameSelectionError("frame ids are nonnegative",
                                      {"frame": f"{self.video}:{self.index}"})

    def __str__(self) -> str:
        return f"{self.video}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "FrameId":
        video, sep, index = text.strip().partition(":")
        if not sep:
            raise FrameSelectionError("frame id must look like video:index", {"frame": text})
        try:
            return cls(int(video), int(index))
        except ValueError:
            raise FrameSelectionError("frame id must look like video:index", {"frame": text})


@dataclass(frozen=True)
class FrameRecord:
    id: FrameId
    feature_ref: str
    probmap_ref: Optional[str] = None
    label_ref: Optional[str] = None
    pixel_ref: Optional[str] = None
    split: str = "pool"


@dataclass(frozen=True)
class PoolState:
    labeled: FrozenSet[FrameId] = frozenset()
    unlabeled: FrozenSet[FrameId] = frozenset()
    test: FrozenSet[FrameId] = frozenset()
    round: int = 0
    seed: int = 0
    # Annotated but held out of training and of inter-distance references.
    validation: FrozenSet[FrameId] = frozenset()

    @property
    def training(self) -> FrozenSet[FrameId]:
        return self.labeled - self.validation

    @property
    def universe(self) -> FrozenSet[FrameId]:
        return self.labeled | self.unlabeled | self.test

    def videos(self) -> Tuple[int, ...]:
        return tuple(sorted({frame.video for frame in self.universe}))

    def unlabeled_in(self, video: int) -> list:
        return sorted(frame for frame in self.unlabeled if frame.video == video)


@dataclass(frozen=True)
class RoundLog:
    round: int
    strategy: Strategy
    selected: Tuple[FrameId, ...]
    per_class_iou: Tuple[Optional[float], ...]
    miou: Optional[float]
    seed: int
    n_labeled: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoundLog):
            return NotImplemented
        return (self.round, self.strategy, self.selected, self.seed, self.n_labeled) == \
            (other.round, other.strategy, other.selected, other.seed, other.n_labeled) \
            and _same_floats(self.per_class_iou, other.per_class_iou) \
            and _same_floats((self.miou,), (other.miou,))

    __hash__ = None


def _same_floats(a, b) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x is None or y is None:
            if x is not y:
                return False
        elif not (x == y or (math.isnan(x) and math.isnan(y))):
            return False
    return True


def validate_feature(values, dim: Optional[int] = None, frame: Optional[FrameId] = None) -> FeatureVector:
    vector = np.asarray(values, dtype=np.float64)
    details = {"frame": str(frame)} if frame is not None else {}
    if vector.ndim != 1 or vector.size < 1:
        raise ShapeMismatch("feature vectors are 1-D and nonempty",
                            {**details, "shape": vector.shape})
    if dim is not None and vector.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {vector.size}",
                                {**details, "dimension": vector.size})
    if not np.all(np.isfinite(vector)):
        raise FrameSelectionError("feature vector has non-finite entries", details)
    return vector


def validate_probmap(probs, frame: Optional[FrameId] = None) -> ProbMap:
    """Check a K×H×W map: entries in [0, 1], each pixel summing to 1."""
    pm = np.asarray(probs, dtype=np.float64)
    details = {"frame": str(frame)} if frame is not None else {}
    if pm.ndim != 3:
        raise ShapeMismatch("probability maps are K×H×W", {**details, "shape": pm.shape})
    bad = (pm < 0) | (pm > 1) | ~np.isfinite(pm)
    if bad.any():
        _, h, w = np.argwhere(bad)[0]
        raise NotNormalized("probability outside [0, 1]", {**details, "pixel": (int(h), int(w))})
    sums = pm.sum(axis=0)
    off = np.abs(sums - 1.0) > PROB_TOLERANCE
    if off.any():
        h, w = np.argwhere(off)[0]
        raise NotNormalized(f"probabilities sum to {sums[h, w]!r}",
                            {**details, "pixel": (int(h), int(w))})
    return pm


def validate_label_mask(mask, num_classes: Optional[int] = None,
                        shape: Optional[Tuple[int, int]] = None) -> LabelMask:
    labels = np.asarray(mask)
    if labels.ndim != 2:
        raise ShapeMismatch("label masks are H×W", {"shape": labels.shape})
    if shape is not None and labels.shape != tuple(shape):
        raise ShapeMismatch(f"expected mask shape {tuple(shape)}", {"shape": labels.shape})
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.mod(labels, 1) == 0):
            raise FrameSelectionError("label masks hold integer class indices")
        labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 0 or (num_classes is not None and labels.max() >= num_classes)):
        raise FrameSelectionError("class index out of range",
                                  {"min": int(labels.min()), "max": int(labels.max())})
    return labels
