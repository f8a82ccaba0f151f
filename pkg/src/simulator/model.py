"""Nearest-centroid probabilistic segmenter used in place of a trained network."""

import logging
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import softmax

from src.utils.helpers import NoLabeledData, NoPresentClasses, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CentroidModel:
    centroids: np.ndarray  # K×d, NaN rows for absent classes
    present: np.ndarray    # K booleans
    temperature: float

    @property
    def num_classes(self) -> int:
        return int(self.present.size)


def fit_model(labeled_frames: Iterable[Tuple[np.ndarray, np.ndarray]], num_classes: int,
              temperature: float = 1.0) -> CentroidModel:
    """Per-class mean of the labeled pixel features (H×W×d pixels, H×W masks)."""
    feature_blocks, label_blocks = [], []
    for pixels, mask in labeled_frames:
        pixels = np.asarray(pixels, dtype=np.float64)
        mask = np.asarray(mask)
        if pixels.shape[:-1] != mask.shape:
            raise ShapeMismatch("pixel features and mask disagree",
                                {"pixels": pixels.shape, "mask": mask.shape})
        feature_blocks.append(pixels.reshape(-1, pixels.shape[-1]))
        label_blocks.append(mask.ravel())
    if not feature_blocks or sum(block.size for block in label_blocks) == 0:
        raise NoLabeledData("no labeled pixels to fit a model on")

    features = np.concatenate(feature_blocks)
    labels = np.concatenate(label_blocks).astype(np.int64)
    sums = np.zeros((num_classes, features.shape[1]))
    np.add.at(sums, labels, features)
    counts = np.bincount(labels, minlength=num_classes)
    present = counts > 0
    centroids = np.full_like(sums, np.nan)
    centroids[present] = sums[present] / counts[present, np.newaxis]
    absent = np.flatnonzero(~present)
    if absent.size:
        logger.debug(f"Classes absent from the labeled set: {absent.tolist()}")
    return CentroidModel(centroids, present, float(temperature))


def predict_probmap(model: CentroidModel, pixels: np.ndarray) -> np.ndarray:
    """K×H×W map with p_i proportional to exp(-||x - centroid_i|| / temperature)
    over present classes and 0 for absent ones."""
    if not model.present.any():
        raise NoPresentClasses("model has no present class")
    pixels = np.asarray(pixels, dtype=np.float64)
    height, width, dim = pixels.shape
    distances = cdist(pixels.reshape(-1, dim), model.centroids[model.present])
    probs = np.zeros((height * width, model.num_classes))
    probs[:, model.present] = softmax(-distances / model.temperature, axis=1)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs.T.reshape(model.num_classes, height, width)


def predict_labels(model: CentroidModel, pixels: np.ndarray) -> np.ndarray:
    """Argmax prediction; ties go to the lowest class index."""
    return np.argmax(predict_probmap(model, pixels), axis=0)
