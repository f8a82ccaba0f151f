"""Prediction entropy (natural log, 0·ln 0 = 0)."""

from typing import Optional

import numpy as np
from scipy.special import entr

from src.core.types import FrameId, PROB_TOLERANCE, validate_probmap
from src.utils.helpers import NotNormalized


def pixel_entropy(p) -> float:
    probs = np.asarray(p, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0:
        raise NotNormalized("expected a nonempty probability vector", {"shape": probs.shape})
    if np.any((probs < 0) | (probs > 1)):
        raise NotNormalized("probability outside [0, 1]")
    total = probs.sum()
    if abs(total - 1.0) > PROB_TOLERANCE:
        raise NotNormalized(f"probabilities sum to {total!r}")
    return float(entr(probs).sum())


def entropy_map(pm) -> np.ndarray:
    """Per-pixel entropy of a validated K×H×W map, shape H×W."""
    return entr(np.asarray(pm, dtype=np.float64)).sum(axis=0)


def frame_mean_entropy(pm, frame: Optional[FrameId] = None) -> float:
    probs = validate_probmap(pm, frame)
    return float(entropy_map(probs).mean())
