import math

import numpy as np
import pytest

from src.acquisition.entropy import entropy_map, frame_mean_entropy, pixel_entropy
from src.core.types import FrameId
from src.utils.helpers import NotNormalized


def test_uniform_entropy_is_log_k():
    assert pixel_entropy(np.full(25, 1 / 25)) == pytest.approx(math.log(25), abs=1e-12)


def test_one_hot_entropy_is_zero():
    p = np.zeros(25)
    p[3] = 1.0
    assert pixel_entropy(p) == 0.0


def test_pixel_entropy_rejects_unnormalized():
    with pytest.raises(NotNormalized):
        pixel_entropy([0.5, 0.6])


def test_frame_mean_entropy_half_uniform():
    """Half one-hot, half uniform pixels average to ln(25) / 2"""
    K, H, W = 25, 4, 6
    pm = np.zeros((K, H, W))
    pm[0, :, :3] = 1.0
    pm[:, :, 3:] = 1 / K
    assert frame_mean_entropy(pm) == pytest.approx(math.log(K) / 2, abs=1e-12)
    assert entropy_map(pm).shape == (H, W)


def test_frame_mean_entropy_names_bad_pixel():
    pm = np.full((2, 3, 3), 0.5)
    pm[0, 2, 1] = 0.7
    with pytest.raises(NotNormalized) as exc:
        frame_mean_entropy(pm, FrameId(4, 2))
    assert exc.value.details["pixel"] == (2, 1)
    assert exc.value.details["frame"] == "4:2"
