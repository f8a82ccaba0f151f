import numpy as np
import pytest
from scipy.signal import convolve2d

from src.core.types import FrameId, FrameRecord
from src.preprocess.filtering import (
    PreprocessConfig,
    blur_score,
    effective_threshold,
    filter_frames,
    filter_frames_with_audit,
    pixel_euclidean,
    to_unit_range,
)
from src.utils.helpers import MissingPixels, ShapeMismatch, TooSmall


def checkerboard(n=8):
    return (np.indices((n, n)).sum(axis=0) % 2).astype(np.float64)[np.newaxis]


def box_blur(image):
    return convolve2d(image[0], np.full((2, 2), 0.25), mode="same", boundary="symm")[np.newaxis]


def record(video, index):
    return FrameRecord(FrameId(video, index), "f", pixel_ref=f"{video}:{index}")


def test_pixel_euclidean():
    a = np.zeros((1, 2, 2))
    b = np.ones((1, 2, 2))
    assert pixel_euclidean(a, b) == pytest.approx(2.0)
    with pytest.raises(ShapeMismatch):
        pixel_euclidean(a, np.ones((1, 3, 3)))


def test_integer_pixels_scale_to_unit_range():
    assert to_unit_range(np.array([0, 255], dtype=np.uint16)).tolist() == [0.0, 1.0]


def test_blur_score_constant_is_zero():
    assert blur_score(np.full((3, 5, 5), 0.4)) == 0.0


def test_blur_score_prefers_sharp():
    """Checkerboard scores above its box-blurred copy, matching a direct convolution"""
    sharp = checkerboard()
    blurred = box_blur(sharp)
    assert blur_score(sharp) > blur_score(blurred)
    kernel = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=float)
    padded = np.pad(sharp[0], 1, mode="symmetric")
    expected = np.var([[np.sum(padded[r:r + 3, c:c + 3] * kernel) for c in range(8)]
                       for r in range(8)])
    assert blur_score(sharp) == pytest.approx(expected)


@pytest.mark.parametrize("n, expected", [(3, 20 / 9), (5, 0.8)])
def test_blur_score_centred_impulse(n, expected):
    """Response -4 at the impulse and 1 at its four neighbours, 0 elsewhere"""
    image = np.zeros((1, n, n))
    image[0, n // 2, n // 2] = 1.0
    assert blur_score(image) == pytest.approx(expected)


def test_blur_score_too_small():
    with pytest.raises(TooSmall):
        blur_score(np.zeros((1, 2, 5)))


def test_ramp_keeps_every_other_frame():
    """Frames one unit apart with threshold 1.5 keep indices 0, 2, 4, ..."""
    pixels = {}
    for i in range(7):
        image = np.zeros((1, 3, 3))
        image[0, 1, 1] = float(i)
        pixels[FrameId(0, i)] = image
    records = [record(0, i) for i in range(7)]
    cfg = PreprocessConfig(dedup_threshold=1.5)
    kept = filter_frames(records, cfg, lambda r: pixels[r.id])
    assert [r.id.index for r in kept] == [0, 2, 4, 6]


def test_identical_frames_keep_only_first():
    records = [record(0, i) for i in range(4)]
    cfg = PreprocessConfig(dedup_threshold=0.1)
    kept = filter_frames(records, cfg, lambda r: np.ones((1, 3, 3)))
    assert [r.id for r in kept] == [FrameId(0, 0)]


def test_first_frame_of_each_video_kept_and_order_preserved():
    records = [record(1, 0), record(0, 0), record(1, 1), record(0, 1)]
    cfg = PreprocessConfig(dedup_threshold=10.0)
    kept, audit = filter_frames_with_audit(records, cfg, lambda r: np.zeros((1, 3, 3)))
    assert [r.id for r in kept] == [FrameId(1, 0), FrameId(0, 0)]
    assert [row.record.id for row in audit] == [r.id for r in records]
    assert audit[2].distance_to_last_kept == 0.0 and not audit[2].kept


def test_blurry_frames_dropped_before_dedup():
    sharp = checkerboard(6)
    flat = np.full((1, 6, 6), 0.5)
    images = {0: flat, 1: sharp, 2: 1 - sharp}
    records = [record(0, i) for i in range(3)]
    cfg = PreprocessConfig(dedup_threshold=0.0, blur_threshold=0.01)
    kept, audit = filter_frames_with_audit(records, cfg, lambda r: images[r.id.index])
    assert [r.id.index for r in kept] == [1, 2]
    assert audit[0].kept is False and audit[0].distance_to_last_kept is None


def test_percentile_threshold():
    pixels = [np.full((1, 1, 1), v) for v in (0.0, 1.0, 3.0, 6.0)]
    cfg = PreprocessConfig(dedup_percentile=50.0)
    assert effective_threshold(cfg, pixels) == pytest.approx(2.0)


def test_missing_pixels():
    cfg = PreprocessConfig(dedup_threshold=1.0)
    with pytest.raises(MissingPixels) as exc:
        filter_frames([FrameRecord(FrameId(0, 0), "f")], cfg, lambda r: None)
    assert exc.value.details["frame"] == "0:0"


def test_config_requires_one_dedup_mode():
    with pytest.raises(ValueError):
        PreprocessConfig()
    with pytest.raises(ValueError):
        PreprocessConfig(dedup_threshold=1.0, dedup_percentile=50.0)


def test_zero_threshold_keeps_every_sharp_frame():
    sharp = checkerboard(4)
    images = [sharp, sharp, np.full((1, 4, 4), 0.5), 1 - sharp, 1 - sharp]
    records = [record(0, i) for i in range(5)]
    cfg = PreprocessConfig(dedup_threshold=0.0, blur_threshold=0.01)
    kept = filter_frames(records, cfg, lambda r: images[r.id.index])
    assert [r.id.index for r in kept] == [0, 1, 3, 4]


def test_raising_threshold_never_keeps_more():
    rng = np.random.default_rng(3)
    images = {}
    for video in range(2):
        for index, position in enumerate(np.cumsum(rng.random(15))):
            image = np.zeros((1, 3, 3))
            image[0, 1, 1] = position
            images[FrameId(video, index)] = image
    records = [record(v, i) for v in range(2) for i in range(15)]
    counts = [len(filter_frames(records, PreprocessConfig(dedup_threshold=t),
                                lambda r: images[r.id]))
              for t in np.linspace(0.0, 3.0, 13)]
    assert counts[0] == 30
    assert counts[-1] < counts[0]
    assert all(later <= earlier for earlier, later in zip(counts, counts[1:]))
