"""Frame filtering: blur rejection, then greedy near-duplicate pruning per video."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.signal import convolve2d

from src.core.types import FrameRecord
from src.utils.helpers import FrameSelectionError, MissingPixels, ShapeMismatch, TooSmall

logger = logging.getLogger(__name__)

LAPLACIAN_3X3 = np.array([[0.0, 1.0, 0.0],
                          [1.0, -4.0, 1.0],
                          [0.0, 1.0, 0.0]])

PixelLoader = Callable[[FrameRecord], np.ndarray]


class PreprocessConfig(BaseModel):
    dedup_threshold: Optional[float] = Field(default=None, ge=0)
    dedup_percentile: Optional[float] = Field(default=None, gt=0, le=100)
    blur_threshold: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _one_dedup_mode(self) -> "PreprocessConfig":
        if (self.dedup_threshold is None) == (self.dedup_percentile is None):
            raise ValueError("set exactly one of dedup_threshold and dedup_percentile")
        return self


@dataclass(frozen=True)
class AuditRow:
    record: FrameRecord
    blur_score: float
    distance_to_last_kept: Optional[float]
    kept: bool


def to_unit_range(pixels) -> np.ndarray:
    """Return pixels as float64 in [0, 1]; integer tensors are scaled by 1/255."""
    array = np.asarray(pixels)
    if np.issubdtype(array.dtype, np.integer):
        return array.astype(np.float64) / 255.0
    return array.astype(np.float64, copy=False)


def pixel_euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch("pixel tensors differ in shape", {"left": a.shape, "right": b.shape})
    return float(np.linalg.norm((a - b).ravel()))


def blur_score(frame) -> float:
    """Variance of the 3x3 Laplacian response of the luminance (channel mean).

    Higher means sharper. Borders mirror the edge pixels, so every position
    contributes, down to 3x3 frames.
    """
    pixels = np.asarray(frame, dtype=np.float64)
    if pixels.ndim == 2:
        pixels = pixels[np.newaxis]
    if pixels.ndim != 3:
        raise ShapeMismatch("pixel tensors are C×H×W", {"shape": pixels.shape})
    _, height, width = pixels.shape
    if height < 3 or width < 3:
        raise TooSmall("blur scoring needs H and W of at least 3", {"shape": pixels.shape})
    luminance = pixels.mean(axis=0)
    response = convolve2d(luminance, LAPLACIAN_3X3, mode="same", boundary="symm")
    return float(response.var())


def consecutive_distances(pixels: Sequence[np.ndarray]) -> List[float]:
    return [pixel_euclidean(prev, cur) for prev, cur in zip(pixels, pixels[1:])]


def effective_threshold(cfg: PreprocessConfig, pixels: Sequence[np.ndarray]) -> float:
    if cfg.dedup_threshold is not None:
        return cfg.dedup_threshold
    distances = consecutive_distances(pixels)
    if not distances:
        return 0.0
    return float(np.percentile(distances, cfg.dedup_percentile))


def _load(record: FrameRecord, load_pixels: PixelLoader) -> np.ndarray:
    if record.pixel_ref is None:
        raise MissingPixels("frame has no pixel tensor", {"frame": str(record.id)})
    try:
        return to_unit_range(load_pixels(record))
    except MissingPixels:
        raise
    except (OSError, FrameSelectionError) as e:
        raise MissingPixels(f"pixel tensor could not be resolved: {e}",
                            {"frame": str(record.id), "ref": record.pixel_ref})


def _filter_video(frames: List[FrameRecord], cfg: PreprocessConfig,
                  load_pixels: PixelLoader) -> List[AuditRow]:
    pixels = [_load(record, load_pixels) for record in frames]
    scores = [blur_score(p) for p in pixels]
    sharp = [i for i, score in enumerate(scores) if score >= cfg.blur_threshold]
    sharp_set = set(sharp)
    threshold = effective_threshold(cfg, [pixels[i] for i in sharp])

    rows = {}
    for i, score in enumerate(scores):
        if i not in sharp_set:
            rows[i] = AuditRow(frames[i], score, None, False)
    last_kept = None
    for i in sharp:
        if last_kept is None:
            rows[i] = AuditRow(frames[i], scores[i], None, True)
            last_kept = i
            continue
        distance = pixel_euclidean(pixels[last_kept], pixels[i])
        keep = distance >= threshold
        rows[i] = AuditRow(frames[i], scores[i], distance, keep)
        if keep:
            last_kept = i
    return [rows[i] for i in range(len(frames))]


def filter_frames_with_audit(frames: Sequence[FrameRecord], cfg: PreprocessConfig,
                             load_pixels: PixelLoader) -> Tuple[List[FrameRecord], List[AuditRow]]:
    by_video = {}
    for record in frames:
        by_video.setdefault(record.id.video, []).append(record)
    rows_by_id = {}
    for video, group in by_video.items():
        video_rows = _filter_video(group, cfg, load_pixels)
        kept = sum(row.kept for row in video_rows)
        logger.info(f"Video {video}: kept {kept} of {len(video_rows)} frames")
        rows_by_id.update((row.record.id, row) for row in video_rows)
    audit = [rows_by_id[record.id] for record in frames]
    kept = [row.record for row in audit if row.kept]
    logger.info(f"Preprocessing kept {len(kept)} of {len(audit)} frames")
    return kept, audit


def filter_frames(frames: Sequence[FrameRecord], cfg: PreprocessConfig,
                  load_pixels: PixelLoader) -> List[FrameRecord]:
    """Drop blurry frames, then keep a frame iff it is at least the effective
    threshold away from the last kept frame of its video."""
    kept, _ = filter_frames_with_audit(frames, cfg, load_pixels)
    return kept
