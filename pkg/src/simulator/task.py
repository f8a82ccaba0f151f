"""Synthetic segmentation task standing in for annotated surgical video.

Each video is a run of scenes; the frames of a scene share their class
composition and an appearance offset, so consecutive frames are near-duplicates.
Regular class presence is nested and geometrically skewed: class k (k >= 1) is
present in a scene with probability presence_decay**k, and only in scenes where
every more common class is present too. One scene per video shows every regular
class. The ``event_classes`` rarest classes never fill a scene: they appear in
single event frames that also show every regular class, ``events_per_video``
per class and video, except in ``event_free_videos``. Every pixel is a feature
point drawn around its class center, shifted by a per-video drift and a
per-scene jitter.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.rng import SETUP_STREAM, make_rng
from src.core.types import FrameId, FrameRecord

logger = logging.getLogger(__name__)


class SyntheticTaskConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    n_videos: int = Field(default=5, ge=1)
    frames_per_video: int = Field(default=120, ge=1)
    num_classes: int = Field(default=8, ge=2, alias="K")
    height: int = Field(default=8, ge=1, alias="H")
    width: int = Field(default=8, ge=1, alias="W")
    feature_dim: int = Field(default=8, ge=2, alias="d")
    cluster_spread: float = Field(default=1.0, gt=0)
    cluster_separation: float = Field(default=12.0, gt=0)
    label_noise: float = Field(default=0.0, ge=0, lt=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    presence_decay: float = Field(default=0.5, gt=0, lt=1)
    area_decay: float = Field(default=0.85, gt=0, le=1)
    scene_length: int = Field(default=4, ge=1)
    # Multiples of cluster_spread.
    scene_jitter: float = Field(default=0.2, ge=0)
    video_shift: float = Field(default=0.2, ge=0)
    event_classes: int = Field(default=2, ge=0)
    events_per_video: int = Field(default=1, ge=0)
    event_free_videos: List[int] = Field(default_factory=lambda: [0])

    @model_validator(mode="after")
    def _check_events(self) -> "SyntheticTaskConfig":
        if self.event_classes >= self.num_classes:
            raise ValueError("at least one class must not be an event class")
        if self.event_classes * self.events_per_video > self.frames_per_video:
            raise ValueError("more event frames than frames per video")
        return self

    @property
    def regular_classes(self) -> int:
        return self.num_classes - self.event_classes


@dataclass
class SyntheticTask:
    config: SyntheticTaskConfig
    centers: np.ndarray
    records: List[FrameRecord]
    pixels: Dict[FrameId, np.ndarray] = field(repr=False)
    masks: Dict[FrameId, np.ndarray] = field(repr=False)
    features: Dict[FrameId, np.ndarray] = field(repr=False)

    @property
    def num_classes(self) -> int:
        return self.config.num_classes

    def videos(self) -> List[int]:
        return sorted({record.id.video for record in self.records})

    def frames(self, video: int) -> List[FrameId]:
        return sorted(record.id for record in self.records if record.id.video == video)

    def classes_in(self, video: int) -> List[int]:
        """Classes annotated somewhere in the video."""
        seen = np.zeros(self.num_classes, dtype=bool)
        for frame in self.frames(video):
            seen[np.unique(self.masks[frame])] = True
        return np.flatnonzero(seen).tolist()


def class_centers(rng: np.random.Generator, num_classes: int, dim: int,
                  separation: float) -> np.ndarray:
    """K centers at pairwise distance ``separation`` (exact when d >= K)."""
    radius = separation / np.sqrt(2.0)
    if dim >= num_classes:
        basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        return basis[:, :num_classes].T * radius
    directions = rng.normal(size=(num_classes, dim))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True) * radius


def allocate_pixels(weights: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment; ties favor the lower index."""
    raw = weights / weights.sum() * total
    counts = np.floor(raw).astype(np.int64)
    leftover = total - int(counts.sum())
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def _event_frames(rng: np.random.Generator, cfg: SyntheticTaskConfig,
                  video: int) -> Dict[int, int]:
    """Frame index -> event class shown there."""
    if video in cfg.event_free_videos or cfg.event_classes == 0:
        return {}
    classes = np.repeat(np.arange(cfg.regular_classes, cfg.num_classes), cfg.events_per_video)
    indices = rng.choice(cfg.frames_per_video, size=classes.size, replace=False)
    return {int(i): int(k) for i, k in zip(indices, classes)}


def generate_task(cfg: SyntheticTaskConfig) -> SyntheticTask:
    rng = make_rng(cfg.seed, SETUP_STREAM)
    K, H, W, d = cfg.num_classes, cfg.height, cfg.width, cfg.feature_dim
    spread = cfg.cluster_spread
    centers = class_centers(rng, K, d, cfg.cluster_separation)
    regular = np.arange(cfg.regular_classes)
    presence = cfg.presence_decay ** regular.astype(np.float64)
    area = cfg.area_decay ** np.arange(K, dtype=np.float64)
    n_scenes = -(-cfg.frames_per_video // cfg.scene_length)

    records, pixels, masks, features = [], {}, {}, {}
    for video in range(cfg.n_videos):
        video_offset = rng.normal(0.0, cfg.video_shift * spread, size=d)
        full_scene = int(rng.integers(n_scenes))
        events = _event_frames(rng, cfg, video)
        for scene in range(n_scenes):
            u = 0.0 if scene == full_scene else rng.random()
            present = regular[u < presence]
            scene_offset = rng.normal(0.0, cfg.scene_jitter * spread, size=d)
            scene_start = scene * cfg.scene_length
            scene_end = min(scene_start + cfg.scene_length, cfg.frames_per_video)
            for index in range(scene_start, scene_end):
                frame = FrameId(video, index)
                shown = np.append(regular, events[index]) if index in events else present
                counts = allocate_pixels(area[shown], H * W)
                labels = rng.permutation(np.repeat(shown, counts)).reshape(H, W)
                noise = rng.normal(0.0, spread, size=(H, W, d))
                frame_pixels = centers[labels] + video_offset + scene_offset + noise
                mask = labels.copy()
                if cfg.label_noise > 0:
                    flip = rng.random((H, W)) < cfg.label_noise
                    mask[flip] = rng.integers(K, size=int(flip.sum()))
                pixels[frame] = frame_pixels
                masks[frame] = mask
                features[frame] = frame_pixels.reshape(-1, d).mean(axis=0)
                records.append(FrameRecord(
                    id=frame,
                    feature_ref=f"synthetic/feature/{frame}",
                    label_ref=f"synthetic/label/{frame}",
                    pixel_ref=f"synthetic/pixel/{frame}",
                ))
        if events:
            logger.debug(f"Video {video}: event frames {sorted(events)}")
    logger.info(f"Generated {len(records)} frames over {cfg.n_videos} videos "
                f"(K={K}, {H}x{W}, d={d}, seed={cfg.seed})")
    return SyntheticTask(cfg, centers, records, pixels, masks, features)
