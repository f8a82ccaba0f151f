"""Per-round frame selection: strategy dispatch over one newly considered video."""

import logging
from typing import Dict, List, Mapping, Optional, Protocol

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.acquisition.distances import diversity_scores
from src.acquisition.entropy import frame_mean_entropy
from src.acquisition.ranking import ScoredFrame, batched_random_select, rank_frames
from src.core.types import FrameId, PoolState, Strategy, validate_feature
from src.utils.helpers import EmptyReferenceSet, MissingFeature, MissingProbMap, UnknownVideo

logger = logging.getLogger(__name__)

__all__ = ["AcquisitionConfig", "ArtifactStore", "InMemoryArtifacts", "Strategy",
           "score_candidates", "select_round"]


class AcquisitionConfig(BaseModel):
    strategy: Strategy
    budget: int = Field(default=50, gt=0)
    n_batches: int = Field(default=5, gt=0)
    metric_epsilon: float = Field(default=1e-12, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "AcquisitionConfig":
        if self.strategy is Strategy.ALL:
            raise ValueError("'all' is not a selection strategy")
        if self.strategy is Strategy.ENTROPY and self.budget < self.n_batches:
            raise ValueError("entropy batching needs budget >= n_batches")
        return self


class ArtifactStore(Protocol):
    def feature(self, frame: FrameId) -> np.ndarray: ...

    def probmap(self, frame: FrameId) -> np.ndarray: ...


class InMemoryArtifacts:
    def __init__(self, features: Optional[Mapping[FrameId, np.ndarray]] = None,
                 probmaps: Optional[Mapping[FrameId, np.ndarray]] = None):
        self.features: Dict[FrameId, np.ndarray] = dict(features or {})
        self.probmaps: Dict[FrameId, np.ndarray] = dict(probmaps or {})

    def feature(self, frame: FrameId) -> np.ndarray:
        try:
            return self.features[frame]
        except KeyError:
            raise MissingFeature("frame has no feature vector", {"frame": str(frame)})

    def probmap(self, frame: FrameId) -> np.ndarray:
        try:
            return self.probmaps[frame]
        except KeyError:
            raise MissingProbMap("frame has no probability map", {"frame": str(frame)})


def _candidates(pool: PoolState, video: int) -> List[FrameId]:
    if video not in pool.videos():
        raise UnknownVideo(f"video {video} is not part of the pool", {"video": video})
    return pool.unlabeled_in(video)


def _feature_matrix(frames: List[FrameId], artifacts: ArtifactStore) -> np.ndarray:
    vectors, dim = [], None
    for frame in frames:
        vector = validate_feature(artifacts.feature(frame), dim=dim, frame=frame)
        dim = vector.size
        vectors.append(vector)
    return np.vstack(vectors)


def score_candidates(pool: PoolState, video: int, cfg: AcquisitionConfig,
                     artifacts: ArtifactStore) -> List[ScoredFrame]:
    """Informativeness of every unlabeled frame of ``video`` (unranked).

    The random baseline has no informativeness; its frames all score 0.
    """
    candidates = _candidates(pool, video)
    if not candidates:
        return []
    if cfg.strategy is Strategy.RANDOM:
        return [ScoredFrame(frame, 0.0) for frame in candidates]
    if cfg.strategy is Strategy.ENTROPY:
        return [ScoredFrame(frame, frame_mean_entropy(artifacts.probmap(frame), frame))
                for frame in candidates]

    references = sorted(pool.training)
    if not references:
        raise EmptyReferenceSet("diversity scoring needs labeled training frames")
    features = _feature_matrix(candidates, artifacts)
    labeled = _feature_matrix(references, artifacts)
    return diversity_scores(list(zip(candidates, features)), labeled,
                            cfg.strategy, cfg.metric_epsilon)


def select_round(pool: PoolState, new_video: int, cfg: AcquisitionConfig,
                 artifacts: ArtifactStore, rng: np.random.Generator) -> List[FrameId]:
    candidates = _candidates(pool, new_video)
    budget = min(cfg.budget, len(candidates))
    if budget == 0:
        logger.warning(f"Video {new_video} has no unlabeled frames; nothing selected")
        return []

    if cfg.strategy is Strategy.RANDOM:
        picks = rng.choice(len(candidates), size=budget, replace=False)
        selected = [candidates[int(i)] for i in picks]
    elif cfg.strategy is Strategy.ENTROPY:
        ranked = [item.id for item in rank_frames(score_candidates(pool, new_video, cfg, artifacts))]
        n_batches = min(cfg.n_batches, budget)
        if n_batches < cfg.n_batches:
            logger.warning(f"Only {len(candidates)} candidates in video {new_video}; "
                           f"using {n_batches} batches")
        selected = batched_random_select(ranked, budget, n_batches, rng)
    else:
        ranked = rank_frames(score_candidates(pool, new_video, cfg, artifacts))
        selected = [item.id for item in ranked[:budget]]

    logger.info(f"Round {pool.round + 1}: {cfg.strategy.value} selected {len(selected)} "
                f"of {len(candidates)} frames from video {new_video}")
    return selected
