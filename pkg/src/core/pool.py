"""Pool-state transitions.

A PoolState partitions every frame of a dataset into labeled, unlabeled and
test frames. Transitions return new values; nothing here mutates a state.
"""

import logging
import math
from dataclasses import replace
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

from src.core.rng import SETUP_STREAM, check_seed, make_rng
from src.core.types import FrameId, FrameRecord, PoolState
from src.utils.helpers import (
    BadSplitTag,
    DuplicateSelection,
    EmptyInput,
    InvalidConfig,
    PartitionViolation,
    SelectionNotInPool,
    UnknownVideo,
)

logger = logging.getLogger(__name__)

SPLIT_TAGS = ("pool", "labeled", "test")


def apply_selection(state: PoolState, selected: Sequence[FrameId]) -> PoolState:
    seen = set()
    for frame in selected:
        if frame in seen:
            raise DuplicateSelection("frame selected twice", {"frame": str(frame)})
        seen.add(frame)
    missing = sorted(frame for frame in seen if frame not in state.unlabeled)
    if missing:
        raise SelectionNotInPool("selected frame is not in the unlabeled pool",
                                 {"frame": str(missing[0]), "count": len(missing)})
    chosen = frozenset(seen)
    return replace(state,
                   labeled=state.labeled | chosen,
                   unlabeled=state.unlabeled - chosen,
                   round=state.round + 1)


def initial_split(video_frames: Sequence[FrameId], train_fraction: float,
                  seed: int) -> Tuple[FrozenSet[FrameId], FrozenSet[FrameId]]:
    """Randomly split frames into train and validation sets.

    |train| is train_fraction * N rounded half up; the permutation is drawn from
    the setup stream of ``seed`` over the frames in FrameId order, so the result
    does not depend on the order of ``video_frames``.
    """
    if not 0 < train_fraction < 1:
        raise InvalidConfig("train_fraction must lie strictly between 0 and 1",
                            {"train_fraction": train_fraction})
    frames = sorted(set(video_frames))
    if not frames:
        raise EmptyInput("cannot split an empty frame list")
    n_train = math.floor(train_fraction * len(frames) + 0.5)
    order = make_rng(seed, SETUP_STREAM).permutation(len(frames))
    train = frozenset(frames[i] for i in order[:n_train])
    return train, frozenset(frames) - train


def pick_test_video(videos: Iterable[int], seed: int) -> int:
    candidates = sorted(set(videos))
    if not candidates:
        raise EmptyInput("no videos to choose a test video from")
    rng = make_rng(seed, SETUP_STREAM)
    return candidates[int(rng.integers(len(candidates)))]


def check_partition(state: PoolState, universe: Optional[Iterable[FrameId]] = None) -> None:
    overlaps = (("labeled", "unlabeled", state.labeled & state.unlabeled),
                ("labeled", "test", state.labeled & state.test),
                ("unlabeled", "test", state.unlabeled & state.test))
    for left, right, common in overlaps:
        if common:
            raise PartitionViolation(f"{left} and {right} overlap",
                                     {"frame": str(min(common)), "count": len(common)})
    if not state.validation <= state.labeled:
        stray = min(state.validation - state.labeled)
        raise PartitionViolation("validation frame is not labeled", {"frame": str(stray)})
    if universe is not None:
        expected = frozenset(universe)
        actual = state.universe
        if actual != expected:
            diff = sorted(expected ^ actual)
            raise PartitionViolation("pool does not cover the manifest exactly",
                                     {"frame": str(diff[0]), "count": len(diff)})


def pool_state_from_manifest(records: Sequence[FrameRecord], seed: int,
                             train_fraction: float = 0.8,
                             test_video: Optional[int] = None) -> PoolState:
    """Build the first PoolState of a dataset from its manifest split tags.

    Rows tagged ``labeled`` are annotated already; a train_fraction split of
    them becomes validation. When no row is tagged ``test`` the test video is
    ``test_video``, or one picked from the seed.
    """
    seed = check_seed(seed)
    by_tag = {tag: set() for tag in SPLIT_TAGS}
    for record in records:
        if record.split not in by_tag:
            raise BadSplitTag(f"unknown split tag {record.split!r}", {"frame": str(record.id)})
        by_tag[record.split].add(record.id)

    videos = {record.id.video for record in records}
    if not by_tag["test"]:
        if test_video is None:
            test_video = pick_test_video(videos, seed)
            logger.info(f"Picked video {test_video} as the held-out test video from seed {seed}")
        if test_video not in videos:
            raise UnknownVideo("test video is not in the manifest", {"video": test_video})
        moved = {frame for tag in ("pool", "labeled") for frame in by_tag[tag]
                 if frame.video == test_video}
        by_tag["test"] = moved
        by_tag["pool"] -= moved
        by_tag["labeled"] -= moved

    validation = frozenset()
    if by_tag["labeled"]:
        _, validation = initial_split(sorted(by_tag["labeled"]), train_fraction, seed)

    state = PoolState(labeled=frozenset(by_tag["labeled"]),
                      unlabeled=frozenset(by_tag["pool"]),
                      test=frozenset(by_tag["test"]),
                      round=0, seed=seed, validation=validation)
    check_partition(state, (record.id for record in records))
    return state
