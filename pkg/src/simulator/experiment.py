"""Multi-round active-learning driver over a synthetic task.

Per seed: video 0 (first non-test video) seeds the labeled set through an
80/20 train/validation split; each round considers the next video, selects
frames with the strategy under test, refits the model from scratch and scores
it on the held-out test video. An all-data anchor trains on every non-test
frame outside the validation split.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.acquisition.strategies import AcquisitionConfig, InMemoryArtifacts, select_round
from src.core.pool import apply_selection, check_partition, initial_split
from src.core.rng import make_rng
from src.core.types import FrameId, PoolState, RoundLog, Strategy
from src.simulator.metrics import MiouResult, compute_miou
from src.simulator.model import CentroidModel, fit_model, predict_labels, predict_probmap
from src.simulator.task import SyntheticTask
from src.utils.helpers import InsufficientVideos, InvalidConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VideoPlan:
    init_video: int
    round_videos: List[int]
    test_video: int


@dataclass(frozen=True)
class StrategySummary:
    strategy: Strategy
    round: int
    mean_miou: float
    std_miou: float
    n_seeds: int
    n_labeled: float
    labeled_fraction: float


def plan_videos(task: SyntheticTask, rounds: int, test_video: Optional[int] = None) -> VideoPlan:
    """Split the task's videos into init, round and test videos.

    Without an explicit ``test_video`` the last video showing every class is held
    out, so no class is left out of the test mIoU; the last video otherwise.
    """
    videos = task.videos()
    if test_video is None:
        complete = [video for video in videos if len(task.classes_in(video)) == task.num_classes]
        test_video = complete[-1] if complete else videos[-1]
        if not complete:
            logger.warning("No video shows every class; holding out the last video")
    if test_video not in videos:
        raise InvalidConfig("test video is not part of the task", {"test_video": test_video})
    others = [video for video in videos if video != test_video]
    if rounds < 0 or not others or rounds > len(others) - 1:
        raise InsufficientVideos(f"{rounds} rounds need {rounds + 2} videos, task has {len(videos)}",
                                 {"rounds": rounds, "videos": len(videos)})
    return VideoPlan(others[0], others[1:], test_video)


def initial_state(task: SyntheticTask, plan: VideoPlan, seed: int,
                  train_fraction: float = 0.8) -> PoolState:
    init_frames = task.frames(plan.init_video)
    _, validation = initial_split(init_frames, train_fraction, seed)
    state = PoolState(
        labeled=frozenset(init_frames),
        unlabeled=frozenset(f for v in plan.round_videos for f in task.frames(v)),
        test=frozenset(task.frames(plan.test_video)),
        round=0,
        seed=seed,
        validation=validation,
    )
    logger.info(f"Seed {seed}: {len(state.training)} initial training frames, "
                f"{len(validation)} validation frames held out")
    return state


def _fit(task: SyntheticTask, frames, temperature: float) -> CentroidModel:
    return fit_model(((task.pixels[f], task.masks[f]) for f in sorted(frames)),
                     task.num_classes, temperature)


def evaluate(task: SyntheticTask, model: CentroidModel, test_frames) -> MiouResult:
    frames = sorted(test_frames)
    preds = [predict_labels(model, task.pixels[f]) for f in frames]
    gts = [task.masks[f] for f in frames]
    return compute_miou(preds, gts, task.num_classes)


def _log(state: PoolState, strategy: Strategy, selected: Sequence[FrameId],
         result: MiouResult, seed: int, round_: Optional[int] = None) -> RoundLog:
    return RoundLog(round=state.round if round_ is None else round_, strategy=strategy,
                    selected=tuple(selected), per_class_iou=result.per_class,
                    miou=result.miou, seed=seed, n_labeled=len(state.training))


def run_cell(task: SyntheticTask, plan: VideoPlan, start: PoolState, cfg: AcquisitionConfig,
             rounds: int, temperature: float = 1.0) -> List[RoundLog]:
    """One (seed, strategy) cell: round 0 plus ``rounds`` selection rounds."""
    universe = start.universe
    state = start
    model = _fit(task, state.training, temperature)
    logs = [_log(state, cfg.strategy, (), evaluate(task, model, state.test), state.seed)]
    for video in plan.round_videos[:rounds]:
        probmaps = {}
        if cfg.strategy is Strategy.ENTROPY:
            probmaps = {f: predict_probmap(model, task.pixels[f]) for f in state.unlabeled_in(video)}
        artifacts = InMemoryArtifacts(task.features, probmaps)
        rng = make_rng(state.seed, stream=state.round + 1)
        selected = select_round(state, video, cfg, artifacts, rng)
        state = apply_selection(state, selected)
        check_partition(state, universe)
        model = _fit(task, state.training, temperature)
        logs.append(_log(state, cfg.strategy, selected, evaluate(task, model, state.test), state.seed))
    return logs


def run_all_data(task: SyntheticTask, plan: VideoPlan, start: PoolState, rounds: int,
                 temperature: float = 1.0) -> RoundLog:
    everything = apply_selection(start, sorted(start.unlabeled))
    model = _fit(task, everything.training, temperature)
    return _log(everything, Strategy.ALL, (), evaluate(task, model, everything.test),
                start.seed, round_=rounds)


def run_experiment(task: SyntheticTask, strategies: Sequence[Strategy], al_cfg: AcquisitionConfig,
                   rounds: int, seeds: Sequence[int], train_fraction: float = 0.8,
                   temperature: float = 1.0, include_all_data: bool = True,
                   test_video: Optional[int] = None) -> List[RoundLog]:
    """RoundLogs ordered by seed, then strategy, then round; one anchor log per seed last."""
    plan = plan_videos(task, rounds, test_video)
    configs = {strategy: AcquisitionConfig(**{**al_cfg.model_dump(), "strategy": strategy})
               for strategy in strategies}
    logs: List[RoundLog] = []
    for seed in seeds:
        start = initial_state(task, plan, seed, train_fraction)
        for strategy in strategies:
            cell = run_cell(task, plan, start, configs[strategy], rounds, temperature)
            logger.info(f"Seed {seed} {strategy.value}: final mIoU {cell[-1].miou}")
            logs.extend(cell)
        if include_all_data:
            anchor = run_all_data(task, plan, start, rounds, temperature)
            logger.info(f"Seed {seed} all data: mIoU {anchor.miou}")
            logs.append(anchor)
    return logs


def summarize(logs: Sequence[RoundLog], pool_size: int) -> List[StrategySummary]:
    """Final-round mean and sample standard deviation of mIoU across seeds.

    labeled_fraction is the share of the selectable pool (``pool_size`` frames)
    annotated by the final round; the all-data anchor labels all of it.
    """
    by_strategy: Dict[Strategy, List[RoundLog]] = {}
    for log in logs:
        by_strategy.setdefault(log.strategy, []).append(log)
    summaries = []
    for strategy, entries in by_strategy.items():
        final = max(entry.round for entry in entries)
        last = [entry for entry in entries if entry.round == final and entry.miou is not None]
        if not last:
            continue
        values = np.array([entry.miou for entry in last])
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        if strategy is Strategy.ALL:
            fraction = 1.0
        else:
            chosen: Dict[int, int] = {}
            for entry in entries:
                chosen[entry.seed] = chosen.get(entry.seed, 0) + len(entry.selected)
            fraction = float(np.mean(list(chosen.values()))) / pool_size if pool_size else 0.0
        summaries.append(StrategySummary(
            strategy=strategy, round=final, mean_miou=float(values.mean()), std_miou=std,
            n_seeds=int(values.size),
            n_labeled=float(np.mean([entry.n_labeled for entry in last])),
            labeled_fraction=fraction))
    return summaries
