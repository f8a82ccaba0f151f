"""Command-line entry point: ``python -m src.cli <command> ...``.

Commands: preprocess, score, select, simulate, report. Data goes to files;
standard output only carries short human-readable summaries and diagnostics go
to standard error. Exit codes: 0 success, 1 I/O failure, 2 invalid input.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv

from src.acquisition.ranking import rank_frames
from src.acquisition.strategies import AcquisitionConfig, score_candidates, select_round
from src.core.pool import apply_selection, check_partition, pool_state_from_manifest
from src.core.rng import check_seed, make_rng
from src.core.types import FrameRecord, PoolState, RoundLog, Strategy
from src.io_formats.atomic import StagedWrites, atomic_write, state_lock
from src.io_formats.manifest import Manifest, ManifestArtifacts, load_manifest, render_manifest
from src.io_formats.pool_state import load_pool_state, render_pool_state
from src.io_formats.report import render_report
from src.io_formats.round_log import class_count, format_float, load_round_log, render_round_log
from src.preprocess.filtering import PreprocessConfig, filter_frames_with_audit
from src.simulator.experiment import plan_videos, run_experiment, summarize
from src.simulator.task import generate_task
from src.utils.config import (
    DEFAULT_EXPERIMENT_PATH,
    ConfigManager,
    ExperimentConfigManager,
    Settings,
    configure_logging,
    parse_model,
)
from src.utils.helpers import (
    CliErrorHandler,
    EmptyInput,
    InconsistentClassCount,
    IoFailure,
    EXIT_OK,
)

logger = logging.getLogger(__name__)

SELECTABLE = [s.value for s in Strategy if s is not Strategy.ALL]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesel",
        description="Active-learning frame selection for video segmentation datasets"
    )
    parser.add_argument("--settings", help="Path to settings YAML (default: config/settings.yaml)")
    commands = parser.add_subparsers(dest="command", required=True)

    preprocess = commands.add_parser("preprocess", help="Drop blurry and near-duplicate frames")
    preprocess.add_argument("--manifest", required=True, help="Input dataset manifest CSV")
    preprocess.add_argument("--output", required=True, help="Filtered manifest CSV to write")
    preprocess.add_argument("--audit", help="Per-frame audit CSV to write")
    preprocess.add_argument("--blur-threshold", type=float,
                            help="Drop frames whose blur score is below this value")
    dedup = preprocess.add_mutually_exclusive_group()
    dedup.add_argument("--dedup-threshold", type=float,
                       help="Fixed pixel distance a frame must keep from the last kept frame")
    dedup.add_argument("--dedup-percentile", type=float,
                       help="Percentile of consecutive distances used as the threshold")
    preprocess.set_defaults(handler=run_preprocess)

    def add_pool_arguments(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--manifest", required=True, help="Dataset manifest CSV")
        sub.add_argument("--state", required=True, help="Pool state YAML")
        sub.add_argument("--strategy", required=True, choices=SELECTABLE)
        sub.add_argument("--video", type=int,
                         help="Video to select from (default: lowest video with unlabeled frames)")
        sub.add_argument("--budget", type=int, help="Frames per round (default 50)")
        sub.add_argument("--n-batches", type=int, help="Entropy batches per round (default 5)")
        sub.add_argument("--output", required=True)

    score = commands.add_parser("score", help="Score the next video's candidates without selecting")
    add_pool_arguments(score)
    score.add_argument("--seed", type=int, help="Seed used when the state file does not exist yet")
    score.set_defaults(handler=run_score)

    select = commands.add_parser("select", help="Select one round of frames and update the pool")
    add_pool_arguments(select)
    select.add_argument("--seed", type=int, required=True)
    select.add_argument("--log", help="Round log CSV to append to (default: <state>.rounds.csv)")
    select.set_defaults(handler=run_select)

    simulate = commands.add_parser("simulate", help="Compare strategies on a synthetic task")
    simulate.add_argument("--config", help="Experiment YAML (default: config/experiment.yaml)")
    simulate.add_argument("--output", required=True, help="Per-round curves CSV")
    simulate.add_argument("--log", help="Full round log CSV including selected frames")
    simulate.add_argument("--rounds", type=int, help="Override the number of rounds")
    simulate.add_argument("--seeds", type=int, nargs="+", help="Override the seed list")
    simulate.set_defaults(handler=run_simulate)

    report = commands.add_parser("report", help="Render result tables from round logs")
    report.add_argument("logs", nargs="+", help="Round log or curves CSVs")
    report.add_argument("--classes", type=int, nargs="+", help="Class columns of the class-wise table")
    report.add_argument("--class-names", nargs="+", help="Display names indexed by class id")
    report.add_argument("--config", help="Experiment YAML supplying report class names")
    report.add_argument("--output", help="Markdown file to write (default: standard output)")
    report.set_defaults(handler=run_report)
    return parser


def _acquisition_config(args: argparse.Namespace, settings: Settings) -> AcquisitionConfig:
    defaults = settings.acquisition
    document = {
        "strategy": args.strategy,
        "budget": defaults.budget if args.budget is None else args.budget,
        "n_batches": defaults.n_batches if args.n_batches is None else args.n_batches,
        "metric_epsilon": defaults.metric_epsilon,
    }
    return parse_model(AcquisitionConfig, document, source="command line")


def _pool_state(manifest: Manifest, state_path: Path, seed: Optional[int],
                settings: Settings) -> PoolState:
    if state_path.exists():
        state = load_pool_state(state_path)
        check_partition(state, manifest.frame_ids())
        return state
    if seed is None:
        raise EmptyInput("no pool state yet; pass --seed to create one", {"flag": "--seed"})
    logger.info(f"{state_path} does not exist; building the first pool state from the manifest")
    return pool_state_from_manifest(manifest.records, seed, settings.pool.train_fraction,
                                    settings.pool.test_video)


def _target_video(state: PoolState, requested: Optional[int]) -> int:
    if requested is not None:
        return requested
    videos = sorted({frame.video for frame in state.unlabeled})
    if not videos:
        raise EmptyInput("the unlabeled pool is empty", {"flag": "--video"})
    return videos[0]


def run_preprocess(args: argparse.Namespace, settings: Settings) -> int:
    cfg = settings.preprocess
    if args.dedup_threshold is not None or args.dedup_percentile is not None:
        cfg = parse_model(PreprocessConfig, {
            "dedup_threshold": args.dedup_threshold,
            "dedup_percentile": args.dedup_percentile,
            "blur_threshold": cfg.blur_threshold,
        }, source="command line")
    if args.blur_threshold is not None:
        cfg = parse_model(PreprocessConfig, {**cfg.model_dump(), "blur_threshold": args.blur_threshold},
                          source="command line")

    manifest = load_manifest(args.manifest)
    artifacts = ManifestArtifacts(manifest)
    kept, audit = filter_frames_with_audit(manifest.records, cfg, artifacts.pixels)

    output = Path(args.output)
    rebased = [_rebase(record, manifest.root, output.parent) for record in kept]
    batch = StagedWrites()
    batch.add(output, render_manifest(rebased))
    if args.audit:
        rows = [{
            "video": row.record.id.video,
            "index": row.record.id.index,
            "blur_score": format_float(row.blur_score),
            "distance_to_last_kept": format_float(row.distance_to_last_kept),
            "kept": "true" if row.kept else "false",
        } for row in audit]
        columns = ["video", "index", "blur_score", "distance_to_last_kept", "kept"]
        batch.add(args.audit, pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator="\n"))
    batch.commit()
    print(f"Kept {len(kept)} of {len(manifest.records)} frames -> {output}")
    return EXIT_OK


def _rebase(record: FrameRecord, source: Path, target: Path) -> FrameRecord:
    def move(ref: Optional[str]) -> Optional[str]:
        if ref is None:
            return None
        return Path(os.path.relpath((source / ref).resolve(), target.resolve())).as_posix()
    return replace(record, feature_ref=move(record.feature_ref), probmap_ref=move(record.probmap_ref),
                   label_ref=move(record.label_ref), pixel_ref=move(record.pixel_ref))


def run_score(args: argparse.Namespace, settings: Settings) -> int:
    cfg = _acquisition_config(args, settings)
    if args.seed is not None:
        check_seed(args.seed)
    manifest = load_manifest(args.manifest)
    state = _pool_state(manifest, Path(args.state), args.seed, settings)
    video = _target_video(state, args.video)
    scored = rank_frames(score_candidates(state, video, cfg, ManifestArtifacts(manifest)))

    rows = []
    for item in scored:
        inter, intra = item.components if item.components is not None else (None, None)
        rows.append({"video": item.id.video, "index": item.id.index, "strategy": cfg.strategy.value,
                     "score": format_float(item.score), "inter_norm": format_float(inter),
                     "intra_norm": format_float(intra)})
    columns = ["video", "index", "strategy", "score", "inter_norm", "intra_norm"]
    atomic_write(args.output, pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator="\n"))
    print(f"Scored {len(rows)} frames of video {video} with {cfg.strategy.value}")
    return EXIT_OK


def run_select(args: argparse.Namespace, settings: Settings) -> int:
    cfg = _acquisition_config(args, settings)
    seed = check_seed(args.seed)
    state_path = Path(args.state)
    log_path = Path(args.log) if args.log else Path(f"{state_path}.rounds.csv")

    with state_lock(state_path):
        manifest = load_manifest(args.manifest)
        state = _pool_state(manifest, state_path, seed, settings)
        video = _target_video(state, args.video)
        rng = make_rng(seed, stream=state.round + 1)
        selected = select_round(state, video, cfg, ManifestArtifacts(manifest), rng)
        updated = apply_selection(state, selected)
        check_partition(updated, manifest.frame_ids())

        log = RoundLog(round=updated.round, strategy=cfg.strategy, selected=tuple(selected),
                       per_class_iou=(), miou=None, seed=seed, n_labeled=len(updated.training))
        history = load_round_log(log_path) if log_path.exists() else []

        batch = StagedWrites()
        batch.add(args.output, "".join(f"{frame}\n" for frame in selected))
        batch.add(log_path, render_round_log(history + [log]))
        batch.add(state_path, render_pool_state(updated))
        batch.commit()

    print(f"Round {updated.round}: selected {len(selected)} frames from video {video} "
          f"({cfg.strategy.value}); {len(updated.unlabeled)} frames left unlabeled")
    return EXIT_OK


def run_simulate(args: argparse.Namespace, settings: Settings) -> int:
    config_path = Path(args.config) if args.config else DEFAULT_EXPERIMENT_PATH
    if args.config and not config_path.is_file():
        raise IoFailure("experiment config not found", {"path": str(config_path)})
    config = ExperimentConfigManager(config_path).experiment()
    experiment = config.experiment
    overrides = {}
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if overrides:
        experiment = parse_model(type(experiment), {**experiment.model_dump(), **overrides},
                                 source="command line")

    task = generate_task(config.task)
    plan = plan_videos(task, experiment.rounds, experiment.test_video)
    base = experiment.acquisition_config(Strategy.RANDOM)
    logs = run_experiment(task, experiment.strategies, base, experiment.rounds, experiment.seeds,
                          train_fraction=experiment.train_fraction,
                          temperature=experiment.temperature,
                          include_all_data=experiment.include_all_data,
                          test_video=plan.test_video)

    batch = StagedWrites()
    batch.add(args.output, render_round_log(logs, include_selected=False))
    if args.log:
        batch.add(args.log, render_round_log(logs))
    batch.commit()

    pool_size = sum(len(task.frames(video)) for video in plan.round_videos)
    summaries = summarize(logs, pool_size)
    anchor = next((s for s in summaries if s.strategy is Strategy.ALL), None)
    for summary in summaries:
        line = (f"{summary.strategy.value}: {summary.mean_miou:.4f} ± {summary.std_miou:.4f} "
                f"(round {summary.round}, {summary.n_seeds} seeds, "
                f"{summary.labeled_fraction:.1%} of pool labeled")
        if anchor is not None and summary is not anchor and anchor.mean_miou > 0:
            line += f", {summary.mean_miou / anchor.mean_miou:.1%} of all data"
        print(line + ")")
    return EXIT_OK


def run_report(args: argparse.Namespace, settings: Settings) -> int:
    class_names: List[str] = []
    classes: Optional[Sequence[int]] = None
    if args.config:
        if not Path(args.config).is_file():
            raise IoFailure("experiment config not found", {"path": args.config})
        report_settings = ExperimentConfigManager(args.config).experiment().report
        class_names = report_settings.class_names
        classes = report_settings.classes or None
    if args.class_names:
        class_names = args.class_names
    if args.classes:
        classes = args.classes

    logs: List[RoundLog] = []
    counts = {}
    for path in args.logs:
        loaded = load_round_log(path)
        logs.extend(loaded)
        if loaded:
            counts[path] = class_count(loaded)
    if not logs:
        raise EmptyInput("the round logs hold no rows", {"path": ", ".join(args.logs)})
    if len(set(counts.values())) > 1:
        raise InconsistentClassCount("round logs disagree on the class count",
                                     {path: k for path, k in counts.items()})
    if class_count(logs) == 0:
        raise InconsistentClassCount("round logs carry no per-class IoU columns",
                                     {"path": ", ".join(args.logs)})

    text = render_report(logs, classes, class_names)
    if args.output:
        atomic_write(args.output, text)
        print(f"Wrote report for {len(logs)} round logs to {args.output}")
    else:
        print(text, end="")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    handler = CliErrorHandler()
    try:
        settings = ConfigManager(args.settings).settings()
        configure_logging(settings.logging)
        return args.handler(args, settings)
    except Exception as e:
        return handler.handle_error(args.command, e)


if __name__ == "__main__":
    sys.exit(main())
