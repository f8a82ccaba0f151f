"""Markdown result tables built from RoundLogs.

Two tables: mean test mIoU per round and strategy, and a class-wise table with
one row per (round, strategy) pair. Values are means across seeds; the best
strategy of each round is wrapped in ``**``, every entry on a tie.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.types import RoundLog, Strategy
from src.io_formats.round_log import class_count
from src.utils.helpers import EmptyInput, InvalidConfig

logger = logging.getLogger(__name__)

MISSING = "-"


def logs_frame(logs: Sequence[RoundLog]) -> pd.DataFrame:
    """Long table of the logs; undefined IoUs become NaN."""
    num_classes = class_count(logs)
    rows = []
    for log in logs:
        row = {"strategy": log.strategy, "round": log.round, "seed": log.seed,
               "n_labeled": log.n_labeled,
               "miou": np.nan if log.miou is None else log.miou}
        for k, value in enumerate(log.per_class_iou):
            row[k] = np.nan if value is None else value
        rows.append(row)
    columns = ["strategy", "round", "seed", "n_labeled", "miou"] + list(range(num_classes))
    return pd.DataFrame(rows, columns=columns)


def strategy_order(logs: Sequence[RoundLog]) -> List[Strategy]:
    order: List[Strategy] = []
    for log in logs:
        if log.strategy is not Strategy.ALL and log.strategy not in order:
            order.append(log.strategy)
    return order


def format_value(value: float, best: bool = False) -> str:
    if value is None or math.isnan(value):
        return MISSING
    text = f"{value:.4f}"
    return f"**{text}**" if best else text


def format_frames(value: float) -> str:
    if math.isnan(value):
        return MISSING
    return str(int(value)) if float(value).is_integer() else f"{value:.1f}"


def _row(cells: Sequence[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _header(cells: Sequence[str]) -> List[str]:
    return [_row(cells), _row(["---"] * len(cells))]


def _best(values: Dict[Strategy, float]) -> set:
    defined = {key: value for key, value in values.items() if not math.isnan(value)}
    if not defined:
        return set()
    top = max(defined.values())
    return {key for key, value in defined.items() if value == top}


def strategy_table(logs: Sequence[RoundLog]) -> str:
    """Mean mIoU per round (rows) and strategy (columns)."""
    if not logs:
        raise EmptyInput("no round logs to report")
    frame = logs_frame(logs)
    strategies = strategy_order(logs)
    means = frame.groupby(["round", "strategy"], sort=True)["miou"].mean()

    lines = _header(["Round"] + [s.value for s in strategies])
    for round_ in sorted(frame.loc[frame["strategy"] != Strategy.ALL, "round"].unique()):
        values = {s: float(means.get((round_, s), np.nan)) for s in strategies}
        best = _best(values)
        lines.append(_row([f"R{round_}"] + [format_value(values[s], s in best) for s in strategies]))

    anchor = frame.loc[frame["strategy"] == Strategy.ALL, "miou"]
    if not anchor.empty:
        lines.append("")
        lines.append(f"All data: {format_value(float(anchor.mean()))}")
    return "\n".join(lines) + "\n"


def class_labels(classes: Sequence[int], class_names: Sequence[str]) -> List[str]:
    return [class_names[k] if k < len(class_names) and class_names[k] else f"class {k}"
            for k in classes]


def class_table(logs: Sequence[RoundLog], classes: Optional[Sequence[int]] = None,
                class_names: Sequence[str] = ()) -> str:
    """Class-wise IoU table: Init, one row per later round and strategy, then All data."""
    if not logs:
        raise EmptyInput("no round logs to report")
    num_classes = class_count(logs)
    classes = list(range(num_classes)) if not classes else list(classes)
    bad = [k for k in classes if not 0 <= k < num_classes]
    if bad:
        raise InvalidConfig(f"class {bad[0]} is outside 0..{num_classes - 1}",
                            {"field": "classes", "class": bad[0]})

    frame = logs_frame(logs)
    grouped = frame.groupby(["round", "strategy"], sort=True)[["n_labeled"] + classes].mean()
    strategies = strategy_order(logs)
    lines = _header(["Round", "Total frames"] + class_labels(classes, class_names))

    def plain_row(label: str, values: pd.Series) -> str:
        return _row([label, format_frames(values.loc["n_labeled"])]
                    + [format_value(float(values.loc[k])) for k in classes])

    initial = frame[(frame["round"] == 0) & (frame["strategy"] != Strategy.ALL)]
    if not initial.empty:
        lines.append(plain_row("Init", initial[["n_labeled"] + classes].mean()))

    rounds = sorted(r for r in frame.loc[frame["strategy"] != Strategy.ALL, "round"].unique() if r > 0)
    for round_ in rounds:
        present = [s for s in strategies if (round_, s) in grouped.index]
        best = {k: _best({s: float(grouped.loc[(round_, s), k]) for s in present}) for k in classes}
        for strategy in present:
            values = grouped.loc[(round_, strategy)]
            lines.append(_row([f"R{round_} {strategy.value}", format_frames(values.loc["n_labeled"])]
                              + [format_value(float(values.loc[k]), strategy in best[k]) for k in classes]))

    anchor = frame[frame["strategy"] == Strategy.ALL]
    if not anchor.empty:
        lines.append(plain_row("All data", anchor[["n_labeled"] + classes].mean()))
    return "\n".join(lines) + "\n"


def render_report(logs: Sequence[RoundLog], classes: Optional[Sequence[int]] = None,
                  class_names: Sequence[str] = ()) -> str:
    logger.info(f"Rendering report over {len(logs)} round logs")
    return "\n".join([
        "## Mean IoU per round",
        "",
        strategy_table(logs),
        "## Class-wise IoU",
        "",
        class_table(logs, classes, class_names),
    ])
