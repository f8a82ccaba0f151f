"""RoundLog CSV.

Header: ``strategy,seed,round,n_labeled,selected_ids,miou,iou_class_0,...``.
selected_ids joins ``video:index`` pairs with ``;``. Floats are written as the
shortest decimal that reads back to the same double; an IoU that is undefined
(the class never occurs in prediction or annotation) is an empty cell.

The curves file written by ``simulate`` is the same table without the
selected_ids column.
"""

import io
import math
import os
import re
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from src.core.types import FrameId, RoundLog, Strategy
from src.io_formats.atomic import atomic_write
from src.utils.helpers import FrameSelectionError, InconsistentClassCount, IoFailure, ParseError

LEADING_COLUMNS = ["strategy", "seed", "round", "n_labeled"]
SELECTED_COLUMN = "selected_ids"
IOU_PREFIX = "iou_class_"

PathLike = Union[str, os.PathLike]


def format_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def class_count(logs: Sequence[RoundLog]) -> int:
    counts = sorted({len(log.per_class_iou) for log in logs})
    if len(counts) > 1:
        raise InconsistentClassCount(f"logs disagree on the class count: {counts}",
                                     {"class_counts": counts})
    return counts[0] if counts else 0


def columns_for(num_classes: int, include_selected: bool = True) -> List[str]:
    columns = list(LEADING_COLUMNS)
    if include_selected:
        columns.append(SELECTED_COLUMN)
    columns.append("miou")
    columns.extend(f"{IOU_PREFIX}{k}" for k in range(num_classes))
    return columns


def render_round_log(logs: Sequence[RoundLog], include_selected: bool = True) -> str:
    num_classes = class_count(logs)
    rows = []
    for log in logs:
        row = {
            "strategy": log.strategy.value,
            "seed": str(log.seed),
            "round": str(log.round),
            "n_labeled": str(log.n_labeled),
            "miou": format_float(log.miou),
        }
        if include_selected:
            row[SELECTED_COLUMN] = ";".join(str(frame) for frame in log.selected)
        for k, value in enumerate(log.per_class_iou):
            row[f"{IOU_PREFIX}{k}"] = format_float(value)
        rows.append(row)
    frame = pd.DataFrame(rows, columns=columns_for(num_classes, include_selected), dtype=str)
    return frame.to_csv(index=False, lineterminator="\n")


def save_round_log(path: PathLike, logs: Sequence[RoundLog], include_selected: bool = True) -> None:
    atomic_write(path, render_round_log(logs, include_selected))


def _iou_columns(columns: Sequence[str]) -> int:
    found = []
    for column in columns:
        match = re.fullmatch(rf"{IOU_PREFIX}(\d+)", column)
        if match:
            found.append(int(match.group(1)))
    if sorted(found) != list(range(len(found))):
        raise ParseError("iou_class_* columns must be numbered 0..K-1", {"line": 1})
    return len(found)


def _parse_float(text: str, line: int, column: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{column} is not a number: {text!r}", {"line": line, "column": column})


def _parse_int(text: str, line: int, column: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ParseError(f"{column} is not an integer: {text!r}", {"line": line, "column": column})


def parse_round_log(text: str) -> List[RoundLog]:
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ParseError("round log has no header", {"line": 1})
    except pd.errors.ParserError as e:
        raise ParseError(f"round log is not valid CSV: {e}", {"line": None})

    missing = [c for c in LEADING_COLUMNS + ["miou"] if c not in frame.columns]
    if missing:
        raise ParseError(f"round log lacks column {missing[0]!r}", {"line": 1, "column": missing[0]})
    num_classes = _iou_columns(frame.columns)
    has_selected = SELECTED_COLUMN in frame.columns

    logs: List[RoundLog] = []
    for position, row in enumerate(frame.to_dict(orient="records")):
        line = position + 2
        try:
            strategy = Strategy(row["strategy"].strip())
        except ValueError:
            raise ParseError(f"unknown strategy {row['strategy']!r}", {"line": line, "column": "strategy"})
        selected = ()
        if has_selected and row[SELECTED_COLUMN].strip():
            try:
                selected = tuple(FrameId.parse(part) for part in row[SELECTED_COLUMN].split(";"))
            except FrameSelectionError:
                raise ParseError("selected_ids must be ;-joined video:index pairs",
                                 {"line": line, "column": SELECTED_COLUMN})
        logs.append(RoundLog(
            round=_parse_int(row["round"], line, "round"),
            strategy=strategy,
            selected=selected,
            per_class_iou=tuple(_parse_float(row[f"{IOU_PREFIX}{k}"], line, f"{IOU_PREFIX}{k}")
                                for k in range(num_classes)),
            miou=_parse_float(row["miou"], line, "miou"),
            seed=_parse_int(row["seed"], line, "seed"),
            n_labeled=_parse_int(row["n_labeled"], line, "n_labeled"),
        ))
    return logs


def load_round_log(path: PathLike) -> List[RoundLog]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read round log: {e}", {"path": str(path)})
    try:
        return parse_round_log(text)
    except ParseError as e:
        e.details.setdefault("path", str(path))
        raise
