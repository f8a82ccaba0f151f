"""Pool state document (YAML, UTF-8).

Schema, version 1::

    schema_version: 1
    round: 2            # completed selection rounds
    seed: 7             # 64-bit unsigned
    labeled: ["0:0", "0:3", ...]
    validation: ["0:1"]  # subset of labeled
    unlabeled: ["1:0", ...]
    test: ["4:0", ...]

Frame lists hold ``video:index`` strings in ascending FrameId order, so the
same state always renders to the same bytes.
"""

import os
from pathlib import Path
from typing import Any, Dict, List, Union

import yaml

from src.core.pool import check_partition
from src.core.rng import check_seed
from src.core.types import FrameId, PoolState
from src.io_formats.atomic import atomic_write
from src.utils.helpers import FrameSelectionError, IoFailure, ParseError

SCHEMA_VERSION = 1
FRAME_FIELDS = ("labeled", "validation", "unlabeled", "test")

PathLike = Union[str, os.PathLike]


def render_pool_state(state: PoolState) -> str:
    document: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "round": state.round,
        "seed": state.seed,
    }
    for name in FRAME_FIELDS:
        document[name] = [str(frame) for frame in sorted(getattr(state, name))]
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None, width=100)


def save_pool_state(path: PathLike, state: PoolState) -> None:
    atomic_write(path, render_pool_state(state))


def _frames(document: Dict[str, Any], name: str) -> frozenset:
    values = document.get(name, [])
    if not isinstance(values, list):
        raise ParseError(f"{name} must be a list of video:index ids", {"field": name})
    frames: List[FrameId] = []
    for value in values:
        try:
            frames.append(FrameId.parse(str(value)))
        except FrameSelectionError:
            raise ParseError(f"bad frame id in {name}", {"field": name, "frame": value})
    return frozenset(frames)


def parse_pool_state(text: str, source: str = "<state>") -> PoolState:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        line = getattr(getattr(e, "problem_mark", None), "line", None)
        raise ParseError(f"pool state is not valid YAML: {e}",
                         {"path": source, "line": None if line is None else line + 1})
    if not isinstance(document, dict):
        raise ParseError("pool state must be a mapping", {"path": source})
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported pool state schema {version!r}",
                         {"path": source, "field": "schema_version"})
    for name in ("round", "seed"):
        if not isinstance(document.get(name), int) or isinstance(document.get(name), bool):
            raise ParseError(f"{name} must be an integer", {"path": source, "field": name})
    if document["round"] < 0:
        raise ParseError("round must be nonnegative", {"path": source, "field": "round"})

    state = PoolState(
        labeled=_frames(document, "labeled"),
        unlabeled=_frames(document, "unlabeled"),
        test=_frames(document, "test"),
        round=document["round"],
        seed=check_seed(document["seed"]),
        validation=_frames(document, "validation"),
    )
    check_partition(state)
    return state


def load_pool_state(path: PathLike) -> PoolState:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read pool state: {e}", {"path": str(path)})
    return parse_pool_state(text, source=str(path))
