"""Dataset manifest CSV and the tensor accessor built on it.

Header: ``video,index,feature_path,probmap_path,label_path,pixel_path,split``.
Paths are relative to the manifest's directory; optional paths may be empty;
split is one of pool, labeled, test.
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.pool import SPLIT_TAGS
from src.core.types import FrameId, FrameRecord, validate_feature, validate_label_mask, validate_probmap
from src.io_formats.atomic import atomic_write
from src.io_formats.tensor_file import read_tensor
from src.utils.helpers import (
    BadSplitTag,
    DuplicateFrameId,
    FrameSelectionError,
    IoFailure,
    MissingColumn,
    MissingFeature,
    MissingPixels,
    MissingProbMap,
    ParseError,
    ShapeMismatch,
)

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["video", "index", "feature_path", "probmap_path", "label_path",
                    "pixel_path", "split"]


@dataclass(frozen=True)
class DatasetDims:
    K: Optional[int]
    H: Optional[int]
    W: Optional[int]
    d: int


@dataclass
class Manifest:
    records: List[FrameRecord]
    dims: DatasetDims
    root: Path

    def by_video(self) -> Dict[int, List[FrameRecord]]:
        grouped: Dict[int, List[FrameRecord]] = {}
        for record in sorted(self.records, key=lambda r: r.id):
            grouped.setdefault(record.id.video, []).append(record)
        return grouped

    def frame_ids(self) -> List[FrameId]:
        return [record.id for record in self.records]


def _read_csv(path: Path) -> pd.DataFrame:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read manifest: {e}", {"path": str(path)})
    try:
        return pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"manifest is not valid CSV: {e}", {"path": str(path)})


def _optional(value: str) -> Optional[str]:
    value = value.strip()
    return value or None


def parse_manifest_rows(frame: pd.DataFrame, root: Path, check_paths: bool = True) -> List[FrameRecord]:
    missing = [column for column in MANIFEST_COLUMNS if column not in frame.columns]
    if missing:
        raise MissingColumn(f"manifest lacks column {missing[0]!r}", {"line": 1, "column": missing[0]})

    records: List[FrameRecord] = []
    first_line: Dict[FrameId, int] = {}
    for position, row in enumerate(frame.to_dict(orient="records")):
        line = position + 2
        try:
            frame_id = FrameId(int(row["video"]), int(row["index"]))
        except (ValueError, FrameSelectionError):
            raise ParseError("video and index must be nonnegative integers",
                             {"line": line, "video": row["video"], "index": row["index"]})
        if frame_id in first_line:
            raise DuplicateFrameId(f"frame {frame_id} appears twice",
                                   {"line": line, "first_line": first_line[frame_id]})
        first_line[frame_id] = line
        split = row["split"].strip()
        if split not in SPLIT_TAGS:
            raise BadSplitTag(f"unknown split tag {split!r}", {"line": line})
        feature = _optional(row["feature_path"])
        if feature is None:
            raise MissingColumn("feature_path is required", {"line": line, "column": "feature_path"})
        record = FrameRecord(id=frame_id, feature_ref=feature,
                             probmap_ref=_optional(row["probmap_path"]),
                             label_ref=_optional(row["label_path"]),
                             pixel_ref=_optional(row["pixel_path"]), split=split)
        if check_paths:
            for column, ref in (("feature_path", record.feature_ref),
                                ("probmap_path", record.probmap_ref),
                                ("label_path", record.label_ref),
                                ("pixel_path", record.pixel_ref)):
                if ref is not None and not (root / ref).is_file():
                    raise IoFailure(f"{column} does not resolve: {ref}",
                                    {"line": line, "column": column})
        records.append(record)
    return records


def _tensor_shape(root: Path, line: int, ref: str, column: str, rank: int) -> Tuple[int, ...]:
    shape = read_tensor(root / ref).shape
    if len(shape) != rank:
        raise ShapeMismatch(f"{column} must have rank {rank}, got shape {shape}",
                            {"line": line, "column": column})
    return shape


def _declared_dims(records: Sequence[FrameRecord], root: Path) -> DatasetDims:
    if not records:
        raise ParseError("manifest has no rows", {"line": 2})
    (d,) = _tensor_shape(root, 2, records[0].feature_ref, "feature_path", 1)
    if d == 0:
        raise ShapeMismatch("feature vectors are nonempty", {"line": 2, "column": "feature_path"})
    K = H = W = None
    lines = {record.id: position + 2 for position, record in enumerate(records)}
    with_probmap = next((r for r in records if r.probmap_ref), None)
    if with_probmap is not None:
        K, H, W = _tensor_shape(root, lines[with_probmap.id], with_probmap.probmap_ref,
                                "probmap_path", 3)
    else:
        with_label = next((r for r in records if r.label_ref), None)
        if with_label is not None:
            H, W = _tensor_shape(root, lines[with_label.id], with_label.label_ref,
                                 "label_path", 2)
    return DatasetDims(K=K, H=H, W=W, d=int(d))


def load_manifest(path) -> Manifest:
    path = Path(path)
    root = path.parent
    records = parse_manifest_rows(_read_csv(path), root)
    dims = _declared_dims(records, root)
    logger.info(f"Loaded {len(records)} frames over {len({r.id.video for r in records})} videos "
                f"from {path}")
    return Manifest(records, dims, root)


def render_manifest(records: Sequence[FrameRecord]) -> str:
    rows = [{
        "video": record.id.video,
        "index": record.id.index,
        "feature_path": record.feature_ref,
        "probmap_path": record.probmap_ref or "",
        "label_path": record.label_ref or "",
        "pixel_path": record.pixel_ref or "",
        "split": record.split,
    } for record in records]
    return pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(index=False, lineterminator="\n")


def save_manifest(path, records: Sequence[FrameRecord]) -> None:
    atomic_write(path, render_manifest(records))


class ManifestArtifacts:
    """Lazy, cached tensor access for the frames of a manifest."""

    def __init__(self, manifest: Manifest):
        self.manifest = manifest
        self.records = {record.id: record for record in manifest.records}
        self._cache: Dict[Tuple[str, FrameId], np.ndarray] = {}

    def _record(self, frame: FrameId, error) -> FrameRecord:
        try:
            return self.records[frame]
        except KeyError:
            raise error("frame is not in the manifest", {"frame": str(frame)})

    def _load(self, kind: str, frame: FrameId, ref: Optional[str], error) -> np.ndarray:
        key = (kind, frame)
        if key not in self._cache:
            if ref is None:
                raise error(f"frame has no {kind} tensor", {"frame": str(frame)})
            try:
                self._cache[key] = read_tensor(self.manifest.root / ref)
            except FrameSelectionError as e:
                raise error(f"{kind} tensor unreadable: {e.message}", {"frame": str(frame), "ref": ref})
        return self._cache[key]

    def feature(self, frame: FrameId) -> np.ndarray:
        record = self._record(frame, MissingFeature)
        vector = self._load("feature", frame, record.feature_ref, MissingFeature)
        return validate_feature(vector, self.manifest.dims.d, frame)

    def probmap(self, frame: FrameId) -> np.ndarray:
        record = self._record(frame, MissingProbMap)
        return validate_probmap(self._load("probmap", frame, record.probmap_ref, MissingProbMap), frame)

    def label(self, frame: FrameId) -> np.ndarray:
        record = self._record(frame, FrameSelectionError)
        dims = self.manifest.dims
        mask = self._load("label", frame, record.label_ref, FrameSelectionError)
        shape = (dims.H, dims.W) if dims.H is not None else None
        return validate_label_mask(mask, dims.K, shape)

    def pixels(self, record: FrameRecord) -> np.ndarray:
        return self._load("pixel", record.id, record.pixel_ref, MissingPixels)
