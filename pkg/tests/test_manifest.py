import numpy as np
import pytest

from src.core.pool import pool_state_from_manifest
from src.core.types import FrameId, PoolState
from src.io_formats.manifest import ManifestArtifacts, load_manifest, render_manifest, save_manifest
from src.io_formats.pool_state import load_pool_state, parse_pool_state, render_pool_state, save_pool_state
from src.io_formats.tensor_file import write_tensor
from src.utils.helpers import (
    BadSplitTag,
    DuplicateFrameId,
    IoFailure,
    MissingColumn,
    MissingProbMap,
    ParseError,
    PartitionViolation,
    ShapeMismatch,
)
from tests.conftest import MANIFEST_HEADER


@pytest.fixture
def shared_tensors(tmp_path):
    write_tensor(tmp_path / "f.tnsr", np.ones(3))
    write_tensor(tmp_path / "l.tnsr", np.zeros((2, 2), dtype=np.uint16))
    return tmp_path


def write_manifest(root, rows, header=MANIFEST_HEADER):
    path = root / "manifest.csv"
    path.write_text(header + "".join(rows), encoding="utf-8")
    return path


def test_two_row_manifest(shared_tensors):
    path = write_manifest(shared_tensors, ["0,0,f.tnsr,,l.tnsr,,pool\n", "0,1,f.tnsr,,,,labeled\n"])
    manifest = load_manifest(path)
    assert [r.id for r in manifest.records] == [FrameId(0, 0), FrameId(0, 1)]
    assert manifest.records[0].probmap_ref is None
    assert manifest.records[1].split == "labeled"
    assert (manifest.dims.d, manifest.dims.H, manifest.dims.W) == (3, 2, 2)


def test_duplicate_frame_reports_second_line(shared_tensors):
    path = write_manifest(shared_tensors, ["0,0,f.tnsr,,,,pool\n", "0,1,f.tnsr,,,,pool\n",
                                           "0,0,f.tnsr,,,,pool\n"])
    with pytest.raises(DuplicateFrameId) as exc:
        load_manifest(path)
    assert exc.value.details["line"] == 4
    assert exc.value.details["first_line"] == 2


def test_bad_rows(shared_tensors):
    with pytest.raises(BadSplitTag) as exc:
        load_manifest(write_manifest(shared_tensors, ["0,0,f.tnsr,,,,train\n"]))
    assert exc.value.details["line"] == 2
    with pytest.raises(MissingColumn):
        load_manifest(write_manifest(shared_tensors, ["0,0,f.tnsr\n"], header="video,index,feature_path\n"))
    with pytest.raises(IoFailure):
        load_manifest(write_manifest(shared_tensors, ["0,0,missing.tnsr,,,,pool\n"]))
    with pytest.raises(ParseError):
        load_manifest(write_manifest(shared_tensors, ["x,0,f.tnsr,,,,pool\n"]))


def test_five_video_manifest(shared_tensors):
    """Five videos: 440 training-side rows and a 167-frame test video"""
    rows = []
    for video, count in enumerate([110, 110, 110, 110]):
        split = "labeled" if video == 0 else "pool"
        rows += [f"{video},{i},f.tnsr,,,,{split}\n" for i in range(count)]
    rows += [f"4,{i},f.tnsr,,,,test\n" for i in range(167)]
    manifest = load_manifest(write_manifest(shared_tensors, rows))
    assert len(manifest.records) == 607
    state = pool_state_from_manifest(manifest.records, seed=0)
    assert len(state.labeled) + len(state.unlabeled) == 440
    assert {frame.video for frame in state.test} == {4}
    assert len(state.validation) == 22


@pytest.mark.parametrize("row, column, line", [
    ("0,1,f.tnsr,p2.tnsr,,,pool\n", "probmap_path", 3),
    ("0,1,f.tnsr,,l3.tnsr,,pool\n", "label_path", 3),
    ("0,1,f.tnsr,,,,pool\n", "feature_path", 2),
])
def test_wrong_rank_tensors_name_line_and_column(shared_tensors, row, column, line):
    write_tensor(shared_tensors / "p2.tnsr", np.full((2, 2), 0.5))
    write_tensor(shared_tensors / "l3.tnsr", np.zeros((1, 2, 2), dtype=np.uint16))
    write_tensor(shared_tensors / "f2.tnsr", np.ones((1, 3)))
    first = "0,0,f2.tnsr,,,,pool\n" if column == "feature_path" else "0,0,f.tnsr,,,,pool\n"
    with pytest.raises(ShapeMismatch) as exc:
        load_manifest(write_manifest(shared_tensors, [first, row]))
    assert exc.value.details == {"line": line, "column": column}


def test_manifest_round_trip(dataset, tmp_path):
    manifest = load_manifest(dataset)
    copy = dataset.parent / "copy.csv"
    save_manifest(copy, manifest.records)
    assert load_manifest(copy).records == manifest.records
    assert render_manifest(manifest.records) == dataset.read_text(encoding="utf-8")


def test_artifacts_validate_tensors(make_dataset):
    manifest = load_manifest(make_dataset(skip_probmap=(1, 2)))
    artifacts = ManifestArtifacts(manifest)
    assert artifacts.feature(FrameId(1, 0)).shape == (4,)
    assert artifacts.probmap(FrameId(1, 0)).shape == (3, 4, 4)
    assert artifacts.label(FrameId(0, 0)).shape == (4, 4)
    assert artifacts.pixels(manifest.records[0]).shape == (3, 4, 4)
    with pytest.raises(MissingProbMap) as exc:
        artifacts.probmap(FrameId(1, 2))
    assert exc.value.details["frame"] == "1:2"


def test_pool_state_document_round_trip(tmp_path):
    state = PoolState(labeled=frozenset([FrameId(0, 0), FrameId(0, 1)]),
                      unlabeled=frozenset([FrameId(1, 0)]), test=frozenset([FrameId(2, 0)]),
                      round=3, seed=2 ** 64 - 1, validation=frozenset([FrameId(0, 1)]))
    path = tmp_path / "state.yaml"
    save_pool_state(path, state)
    assert load_pool_state(path) == state
    text = path.read_text(encoding="utf-8")
    assert text.startswith("schema_version: 1\n")
    assert render_pool_state(load_pool_state(path)) == text


def test_pool_state_document_errors():
    with pytest.raises(ParseError):
        parse_pool_state("schema_version: 2\nround: 0\nseed: 0\n")
    with pytest.raises(ParseError):
        parse_pool_state("schema_version: 1\nround: 0\nseed: 0\nlabeled: ['a:b']\n")
    with pytest.raises(PartitionViolation):
        parse_pool_state("schema_version: 1\nround: 0\nseed: 0\n"
                         "labeled: ['0:0']\nunlabeled: ['0:0']\n")
