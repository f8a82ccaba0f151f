import math

import pytest

from src.core.types import FrameId, RoundLog, Strategy
from src.io_formats.round_log import load_round_log, parse_round_log, render_round_log, save_round_log
from src.utils.helpers import InconsistentClassCount, IoFailure, ParseError


def make_log(round_=1, strategy=Strategy.EUCLIDEAN, seed=7, ious=(0.1 + 0.2, None, 1 / 3)):
    defined = [v for v in ious if v is not None]
    return RoundLog(round=round_, strategy=strategy,
                    selected=(FrameId(1, 4), FrameId(1, 0)) if round_ else (),
                    per_class_iou=tuple(ious), miou=sum(defined) / len(defined) if defined else None,
                    seed=seed, n_labeled=50 * round_ + 10)


def test_empty_log_is_header_only(tmp_path):
    path = tmp_path / "log.csv"
    save_round_log(path, [])
    assert path.read_text(encoding="utf-8") == "strategy,seed,round,n_labeled,selected_ids,miou\n"
    assert load_round_log(path) == []


def test_round_trip_is_lossless(tmp_path):
    logs = [make_log(0, Strategy.RANDOM), make_log(1), make_log(2, Strategy.ENTROPY, seed=2 ** 64 - 1),
            make_log(3, Strategy.ALL, ious=(None, None, None))]
    path = tmp_path / "log.csv"
    save_round_log(path, logs)
    assert load_round_log(path) == logs


def test_row_format():
    text = render_round_log([make_log()])
    header, row = text.splitlines()
    assert header == "strategy,seed,round,n_labeled,selected_ids,miou,iou_class_0,iou_class_1,iou_class_2"
    assert row.startswith("euclidean,7,1,60,1:4;1:0,")
    assert row.endswith(",0.30000000000000004,,0.3333333333333333")


def test_curves_variant_drops_selected_ids():
    text = render_round_log([make_log()], include_selected=False)
    assert "selected_ids" not in text.splitlines()[0]
    back = parse_round_log(text)[0]
    assert back.selected == () and back.per_class_iou == make_log().per_class_iou


def test_nan_survives():
    log = RoundLog(round=0, strategy=Strategy.RANDOM, selected=(), per_class_iou=(math.nan,),
                   miou=math.nan, seed=0)
    assert parse_round_log(render_round_log([log])) == [log]


def test_mixed_class_counts_rejected():
    with pytest.raises(InconsistentClassCount):
        render_round_log([make_log(), make_log(ious=(0.5,))])


def test_parse_errors_carry_line():
    text = render_round_log([make_log(), make_log(2)])
    broken = text.replace("euclidean,7,2", "euclidean,7,two")
    with pytest.raises(ParseError) as exc:
        parse_round_log(broken)
    assert exc.value.details["line"] == 3
    with pytest.raises(ParseError):
        parse_round_log(text.replace("euclidean", "greedy", 1))
    with pytest.raises(ParseError):
        parse_round_log("")


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_round_log(tmp_path / "absent.csv")
