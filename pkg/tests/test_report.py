import pytest

from src.core.types import RoundLog, Strategy
from src.io_formats.report import class_table, render_report, strategy_table
from src.utils.helpers import EmptyInput, InconsistentClassCount, InvalidConfig

CLASS_NAMES = ["Cystic duct", "Gallbladder", "Segment IV", "Diathermy hook tip",
               "Johann grasper tip", "Scissors tip"]

# Six-class fixture: initial model, round 3 of each strategy and the all-data anchor.
INIT = (72, [0.0123, 0.5669, 0.2526, 0.6146, 0.3576, 0.0])
ROUND_3 = {
    Strategy.RANDOM: [0.2094, 0.7497, 0.7065, 0.8501, 0.5131, 0.0994],
    Strategy.ENTROPY: [0.2407, 0.7500, 0.7578, 0.8617, 0.5224, 0.2671],
    Strategy.EUCLIDEAN: [0.2609, 0.7497, 0.7452, 0.8544, 0.5452, 0.3529],
    Strategy.COSINE: [0.2616, 0.7501, 0.7425, 0.8569, 0.5449, 0.3391],
}
ALL_DATA = (440, [0.2523, 0.7749, 0.7413, 0.8694, 0.5386, 0.1417])


def log(strategy, round_, n_labeled, ious, seed=0):
    return RoundLog(round=round_, strategy=strategy, selected=(), per_class_iou=tuple(ious),
                    miou=sum(ious) / len(ious), seed=seed, n_labeled=n_labeled)


@pytest.fixture
def table_logs():
    logs = [log(s, 0, *INIT) for s in ROUND_3]
    logs += [log(s, 3, 222, ious) for s, ious in ROUND_3.items()]
    logs.append(log(Strategy.ALL, 3, *ALL_DATA))
    return logs


def test_class_table_layout(table_logs):
    lines = class_table(table_logs, class_names=CLASS_NAMES).splitlines()
    assert lines[0] == ("| Round | Total frames | Cystic duct | Gallbladder | Segment IV | "
                        "Diathermy hook tip | Johann grasper tip | Scissors tip |")
    assert lines[2] == "| Init | 72 | 0.0123 | 0.5669 | 0.2526 | 0.6146 | 0.3576 | 0.0000 |"
    assert lines[-1] == "| All data | 440 | 0.2523 | 0.7749 | 0.7413 | 0.8694 | 0.5386 | 0.1417 |"


def test_best_marked_per_round(table_logs):
    """euclidean holds the best scissors-tip IoU in round 3"""
    lines = class_table(table_logs, class_names=CLASS_NAMES).splitlines()
    euclidean = next(line for line in lines if line.startswith("| R3 euclidean"))
    assert euclidean == ("| R3 euclidean | 222 | 0.2609 | 0.7497 | 0.7452 | 0.8544 | "
                         "**0.5452** | **0.3529** |")
    random_row = next(line for line in lines if line.startswith("| R3 random"))
    assert "**" not in random_row


def test_class_subset_and_default_names(table_logs):
    lines = class_table(table_logs, classes=[5]).splitlines()
    assert lines[0] == "| Round | Total frames | class 5 |"


def test_excluded_class_rendered_as_dash():
    logs = [RoundLog(round=1, strategy=Strategy.RANDOM, selected=(), per_class_iou=(0.5, None),
                     miou=0.5, seed=0, n_labeled=10)]
    assert class_table(logs).splitlines()[-1] == "| R1 random | 10 | **0.5000** | - |"


def test_single_strategy_single_round():
    logs = [log(Strategy.RANDOM, 0, 10, [0.25, 0.75])]
    lines = strategy_table(logs).splitlines()
    assert lines == ["| Round | random |", "| --- | --- |", "| R0 | **0.5000** |"]


def test_ties_mark_every_maximum():
    logs = [log(Strategy.EUCLIDEAN, 1, 10, [0.4]), log(Strategy.COSINE, 1, 10, [0.4]),
            log(Strategy.RANDOM, 1, 10, [0.2])]
    assert strategy_table(logs).splitlines()[2] == "| R1 | **0.4000** | **0.4000** | 0.2000 |"


def test_means_across_seeds_and_anchor_line():
    logs = [log(Strategy.RANDOM, 1, 10, [0.2], seed=0), log(Strategy.RANDOM, 1, 12, [0.4], seed=1),
            log(Strategy.ALL, 1, 40, [0.9])]
    text = strategy_table(logs)
    assert "| R1 | **0.3000** |" in text
    assert text.rstrip().endswith("All data: 0.9000")
    assert "| R1 random | 11 | **0.3000** |" in class_table(logs)


def test_render_report_and_errors(table_logs):
    text = render_report(table_logs, classes=[0, 5], class_names=CLASS_NAMES)
    assert "## Mean IoU per round" in text and "## Class-wise IoU" in text
    with pytest.raises(EmptyInput):
        render_report([])
    with pytest.raises(InvalidConfig):
        class_table(table_logs, classes=[6])
    with pytest.raises(InconsistentClassCount):
        class_table(table_logs + [log(Strategy.RANDOM, 1, 10, [0.1])])
