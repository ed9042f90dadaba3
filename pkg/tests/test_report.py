"""CSV persistence, tables, and SVG plotting."""

import math
import xml.etree.ElementTree as ET

import pytest

from paretoprobe import pareto, report
from paretoprobe.report import ExperimentRecord


def make_record(**overrides):
    base = dict(
        language="en",
        task="posl",
        representation="random",
        family="linear-nuclear",
        probe_id=0,
        hyperparameters={"penalty": 0.5, "rank": None, "hidden_layers": 0,
                         "hidden_size": 0, "dropout": 0.0, "dim": 64,
                         "n_labels": 17},
        complexity_metric="nuclear-norm",
        complexity_value=12.5,
        train_accuracy=0.9,
        dev_accuracy=0.85,
        test_accuracy=None,
        seed=0,
        wall_time=None,
    )
    base.update(overrides)
    return ExperimentRecord(**base)


def staircase(values, metric="nuclear-norm", task="posl", **extra):
    """One record per (complexity, accuracy) pair, distinct probe ids."""
    return [
        make_record(probe_id=i, complexity_metric=metric, task=task,
                    complexity_value=c, train_accuracy=a, dev_accuracy=None,
                    **extra)
        for i, (c, a) in enumerate(values)
    ]


# -- CSV round trip -----------------------------------------------------


def test_round_trip_preserves_records_exactly(tmp_path):
    records = [
        make_record(complexity_value=0.1 + 0.2, train_accuracy=1 / 3,
                    dev_accuracy=None, test_accuracy=0.7253000000001),
        make_record(probe_id=1, wall_time=1.25, test_accuracy=0.75,
                    hyperparameters={"penalty": 2.0 ** -10, "rank": 3,
                                     "hidden_layers": 2, "hidden_size": 512,
                                     "dropout": 0.1, "dim": 768,
                                     "n_labels": 40}),
        make_record(task="parse", complexity_metric="label-shuffled",
                    complexity_value=0.9999999999999999),
    ]
    path = tmp_path / "records.csv"
    report.write_records(records, str(path))
    assert report.read_records(str(path)) == records


def test_write_rejects_duplicate_keys(tmp_path):
    records = [make_record(), make_record(train_accuracy=0.1)]
    with pytest.raises(ValueError, match="duplicate"):
        report.write_records(records, str(tmp_path / "r.csv"))


def test_read_rejects_bad_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        report.read_records(str(path))


def test_read_rejects_unknown_schema_version(tmp_path):
    path = tmp_path / "r.csv"
    report.write_records([make_record()], str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[1] = lines[1].replace("1,", "99,", 1)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ValueError, match="schema version"):
        report.read_records(str(path))


def test_written_file_is_stable_across_runs(tmp_path):
    records = [make_record(), make_record(probe_id=1)]
    report.write_records(records, str(tmp_path / "a.csv"))
    report.write_records(records, str(tmp_path / "b.csv"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


# -- filtering and grouping ---------------------------------------------


def test_filter_records_by_fields():
    records = [make_record(), make_record(task="dal", probe_id=1),
               make_record(representation="onehot", probe_id=2)]
    assert len(report.filter_records(records, task="posl")) == 2
    assert len(report.filter_records(records, representation="onehot")) == 1
    assert report.filter_records(records) == records


def test_filter_warns_when_nothing_matches():
    records = [make_record()]
    with pytest.warns(UserWarning, match="no records match"):
        out = report.filter_records(records, task="parse")
    assert out == []


def test_record_accuracy_prefers_test_then_dev_then_train():
    assert report.record_accuracy(
        make_record(test_accuracy=0.7)) == 0.7
    assert report.record_accuracy(make_record()) == 0.85
    assert report.record_accuracy(
        make_record(dev_accuracy=None)) == 0.9


# -- normalization bounds ------------------------------------------------


def test_group_bounds_follow_task_conventions():
    nuclear = staircase([(10.0, 0.5)])
    assert report.group_bound("posl", "nuclear-norm", nuclear) == 400.0
    assert report.group_bound("dal", "nuclear-norm", nuclear) == 400.0
    assert report.group_bound("parse", "nuclear-norm", nuclear) == 700.0
    rank = staircase([(3.0, 0.5)], metric="rank")
    # min(n_labels=17, dim=64)
    assert report.group_bound("posl", "rank", rank) == 17.0
    shuffled = staircase([(0.4, 0.5)], metric="label-shuffled")
    assert report.group_bound("posl", "label-shuffled", shuffled) == 1.0
    assert report.group_bound("parse", "fully-shuffled", shuffled) == 1.0


def test_rank_bound_requires_consistent_shapes():
    records = staircase([(3.0, 0.5), (4.0, 0.6)], metric="rank")
    small = dict(records[1].hyperparameters, dim=8)
    records[1] = make_record(probe_id=1, complexity_metric="rank",
                             complexity_value=4.0, train_accuracy=0.6,
                             dev_accuracy=None, hyperparameters=small)
    with pytest.raises(ValueError, match="rank normalization"):
        report.group_bound("posl", "rank", records)


# -- frontier and hypervolume tables -------------------------------------


def test_frontier_rows_match_pareto_module():
    records = staircase([(1.0, 0.4), (2.0, 0.3), (3.0, 0.9), (0.5, 0.35)])
    rows = report.frontier_rows(records)
    points = [pareto.ProbePoint(complexity=r.complexity_value,
                                accuracy=report.record_accuracy(r))
              for r in records]
    expected = pareto.pareto_frontier(points)
    assert [(float(r[-2]), float(r[-1])) for r in rows] == [
        (p.complexity, p.accuracy) for p in expected]
    header = report.FRONTIER_COLUMNS
    assert all(len(row) == len(header) for row in rows)


def test_frontier_rows_split_by_group():
    records = (staircase([(1.0, 0.4)]) +
               staircase([(1.0, 0.5)], representation="onehot"))
    rows = report.frontier_rows(records)
    assert {row[3] for row in rows} == {"random", "onehot"}


def test_hypervolume_rows_delegate_and_normalize():
    records = staircase([(100.0, 0.4), (200.0, 0.8), (500.0, 0.99)])
    rows = report.hypervolume_rows(records)
    assert len(rows) == 1
    row = dict(zip(report.HYPERVOLUME_COLUMNS, rows[0]))
    points = [pareto.ProbePoint(complexity=r.complexity_value,
                                accuracy=report.record_accuracy(r))
              for r in records]
    expected = pareto.hypervolume(points, c_max=400.0)
    assert float(row["hypervolume"]) == expected.value
    assert float(row["c_max"]) == 400.0
    assert int(row["point_count"]) == expected.point_count
    assert int(row["excluded_count"]) == 1  # the 500.0 point


def test_hypervolume_shuffled_metric_uses_unit_bound():
    records = staircase([(0.2, 0.5), (0.7, 0.9)], metric="label-shuffled")
    row = dict(zip(report.HYPERVOLUME_COLUMNS,
                   report.hypervolume_rows(records)[0]))
    assert float(row["c_max"]) == 1.0
    expected = pareto.hypervolume(
        [pareto.ProbePoint(complexity=0.2, accuracy=0.5),
         pareto.ProbePoint(complexity=0.7, accuracy=0.9)], c_max=1.0)
    assert float(row["hypervolume"]) == expected.value


def test_write_and_format_table(tmp_path):
    records = staircase([(1.0, 0.4), (2.0, 0.8)])
    rows = report.hypervolume_rows(records)
    path = tmp_path / "hv.csv"
    report.write_table(rows, report.HYPERVOLUME_COLUMNS, str(path))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(report.HYPERVOLUME_COLUMNS)
    assert len(lines) == 2
    text = report.format_table(rows, report.HYPERVOLUME_COLUMNS)
    assert "hypervolume" in text
    assert "en" in text


# -- colors ---------------------------------------------------------------


def test_representation_colors_are_stable_hex():
    first = report.representation_color("bert-base")
    assert first == report.representation_color("bert-base")
    assert first.startswith("#") and len(first) == 7
    int(first[1:], 16)
    names = ["bert-base", "elmo", "fasttext", "onehot", "random"]
    assert len({report.representation_color(n) for n in names}) == len(names)


# -- plots ----------------------------------------------------------------


def svg_root(records, **kwargs):
    text = report.plot_svg(records, **kwargs)
    root = ET.fromstring(text)  # strict parse
    assert root.tag.endswith("svg")
    return text, root


def test_plot_contains_points_frontier_and_labels():
    records = (staircase([(10.0, 0.4), (50.0, 0.7), (30.0, 0.5)]) +
               staircase([(20.0, 0.6), (60.0, 0.8)], representation="onehot"))
    text, root = svg_root(records)
    ns = {"svg": "http://www.w3.org/2000/svg"}
    circles = root.findall(".//svg:circle", ns)
    # 5 data circles + 2 legend swatches
    assert len(circles) == 7
    polylines = root.findall(".//svg:polyline", ns)
    assert len(polylines) == 2
    texts = [t.text for t in root.findall(".//svg:text", ns)]
    assert "nuclear-norm" in texts
    assert "accuracy" in texts
    assert "en posl" in texts
    assert "onehot" in texts and "random" in texts


def test_plot_parse_task_labels_uas():
    records = staircase([(10.0, 0.4)], task="parse")
    text, root = svg_root(records)
    assert ">UAS<" in text


def test_plot_escapes_names():
    records = staircase([(10.0, 0.4)], representation="a<b&c")
    text, root = svg_root(records)
    assert "a&lt;b&amp;c" in text
    assert "a<b" not in text


def test_plot_requires_single_scope():
    records = staircase([(1.0, 0.4)]) + staircase([(1.0, 0.4)], task="dal")
    with pytest.raises(ValueError, match="single"):
        report.plot_svg(records)
    with pytest.raises(ValueError, match="no records"):
        report.plot_svg([])


def test_plot_excludes_points_beyond_bound():
    records = staircase([(10.0, 0.4), (399.0, 0.9), (10_000.0, 0.99)])
    text, root = svg_root(records)
    ns = {"svg": "http://www.w3.org/2000/svg"}
    circles = root.findall(".//svg:circle", ns)
    assert len(circles) == 2 + 1  # two in-bound points + legend swatch
