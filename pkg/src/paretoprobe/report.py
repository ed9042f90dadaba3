"""Results persistence and reporting: CSV records, tables, SVG plots.

The results file is a versioned UTF-8 CSV with one row per (trained probe,
complexity metric). Floats are written with ``repr`` so parsing the file back
reproduces the records exactly. Reporting groups rows by (language, task,
metric, representation) and delegates frontier/hypervolume math to the pareto
module; the normalization bound is the task convention for nuclear norms,
min(labels, dim) for ranks, and 1 for the shuffled metrics.
"""

from __future__ import annotations

import colorsys
import csv
import hashlib
import json
import warnings
from dataclasses import dataclass
from xml.sax.saxutils import escape

from . import complexity, pareto
from .corpus import PARSE

SCHEMA_VERSION = 1

COLUMNS = (
    "schema_version",
    "language",
    "task",
    "representation",
    "family",
    "probe_id",
    "hyperparameters",
    "complexity_metric",
    "complexity_value",
    "train_accuracy",
    "dev_accuracy",
    "test_accuracy",
    "seed",
    "wall_time",
)

FRONTIER_COLUMNS = (
    "language", "task", "complexity_metric", "representation",
    "probe_id", "complexity", "accuracy",
)

HYPERVOLUME_COLUMNS = (
    "language", "task", "complexity_metric", "representation",
    "hypervolume", "c_max", "point_count", "excluded_count",
)


@dataclass(frozen=True)
class ExperimentRecord:
    """One probe scored under one complexity metric."""

    language: str
    task: str
    representation: str
    family: str
    probe_id: int
    hyperparameters: dict
    complexity_metric: str
    complexity_value: float
    train_accuracy: float
    dev_accuracy: float | None
    test_accuracy: float | None
    seed: int
    wall_time: float | None

    @property
    def key(self) -> tuple:
        return (self.language, self.task, self.representation, self.family,
                self.probe_id, self.complexity_metric)


def record_accuracy(record: ExperimentRecord) -> float:
    """The quality coordinate: test accuracy, else dev, else train."""
    if record.test_accuracy is not None:
        return record.test_accuracy
    if record.dev_accuracy is not None:
        return record.dev_accuracy
    return record.train_accuracy


def _float_cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_records(records, path: str) -> None:
    """Write records as CSV; duplicate uniqueness keys are an error."""
    records = list(records)
    seen = set()
    for record in records:
        if record.key in seen:
            raise ValueError(f"duplicate record key {record.key}")
        seen.add(record.key)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in records:
            writer.writerow([
                str(SCHEMA_VERSION),
                record.language,
                record.task,
                record.representation,
                record.family,
                str(record.probe_id),
                json.dumps(record.hyperparameters, sort_keys=True,
                           separators=(",", ":")),
                record.complexity_metric,
                _float_cell(record.complexity_value),
                _float_cell(record.train_accuracy),
                _float_cell(record.dev_accuracy),
                _float_cell(record.test_accuracy),
                str(record.seed),
                _float_cell(record.wall_time),
            ])


def read_records(path: str) -> list[ExperimentRecord]:
    """Parse a results CSV back into records, exactly."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError(f"{path}: empty results file") from None
        if header != COLUMNS:
            raise ValueError(
                f"{path}: unexpected header {header!r}; expected {COLUMNS!r}"
            )
        records = []
        for line_number, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise ValueError(
                    f"{path}:{line_number}: expected {len(COLUMNS)} columns, "
                    f"got {len(row)}"
                )
            if row[0] != str(SCHEMA_VERSION):
                raise ValueError(
                    f"{path}:{line_number}: unsupported schema version {row[0]!r}"
                )
            records.append(ExperimentRecord(
                language=row[1],
                task=row[2],
                representation=row[3],
                family=row[4],
                probe_id=int(row[5]),
                hyperparameters=json.loads(row[6]),
                complexity_metric=row[7],
                complexity_value=float(row[8]),
                train_accuracy=float(row[9]),
                dev_accuracy=float(row[10]) if row[10] else None,
                test_accuracy=float(row[11]) if row[11] else None,
                seed=int(row[12]),
                wall_time=float(row[13]) if row[13] else None,
            ))
    return records


def filter_records(records, language=None, task=None, metric=None,
                   representation=None) -> list[ExperimentRecord]:
    """Select rows; warn when an explicit filter matches nothing."""
    out = [
        r for r in records
        if (language is None or r.language == language)
        and (task is None or r.task == task)
        and (metric is None or r.complexity_metric == metric)
        and (representation is None or r.representation == representation)
    ]
    requested = [value for value in (language, task, metric, representation)
                 if value is not None]
    if requested and not out:
        warnings.warn(
            "no records match " + ", ".join(repr(v) for v in requested)
            + "; group omitted"
        )
    return out


def _group(records) -> dict:
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for record in records:
        key = (record.language, record.task, record.complexity_metric,
               record.representation)
        groups.setdefault(key, []).append(record)
    return dict(sorted(groups.items()))


def group_bound(task: str, metric: str, records) -> float:
    """c_max for one (task, metric, representation) group of records."""
    if metric == complexity.NUCLEAR_NORM:
        return complexity.complexity_bound(metric, task)
    if metric == complexity.RANK:
        shapes = {
            (r.hyperparameters.get("n_labels"), r.hyperparameters.get("dim"))
            for r in records
        }
        if len(shapes) != 1 or None in next(iter(shapes)):
            raise ValueError(
                f"rank normalization needs one (n_labels, dim) per group, "
                f"got {sorted(shapes)}"
            )
        n_labels, dim = next(iter(shapes))
        return complexity.complexity_bound(metric, task, n_labels=n_labels,
                                           dim=dim)
    return complexity.complexity_bound(metric, task)


def _points(records) -> list[pareto.ProbePoint]:
    return [
        pareto.ProbePoint(
            complexity=r.complexity_value,
            accuracy=record_accuracy(r),
            task=r.task,
            language=r.language,
            representation=r.representation,
            family=r.family,
            probe_id=r.probe_id,
            seed=r.seed,
        )
        for r in records
    ]


def frontier_rows(records) -> list[tuple]:
    """Per-group Pareto frontier points, one row each."""
    rows = []
    for (language, task, metric, representation), group in _group(records).items():
        frontier = pareto.pareto_frontier(_points(group))
        for point in frontier:
            rows.append((language, task, metric, representation,
                         point.probe_id, point.complexity, point.accuracy))
    return rows


def hypervolume_rows(records) -> list[tuple]:
    """Per-group hypervolume with the declared normalization bound."""
    rows = []
    for (language, task, metric, representation), group in _group(records).items():
        bound = group_bound(task, metric, group)
        result = pareto.hypervolume(_points(group), bound)
        rows.append((language, task, metric, representation,
                     result.value, result.c_max,
                     result.point_count, result.excluded_count))
    return rows


def write_table(rows, columns, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                repr(value) if isinstance(value, float) else str(value)
                for value in row
            ])


def format_table(rows, columns) -> str:
    widths = [len(c) for c in columns]
    printable = [[f"{v:.4f}" if isinstance(v, float) else str(v) for v in row]
                 for row in rows]
    for row in printable:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    for row in printable:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def representation_color(name: str) -> str:
    """Stable hex color from the representation name alone."""
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=2).digest()
    hue = int.from_bytes(digest, "little") / 65536.0
    red, green, blue = colorsys.hsv_to_rgb(hue, 0.65, 0.78)
    return "#{:02x}{:02x}{:02x}".format(
        round(red * 255), round(green * 255), round(blue * 255)
    )


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def plot_svg(records) -> str:
    """SVG 1.1 scatter + frontier staircase, one color per representation.

    All records must share one (language, task, metric); the x-axis runs over
    [0, c_max] (points beyond the bound are not drawn) and the y-axis over
    [0, 1], labeled UAS for parsing and accuracy otherwise.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to plot")
    scopes = {(r.language, r.task, r.complexity_metric) for r in records}
    if len(scopes) != 1:
        raise ValueError(
            "plot needs a single (language, task, metric); got "
            + ", ".join(map(str, sorted(scopes)))
        )
    language, task, metric = next(iter(scopes))
    groups = _group(records)
    bound = max(
        group_bound(task, metric, group) for _, group in groups.items()
    )

    width, height = 720.0, 520.0
    left, right, top, bottom = 80.0, 170.0, 40.0, 70.0
    plot_w = width - left - right
    plot_h = height - top - bottom

    def sx(complexity_value: float) -> float:
        return left + (complexity_value / bound) * plot_w

    def sy(accuracy: float) -> float:
        return top + (1.0 - accuracy) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
        f'<text x="{_fmt(left + plot_w / 2)}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">'
        f'{escape(f"{language} {task}")}</text>',
    ]

    axis = 'stroke="black" stroke-width="1"'
    parts.append(f'<line x1="{_fmt(left)}" y1="{_fmt(top + plot_h)}" '
                 f'x2="{_fmt(left + plot_w)}" y2="{_fmt(top + plot_h)}" {axis}/>')
    parts.append(f'<line x1="{_fmt(left)}" y1="{_fmt(top)}" '
                 f'x2="{_fmt(left)}" y2="{_fmt(top + plot_h)}" {axis}/>')

    for i in range(5):
        value = bound * i / 4.0
        x = sx(value)
        parts.append(f'<line x1="{_fmt(x)}" y1="{_fmt(top + plot_h)}" '
                     f'x2="{_fmt(x)}" y2="{_fmt(top + plot_h + 5)}" {axis}/>')
        parts.append(f'<text x="{_fmt(x)}" y="{_fmt(top + plot_h + 20)}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{_fmt(value)}</text>')
    for i in range(6):
        value = i / 5.0
        y = sy(value)
        parts.append(f'<line x1="{_fmt(left - 5)}" y1="{_fmt(y)}" '
                     f'x2="{_fmt(left)}" y2="{_fmt(y)}" {axis}/>')
        parts.append(f'<text x="{_fmt(left - 9)}" y="{_fmt(y + 4)}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{_fmt(value)}</text>')

    y_label = "UAS" if task == PARSE else "accuracy"
    parts.append(f'<text x="{_fmt(left + plot_w / 2)}" '
                 f'y="{_fmt(height - 18)}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">'
                 f'{escape(metric)}</text>')
    parts.append(f'<text x="22" y="{_fmt(top + plot_h / 2)}" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="13" transform="rotate(-90 22 '
                 f'{_fmt(top + plot_h / 2)})">{escape(y_label)}</text>')

    legend_y = top + 10
    for (_, _, _, representation), group in groups.items():
        color = representation_color(representation)
        points = [p for p in _points(group) if p.complexity <= bound]
        for point in points:
            parts.append(f'<circle cx="{_fmt(sx(point.complexity))}" '
                         f'cy="{_fmt(sy(point.accuracy))}" r="4" '
                         f'fill="{color}" fill-opacity="0.55"/>')
        frontier = pareto.pareto_frontier(points)
        if len(frontier):
            steps = []
            staircase = list(frontier)
            for index, point in enumerate(staircase):
                steps.append((point.complexity, point.accuracy))
                next_c = (staircase[index + 1].complexity
                          if index + 1 < len(staircase) else bound)
                steps.append((next_c, point.accuracy))
            path = " ".join(f"{_fmt(sx(c))},{_fmt(sy(a))}" for c, a in steps)
            parts.append(f'<polyline points="{path}" fill="none" '
                         f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<circle cx="{_fmt(left + plot_w + 18)}" '
                     f'cy="{_fmt(legend_y - 4)}" r="5" fill="{color}"/>')
        parts.append(f'<text x="{_fmt(left + plot_w + 28)}" '
                     f'y="{_fmt(legend_y)}" font-family="sans-serif" '
                     f'font-size="12">{escape(representation)}</text>')
        legend_y += 18

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
