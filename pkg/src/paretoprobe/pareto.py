"""Pareto dominance, frontiers, and normalized hypervolume for probe points.

A point is better when its complexity is lower and its accuracy higher; the
frontier is the set of non-dominated points and the hypervolume is the area
under the frontier's attainment staircase after dividing complexity by a
task-level cap ``c_max``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ProbePoint:
    """One trained probe's (complexity, accuracy) with its provenance."""

    complexity: float
    accuracy: float
    task: str = ""
    language: str = ""
    representation: str = ""
    family: str = ""
    probe_id: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.complexity < 0.0:
            raise ValueError(f"complexity must be non-negative, got {self.complexity}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.accuracy}")


def dominates(p: ProbePoint, q: ProbePoint) -> bool:
    """True iff p is at least as good as q on both axes and better on one."""
    return (
        p.complexity <= q.complexity
        and p.accuracy >= q.accuracy
        and (p.complexity < q.complexity or p.accuracy > q.accuracy)
    )


@dataclass(frozen=True)
class Frontier:
    """Non-dominated points, complexity ascending, accuracy strictly rising."""

    points: tuple[ProbePoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def pareto_frontier(points) -> Frontier:
    """Extract the Pareto frontier.

    Points sharing identical coordinates collapse to the one with the lowest
    probe_id. The result is sorted by ascending complexity, and accuracy is
    strictly increasing along it.
    """
    ordered = sorted(points, key=lambda p: (p.complexity, -p.accuracy, p.probe_id))
    frontier: list[ProbePoint] = []
    best_accuracy = -1.0
    for point in ordered:
        if point.accuracy > best_accuracy:
            frontier.append(point)
            best_accuracy = point.accuracy
    return Frontier(points=tuple(frontier))


@dataclass(frozen=True)
class HypervolumeResult:
    value: float
    c_max: float
    point_count: int
    excluded_count: int


def hypervolume(points, c_max: float) -> HypervolumeResult:
    """Area under the attainment staircase on normalized complexity.

    Complexities are divided by ``c_max``; points landing above 1 are
    excluded (and counted). Each frontier point extends its accuracy
    rightwards until the next frontier point or the normalized limit 1, so
    the value lies in [0, 1] and never decreases when points are added.
    """
    if c_max <= 0.0:
        raise ValueError(f"c_max must be positive, got {c_max}")
    points = list(points)
    kept = [p for p in points if p.complexity / c_max <= 1.0]
    excluded = len(points) - len(kept)
    if not kept:
        return HypervolumeResult(0.0, c_max, 0, excluded)
    frontier = pareto_frontier(kept)
    value = 0.0
    steps = [p.complexity / c_max for p in frontier] + [1.0]
    for i, point in enumerate(frontier.points):
        value += point.accuracy * (steps[i + 1] - steps[i])
    return HypervolumeResult(float(value), c_max, len(kept), excluded)
