"""Discrete space-time lattice: source/target coordinates, distances, speed limit.

Sources live on the 9x9 patch grid; class targets sit one cell outside the
grid corners. A route is feasible when its travel duration is long enough
for the signal to cover the Manhattan distance at the configured top speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised when an experiment is wired up with inconsistent parameters."""


class GridCoord(NamedTuple):
    row: int
    col: int


class TargetSite(NamedTuple):
    label: int
    coord: GridCoord


# One cell outside each corner of the 9x9 source grid. This reproduces the
# maximum source-target Manhattan distance of 18.
CORNER_COORDS = (
    GridCoord(-1, -1),
    GridCoord(-1, 9),
    GridCoord(9, -1),
    GridCoord(9, 9),
)

MNIST_LABELS = (0, 1, 2, 4)


@dataclass(frozen=True)
class SpacetimeConfig:
    horizon: int = 24          # timestamps 0..horizon, durations 0..horizon
    max_speed: int = 1         # lattice cells per timestamp
    grid_extent: int = 9       # sources occupy [0, grid_extent) squared

    def __post_init__(self):
        if self.horizon <= 0 or self.max_speed <= 0 or self.grid_extent <= 0:
            raise ConfigurationError(
                f"horizon, max_speed and grid_extent must be positive, got "
                f"{self.horizon}, {self.max_speed}, {self.grid_extent}"
            )


def manhattan_distance(a: GridCoord, b: GridCoord) -> int:
    return abs(a.row - b.row) + abs(a.col - b.col)


def target_sites(class_labels: Sequence[int]) -> list[TargetSite]:
    """Assign the given labels, in order, to the four corner sites."""
    labels = list(class_labels)
    if len(labels) != len(CORNER_COORDS):
        raise ConfigurationError(
            f"expected exactly {len(CORNER_COORDS)} class labels, got {len(labels)}"
        )
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"class labels must be distinct, got {labels}")
    return [TargetSite(lab, coord) for lab, coord in zip(labels, CORNER_COORDS)]


def feasible_durations(src: GridCoord, tgt: TargetSite, cfg: SpacetimeConfig) -> range:
    """Durations that can carry a signal from src to tgt under the speed limit.

    Contiguous interval [ceil(dist / max_speed), horizon]; empty when even the
    fastest signal cannot make the trip in time. Longer durations model
    detoured or slower routes and are always allowed.
    """
    dist = manhattan_distance(src, tgt.coord)
    lo = -(-dist // cfg.max_speed)  # ceil division
    return range(lo, cfg.horizon + 1)


@dataclass
class Geometry:
    """Sources, target sites and precomputed distance/feasibility tables."""

    sources: list[GridCoord]
    sites: list[TargetSite]
    cfg: SpacetimeConfig = field(default_factory=SpacetimeConfig)

    def __post_init__(self):
        ext = self.cfg.grid_extent
        for s in self.sources:
            if not (0 <= s.row < ext and 0 <= s.col < ext):
                raise ConfigurationError(f"source {s} outside [0,{ext})^2")
        self.labels = tuple(site.label for site in self.sites)
        self.dist = np.array(
            [[manhattan_distance(s, site.coord) for site in self.sites]
             for s in self.sources],
            dtype=np.int64,
        )
        durations = np.arange(self.cfg.horizon + 1)
        # feasible[l, y, d]: duration d can carry a signal from source l to site y
        self.feasible = (durations[None, None, :] * self.cfg.max_speed
                         >= self.dist[:, :, None]) & (
                             durations[None, None, :] <= self.cfg.horizon)
        self._source_index = {s: i for i, s in enumerate(self.sources)}
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_targets(self) -> int:
        return len(self.sites)

    def source_index(self, coord: GridCoord) -> int:
        return self._source_index[GridCoord(*coord)]

    def label_index(self, label: int) -> int:
        return self._label_index[label]


def grid_sources(extent: int = 9) -> list[GridCoord]:
    """All patch coordinates in row-major order (source id = row * extent + col)."""
    return [GridCoord(r, c) for r in range(extent) for c in range(extent)]


def mnist_geometry(labels: Sequence[int] = MNIST_LABELS,
                   cfg: SpacetimeConfig | None = None) -> Geometry:
    """81 grid sources and the four corner targets of the digit experiment."""
    return Geometry(grid_sources(9), target_sites(sorted(labels)),
                    cfg or SpacetimeConfig())
