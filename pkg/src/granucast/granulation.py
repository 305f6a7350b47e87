"""Triangular fuzzy granules over fixed-size windows.

Each window collapses to a granule (low, peak, up) = (min, mean, max) of
the window's values. The granule's membership function is the usual
triangle: rising from low to the peak, falling from peak to up, zero
outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GranucastError
from .timeseries import Series, WindowSet, partition_windows


class InvalidGranule(GranucastError):
    pass


@dataclass(frozen=True)
class Granule:
    """Triangular fuzzy number summarising one window."""

    low: float
    peak: float
    up: float

    def __post_init__(self):
        if not self.low <= self.peak <= self.up:
            raise InvalidGranule(
                f"need low <= peak <= up, got ({self.low}, {self.peak}, {self.up})"
            )

    def membership(self, x: float) -> float:
        """Degree to which x belongs to the granule, in [0, 1].

        Degenerate cases: a collapsed segment (low == peak or peak == up)
        has membership 1 on the segment it collapsed to, so a point granule
        accepts exactly its own value.
        """
        if x < self.low or x > self.up:
            return 0.0
        if x <= self.peak:
            if self.peak == self.low:
                return 1.0
            return (x - self.low) / (self.peak - self.low)
        if self.up == self.peak:
            return 1.0
        return (self.up - x) / (self.up - self.peak)

    @property
    def width(self) -> float:
        return self.up - self.low

    def as_array(self) -> np.ndarray:
        return np.array([self.low, self.peak, self.up], dtype=np.float64)


@dataclass(frozen=True)
class GranuleSeries:
    """Granules for consecutive windows of one series."""

    window_size: int
    granules: tuple[Granule, ...]

    def __len__(self) -> int:
        return len(self.granules)

    def as_matrix(self) -> np.ndarray:
        """Stack granules row-wise into an (n, 3) array of (low, peak, up)."""
        if not self.granules:
            return np.empty((0, 3), dtype=np.float64)
        return np.stack([g.as_array() for g in self.granules])


def granulate_window(values: np.ndarray) -> Granule:
    """Summarise one window as (min, mean, max)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InvalidGranule("cannot granulate an empty window")
    if np.isnan(values).any():
        raise InvalidGranule("window contains NaN")
    return Granule(
        low=float(values.min()), peak=float(values.mean()), up=float(values.max())
    )


def granulate_series(series: Series, window_size: int) -> GranuleSeries:
    """Partition the series into windows and granulate each one."""
    window_set: WindowSet = partition_windows(series, window_size)
    granules = tuple(
        granulate_window(series.values[start:stop]) for start, stop in window_set.windows
    )
    return GranuleSeries(window_size=window_size, granules=granules)
