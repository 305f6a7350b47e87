"""Wind-speed series ingestion, gap imputation, windowing and splitting.

Input format is a two-column CSV with header ``timestamp,wind_speed``.
Timestamps are ISO-8601 strings or integer epoch seconds (auto-detected per
file) and must be strictly increasing; an empty wind_speed field marks a gap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import GranucastError


class MalformedRow(GranucastError):
    pass


class NonMonotoneTimestamps(GranucastError):
    pass


class EmptyFile(GranucastError):
    pass


class BoundaryGap(GranucastError):
    pass


class AllMissing(GranucastError):
    pass


class SeriesTooShort(GranucastError):
    pass


class TooFewItems(GranucastError):
    pass


@dataclass(frozen=True)
class RawSeries:
    """Series as read from disk: gaps still present.

    ``values`` holds NaN wherever ``gap_mask`` is True. Timestamps are epoch
    seconds, strictly increasing.
    """

    timestamps: np.ndarray
    values: np.ndarray
    gap_mask: np.ndarray

    def __post_init__(self):
        if len(self.timestamps) != len(self.values) or len(self.values) != len(self.gap_mask):
            raise MalformedRow("timestamps, values and gap_mask must have equal length")
        diffs = np.diff(self.timestamps)
        if len(diffs) and not np.all(diffs > 0):
            bad = int(np.argmax(diffs <= 0)) + 1
            raise NonMonotoneTimestamps(f"timestamp at row {bad} does not increase")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Series:
    """Gap-free series with a nominal uniform cadence."""

    values: np.ndarray
    origin: int
    step: int

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class WindowSet:
    """Contiguous, non-overlapping index windows tiling a series prefix."""

    window_size: int
    windows: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.windows)


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/validation/test fractions."""

    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2

    def __post_init__(self):
        for frac in (self.train_frac, self.val_frac, self.test_frac):
            if not 0.0 < frac < 1.0:
                raise ValueError(f"split fraction {frac} outside (0, 1)")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"split fractions sum to {total}, expected 1")


def _parse_timestamp(text: str, row: int) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return int(datetime.fromisoformat(text).timestamp())
    except ValueError:
        raise MalformedRow(f"row {row}: unparseable timestamp {text!r}") from None


def load_series(path: str | Path) -> RawSeries:
    """Read a ``timestamp,wind_speed`` CSV into a RawSeries.

    Empty wind_speed fields become gaps. Raises EmptyFile when there are no
    data rows, MalformedRow for parse failures and NonMonotoneTimestamps when
    timestamps do not strictly increase.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        if [column.strip().lower() for column in header] != ["timestamp", "wind_speed"]:
            raise MalformedRow(f"{path}: expected header 'timestamp,wind_speed', got {header!r}")
        timestamps: list[int] = []
        values: list[float] = []
        mask: list[bool] = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRow(f"{path}: row {row_number} has {len(row)} fields, expected 2")
            timestamps.append(_parse_timestamp(row[0], row_number))
            raw_value = row[1].strip()
            if raw_value == "":
                values.append(math.nan)
                mask.append(True)
            else:
                try:
                    value = float(raw_value)
                except ValueError:
                    raise MalformedRow(
                        f"{path}: row {row_number}: unparseable wind_speed {raw_value!r}"
                    ) from None
                if math.isnan(value):
                    raise MalformedRow(f"{path}: row {row_number}: literal NaN not allowed")
                values.append(value)
                mask.append(False)
    if not timestamps:
        raise EmptyFile(f"{path}: no data rows")
    return RawSeries(
        timestamps=np.asarray(timestamps, dtype=np.int64),
        values=np.asarray(values, dtype=np.float64),
        gap_mask=np.asarray(mask, dtype=bool),
    )


def interpolate_gaps(raw: RawSeries) -> Series:
    """Fill gaps by straight lines between the nearest observed neighbours.

    Interpolation weights use index distance (the cadence is nominally
    uniform). Leading or trailing gaps are rejected rather than extrapolated.
    """
    observed = ~raw.gap_mask
    if not observed.any():
        raise AllMissing("series has no observed values")
    if raw.gap_mask[0] or raw.gap_mask[-1]:
        raise BoundaryGap("first and last values must be observed")
    indices = np.arange(len(raw))
    filled = np.interp(indices, indices[observed], raw.values[observed])
    filled[observed] = raw.values[observed]
    step = int(raw.timestamps[1] - raw.timestamps[0]) if len(raw) > 1 else 600
    return Series(values=filled, origin=int(raw.timestamps[0]), step=step)


def partition_windows(series: Series, window_size: int) -> WindowSet:
    """Tile the series with ``floor(n / window_size)`` non-overlapping windows.

    The trailing remainder shorter than one window is dropped.
    """
    if window_size < 2:
        raise ValueError(f"window_size must be >= 2, got {window_size}")
    n = len(series)
    if n < window_size:
        raise SeriesTooShort(f"series length {n} < window size {window_size}")
    count = n // window_size
    windows = tuple((i * window_size, (i + 1) * window_size) for i in range(count))
    return WindowSet(window_size=window_size, windows=windows)


def chrono_split(items, spec: SplitSpec = SplitSpec()):
    """Split an ordered collection into contiguous train/validation/test parts.

    Boundaries follow the cumulative-floor rule: train ends at
    ``floor(train_frac * n)``, validation at ``floor((train_frac+val_frac) * n)``.
    """
    n = len(items)
    if n < 5:
        raise TooFewItems(f"need at least 5 items to split, got {n}")
    train_end = math.floor(spec.train_frac * n)
    val_end = math.floor((spec.train_frac + spec.val_frac) * n)
    return items[:train_end], items[train_end:val_end], items[val_end:]


def chrono_split_bounds(n: int, spec: SplitSpec = SplitSpec()) -> tuple[int, int]:
    """Return the (train_end, val_end) index boundaries for a length-n split."""
    if n < 5:
        raise TooFewItems(f"need at least 5 items to split, got {n}")
    train_end = math.floor(spec.train_frac * n)
    val_end = math.floor((spec.train_frac + spec.val_frac) * n)
    return train_end, val_end


def kfold_split(items, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Contiguous k-fold splits: fold i is test, everything else is train.

    Fold sizes differ by at most one; the remainder goes to the earliest
    folds. Folds are contiguous in time (no shuffling) to avoid leakage.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = len(items)
    if n < k:
        raise TooFewItems(f"need at least {k} items for {k} folds, got {n}")
    all_indices = np.arange(n)
    folds = np.array_split(all_indices, k)
    splits = []
    for fold in folds:
        train = np.setdiff1d(all_indices, fold, assume_unique=True)
        splits.append((train, fold))
    return splits
