"""CSV ingestion, chronological splitting and sliding-window pairs."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CsvParseError, InsufficientDataError, InvalidInputError

__all__ = [
    "SeriesTable",
    "SplitDataset",
    "load_csv",
    "save_csv",
    "split",
    "sliding_windows",
    "window_count",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesTable:
    """Rectangular multichannel series; timestamps (if any) kept verbatim."""

    channel_names: list[str]
    values: np.ndarray                    # (length, n_channels)
    timestamps: list[str] | None = None

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def slice(self, start: int, stop: int) -> "SeriesTable":
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return SeriesTable(self.channel_names, self.values[start:stop], ts)


@dataclass(frozen=True)
class SplitDataset:
    """Chronological train/val/test slices.

    ``val`` and ``test`` are prepended with up to ``lookback`` points of
    preceding history so every evaluation window of the full length exists;
    ``core_start`` per split says how many of its rows are borrowed history.
    """

    train: SeriesTable
    val: SeriesTable
    test: SeriesTable
    ratios: tuple[float, float, float]
    lookback: int
    boundaries: tuple[int, int]           # (train_end, val_end) in source rows
    core_starts: tuple[int, int, int]     # rows of borrowed history per split


def load_csv(path, has_timestamp: bool = False, delimiter: str = ",") -> SeriesTable:
    """Parse a headered CSV of finite decimal values.

    With ``has_timestamp`` the first column is carried through verbatim and
    excluded from the numeric channels.  Ragged rows, empty files and cells
    that do not parse as finite numbers raise :class:`CsvParseError` naming
    the offending location.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: file is empty") from None
        if has_timestamp and len(header) < 2:
            raise CsvParseError(f"{path}: need at least one value column beside the timestamp")
        if not has_timestamp and len(header) < 1:
            raise CsvParseError(f"{path}: header has no columns")
        names = header[1:] if has_timestamp else header
        timestamps = [] if has_timestamp else None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(
                    f"{path}: expected {len(header)} fields, found {len(row)}", row=line_no
                )
            if has_timestamp:
                timestamps.append(row[0])
                cells = row[1:]
            else:
                cells = row
            parsed = []
            for name, cell in zip(names, cells):
                try:
                    value = float(cell)
                except ValueError:
                    raise CsvParseError(
                        f"{path}: cannot parse {cell!r} as a number", row=line_no, column=name
                    ) from None
                if not math.isfinite(value):
                    raise CsvParseError(
                        f"{path}: non-finite value {cell!r}", row=line_no, column=name
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    return SeriesTable(
        channel_names=list(names),
        values=np.asarray(rows, dtype=np.float64),
        timestamps=timestamps,
    )


def save_csv(table: SeriesTable, path, delimiter: str = ",") -> None:
    """Inverse of :func:`load_csv`; values written as shortest round-trip reprs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        if table.timestamps is not None:
            writer.writerow(["timestamp"] + table.channel_names)
            for ts, row in zip(table.timestamps, table.values):
                writer.writerow([ts] + [repr(float(x)) for x in row])
        else:
            writer.writerow(table.channel_names)
            for row in table.values:
                writer.writerow([repr(float(x)) for x in row])


def split(
    table: SeriesTable,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    lookback: int = 336,
) -> SplitDataset:
    """Chronological split at floor boundaries with look-back extension.

    For length 1000 at the default ratios the boundaries sit at rows 700 and
    800; with lookback 336 the val slice covers rows 364..799 inclusive.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise InvalidInputError(f"ratios must be three positive numbers, got {ratios}")
    if not math.isclose(sum(ratios), 1.0, rel_tol=0, abs_tol=1e-9):
        raise InvalidInputError(f"ratios must sum to 1, got {ratios} (sum {sum(ratios)})")
    if lookback < 0:
        raise InvalidInputError(f"lookback must be >= 0, got {lookback}")
    n = table.length
    # floor boundaries; the 1e-9 nudge keeps exact products like 1000*0.8
    # from landing one row short of the mathematical floor
    train_end = int(n * ratios[0] + 1e-9)
    val_end = int(n * (ratios[0] + ratios[1]) + 1e-9)
    minimum = lookback + 3  # lookback plus one row in each split core
    if train_end <= lookback or val_end <= train_end or n <= val_end:
        raise InsufficientDataError(
            f"series of length {n} too short for split {ratios} with lookback {lookback}; "
            f"need at least ~{math.ceil(minimum / min(ratios))} rows"
        )
    val_start = max(0, train_end - lookback)
    test_start = max(0, val_end - lookback)
    return SplitDataset(
        train=table.slice(0, train_end),
        val=table.slice(val_start, val_end),
        test=table.slice(test_start, n),
        ratios=tuple(ratios),
        lookback=lookback,
        boundaries=(train_end, val_end),
        core_starts=(0, train_end - val_start, val_end - test_start),
    )


def window_count(length: int, window: int, target: int, stride: int = 1) -> int:
    if length < window + target:
        return 0
    return (length - window - target) // stride + 1


def sliding_windows(
    slice_values,
    window: int,
    target: int,
    stride: int = 1,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield ``(channel, input, target)`` pairs; target follows the window.

    A slice shorter than ``window + target`` yields nothing (logged, not an
    error).  Windows never span past the end of the slice.
    """
    X = np.asarray(slice_values, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if stride < 1:
        raise InvalidInputError(f"stride must be >= 1, got {stride}")
    n = X.shape[0]
    count = window_count(n, window, target, stride)
    if count == 0:
        logger.info("slice of length %d yields no (%d, %d) windows", n, window, target)
        return
    for c in range(X.shape[1]):
        for j in range(count):
            start = j * stride
            yield c, X[start:start + window, c], X[start + window:start + window + target, c]


def windows_matrix(slice_values, window: int, target: int, stride: int = 1):
    """Stacked inputs/targets for all channels: (m, window), (m, target), channel ids."""
    xs, ys, cs = [], [], []
    for c, x, y in sliding_windows(slice_values, window, target, stride):
        xs.append(x)
        ys.append(y)
        cs.append(c)
    if not xs:
        return (
            np.empty((0, window)),
            np.empty((0, target)),
            np.empty(0, dtype=int),
        )
    return np.asarray(xs), np.asarray(ys), np.asarray(cs, dtype=int)
