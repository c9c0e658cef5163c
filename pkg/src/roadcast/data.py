"""Dataset representation, CSV formats, scaling, and sliding-window batching.

Conventions: speed 0.0 (or an empty CSV cell) is the missing sentinel and is
masked out of every loss and metric; adjacency weights live in [0, 1] with an
implied self-loop of weight 1 on the diagonal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterator

import numpy as np

SIGNALS_FILE = "signals.csv"
ADJACENCY_FILE = "adjacency.csv"
STEPS_PER_DAY = 288  # 5-minute granularity


class DataError(ValueError):
    """Raised when an on-disk artifact violates the dataset contracts."""


@dataclass
class TrafficDataset:
    """Speeds for M sensors over K evenly spaced timesteps plus adjacency."""

    sensor_ids: list[str]
    timestamps: np.ndarray  # datetime64[s], strictly increasing, constant step
    values: np.ndarray  # (M, K) mph; 0.0 where missing
    missing_mask: np.ndarray  # (M, K) bool, True = observed
    adjacency: np.ndarray  # (M, M) weights in [0, 1], diagonal 1

    def __post_init__(self):
        m, k = len(self.sensor_ids), len(self.timestamps)
        if len(set(self.sensor_ids)) != m:
            raise DataError("duplicate sensor IDs")
        if self.values.shape != (m, k):
            raise DataError(f"values shape {self.values.shape} != ({m}, {k})")
        if self.missing_mask.shape != (m, k):
            raise DataError("missing_mask shape mismatch")
        if self.adjacency.shape != (m, m):
            raise DataError(f"adjacency shape {self.adjacency.shape} != ({m}, {m})")
        if k >= 2:
            deltas = np.diff(self.timestamps.astype("datetime64[s]").astype(np.int64))
            if np.any(deltas <= 0):
                raise DataError("timestamps must be strictly increasing")
            if np.any(deltas != deltas[0]):
                raise DataError("timestamps must have a constant step")
        if np.any(self.adjacency < 0) or np.any(self.adjacency > 1):
            raise DataError("adjacency weights must lie in [0, 1]")
        if not np.allclose(np.diag(self.adjacency), 1.0):
            raise DataError("adjacency diagonal must be 1 (self-loops)")
        observed = self.values[self.missing_mask]
        if observed.size and not np.all(np.isfinite(observed)):
            raise DataError("observed values must be finite")

    @property
    def num_sensors(self) -> int:
        return len(self.sensor_ids)

    @property
    def num_steps(self) -> int:
        return len(self.timestamps)

    @property
    def step_seconds(self) -> int:
        if self.num_steps < 2:
            return 300
        d = self.timestamps.astype("datetime64[s]").astype(np.int64)
        return int(d[1] - d[0])

    def index_of(self, sensor_id: str) -> int:
        try:
            return self.sensor_ids.index(sensor_id)
        except ValueError:
            raise DataError(f"unknown sensor ID {sensor_id!r}") from None


def _parse_timestamp(text: str, row: int) -> np.datetime64:
    try:
        return np.datetime64(datetime.fromisoformat(text.strip()))
    except ValueError:
        raise DataError(f"signals row {row}: bad timestamp {text!r}") from None


def load_dataset(signals_path: str | Path, adjacency_path: str | Path) -> TrafficDataset:
    """Read signals.csv and adjacency.csv into a validated dataset.

    Empty cells and exact 0.0 readings are masked as missing.
    """
    signals_path, adjacency_path = Path(signals_path), Path(adjacency_path)
    with open(signals_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["timestamp"]:
        raise DataError(f"{signals_path}: header must start with 'timestamp'")
    sensor_ids = [c.strip() for c in rows[0][1:]]
    if not sensor_ids:
        raise DataError(f"{signals_path}: no sensor columns")
    if len(set(sensor_ids)) != len(sensor_ids):
        raise DataError(f"{signals_path}: duplicate sensor IDs in header")
    m, k = len(sensor_ids), len(rows) - 1
    values = np.zeros((m, k))
    mask = np.zeros((m, k), dtype=bool)
    timestamps = np.empty(k, dtype="datetime64[s]")
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != m + 1:
            raise DataError(f"{signals_path} row {i}: {len(row)} cells, expected {m + 1}")
        timestamps[i - 1] = _parse_timestamp(row[0], i)
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{signals_path} row {i}, column {sensor_ids[j]!r}: bad value {cell!r}"
                ) from None
            if v != 0.0:
                values[j, i - 1] = v
                mask[j, i - 1] = True

    index = {s: i for i, s in enumerate(sensor_ids)}
    adjacency = np.zeros((m, m))
    np.fill_diagonal(adjacency, 1.0)
    with open(adjacency_path, newline="") as fh:
        arows = list(csv.reader(fh))
    if not arows or [c.strip() for c in arows[0]] != ["src", "dst", "weight"]:
        raise DataError(f"{adjacency_path}: header must be 'src,dst,weight'")
    for i, row in enumerate(arows[1:], start=1):
        if len(row) != 3:
            raise DataError(f"{adjacency_path} row {i}: expected 3 cells")
        src, dst, wtext = (c.strip() for c in row)
        for sid in (src, dst):
            if sid not in index:
                raise DataError(f"{adjacency_path} row {i}: unknown sensor ID {sid!r}")
        try:
            w = float(wtext)
        except ValueError:
            raise DataError(f"{adjacency_path} row {i}: bad weight {wtext!r}") from None
        if not 0.0 <= w <= 1.0:
            raise DataError(f"{adjacency_path} row {i}: weight {w} out of range [0, 1]")
        if src == dst:
            if w != 1.0:
                raise DataError(
                    f"{adjacency_path} row {i}: self-loop weight must be 1, got {w}"
                )
            continue
        adjacency[index[src], index[dst]] = w

    return TrafficDataset(sensor_ids, timestamps, values, mask, adjacency)


def save_dataset(ds: TrafficDataset, directory: str | Path) -> None:
    """Write signals.csv and adjacency.csv; lossless under :func:`load_dataset`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / SIGNALS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp"] + list(ds.sensor_ids))
        iso = ds.timestamps.astype("datetime64[s]").astype(object)
        for j in range(ds.num_steps):
            row = [iso[j].isoformat()]
            for i in range(ds.num_sensors):
                row.append(repr(float(ds.values[i, j])) if ds.missing_mask[i, j] else "")
            writer.writerow(row)
    with open(directory / ADJACENCY_FILE, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        for i in range(ds.num_sensors):
            for j in range(ds.num_sensors):
                if i != j and ds.adjacency[i, j] != 0.0:
                    writer.writerow([ds.sensor_ids[i], ds.sensor_ids[j], repr(float(ds.adjacency[i, j]))])


def load_dataset_dir(directory: str | Path) -> TrafficDataset:
    directory = Path(directory)
    return load_dataset(directory / SIGNALS_FILE, directory / ADJACENCY_FILE)


# ---------------------------------------------------------------------------
# views over a split cell (constructed by roadcast.split)


@dataclass(frozen=True)
class DatasetView:
    """A rectangular slice of a dataset: some sensors over a time interval.

    ``time_start`` indexes the parent dataset, so window starts reported by
    :func:`window_iter` are global timestep indices.
    """

    sensor_ids: tuple[str, ...]
    sensor_indices: tuple[int, ...]
    time_start: int
    time_stop: int
    values: np.ndarray  # (n, k) slice copy
    mask: np.ndarray
    adjacency: np.ndarray  # induced sub-adjacency
    labels: frozenset[str] = field(default_factory=frozenset)

    @property
    def num_sensors(self) -> int:
        return len(self.sensor_ids)

    @property
    def num_steps(self) -> int:
        return self.time_stop - self.time_start


# ---------------------------------------------------------------------------
# standard scaling


@dataclass(frozen=True)
class Scaler:
    mean: float
    std: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def invert(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


def fit_scaler(values: np.ndarray, mask: np.ndarray | None = None) -> Scaler:
    """Global mean/std over observed entries only (population convention)."""
    observed = values[mask] if mask is not None else np.asarray(values).ravel()
    if observed.size < 2:
        raise DataError("scaler needs at least two observed entries")
    mean = float(observed.mean())
    std = float(observed.std())
    if std <= 0.0:
        raise DataError("scaler rejected: zero variance in training entries")
    return Scaler(mean, std)


# ---------------------------------------------------------------------------
# sliding windows


@dataclass
class WindowBatch:
    """Model-ready windows: inputs are (B, N, L, C) with the raw-signal channel
    first and the periodic-residual channel second when decoupling is on."""

    inputs: np.ndarray  # (B, N, L, C)
    targets: np.ndarray  # (B, N, F) in the model's training domain
    target_mask: np.ndarray  # (B, N, F) bool
    window_starts: np.ndarray  # (B,) global timestep index of each window
    truth_mph: np.ndarray  # (B, N, F) raw speeds for metric computation


def window_count(view_steps: int, length: int, horizon: int) -> int:
    return view_steps - (length + horizon) + 1


def window_iter(
    view: DatasetView,
    length: int = 12,
    horizon: int = 12,
    batch_size: int = 32,
    shuffle_seed: int | None = None,
    *,
    raw_scaler: Scaler | None = None,
    periodic=None,
    residual_scaler: Scaler | None = None,
) -> Iterator[WindowBatch]:
    """Yield batches of sliding windows lying entirely inside ``view``.

    Without scalers the inputs/targets are raw mph (missing entries 0).  With
    ``raw_scaler`` the raw channel is mean-filled then scaled.  With a fitted
    ``periodic`` model (plus ``residual_scaler``) a second channel carries the
    scaled periodic residual and targets move to that domain.
    """
    n_windows = window_count(view.num_steps, length, horizon)
    if n_windows <= 0:
        raise DataError(
            f"partition of {view.num_steps} steps too short for "
            f"{length}+{horizon}-step windows"
        )
    if (periodic is None) != (residual_scaler is None):
        raise DataError("periodic model and residual scaler must be given together")

    starts = np.arange(n_windows)
    if shuffle_seed is not None:
        starts = np.random.default_rng(shuffle_seed).permutation(starts)

    raw = view.values
    if raw_scaler is not None:
        filled = np.where(view.mask, raw, raw_scaler.mean)
        raw_channel = raw_scaler.apply(filled)
    else:
        filled = raw
        raw_channel = raw

    if periodic is not None:
        ks = np.arange(view.time_start, view.time_stop)
        periodic_part = periodic.series(view.sensor_ids, ks)  # (n, k)
        residual = filled - periodic_part
        residual_channel = residual_scaler.apply(residual)

    for lo in range(0, n_windows, batch_size):
        chunk = starts[lo : lo + batch_size]
        b = len(chunk)
        n = view.num_sensors
        c = 1 if periodic is None else 2
        inputs = np.empty((b, n, length, c))
        targets = np.empty((b, n, horizon))
        target_mask = np.empty((b, n, horizon), dtype=bool)
        truth = np.empty((b, n, horizon))
        for bi, s in enumerate(chunk):
            inputs[bi, :, :, 0] = raw_channel[:, s : s + length]
            tgt_slice = slice(s + length, s + length + horizon)
            truth[bi] = raw[:, tgt_slice]
            target_mask[bi] = view.mask[:, tgt_slice] & (raw[:, tgt_slice] != 0.0)
            if periodic is None:
                targets[bi] = raw_channel[:, tgt_slice]
            else:
                inputs[bi, :, :, 1] = residual_channel[:, s : s + length]
                targets[bi] = residual_channel[:, tgt_slice]
        yield WindowBatch(
            inputs=inputs,
            targets=targets,
            target_mask=target_mask,
            window_starts=view.time_start + np.asarray(chunk),
            truth_mph=truth,
        )
