"""Dataset ingestion, chronological splitting, and synthetic generation.

CSV layout follows the long-horizon benchmark convention: first column
a timestamp, remaining columns numeric channels, one row per timestep.
Standardization statistics come from the train split only and the
metrics downstream live on that standardized scale.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .series import SeriesTensor, validate

__all__ = [
    "Dataset",
    "SynthSpec",
    "generate_synthetic",
    "load_csv",
    "split_standardize",
    "write_csv",
]

STD_FLOOR = 1e-8


def load_csv(path) -> SeriesTensor:
    """Read a benchmark-style CSV into a channels x timesteps tensor."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 2:
            raise ValueError(f"{path}: need a timestamp column plus channels")
        names = [h.strip() for h in header[1:]]
        stamps: list[str] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            stamps.append(row[0].strip())
            values = []
            for col, cell in enumerate(row[1:], start=2):
                try:
                    v = float(cell)
                except ValueError:
                    v = np.nan
                if not np.isfinite(v):
                    raise ValueError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, "
                        f"column {col}"
                    )
                values.append(v)
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    _check_monotonic(stamps, path)
    series = SeriesTensor(np.asarray(rows, dtype=np.float64).T, names)
    validate(series)
    return series


def _check_monotonic(stamps: list[str], path) -> None:
    try:
        keys: list = [float(s) for s in stamps]
    except ValueError:
        keys = stamps  # ISO-style timestamps sort lexicographically
    if any(b < a for a, b in zip(keys, keys[1:])):
        warnings.warn(f"{path}: timestamps are not monotonically increasing")


def write_csv(path, series: SeriesTensor, timestamps=None) -> None:
    """Write a series in the same layout; integer index when no timestamps."""
    path = Path(path)
    names = series.channel_names or [f"ch{i}" for i in range(series.channels)]
    if timestamps is None:
        timestamps = range(series.length)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *names])
        for t, stamp in zip(range(series.length), timestamps):
            writer.writerow([stamp, *(repr(v) for v in series.data[:, t])])


@dataclass
class Dataset:
    """A standardized series with chronological split boundaries."""

    raw: SeriesTensor
    standardized: SeriesTensor
    train_end: int
    val_end: int
    mean: np.ndarray  # per-channel, train split only
    std: np.ndarray

    def segment(self, name: str) -> SeriesTensor:
        spans = {
            "train": (0, self.train_end),
            "val": (self.train_end, self.val_end),
            "test": (self.val_end, self.raw.length),
        }
        lo, hi = spans[name]
        return SeriesTensor(
            self.standardized.data[:, lo:hi].copy(), self.raw.channel_names
        )

    def destandardize(self, data: np.ndarray) -> np.ndarray:
        return data * self.std[:, None] + self.mean[:, None]


def split_standardize(
    series: SeriesTensor,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    min_segment: int | None = None,
) -> Dataset:
    """Chronological split and per-channel z-scoring with train statistics."""
    validate(series)
    if min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be positive and sum to 1, got {ratios}")
    n = series.length
    train_end = int(n * ratios[0])
    val_end = train_end + int(n * ratios[1])
    if min_segment is not None:
        for name, size in (
            ("train", train_end),
            ("val", val_end - train_end),
            ("test", n - val_end),
        ):
            if size < min_segment:
                raise ValueError(
                    f"{name} split has {size} steps, below the required "
                    f"{min_segment} (lookback + horizon)"
                )
    train = series.data[:, :train_end]
    mean = train.mean(axis=1)
    std = np.maximum(train.std(axis=1), STD_FLOOR)
    standardized = (series.data - mean[:, None]) / std[:, None]
    return Dataset(
        raw=series,
        standardized=SeriesTensor(standardized, series.channel_names),
        train_end=train_end,
        val_end=val_end,
        mean=mean,
        std=std,
    )


@dataclass
class SynthSpec:
    """Seeded generator of a drifting, amplitude-modulated tone per channel:
    x_c(t) = slope_c * t + A(t) * sin(2 pi t / period + drift * t) + noise."""

    length: int = 4000
    channels: int = 2
    slopes: tuple[float, ...] | float = 0.0
    period: float = 24.0
    envelope: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    drift: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length < 1 or self.channels < 1:
            raise ValueError("length and channels must be positive")
        if self.period < 2:
            raise ValueError("period must be at least 2 samples")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if not self.envelope:
            raise ValueError("envelope needs at least one breakpoint")
        times = [t for t, _ in self.envelope]
        if sorted(times) != times:
            raise ValueError("envelope breakpoints must be time-ordered")

    def slope_vector(self) -> np.ndarray:
        if np.isscalar(self.slopes):
            return np.full(self.channels, float(self.slopes))
        slopes = np.asarray(self.slopes, dtype=np.float64)
        if slopes.shape != (self.channels,):
            raise ValueError(
                f"need one slope per channel ({self.channels}), got {slopes.shape}"
            )
        return slopes


def generate_synthetic(spec: SynthSpec) -> SeriesTensor:
    """Deterministic synthetic non-stationary series for a given spec."""
    t = np.arange(spec.length, dtype=np.float64)
    bx = np.array([b[0] for b in spec.envelope])
    by = np.array([b[1] for b in spec.envelope])
    env = np.interp(t, bx, by)
    tone = env * np.sin(2.0 * np.pi * t / spec.period + spec.drift * t)
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    data = spec.slope_vector()[:, None] * t[None, :] + tone[None, :]
    if spec.noise_std > 0:
        data = data + rng.normal(0.0, spec.noise_std, size=data.shape)
    names = [f"ch{i}" for i in range(spec.channels)]
    return SeriesTensor(data, names)
