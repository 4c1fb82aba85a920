"""Channel-major series containers and sliding-window extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SeriesTensor",
    "WindowPair",
    "SeriesValidationError",
    "validate",
    "make_windows",
]


class SeriesValidationError(ValueError):
    """A series violates the shape or finiteness contract."""


@dataclass
class SeriesTensor:
    """Real-valued multichannel series, shape channels x timesteps."""

    data: np.ndarray
    channel_names: list[str] | None = None

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=np.float64))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class WindowPair:
    """One training sample: look-back window x [C x L] and target y [C x T]."""

    x: SeriesTensor
    y: SeriesTensor

    def __post_init__(self):
        if self.x.channels != self.y.channels:
            raise SeriesValidationError(
                f"window channel mismatch: x has {self.x.channels}, y has {self.y.channels}"
            )


def validate(series: SeriesTensor) -> None:
    """Check the SeriesTensor invariants; raise with offending coordinates."""
    data = series.data
    if data.size == 0 or data.shape[0] < 1:
        raise SeriesValidationError("C >= 1 violated: series has no channels")
    if data.shape[1] < 1:
        raise SeriesValidationError("N >= 1 violated: series has no timesteps")
    bad = ~np.isfinite(data)
    if bad.any():
        coords = list(zip(*np.nonzero(bad)))
        listed = ", ".join(f"({int(c)}, {int(t)})" for c, t in coords[:10])
        more = "" if len(coords) <= 10 else f" and {len(coords) - 10} more"
        raise SeriesValidationError(
            f"non-finite entries at (channel, index): {listed}{more}"
        )


def make_windows(
    series: SeriesTensor, lookback: int, horizon: int, stride: int = 1
) -> list[WindowPair]:
    """Cut a long series into (look-back, target) pairs at the given stride.

    Windows are materialized copies starting at offsets 0, stride, 2*stride, ...
    with offset + lookback + horizon <= N.
    """
    if lookback < 1 or horizon < 1 or stride < 1:
        raise ValueError("lookback, horizon and stride must be positive")
    n = series.length
    need = lookback + horizon
    if n < need:
        raise SeriesValidationError(
            f"insufficient length: series has N={n} but lookback L={lookback} "
            f"plus horizon T={horizon} requires at least {need}"
        )
    names = series.channel_names
    pairs = []
    for off in range(0, n - need + 1, stride):
        x = SeriesTensor(series.data[:, off : off + lookback].copy(), names)
        y = SeriesTensor(series.data[:, off + lookback : off + need].copy(), names)
        pairs.append(WindowPair(x, y))
    return pairs
