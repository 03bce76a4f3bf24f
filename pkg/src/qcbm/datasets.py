"""Target distributions: Bars-and-Stripes grids and a two-peak Gaussian.

BAS pixels map to qubits in row-major order, pixel (r, c) -> bit
r * cols + c, with bit 0 the most significant bit of the outcome
integer (the shared convention from ``bits``). The Gaussian mixture
lives on the integer reading of the register, [0, 2^n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import format_bitstring
from .simulator import MeasurementBatch


@dataclass(frozen=True)
class BasDataset:
    """All bar and stripe patterns of a grid, as basis-state integers."""

    rows: int
    cols: int
    patterns: frozenset[int]

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def probs(self) -> np.ndarray:
        """Uniform target distribution over the valid patterns."""
        target = np.zeros(1 << self.n)
        target[sorted(self.patterns)] = 1.0 / len(self.patterns)
        return target

    def pattern_bits(self) -> np.ndarray:
        """(|patterns|, n) bit array of the valid patterns, sorted."""
        out = np.zeros((len(self.patterns), self.n), dtype=np.uint8)
        for i, p in enumerate(sorted(self.patterns)):
            out[i] = [int(b) for b in format_bitstring(p, self.n)]
        return out


def bas_patterns(rows: int, cols: int) -> BasDataset:
    """Every grid whose pixels are constant along each row or each column."""
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and one column")
    patterns: set[int] = set()
    n = rows * cols
    for choice in range(1 << rows):  # horizontal stripes: row r all on/off
        value = 0
        for r in range(rows):
            if (choice >> r) & 1:
                for c in range(cols):
                    value |= 1 << (n - 1 - (r * cols + c))
        patterns.add(value)
    for choice in range(1 << cols):  # vertical bars: column c all on/off
        value = 0
        for c in range(cols):
            if (choice >> c) & 1:
                for r in range(rows):
                    value |= 1 << (n - 1 - (r * cols + c))
        patterns.add(value)
    assert len(patterns) == (1 << rows) + (1 << cols) - 2
    return BasDataset(rows=rows, cols=cols, patterns=frozenset(patterns))


def is_valid_pattern(outcome: int, dataset: BasDataset) -> bool:
    return outcome in dataset.patterns


def valid_rate(batch: MeasurementBatch, dataset: BasDataset) -> float:
    """Fraction of measured samples that are bars or stripes."""
    if batch.n != dataset.n:
        raise ValueError(f"batch has n={batch.n}, dataset needs n={dataset.n}")
    members = np.fromiter(
        (int(x) in dataset.patterns for x in batch.outcomes),
        dtype=bool,
        count=batch.batch_size,
    )
    return float(members.mean())


@dataclass(frozen=True)
class GaussianMixtureTarget:
    """Equal-weight two-Gaussian distribution over integer outcomes."""

    n: int
    means: tuple[float, float]
    width: float
    probs: np.ndarray = field(repr=False)

    @property
    def x_max(self) -> int:
        return 1 << self.n


def gaussian_mixture_target(n: int) -> GaussianMixtureTarget:
    """Two peaks at 2/7 and 5/7 of the range, width 1/8 of the range.

    Outcomes are the integer reading of the register, x in [0, 2^n);
    the probability vector is normalized over that discrete support.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    x_max = 1 << n
    width = x_max / 8.0
    means = (2.0 * x_max / 7.0, 5.0 * x_max / 7.0)
    x = np.arange(x_max, dtype=np.float64)
    raw = np.exp(-0.5 * ((x - means[0]) / width) ** 2) + np.exp(
        -0.5 * ((x - means[1]) / width) ** 2
    )
    return GaussianMixtureTarget(n=n, means=means, width=width, probs=raw / raw.sum())


def draw_training_set(target, size: int, rng_seed: int) -> np.ndarray:
    """size i.i.d. integer outcomes from a target's probability vector."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(rng_seed)
    cdf = np.cumsum(np.asarray(target.probs, dtype=np.float64))
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def write_samples(path, outcomes: np.ndarray, n: int) -> None:
    """Newline-delimited bit-string file, one sample per line."""
    with open(path, "w") as fh:
        for x in outcomes:
            fh.write(format_bitstring(int(x), n) + "\n")


def read_samples(path) -> tuple[np.ndarray, int]:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"no samples in {path}")
    n = len(lines[0])
    return np.array([int(s, 2) for s in lines], dtype=np.int64), n
