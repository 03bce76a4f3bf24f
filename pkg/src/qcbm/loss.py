"""Mixture-of-Gaussians kernel and the squared MMD two-sample loss.

The kernel compares basis outcomes either as bit strings (squared L2 =
Hamming distance) or as plain integers (squared difference). Because
the outcome space is small (2^n <= 1024 here), the full Gram matrix is
precomputed once and every loss/gradient evaluation is a quadratic form
on probability vectors - exact ones from simulation, or normalized
histograms of measured batches. The histogram quadratic form equals the
naive double sum over raw samples (V-statistic, coincident terms
included), which is what a hardware estimate would produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bits import bit_matrix
from .simulator import MeasurementBatch

DISTANCE_BITSTRING = "bitstring"
DISTANCE_INTEGER = "integer"


@dataclass(frozen=True)
class KernelSpec:
    """Bandwidths of the Gaussian mixture and how |x-y| is measured."""

    bandwidths: tuple[float, ...]
    distance_mode: str = DISTANCE_BITSTRING

    def __post_init__(self):
        if len(self.bandwidths) < 1:
            raise ValueError("need at least one bandwidth")
        if any(s <= 0 for s in self.bandwidths):
            raise ValueError(f"bandwidths must be positive: {self.bandwidths}")
        if self.distance_mode not in (DISTANCE_BITSTRING, DISTANCE_INTEGER):
            raise ValueError(f"unknown distance mode {self.distance_mode!r}")


def _squared_distances(spec: KernelSpec, n: int) -> np.ndarray:
    outcomes = np.arange(1 << n)
    if spec.distance_mode == DISTANCE_INTEGER:
        diff = outcomes[:, None] - outcomes[None, :]
        return (diff * diff).astype(np.float64)
    bits = bit_matrix(n).astype(np.float64)
    # Hamming distance == squared L2 distance between 0/1 vectors
    ones = bits.sum(axis=1)
    return ones[:, None] + ones[None, :] - 2.0 * (bits @ bits.T)


@lru_cache(maxsize=8)
def kernel_matrix(spec: KernelSpec, n: int) -> np.ndarray:
    """Full (2^n, 2^n) Gram matrix K(x, y) = mean_i exp(-|x-y|^2 / (2 s_i))."""
    sq = _squared_distances(spec, n)
    gram = np.zeros_like(sq)
    for bandwidth in spec.bandwidths:
        gram += np.exp(-sq / (2.0 * bandwidth))
    gram /= len(spec.bandwidths)
    gram.setflags(write=False)
    return gram


def kernel_value(x: int, y: int, spec: KernelSpec, n: int) -> float:
    """Single kernel entry without building the Gram matrix."""
    if spec.distance_mode == DISTANCE_INTEGER:
        sq = float(x - y) ** 2
    else:
        sq = float(bin(x ^ y).count("1"))
    return float(np.mean([np.exp(-sq / (2.0 * s)) for s in spec.bandwidths]))


def as_probability_vector(view, n: int) -> np.ndarray:
    """Normalize a distribution view: probability vector or measured batch."""
    if isinstance(view, MeasurementBatch):
        return histogram(view.outcomes, n)
    probs = np.asarray(view, dtype=np.float64)
    if probs.shape != (1 << n,):
        raise ValueError(f"expected {1 << n} outcomes, got shape {probs.shape}")
    if np.any(probs < -1e-12):
        raise ValueError("negative probabilities")
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"distribution sums to {total}, not 1")
    return probs


def histogram(outcomes: np.ndarray, n: int) -> np.ndarray:
    """Empirical distribution of integer outcomes over the 2^n basis."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    if len(outcomes) == 0:
        raise ValueError("empty sample batch")
    counts = np.bincount(outcomes, minlength=1 << n)
    return counts / counts.sum()


def mmd_loss(p, q, gram: np.ndarray) -> float:
    """Squared MMD between two distribution views under a Gram matrix."""
    n = int(np.log2(gram.shape[0]))
    pv = as_probability_vector(p, n)
    qv = as_probability_vector(q, n)
    diff = pv - qv
    return float(diff @ gram @ diff)


class MmdLoss:
    """Squared MMD against a fixed target, with the target terms cached.

    The loss is p^T K p - 2 p^T K pi + pi^T K pi; K pi and the constant
    pi^T K pi are computed once. The constant does not affect gradients
    but is kept in reported values.
    """

    def __init__(self, gram: np.ndarray, target_probs: np.ndarray):
        n = int(np.log2(gram.shape[0]))
        self.gram = gram
        self.target_probs = as_probability_vector(target_probs, n)
        self.gram_target = gram @ self.target_probs
        self.target_constant = float(self.target_probs @ self.gram_target)
        self.n = n

    def value(self, view) -> float:
        probs = as_probability_vector(view, self.n)
        return float(
            probs @ (self.gram @ probs) - 2.0 * (probs @ self.gram_target)
            + self.target_constant
        )

    def kernel_mean_difference(self, view) -> np.ndarray:
        """K @ (p - pi): the weight vector shared by all gradient components."""
        probs = as_probability_vector(view, self.n)
        return self.gram @ probs - self.gram_target
