"""Unbiased gradients of the MMD loss via the parameter-shift rule.

Every rotation here is generated by a Pauli (sigma^2 = 1), so shifting
one angle by +-pi/2 gives the output-probability derivative exactly:

    d p(x) / d theta_k = (p[theta + (pi/2) e_k](x) - p[theta - (pi/2) e_k](x)) / 2

Chaining this through the quadratic MMD loss yields, per parameter,

    grad_k = (p_plus - p_minus) @ K @ (p_theta - pi)

which is evaluated either from exact simulated distributions or from
measured sample histograms (the sampled estimator is unbiased). One
gradient costs 2 * parameter_count circuit evaluations plus one for
p_theta; the p_theta batch is drawn once and shared across parameters.

A central finite-difference oracle is kept here as a first-class test
utility; it is never the production path.
"""

from __future__ import annotations

import numpy as np

from .architecture import CircuitSpec
from .loss import MmdLoss
from .simulator import circuit_probabilities_batch

SHIFT = 0.5 * np.pi


def _shifted_batch(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    """Rows: [theta, theta + shift*e_0 .. e_P, theta - shift*e_0 .. e_P]."""
    count = spec.parameter_count
    thetas = np.tile(theta, (2 * count + 1, 1))
    idx = np.arange(count)
    thetas[1 + idx, idx] += SHIFT
    thetas[1 + count + idx, idx] -= SHIFT
    return thetas


def shifted_probabilities(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    """(2P+1, 2^n) output distributions of theta and all +-pi/2 shifts.

    Row 0 is p_theta; rows 1..P are the +shifts, rows P+1..2P the
    -shifts, in flat parameter order. Both gradient estimators consume
    this layout, and studies that redraw samples at fixed theta reuse it
    to avoid re-simulating.
    """
    theta = np.asarray(theta, dtype=np.float64)
    return circuit_probabilities_batch(spec, _shifted_batch(spec, theta))


def sampled_gradient_from_probabilities(
    probs: np.ndarray, loss: MmdLoss, batch_size: int, rng: np.random.Generator
) -> np.ndarray:
    """One sampled-gradient draw given precomputed shifted distributions."""
    clipped = np.maximum(probs, 0.0)
    clipped /= clipped.sum(axis=1, keepdims=True)
    histograms = rng.multinomial(batch_size, clipped) / batch_size
    count = (probs.shape[0] - 1) // 2
    weights = loss.kernel_mean_difference(histograms[0])
    return (histograms[1 : count + 1] - histograms[count + 1 :]) @ weights


def shift_rule_probability(
    spec: CircuitSpec, theta: np.ndarray, flat_index: int
) -> np.ndarray:
    """Exact d p(x) / d theta_k for every basis outcome x."""
    theta = np.asarray(theta, dtype=np.float64)
    if not 0 <= flat_index < spec.parameter_count:
        raise IndexError(f"parameter index {flat_index} out of range")
    shifted = np.tile(theta, (2, 1))
    shifted[0, flat_index] += SHIFT
    shifted[1, flat_index] -= SHIFT
    plus, minus = circuit_probabilities_batch(spec, shifted)
    return 0.5 * (plus - minus)


def mmd_gradient_exact(
    spec: CircuitSpec, theta: np.ndarray, loss: MmdLoss
) -> np.ndarray:
    """Gradient from exact output distributions (the N = infinity limit)."""
    probs = shifted_probabilities(spec, theta)
    count = spec.parameter_count
    weights = loss.kernel_mean_difference(probs[0])
    return (probs[1 : count + 1] - probs[count + 1 :]) @ weights


def mmd_gradient_sampled(
    spec: CircuitSpec,
    theta: np.ndarray,
    loss: MmdLoss,
    batch_size: int,
    rng_seed,
) -> np.ndarray:
    """Unbiased sampled gradient with batch_size measurements per circuit.

    Expectations against the target use the full training histogram held
    by ``loss``; the shifted and unshifted model expectations use fresh
    measurement batches. Histograms of the batches enter the same
    quadratic form as the exact path, which equals the V-statistic
    double sum over the raw samples.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    theta = np.asarray(theta, dtype=np.float64)
    rng = np.random.default_rng(rng_seed)
    probs = circuit_probabilities_batch(spec, _shifted_batch(spec, theta))
    # guard against round-off in the kernel output before drawing
    probs = np.maximum(probs, 0.0)
    probs /= probs.sum(axis=1, keepdims=True)
    counts = rng.multinomial(batch_size, probs)
    histograms = counts / batch_size
    count = spec.parameter_count
    weights = loss.kernel_mean_difference(histograms[0])
    return (histograms[1 : count + 1] - histograms[count + 1 :]) @ weights


def gradient_measurement_cost(spec: CircuitSpec, batch_size: int) -> int:
    """Measurements consumed by one sampled gradient evaluation."""
    return spec.parameter_count * batch_size * 2 + batch_size


def finite_difference_gradient(fn, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function (test oracle)."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    for k in range(len(theta)):
        up = theta.copy()
        up[k] += step
        down = theta.copy()
        down[k] -= step
        grad[k] = (fn(up) - fn(down)) / (2.0 * step)
    return grad


def finite_difference_probability(
    spec: CircuitSpec, theta: np.ndarray, flat_index: int, step: float = 1e-5
) -> np.ndarray:
    """Central-difference d p(x) / d theta_k (test oracle for the shift rule)."""
    up = np.asarray(theta, dtype=np.float64).copy()
    up[flat_index] += step
    down = np.asarray(theta, dtype=np.float64).copy()
    down[flat_index] -= step
    pu, pd = circuit_probabilities_batch(spec, np.stack([up, down]))
    return (pu - pd) / (2.0 * step)


# ---------------------------------------------------------------------------
# generalization: gradients of expectations of r-argument functions


def vstat_gradient(
    expectation,
    offsets: np.ndarray,
    flat_index: int,
    symmetric: bool = True,
) -> float:
    """Parameter-shift gradient of E_f(offsets) for a degree-r expectation.

    ``expectation`` maps an (r, parameter_count) array of angle offsets to
    the scalar E[f(X_1..X_r)] where X_i is drawn from the circuit shifted
    by row i. For symmetric f (a V-statistic) only the first argument
    needs shifting, scaled by r/2; otherwise all 2r shifted terms are
    summed with weight 1/2.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    if offsets.ndim != 2:
        raise ValueError("offsets must be an (r, parameter_count) array")
    degree = offsets.shape[0]
    if degree < 1:
        raise ValueError("degree must be >= 1")

    if symmetric:
        plus = offsets.copy()
        plus[0, flat_index] += SHIFT
        minus = offsets.copy()
        minus[0, flat_index] -= SHIFT
        return 0.5 * degree * (expectation(plus) - expectation(minus))

    total = 0.0
    for arg in range(degree):
        for sign in (1.0, -1.0):
            shifted = offsets.copy()
            shifted[arg, flat_index] += sign * SHIFT
            total += sign * expectation(shifted)
    return 0.5 * total


def kernel_expectation_evaluator(spec: CircuitSpec, theta: np.ndarray, gram: np.ndarray):
    """E_K(offsets) = p[theta+g1]^T K p[theta+g2], a degree-2 V-statistic."""
    theta = np.asarray(theta, dtype=np.float64)

    def expectation(offsets: np.ndarray) -> float:
        pair = circuit_probabilities_batch(spec, theta[None, :] + offsets)
        return float(pair[0] @ gram @ pair[1])

    return expectation
