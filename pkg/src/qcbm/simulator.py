"""Dense state-vector simulation of the layered circuit.

Two execution paths produce identical results:

* a gate-by-gate reference path (``apply_gate`` / ``run_circuit``) that
  keeps full amplitudes and is used for oracles and small studies;
* a batched probabilities kernel (``circuit_probabilities_batch``) that
  evaluates many parameter vectors of one layout at once. Gradient and
  optimizer loops live on this path; a numba-compiled version is used
  when available because a single gradient evaluation needs
  2 * parameter_count + 1 circuit runs.

Single-qubit gates act in place over the amplitude array with stride
arithmetic; the CNOT entangler is a fixed permutation of basis states
and is applied as one gather.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .architecture import (
    SLOT_X,
    CircuitSpec,
    angle_slot_table,
    layer_slots,
)
from .bits import format_bitstring

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

GATE_RX = "rx"
GATE_RZ = "rz"
GATE_CNOT = "cnot"


@dataclass(frozen=True)
class Gate:
    """One circuit gate. Rotations follow R(theta) = exp(-i*theta*sigma/2)."""

    kind: str
    target: int
    angle: float | None = None
    control: int | None = None


@dataclass
class StateVector:
    """Complex amplitudes over the 2^n computational basis states."""

    amplitudes: np.ndarray
    n: int

    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))


@dataclass
class MeasurementBatch:
    """Outcomes of repeated projective measurements, as basis-state integers."""

    outcomes: np.ndarray
    n: int

    @property
    def batch_size(self) -> int:
        return len(self.outcomes)

    def bitstrings(self) -> list[str]:
        return [format_bitstring(int(x), self.n) for x in self.outcomes]


def zero_state(n: int) -> StateVector:
    amp = np.zeros(1 << n, dtype=np.complex128)
    amp[0] = 1.0
    return StateVector(amplitudes=amp, n=n)


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    half = 0.5 * angle
    if kind == GATE_RX:
        return np.array(
            [[np.cos(half), -1j * np.sin(half)], [-1j * np.sin(half), np.cos(half)]],
            dtype=np.complex128,
        )
    if kind == GATE_RZ:
        return np.array(
            [[np.exp(-1j * half), 0.0], [0.0, np.exp(1j * half)]], dtype=np.complex128
        )
    raise ValueError(f"unknown rotation kind {kind!r}")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one gate and return the new state (input is left untouched)."""
    n = state.n
    if not 0 <= gate.target < n:
        raise IndexError(f"target {gate.target} out of range for n={n}")

    if gate.kind == GATE_CNOT:
        if gate.control is None:
            raise ValueError("CNOT needs a control qubit")
        if not 0 <= gate.control < n:
            raise IndexError(f"control {gate.control} out of range for n={n}")
        if gate.control == gate.target:
            raise ValueError("CNOT control and target must differ")
        control_mask = 1 << (n - 1 - gate.control)
        target_mask = 1 << (n - 1 - gate.target)
        basis = np.arange(1 << n)
        source = np.where(basis & control_mask, basis ^ target_mask, basis)
        return StateVector(amplitudes=state.amplitudes[source], n=n)

    if gate.angle is None:
        raise ValueError(f"{gate.kind} gate needs an angle")
    mat = _rotation_matrix(gate.kind, gate.angle)
    lead = 1 << gate.target
    trail = 1 << (n - 1 - gate.target)
    pairs = state.amplitudes.reshape(lead, 2, trail)
    out = np.einsum("xy,lyt->lxt", mat, pairs)
    return StateVector(amplitudes=out.reshape(-1), n=n)


def circuit_gates(spec: CircuitSpec, theta: np.ndarray) -> list[Gate]:
    """Time-ordered gate list of the layered circuit for one angle vector."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (spec.parameter_count,):
        raise ValueError(
            f"expected {spec.parameter_count} angles, got shape {theta.shape}"
        )
    table = angle_slot_table(spec.n, spec.depth)
    gates: list[Gate] = []
    for layer in range(spec.depth + 1):
        for qubit in range(spec.n):
            for slot_pos, slot in enumerate(("z_pre", "x", "z_post")):
                flat = table[layer, qubit, slot_pos]
                if flat < 0:
                    continue
                kind = GATE_RX if slot == SLOT_X else GATE_RZ
                gates.append(Gate(kind=kind, target=qubit, angle=float(theta[flat])))
        if layer < spec.depth:
            for control, target in spec.edges:
                gates.append(Gate(kind=GATE_CNOT, target=target, control=control))
    return gates


def run_circuit(spec: CircuitSpec, theta: np.ndarray) -> StateVector:
    """Evolve |0..0> through the layered circuit (reference path)."""
    state = zero_state(spec.n)
    for gate in circuit_gates(spec, theta):
        state = apply_gate(state, gate)
    return state


def probabilities(state: StateVector) -> np.ndarray:
    """Born-rule output distribution |<x|psi>|^2 of a normalized state."""
    probs = np.abs(state.amplitudes) ** 2
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized: |psi|^2 = {total}")
    return probs


def sample(state: StateVector, batch_size: int, rng_seed: int) -> MeasurementBatch:
    """batch_size i.i.d. projective measurements in the computational basis."""
    probs = probabilities(state)
    return sample_from_probabilities(probs, state.n, batch_size, rng_seed)


def sample_from_probabilities(
    probs: np.ndarray, n: int, batch_size: int, rng_seed: int
) -> MeasurementBatch:
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(rng_seed)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    outcomes = np.searchsorted(cdf, rng.random(batch_size), side="right")
    return MeasurementBatch(outcomes=outcomes.astype(np.int64), n=n)


# ---------------------------------------------------------------------------
# batched fast path


@lru_cache(maxsize=32)
def entangler_permutation(spec: CircuitSpec) -> np.ndarray:
    """Basis permutation performed by one full CNOT entangler layer."""
    basis = np.arange(spec.dim)
    for control, target in spec.edges:
        control_mask = 1 << (spec.n - 1 - control)
        target_mask = 1 << (spec.n - 1 - target)
        basis = np.where(basis & control_mask, basis ^ target_mask, basis)
    # source index per destination: new[x] = old[perm[x]] (CNOT layers are
    # involutions composed left-to-right, so forward map == gather map only
    # after inversion)
    inverse = np.empty_like(basis)
    inverse[basis] = np.arange(spec.dim)
    inverse.setflags(write=False)
    return inverse


if _HAVE_NUMBA:

    @numba.njit(parallel=True, fastmath=True, cache=True)
    def _batch_probs_kernel(thetas, n, depth, slot_table, perm):  # pragma: no cover
        batch = thetas.shape[0]
        dim = 1 << n
        out = np.empty((batch, dim))
        for b in numba.prange(batch):
            state = np.zeros(dim, dtype=np.complex128)
            state[0] = 1.0
            scratch = np.empty(dim, dtype=np.complex128)
            for layer in range(depth + 1):
                for qubit in range(n):
                    i_pre = slot_table[layer, qubit, 0]
                    i_x = slot_table[layer, qubit, 1]
                    i_post = slot_table[layer, qubit, 2]
                    a_pre = thetas[b, i_pre] if i_pre >= 0 else 0.0
                    a_x = thetas[b, i_x]
                    a_post = thetas[b, i_post] if i_post >= 0 else 0.0
                    # block unitary Rz(post) @ Rx(x) @ Rz(pre), time order pre->x->post
                    e_pre = np.exp(-0.5j * a_pre)
                    e_post = np.exp(-0.5j * a_post)
                    cos_x = np.cos(0.5 * a_x)
                    sin_x = -1j * np.sin(0.5 * a_x)
                    u00 = e_post * cos_x * e_pre
                    u01 = e_post * sin_x * np.conj(e_pre)
                    u10 = np.conj(e_post) * sin_x * e_pre
                    u11 = np.conj(e_post) * cos_x * np.conj(e_pre)
                    stride = 1 << (n - 1 - qubit)
                    for base in range(0, dim, stride << 1):
                        for low in range(base, base + stride):
                            high = low + stride
                            amp0 = state[low]
                            amp1 = state[high]
                            state[low] = u00 * amp0 + u01 * amp1
                            state[high] = u10 * amp0 + u11 * amp1
                if layer < depth:
                    for i in range(dim):
                        scratch[i] = state[perm[i]]
                    state, scratch = scratch, state
            for i in range(dim):
                out[b, i] = state[i].real * state[i].real + state[i].imag * state[i].imag
        return out


def circuit_probabilities_batch(spec: CircuitSpec, thetas: np.ndarray) -> np.ndarray:
    """Output distributions for a (B, parameter_count) batch of angle vectors."""
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    if thetas.ndim != 2 or thetas.shape[1] != spec.parameter_count:
        raise ValueError(
            f"expected (B, {spec.parameter_count}) angles, got {thetas.shape}"
        )
    if _HAVE_NUMBA:
        table = angle_slot_table(spec.n, spec.depth)
        perm = entangler_permutation(spec)
        return _batch_probs_kernel(thetas, spec.n, spec.depth, table, perm)
    return np.stack(
        [probabilities(run_circuit(spec, thetas[b])) for b in range(len(thetas))]
    )


def circuit_probabilities(spec: CircuitSpec, theta: np.ndarray) -> np.ndarray:
    """Output distribution for a single angle vector (fast path)."""
    return circuit_probabilities_batch(spec, np.asarray(theta)[None, :])[0]
