"""Circuit layout: parameter indexing and data-driven entangler topology.

A layered circuit of depth ``d`` on ``n`` qubits alternates single-qubit
rotation layers (d+1 of them, indexed 0..d) with CNOT entangler layers
(d of them, all sharing one edge list). Each rotation block on a qubit
is Rz-Rx-Rz in time order, except that the very first Rz of the circuit
(acting on |0..0>) and the very last one (right before a computational
basis measurement) are dropped because they cannot change the output
distribution. This leaves exactly (3d+1)*n trainable angles.

The entangler edge list is learned from data: pairwise mutual
information between bits of the training set weights a maximum spanning
tree (Kruskal), and each tree bond gets a random control/target
orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bits import bit_matrix

SLOT_Z_PRE = "z_pre"
SLOT_X = "x"
SLOT_Z_POST = "z_post"

# time order of slots within one rotation block
_SLOT_ORDER = (SLOT_Z_PRE, SLOT_X, SLOT_Z_POST)


@dataclass(frozen=True)
class CircuitSpec:
    """Layout of a layered circuit: qubit count, depth, entangler edges."""

    n: int
    depth: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        if self.depth < 0:
            raise ValueError(f"negative depth {self.depth}")
        for c, t in self.edges:
            if c == t:
                raise ValueError(f"edge ({c},{t}) has control == target")
            if not (0 <= c < self.n and 0 <= t < self.n):
                raise ValueError(f"edge ({c},{t}) out of range for n={self.n}")

    @property
    def parameter_count(self) -> int:
        return (3 * self.depth + 1) * self.n

    @property
    def dim(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class ParameterIndex:
    """Position of one rotation angle: layer, qubit, and slot within the block."""

    layer: int
    qubit: int
    slot: str


def layer_slots(layer: int, depth: int) -> tuple[str, ...]:
    """Slots present in a rotation layer, in time order."""
    slots = []
    if layer > 0:
        slots.append(SLOT_Z_PRE)
    slots.append(SLOT_X)
    if layer < depth:
        slots.append(SLOT_Z_POST)
    return tuple(slots)


@lru_cache(maxsize=32)
def _index_tables(n: int, depth: int):
    """Forward and inverse maps between (layer, qubit, slot) and flat indices.

    Flat layout: layer-major, then qubit, then slot in time order, so the
    angles of one qubit's block are contiguous.
    """
    forward: dict[tuple[int, int, str], int] = {}
    inverse: list[ParameterIndex] = []
    for layer in range(depth + 1):
        for qubit in range(n):
            for slot in layer_slots(layer, depth):
                forward[(layer, qubit, slot)] = len(inverse)
                inverse.append(ParameterIndex(layer, qubit, slot))
    assert len(inverse) == (3 * depth + 1) * n
    return forward, tuple(inverse)


def flat_index(spec: CircuitSpec, index: ParameterIndex) -> int:
    forward, _ = _index_tables(spec.n, spec.depth)
    key = (index.layer, index.qubit, index.slot)
    if key not in forward:
        raise KeyError(f"no parameter at {index} for depth {spec.depth}")
    return forward[key]


def parameter_index(spec: CircuitSpec, flat: int) -> ParameterIndex:
    _, inverse = _index_tables(spec.n, spec.depth)
    if not 0 <= flat < len(inverse):
        raise IndexError(f"flat index {flat} outside [0, {len(inverse)})")
    return inverse[flat]


@lru_cache(maxsize=32)
def angle_slot_table(n: int, depth: int) -> np.ndarray:
    """(depth+1, n, 3) table of flat angle indices, -1 where a slot is absent.

    Slot axis order is (z_pre, x, z_post); consumed by the simulator's
    batched kernel, which treats absent slots as zero rotations.
    """
    forward, _ = _index_tables(n, depth)
    table = -np.ones((depth + 1, n, 3), dtype=np.int64)
    for (layer, qubit, slot), flat in forward.items():
        table[layer, qubit, _SLOT_ORDER.index(slot)] = flat
    table.setflags(write=False)
    return table


def build_spec(n: int, depth: int, edges) -> CircuitSpec:
    """Normalize an edge list into a CircuitSpec with its index mapping."""
    return CircuitSpec(n=n, depth=depth, edges=tuple((int(c), int(t)) for c, t in edges))


def random_parameters(spec: CircuitSpec, rng_seed: int) -> np.ndarray:
    """Initial angles drawn i.i.d. uniform on [0, 2*pi), the natural period."""
    rng = np.random.default_rng(rng_seed)
    return rng.uniform(0.0, 2.0 * np.pi, size=spec.parameter_count)


# ---------------------------------------------------------------------------
# mutual information and the Chow-Liu entangler tree


def mutual_information(samples) -> np.ndarray:
    """Pairwise mutual information (nats) between bits of a sample set.

    ``samples`` is either an (M, n) 0/1 array or an iterable of integer
    outcomes paired with a known width via an (M, n) conversion by the
    caller. Empirical joint frequencies define the distribution;
    0 * log(0/q) counts as 0.
    """
    bits = np.asarray(samples, dtype=np.float64)
    if bits.ndim != 2:
        raise ValueError("samples must be an (M, n) bit array")
    m, n = bits.shape
    if m == 0:
        raise ValueError("empty dataset")

    p1 = bits.mean(axis=0)
    # joint counts for every pair: p11[s,t] = P(bit_s=1, bit_t=1), etc.
    p11 = (bits.T @ bits) / m
    p10 = p1[:, None] - p11
    p01 = p1[None, :] - p11
    p00 = 1.0 - p11 - p10 - p01

    info = np.zeros((n, n))
    for joint, ps, pt in (
        (p00, 1.0 - p1[:, None], 1.0 - p1[None, :]),
        (p01, 1.0 - p1[:, None], p1[None, :]),
        (p10, p1[:, None], 1.0 - p1[None, :]),
        (p11, p1[:, None], p1[None, :]),
    ):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = joint * np.log(joint / (ps * pt))
        info += np.where(joint > 0.0, term, 0.0)
    np.fill_diagonal(info, 0.0)
    # clip the tiny negatives produced by round-off on independent pairs
    return np.maximum(info, 0.0)


def weighted_mutual_information(probs: np.ndarray, n: int) -> np.ndarray:
    """Mutual information matrix of an exact distribution over n-bit outcomes."""
    weights = np.asarray(probs, dtype=np.float64)
    bits = bit_matrix(n).astype(np.float64)
    m = weights.sum()
    p1 = weights @ bits / m
    p11 = (bits.T * weights) @ bits / m
    p10 = p1[:, None] - p11
    p01 = p1[None, :] - p11
    p00 = 1.0 - p11 - p10 - p01
    info = np.zeros((n, n))
    for joint, ps, pt in (
        (p00, 1.0 - p1[:, None], 1.0 - p1[None, :]),
        (p01, 1.0 - p1[:, None], p1[None, :]),
        (p10, p1[:, None], 1.0 - p1[None, :]),
        (p11, p1[:, None], p1[None, :]),
    ):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = joint * np.log(joint / (ps * pt))
        info += np.where(joint > 0.0, term, 0.0)
    np.fill_diagonal(info, 0.0)
    return np.maximum(info, 0.0)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def chow_liu_edges(info: np.ndarray, rng_seed: int) -> list[tuple[int, int]]:
    """Maximum spanning tree over mutual-information weights.

    Kruskal with ties broken by lexicographic (s, t) order after sorting
    by descending weight, so the tree is reproducible. The control/target
    orientation of each bond is drawn from ``rng_seed`` because the tree
    itself is undirected.
    """
    info = np.asarray(info)
    n = info.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes to build a tree")
    pairs = [(s, t) for s in range(n) for t in range(s + 1, n)]
    pairs.sort(key=lambda st: (-info[st[0], st[1]], st[0], st[1]))

    rng = np.random.default_rng(rng_seed)
    uf = _UnionFind(n)
    edges: list[tuple[int, int]] = []
    for s, t in pairs:
        if uf.union(s, t):
            edges.append((s, t) if rng.random() < 0.5 else (t, s))
            if len(edges) == n - 1:
                break
    return edges


def spanning_tree_weight(info: np.ndarray, edges) -> float:
    return float(sum(info[min(c, t), max(c, t)] for c, t in edges))


def is_spanning_tree(n: int, edges) -> bool:
    if len(edges) != n - 1:
        return False
    uf = _UnionFind(n)
    return all(uf.union(c, t) for c, t in edges)
