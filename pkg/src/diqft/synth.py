"""Synthesis of the inverse-Fourier decoder, monolithic and node-partitioned.

The decoder is an ascending cascade: for each register qubit j it emits
H(j) followed by CP gates controlled by j on every later qubit i, with
exponent k = i - j. Pruning drops gates with k above a threshold t; the
threshold comes from an error tolerance, an explicit integer, or a
maximum node distance (horizon). Partitioning groups the surviving
gates into per-node local circuits plus inter-node communication
blocks keyed by node distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import (
    Circuit,
    Gate,
    GateKind,
    NodeLayout,
    QubitRef,
    bit_reversal_permutation,
)


class InvalidToleranceError(ValueError):
    """Error tolerance outside (0, 1)."""


def threshold_from_epsilon(epsilon: float) -> int:
    """Smallest retained-exponent cutoff guaranteeing accumulated phase error <= epsilon * pi.

    The ceiling is applied to -log2(epsilon) itself, before any other
    arithmetic.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {epsilon}")
    return max(1, math.ceil(-math.log2(epsilon)))


def communication_horizon(epsilon: float, qubits_per_node: int) -> int:
    """Largest node distance that still carries a significant gate."""
    if qubits_per_node < 1:
        raise InvalidToleranceError(f"qubits per node must be >= 1, got {qubits_per_node}")
    t = threshold_from_epsilon(epsilon)
    return (t - 1) // qubits_per_node + 1


def invert_horizon(qubits_per_node: int, d_max: int) -> tuple[int, float]:
    """Minimum threshold (and its error bound) whose horizon equals d_max.

    Returns (t_min, epsilon) with t_min = qubits_per_node*(d_max-1) + 1
    and epsilon = 2**-t_min; communication_horizon(epsilon,
    qubits_per_node) round-trips to d_max.
    """
    if qubits_per_node < 1 or d_max < 1:
        raise InvalidToleranceError("qubits per node and horizon must be >= 1")
    t_min = qubits_per_node * (d_max - 1) + 1
    return t_min, 2.0**-t_min


def block_min_exponent(distance: int, qubits_per_node: int) -> int:
    """Smallest CP exponent present in a full block at the given node distance.

    Realized by control local index Q-1 against target local index 0.
    """
    if distance < 1:
        raise InvalidToleranceError(f"node distance must be >= 1, got {distance}")
    return qubits_per_node * (distance - 1) + 1


_MODES = ("exact", "epsilon", "threshold", "horizon")


@dataclass(frozen=True)
class PruneSpec:
    """Which CP gates survive: everything, or exponents k <= t with t
    given directly, derived from a tolerance, or derived from a horizon."""

    mode: str
    epsilon: float | None = None
    threshold: int | None = None
    horizon: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"unknown prune mode {self.mode!r}")
        if self.mode == "epsilon" and not (self.epsilon and 0.0 < self.epsilon < 1.0):
            raise InvalidToleranceError(f"tolerance must lie in (0, 1), got {self.epsilon}")
        if self.mode == "threshold" and (self.threshold is None or self.threshold < 1):
            raise ValueError(f"threshold must be >= 1, got {self.threshold}")
        if self.mode == "horizon" and (self.horizon is None or self.horizon < 1):
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")

    @classmethod
    def exact(cls) -> "PruneSpec":
        return cls("exact")

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "PruneSpec":
        return cls("epsilon", epsilon=epsilon)

    @classmethod
    def from_threshold(cls, threshold: int) -> "PruneSpec":
        return cls("threshold", threshold=threshold)

    @classmethod
    def from_horizon(cls, d_max: int) -> "PruneSpec":
        return cls("horizon", horizon=d_max)

    def resolve_threshold(self, qubits_per_node: int | None = None) -> int | None:
        """Effective integer cutoff, or None for exact mode.

        Horizon mode uses the minimal consistent threshold, which needs
        the node capacity.
        """
        if self.mode == "exact":
            return None
        if self.mode == "threshold":
            return self.threshold
        if self.mode == "epsilon":
            return threshold_from_epsilon(self.epsilon)
        if qubits_per_node is None:
            raise ValueError("horizon pruning needs the node capacity to derive a threshold")
        return invert_horizon(qubits_per_node, self.horizon)[0]


@dataclass(frozen=True)
class CommBlock:
    """All surviving CP gates between one ordered node pair.

    Gates run ascending by control local index, then target local index;
    CP gates commute, so any fixed order is correct and this one makes
    lowering reproducible.
    """

    ctrl_node: int
    tgt_node: int
    gates: tuple[Gate, ...]

    def __post_init__(self) -> None:
        if self.distance < 1:
            raise ValueError(f"block distance must be >= 1, got {self.distance}")
        for gate in self.gates:
            if gate.kind is not GateKind.CP:
                raise ValueError("communication blocks hold CP gates only")
            ctrl, tgt = gate.qubits
            if ctrl.node != self.ctrl_node or tgt.node != self.tgt_node:
                raise ValueError(f"gate {gate} does not belong to block {self.ctrl_node}->{self.tgt_node}")

    @property
    def distance(self) -> int:
        return self.tgt_node - self.ctrl_node

    def controls(self) -> list[QubitRef]:
        """Distinct control qubits, ascending by local index."""
        seen = sorted({g.qubits[0].local for g in self.gates})
        return [QubitRef(self.ctrl_node, local) for local in seen]

    def gates_of_control(self, ctrl: QubitRef) -> list[Gate]:
        return [g for g in self.gates if g.qubits[0] == ctrl]


def prune_block(block: CommBlock, threshold: int) -> CommBlock | None:
    """Drop gates with exponent above the threshold; None if nothing survives.

    A whole block dies exactly when its minimum exponent exceeds the
    threshold, i.e. when its distance exceeds the horizon.
    """
    kept = tuple(g for g in block.gates if g.phase_exponent <= threshold)
    if not kept:
        return None
    return CommBlock(block.ctrl_node, block.tgt_node, kept)


@dataclass(frozen=True)
class DistributedCircuit:
    """Partitioned decoder: per-node local circuits plus communication blocks.

    Blocks appear in execution order: for each target node p ascending,
    blocks into p by decreasing distance (d = p down to 1), then node
    p's local circuit. `threshold` is the resolved cutoff (None = exact).
    """

    layout: NodeLayout
    local_blocks: tuple[Circuit, ...]
    comm_blocks: tuple[CommBlock, ...]
    output_permutation: tuple[int, ...]
    threshold: int | None = None

    def blocks_into(self, node: int) -> list[CommBlock]:
        return [b for b in self.comm_blocks if b.tgt_node == node]

    def local_cp_count(self) -> int:
        return sum(block.cp_count for block in self.local_blocks)

    def remote_cp_count(self) -> int:
        return sum(len(block.gates) for block in self.comm_blocks)

    def flatten(self) -> Circuit:
        """Single schedule over the full register, equivalent to the
        monolithic build with the same pruning: same CP multiset, and
        every H lands after the gates targeting its qubit and before the
        gates it controls."""
        gates: list[Gate] = []
        for node in range(self.layout.nodes):
            for block in self.blocks_into(node):
                gates.extend(block.gates)
            for gate in self.local_blocks[node].gates:
                relabeled = tuple(QubitRef(node, ref.local) for ref in gate.qubits)
                gates.append(Gate(gate.kind, relabeled, gate.phase_exponent, gate.bit, gate.condition))
        return Circuit(
            layout=self.layout,
            gates=tuple(gates),
            output_permutation=self.output_permutation,
        )


def build_monolithic_iqft(n: int, prune: PruneSpec | None = None) -> Circuit:
    """Decoder over a flat n-qubit register.

    For each qubit j ascending: H(j), then CP(k = i - j) onto every
    later qubit i with k within the threshold. The swap network is
    recorded as the bit-reversal output permutation, not as gates.
    """
    if n < 1:
        raise ValueError(f"register must hold at least one qubit, got {n}")
    prune = prune or PruneSpec.exact()
    if prune.mode == "horizon":
        raise ValueError("horizon pruning needs a node layout; use build_distributed_iqft")
    t = prune.resolve_threshold()
    layout = NodeLayout(1, n)
    gates: list[Gate] = []
    for j in range(n):
        gates.append(Gate.h(QubitRef(0, j)))
        for i in range(j + 1, n):
            k = i - j
            if t is not None and k > t:
                break
            gates.append(Gate.cp(QubitRef(0, j), QubitRef(0, i), k))
    return Circuit(
        layout=layout,
        gates=tuple(gates),
        output_permutation=bit_reversal_permutation(n),
    )


def build_distributed_iqft(layout: NodeLayout, prune: PruneSpec | None = None) -> DistributedCircuit:
    """Partition the decoder over the node layout.

    Intra-node gates form per-node local circuits (each the monolithic
    build at the node capacity, relabeled); inter-node gates group into
    blocks keyed by (ctrl_node, tgt_node). Blocks whose minimum exponent
    exceeds the threshold are absent entirely.
    """
    prune = prune or PruneSpec.exact()
    q_per = layout.qubits_per_node
    t = prune.resolve_threshold(q_per)
    local_prune = PruneSpec.exact() if t is None else PruneSpec.from_threshold(t)
    local = build_monolithic_iqft(q_per, local_prune)
    blocks: list[CommBlock] = []
    for tgt_node in range(1, layout.nodes):
        for distance in range(tgt_node, 0, -1):
            if t is not None and block_min_exponent(distance, q_per) > t:
                continue
            ctrl_node = tgt_node - distance
            gates = []
            for qc in range(q_per):
                for qt in range(q_per):
                    k = q_per * distance + qt - qc
                    if t is None or k <= t:
                        gates.append(Gate.cp(QubitRef(ctrl_node, qc), QubitRef(tgt_node, qt), k))
            if gates:
                blocks.append(CommBlock(ctrl_node, tgt_node, tuple(gates)))
    return DistributedCircuit(
        layout=layout,
        local_blocks=(local,) * layout.nodes,
        comm_blocks=tuple(blocks),
        output_permutation=bit_reversal_permutation(layout.total_qubits),
        threshold=t,
    )


def count_cp_gates(layout: NodeLayout, threshold: int | None) -> tuple[int, int]:
    """(local, remote) CP counts of the partitioned build, without
    materializing gates. Safe for large grids."""
    q_per, nodes = layout.qubits_per_node, layout.nodes
    t = threshold
    local_per_node = sum(
        q_per - k for k in range(1, q_per if t is None else min(t, q_per - 1) + 1)
    )
    remote = 0
    for distance in range(1, nodes):
        pair_gates = 0
        for qc in range(q_per):
            for qt in range(q_per):
                k = q_per * distance + qt - qc
                if t is None or k <= t:
                    pair_gates += 1
        if pair_gates == 0 and t is not None and block_min_exponent(distance, q_per) > t:
            break
        remote += (nodes - distance) * pair_gates
    return nodes * local_per_node, remote
