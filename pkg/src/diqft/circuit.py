"""Gate-level IR for circuits over a multi-node qubit register.

Qubits are addressed by (node, local) pairs; the flat register index is
``node * qubits_per_node + local`` and index 0 is the least significant
bit of basis-state labels. Controlled-phase angles are stored as exact
dyadic exponents (angle = -pi / 2**k) so that pruning decisions compare
integers, never floats; radians exist only at simulation time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, auto


class AddressingError(ValueError):
    """A node or qubit index falls outside the layout."""


class InvalidDistanceError(ValueError):
    """A controlled-phase index difference is not a positive integer."""


@dataclass(frozen=True)
class NodeLayout:
    """Homogeneous grid of `nodes` processors, each holding `qubits_per_node` qubits."""

    nodes: int
    qubits_per_node: int

    def __post_init__(self) -> None:
        if self.nodes < 1:
            raise AddressingError(f"need at least one node, got {self.nodes}")
        if self.qubits_per_node < 1:
            raise AddressingError(f"need at least one qubit per node, got {self.qubits_per_node}")

    @property
    def total_qubits(self) -> int:
        return self.nodes * self.qubits_per_node

    def qubit(self, node: int, local: int) -> "QubitRef":
        ref = QubitRef(node, local)
        self.check(ref)
        return ref

    def check(self, ref: "QubitRef") -> None:
        if not (0 <= ref.node < self.nodes):
            raise AddressingError(f"node {ref.node} outside [0, {self.nodes})")
        if not (0 <= ref.local < self.qubits_per_node):
            raise AddressingError(f"local index {ref.local} outside [0, {self.qubits_per_node})")

    def from_global(self, index: int) -> "QubitRef":
        if not (0 <= index < self.total_qubits):
            raise AddressingError(f"global index {index} outside [0, {self.total_qubits})")
        return QubitRef(index // self.qubits_per_node, index % self.qubits_per_node)


@dataclass(frozen=True)
class QubitRef:
    """One qubit identified by its host node and its local index within it."""

    node: int
    local: int


def global_index(local: int, node: int, layout: NodeLayout) -> int:
    """Flat register index of a (local, node) address."""
    layout.check(QubitRef(node, local))
    return node * layout.qubits_per_node + local


def rotation_angle(k: int) -> float:
    """Controlled-phase angle -pi / 2**k for index difference k >= 1.

    Exact halving: rotation_angle(k + 1) == rotation_angle(k) / 2 in
    binary floating point until underflow.
    """
    if k < 1:
        raise InvalidDistanceError(f"index difference must be >= 1, got {k}")
    return -math.pi / 2.0**k


def index_distance(ctrl: QubitRef, tgt: QubitRef, layout: NodeLayout) -> int:
    """Register-index difference between a control and a later target qubit."""
    layout.check(ctrl)
    layout.check(tgt)
    k = layout.qubits_per_node * (tgt.node - ctrl.node) + (tgt.local - ctrl.local)
    if k < 1:
        raise InvalidDistanceError(
            f"control {ctrl} must precede target {tgt} in register order (got k={k})"
        )
    return k


def cross_node_angle(ctrl: QubitRef, tgt: QubitRef, layout: NodeLayout) -> float:
    """Rotation angle between qubits on arbitrary nodes.

    Same-node pairs reduce bitwise-exactly to rotation_angle(tgt.local - ctrl.local).
    """
    return rotation_angle(index_distance(ctrl, tgt, layout))


class GateKind(Enum):
    H = auto()
    X = auto()
    Z = auto()
    CNOT = auto()
    CP = auto()
    MEASURE = auto()
    # Pseudo-op of lowered programs: prepare (|00> + |11>)/sqrt(2) on two wires.
    EPR = auto()


_SINGLE = frozenset({GateKind.H, GateKind.X, GateKind.Z, GateKind.MEASURE})
_CORRECTIONS = frozenset({GateKind.X, GateKind.Z})


@dataclass(frozen=True)
class Gate:
    """One gate with QubitRef operands.

    `phase_exponent` holds the dyadic exponent k of a CP gate.
    `bit` is the classical destination of a MEASURE.
    `condition` gates execution on a classical bit being 1; only X/Z
    corrections may carry it.
    """

    kind: GateKind
    qubits: tuple[QubitRef, ...]
    phase_exponent: int | None = None
    bit: int | None = None
    condition: int | None = None

    def __post_init__(self) -> None:
        n_ops = 1 if self.kind in _SINGLE else 2
        if len(self.qubits) != n_ops:
            raise ValueError(f"{self.kind.name} takes {n_ops} operand(s), got {len(self.qubits)}")
        if n_ops == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.kind.name} operands must be distinct")
        if self.kind is GateKind.CP:
            if self.phase_exponent is None or self.phase_exponent < 1:
                raise InvalidDistanceError(f"CP needs a phase exponent >= 1, got {self.phase_exponent}")
        elif self.phase_exponent is not None:
            raise ValueError(f"{self.kind.name} carries no phase exponent")
        if self.kind is GateKind.MEASURE and self.bit is None:
            raise ValueError("MEASURE needs a classical destination bit")
        if self.condition is not None and self.kind not in _CORRECTIONS:
            raise ValueError("only X/Z corrections may be classically controlled")

    @property
    def angle(self) -> float:
        """Radians of a CP gate; conversion happens only here."""
        if self.kind is not GateKind.CP:
            raise ValueError(f"{self.kind.name} has no angle")
        return rotation_angle(self.phase_exponent)

    @classmethod
    def h(cls, q: QubitRef) -> "Gate":
        return cls(GateKind.H, (q,))

    @classmethod
    def x(cls, q: QubitRef, condition: int | None = None) -> "Gate":
        return cls(GateKind.X, (q,), condition=condition)

    @classmethod
    def z(cls, q: QubitRef, condition: int | None = None) -> "Gate":
        return cls(GateKind.Z, (q,), condition=condition)

    @classmethod
    def cnot(cls, ctrl: QubitRef, tgt: QubitRef) -> "Gate":
        return cls(GateKind.CNOT, (ctrl, tgt))

    @classmethod
    def cp(cls, ctrl: QubitRef, tgt: QubitRef, k: int) -> "Gate":
        return cls(GateKind.CP, (ctrl, tgt), phase_exponent=k)

    @classmethod
    def measure(cls, q: QubitRef, bit: int) -> "Gate":
        return cls(GateKind.MEASURE, (q,), bit=bit)


def bit_reversal_permutation(n: int) -> tuple[int, ...]:
    """Wire map i -> n-1-i realizing the decoder's swap network classically."""
    return tuple(n - 1 - i for i in range(n))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list over a layout; gate order is execution order.

    `output_permutation`, when set, is the classical wire remap standing
    in for the swap network of a synthesized transform. It is applied at
    state ingestion so the gate cascade consumes wires coarsest phase
    first and delivers result bit j on wire j.
    """

    layout: NodeLayout
    gates: tuple[Gate, ...]
    classical_bits: int = 0
    output_permutation: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        for gate in self.gates:
            for ref in gate.qubits:
                self.layout.check(ref)
        if self.output_permutation is not None:
            if sorted(self.output_permutation) != list(range(self.layout.total_qubits)):
                raise ValueError("output permutation must permute all register wires")

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    @property
    def cp_count(self) -> int:
        return self.count(GateKind.CP)
