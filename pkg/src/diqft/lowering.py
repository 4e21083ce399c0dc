"""Lowering of node-spanning CP gates to entanglement-backed primitives.

Two strategies:

* telegate (default): one shared pair per (control qubit, target node)
  session extends the control's amplitudes onto a remote half, which
  then drives all of that control's surviving CP gates in the block
  locally before being disentangled.
* teledata: the control qubit itself is teleported to the target node,
  the gates run locally, and the qubit is teleported home again when a
  later op needs it (or another session needs the channel).

Programs run on `total_qubits + 2` wires: one reusable channel pair
occupies the two top wires, and measured halves are reset by a
classically controlled X so sessions can be serialized. Every lowering
maintains a ledger of pairs consumed (half-attributed to each endpoint
node), classical messages, protocol-auxiliary operation counts, and
logical CP counts.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, Gate, GateKind, NodeLayout, QubitRef
from .synth import DistributedCircuit


class CapacityError(RuntimeError):
    """A node cannot host the ancilla a protocol step needs."""


@dataclass(frozen=True)
class PrimOp:
    """Wire-indexed primitive executed by the simulator.

    Mirrors Gate but addresses flat simulator wires, so channel wires
    above the logical register are expressible.
    """

    kind: GateKind
    wires: tuple[int, ...]
    phase_exponent: int | None = None
    bit: int | None = None
    condition: int | None = None


def circuit_to_prims(circuit: Circuit) -> tuple[PrimOp, ...]:
    """Map QubitRef operands to flat register wires."""
    q_per = circuit.layout.qubits_per_node
    return tuple(
        PrimOp(
            gate.kind,
            tuple(ref.node * q_per + ref.local for ref in gate.qubits),
            gate.phase_exponent,
            gate.bit,
            gate.condition,
        )
        for gate in circuit.gates
    )


@dataclass(frozen=True)
class CommOpsPolicy:
    """Named inventory of protocol-auxiliary ops charged per session (or
    per teleport hop): pair generation, the entangling CNOT, both
    measurements, and the three correction-phase ops."""

    epr_generation: bool = True
    entangling_cnot: bool = True
    measurements: bool = True
    x_correction: bool = True
    hadamard: bool = True
    z_correction: bool = True

    def per_session(self) -> int:
        return (
            int(self.epr_generation)
            + int(self.entangling_cnot)
            + 2 * int(self.measurements)
            + int(self.x_correction)
            + int(self.hadamard)
            + int(self.z_correction)
        )


DEFAULT_POLICY = CommOpsPolicy()


@dataclass
class ResourceLedger:
    """Communication and computation tallies for one lowered program."""

    epr_total: int = 0
    epr_by_node: tuple[float, ...] = ()
    classical_messages: int = 0
    comm_ops: int = 0
    comp_ops_local_cp: int = 0
    comp_ops_remote_cp: int = 0

    def check(self) -> None:
        if self.epr_by_node and abs(sum(self.epr_by_node) - self.epr_total) > 1e-9:
            raise ValueError("per-node pair attributions must sum to the pair total")


@dataclass(frozen=True)
class CatSession:
    """One entangle/disentangle cycle of a control against a target node."""

    ctrl: QubitRef
    tgt_node: int
    epr_id: int
    targets: tuple[tuple[int, int], ...]  # (target local index, phase exponent)

    def __post_init__(self) -> None:
        if not self.targets:
            raise ValueError("a session needs at least one surviving target")


@dataclass(frozen=True)
class LoweredProgram:
    """Primitive op sequence plus its resource ledger.

    `final_wires[i]` is the wire holding logical qubit i when the
    program ends (teledata may park the last migrated qubit on the
    channel). `width` counts logical wires plus channel wires actually
    used.
    """

    layout: NodeLayout
    ops: tuple[PrimOp, ...]
    ledger: ResourceLedger
    classical_bits: int
    output_permutation: tuple[int, ...] | None
    final_wires: tuple[int, ...]
    sessions: tuple[CatSession, ...]
    protocol: str

    @property
    def width(self) -> int:
        n = self.layout.total_qubits
        return n + 2 if any(op.kind is GateKind.EPR for op in self.ops) else n

    def to_text(self) -> str:
        """Line-oriented dump: opcode, wires, then k=/bit=/if= fields."""
        lines = []
        for op in self.ops:
            parts = [op.kind.name.lower(), ",".join(str(w) for w in op.wires)]
            if op.phase_exponent is not None:
                parts.append(f"k={op.phase_exponent}")
            if op.bit is not None:
                parts.append(f"bit={op.bit}")
            if op.condition is not None:
                parts.append(f"if={op.condition}")
            lines.append(" ".join(parts))
        return "\n".join(lines) + ("\n" if lines else "")


class _Emitter:
    """Shared op-list/ledger accumulation for both lowerings."""

    def __init__(self, layout: NodeLayout, policy: CommOpsPolicy):
        self.layout = layout
        self.policy = policy
        self.n = layout.total_qubits
        self.chan_a = self.n  # half at the sending node
        self.chan_b = self.n + 1  # half at the receiving node
        self.ops: list[PrimOp] = []
        self.next_bit = 0
        self.epr_by_node = [0.0] * layout.nodes
        self.ledger = ResourceLedger()
        self.sessions: list[CatSession] = []

    def wire(self, ref: QubitRef) -> int:
        return ref.node * self.layout.qubits_per_node + ref.local

    def alloc_bit(self) -> int:
        bit = self.next_bit
        self.next_bit += 1
        return bit

    def emit_local(self, node: int, block: Circuit) -> None:
        q_per = self.layout.qubits_per_node
        base = node * q_per
        for gate in block.gates:
            wires = tuple(base + ref.local for ref in gate.qubits)
            self.ops.append(PrimOp(gate.kind, wires, gate.phase_exponent, gate.bit, gate.condition))
            if gate.kind is GateKind.CP:
                self.ledger.comp_ops_local_cp += 1

    def charge_pair(self, node_a: int, node_b: int) -> int:
        self.ledger.epr_total += 1
        self.epr_by_node[node_a] += 0.5
        self.epr_by_node[node_b] += 0.5
        self.ledger.classical_messages += 2
        self.ledger.comm_ops += self.policy.per_session()
        return self.ledger.epr_total - 1

    def finish(self, final_wires: list[int], perm, protocol: str) -> LoweredProgram:
        self.ledger.epr_by_node = tuple(self.epr_by_node)
        self.ledger.check()
        return LoweredProgram(
            layout=self.layout,
            ops=tuple(self.ops),
            ledger=self.ledger,
            classical_bits=self.next_bit,
            output_permutation=perm,
            final_wires=tuple(final_wires),
            sessions=tuple(self.sessions),
            protocol=protocol,
        )


def _iter_sessions(circuit: DistributedCircuit):
    """(node, block, control, surviving gates) in execution order; one
    entry per session, plus a (node, None, None, None) marker where each
    node's local circuit runs."""
    for node in range(circuit.layout.nodes):
        for block in circuit.blocks_into(node):
            for ctrl in block.controls():
                yield node, block, ctrl, block.gates_of_control(ctrl)
        yield node, None, None, None


def lower_telegate(circuit: DistributedCircuit, policy: CommOpsPolicy = DEFAULT_POLICY) -> LoweredProgram:
    """Expand each block into per-control sessions sharing one pair each.

    Session shape: pair generation; CNOT control -> local half, measure
    it, X the remote half on that bit; the control's CP gates driven by
    the remote half; H and measure the remote half, Z the control on
    that bit. Measured halves are reset in place so the channel can be
    reused. Local circuits pass through unchanged.
    """
    em = _Emitter(circuit.layout, policy)
    for node, block, ctrl, gates in _iter_sessions(circuit):
        if block is None:
            em.emit_local(node, circuit.local_blocks[node])
            continue
        ctrl_wire = em.wire(ctrl)
        epr_id = em.charge_pair(block.ctrl_node, block.tgt_node)
        em.sessions.append(
            CatSession(ctrl, block.tgt_node, epr_id, tuple((g.qubits[1].local, g.phase_exponent) for g in gates))
        )
        m_a, m_b = em.alloc_bit(), em.alloc_bit()
        em.ops.append(PrimOp(GateKind.EPR, (em.chan_a, em.chan_b)))
        em.ops.append(PrimOp(GateKind.CNOT, (ctrl_wire, em.chan_a)))
        em.ops.append(PrimOp(GateKind.MEASURE, (em.chan_a,), bit=m_a))
        em.ops.append(PrimOp(GateKind.X, (em.chan_b,), condition=m_a))
        em.ops.append(PrimOp(GateKind.X, (em.chan_a,), condition=m_a))  # channel reset
        for gate in gates:
            em.ops.append(PrimOp(GateKind.CP, (em.chan_b, em.wire(gate.qubits[1])), gate.phase_exponent))
            em.ledger.comp_ops_remote_cp += 1
        em.ops.append(PrimOp(GateKind.H, (em.chan_b,)))
        em.ops.append(PrimOp(GateKind.MEASURE, (em.chan_b,), bit=m_b))
        em.ops.append(PrimOp(GateKind.Z, (ctrl_wire,), condition=m_b))
        em.ops.append(PrimOp(GateKind.X, (em.chan_b,), condition=m_b))  # channel reset
    return em.finish(list(range(em.n)), circuit.output_permutation, "telegate")


def _teleport(em: _Emitter, src: int, helper: int, dst: int, node_src: int, node_dst: int) -> None:
    """Move the state on `src` to `dst` via a fresh pair (helper, dst);
    src and helper end reset to zero."""
    em.charge_pair(node_src, node_dst)
    m_z, m_x = em.alloc_bit(), em.alloc_bit()
    em.ops.append(PrimOp(GateKind.EPR, (helper, dst)))
    em.ops.append(PrimOp(GateKind.CNOT, (src, helper)))
    em.ops.append(PrimOp(GateKind.H, (src,)))
    em.ops.append(PrimOp(GateKind.MEASURE, (src,), bit=m_z))
    em.ops.append(PrimOp(GateKind.MEASURE, (helper,), bit=m_x))
    em.ops.append(PrimOp(GateKind.X, (dst,), condition=m_x))
    em.ops.append(PrimOp(GateKind.Z, (dst,), condition=m_z))
    em.ops.append(PrimOp(GateKind.X, (src,), condition=m_z))  # reset
    em.ops.append(PrimOp(GateKind.X, (helper,), condition=m_x))  # reset


def lower_teledata(
    circuit: DistributedCircuit,
    policy: CommOpsPolicy = DEFAULT_POLICY,
    ancilla_budget: int = 1,
) -> LoweredProgram:
    """Teleport each control to its target node, run the block gates
    locally, and teleport it home again when something later needs it.

    A control stays parked on the channel only when nothing after its
    session references it and no further session needs the channel;
    `final_wires` records the relocation. A round trip costs two pairs.
    """
    if circuit.layout.nodes > 1 and ancilla_budget < 1:
        raise CapacityError(
            f"destination nodes need at least one free ancilla slot, budget is {ancilla_budget}"
        )
    em = _Emitter(circuit.layout, policy)
    items = list(_iter_sessions(circuit))
    final_wires = list(range(em.n))
    for idx, (node, block, ctrl, gates) in enumerate(items):
        if block is None:
            em.emit_local(node, circuit.local_blocks[node])
            continue
        ctrl_wire = em.wire(ctrl)
        epr_id = em.ledger.epr_total
        em.sessions.append(
            CatSession(ctrl, block.tgt_node, epr_id, tuple((g.qubits[1].local, g.phase_exponent) for g in gates))
        )
        _teleport(em, ctrl_wire, em.chan_a, em.chan_b, ctrl.node, block.tgt_node)
        for gate in gates:
            em.ops.append(PrimOp(GateKind.CP, (em.chan_b, em.wire(gate.qubits[1])), gate.phase_exponent))
            em.ledger.comp_ops_remote_cp += 1
        if _needs_return(items, idx, ctrl):
            _teleport(em, em.chan_b, em.chan_a, ctrl_wire, block.tgt_node, ctrl.node)
        else:
            final_wires[ctrl_wire] = em.chan_b
    return em.finish(final_wires, circuit.output_permutation, "teledata")


def _needs_return(items: list, idx: int, ctrl: QubitRef) -> bool:
    """True when a later session exists (the channel must be freed) or a
    later op references the migrated control."""
    for node, block, other_ctrl, gates in items[idx + 1 :]:
        if block is not None:
            return True
        # local circuit of `node`: touches ctrl only if it lives there
        if node == ctrl.node:
            return True
    return False


def block_survivors(qubits_per_node: int, distance: int, threshold: int | None) -> tuple[int, int]:
    """(controls with a surviving gate, surviving gates) for one ordered
    node pair, by direct enumeration."""
    controls = 0
    gates = 0
    for qc in range(qubits_per_node):
        mine = 0
        for qt in range(qubits_per_node):
            k = qubits_per_node * distance + qt - qc
            if threshold is None or k <= threshold:
                mine += 1
        if mine:
            controls += 1
            gates += mine
    return controls, gates


def count_telegate_ledger(
    layout: NodeLayout, threshold: int | None, policy: CommOpsPolicy = DEFAULT_POLICY
) -> ResourceLedger:
    """Ledger of lower_telegate computed by session enumeration, without
    materializing ops. Exact agreement with the materialized lowering."""
    from .synth import count_cp_gates

    ledger = ResourceLedger()
    by_node = [0.0] * layout.nodes
    per_session = policy.per_session()
    for tgt_node in range(1, layout.nodes):
        for distance in range(tgt_node, 0, -1):
            sessions, gates = block_survivors(layout.qubits_per_node, distance, threshold)
            if sessions == 0:
                continue
            ctrl_node = tgt_node - distance
            ledger.epr_total += sessions
            by_node[ctrl_node] += sessions / 2
            by_node[tgt_node] += sessions / 2
            ledger.classical_messages += 2 * sessions
            ledger.comm_ops += per_session * sessions
            ledger.comp_ops_remote_cp += gates
    ledger.comp_ops_local_cp = count_cp_gates(layout, threshold)[0]
    ledger.epr_by_node = tuple(by_node)
    ledger.check()
    return ledger


def count_teledata_ledger(
    layout: NodeLayout, threshold: int | None, policy: CommOpsPolicy = DEFAULT_POLICY
) -> ResourceLedger:
    """Ledger of lower_teledata by enumeration: two pairs per session,
    except the program's final session parks and skips the return hop."""
    from .synth import count_cp_gates

    ledger = ResourceLedger()
    by_node = [0.0] * layout.nodes
    per_session = policy.per_session()
    last_pair: tuple[int, int] | None = None
    for tgt_node in range(1, layout.nodes):
        for distance in range(tgt_node, 0, -1):
            sessions, gates = block_survivors(layout.qubits_per_node, distance, threshold)
            if sessions == 0:
                continue
            ctrl_node = tgt_node - distance
            ledger.epr_total += 2 * sessions
            by_node[ctrl_node] += sessions
            by_node[tgt_node] += sessions
            ledger.classical_messages += 4 * sessions
            ledger.comm_ops += 2 * per_session * sessions
            ledger.comp_ops_remote_cp += gates
            last_pair = (ctrl_node, tgt_node)
    if last_pair is not None:
        # the final session never returns home
        ctrl_node, tgt_node = last_pair
        ledger.epr_total -= 1
        by_node[ctrl_node] -= 0.5
        by_node[tgt_node] -= 0.5
        ledger.classical_messages -= 2
        ledger.comm_ops -= per_session
    ledger.comp_ops_local_cp = count_cp_gates(layout, threshold)[0]
    ledger.epr_by_node = tuple(by_node)
    ledger.check()
    return ledger


def epr_per_node(program: "LoweredProgram | ResourceLedger") -> tuple[tuple[float, ...], float]:
    """Per-node pair attributions (half per endpoint) and their maximum."""
    ledger = program.ledger if isinstance(program, LoweredProgram) else program
    if not ledger.epr_by_node:
        raise ValueError("ledger carries no per-node attributions")
    return ledger.epr_by_node, max(ledger.epr_by_node)
