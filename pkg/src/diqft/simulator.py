"""Dense statevector execution with mid-circuit measurement.

Amplitude index bit j is wire j (wire 0 least significant). Gate
kernels mutate a [2]*width tensor view in place through basic slicing,
so a width-w op touches 2**(w-1) amplitudes and allocates nothing of
state size. Measurement outcomes are drawn from a generator seeded by
(seed, op index), making the record a pure function of the seed and
independent of execution history.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, GateKind, rotation_angle
from .lowering import LoweredProgram, PrimOp, circuit_to_prims
from .synth import DistributedCircuit

DEFAULT_QUBIT_CAP = 24
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class CapacityError(RuntimeError):
    """Requested register is wider than the configured cap."""


class DegenerateStateError(RuntimeError):
    """A projection left numerically nothing to renormalize."""


@dataclass
class StateVector:
    """Amplitudes over n wires plus the classical bit store.

    Exclusively owned while ops mutate it; norm stays within 1e-12 of
    one across any op sequence.
    """

    amplitudes: np.ndarray
    classical_bits: dict[int, int] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size & (self.amplitudes.size - 1):
            raise ValueError(f"amplitude count {self.amplitudes.size} is not a power of two")

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def zero(cls, n: int, seed: int = 0, max_qubits: int = DEFAULT_QUBIT_CAP) -> "StateVector":
        _check_width(n, max_qubits)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, seed=seed)

    def dump(self, path) -> None:
        """Raw little-endian (real, imag) float64 pairs, index order."""
        self.amplitudes.astype("<c16").tofile(path)

    @classmethod
    def load(cls, path, seed: int = 0) -> "StateVector":
        return cls(np.fromfile(path, dtype="<c16"), seed=seed)


def _check_width(n: int, max_qubits: int) -> None:
    if n > max_qubits:
        raise CapacityError(f"{n} wires exceed the configured cap of {max_qubits}")


def _bit_reversed_indices(n: int) -> np.ndarray:
    idx = np.arange(2**n, dtype=np.int64)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def prepare_fourier_state(x: int, n: int, seed: int = 0, max_qubits: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Phase encoding of the integer x across n wires, built analytically
    rather than by a circuit: amplitude at index y is
    exp(2*pi*i * x * y / 2**n) / sqrt(2**n).

    Running the synthesized decoder on this state (its swap network is
    the ingestion remap) returns the basis state |x>.
    """
    _check_width(n, max_qubits)
    size = 2**n
    if not 0 <= x < size:
        raise ValueError(f"x must lie in [0, {size}), got {x}")
    phases = (x * np.arange(size, dtype=np.int64)) % size  # exact in int64 for n <= 24
    amps = np.exp(2j * np.pi * phases / size) / math.sqrt(size)
    return StateVector(amps, seed=seed)


def apply_wire_permutation(amplitudes: np.ndarray, permutation: tuple[int, ...]) -> np.ndarray:
    """Classical index remap sending the state of wire i to wire permutation[i]."""
    n = amplitudes.size.bit_length() - 1
    if sorted(permutation) != list(range(n)):
        raise ValueError("permutation must cover every wire exactly once")
    # tensor axis a holds wire n-1-a; axis a of the result must read the
    # axis holding the wire that lands there.
    inverse = [0] * n
    for src, dst in enumerate(permutation):
        inverse[dst] = src
    axes = [n - 1 - inverse[n - 1 - a] for a in range(n)]
    return amplitudes.reshape([2] * n).transpose(axes).reshape(-1).copy()


# In-place kernels over the [2]*width tensor view. Axis of wire q is
# width-1-q; basic slicing keeps everything a view.


def _slot(width: int, assignments: dict[int, int]) -> tuple:
    # length-1 slices (not integers) so the result is always a writable view
    idx: list = [slice(None)] * width
    for wire, value in assignments.items():
        idx[width - 1 - wire] = slice(value, value + 1)
    return tuple(idx)


def _apply_h(view: np.ndarray, width: int, wire: int) -> None:
    lo = view[_slot(width, {wire: 0})]
    hi = view[_slot(width, {wire: 1})]
    diff = (lo - hi) * _INV_SQRT2
    lo += hi
    lo *= _INV_SQRT2
    hi[...] = diff


def _apply_x(view: np.ndarray, width: int, wire: int) -> None:
    lo = view[_slot(width, {wire: 0})].copy()
    view[_slot(width, {wire: 0})] = view[_slot(width, {wire: 1})]
    view[_slot(width, {wire: 1})] = lo


def _apply_z(view: np.ndarray, width: int, wire: int) -> None:
    view[_slot(width, {wire: 1})] *= -1.0


def _apply_cnot(view: np.ndarray, width: int, ctrl: int, tgt: int) -> None:
    one0 = view[_slot(width, {ctrl: 1, tgt: 0})].copy()
    view[_slot(width, {ctrl: 1, tgt: 0})] = view[_slot(width, {ctrl: 1, tgt: 1})]
    view[_slot(width, {ctrl: 1, tgt: 1})] = one0


def _apply_cp(view: np.ndarray, width: int, ctrl: int, tgt: int, angle: float) -> None:
    view[_slot(width, {ctrl: 1, tgt: 1})] *= cmath.exp(1j * angle)


def _measure(view: np.ndarray, width: int, wire: int, rng: np.random.Generator) -> int:
    hi = view[_slot(width, {wire: 1})]
    p_one = float(np.real(np.vdot(hi, hi)))
    outcome = 1 if rng.random() < p_one else 0
    prob = p_one if outcome else 1.0 - p_one
    if prob < 1e-30:
        raise DegenerateStateError(f"projection probability {prob} on wire {wire} is numerically zero")
    view[_slot(width, {wire: 1 - outcome})] = 0.0
    view *= 1.0 / math.sqrt(prob)
    return outcome


def apply(state: StateVector, op: PrimOp, op_index: int = 0) -> StateVector:
    """Execute one primitive in place and return the state.

    MEASURE samples from the amplitude-square marginal with a generator
    seeded by (state.seed, op_index), projects and renormalizes, and
    records the classical bit. A conditioned op runs iff its bit is 1.
    """
    width = state.n
    if op.condition is not None and not state.classical_bits.get(op.condition, 0):
        return state
    view = state.amplitudes.reshape([2] * width)
    kind = op.kind
    if kind is GateKind.H:
        _apply_h(view, width, op.wires[0])
    elif kind is GateKind.X:
        _apply_x(view, width, op.wires[0])
    elif kind is GateKind.Z:
        _apply_z(view, width, op.wires[0])
    elif kind is GateKind.CNOT:
        _apply_cnot(view, width, op.wires[0], op.wires[1])
    elif kind is GateKind.CP:
        _apply_cp(view, width, op.wires[0], op.wires[1], rotation_angle(op.phase_exponent))
    elif kind is GateKind.EPR:
        _apply_h(view, width, op.wires[0])
        _apply_cnot(view, width, op.wires[0], op.wires[1])
    elif kind is GateKind.MEASURE:
        rng = np.random.default_rng((state.seed, op_index))
        state.classical_bits[op.bit] = _measure(view, width, op.wires[0], rng)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown op kind {kind}")
    return state


def run(
    program: Circuit | DistributedCircuit | LoweredProgram,
    input_state: StateVector | None = None,
    seed: int | None = None,
    max_qubits: int = DEFAULT_QUBIT_CAP,
    validate: bool = False,
) -> StateVector:
    """Execute a circuit or lowered program on the logical register.

    The program's output permutation (the decoder's swap network) is
    realized as a classical index remap at state ingestion. Channel
    wires of a lowered program are appended in |0>, and at the end the
    logical register is read back out: relocated qubits are remapped
    home classically and the channel is projected onto |00>, which the
    protocol corrections guarantee up to numerical error.
    """
    if isinstance(program, DistributedCircuit):
        program = program.flatten()
    if isinstance(program, Circuit):
        ops = circuit_to_prims(program)
        n_logical = program.layout.total_qubits
        perm = program.output_permutation
        final_wires: tuple[int, ...] = tuple(range(n_logical))
        width = n_logical
    else:
        ops = program.ops
        n_logical = program.layout.total_qubits
        perm = program.output_permutation
        final_wires = program.final_wires
        width = program.width
    _check_width(width, max_qubits)

    if input_state is None:
        input_state = StateVector.zero(n_logical, max_qubits=max_qubits)
    if input_state.n != n_logical:
        raise ValueError(f"input has {input_state.n} wires, program expects {n_logical}")
    amps = input_state.amplitudes
    if perm is not None and tuple(perm) != tuple(range(n_logical)):
        amps = apply_wire_permutation(amps, tuple(perm))
    if width > n_logical:
        extended = np.zeros(2**width, dtype=np.complex128)
        extended[: 2**n_logical] = amps
        amps = extended
    else:
        amps = amps.copy()

    state = StateVector(amps, seed=input_state.seed if seed is None else seed)
    for index, op in enumerate(ops):
        apply(state, op, op_index=index)
        if validate and abs(state.norm() - 1.0) > 1e-12:
            raise DegenerateStateError(f"norm drifted to {state.norm()} after op {index}")

    amps = state.amplitudes
    if tuple(final_wires) != tuple(range(n_logical)):
        # bring relocated logical qubits home before dropping the channel
        full = list(range(width))
        for logical, physical in enumerate(final_wires):
            full[physical] = logical
            if physical != logical:
                full[logical] = physical
        amps = apply_wire_permutation(amps, tuple(full))
    if width > n_logical:
        logical_amps = amps[: 2**n_logical].copy()
        residue = 1.0 - float(np.real(np.vdot(logical_amps, logical_amps)))
        if residue > 1e-9:
            raise DegenerateStateError(
                f"channel wires hold weight {residue}; corrections failed to disentangle them"
            )
        amps = logical_amps
    out = StateVector(amps, classical_bits=dict(state.classical_bits), seed=state.seed)
    if abs(out.norm() - 1.0) > 1e-9:
        raise DegenerateStateError(f"final norm {out.norm()} is not 1")
    return out
