"""Distributed inverse-Fourier workbench.

Synthesis of the decoder over node grids, significance-threshold
pruning, lowering of node-spanning gates to entanglement protocols,
exact statevector execution, and the resource/accuracy sweeps built on
top of them.
"""
from .circuit import (
    AddressingError,
    Circuit,
    Gate,
    GateKind,
    InvalidDistanceError,
    NodeLayout,
    QubitRef,
    bit_reversal_permutation,
    cross_node_angle,
    global_index,
    rotation_angle,
)
from .lowering import (
    CapacityError,
    CatSession,
    CommOpsPolicy,
    LoweredProgram,
    PrimOp,
    ResourceLedger,
    count_teledata_ledger,
    count_telegate_ledger,
    epr_per_node,
    lower_teledata,
    lower_telegate,
)
from .metrics import (
    MetricsReport,
    UndefinedRatioError,
    communication_overhead,
    coupling_ratio,
    fidelity,
    infidelity_bound,
    phase_deficit,
)
from .simulator import StateVector, apply, prepare_fourier_state, run
from .synth import (
    CommBlock,
    DistributedCircuit,
    InvalidToleranceError,
    PruneSpec,
    build_distributed_iqft,
    build_monolithic_iqft,
    communication_horizon,
    invert_horizon,
    prune_block,
    threshold_from_epsilon,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
