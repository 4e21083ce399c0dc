"""Accuracy and communication-cost metrics.

Covers state fidelity, the two analytic error curves (last-qubit phase
deficit and the operator-norm infidelity bound), the remote-to-local
coupling ratio, and the protocol overhead ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lowering import LoweredProgram, ResourceLedger
from .synth import DistributedCircuit


class UndefinedRatioError(ValueError):
    """A ratio metric has a zero denominator for this configuration."""


def fidelity(ideal, approx) -> float:
    """Squared inner-product magnitude; invariant under global phase."""
    a = np.asarray(getattr(ideal, "amplitudes", ideal)).reshape(-1)
    b = np.asarray(getattr(approx, "amplitudes", approx)).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def phase_deficit(n: int, threshold: int) -> float:
    """Accumulated rotation the last register qubit loses to pruning:
    pi * (2**-t - 2**-(n-1)), zero once nothing is pruned for it."""
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if threshold >= n - 1:
        return 0.0
    return math.pi * (2.0**-threshold - 2.0 ** -(n - 1))


def infidelity_bound(n: int, threshold: int) -> float:
    """Worst-case infidelity from the pruned-gate inventory.

    Each pruned gate at exponent k moves the state by at most
    2*sin(pi / 2**(k+1)) in operator norm and there are (n - k) such
    gates, so with E the summed displacement the fidelity is at least
    max(0, 1 - E)**2 for every input.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    total = 0.0
    for k in range(threshold + 1, n):
        total += (n - k) * 2.0 * math.sin(math.pi / 2.0 ** (k + 1))
    return 1.0 - max(0.0, 1.0 - total) ** 2


def coupling_ratio(circuit: DistributedCircuit) -> float:
    """Remote CP count over local CP count for a built circuit."""
    return coupling_ratio_from_counts(circuit.local_cp_count(), circuit.remote_cp_count())


def coupling_ratio_from_counts(local_cp: int, remote_cp: int) -> float:
    if local_cp == 0:
        raise UndefinedRatioError("no local CP gates (single-qubit nodes); ratio undefined")
    return remote_cp / local_cp


def communication_overhead(program: LoweredProgram | ResourceLedger, denominator_mode: str = "remote-cp") -> float:
    """Protocol-auxiliary ops per logical CP.

    `denominator_mode` picks the logical gate count: every CP in the
    program ("all-cp") or only the node-spanning ones ("remote-cp").
    """
    ledger = program.ledger if isinstance(program, LoweredProgram) else program
    if denominator_mode == "all-cp":
        denom = ledger.comp_ops_local_cp + ledger.comp_ops_remote_cp
    elif denominator_mode == "remote-cp":
        denom = ledger.comp_ops_remote_cp
    else:
        raise ValueError(f"unknown denominator mode {denominator_mode!r}")
    if denom == 0:
        raise UndefinedRatioError(f"no logical CP gates in {denominator_mode} mode; overhead undefined")
    return ledger.comm_ops / denom


@dataclass(frozen=True)
class MetricsReport:
    """One configuration's metric bundle; infidelity is 1 - fidelity."""

    fidelity: float
    infidelity_bound_operator: float
    phase_deficit_lastqubit: float
    epr_per_node_max: float
    eta: float
    gamma: float
    n_cp_local: int
    n_cp_remote: int

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def build_report(
    *,
    n: int,
    threshold: int | None,
    ideal,
    approx,
    ledger: ResourceLedger,
    denominator_mode: str = "remote-cp",
) -> MetricsReport:
    """Assemble the report for one simulated configuration."""
    fid = fidelity(ideal, approx)
    t_eff = threshold if threshold is not None else n
    return MetricsReport(
        fidelity=fid,
        infidelity_bound_operator=infidelity_bound(n, t_eff),
        phase_deficit_lastqubit=phase_deficit(n, t_eff),
        epr_per_node_max=max(ledger.epr_by_node) if ledger.epr_by_node else 0.0,
        eta=coupling_ratio_from_counts(ledger.comp_ops_local_cp, ledger.comp_ops_remote_cp),
        gamma=communication_overhead(ledger, denominator_mode),
        n_cp_local=ledger.comp_ops_local_cp,
        n_cp_remote=ledger.comp_ops_remote_cp,
    )
