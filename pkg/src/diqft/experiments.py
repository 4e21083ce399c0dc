"""Sweep drivers behind the CLI: the fidelity-vs-threshold study, the
four counting heatmaps, and the exhaustive small-register verifier.

Every sweep is a pure function of its config; per-point randomness is
derived from the master seed and the grid coordinates, so reruns are
byte-identical. Counting sweeps never allocate a statevector.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .circuit import NodeLayout
from .lowering import (
    CommOpsPolicy,
    DEFAULT_POLICY,
    GateKind,
    PrimOp,
    count_teledata_ledger,
    count_telegate_ledger,
    lower_teledata,
    lower_telegate,
)
from .metrics import (
    communication_overhead,
    coupling_ratio_from_counts,
    fidelity,
    infidelity_bound,
    phase_deficit,
)
from .simulator import StateVector, prepare_fourier_state, run
from .synth import PruneSpec, build_distributed_iqft, build_monolithic_iqft, count_cp_gates


class ConfigError(ValueError):
    """A sweep configuration is unusable as given."""


@dataclass(frozen=True)
class SweepConfig:
    """Grid ranges, seeds, and policy knobs shared by all commands."""

    p_min: int = 2
    p_max: int = 20
    q_min: int = 2
    q_max: int = 20
    thresholds: tuple = ("exact", 7, 3)
    epsilons: tuple[float, ...] = ()
    seed: int = 0
    protocol: str = "telegate"
    gamma_denominator: str = "remote-cp"
    out_dir: str = "results"
    max_qubits: int = 24
    fidelity_qubits: int = 18
    fidelity_t_min: int = 2
    fidelity_t_max: int = 16
    fidelity_basis_states: int = 64
    fidelity_haar_states: int = 16
    horizon_min: int = 2
    horizon_max: int = 14
    horizon_q_min: int = 2
    horizon_q_max: int = 14
    verify_max_register: int = 10
    verify_seeds: int = 10
    verify_inputs: int = 20

    def __post_init__(self) -> None:
        if self.protocol not in ("telegate", "teledata"):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.gamma_denominator not in ("remote-cp", "all-cp"):
            raise ConfigError(f"unknown gamma denominator {self.gamma_denominator!r}")
        for name in ("p_min", "q_min"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.p_max < self.p_min or self.q_max < self.q_min:
            raise ConfigError("grid ranges must be non-empty")
        for t in self.thresholds:
            if t != "exact" and (not isinstance(t, int) or t < 1):
                raise ConfigError(f"thresholds are 'exact' or integers >= 1, got {t!r}")

    @classmethod
    def from_json(cls, path: str | Path) -> "SweepConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("thresholds", "epsilons"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def override(self, **kwargs) -> "SweepConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _point_seed(*entropy: int) -> int:
    """Stable per-point integer seed from the master seed and coordinates."""
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _haar_state(rng: np.random.Generator, n: int) -> StateVector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v))


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean CSV columns")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str | Path, fieldnames: list[str], rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name in fieldnames))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _threshold_label(t) -> str:
    return "unbounded" if t == "exact" else f"t{t}"


def _count_ledger(config: SweepConfig, layout: NodeLayout, threshold: int | None):
    if config.protocol == "teledata":
        return count_teledata_ledger(layout, threshold)
    return count_telegate_ledger(layout, threshold)


# ---------------------------------------------------------------------------
# fidelity vs threshold (simulating)

def sweep_fidelity(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Max/mean infidelity of the pruned decoder against the exact one
    over a seeded ensemble, next to both analytic curves."""
    n = config.fidelity_qubits
    if n > config.max_qubits:
        raise ConfigError(
            f"fidelity study needs a {n}-wire statevector but the cap is "
            f"{config.max_qubits}; raise --max-qubits or lower the register"
        )
    if config.epsilons:
        from .synth import threshold_from_epsilon

        thresholds = sorted({threshold_from_epsilon(e) for e in config.epsilons})
    else:
        thresholds = list(range(config.fidelity_t_min, config.fidelity_t_max + 1))
    rng = np.random.default_rng(_point_seed(config.seed, n))
    inputs = [
        prepare_fourier_state(int(x), n)
        for x in rng.integers(0, 2**n, size=config.fidelity_basis_states)
    ]
    inputs += [_haar_state(rng, n) for _ in range(config.fidelity_haar_states)]
    exact = build_monolithic_iqft(n)
    references = [run(exact, state, max_qubits=config.max_qubits) for state in inputs]
    rows = []
    for t in thresholds:
        pruned = build_monolithic_iqft(n, PruneSpec.from_threshold(t))
        infidelities = [
            max(0.0, 1.0 - fidelity(ref, run(pruned, state, max_qubits=config.max_qubits)))
            for ref, state in zip(references, inputs)
        ]
        rows.append(
            {
                "threshold": t,
                "simulated_infidelity_max": max(infidelities),
                "simulated_infidelity_mean": sum(infidelities) / len(infidelities),
                "phase_deficit": phase_deficit(n, t),
                "operator_bound": infidelity_bound(n, t),
            }
        )
    names = ["threshold", "simulated_infidelity_max", "simulated_infidelity_mean", "phase_deficit", "operator_bound"]
    return names, rows


# ---------------------------------------------------------------------------
# counting heatmaps

def _grid(config: SweepConfig):
    for nodes in range(config.p_min, config.p_max + 1):
        for q_per in range(config.q_min, config.q_max + 1):
            yield nodes, q_per


def sweep_epr(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Per-node maximum of half-attributed pair counts over the grid."""
    labels = [_threshold_label(t) for t in config.thresholds]
    names = ["qubits_per_node", "nodes"] + [f"epr_{l}" for l in labels]
    rows = []
    for nodes, q_per in _grid(config):
        layout = NodeLayout(nodes, q_per)
        row = {"qubits_per_node": q_per, "nodes": nodes}
        for t, label in zip(config.thresholds, labels):
            ledger = _count_ledger(config, layout, None if t == "exact" else t)
            row[f"epr_{label}"] = max(ledger.epr_by_node)
        rows.append(row)
    return names, rows


def sweep_eta(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Remote-to-local CP ratio over the grid."""
    labels = [_threshold_label(t) for t in config.thresholds]
    names = ["qubits_per_node", "nodes"] + [f"eta_{l}" for l in labels]
    rows = []
    for nodes, q_per in _grid(config):
        layout = NodeLayout(nodes, q_per)
        row = {"qubits_per_node": q_per, "nodes": nodes}
        for t, label in zip(config.thresholds, labels):
            local, remote = count_cp_gates(layout, None if t == "exact" else t)
            row[f"eta_{label}"] = coupling_ratio_from_counts(local, remote)
        rows.append(row)
    return names, rows


def sweep_gamma(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Communication-op overhead per logical CP over the grid."""
    labels = [_threshold_label(t) for t in config.thresholds]
    names = ["qubits_per_node", "nodes"] + [f"gamma_{l}" for l in labels] + ["denominator_mode"]
    rows = []
    for nodes, q_per in _grid(config):
        layout = NodeLayout(nodes, q_per)
        row = {"qubits_per_node": q_per, "nodes": nodes}
        for t, label in zip(config.thresholds, labels):
            ledger = _count_ledger(config, layout, None if t == "exact" else t)
            row[f"gamma_{label}"] = communication_overhead(ledger, config.gamma_denominator)
        row["denominator_mode"] = config.gamma_denominator
        rows.append(row)
    return names, rows


def sweep_epsilon(config: SweepConfig) -> tuple[list[str], list[dict]]:
    """Minimal threshold exponent achievable at each (horizon, capacity)."""
    from .synth import invert_horizon

    names = ["d_max", "Q", "t_min"]
    rows = []
    for d_max in range(config.horizon_min, config.horizon_max + 1):
        for q_per in range(config.horizon_q_min, config.horizon_q_max + 1):
            rows.append({"d_max": d_max, "Q": q_per, "t_min": invert_horizon(q_per, d_max)[0]})
    return names, rows


# ---------------------------------------------------------------------------
# exhaustive small-register verification

@dataclass(frozen=True)
class VerifyFailure:
    nodes: int
    qubits_per_node: int
    threshold: str
    protocol: str
    seed: int
    input_index: int
    check: str
    fidelity: float
    limit: float

    def describe(self) -> str:
        return (
            f"P={self.nodes} Q={self.qubits_per_node} t={self.threshold} "
            f"{self.protocol} seed={self.seed} input={self.input_index} "
            f"{self.check}: {self.fidelity!r} vs limit {self.limit!r}"
        )


@dataclass
class VerifyReport:
    checks: int = 0
    failures: list = None

    def __post_init__(self):
        if self.failures is None:
            self.failures = []

    @property
    def ok(self) -> bool:
        return not self.failures


_FLOOR = 1.0 - 1e-10


def _corrupt_first_remote_cp(program):
    """Test hook: halve the first channel-driven CP angle (k -> k+1)."""
    ops = list(program.ops)
    n = program.layout.total_qubits
    for i, op in enumerate(ops):
        if op.kind is GateKind.CP and any(w >= n for w in op.wires):
            ops[i] = PrimOp(op.kind, op.wires, op.phase_exponent + 1, op.bit, op.condition)
            break
    return replace(program, ops=tuple(ops))


def run_verification(config: SweepConfig, corrupt: bool = False) -> VerifyReport:
    """Check every layout up to the register cap: lowered programs match
    the monolithic circuit at every pruning level, for both protocols,
    across seeds and random inputs, and pruning error stays under the
    operator bound. `corrupt` injects one wrong remote angle as a
    negative control."""
    report = VerifyReport()
    max_n = config.verify_max_register
    corrupted_once = False
    for nodes in range(1, max_n + 1):
        for q_per in range(1, max_n // nodes + 1):
            n = nodes * q_per
            layout = NodeLayout(nodes, q_per)
            rng = np.random.default_rng(_point_seed(config.seed, nodes, q_per))
            inputs = [_haar_state(rng, n) for _ in range(config.verify_inputs)]
            exact_circuit = build_monolithic_iqft(n)
            exact_refs = [run(exact_circuit, s, max_qubits=config.max_qubits) for s in inputs]
            for t in [*range(1, n + 1), "exact"]:
                prune = PruneSpec.exact() if t == "exact" else PruneSpec.from_threshold(t)
                if t == "exact":
                    refs = exact_refs
                else:
                    mono = build_monolithic_iqft(n, prune)
                    refs = [run(mono, s, max_qubits=config.max_qubits) for s in inputs]
                if t != "exact":
                    bound = infidelity_bound(n, t)
                    for i, (ref, exact_ref) in enumerate(zip(refs, exact_refs)):
                        report.checks += 1
                        infid = 1.0 - fidelity(exact_ref, ref)
                        if infid > bound + 1e-12:
                            report.failures.append(
                                VerifyFailure(nodes, q_per, str(t), "(monolithic)", -1, i,
                                              "pruning error above operator bound", 1.0 - infid, bound)
                            )
                dist = build_distributed_iqft(layout, prune)
                for protocol in ("telegate", "teledata"):
                    program = lower_telegate(dist) if protocol == "telegate" else lower_teledata(dist)
                    if corrupt and not corrupted_once and program.ledger.comp_ops_remote_cp:
                        program = _corrupt_first_remote_cp(program)
                        corrupted_once = True
                    for seed_index in range(config.verify_seeds):
                        seed = _point_seed(config.seed, nodes, q_per, 0 if t == "exact" else t,
                                           1 if protocol == "teledata" else 2, seed_index)
                        for i, state in enumerate(inputs):
                            report.checks += 1
                            got = run(program, state, seed=seed, max_qubits=config.max_qubits)
                            fid = fidelity(refs[i], got)
                            if fid < _FLOOR:
                                report.failures.append(
                                    VerifyFailure(nodes, q_per, str(t), protocol, seed_index, i,
                                                  "lowered output differs from monolithic", fid, _FLOOR)
                                )
    return report


# ---------------------------------------------------------------------------
# command wrappers writing CSVs

_SWEEPS = {
    "fidelity": (sweep_fidelity, "fidelity.csv"),
    "epr": (sweep_epr, "epr_per_node.csv"),
    "eta": (sweep_eta, "coupling_ratio.csv"),
    "epsilon": (sweep_epsilon, "error_exponent.csv"),
    "gamma": (sweep_gamma, "communication_overhead.csv"),
}


def run_sweep_command(name: str, config: SweepConfig) -> Path:
    sweep, filename = _SWEEPS[name]
    fieldnames, rows = sweep(config)
    return write_csv(Path(config.out_dir) / filename, fieldnames, rows)
