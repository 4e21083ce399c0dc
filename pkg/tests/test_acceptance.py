"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line. Criteria 6b and 7 are strict expected failures: the
numbers they demand are arithmetically unreachable under the resource
accounting that produces every other reference value (derivations in
the xfail reasons and the README). Their tests assert the criteria
verbatim anyway.
"""
import math

import pytest

from diqft.circuit import NodeLayout
from diqft.experiments import SweepConfig, run_sweep_command, run_verification, sweep_fidelity
from diqft.lowering import count_telegate_ledger
from diqft.metrics import communication_overhead, coupling_ratio_from_counts
from diqft.synth import (
    PruneSpec,
    build_monolithic_iqft,
    communication_horizon,
    count_cp_gates,
    invert_horizon,
    threshold_from_epsilon,
)


def report(number: str, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number} {name}: {status}{suffix}")


def test_criterion_1_threshold_and_horizon_arithmetic():
    checks = [
        threshold_from_epsilon(1e-5) == 17,
        communication_horizon(1e-5, 4) == 5,
        invert_horizon(9, 2) == (10, 2.0**-10),
        invert_horizon(4, 3) == (9, 2.0**-9),
    ]
    report("1", "threshold/horizon arithmetic", all(checks))
    assert all(checks)


def test_criterion_2_gate_count_law():
    ok = True
    for n in range(1, 65):
        ok = ok and build_monolithic_iqft(n).cp_count == n * (n - 1) // 2
    for n in (1, 5, 12, 40, 64):
        for t in (1, 3, 7, 20, n):
            oracle = sum(1 for j in range(n) for i in range(j + 1, n) if i - j <= t)
            law = sum(n - k for k in range(1, min(t, n - 1) + 1))
            built = build_monolithic_iqft(n, PruneSpec.from_threshold(t)).cp_count
            ok = ok and built == oracle == law
    report("2", "gate count law", ok)
    assert ok


def test_criterion_3_distributed_equals_monolithic():
    config = SweepConfig()  # register cap 10, both protocols, 10 seeds x 20 inputs
    result = run_verification(config)
    detail = f"{result.checks} checks, {len(result.failures)} failures"
    report("3", "distributed = monolithic under both protocols", result.ok, detail)
    for failure in result.failures[:20]:
        print("   ", failure.describe())
    assert result.ok


@pytest.fixture(scope="module")
def fidelity_rows():
    # n=18, t in [2,16], 64 phase-encoded + 16 Haar inputs
    _, rows = sweep_fidelity(SweepConfig())
    return rows


def test_criterion_4_fidelity_bound_at_eighteen_qubits(fidelity_rows):
    maxes = {row["threshold"]: row["simulated_infidelity_max"] for row in fidelity_rows}
    dominance = all(
        row["simulated_infidelity_max"] <= row["operator_bound"] + 1e-15 for row in fidelity_rows
    )
    monotone = all(maxes[t + 1] < maxes[t] for t in range(2, 16))
    suppression = maxes[4] / maxes[10]
    ok = dominance and monotone and suppression >= 1e3
    report("4", "fidelity bound and decay at n=18", ok,
           f"monotone={monotone}, infid(4)/infid(10)={suppression:.1f}")
    assert dominance
    assert monotone
    assert suppression >= 1e3


def test_exponential_decay_invariant_at_eighteen_qubits(fidelity_rows):
    # two threshold steps cut the worst-case error by well over half
    maxes = {row["threshold"]: row["simulated_infidelity_max"] for row in fidelity_rows}
    for t in range(3, 12):
        assert maxes[t] / maxes[t + 2] > 2


def test_criterion_5_epr_saturation():
    ok = True
    for nodes in range(2, 21):
        for q_per in range(2, 21):
            ledger = count_telegate_ledger(NodeLayout(nodes, q_per), None)
            ok = ok and max(ledger.epr_by_node) == q_per * (nodes - 1) / 2
            for t in (7, 3):
                peak = max(count_telegate_ledger(NodeLayout(nodes, q_per), t).epr_by_node)
                if nodes >= 2 * math.ceil(t / q_per) + 1:
                    ok = ok and peak == t
                else:
                    ok = ok and peak <= t
    report("5", "per-node pair count saturates at the threshold", ok)
    assert ok


def test_criterion_6a_coupling_ratio_closed_form():
    ok = True
    for nodes in range(2, 21):
        for q_per in range(2, 21):
            local, remote = count_cp_gates(NodeLayout(nodes, q_per), None)
            eta = coupling_ratio_from_counts(local, remote)
            ok = ok and math.isclose(eta, q_per * (nodes - 1) / (q_per - 1), rel_tol=1e-12)
    local, remote = count_cp_gates(NodeLayout(19, 2), None)
    ok = ok and coupling_ratio_from_counts(local, remote) == 36.0
    report("6a", "unpruned coupling ratio closed form", ok)
    assert ok


def test_coupling_ratio_monotone_and_convergent_in_nodes():
    # the valid half of the convergence claim: eta never decreases with P
    # and approaches its distance-sum limit
    for t in (3, 7):
        for q_per in (2, 5, 11, 20):
            previous = None
            values = []
            for nodes in range(2, 21):
                local, remote = count_cp_gates(NodeLayout(nodes, q_per), t)
                eta = coupling_ratio_from_counts(local, remote)
                if previous is not None:
                    assert eta >= previous
                previous = eta
                values.append(eta)
            # tail increments shrink as 1/(P(P-1))
            tail = [values[i + 1] - values[i] for i in range(len(values) - 4, len(values) - 1)]
            assert tail == sorted(tail, reverse=True)


@pytest.mark.xfail(
    strict=True,
    reason="arithmetically unreachable: eta(P) - eta(P-1) = S/(L*P*(P-1)) with S the "
    "distance-weighted surviving remote gate count; at Q=2, t=7 this is 28/(P*(P-1)), "
    "still 0.074 at P=20 >= 4*d_max=16. 27 grid points violate the stated 0.05 bound. "
    "See notes/decisions ledger.",
)
def test_criterion_6b_coupling_ratio_convergence_rate():
    def horizon_of(threshold: int, q_per: int) -> int:
        return (threshold - 1) // q_per + 1

    violations = []
    for t in (3, 7):
        for q_per in range(2, 21):
            previous = None
            for nodes in range(2, 21):
                local, remote = count_cp_gates(NodeLayout(nodes, q_per), t)
                eta = coupling_ratio_from_counts(local, remote)
                if previous is not None:
                    assert eta >= previous  # non-decreasing part holds
                    if nodes >= 4 * horizon_of(t, q_per) and abs(eta - previous) >= 0.05:
                        violations.append((t, q_per, nodes, abs(eta - previous)))
                previous = eta
    report("6b", "coupling ratio increment bound past 4*d_max", not violations,
           f"{len(violations)} grid points exceed 0.05; worst {max(v[3] for v in violations):.3f}"
           if violations else "")
    assert not violations


@pytest.mark.xfail(
    strict=True,
    reason="arithmetically unreachable under per-session auxiliary-op accounting (the "
    "accounting that yields the 3.5 reference value and threshold-capped pair counts): "
    "gamma = 7 * sessions / remote gates = 7/Q in exact mode, 0.35 at Q=20, outside "
    "[3.5, 7]; the t-spread reaches 10x. See notes/decisions ledger.",
)
def test_criterion_7_gamma_stability():
    range_violations = []
    ratio_violations = []
    for nodes in range(2, 21):
        for q_per in range(2, 21):
            gammas = []
            for t in (None, 7, 3):
                ledger = count_telegate_ledger(NodeLayout(nodes, q_per), t)
                gammas.append(communication_overhead(ledger, "remote-cp"))
            for value in gammas:
                if not 3.5 <= value <= 7.0:
                    range_violations.append((nodes, q_per, value))
            if max(gammas) / min(gammas) > 2.0:
                ratio_violations.append((nodes, q_per))
    ok = not range_violations and not ratio_violations
    report("7", "overhead ratio stability", ok,
           f"{len(range_violations)} values outside [3.5, 7], "
           f"{len(ratio_violations)} grid points with spread > 2x")
    assert ok


def test_criterion_8_byte_identical_reruns(tmp_path):
    ok = True
    for command, config in [
        ("epr", SweepConfig(p_min=2, p_max=8, q_min=2, q_max=8, seed=11)),
        ("eta", SweepConfig(p_min=2, p_max=8, q_min=2, q_max=8, seed=11)),
        ("gamma", SweepConfig(p_min=2, p_max=8, q_min=2, q_max=8, seed=11)),
        ("epsilon", SweepConfig(seed=11)),
        ("fidelity", SweepConfig(fidelity_qubits=6, fidelity_t_min=2, fidelity_t_max=5,
                                 fidelity_basis_states=4, fidelity_haar_states=2, seed=11)),
    ]:
        first = run_sweep_command(command, config.override(out_dir=str(tmp_path / command / "a")))
        second = run_sweep_command(command, config.override(out_dir=str(tmp_path / command / "b")))
        ok = ok and first.read_bytes() == second.read_bytes()
    report("8", "byte-identical reruns", ok)
    assert ok
