"""Command-line driver.

Subcommands: fidelity, epr, eta, epsilon, gamma (each writes one CSV to
the output directory) and verify (exhaustive small-register check).
Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, SweepConfig, run_sweep_command, run_verification


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"ranges look like LO:HI, got {text!r}") from exc
    return lo, hi


def _parse_thresholds(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "exact":
            out.append("exact")
        else:
            try:
                out.append(int(part))
            except ValueError as exc:
                raise ConfigError(f"thresholds are 'exact' or integers, got {part!r}") from exc
    return tuple(out)


def _parse_epsilons(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"epsilon list must be floats, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of SweepConfig fields; flags override it")
    common.add_argument("--p-range", type=_parse_range, metavar="LO:HI", help="node-count grid")
    common.add_argument("--q-range", type=_parse_range, metavar="LO:HI", help="qubits-per-node grid")
    common.add_argument("--thresholds", type=_parse_thresholds, metavar="LIST",
                        help="comma list of heatmap prune levels, e.g. exact,7,3")
    common.add_argument("--epsilon", type=_parse_epsilons, metavar="LIST",
                        help="comma list of tolerances (fidelity sweep derives thresholds from them)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--protocol", choices=["telegate", "teledata"], help="lowering strategy")
    common.add_argument("--gamma-denominator", choices=["remote-cp", "all-cp"],
                        help="logical-gate count dividing the overhead")
    common.add_argument("--out-dir", help="directory receiving CSVs")
    common.add_argument("--max-qubits", type=int, help="statevector width cap")

    parser = argparse.ArgumentParser(
        prog="diqft",
        description="Distributed inverse-Fourier workbench: sweeps, heatmaps, and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fid = sub.add_parser("fidelity", parents=[common],
                         help="simulated infidelity vs pruning threshold")
    fid.add_argument("--qubits", type=int, help="register size of the study")
    fid.add_argument("--t-range", type=_parse_range, metavar="LO:HI", help="threshold sweep range")
    sub.add_parser("epr", parents=[common], help="per-node entanglement-pair heatmap (counting only)")
    sub.add_parser("eta", parents=[common], help="remote/local CP ratio heatmap (counting only)")
    sub.add_parser("epsilon", parents=[common], help="achievable error exponent per (horizon, capacity)")
    sub.add_parser("gamma", parents=[common], help="communication-overhead heatmap (counting only)")
    ver = sub.add_parser("verify", parents=[common], help="exhaustive equivalence check on small registers")
    ver.add_argument("--max-register", type=int, help="largest total register to check")
    return parser


def _config_from_args(args: argparse.Namespace) -> SweepConfig:
    config = SweepConfig.from_json(args.config) if args.config else SweepConfig()
    overrides = dict(
        seed=args.seed,
        protocol=args.protocol,
        gamma_denominator=args.gamma_denominator,
        out_dir=args.out_dir,
        max_qubits=args.max_qubits,
        thresholds=args.thresholds,
        epsilons=args.epsilon,
    )
    if args.p_range:
        overrides.update(p_min=args.p_range[0], p_max=args.p_range[1])
    if args.q_range:
        overrides.update(q_min=args.q_range[0], q_max=args.q_range[1])
    if getattr(args, "qubits", None) is not None:
        overrides.update(fidelity_qubits=args.qubits)
    if getattr(args, "t_range", None):
        overrides.update(fidelity_t_min=args.t_range[0], fidelity_t_max=args.t_range[1])
    if getattr(args, "max_register", None) is not None:
        overrides.update(verify_max_register=args.max_register)
    return config.override(**overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "verify":
            report = run_verification(config)
            print(f"checked {report.checks} configurations")
            if report.failures:
                for failure in report.failures:
                    print(f"FAIL {failure.describe()}")
                print(f"{len(report.failures)} failures")
                return 1
            print("all equivalence and bound checks passed")
            return 0
        path = run_sweep_command(args.command, config)
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
