"""
Command-line surface.

    python mpe_cli.py compile data/networks/ab.json
    python mpe_cli.py mpe data/networks/ab.json A=a
    python mpe_cli.py sensitivity data/networks/ab.json --format report
    python mpe_cli.py retract data/networks/ab.json --evidence "A=a B=b_bar"
    python mpe_cli.py check data/networks/ab.json --random 20 --seed 7
"""
import argparse
import os
import sys
from dataclasses import dataclass

import pandas as pd

from check_suite import INTERVAL_SAMPLES, random_cases, run_checks
from circuit_compiler import circuit_stats, compile_circuit
from circuit_engine import evaluate_max, extract_mpe
from data.network_format import format_evidence, parse_evidence, read_evidence, read_network
from data.report_format import dump_document, dump_report, retraction_document
from model import NetworkFormatError, NetworkValidationError, UnknownReferenceError
from oracle import EnumerationGuardError
from sensitivity_engine import (
    family_k_frame,
    rank_parameters,
    retraction_frame,
    sensitivity_report,
)

# -------------------------
# CONFIG
# -------------------------
SUBCOMMANDS = ("compile", "mpe", "sensitivity", "retract", "check")
FORMATS = ("table", "report")

DEFAULT_FORMAT = os.getenv("MPE_FORMAT", "table")
DEFAULT_SEED = int(os.getenv("MPE_SEED", "0"))

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CHECK_FAILED = 2


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    network: str
    evidence_tokens: tuple = ()
    output_format: str = DEFAULT_FORMAT
    seed: int = DEFAULT_SEED
    guard: int | None = None
    random_networks: int = 0
    interval_samples: int = INTERVAL_SAMPLES


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _table(frame: pd.DataFrame) -> str:
    if frame.empty:
        return "(none)"
    return frame.to_string(index=False, float_format=_fmt)


def _status(message: str, err):
    print(message, file=err)


# -------------------------
# SUBCOMMANDS
# -------------------------
def _evidence(config: CliConfig, net):
    tokens = []
    for token in config.evidence_tokens:
        if token.startswith("@"):
            tokens.extend(f"{k}={v}" for k, v in read_evidence(token[1:], net).items)
        else:
            tokens.append(token)
    return parse_evidence(tokens, net)


def _compile(config, net, out, err) -> int:
    circuit = compile_circuit(net)
    stats = circuit_stats(circuit)
    if config.output_format == "report":
        out.write(dump_document({"network": net.name, "circuit": stats}))
    else:
        frame = pd.DataFrame(
            [{"Statistic": key, "Value": " ".join(value) if isinstance(value, list) else value}
             for key, value in stats.items()]
        )
        print(_table(frame), file=out)
    if not stats["decomposable"]:
        _status(f"⚠️ Circuit for {net.name} has non-decomposable multiplications", err)
    return EXIT_OK


def _mpe(config, net, e, out) -> int:
    circuit = compile_circuit(net)
    result = extract_mpe(circuit, evaluate_max(circuit, e))
    witness = result.witness.as_dict()
    if config.output_format == "report":
        out.write(dump_document({
            "network": net.name,
            "evidence": {name: e.get(name) for name in net.names if name in e},
            "mpe": {
                "witness": {name: witness[name] for name in net.names},
                "probability": result.probability,
            },
        }))
    else:
        frame = pd.DataFrame([{"Variable": name, "Value": witness[name]} for name in net.names])
        print(_table(frame), file=out)
        print(f"MPE probability: {_fmt(result.probability)}", file=out)
    return EXIT_OK


def _sensitivity(config, net, e, out) -> int:
    report = sensitivity_report(compile_circuit(net), e)
    if config.output_format == "report":
        out.write(dump_report(report))
        return EXIT_OK

    print(f"MPE: {format_evidence(report.mpe.witness, net)}  (p = {_fmt(report.mpe.probability)})", file=out)
    print("\nParameters (closest to changing the MPE first):", file=out)
    print(_table(rank_parameters(report)), file=out)
    print("\nk(e,u) per family:", file=out)
    print(_table(family_k_frame(report)), file=out)
    flagged = [ref.label() for ref, interval in report.intervals.items() if interval.uniform_redistribution]
    if flagged:
        print(f"\nUniform redistribution used for: {', '.join(flagged)}", file=out)
    return EXIT_OK


def _retract(config, net, e, out) -> int:
    report = sensitivity_report(compile_circuit(net), e)
    if config.output_format == "report":
        out.write(dump_document(retraction_document(report)))
        return EXIT_OK

    print(f"MPE: {format_evidence(report.mpe.witness, net)}  (p = {_fmt(report.mpe.probability)})", file=out)
    print("\nMPE probability after retracting each variable:", file=out)
    print(_table(retraction_frame(report)), file=out)
    verdicts = pd.DataFrame([
        {
            "Variable": name,
            "Verdict": verdict.value,
            "WitnessAfterRetraction": format_evidence(report.retracted[name].witness, net),
            "MpeProbability": report.retracted[name].probability,
        }
        for name, verdict in report.verdicts.items()
    ])
    print("\nRetraction verdicts:", file=out)
    print(_table(verdicts), file=out)
    multiplicity = pd.DataFrame(
        [{"Variable": name, "Value": value} for name, value in report.multiplicity.items()]
    )
    print("\nUnset variables (forced value or multiple):", file=out)
    print(_table(multiplicity), file=out)
    return EXIT_OK


def _check(config, net, e, out, err) -> int:
    cases = [(net.name, net, e)]
    if config.random_networks:
        _status(f"🔎 Generating {config.random_networks} random networks (seed {config.seed})", err)
        cases.extend(random_cases(config.random_networks, config.seed))

    results_df = run_checks(
        cases,
        interval_samples=config.interval_samples,
        seed=config.seed,
        guard=config.guard,
        verbose=True,
    )
    passed = int(results_df["Passed"].sum())
    failed = len(results_df) - passed

    if config.output_format == "report":
        records = [
            {key: value.item() if hasattr(value, "item") else value for key, value in row.items()}
            for row in results_df.to_dict(orient="records")
        ]
        out.write(dump_document({"cases": records}))
    else:
        print(_table(results_df), file=out)

    _status(f"Check complete. Passed={passed}, Failed={failed}", err)
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


# -------------------------
# ENTRY POINTS
# -------------------------
def run_cli(config: CliConfig, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr

    try:
        net = read_network(config.network)
    except FileNotFoundError:
        _status(f"❌ Network file not found: {config.network}", err)
        return EXIT_INPUT_ERROR
    except NetworkFormatError as e:
        _status(f"❌ Could not parse {config.network}: {e}", err)
        return EXIT_INPUT_ERROR
    except NetworkValidationError as e:
        _status("❌ Network failed validation:\n" + "\n".join(f"  {v}" for v in e.violations), err)
        return EXIT_INPUT_ERROR

    try:
        e = _evidence(config, net)
    except FileNotFoundError as ex:
        _status(f"❌ Evidence file not found: {ex.filename}", err)
        return EXIT_INPUT_ERROR
    except NetworkFormatError as ex:
        _status(f"❌ Could not parse evidence: {ex}", err)
        return EXIT_INPUT_ERROR
    except UnknownReferenceError as ex:
        _status(f"❌ Evidence refers to the network incorrectly: {ex}", err)
        return EXIT_INPUT_ERROR

    try:
        if config.subcommand == "compile":
            return _compile(config, net, out, err)
        if config.subcommand == "mpe":
            return _mpe(config, net, e, out)
        if config.subcommand == "sensitivity":
            return _sensitivity(config, net, e, out)
        if config.subcommand == "retract":
            return _retract(config, net, e, out)
        if config.subcommand == "check":
            return _check(config, net, e, out, err)
    except EnumerationGuardError as ex:
        _status(f"❌ Enumeration guard exceeded: {ex}", err)
        return EXIT_INPUT_ERROR

    raise ValueError(f"Unknown subcommand: {config.subcommand}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpe_cli",
        description="MPE computation, parameter robustness and evidence retraction over compiled circuits.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("network", help="Network document (JSON)")
    parser.add_argument("evidence", nargs="*", help="Evidence tokens Var=value")
    parser.add_argument(
        "--evidence", dest="evidence_flag", action="append", default=[],
        help="Evidence tokens (quoted, space separated) or @path to an evidence file",
    )
    parser.add_argument("--format", dest="output_format", choices=FORMATS, default=DEFAULT_FORMAT)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--random", dest="random_networks", type=int, default=0,
                        help="Also check N random networks (check only)")
    parser.add_argument("--guard", type=int, default=None,
                        help="Largest instantiation space the oracle may enumerate")
    parser.add_argument("--samples", dest="interval_samples", type=int, default=INTERVAL_SAMPLES,
                        help="Inside/outside samples per parameter interval (check only)")
    return parser


def parse_config(argv=None) -> CliConfig:
    args = build_parser().parse_args(argv)
    return CliConfig(
        subcommand=args.subcommand,
        network=args.network,
        evidence_tokens=tuple(args.evidence) + tuple(args.evidence_flag),
        output_format=args.output_format,
        seed=args.seed,
        guard=args.guard,
        random_networks=args.random_networks,
        interval_samples=args.interval_samples,
    )


def main(argv=None):
    sys.exit(run_cli(parse_config(argv)))


if __name__ == "__main__":
    main()
