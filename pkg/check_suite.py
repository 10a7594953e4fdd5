"""
Oracle equivalence checks: compile, run every engine pass, and compare
each output with exhaustive enumeration.
"""
import os
import sys

import numpy as np
import pandas as pd

from circuit_compiler import check_decomposability, compile_circuit
from circuit_engine import evaluate_sum, extract_mpe, run_dmaxc
from model import BayesianNetwork, Evidence, ParameterRef, is_compatible, joint_probability
from oracle import Enumeration, brute_force_tables, verify_robustness_interval
from random_networks import random_evidence, random_network
from sensitivity_engine import (
    robustness_interval,
    retraction_table,
    sensitivity_constants,
)

RELATIVE_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-12
INTERVAL_SAMPLES = int(os.getenv("MPE_INTERVAL_SAMPLES", "20"))
CHECK_EVIDENCE = int(os.getenv("MPE_CHECK_EVIDENCE", "3"))
ZERO_FRACTION = float(os.getenv("MPE_ZERO_FRACTION", "0.0"))

RESULT_COLUMNS = [
    "Case",
    "Variables",
    "Width",
    "Nodes",
    "Mpe",
    "Coefficients",
    "K",
    "Retraction",
    "SumEvaluation",
    "Decomposable",
    "Intervals",
    "MaxRelError",
    "Passed",
]


def relative_error(value: float, expected: float) -> float:
    if expected == 0.0:
        return abs(value)
    return abs(value - expected) / abs(expected)


def _worst(engine: dict, oracle: dict) -> float:
    return max((relative_error(engine[key], oracle[key]) for key in oracle), default=0.0)


def family_identity_holds(net: BayesianNetwork, constants, mpe_probability: float) -> bool:
    """MPE_p(e) = max(max_x r(e,xu) theta_x|u, k(e,u)) for every family."""
    if mpe_probability == 0.0:
        return True
    for variable, u in net.families():
        best = constants.k[(variable, u)]
        for value in net.variable(variable).values:
            ref = ParameterRef(variable, value, u)
            best = max(best, constants.r[ref] * net.parameter_value(ref))
        if relative_error(best, mpe_probability) > IDENTITY_TOLERANCE:
            return False
    return True


def check_network(net: BayesianNetwork, e: Evidence = Evidence(), case: str = None,
                  interval_samples: int = INTERVAL_SAMPLES, seed: int = 0, guard: int = None) -> dict:
    circuit = compile_circuit(net)
    state = run_dmaxc(circuit, e)
    mpe = extract_mpe(circuit, state)
    constants = sensitivity_constants(state, circuit)
    table = retraction_table(state, circuit)
    tables = brute_force_tables(net, e, guard)

    errors = {
        "mpe": relative_error(mpe.probability, tables.mpe_probability),
        "witness": relative_error(joint_probability(net, mpe.witness), tables.mpe_probability),
        "r": _worst(constants.r, tables.r),
        "k": _worst(constants.k, tables.k),
        "retraction": _worst(table.entries, tables.retraction),
        "sum": relative_error(evaluate_sum(circuit, e), tables.probability),
    }

    intervals_ok = True
    if interval_samples > 0:
        space = Enumeration.build(net, e, guard)
        for ref in net.parameters():
            interval = robustness_interval(ref, constants, mpe.witness, net)
            check = verify_robustness_interval(net, e, ref, interval, interval_samples, seed=seed, space=space)
            if not check.passed:
                intervals_ok = False
                break

    row = {
        "Case": case or net.name,
        "Variables": len(net.variables),
        "Width": circuit.order.width,
        "Nodes": len(circuit.nodes),
        "Mpe": (
            errors["mpe"] <= RELATIVE_TOLERANCE
            and errors["witness"] <= RELATIVE_TOLERANCE
            and is_compatible(net, e, mpe.witness)
        ),
        "Coefficients": errors["r"] <= RELATIVE_TOLERANCE,
        "K": errors["k"] <= RELATIVE_TOLERANCE and family_identity_holds(net, constants, mpe.probability),
        "Retraction": errors["retraction"] <= RELATIVE_TOLERANCE,
        "SumEvaluation": errors["sum"] <= RELATIVE_TOLERANCE,
        "Decomposable": not check_decomposability(circuit),
        "Intervals": intervals_ok,
        "MaxRelError": max(errors.values()),
    }
    row["Passed"] = all(row[column] for column in RESULT_COLUMNS[4:11])
    return row


def random_cases(n_networks: int, seed: int, n_evidence: int = CHECK_EVIDENCE,
                 zero_fraction: float = ZERO_FRACTION):
    """(case label, network, evidence) triples, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    for i in range(n_networks):
        net = random_network(rng, name=f"random-{seed}-{i}", zero_fraction=zero_fraction)
        for j in range(n_evidence):
            yield f"{net.name}/e{j}", net, random_evidence(rng, net)


def run_checks(cases, interval_samples: int = INTERVAL_SAMPLES, seed: int = 0,
               guard: int = None, verbose: bool = False) -> pd.DataFrame:
    results = []
    for case, net, e in cases:
        row = check_network(net, e, case=case, interval_samples=interval_samples, seed=seed, guard=guard)
        results.append(row)
        if verbose:
            status = "✅" if row["Passed"] else "❌"
            print(
                f"{status} {case}: {row['Variables']} variables, width {row['Width']}, "
                f"{row['Nodes']:,} nodes, max rel. error {row['MaxRelError']:.3g}",
                file=sys.stderr,
            )

    results_df = pd.DataFrame(results, columns=RESULT_COLUMNS)
    if results_df.empty:
        return results_df

    # failures first, then the largest deviations
    results_df = results_df.sort_values(
        by=["Passed", "MaxRelError"],
        ascending=[True, False],
        kind="stable",
    ).reset_index(drop=True)

    return results_df
