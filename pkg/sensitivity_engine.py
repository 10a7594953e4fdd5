import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from circuit_compiler import ArithmeticCircuit
from circuit_engine import EvaluationState, MpeResult, evaluate_max, extract_mpe, run_dmaxc
from model import BayesianNetwork, Evidence, Instantiation, ParameterRef, family_label, joint_probability

TIE_TOLERANCE = 1e-12
MULTIPLE = "multiple"
K_LABEL = "k(e,u)"
DOMAIN_LABEL = "domain"


class Verdict(Enum):
    PRESERVED_STRICTLY = "identity-preserved-strictly"
    ENLARGED = "identity-enlarged"
    CHANGES = "identity-changes"


def is_tie(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TIE_TOLERANCE, abs_tol=0.0)


@dataclass(frozen=True)
class SensitivityConstants:
    r: dict  # ParameterRef -> r(e, xu)
    k: dict  # (variable, u) -> k(e, u)


@dataclass(frozen=True)
class RobustnessInterval:
    parameter: ParameterRef
    witness: Instantiation
    current: float
    lower: float
    upper: float
    lower_binding: str
    upper_binding: str
    branch: str  # "self", "sibling" or "other-parents"
    tie: bool = False
    uniform_redistribution: bool = False


@dataclass(frozen=True)
class UncoupledThreshold:
    parameter: ParameterRef
    r: float
    k: float
    threshold: float | None
    side: str  # "above", "below" or "tie"


@dataclass(frozen=True)
class RetractionTable:
    entries: dict  # (variable, value) -> MPE_p(e - X, x)
    mpe_probability: float

    def entry(self, variable: str, value: str) -> float:
        return self.entries[(variable, value)]

    def values_of(self, variable: str) -> dict:
        return {value: p for (name, value), p in self.entries.items() if name == variable}


@dataclass
class SensitivityReport:
    network: BayesianNetwork
    evidence: Evidence
    mpe: MpeResult
    constants: SensitivityConstants
    intervals: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    retraction: RetractionTable | None = None
    verdicts: dict = field(default_factory=dict)
    multiplicity: dict = field(default_factory=dict)
    retracted: dict = field(default_factory=dict)  # evidence variable -> MpeResult under e - X


# ===============================================================
# 📐 CONSTANTS r(e, xu) AND k(e, u)
# ===============================================================
def parameter_coefficient_map(state: EvaluationState, circuit: ArithmeticCircuit) -> dict:
    if state.r is None:
        raise ValueError("Evaluation state has no registers; run run_dmaxc first")
    return {ref: float(state.r[circuit.parameter_leaves[ref]]) for ref in circuit.network.parameters()}


def parent_k_map(r_map: dict, net: BayesianNetwork) -> dict:
    """k(e,u) = max over x and u* != u of r(e,xu*) * theta_x|u*; 0 for roots."""
    k_map = {}
    for variable in net.variables:
        rows = net.parent_instantiations(variable.name)
        best = []
        for u in rows:
            best.append(max(
                r_map[ParameterRef(variable.name, value, u)] * net.parameter_value(ParameterRef(variable.name, value, u))
                for value in variable.values
            ))
        # the max over "every other row" only needs the two largest rows
        ranked = sorted(range(len(rows)), key=lambda i: best[i], reverse=True)
        for i, u in enumerate(rows):
            others = [best[j] for j in ranked[:2] if j != i]
            k_map[(variable.name, u)] = others[0] if others else 0.0
    return k_map


def sensitivity_constants(state: EvaluationState, circuit: ArithmeticCircuit) -> SensitivityConstants:
    r_map = parameter_coefficient_map(state, circuit)
    return SensitivityConstants(r=r_map, k=parent_k_map(r_map, circuit.network))


# ===============================================================
# 🔁 CO-VARIATION
# ===============================================================
def covariation_weights(row, x: int):
    """
    Share of the freed mass 1 - t each other value receives: proportional
    to its current value, uniform when all others are 0.
    """
    others = [j for j in range(len(row)) if j != x]
    rest = math.fsum(row[j] for j in others)
    weights = [0.0] * len(row)
    if rest == 0.0:
        for j in others:
            weights[j] = 1.0 / len(others)
        return weights, True
    for j in others:
        weights[j] = row[j] / rest
    return weights, False


def apply_covariation(row, x: int, t: float) -> tuple:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"New parameter value must lie in [0, 1], got {t}")
    weights, _ = covariation_weights(row, x)
    return tuple(t if j == x else (1.0 - t) * weights[j] for j in range(len(row)))


# ===============================================================
# 🛡️ ROBUSTNESS INTERVALS
# ===============================================================
def _excluded_product(net: BayesianNetwork, witness: Instantiation, variable: str) -> float:
    """Witness probability with the parameter of `variable`'s CPT left out."""
    values = witness.as_dict()
    product = 1.0
    for cpt in net.cpts:
        if cpt.child == variable:
            continue
        u = tuple((p, values[p]) for p in cpt.parents)
        product *= net.parameter_value(ParameterRef(cpt.child, values[cpt.child], u))
    return product


def _scales_with_rest(line) -> bool:
    slope, intercept = line
    return slope == -intercept and intercept != 0.0


def _branch_line(r: float, weight: float, own: bool):
    # value of a branch as (slope, intercept) in the new parameter value t
    if own:
        return (r, 0.0)
    return (-r * weight, r * weight)


def robustness_interval(param: ParameterRef, constants: SensitivityConstants,
                        witness: Instantiation, net: BayesianNetwork) -> RobustnessInterval:
    """
    Closed interval of new values t for theta_x|u (others in the row
    co-varying proportionally) on which the witness stays an MPE solution.
    """
    variable = net.variable(param.variable)
    u = param.parents
    row = net.row(param.variable, u)
    i = variable.values.index(param.value)
    weights, uniform = covariation_weights(row, i)
    current = row[i]

    def label(j):
        return ParameterRef(param.variable, variable.values[j], u).label()

    def line(j, r_value):
        return _branch_line(r_value, weights[j], own=(j == i))

    r = [constants.r[ParameterRef(param.variable, value, u)] for value in variable.values]
    k = constants.k[(param.variable, u)]
    assigned = witness.as_dict()

    if all(assigned[p] == value for p, value in u):
        j0 = variable.values.index(assigned[param.variable])
        branch = "self" if j0 == i else "sibling"
        excluded = _excluded_product(net, witness, param.variable)
        own = line(j0, excluded)
        competitors = [(label(j), line(j, r[j])) for j in range(len(r)) if j != j0]
        if r[j0] > excluded and not is_tie(r[j0], excluded):
            # only when MPE_p(e) = 0: another instantiation of the witness's cell scores higher
            competitors.append((label(j0), line(j0, r[j0])))
        competitors.append((K_LABEL, (0.0, k)))
    else:
        branch = "other-parents"
        own = (0.0, joint_probability(net, witness))
        competitors = [(label(j), line(j, r[j])) for j in range(len(r))]

    lower, upper = 0.0, 1.0
    lower_binding = upper_binding = DOMAIN_LABEL
    tie = False
    own_now = own[0] * current + own[1]

    for name, (slope, intercept) in competitors:
        a = own[0] - slope
        b = own[1] - intercept
        if a == 0.0:
            continue
        if _scales_with_rest(own) and _scales_with_rest((slope, intercept)):
            # both sides vanish at t = 1: the witness is ahead on all of [0, 1] or only at t = 1
            if own[1] >= intercept or is_tie(own[1], intercept):
                continue
            bound = 1.0
        else:
            bound = -b / a
        if own_now > 0.0 and is_tie(own_now, slope * current + intercept):
            tie = True
        if a > 0 and bound > lower:
            lower, lower_binding = bound, name
        elif a < 0 and bound < upper:
            upper, upper_binding = bound, name

    lower = min(max(lower, 0.0), current)
    upper = max(min(upper, 1.0), current)
    return RobustnessInterval(
        parameter=param,
        witness=witness,
        current=current,
        lower=lower,
        upper=upper,
        lower_binding=lower_binding if lower > 0.0 else DOMAIN_LABEL,
        upper_binding=upper_binding if upper < 1.0 else DOMAIN_LABEL,
        branch=branch,
        tie=tie,
        uniform_redistribution=uniform,
    )


def uncoupled_threshold(param: ParameterRef, constants: SensitivityConstants,
                        net: BayesianNetwork) -> UncoupledThreshold:
    """
    theta_x|u moved alone (no co-variation): the MPE identity changes only
    at k(e,xu) / r(e,xu), where k(e,xu) = MPE_p(e, not xu).
    """
    variable = net.variable(param.variable)
    siblings = [
        constants.r[ParameterRef(param.variable, value, param.parents)]
        * net.parameter_value(ParameterRef(param.variable, value, param.parents))
        for value in variable.values
        if value != param.value
    ]
    k_xu = max([constants.k[param.family]] + siblings)
    r_xu = constants.r[param]
    own = r_xu * net.parameter_value(param)

    if own > 0.0 and is_tie(own, k_xu):
        side = "tie"
    elif own > k_xu:
        side = "above"
    elif own < k_xu:
        side = "below"
    else:
        side = "tie"
    return UncoupledThreshold(
        parameter=param,
        r=r_xu,
        k=k_xu,
        threshold=k_xu / r_xu if r_xu > 0.0 else None,
        side=side,
    )


def change_margin(interval: RobustnessInterval) -> float | None:
    """Smallest move of the parameter that reaches a change in MPE identity."""
    candidates = []
    if interval.lower > 0.0:
        candidates.append(interval.current - interval.lower)
    if interval.upper < 1.0:
        candidates.append(interval.upper - interval.current)
    return min(candidates) if candidates else None


# ===============================================================
# ↩️ EVIDENCE RETRACTION
# ===============================================================
def retraction_table(state: EvaluationState, circuit: ArithmeticCircuit) -> RetractionTable:
    if state.r is None:
        raise ValueError("Evaluation state has no registers; run run_dmaxc first")
    entries = {}
    for variable in circuit.network.variables:
        for value in variable.values:
            entries[(variable.name, value)] = float(state.r[circuit.indicator_leaves[(variable.name, value)]])
    return RetractionTable(entries=entries, mpe_probability=state.root_value)


def retraction_verdict(table: RetractionTable, e: Evidence, variable: str) -> Verdict:
    if variable not in e:
        raise ValueError(f"Variable {variable} is not set in the evidence")
    observed = e.get(variable)
    mpe_p = table.mpe_probability
    rivals = [p for value, p in table.values_of(variable).items() if value != observed]

    if any(p > mpe_p and not is_tie(p, mpe_p) for p in rivals):
        return Verdict.CHANGES
    if any(is_tie(p, mpe_p) for p in rivals):
        return Verdict.ENLARGED
    return Verdict.PRESERVED_STRICTLY


def retraction_analysis(table: RetractionTable, e: Evidence) -> dict:
    return {name: retraction_verdict(table, e, name) for name in e.variables}


def forced_value(table: RetractionTable, e: Evidence, variable: str) -> str:
    if variable in e:
        raise ValueError(f"Variable {variable} is set in the evidence")
    entries = table.values_of(variable)
    best = max(entries.values())
    tying = [value for value, p in entries.items() if p == best or is_tie(p, best)]
    return tying[0] if len(tying) == 1 else MULTIPLE


def mpe_multiplicity(table: RetractionTable, e: Evidence) -> dict:
    names = []
    for name, _ in table.entries:
        if name not in names and name not in e:
            names.append(name)
    return {name: forced_value(table, e, name) for name in names}


def retracted_mpe(circuit: ArithmeticCircuit, e: Evidence, variable: str) -> MpeResult:
    """MPE witness after retracting `variable` (one extra maximizer pass)."""
    retracted = e.without(variable)
    return extract_mpe(circuit, evaluate_max(circuit, retracted))


# ===============================================================
# 📋 FULL REPORT
# ===============================================================
def sensitivity_report(circuit: ArithmeticCircuit, e: Evidence) -> SensitivityReport:
    net = circuit.network
    state = run_dmaxc(circuit, e)
    mpe = extract_mpe(circuit, state)
    constants = sensitivity_constants(state, circuit)
    table = retraction_table(state, circuit)

    parameters = net.parameters()
    return SensitivityReport(
        network=net,
        evidence=e,
        mpe=mpe,
        constants=constants,
        intervals={ref: robustness_interval(ref, constants, mpe.witness, net) for ref in parameters},
        thresholds={ref: uncoupled_threshold(ref, constants, net) for ref in parameters},
        retraction=table,
        verdicts=retraction_analysis(table, e),
        multiplicity=mpe_multiplicity(table, e),
        retracted={name: retracted_mpe(circuit, e, name) for name in e.variables},
    )


def parameters_frame(report: SensitivityReport) -> pd.DataFrame:
    rows = []
    for ref, interval in report.intervals.items():
        threshold = report.thresholds[ref]
        margin = change_margin(interval)
        rows.append({
            "Parameter": ref.label(),
            "Current": interval.current,
            "R": report.constants.r[ref],
            "K": report.constants.k[ref.family],
            "Lower": interval.lower,
            "Upper": interval.upper,
            "LowerBinding": interval.lower_binding,
            "UpperBinding": interval.upper_binding,
            "Margin": np.nan if margin is None else margin,
            "Threshold": np.nan if threshold.threshold is None else threshold.threshold,
            "Tie": interval.tie,
        })
    return pd.DataFrame(rows)


def rank_parameters(report: SensitivityReport) -> pd.DataFrame:
    """Parameters closest to flipping the MPE first; whole-range intervals last."""
    frame = parameters_frame(report)
    if frame.empty:
        return frame
    frame = frame.sort_values(by=["Margin", "Parameter"], ascending=[True, True], na_position="last")
    return frame.reset_index(drop=True)


def retraction_frame(report: SensitivityReport) -> pd.DataFrame:
    rows = []
    for (name, value), p in report.retraction.entries.items():
        rows.append({
            "Variable": name,
            "Value": value,
            "Observed": report.evidence.get(name) == value,
            "MpeProbability": p,
        })
    return pd.DataFrame(rows)


def family_k_frame(report: SensitivityReport) -> pd.DataFrame:
    return pd.DataFrame(
        [{"Family": family_label(family), "K": k} for family, k in report.constants.k.items()]
    )
