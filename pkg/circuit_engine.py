"""
Circuit passes: sum evaluation, max evaluation + MPE extraction,
and the downward register pass (D-MAXC).
"""
from dataclasses import dataclass

import numpy as np

from circuit_compiler import ArithmeticCircuit, NodeKind
from model import Evidence, Instantiation, check_references

COMBINE = NodeKind.COMBINE
MULTIPLY = NodeKind.MULTIPLY
PARAMETER = NodeKind.PARAMETER
INDICATOR = NodeKind.INDICATOR


class InconsistentSubCircuitError(RuntimeError):
    pass


@dataclass
class EvaluationState:
    p: np.ndarray
    evidence: Evidence
    maximize: bool
    root: int
    r: np.ndarray | None = None

    @property
    def root_value(self) -> float:
        return float(self.p[self.root])


@dataclass(frozen=True)
class MpeResult:
    probability: float
    witness: Instantiation


# ===============================================================
# 💡 LEAVES
# ===============================================================
def indicator_setting(circuit: ArithmeticCircuit, e: Evidence) -> dict:
    """lambda_x = 0 iff x contradicts e."""
    check_references(circuit.network, e)
    observed = e.as_dict()
    return {
        (name, value): 0.0 if name in observed and observed[name] != value else 1.0
        for name, value in circuit.indicator_leaves
    }


def _leaf_values(circuit: ArithmeticCircuit, e: Evidence) -> np.ndarray:
    values = np.zeros(len(circuit.nodes))
    for ref, v in circuit.parameter_leaves.items():
        values[v] = circuit.network.parameter_value(ref)
    for key, setting in indicator_setting(circuit, e).items():
        values[circuit.indicator_leaves[key]] = setting
    return values


# ===============================================================
# ⬆️ UPWARD PASSES
# ===============================================================
def _upward(circuit: ArithmeticCircuit, e: Evidence, maximize: bool) -> EvaluationState:
    p = _leaf_values(circuit, e)
    kinds = circuit.kinds
    children = circuit.children

    for v in range(len(kinds)):
        kind = kinds[v]
        if kind is MULTIPLY:
            value = 1.0
            for c in children[v]:
                value *= p[c]
            p[v] = value
        elif kind is COMBINE:
            if maximize:
                p[v] = max(p[c] for c in children[v])
            else:
                p[v] = sum(p[c] for c in children[v])

    return EvaluationState(p=p, evidence=e, maximize=maximize, root=circuit.root)


def evaluate_sum(circuit: ArithmeticCircuit, e: Evidence) -> float:
    """Pr(e)."""
    state = _upward(circuit, e, maximize=False)
    return float(state.p[circuit.root])


def evaluate_max(circuit: ArithmeticCircuit, e: Evidence) -> EvaluationState:
    """Maximizer pass; p[root] is MPE_p(e)."""
    return _upward(circuit, e, maximize=True)


def _consistency(circuit: ArithmeticCircuit, e: Evidence) -> np.ndarray:
    # 1.0 where the sub-circuit still has a term consistent with e
    consistent = np.zeros(len(circuit.nodes))
    for v in circuit.parameter_leaves.values():
        consistent[v] = 1.0
    for key, setting in indicator_setting(circuit, e).items():
        consistent[circuit.indicator_leaves[key]] = setting
    kinds = circuit.kinds
    children = circuit.children
    for v in range(len(kinds)):
        if kinds[v] is MULTIPLY:
            consistent[v] = min(consistent[c] for c in children[v])
        elif kinds[v] is COMBINE:
            consistent[v] = max(consistent[c] for c in children[v])
    return consistent


# ===============================================================
# 🔎 MPE SUB-CIRCUIT
# ===============================================================
def extract_mpe(circuit: ArithmeticCircuit, state: EvaluationState) -> MpeResult:
    """
    Walk the MPE sub-circuit: every child of a multiplication, and the
    lowest-index child of a maximization whose value equals the node's.
    """
    p = state.p
    allowed = None
    if p[circuit.root] == 0.0:
        # every term is zero; only consistent children keep the witness ~ e
        allowed = _consistency(circuit, state.evidence)

    assignment = {}
    visited = set()
    stack = [circuit.root]
    while stack:
        v = stack.pop()
        if v in visited:
            continue
        visited.add(v)
        node = circuit.nodes[v]

        if node.kind is INDICATOR:
            name, value = node.indicator
            if assignment.get(name, value) != value:
                raise InconsistentSubCircuitError(
                    f"MPE sub-circuit assigns {name} both {assignment[name]} and {value}"
                )
            assignment[name] = value
        elif node.kind is MULTIPLY:
            stack.extend(node.children)
        elif node.kind is COMBINE:
            chosen = next(
                (c for c in node.children if p[c] == p[v] and (allowed is None or allowed[c] > 0)),
                None,
            )
            if chosen is None:
                raise InconsistentSubCircuitError(f"No child of node {v} attains its value")
            stack.append(chosen)

    missing = [name for name in circuit.network.names if name not in assignment]
    if missing:
        raise InconsistentSubCircuitError(
            f"MPE sub-circuit leaves variables unassigned: {', '.join(missing)}"
        )
    return MpeResult(probability=float(p[circuit.root]), witness=Instantiation.of(assignment))


# ===============================================================
# ⬇️ D-MAXC
# ===============================================================
def run_dmaxc(circuit: ArithmeticCircuit, e: Evidence) -> EvaluationState:
    """
    Registers after the pass: r[theta_x|u] = r(e, xu) and
    r[lambda_x] = MPE_p(e - X, x).

    Sibling products come from prefix/suffix arrays, never from
    division, so zeros in parameters or indicators are exact.
    """
    state = evaluate_max(circuit, e)
    p = state.p
    r = np.zeros(len(circuit.nodes))
    r[circuit.root] = 1.0
    kinds = circuit.kinds
    children = circuit.children

    for v in range(len(kinds) - 1, -1, -1):
        kind = kinds[v]
        rv = r[v]
        if rv == 0.0 or kind is PARAMETER or kind is INDICATOR:
            continue
        kids = children[v]
        if kind is COMBINE:
            for c in kids:
                if rv > r[c]:
                    r[c] = rv
        else:
            n = len(kids)
            prefix = [1.0] * (n + 1)
            for i in range(n):
                prefix[i + 1] = prefix[i] * p[kids[i]]
            suffix = 1.0
            for i in range(n - 1, -1, -1):
                candidate = rv * prefix[i] * suffix
                c = kids[i]
                if candidate > r[c]:
                    r[c] = candidate
                suffix *= p[c]

    state.r = r
    return state
