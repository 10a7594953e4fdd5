"""
Network -> arithmetic circuit compilation.

Variable elimination where every factor cell holds a circuit node
instead of a number. Eliminating Z builds, per surviving cell, a
COMBINE over one MULTIPLY per value of Z. The result factors the
network polynomial; reading COMBINE as max gives the maximizer circuit.
"""
import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import networkx as nx

from model import BayesianNetwork, ParameterRef


class NodeKind(Enum):
    COMBINE = "combine"
    MULTIPLY = "multiply"
    PARAMETER = "param"
    INDICATOR = "indicator"


@dataclass(frozen=True)
class CircuitNode:
    kind: NodeKind
    children: tuple[int, ...] = ()
    parameter: ParameterRef | None = None
    indicator: tuple[str, str] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.kind in (NodeKind.PARAMETER, NodeKind.INDICATOR)

    def label(self) -> str:
        if self.kind is NodeKind.PARAMETER:
            return f"theta[{self.parameter.label()}]"
        if self.kind is NodeKind.INDICATOR:
            return f"lambda[{self.indicator[0]}={self.indicator[1]}]"
        return ""


@dataclass(frozen=True)
class EliminationOrder:
    order: tuple[str, ...]
    width: int


@dataclass(frozen=True, eq=False)
class ArithmeticCircuit:
    network: BayesianNetwork
    nodes: tuple[CircuitNode, ...]
    root: int
    parameter_leaves: dict = field(default_factory=dict)
    indicator_leaves: dict = field(default_factory=dict)
    order: EliminationOrder | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def kinds(self) -> list:
        return [node.kind for node in self.nodes]

    @cached_property
    def children(self) -> list:
        return [node.children for node in self.nodes]

    def edge_count(self) -> int:
        return sum(len(c) for c in self.children)


# ===============================================================
# 🧭 MIN-FILL ELIMINATION ORDER
# ===============================================================
def moral_graph(net: BayesianNetwork) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(net.names)
    for cpt in net.cpts:
        for parent in cpt.parents:
            graph.add_edge(parent, cpt.child)
        for p1, p2 in itertools.combinations(cpt.parents, 2):
            graph.add_edge(p1, p2)
    return graph


def _fill_in(graph: nx.Graph, node) -> int:
    neighbours = list(graph.neighbors(node))
    return sum(1 for a, b in itertools.combinations(neighbours, 2) if not graph.has_edge(a, b))


def min_fill_order(net: BayesianNetwork) -> EliminationOrder:
    """Greedy min-fill; ties broken by declared variable index."""
    graph = moral_graph(net)
    rank = {name: i for i, name in enumerate(net.names)}
    order = []
    width = 0

    while graph.number_of_nodes():
        chosen = min(graph.nodes, key=lambda n: (_fill_in(graph, n), rank[n]))
        neighbours = list(graph.neighbors(chosen))
        width = max(width, len(neighbours))
        for a, b in itertools.combinations(neighbours, 2):
            graph.add_edge(a, b)
        graph.remove_node(chosen)
        order.append(chosen)

    return EliminationOrder(tuple(order), width)


def induced_width(net: BayesianNetwork, order) -> int:
    graph = moral_graph(net)
    width = 0
    for name in order:
        neighbours = list(graph.neighbors(name))
        width = max(width, len(neighbours))
        for a, b in itertools.combinations(neighbours, 2):
            graph.add_edge(a, b)
        graph.remove_node(name)
    return width


# ===============================================================
# 🏗️ CIRCUIT BUILDER
# ===============================================================
class CircuitBuilder:
    """
    Appends nodes in creation order, so children always precede parents.
    Structurally identical internal nodes are shared; one-child
    COMBINE/MULTIPLY nodes collapse into their child.
    """

    def __init__(self, net: BayesianNetwork):
        self.net = net
        self.nodes = []
        self._unique = {}
        self._parameter_leaves = {}
        self._indicator_leaves = {}

    def _add(self, node: CircuitNode) -> int:
        key = (node.kind, node.children, node.parameter, node.indicator)
        if key in self._unique:
            return self._unique[key]
        self.nodes.append(node)
        self._unique[key] = len(self.nodes) - 1
        return len(self.nodes) - 1

    def parameter(self, ref: ParameterRef) -> int:
        if ref not in self._parameter_leaves:
            self._parameter_leaves[ref] = self._add(CircuitNode(NodeKind.PARAMETER, parameter=ref))
        return self._parameter_leaves[ref]

    def indicator(self, variable: str, value: str) -> int:
        key = (variable, value)
        if key not in self._indicator_leaves:
            self._indicator_leaves[key] = self._add(CircuitNode(NodeKind.INDICATOR, indicator=key))
        return self._indicator_leaves[key]

    def _internal(self, kind: NodeKind, children) -> int:
        children = tuple(children)
        if not children:
            raise ValueError(f"{kind.value} node needs at least one child")
        if len(children) == 1:
            return children[0]
        return self._add(CircuitNode(kind, children))

    def multiply(self, children) -> int:
        return self._internal(NodeKind.MULTIPLY, children)

    def combine(self, children) -> int:
        return self._internal(NodeKind.COMBINE, children)

    def build(self, root: int, order: EliminationOrder | None = None) -> ArithmeticCircuit:
        # keep only what the root reaches, renumbered in the same relative order
        reachable = set()
        stack = [root]
        while stack:
            v = stack.pop()
            if v in reachable:
                continue
            reachable.add(v)
            stack.extend(self.nodes[v].children)

        kept = sorted(reachable)
        new_id = {old: new for new, old in enumerate(kept)}
        nodes = []
        parameter_leaves = {}
        indicator_leaves = {}
        for old in kept:
            node = self.nodes[old]
            if node.children:
                node = CircuitNode(node.kind, tuple(new_id[c] for c in node.children))
            nodes.append(node)
            if node.kind is NodeKind.PARAMETER:
                parameter_leaves[node.parameter] = new_id[old]
            elif node.kind is NodeKind.INDICATOR:
                indicator_leaves[node.indicator] = new_id[old]

        return ArithmeticCircuit(
            network=self.net,
            nodes=tuple(nodes),
            root=new_id[root],
            parameter_leaves=parameter_leaves,
            indicator_leaves=indicator_leaves,
            order=order,
        )


# ===============================================================
# ⚙️ VARIABLE-ELIMINATION COMPILATION
# ===============================================================
@dataclass
class _Factor:
    scope: tuple[str, ...]
    cells: dict  # tuple of values (aligned with scope) -> node id

    def cell(self, assignment: dict) -> int:
        return self.cells[tuple(assignment[name] for name in self.scope)]


def _initial_factors(net: BayesianNetwork, builder: CircuitBuilder) -> list:
    factors = []
    for variable in net.variables:
        # indicator factor
        factors.append(_Factor(
            (variable.name,),
            {(value,): builder.indicator(variable.name, value) for value in variable.values},
        ))

    for variable in net.variables:
        parents = net.parents_of(variable.name)
        cells = {}
        for u in net.parent_instantiations(variable.name):
            for value in variable.values:
                key = tuple(v for _, v in u) + (value,)
                cells[key] = builder.parameter(ParameterRef(variable.name, value, u))
        factors.append(_Factor(tuple(parents) + (variable.name,), cells))
    return factors


def compile_circuit(net: BayesianNetwork, order: EliminationOrder | None = None) -> ArithmeticCircuit:
    if order is None:
        order = min_fill_order(net)

    builder = CircuitBuilder(net)
    factors = _initial_factors(net, builder)
    position = {name: i for i, name in enumerate(net.names)}

    for name in order.order:
        involved = [f for f in factors if name in f.scope]
        factors = [f for f in factors if name not in f.scope]

        scope = sorted({v for f in involved for v in f.scope if v != name}, key=position.get)
        domains = [net.variable(v).values for v in scope]
        cells = {}
        for combo in itertools.product(*domains):
            assignment = dict(zip(scope, combo))
            terms = []
            for value in net.variable(name).values:
                assignment[name] = value
                terms.append(builder.multiply([f.cell(assignment) for f in involved]))
            cells[combo] = builder.combine(terms)
        factors.append(_Factor(tuple(scope), cells))

    root = builder.multiply([f.cells[()] for f in factors])
    return builder.build(root, order)


# ===============================================================
# 🔍 DECOMPOSABILITY + DIAGNOSTICS
# ===============================================================
def _leaf_tags(circuit: ArithmeticCircuit) -> dict:
    tags = {}
    for node in circuit.nodes:
        if node.kind is NodeKind.PARAMETER:
            tags.setdefault(("cpt", node.parameter.variable), len(tags))
        elif node.kind is NodeKind.INDICATOR:
            tags.setdefault(("indicator", node.indicator[0]), len(tags))
    return tags


def node_scopes(circuit: ArithmeticCircuit) -> list:
    """
    Per-node scope as an int bitset over tags ("cpt", X) and
    ("indicator", X). A term may use one parameter of each CPT and one
    indicator of each variable, so these are the sets that must not meet
    under a multiplication.
    """
    bit = _leaf_tags(circuit)
    scopes = [0] * len(circuit.nodes)
    for v, node in enumerate(circuit.nodes):
        if node.kind is NodeKind.PARAMETER:
            scopes[v] = 1 << bit[("cpt", node.parameter.variable)]
        elif node.kind is NodeKind.INDICATOR:
            scopes[v] = 1 << bit[("indicator", node.indicator[0])]
        else:
            mask = 0
            for c in node.children:
                mask |= scopes[c]
            scopes[v] = mask
    return scopes


def check_decomposability(circuit: ArithmeticCircuit) -> list:
    scopes = node_scopes(circuit)
    violations = []
    for v, node in enumerate(circuit.nodes):
        if node.kind is not NodeKind.MULTIPLY:
            continue
        seen = 0
        for c in node.children:
            if seen & scopes[c]:
                violations.append(v)
                break
            seen |= scopes[c]
    return violations


def check_topological(circuit: ArithmeticCircuit) -> bool:
    return all(c < v for v, node in enumerate(circuit.nodes) for c in node.children)


def circuit_stats(circuit: ArithmeticCircuit) -> dict:
    counts = {kind: 0 for kind in NodeKind}
    for kind in circuit.kinds:
        counts[kind] += 1
    order = circuit.order
    return {
        "nodes": len(circuit.nodes),
        "edges": circuit.edge_count(),
        "combine_nodes": counts[NodeKind.COMBINE],
        "multiply_nodes": counts[NodeKind.MULTIPLY],
        "parameter_leaves": counts[NodeKind.PARAMETER],
        "indicator_leaves": counts[NodeKind.INDICATOR],
        "width": order.width if order else None,
        "order": list(order.order) if order else None,
        "decomposable": not check_decomposability(circuit),
    }


def dump_circuit(circuit: ArithmeticCircuit) -> str:
    """One node per line: id kind children... [label]. Debugging only."""
    lines = []
    for v, node in enumerate(circuit.nodes):
        parts = [str(v), node.kind.value] + [str(c) for c in node.children]
        label = node.label()
        if label:
            parts.append(label)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
