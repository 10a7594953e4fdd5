import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import networkx as nx

# ===============================================================
# ⚙️ CONFIGURATION
# ===============================================================
ROW_SUM_TOLERANCE = 1e-9


# ===============================================================
# ❗ ERRORS
# ===============================================================
class NetworkFormatError(ValueError):
    """Document could not be parsed into a network or evidence."""


class NetworkValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownReferenceError(ValueError):
    pass


class IncompleteInstantiationError(ValueError):
    pass


# ===============================================================
# 🧱 DATA MODEL
# ===============================================================
@dataclass(frozen=True)
class Variable:
    name: str
    values: tuple[str, ...]

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Cpt:
    """
    rows[i] is the distribution of the child under the i-th parent
    instantiation, enumerated lexicographically: parents in declared
    order (first parent most significant), values in declared order.
    """
    child: str
    parents: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class Evidence:
    """Partial map variable -> value. Stored sorted by variable name."""
    items: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(sorted(dict(self.items).items())))

    @classmethod
    def of(cls, mapping=None, **assignments):
        merged = dict(mapping or {})
        merged.update(assignments)
        return cls(tuple(merged.items()))

    def as_dict(self) -> dict:
        return dict(self.items)

    def get(self, name, default=None):
        return self.as_dict().get(name, default)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.items)

    def without(self, name: str) -> "Evidence":
        return Evidence(tuple((k, v) for k, v in self.items if k != name))

    def with_value(self, name: str, value: str) -> "Evidence":
        merged = self.as_dict()
        merged[name] = value
        return Evidence(tuple(merged.items()))

    def __contains__(self, name) -> bool:
        return any(k == name for k, _ in self.items)

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Instantiation(Evidence):
    """Complete map; completeness is checked against a network, see require_complete."""


@dataclass(frozen=True)
class ParameterRef:
    variable: str
    value: str
    parents: tuple[tuple[str, str], ...] = ()

    @property
    def family(self) -> tuple[str, tuple[tuple[str, str], ...]]:
        return (self.variable, self.parents)

    def label(self) -> str:
        head = f"{self.variable}={self.value}"
        if not self.parents:
            return head
        tail = ",".join(f"{p}={v}" for p, v in self.parents)
        return f"{head} | {tail}"


def family_label(family) -> str:
    variable, parents = family
    if not parents:
        return f"{variable} | -"
    return f"{variable} | " + ",".join(f"{p}={v}" for p, v in parents)


@dataclass(frozen=True)
class BayesianNetwork:
    variables: tuple[Variable, ...]
    cpts: tuple[Cpt, ...]
    name: str = field(default="network", compare=False)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _variable_index(self) -> dict:
        return {v.name: i for i, v in enumerate(self.variables)}

    @cached_property
    def _cpt_by_child(self) -> dict:
        return {c.child: c for c in self.cpts}

    def index_of(self, name: str) -> int:
        try:
            return self._variable_index[name]
        except KeyError:
            raise UnknownReferenceError(f"Unknown variable: {name}")

    def variable(self, name: str) -> Variable:
        return self.variables[self.index_of(name)]

    def cpt(self, name: str) -> Cpt:
        self.index_of(name)
        return self._cpt_by_child[name]

    def value_index(self, name: str, value: str) -> int:
        values = self.variable(name).values
        if value not in values:
            raise UnknownReferenceError(f"Unknown value {value!r} for variable {name}")
        return values.index(value)

    def parent_instantiations(self, name: str) -> list:
        parents = self.cpt(name).parents
        value_lists = [self.variable(p).values for p in parents]
        return [tuple(zip(parents, combo)) for combo in itertools.product(*value_lists)]

    def row_index(self, name: str, parent_values) -> int:
        """parent_values: tuple of (parent, value) pairs in declared parent order."""
        index = 0
        for parent, value in parent_values:
            index = index * self.variable(parent).cardinality + self.value_index(parent, value)
        return index

    def parameters(self) -> list:
        refs = []
        for variable in self.variables:
            for u in self.parent_instantiations(variable.name):
                for value in variable.values:
                    refs.append(ParameterRef(variable.name, value, u))
        return refs

    def families(self) -> list:
        return [(v.name, u) for v in self.variables for u in self.parent_instantiations(v.name)]

    def parameter_value(self, ref: ParameterRef) -> float:
        row = self.cpt(ref.variable).rows[self.row_index(ref.variable, ref.parents)]
        return row[self.value_index(ref.variable, ref.value)]

    def row(self, name: str, parent_values) -> tuple:
        return self.cpt(name).rows[self.row_index(name, parent_values)]

    def with_row(self, name: str, parent_values, new_row) -> "BayesianNetwork":
        target = self.cpt(name)
        rows = list(target.rows)
        rows[self.row_index(name, parent_values)] = tuple(float(p) for p in new_row)
        changed = replace(target, rows=tuple(rows))
        cpts = tuple(changed if c.child == name else c for c in self.cpts)
        return BayesianNetwork(self.variables, cpts, name=self.name)

    def instantiation_space(self) -> int:
        return math.prod(v.cardinality for v in self.variables)

    def parents_of(self, name: str) -> tuple[str, ...]:
        return self.cpt(name).parents


# ===============================================================
# ✅ VALIDATION
# ===============================================================
def validate_network(net: BayesianNetwork) -> list:
    """Every violated invariant as a sentence. Empty list means valid."""
    violations = []

    names = [v.name for v in net.variables]
    seen = set()
    for name in names:
        if name in seen:
            violations.append(f"Duplicate variable name: {name}")
        seen.add(name)

    cards = {}
    for variable in net.variables:
        if len(variable.values) < 2:
            violations.append(f"Variable {variable.name} has fewer than 2 values")
        if len(set(variable.values)) != len(variable.values):
            violations.append(f"Variable {variable.name} has duplicate values")
        cards[variable.name] = len(variable.values)

    cpt_counts = {}
    for cpt in net.cpts:
        cpt_counts[cpt.child] = cpt_counts.get(cpt.child, 0) + 1
        if cpt.child not in cards:
            violations.append(f"CPT for unknown variable: {cpt.child}")
    for name in cards:
        count = cpt_counts.get(name, 0)
        if count != 1:
            violations.append(f"Variable {name} has {count} CPTs (expected exactly 1)")

    graph = nx.DiGraph()
    graph.add_nodes_from(cards)
    for cpt in net.cpts:
        if cpt.child not in cards:
            continue
        unknown = [p for p in cpt.parents if p not in cards]
        for parent in unknown:
            violations.append(f"CPT for {cpt.child} names unknown parent: {parent}")
        if len(set(cpt.parents)) != len(cpt.parents):
            violations.append(f"CPT for {cpt.child} lists a parent twice")
        if unknown:
            continue
        for parent in cpt.parents:
            graph.add_edge(parent, cpt.child)

        expected_rows = math.prod(cards[p] for p in cpt.parents)
        if len(cpt.rows) != expected_rows:
            violations.append(
                f"CPT for {cpt.child} has {len(cpt.rows)} rows (expected {expected_rows})"
            )
        for i, row in enumerate(cpt.rows):
            if len(row) != cards[cpt.child]:
                violations.append(
                    f"CPT for {cpt.child} row {i} has {len(row)} entries (expected {cards[cpt.child]})"
                )
            if any(not (0.0 <= p <= 1.0) for p in row):
                violations.append(f"CPT for {cpt.child} row {i} has an entry outside [0, 1]")
            total = math.fsum(row)
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                violations.append(f"CPT for {cpt.child} row {i} sums to {total!r}, not 1")

    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        path = " -> ".join([edge[0] for edge in cycle] + [cycle[0][0]])
        violations.append(f"Parent relation has a cycle: {path}")

    return violations


def require_valid(net: BayesianNetwork) -> BayesianNetwork:
    violations = validate_network(net)
    if violations:
        raise NetworkValidationError(violations)
    return net


# ===============================================================
# 🎲 JOINT PROBABILITY + COMPATIBILITY
# ===============================================================
def check_references(net: BayesianNetwork, assignments: Evidence):
    for name, value in assignments.items:
        net.value_index(name, value)


def require_complete(net: BayesianNetwork, x: Evidence) -> Instantiation:
    check_references(net, x)
    missing = [name for name in net.names if name not in x]
    if missing:
        raise IncompleteInstantiationError(
            f"Instantiation is missing variables: {', '.join(missing)}"
        )
    return x if isinstance(x, Instantiation) else Instantiation(x.items)


def joint_probability(net: BayesianNetwork, x: Evidence) -> float:
    x = require_complete(net, x)
    values = x.as_dict()
    probability = 1.0
    for cpt in net.cpts:
        u = tuple((p, values[p]) for p in cpt.parents)
        probability *= cpt.rows[net.row_index(cpt.child, u)][net.value_index(cpt.child, values[cpt.child])]
    return probability


def is_compatible(net: BayesianNetwork, a: Evidence, b: Evidence) -> bool:
    check_references(net, a)
    check_references(net, b)
    other = b.as_dict()
    return all(other.get(name, value) == value for name, value in a.items)
