"""
Seed-reproducible networks for the check harness and the random suites.

Variables X0..Xn-1 with values v0..; each variable draws its parents
from the variables declared before it, so every network is a DAG.
"""
import numpy as np

from model import BayesianNetwork, Cpt, Evidence, Variable

MIN_VARIABLES = 3
MAX_VARIABLES = 12
MIN_CARDINALITY = 2
MAX_CARDINALITY = 3
MAX_PARENTS = 3


def _row(rng: np.random.Generator, cardinality: int, zero_fraction: float = 0.0) -> tuple:
    # symmetric Dirichlet(1): uniform over the simplex
    row = rng.dirichlet(np.ones(cardinality))
    if zero_fraction > 0.0:
        zeroed = rng.random(cardinality) < zero_fraction
        zeroed[rng.integers(cardinality)] = False  # one cell always survives
        row = np.where(zeroed, 0.0, row)
        row = row / row.sum()
    return tuple(float(p) for p in row)


def random_network(rng: np.random.Generator, n_vars: int = None, name: str = "random",
                   zero_fraction: float = 0.0) -> BayesianNetwork:
    """
    zero_fraction > 0 zeroes each CPT cell with that probability and
    renormalises the row, giving deterministic rows and evidence of
    probability 0.
    """
    if n_vars is None:
        n_vars = int(rng.integers(MIN_VARIABLES, MAX_VARIABLES + 1))

    variables = []
    for i in range(n_vars):
        cardinality = int(rng.integers(MIN_CARDINALITY, MAX_CARDINALITY + 1))
        variables.append(Variable(f"X{i}", tuple(f"v{j}" for j in range(cardinality))))

    cpts = []
    for i, variable in enumerate(variables):
        n_parents = int(rng.integers(0, min(MAX_PARENTS, i) + 1))
        chosen = sorted(int(p) for p in rng.choice(i, size=n_parents, replace=False)) if n_parents else []
        parents = tuple(variables[p].name for p in chosen)
        n_rows = int(np.prod([variables[p].cardinality for p in chosen], dtype=np.int64))
        rows = tuple(_row(rng, variable.cardinality, zero_fraction) for _ in range(n_rows))
        cpts.append(Cpt(variable.name, parents, rows))

    return BayesianNetwork(tuple(variables), tuple(cpts), name=name)


def random_evidence(rng: np.random.Generator, net: BayesianNetwork) -> Evidence:
    """Between none and all-but-one of the variables observed, values uniform."""
    size = int(rng.integers(0, len(net.variables)))
    chosen = sorted(int(i) for i in rng.choice(len(net.variables), size=size, replace=False))
    assignments = {}
    for i in chosen:
        variable = net.variables[i]
        assignments[variable.name] = variable.values[int(rng.integers(variable.cardinality))]
    return Evidence.of(assignments)


def chain_network(n: int, name: str = "chain") -> BayesianNetwork:
    """Binary chain X0 -> X1 -> ... -> Xn-1 with fixed, asymmetric CPTs."""
    variables = tuple(Variable(f"X{i}", ("v0", "v1")) for i in range(n))
    cpts = [Cpt("X0", (), ((0.6, 0.4),))]
    for i in range(1, n):
        cpts.append(Cpt(f"X{i}", (f"X{i - 1}",), ((0.7, 0.3), (0.2, 0.8))))
    return BayesianNetwork(variables, tuple(cpts), name=name)
