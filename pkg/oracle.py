"""
Exhaustive-enumeration ground truth. Small networks only.

The per-query functions (brute_force_mpe, brute_force_coefficient,
brute_force_k, ...) walk every complete instantiation one at a time.
brute_force_tables and verify_robustness_interval enumerate the same
space as numpy arrays so the random suites stay fast; tests cross-check
the two routes.
"""
import itertools
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from model import (
    BayesianNetwork,
    Evidence,
    Instantiation,
    ParameterRef,
    check_references,
    is_compatible,
    joint_probability,
)
from sensitivity_engine import RobustnessInterval, apply_covariation

ENUMERATION_GUARD = int(os.getenv("MPE_GUARD", str(2 ** 24)))
TIE_TOLERANCE = 1e-12
ENDPOINT_BAND = 1e-9


class EnumerationGuardError(RuntimeError):
    pass


def check_guard(net: BayesianNetwork, guard: int = None):
    guard = ENUMERATION_GUARD if guard is None else guard
    size = net.instantiation_space()
    if size > guard:
        raise EnumerationGuardError(
            f"Network {net.name} has {size:,} complete instantiations; the guard allows {guard:,}"
        )


def _at_max(value: float, best: float) -> bool:
    return value >= best or math.isclose(value, best, rel_tol=TIE_TOLERANCE, abs_tol=0.0)


# ===============================================================
# 🧮 TERMS, ONE INSTANTIATION AT A TIME
# ===============================================================
@dataclass(frozen=True)
class TermView:
    instantiation: Instantiation
    value: float


def enumerate_instantiations(net: BayesianNetwork, guard: int = None):
    check_guard(net, guard)
    for combo in itertools.product(*[v.values for v in net.variables]):
        yield Instantiation(tuple(zip(net.names, combo)))


def term_value(net: BayesianNetwork, x: Instantiation, e: Evidence, exclude: ParameterRef = None) -> float:
    """Network polynomial term of x under e's indicators, optionally without one parameter."""
    values = x.as_dict()
    observed = e.as_dict()
    if any(values[name] != value for name, value in observed.items()):
        # some indicator is 0
        return 0.0
    value = 1.0
    for cpt in net.cpts:
        ref = ParameterRef(cpt.child, values[cpt.child], tuple((p, values[p]) for p in cpt.parents))
        if ref != exclude:
            value *= net.parameter_value(ref)
    return value


def term_views(net: BayesianNetwork, e: Evidence = Evidence(), guard: int = None) -> list:
    check_references(net, e)
    return [TermView(x, term_value(net, x, e)) for x in enumerate_instantiations(net, guard)]


def brute_force_mpe(net: BayesianNetwork, e: Evidence, guard: int = None):
    """(argmax instantiations in enumeration order, MPE_p(e))."""
    check_references(net, e)
    scored = [
        (x, joint_probability(net, x))
        for x in enumerate_instantiations(net, guard)
        if is_compatible(net, e, x)
    ]
    if not scored:
        return (), 0.0
    best = max(p for _, p in scored)
    return tuple(x for x, p in scored if _at_max(p, best)), best


def brute_force_probability(net: BayesianNetwork, e: Evidence, guard: int = None) -> float:
    check_references(net, e)
    return math.fsum(
        joint_probability(net, x) for x in enumerate_instantiations(net, guard) if is_compatible(net, e, x)
    )


def brute_force_coefficient(net: BayesianNetwork, e: Evidence, param: ParameterRef, guard: int = None) -> float:
    """max over x ~ e, x ~ xu of the term without theta_x|u; 0 over an empty set."""
    check_references(net, e)
    family = Evidence.of(dict(param.parents), **{param.variable: param.value})
    best = 0.0
    for x in enumerate_instantiations(net, guard):
        if is_compatible(net, e, x) and is_compatible(net, family, x):
            best = max(best, term_value(net, x, e, exclude=param))
    return best


def brute_force_k(net: BayesianNetwork, e: Evidence, variable: str, parents, guard: int = None) -> float:
    """MPE_p(e, not u); 0 when the parent set is empty."""
    check_references(net, e)
    u = Evidence.of(dict(parents))
    best = 0.0
    for x in enumerate_instantiations(net, guard):
        if is_compatible(net, e, x) and not is_compatible(net, u, x):
            best = max(best, joint_probability(net, x))
    return best


def brute_force_retraction(net: BayesianNetwork, e: Evidence, variable: str, value: str, guard: int = None) -> float:
    """MPE_p(e - X, x)."""
    _, probability = brute_force_mpe(net, e.without(variable).with_value(variable, value), guard)
    return probability


# ===============================================================
# ⚡ THE SAME SPACE AS ARRAYS
# ===============================================================
@dataclass(eq=False)
class Enumeration:
    """
    Every complete instantiation as one row of `grid` (value indices, in
    itertools.product order), with the chosen parameter of each CPT in
    `theta` and the evidence mismatch pattern.
    """
    net: BayesianNetwork
    evidence: Evidence
    grid: np.ndarray
    theta: np.ndarray
    rows: np.ndarray  # parent-instantiation row used by each CPT
    mismatch: np.ndarray = field(repr=False)
    _excluded: dict = field(default_factory=dict, repr=False)
    _families: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, net: BayesianNetwork, e: Evidence, guard: int = None) -> "Enumeration":
        check_guard(net, guard)
        check_references(net, e)
        cards = [v.cardinality for v in net.variables]
        grid = np.indices(cards).reshape(len(cards), -1).T
        theta = np.empty(grid.shape)
        rows = np.zeros(grid.shape, dtype=np.int64)

        for i, variable in enumerate(net.variables):
            cpt = net.cpt(variable.name)
            row = np.zeros(grid.shape[0], dtype=np.int64)
            for parent in cpt.parents:
                j = net.index_of(parent)
                row = row * cards[j] + grid[:, j]
            theta[:, i] = np.asarray(cpt.rows)[row, grid[:, i]]
            rows[:, i] = row

        observed = np.full(len(cards), -1)
        for name, value in e.items:
            observed[net.index_of(name)] = net.value_index(name, value)
        mismatch = (observed >= 0) & (grid != observed)
        return cls(net, e, grid, theta, rows, mismatch)

    @cached_property
    def joint(self) -> np.ndarray:
        return self.theta.prod(axis=1)

    @cached_property
    def consistent(self) -> np.ndarray:
        return ~self.mismatch.any(axis=1)

    def compatible_with(self, e: Evidence) -> np.ndarray:
        check_references(self.net, e)
        mask = np.ones(self.grid.shape[0], dtype=bool)
        for name, value in e.items:
            mask &= self.grid[:, self.net.index_of(name)] == self.net.value_index(name, value)
        return mask

    def probability(self, e: Evidence) -> float:
        """Pr(e), independent of the evidence the space was built with."""
        return math.fsum(self.joint[self.compatible_with(e)])

    def excluded(self, i: int) -> np.ndarray:
        """Joint probability with CPT i's parameter left out."""
        if i not in self._excluded:
            self._excluded[i] = np.delete(self.theta, i, axis=1).prod(axis=1)
        return self._excluded[i]

    def family_maxima(self, i: int, u_id: int):
        """
        (best joint among consistent instantiations off row u of CPT i,
        per-value best excluded product on row u).
        """
        key = (i, u_id)
        if key not in self._families:
            in_row = self.consistent & (self.rows[:, i] == u_id)
            off_row = self.consistent & ~in_row
            rest = float(self.joint[off_row].max()) if off_row.any() else 0.0
            card = self.net.variables[i].cardinality
            groups = _max_by(self.grid[in_row, i], self.excluded(i)[in_row], card)
            self._families[key] = (rest, groups)
        return self._families[key]

    def position_of(self, x: Instantiation) -> int:
        assigned = x.as_dict()
        position = 0
        for variable in self.net.variables:
            position = position * variable.cardinality + self.net.value_index(variable.name, assigned[variable.name])
        return position


@dataclass(frozen=True)
class OracleTables:
    mpe_probability: float
    probability: float
    r: dict
    k: dict
    retraction: dict


def _max_by(index: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    np.maximum.at(out, index, values)
    return out


def _max_over_other_rows(best_per_row: np.ndarray) -> np.ndarray:
    if len(best_per_row) == 1:
        return np.zeros(1)
    out = np.empty(len(best_per_row))
    for u in range(len(best_per_row)):
        out[u] = np.delete(best_per_row, u).max()
    return out


def brute_force_tables(net: BayesianNetwork, e: Evidence, guard: int = None) -> OracleTables:
    """MPE_p, Pr(e), every r(e,xu), every k(e,u) and every MPE_p(e-X,x) from one enumeration."""
    space = Enumeration.build(net, e, guard)
    joint = space.joint
    consistent = space.consistent
    mismatches = space.mismatch.sum(axis=1)

    r_map, k_map, retraction = {}, {}, {}
    for i, variable in enumerate(net.variables):
        card = variable.cardinality
        parent_rows = net.parent_instantiations(variable.name)
        rows = space.rows[consistent, i]
        cells = rows * card + space.grid[consistent, i]

        coefficients = _max_by(cells, space.excluded(i)[consistent], len(parent_rows) * card)
        for row_id, u in enumerate(parent_rows):
            for value_id, value in enumerate(variable.values):
                r_map[ParameterRef(variable.name, value, u)] = float(coefficients[row_id * card + value_id])

        best_per_row = _max_by(rows, joint[consistent], len(parent_rows))
        for row_id, k in enumerate(_max_over_other_rows(best_per_row)):
            k_map[(variable.name, parent_rows[row_id])] = float(k)

        # e - X keeps instantiations whose only disagreement with e is at X
        eligible = consistent | ((mismatches == 1) & space.mismatch[:, i])
        per_value = _max_by(space.grid[eligible, i], joint[eligible], card)
        for value_id, value in enumerate(variable.values):
            retraction[(variable.name, value)] = float(per_value[value_id])

    return OracleTables(
        mpe_probability=float(joint[consistent].max()) if consistent.any() else 0.0,
        probability=float(math.fsum(joint[consistent])),
        r=r_map,
        k=k_map,
        retraction=retraction,
    )


# ===============================================================
# 🧪 INTERVAL VERIFICATION
# ===============================================================
@dataclass(frozen=True)
class IntervalCheck:
    passed: bool
    counterexamples: tuple = ()
    inside_samples: int = 0
    outside_samples: int = 0


def _sample_outside(rng, lower: float, upper: float, n: int) -> np.ndarray:
    segments = []
    if lower - ENDPOINT_BAND > 0.0:
        segments.append((0.0, lower - ENDPOINT_BAND))
    if upper + ENDPOINT_BAND < 1.0:
        segments.append((upper + ENDPOINT_BAND, 1.0))
    if not segments or n == 0:
        return np.empty(0)
    lengths = np.array([b - a for a, b in segments])
    draws = rng.uniform(0.0, lengths.sum(), n)
    samples = []
    for d in draws:
        if d < lengths[0]:
            samples.append(segments[0][0] + d)
        else:
            samples.append(segments[-1][0] + (d - lengths[0]))
    return np.array(samples)


def witness_is_mpe(space: Enumeration, param: ParameterRef, t: float, witness: Instantiation) -> bool:
    """
    Is the witness in MPE(e) once theta_x|u is set to t (row co-varied)?

    Only instantiations that use row u of X's CPT change with t, each by
    the new value of its own cell, so the maximum over the modified
    network is the maximum over per-cell group maxima of the excluded
    products times the new row, and the untouched rest.
    """
    net = space.net
    i = net.index_of(param.variable)
    u_id = net.row_index(param.variable, param.parents)
    x_id = net.value_index(param.variable, param.value)
    new_row = np.array(apply_covariation(net.row(param.variable, param.parents), x_id, t))

    rest, groups = space.family_maxima(i, u_id)
    best = max(rest, float((groups * new_row).max()))

    position = space.position_of(witness)
    if not space.consistent[position]:
        return False
    if space.rows[position, i] == u_id:
        value = float(space.excluded(i)[position]) * new_row[space.grid[position, i]]
    else:
        value = float(space.joint[position])
    return _at_max(value, best)


def covaried_network(net: BayesianNetwork, param: ParameterRef, t: float) -> BayesianNetwork:
    """The network with theta_x|u set to t and the rest of its row co-varied."""
    x_id = net.value_index(param.variable, param.value)
    new_row = apply_covariation(net.row(param.variable, param.parents), x_id, t)
    return net.with_row(param.variable, param.parents, new_row)


def witness_is_mpe_by_enumeration(net: BayesianNetwork, e: Evidence, param: ParameterRef, t: float,
                                  witness: Instantiation, guard: int = None) -> bool:
    """Same question as witness_is_mpe, answered by re-enumerating the co-varied network."""
    argmax, _ = brute_force_mpe(covaried_network(net, param, t), e, guard)
    return witness in argmax


def verify_robustness_interval(net: BayesianNetwork, e: Evidence, param: ParameterRef,
                               interval: RobustnessInterval, n_samples: int, seed: int = 0,
                               guard: int = None, space: Enumeration = None,
                               exact: bool = False) -> IntervalCheck:
    """
    Inside the interval (away from the endpoints) the witness must stay
    an MPE solution; outside it must not. exact=True re-enumerates the
    co-varied network for every sample instead of using group maxima.
    """
    rng = np.random.default_rng(seed)
    if exact:
        def holds(t):
            return witness_is_mpe_by_enumeration(net, e, param, t, interval.witness, guard)
    else:
        space = space if space is not None else Enumeration.build(net, e, guard)

        def holds(t):
            return witness_is_mpe(space, param, t, interval.witness)

    low, high = interval.lower + ENDPOINT_BAND, interval.upper - ENDPOINT_BAND
    inside = rng.uniform(low, high, n_samples) if high > low else np.empty(0)
    outside = _sample_outside(rng, interval.lower, interval.upper, n_samples)

    failures = []
    for t in inside:
        if not holds(float(t)):
            failures.append(float(t))
    for t in outside:
        if holds(float(t)):
            failures.append(float(t))

    return IntervalCheck(
        passed=not failures,
        counterexamples=tuple(failures),
        inside_samples=len(inside),
        outside_samples=len(outside),
    )
