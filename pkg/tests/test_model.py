import pytest

from model import (
    BayesianNetwork,
    Cpt,
    Evidence,
    IncompleteInstantiationError,
    Instantiation,
    NetworkValidationError,
    ParameterRef,
    UnknownReferenceError,
    Variable,
    family_label,
    is_compatible,
    joint_probability,
    require_valid,
    validate_network,
)


def _net(cpts, variables=None):
    variables = variables or (Variable("A", ("a", "a_bar")), Variable("B", ("b", "b_bar")))
    return BayesianNetwork(tuple(variables), tuple(cpts))


@pytest.mark.parametrize(
    "assignment, expected",
    [
        ({"A": "a", "B": "b"}, 0.1),
        ({"A": "a", "B": "b_bar"}, 0.4),
        ({"A": "a_bar", "B": "b"}, 0.3),
        ({"A": "a_bar", "B": "b_bar"}, 0.2),
    ],
)
def test_joint_probability(ab_network, assignment, expected):
    assert joint_probability(ab_network, Instantiation.of(assignment)) == pytest.approx(expected, abs=1e-15)


def test_joint_probability_of_disconnected_roots():
    net = _net((Cpt("A", (), ((0.3, 0.7),)), Cpt("B", (), ((0.6, 0.4),))))
    for a, pa in (("a", 0.3), ("a_bar", 0.7)):
        for b, pb in (("b", 0.6), ("b_bar", 0.4)):
            assert joint_probability(net, Instantiation.of(A=a, B=b)) == pytest.approx(pa * pb, abs=1e-15)


def test_joint_probability_needs_every_variable(ab_network):
    with pytest.raises(IncompleteInstantiationError):
        joint_probability(ab_network, Evidence.of(A="a"))


def test_unknown_value_is_rejected(ab_network):
    with pytest.raises(UnknownReferenceError):
        joint_probability(ab_network, Instantiation.of(A="a", B="maybe"))
    with pytest.raises(UnknownReferenceError):
        ab_network.variable("C")


def test_fixture_is_valid(ab_network, symmetric_network):
    assert validate_network(ab_network) == []
    assert validate_network(symmetric_network) == []


def test_row_sum_violation_is_reported():
    net = _net([
        Cpt("A", (), ((0.5, 0.5),)),
        Cpt("B", ("A",), ((0.2, 0.7), (0.6, 0.4))),
    ])
    violations = validate_network(net)
    assert len(violations) == 1
    assert "B" in violations[0] and "row 0" in violations[0]


def test_row_sum_within_tolerance_is_accepted():
    net = _net([
        Cpt("A", (), ((0.5, 0.5 + 1e-12),)),
        Cpt("B", ("A",), ((0.2, 0.8), (0.6, 0.4))),
    ])
    assert validate_network(net) == []


def test_cycle_is_reported():
    net = _net([
        Cpt("A", ("B",), ((0.5, 0.5), (0.5, 0.5))),
        Cpt("B", ("A",), ((0.2, 0.8), (0.6, 0.4))),
    ])
    violations = validate_network(net)
    assert any("cycle" in v for v in violations)


def test_every_violation_is_collected():
    net = _net(
        [
            Cpt("A", (), ((0.5, 0.5),)),
            Cpt("B", ("A",), ((0.2, 0.8),)),
            Cpt("C", ("Z",), ((1.0,),)),
        ],
        variables=(
            Variable("A", ("a", "a_bar")),
            Variable("B", ("b", "b_bar")),
            Variable("C", ("c",)),
        ),
    )
    violations = validate_network(net)
    assert any("rows" in v for v in violations)
    assert any("fewer than 2 values" in v for v in violations)
    assert any("unknown parent: Z" in v for v in violations)

    with pytest.raises(NetworkValidationError) as excinfo:
        require_valid(net)
    assert excinfo.value.violations == violations


def test_missing_cpt_is_reported():
    net = _net([Cpt("A", (), ((0.5, 0.5),))])
    assert validate_network(net) == ["Variable B has 0 CPTs (expected exactly 1)"]


def test_parameters_follow_declared_order(ab_network):
    labels = [ref.label() for ref in ab_network.parameters()]
    assert labels == [
        "A=a",
        "A=a_bar",
        "B=b | A=a",
        "B=b_bar | A=a",
        "B=b | A=a_bar",
        "B=b_bar | A=a_bar",
    ]
    assert family_label(("A", ())) == "A | -"


def test_parent_instantiations_first_parent_most_significant():
    variables = (
        Variable("A", ("a0", "a1")),
        Variable("B", ("b0", "b1", "b2")),
        Variable("C", ("c0", "c1")),
    )
    net = BayesianNetwork(variables, (
        Cpt("A", (), ((0.5, 0.5),)),
        Cpt("B", (), ((0.2, 0.3, 0.5),)),
        Cpt("C", ("A", "B"), tuple((0.1 * i, 1.0 - 0.1 * i) for i in range(6))),
    ))
    rows = net.parent_instantiations("C")
    assert rows[0] == (("A", "a0"), ("B", "b0"))
    assert rows[1] == (("A", "a0"), ("B", "b1"))
    assert rows[3] == (("A", "a1"), ("B", "b0"))
    assert net.row_index("C", (("A", "a1"), ("B", "b2"))) == 5
    assert net.parameter_value(ParameterRef("C", "c0", (("A", "a1"), ("B", "b1")))) == pytest.approx(0.4)


def test_with_row_leaves_original_untouched(ab_network):
    changed = ab_network.with_row("B", (("A", "a"),), (0.7, 0.3))
    assert changed.parameter_value(ParameterRef("B", "b", (("A", "a"),))) == 0.7
    assert ab_network.parameter_value(ParameterRef("B", "b", (("A", "a"),))) == 0.2
    assert changed.row("B", (("A", "a_bar"),)) == (0.6, 0.4)


def test_evidence_is_order_independent():
    assert Evidence.of(B="b", A="a") == Evidence.of({"A": "a", "B": "b"})
    e = Evidence.of(A="a", B="b")
    assert e.without("A") == Evidence.of(B="b")
    assert e.with_value("A", "a_bar").get("A") == "a_bar"
    assert "B" in e and "C" not in e
    assert len(e) == 2


def test_compatibility(ab_network):
    x = Instantiation.of(A="a", B="b_bar")
    assert is_compatible(ab_network, Evidence.of(A="a"), x)
    assert not is_compatible(ab_network, Evidence.of(B="b"), x)
    assert is_compatible(ab_network, Evidence(), x)
