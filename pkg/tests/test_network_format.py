import json

import pytest

from data.network_format import (
    format_evidence,
    load_network,
    parse_evidence,
    read_evidence,
    read_network,
    serialize_network,
    write_network,
)
from model import Evidence, NetworkFormatError, NetworkValidationError, UnknownReferenceError


def test_read_network_fixture(ab_network):
    assert ab_network.name == "ab"
    assert ab_network.names == ("A", "B")
    assert ab_network.cpt("B").rows == ((0.2, 0.8), (0.6, 0.4))


def test_serialize_then_load_is_identity(ab_network, symmetric_network):
    for net in (ab_network, symmetric_network):
        assert load_network(serialize_network(net)) == net


def test_write_and_read_back(tmp_path, ab_network):
    path = tmp_path / "copy.json"
    write_network(ab_network, path)
    assert read_network(path) == ab_network


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_network(tmp_path / "nope.json")


@pytest.mark.parametrize(
    "document",
    [
        "not json",
        "[]",
        json.dumps({"variables": []}),
        json.dumps({"variables": [{"name": "A"}], "cpts": []}),
        json.dumps({"variables": [{"name": "A", "values": ["a", "b"]}],
                    "cpts": [{"child": "A", "table": [["x", 1.0]]}]}),
        json.dumps({"variables": [{"name": "A", "values": ["a", "b"]}],
                    "cpts": [{"child": "A", "table": [[True, False]]}]}),
    ],
)
def test_malformed_documents(document):
    with pytest.raises(NetworkFormatError):
        load_network(document)


def test_invalid_network_reports_violations():
    document = json.dumps({
        "variables": [{"name": "A", "values": ["a", "a_bar"]}],
        "cpts": [{"child": "A", "parents": [], "table": [[0.5, 0.6]]}],
    })
    with pytest.raises(NetworkValidationError) as excinfo:
        load_network(document)
    assert len(excinfo.value.violations) == 1


def test_parse_evidence_tokens(ab_network):
    assert parse_evidence("A=a B=b_bar", ab_network) == Evidence.of(A="a", B="b_bar")
    assert parse_evidence(["A=a", "B=b"]) == Evidence.of(A="a", B="b")
    assert parse_evidence("") == Evidence()


@pytest.mark.parametrize("tokens", ["A", "A=", "=a", "A=a=b", "A=a A=a_bar"])
def test_parse_evidence_rejects_bad_tokens(tokens):
    with pytest.raises(NetworkFormatError):
        parse_evidence(tokens)


def test_parse_evidence_checks_references(ab_network):
    with pytest.raises(UnknownReferenceError):
        parse_evidence("C=c", ab_network)
    with pytest.raises(UnknownReferenceError):
        parse_evidence("A=b", ab_network)


def test_read_evidence(tmp_path, ab_network):
    path = tmp_path / "e.txt"
    path.write_text("B=b\nA=a_bar\n", encoding="utf-8")
    e = read_evidence(path, ab_network)
    assert e == Evidence.of(A="a_bar", B="b")
    assert format_evidence(e, ab_network) == "A=a_bar B=b"
