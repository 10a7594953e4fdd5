import json
from pathlib import Path

from model import (
    BayesianNetwork,
    Cpt,
    Evidence,
    NetworkFormatError,
    Variable,
    check_references,
    require_valid,
)

# Document shape:
# {
#   "variables": [{"name": "A", "values": ["a", "a_bar"]}, ...],
#   "cpts": [{"child": "B", "parents": ["A"], "table": [[0.2, 0.8], [0.6, 0.4]]}, ...]
# }


def _require(condition, message):
    if not condition:
        raise NetworkFormatError(message)


def _parse_variable(entry, position):
    _require(isinstance(entry, dict), f"variables[{position}] is not an object")
    name = entry.get("name")
    values = entry.get("values")
    _require(isinstance(name, str) and name, f"variables[{position}] needs a non-empty string 'name'")
    _require(
        isinstance(values, list) and all(isinstance(v, str) and v for v in values),
        f"variable {name} needs 'values' as a list of non-empty strings",
    )
    return Variable(name, tuple(values))


def _parse_cpt(entry, position):
    _require(isinstance(entry, dict), f"cpts[{position}] is not an object")
    child = entry.get("child")
    parents = entry.get("parents", [])
    table = entry.get("table")
    _require(isinstance(child, str) and child, f"cpts[{position}] needs a string 'child'")
    _require(
        isinstance(parents, list) and all(isinstance(p, str) for p in parents),
        f"cpt {child}: 'parents' must be a list of variable names",
    )
    _require(isinstance(table, list), f"cpt {child}: 'table' must be a list of rows")

    rows = []
    for i, row in enumerate(table):
        _require(isinstance(row, list), f"cpt {child}: row {i} is not a list")
        # bool is an int subclass; reject it explicitly
        _require(
            all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in row),
            f"cpt {child}: row {i} holds a non-numeric entry",
        )
        rows.append(tuple(float(p) for p in row))
    return Cpt(child, tuple(parents), tuple(rows))


def parse_network(document: str, name: str = "network") -> BayesianNetwork:
    """Structural parse only; see load_network for the validated form."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise NetworkFormatError(f"Network document is not valid JSON: {e}")

    _require(isinstance(raw, dict), "Network document must be an object")
    _require(isinstance(raw.get("variables"), list), "Network document needs a 'variables' list")
    _require(isinstance(raw.get("cpts"), list), "Network document needs a 'cpts' list")

    variables = tuple(_parse_variable(v, i) for i, v in enumerate(raw["variables"]))
    cpts = tuple(_parse_cpt(c, i) for i, c in enumerate(raw["cpts"]))
    return BayesianNetwork(variables, cpts, name=raw.get("name", name))


def load_network(document: str, name: str = "network") -> BayesianNetwork:
    return require_valid(parse_network(document, name=name))


def serialize_network(net: BayesianNetwork) -> str:
    document = {
        "name": net.name,
        "variables": [{"name": v.name, "values": list(v.values)} for v in net.variables],
        "cpts": [
            {"child": c.child, "parents": list(c.parents), "table": [list(row) for row in c.rows]}
            for c in net.cpts
        ],
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def read_network(path) -> BayesianNetwork:
    path = Path(path)
    # FileNotFoundError propagates untouched; the CLI reports it separately
    text = path.read_text(encoding="utf-8")
    return load_network(text, name=path.stem)


def write_network(net: BayesianNetwork, path):
    Path(path).write_text(serialize_network(net), encoding="utf-8")


# ===============================================================
# 🧾 EVIDENCE TOKENS
# ===============================================================
def parse_evidence(tokens, net: BayesianNetwork = None) -> Evidence:
    """
    Whitespace-separated Var=value tokens, given as one string or a list
    of strings. With a network, every reference is checked.
    """
    if isinstance(tokens, str):
        tokens = tokens.split()
    else:
        tokens = [part for token in tokens for part in token.split()]

    assignments = {}
    for token in tokens:
        name, sep, value = token.partition("=")
        if not sep or not name or not value or "=" in value:
            raise NetworkFormatError(f"Evidence token is not Var=value: {token!r}")
        if name in assignments and assignments[name] != value:
            raise NetworkFormatError(f"Evidence assigns {name} twice")
        assignments[name] = value

    evidence = Evidence.of(assignments)
    if net is not None:
        check_references(net, evidence)
    return evidence


def read_evidence(path, net: BayesianNetwork = None) -> Evidence:
    return parse_evidence(Path(path).read_text(encoding="utf-8"), net)


def format_evidence(evidence: Evidence, net: BayesianNetwork = None) -> str:
    items = evidence.items
    if net is not None:
        items = sorted(items, key=lambda kv: net.index_of(kv[0]))
    return " ".join(f"{k}={v}" for k, v in items)
