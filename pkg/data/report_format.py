import json

from model import BayesianNetwork, Evidence
from sensitivity_engine import SensitivityReport, change_margin

# Sections, in output order: network, evidence, mpe, parameters, families,
# retraction, multiplicity. Floats are written as the shortest decimal
# literal that parses back to the identical double (repr), so every
# number keeps the full precision of the computation: 0.4 stands for the
# same double as 0.40000000000000002.


def _ordered(assignments: Evidence, net: BayesianNetwork) -> dict:
    values = assignments.as_dict()
    return {name: values[name] for name in net.names if name in values}


def _parameter_entry(report: SensitivityReport, ref) -> dict:
    interval = report.intervals[ref]
    threshold = report.thresholds[ref]
    return {
        "parameter": ref.label(),
        "variable": ref.variable,
        "value": ref.value,
        "parents": dict(ref.parents),
        "current": interval.current,
        "r": report.constants.r[ref],
        "k": report.constants.k[ref.family],
        "interval": [interval.lower, interval.upper],
        "lower_binding": interval.lower_binding,
        "upper_binding": interval.upper_binding,
        "branch": interval.branch,
        "margin": change_margin(interval),
        "tie": interval.tie,
        "uniform_redistribution": interval.uniform_redistribution,
        "uncoupled": {
            "k": threshold.k,
            "threshold": threshold.threshold,
            "side": threshold.side,
        },
    }


def report_document(report: SensitivityReport) -> dict:
    net = report.network
    return {
        "network": net.name,
        "evidence": _ordered(report.evidence, net),
        "mpe": {
            "witness": _ordered(report.mpe.witness, net),
            "probability": report.mpe.probability,
        },
        "parameters": [_parameter_entry(report, ref) for ref in net.parameters()],
        "families": [
            {"variable": variable, "parents": dict(u), "k": report.constants.k[(variable, u)]}
            for variable, u in net.families()
        ],
        "retraction": {
            "table": [
                {"variable": name, "value": value, "probability": report.retraction.entry(name, value)}
                for name in net.names
                for value in net.variable(name).values
            ],
            "verdicts": {name: report.verdicts[name].value for name in net.names if name in report.verdicts},
            "witnesses": {
                name: {
                    "witness": _ordered(report.retracted[name].witness, net),
                    "probability": report.retracted[name].probability,
                }
                for name in net.names
                if name in report.retracted
            },
        },
        "multiplicity": {name: report.multiplicity[name] for name in net.names if name in report.multiplicity},
    }


def retraction_document(report: SensitivityReport) -> dict:
    """The retract subcommand's subset of the report."""
    document = report_document(report)
    return {key: document[key] for key in ("network", "evidence", "mpe", "retraction", "multiplicity")}


def dump_document(document: dict) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def dump_report(report: SensitivityReport) -> str:
    return dump_document(report_document(report))
