"""CIM-Transformation knowledge: motivations, statement, strategies, solutions."""

from __future__ import annotations

import enum
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from typing import Any

from easinnova.cells import CellId, Layer, Stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.jsonio import check_schema, load_document

CELL = CellId(Layer.CIM, Stage.TRANSFORMATION)
MOTIVATIONS = f"{CELL.path}/motivations"
STATEMENT = f"{CELL.path}/statement"
STRATEGIES = f"{CELL.path}/strategies"
SOLUTIONS = f"{CELL.path}/solutions"


class MotivationKind(str, enum.Enum):
    PROBLEM = "Problem"
    DESIRE = "Desire"


@dataclass(frozen=True)
class MotivationRecord:
    label: str
    kind: MotivationKind
    description: str


@dataclass(frozen=True)
class InnovationStatement:
    text: str


@dataclass(frozen=True)
class StrategyRecord:
    motivation_label: str
    strategy: str


@dataclass(frozen=True)
class SolutionRecord:
    label: str
    description: str
    pros: tuple[str, ...] = ()
    cons: tuple[str, ...] = ()
    mitigations: tuple[str, ...] = ()
    selected: bool = False


class UnknownSolution(KeyError):
    pass


def validate_motivations(records: Sequence[MotivationRecord]) -> list[Diagnostic]:
    out = []
    counts = Counter(r.label for r in records)
    for label, n in counts.items():
        if n > 1:
            out.append(diag("AN-DUP", Severity.ERROR, CELL, f"{MOTIVATIONS}#{label}",
                            f"motivation label '{label}' used {n} times"))
    for r in records:
        if not r.description.strip():
            out.append(diag("AN-EMPTY", Severity.ERROR, CELL, f"{MOTIVATIONS}#{r.label}",
                            f"motivation '{r.label}' has a blank description"))
    return sort_diagnostics(out)


def check_strategy_coverage(
    motivations: Iterable[MotivationRecord], strategies: Iterable[StrategyRecord]
) -> list[Diagnostic]:
    labels = {m.label for m in motivations}
    covered = {s.motivation_label for s in strategies}
    out = [
        diag("STRAT-UNCOVERED", Severity.ERROR, CELL, f"{STRATEGIES}#{label}",
             f"motivation '{label}' has no innovation strategy")
        for label in sorted(labels - covered)
    ]
    out += [
        diag("STRAT-DANGLING", Severity.ERROR, CELL, f"{STRATEGIES}#{label}",
             f"strategy refers to unknown motivation '{label}'")
        for label in sorted(covered - labels)
    ]
    return sort_diagnostics(out)


def validate_solutions(solutions: Sequence[SolutionRecord]) -> list[Diagnostic]:
    out = []
    for label, n in Counter(s.label for s in solutions).items():
        if n > 1:
            out.append(diag("AN-DUP", Severity.ERROR, CELL, f"{SOLUTIONS}#{label}",
                            f"solution label '{label}' used {n} times"))
    for s in solutions:
        if not s.description.strip():
            out.append(diag("AN-EMPTY", Severity.ERROR, CELL, f"{SOLUTIONS}#{s.label}",
                            f"solution '{s.label}' has a blank description"))
        if not s.cons:
            out.append(diag("AN-ONESIDED", Severity.WARNING, CELL, f"{SOLUTIONS}#{s.label}",
                            f"solution '{s.label}' lists no cons"))
    selected = [s.label for s in solutions if s.selected]
    if len(selected) > 1:
        out.append(diag("AN-MULTISELECT", Severity.ERROR, CELL, SOLUTIONS,
                        f"{len(selected)} solutions selected: {', '.join(sorted(selected))}"))
    return sort_diagnostics(out)


def select_candidate(solutions: Sequence[SolutionRecord], label: str) -> list[SolutionRecord]:
    """Mark ``label`` as the one selected candidate, clearing any earlier pick."""
    if label not in {s.label for s in solutions}:
        raise UnknownSolution(label)
    return [replace(s, selected=(s.label == label)) for s in solutions]


def validate_statement(statement: InnovationStatement) -> list[Diagnostic]:
    if statement.text.strip():
        return []
    return [diag("AN-EMPTY", Severity.ERROR, CELL, STATEMENT, "innovation statement is blank")]


# JSON files under cim/transformation/

_TEXT_LIST = {"type": "array", "items": {"type": "string"}}

_MOTIVATIONS_SCHEMA = {
    "type": "object",
    "required": ["motivations"],
    "properties": {
        "motivations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "kind", "description"],
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "kind": {"enum": [k.value for k in MotivationKind]},
                    "description": {"type": "string"},
                },
            },
        }
    },
}

_STATEMENT_SCHEMA = {"type": "object", "required": ["text"], "properties": {"text": {"type": "string"}}}

_STRATEGIES_SCHEMA = {
    "type": "object",
    "required": ["strategies"],
    "properties": {
        "strategies": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["motivation_label", "strategy"],
                "properties": {"motivation_label": {"type": "string"}, "strategy": {"type": "string"}},
            },
        }
    },
}

_SOLUTIONS_SCHEMA = {
    "type": "object",
    "required": ["solutions"],
    "properties": {
        "solutions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "description"],
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "description": {"type": "string"},
                    "pros": _TEXT_LIST,
                    "cons": _TEXT_LIST,
                    "mitigations": _TEXT_LIST,
                    "selected": {"type": "boolean"},
                },
            },
        }
    },
}


def parse_motivations(document: Any) -> list[MotivationRecord]:
    data = load_document(document)
    check_schema(data, _MOTIVATIONS_SCHEMA, "motivations")
    return [MotivationRecord(m["label"], MotivationKind(m["kind"]), m["description"]) for m in data["motivations"]]


def parse_statement(document: Any) -> InnovationStatement:
    data = load_document(document)
    check_schema(data, _STATEMENT_SCHEMA, "statement")
    return InnovationStatement(data["text"])


def parse_strategies(document: Any) -> list[StrategyRecord]:
    data = load_document(document)
    check_schema(data, _STRATEGIES_SCHEMA, "strategies")
    return [StrategyRecord(s["motivation_label"], s["strategy"]) for s in data["strategies"]]


def parse_solutions(document: Any) -> list[SolutionRecord]:
    data = load_document(document)
    check_schema(data, _SOLUTIONS_SCHEMA, "solutions")
    return [
        SolutionRecord(
            label=s["label"],
            description=s["description"],
            pros=tuple(s.get("pros", ())),
            cons=tuple(s.get("cons", ())),
            mitigations=tuple(s.get("mitigations", ())),
            selected=s.get("selected", False),
        )
        for s in data["solutions"]
    ]


def serialize_solutions(solutions: Iterable[SolutionRecord]) -> dict[str, Any]:
    return {
        "solutions": [
            {
                "label": s.label,
                "description": s.description,
                "pros": list(s.pros),
                "cons": list(s.cons),
                "mitigations": list(s.mitigations),
                "selected": s.selected,
            }
            for s in solutions
        ]
    }
