"""Coded, severity-tagged findings and the published code catalog.

Every validator in the package returns a list of :class:`Diagnostic`. Lists
handed to callers are sorted with :func:`sort_diagnostics` so that reports are
reproducible byte for byte.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable
from dataclasses import dataclass

from easinnova.cells import ALL_CELLS, CellId


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"

    @property
    def rank(self) -> int:
        return {Severity.ERROR: 2, Severity.WARNING: 1, Severity.INFO: 0}[self]


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: Severity
    cell: CellId
    # "<artifact path>#<element locator>"; the locator part is optional.
    subject: str
    message: str

    @property
    def artifact(self) -> str:
        return self.subject.partition("#")[0]

    def sort_key(self) -> tuple:
        return (self.cell, self.code, self.subject, self.message, self.severity.rank)

    def render(self) -> str:
        return f"{self.severity.name} {self.code} {self.artifact}: {self.message}"

    def to_dict(self) -> dict[str, str]:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "cell": str(self.cell),
            "subject": self.subject,
            "message": self.message,
        }


def sort_diagnostics(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diagnostics, key=Diagnostic.sort_key)


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)


def at_least(diagnostics: Iterable[Diagnostic], severity: Severity) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity.rank >= severity.rank]


CATALOG: dict[str, str] = {
    # lexicon
    "OPAAL-MALFORMED": "lexicon entry missing fields or with an invalid name; entry skipped",
    "OPAAL-DUP": "term declared twice under the same category; duplicate skipped",
    "OPAAL-DUPLINK": "link declared twice (links compare unordered); duplicate skipped",
    "OPAAL-XCAT": "same name declared under more than one category",
    "OPAAL-GERUND": "Process term not written in gerund form",
    "OPAAL-ORPHAN": "term used by no link and no process model",
    "OPAAL-AMBIG": "link endpoint names a term declared under several categories",
    # consistency rules
    "R1": "link endpoints must be declared terms",
    "R2": "pool actor must be an Actor term (or, for ToBe, an organizational unit)",
    "R3": "task name must be a Process term",
    "R4": "task effect must target an Object term",
    "R5": "lane must be an Actor term or an organizational unit",
    "R6": "stored use case must be backed by a lexicon link",
    "R7": "class skeleton entries must be Object/Actor classes with Attribute attributes",
    "R8": "message flow must join two declared pools",
    # analysis
    "AN-DUP": "duplicate record label",
    "AN-EMPTY": "record with blank description or text",
    "AN-ONESIDED": "solution lists no cons",
    "AN-MULTISELECT": "more than one solution selected",
    "STRAT-UNCOVERED": "motivation without a strategy",
    "STRAT-DANGLING": "strategy referencing an unknown motivation",
    "NOTES-EMPTY": "blank guideline or organizational unit entry",
    "NOTES-DUP": "organizational unit declared twice",
    # process structure
    "PROC-DUP-POOL": "pool names must be unique",
    "PROC-DUP-NODE": "node ids must be unique within a pool",
    "PROC-DUP-FLOW": "flow ids must be unique",
    "PROC-LANE": "node assigned to a lane its pool does not declare",
    "PROC-FLOW-ENDPOINT": "sequence flow endpoint does not exist",
    "PROC-XPOOL-SEQ": "sequence flow crosses pools",
    "PROC-START-IN": "start event with incoming sequence flow",
    "PROC-END-OUT": "end event with outgoing sequence flow",
    "PROC-NOSTART": "pool without a start event",
    "PROC-NOEND": "pool without an end event",
    "PROC-DANGLING": "node unreachable from a start or stuck without outgoing flow",
    "PROC-GW-DEGREE": "gateway neither splits nor joins",
    "PROC-XOR-DEFAULT": "exclusive gateway with more than one default flow",
    "PROC-COND-NONXOR": "condition or default flag on a flow not leaving an exclusive gateway",
    "PROC-MSG-SAMEPOOL": "message flow inside one pool",
    "PROC-MSG-ENDPOINT": "message flow endpoint node does not exist",
    "PROC-MSG-KIND": "message flow endpoint kind cannot send/receive",
    "PROC-MSG-UNFED": "message-receiving event with no incoming message flow",
    "PSM-UNTYPED": "task without execution kind in a PSM model",
    "PSM-XOR-NOCOND": "exclusive split that an engine cannot decide",
    # CRUDA
    "CRUD-UNKNOWN-OBJ": "effect on an object missing from the lexicon",
    "CRUD-NO-CREATE": "object never created",
    "CRUD-NO-READ": "object created but never read",
    "CRUD-NO-DA": "object neither deleted nor archived",
    # transition
    "INV-DUP": "legacy entity listed twice in the inventory",
    "PLAT-SHORTLIST": "chosen platform missing from the shortlist",
    "MIG-UNMAPPED": "inventory entity without a migration mapping",
    "MIG-UNKNOWN-TARGET": "mapping target is not a ToBe Object term",
    "MIG-DROP-CRITICAL": "critical legacy entity dropped",
    "MIG-UNKNOWN-ENTITY": "mapping for an entity missing from the inventory",
    "MIG-DUP": "legacy entity mapped twice",
    # BPMN import
    "IO-UNSUPPORTED": "BPMN element outside the supported subset; skipped",
    "IO-DANGLING-REF": "BPMN reference to a skipped or missing element; skipped",
    # project plumbing
    "PROJ-PARSE": "artifact file could not be read or parsed",
    "PROJ-UNKNOWN-FILE": "file not part of the project layout; ignored",
    # gates
    "GATE-CIM-ASIS-NARRATIVE": "AsIs narrative missing",
    "GATE-CIM-ASIS-LEXICON": "AsIs lexicon missing",
    "GATE-CIM-ASIS-PROBLEMS": "no motivation records",
    "GATE-CIM-TRANSFORMATION-STATEMENT": "innovation statement missing",
    "GATE-CIM-TRANSFORMATION-SOLUTIONS": "no solution with both pros and cons",
    "GATE-CIM-TRANSFORMATION-SELECTION": "not exactly one solution selected",
    "GATE-CIM-TOBE-NARRATIVE": "ToBe narrative missing",
    "GATE-CIM-TOBE-LEXICON": "ToBe lexicon missing",
    "GATE-CIM-TOBE-SIGNOFF": "actor has not signed off",
    "GATE-PIM-ASIS-PROCESS": "AsIs process model missing",
    "GATE-PIM-TRANSFORMATION-GUIDELINES": "no transformation guideline",
    "GATE-PIM-TRANSFORMATION-ORGUNITS": "no organizational unit",
    "GATE-PIM-TOBE-PROCESS": "ToBe process model missing",
    "GATE-PIM-TOBE-CLASSES": "derived class skeleton missing",
    "GATE-PIM-TOBE-USECASES": "derived use cases missing",
    "GATE-PIM-TOBE-SIGNOFF": "actor has not signed off",
    "GATE-PSM-ASIS-INVENTORY": "legacy data inventory missing or empty",
    "GATE-PSM-TRANSFORMATION-PLATFORM": "platform choice missing",
    "GATE-PSM-TRANSFORMATION-MIGRATION": "migration plan missing",
    "GATE-PSM-TOBE-PROCESS": "ToBe PSM model missing or not at PSM maturity",
    "GATE-PSM-TOBE-EXPORT": "BPMN export failed",
    "GATE-PSM-TOBE-SIMULATION": "exhaustive simulation did not complete properly",
}


def diag(code: str, severity: Severity, cell: CellId, subject: str, message: str) -> Diagnostic:
    if code not in CATALOG:
        raise KeyError(f"diagnostic code {code!r} is not in the catalog")
    return Diagnostic(code, severity, cell, subject, message)


__all__ = [
    "ALL_CELLS",
    "CATALOG",
    "Diagnostic",
    "Severity",
    "at_least",
    "diag",
    "has_errors",
    "sort_diagnostics",
]
