"""Cross-model rules R1-R8.

Each rule is a pure function of a loaded project snapshot. AsIs models are
checked against the AsIs lexicon and ToBe models against the ToBe lexicon;
no rule compares the two stages. Rules report gaps and never edit artifacts.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING

from easinnova.cells import CellId, Layer, Stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.opaal import Category, OpaalLexicon, check_link_endpoints

if TYPE_CHECKING:
    from easinnova.project import Project

STAGES = (Stage.ASIS, Stage.TOBE)


@dataclass(frozen=True)
class Rule:
    code: str
    title: str
    severity: Severity
    reads: frozenset[CellId]
    check: Callable[[Project, Stage, OpaalLexicon], list[Diagnostic]]


def _model_cells(stage: Stage) -> set[CellId]:
    cells = {CellId(Layer.PIM, stage)}
    if stage is Stage.TOBE:
        cells.add(CellId(Layer.PSM, stage))
    return cells


def _accepted_owners(project: Project, stage: Stage, lex: OpaalLexicon) -> frozenset[str]:
    # Organizational units from the PIM transformation notes describe the ToBe organization only.
    actors = lex.names(Category.ACTOR)
    if stage is Stage.TOBE:
        return actors | project.org_units()
    return actors


def _r1(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    return check_link_endpoints(lex)


def _r2(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    accepted = _accepted_owners(project, stage, lex)
    out = []
    for model in project.models(stage):
        for pool in model.pools:
            if pool.actor not in accepted:
                out.append(diag("R2", Severity.ERROR, model.cell, f"{model.subject}#{pool.name}",
                                f"pool '{pool.name}' actor '{pool.actor}' not found in {stage.label} Actor terms"))
    return out


def _r3(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    processes = lex.names(Category.PROCESS)
    return [
        diag("R3", Severity.ERROR, model.cell, f"{model.subject}#{pool.name}/{node.id}",
             f"task '{node.label}' not found in {stage.label} Process terms")
        for model in project.models(stage)
        for pool, node in model.tasks()
        if node.label not in processes
    ]


def _r4(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    objects = lex.names(Category.OBJECT)
    out = []
    for model in project.models(stage):
        for pool, node in model.tasks():
            ops: dict[str, list[str]] = {}
            for effect in node.detail.effects:
                if effect.object not in objects:
                    ops.setdefault(effect.object, []).append(effect.op)
            for obj, letters in ops.items():
                out.append(diag("R4", Severity.ERROR, model.cell, f"{model.subject}#{pool.name}/{node.id}/{obj}",
                                f"task '{node.label}' effect {''.join(letters)} on '{obj}' "
                                f"not found in {stage.label} Object terms"))
    return out


def _r5(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    accepted = _accepted_owners(project, stage, lex)
    return [
        diag("R5", Severity.ERROR, model.cell, f"{model.subject}#{pool.name}/lanes/{lane}",
             f"lane '{lane}' of pool '{pool.name}' is neither a {stage.label} Actor term "
             "nor an organizational unit")
        for model in project.models(stage)
        for pool in model.pools
        for lane in pool.lanes
        if lane not in accepted
    ]


def _r6(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    use_cases = project.use_cases(stage)
    if use_cases is None:
        return []
    cell = CellId(Layer.PIM, stage)
    links = {link.key for link in lex.links}
    return [
        diag("R6", Severity.ERROR, cell, f"{cell.path}/usecases#{u.actor}/{u.action}",
             f"use case ({u.actor}, {u.action}) has no supporting {stage.label} lexicon link")
        for u in use_cases
        if frozenset((u.actor, u.action)) not in links
    ]


def _r7(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    skeleton = project.classes(stage)
    if skeleton is None:
        return []
    cell = CellId(Layer.PIM, stage)
    classes = lex.names(Category.OBJECT) | lex.names(Category.ACTOR)
    attributes = lex.names(Category.ATTRIBUTE)
    out = []
    for c in skeleton.classes:
        if c.name not in classes:
            out.append(diag("R7", Severity.ERROR, cell, f"{cell.path}/classes#{c.name}",
                            f"class '{c.name}' not found in {stage.label} Object or Actor terms"))
        for attr in c.attributes:
            if attr not in attributes:
                out.append(diag("R7", Severity.ERROR, cell, f"{cell.path}/classes#{c.name}/{attr}",
                                f"attribute '{attr}' of class '{c.name}' not found in {stage.label} Attribute terms"))
    return out


def _r8(project: Project, stage: Stage, lex: OpaalLexicon) -> list[Diagnostic]:
    # A declared pool already failing R2 is reported there, not again here.
    out = []
    for model in project.models(stage):
        declared = {p.name for p in model.pools}
        for m in model.message_flows:
            missing = [pool for pool in dict.fromkeys((m.source_pool, m.target_pool)) if pool not in declared]
            if missing:
                out.append(diag("R8", Severity.ERROR, model.cell, f"{model.subject}#messages/{m.id}",
                                f"message flow '{m.id}' joins undeclared pool(s): {', '.join(missing)}"))
    return out


_CIM = {s: CellId(Layer.CIM, s) for s in STAGES}
_NOTES = CellId(Layer.PIM, Stage.TRANSFORMATION)


def _reads(*extra: CellId, models: bool = True) -> frozenset[CellId]:
    cells = set(_CIM.values()) | set(extra)
    if models:
        for stage in STAGES:
            cells |= _model_cells(stage)
    return frozenset(cells)


RULES: tuple[Rule, ...] = (
    Rule("R1", "link endpoints are declared terms", Severity.ERROR, _reads(models=False), _r1),
    Rule("R2", "pool actors are Actor terms", Severity.ERROR, _reads(_NOTES), _r2),
    Rule("R3", "task names are Process terms", Severity.ERROR, _reads(), _r3),
    Rule("R4", "task effects target Object terms", Severity.ERROR, _reads(), _r4),
    Rule("R5", "lanes are Actor terms or organizational units", Severity.ERROR, _reads(_NOTES), _r5),
    Rule("R6", "stored use cases are backed by links", Severity.ERROR,
         _reads(CellId(Layer.PIM, Stage.ASIS), CellId(Layer.PIM, Stage.TOBE), models=False), _r6),
    Rule("R7", "stored classes use Object/Actor and Attribute terms", Severity.ERROR,
         _reads(CellId(Layer.PIM, Stage.ASIS), CellId(Layer.PIM, Stage.TOBE), models=False), _r7),
    Rule("R8", "message flows join declared pools", Severity.ERROR, _reads(), _r8),
)


def run_rules(project: Project, scope: CellId | None = None) -> list[Diagnostic]:
    """Evaluate R1-R8 for both stages; keep only findings in ``scope`` when given.

    Rules for a stage whose lexicon is missing are skipped; the cell gates
    report the missing lexicon.
    """
    out: set[Diagnostic] = set()
    for stage in STAGES:
        lex = project.lexicon(stage)
        if lex is None:
            continue
        for rule in RULES:
            out.update(rule.check(project, stage, lex))
    return sort_diagnostics(d for d in out if scope is None or d.cell == scope)


def suggest_terms(project: Project) -> dict[str, dict[str, list[str]]]:
    """Names used by models or stored derivations but missing from the stage lexicon.

    Keyed by stage label, then by the category the name would most likely
    belong to (``LinkEndpoint`` when only a link mentions it). The engine
    never adds them; this is input for a human edit.
    """
    result: dict[str, dict[str, list[str]]] = {}
    for stage in STAGES:
        lex = project.lexicon(stage)
        if lex is None:
            continue
        found: dict[str, set[str]] = {key: set() for key in ("Actor", "Process", "Object", "LinkEndpoint")}
        owners = _accepted_owners(project, stage, lex)
        for model in project.models(stage):
            for pool in model.pools:
                if pool.actor not in owners:
                    found["Actor"].add(pool.actor)
                found["Actor"].update(lane for lane in pool.lanes if lane not in owners)
            for _, node in model.tasks():
                if node.label not in lex.names(Category.PROCESS):
                    found["Process"].add(node.label)
                found["Object"].update(
                    e.object for e in node.detail.effects if e.object not in lex.names(Category.OBJECT)
                )
        declared = lex.all_names()
        for link in lex.links:
            for endpoint in (link.source, link.target):
                if endpoint not in declared:
                    found["LinkEndpoint"].add(endpoint)
        entries = {key: sorted(names) for key, names in found.items() if names}
        if entries:
            result[stage.label] = entries
    return result


def rules_reading(cell: CellId) -> list[str]:
    return [r.code for r in RULES if cell in r.reads]

