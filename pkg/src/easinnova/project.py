"""On-disk project: the nine-cell matrix, artifact loading, gates and traversal.

Layout::

    project.json
    cim/asis/            narrative.json lexicon.json
    cim/transformation/  motivations.json statement.json strategies.json solutions.json
    cim/tobe/            narrative.json lexicon.json
    pim/asis/            process.json [classes.json] [usecases.json]
    pim/transformation/  notes.json
    pim/tobe/            process.json classes.json usecases.json
    psm/asis/            inventory.json
    psm/transformation/  platform.json migration.json
    psm/tobe/            process.json

Statuses are recomputed from the loaded snapshot on every query; nothing is
cached on disk and no cell is ever locked.
"""

from __future__ import annotations

import enum
import functools
import json
from collections import Counter
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from easinnova import analysis, bpmn_io, consistency, transition
from easinnova.cells import ALL_CELLS, CellId, Layer, Stage
from easinnova.crud import check_cruda_completeness, derive_cruda
from easinnova.diagnostics import Diagnostic, Severity, diag, has_errors, sort_diagnostics
from easinnova.jsonio import DocumentError, check_schema, dumps, is_identifier, load_document
from easinnova.opaal import (
    ClassModelSkeleton,
    LintSettings,
    OpaalLexicon,
    UseCase,
    parse_class_skeleton,
    parse_lexicon,
    parse_use_cases,
    validate_lexicon,
)
from easinnova.process import (
    Maturity,
    ProcessError,
    ProcessModel,
    check_executable,
    parse_process,
    referenced_names,
    validate_structure,
)
from easinnova.simulate import Outcome, SimConfig, explore

MANIFEST = "project.json"


class ProjectError(Exception):
    """The project directory is missing, unreadable or has a bad manifest."""


class CellState(str, enum.Enum):
    EMPTY = "Empty"
    DRAFT = "Draft"
    READY = "Ready"


class _Done:
    _instance: _Done | None = None

    def __new__(cls) -> _Done:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Done"

    __str__ = __repr__


DONE = _Done()


@dataclass(frozen=True)
class ActorSignoff:
    name: str
    signed_off: bool = False


@dataclass(frozen=True)
class ProjectSettings:
    # per-stage gerund lint switch; None keeps the stage default
    gerund_lint: Mapping[Stage, bool | None] = field(default_factory=dict)
    # (code, subject) pairs accepted as known findings; reported as warnings
    acknowledged: frozenset[tuple[str, str]] = frozenset()

    def lint(self, stage: Stage) -> LintSettings:
        return LintSettings(self.gerund_lint.get(stage))


@dataclass(frozen=True)
class OrgUnit:
    name: str
    description: str = ""


@dataclass(frozen=True)
class TransformationNotes:
    guidelines: tuple[str, ...] = ()
    org_units: tuple[OrgUnit, ...] = ()


NOTES_CELL = CellId(Layer.PIM, Stage.TRANSFORMATION)
NOTES = f"{NOTES_CELL.path}/notes"

_NOTES_SCHEMA = {
    "type": "object",
    "required": ["guidelines", "org_units"],
    "properties": {
        "guidelines": {"type": "array", "items": {"type": "string"}},
        "org_units": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {"name": {"type": "string"}, "description": {"type": "string"}},
            },
        },
    },
}


def parse_notes(document: Any) -> TransformationNotes:
    data = load_document(document)
    check_schema(data, _NOTES_SCHEMA, "transformation notes")
    return TransformationNotes(
        tuple(data["guidelines"]),
        tuple(OrgUnit(u["name"], u.get("description", "")) for u in data["org_units"]),
    )


def validate_notes(notes: TransformationNotes) -> list[Diagnostic]:
    out = []
    for i, text in enumerate(notes.guidelines):
        if not text.strip():
            out.append(diag("NOTES-EMPTY", Severity.ERROR, NOTES_CELL, f"{NOTES}#guidelines/{i}",
                            f"guideline {i} is blank"))
    for i, unit in enumerate(notes.org_units):
        if not unit.name.strip():
            out.append(diag("NOTES-EMPTY", Severity.ERROR, NOTES_CELL, f"{NOTES}#org_units/{i}",
                            f"organizational unit {i} has a blank name"))
    for name, n in Counter(u.name for u in notes.org_units if u.name.strip()).items():
        if n > 1:
            out.append(diag("NOTES-DUP", Severity.ERROR, NOTES_CELL, f"{NOTES}#org_units/{name}",
                            f"organizational unit '{name}' declared {n} times"))
    return sort_diagnostics(out)


@dataclass(frozen=True)
class Narrative:
    text: str


_NARRATIVE_SCHEMA = {"type": "object", "required": ["text"], "properties": {"text": {"type": "string"}}}


def parse_narrative(document: Any) -> Narrative:
    data = load_document(document)
    check_schema(data, _NARRATIVE_SCHEMA, "narrative")
    return Narrative(data["text"])


# --- artifact registry -----------------------------------------------------

Loader = Callable[[CellId, Any], tuple[Any, list[Diagnostic]]]


def _plain(parse: Callable[[Any], Any]) -> Loader:
    return lambda cell, data: (parse(data), [])


def _lexicon(cell: CellId, data: Any) -> tuple[Any, list[Diagnostic]]:
    lex, diags = parse_lexicon(data)
    if lex.stage != cell.stage:
        raise DocumentError(f"lexicon declares stage {lex.stage.name}, expected {cell.stage.name}")
    return lex, diags


def _staged(parse: Callable[[Any], tuple[Stage, Any]]) -> Loader:
    def load(cell: CellId, data: Any) -> tuple[Any, list[Diagnostic]]:
        stage, value = parse(data)
        if stage != cell.stage:
            raise DocumentError(f"document declares stage {stage.name}, expected {cell.stage.name}")
        return value, []
    return load


def _process(cell: CellId, data: Any) -> tuple[Any, list[Diagnostic]]:
    model = parse_process(data)
    if model.cell != cell:
        raise DocumentError(
            f"model is {model.maturity.value} {model.stage.name}, expected {cell.layer.name} {cell.stage.name}"
        )
    return model, []


_NARRATIVE = _plain(parse_narrative)

LAYOUT: dict[CellId, dict[str, Loader]] = {
    CellId(Layer.CIM, Stage.ASIS): {"narrative": _NARRATIVE, "lexicon": _lexicon},
    CellId(Layer.CIM, Stage.TRANSFORMATION): {
        "motivations": _plain(analysis.parse_motivations),
        "statement": _plain(analysis.parse_statement),
        "strategies": _plain(analysis.parse_strategies),
        "solutions": _plain(analysis.parse_solutions),
    },
    CellId(Layer.CIM, Stage.TOBE): {"narrative": _NARRATIVE, "lexicon": _lexicon},
    CellId(Layer.PIM, Stage.ASIS): {
        "process": _process,
        "classes": _staged(parse_class_skeleton),
        "usecases": _staged(parse_use_cases),
    },
    CellId(Layer.PIM, Stage.TRANSFORMATION): {"notes": _plain(parse_notes)},
    CellId(Layer.PIM, Stage.TOBE): {
        "process": _process,
        "classes": _staged(parse_class_skeleton),
        "usecases": _staged(parse_use_cases),
    },
    CellId(Layer.PSM, Stage.ASIS): {"inventory": _plain(transition.parse_inventory)},
    CellId(Layer.PSM, Stage.TRANSFORMATION): {
        "platform": _plain(transition.parse_platform),
        "migration": _plain(transition.parse_migration),
    },
    CellId(Layer.PSM, Stage.TOBE): {"process": _process},
}


@dataclass(frozen=True)
class CellContent:
    files: tuple[str, ...] = ()
    artifacts: Mapping[str, Any] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.files


@dataclass(frozen=True)
class CellStatus:
    cell: CellId
    state: CellState
    diagnostics: tuple[Diagnostic, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "cell": str(self.cell),
            "state": self.state.value,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }


@dataclass(frozen=True, eq=False)
class Project:
    name: str
    cells: Mapping[CellId, CellContent]
    actors_registry: tuple[ActorSignoff, ...] = ()
    settings: ProjectSettings = field(default_factory=ProjectSettings)
    root: Path | None = None
    load_diagnostics: tuple[Diagnostic, ...] = ()

    def artifact(self, cell: CellId, stem: str) -> Any:
        return self.cells[cell].artifacts.get(stem)

    def lexicon(self, stage: Stage) -> OpaalLexicon | None:
        return self.artifact(CellId(Layer.CIM, stage), "lexicon")

    def models(self, stage: Stage) -> list[ProcessModel]:
        found = [self.artifact(CellId(layer, stage), "process") for layer in (Layer.PIM, Layer.PSM)]
        return [m for m in found if m is not None]

    def use_cases(self, stage: Stage) -> list[UseCase] | None:
        return self.artifact(CellId(Layer.PIM, stage), "usecases")

    def classes(self, stage: Stage) -> ClassModelSkeleton | None:
        return self.artifact(CellId(Layer.PIM, stage), "classes")

    def notes(self) -> TransformationNotes | None:
        return self.artifact(NOTES_CELL, "notes")

    def org_units(self) -> frozenset[str]:
        notes = self.notes()
        return frozenset(u.name for u in notes.org_units) if notes else frozenset()

    @functools.cached_property
    def statuses(self) -> dict[CellId, CellStatus]:
        return _evaluate(self)


# --- loading ----------------------------------------------------------------

_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "properties": {
        "name": {"type": "string"},
        "settings": {
            "type": "object",
            "properties": {
                "gerund_lint": {
                    "oneOf": [
                        {"type": ["boolean", "null"]},
                        {
                            "type": "object",
                            "properties": {"ASIS": {"type": ["boolean", "null"]}, "TOBE": {"type": ["boolean", "null"]}},
                            "additionalProperties": False,
                        },
                    ]
                },
                "acknowledged": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["code", "subject"],
                        "properties": {"code": {"type": "string"}, "subject": {"type": "string"}},
                    },
                },
            },
        },
        "actors_registry": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {"name": {"type": "string"}, "signed_off": {"type": "boolean"}},
            },
        },
    },
}


def parse_manifest(document: Any) -> tuple[str, ProjectSettings, tuple[ActorSignoff, ...]]:
    data = load_document(document)
    check_schema(data, _MANIFEST_SCHEMA, MANIFEST)
    if not is_identifier(data["name"]):
        raise DocumentError(f"project name {data['name']!r} is not an identifier")
    raw = data.get("settings", {})
    lint = raw.get("gerund_lint")
    if isinstance(lint, dict):
        gerund = {Stage[k]: v for k, v in lint.items()}
    else:
        gerund = {Stage.ASIS: lint, Stage.TOBE: lint}
    settings = ProjectSettings(
        gerund_lint=gerund,
        acknowledged=frozenset((a["code"], a["subject"]) for a in raw.get("acknowledged", [])),
    )
    registry = tuple(ActorSignoff(a["name"], a.get("signed_off", False)) for a in data.get("actors_registry", []))
    dup = [n for n, k in Counter(a.name for a in registry).items() if k > 1]
    if dup:
        raise DocumentError(f"actors_registry lists {', '.join(sorted(dup))} more than once")
    return data["name"], settings, registry


def _load_cell(root: Path, cell: CellId) -> tuple[CellContent, list[Diagnostic]]:
    directory = root / cell.path
    loaders = LAYOUT[cell]
    files: list[str] = []
    artifacts: dict[str, Any] = {}
    out: list[Diagnostic] = []
    if not directory.is_dir():
        return CellContent(), out
    for path in sorted(directory.iterdir()):
        stem = path.stem if path.suffix == ".json" else None
        if stem not in loaders or not path.is_file():
            out.append(diag("PROJ-UNKNOWN-FILE", Severity.INFO, cell, f"{cell.path}/{path.name}",
                            f"'{path.name}' is not a {cell} artifact; ignored"))
            continue
        files.append(path.name)
        subject = f"{cell.path}/{stem}"
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            value, diags = loaders[stem](cell, data)
        except (OSError, UnicodeDecodeError, json.JSONDecodeError, DocumentError, ProcessError, ValueError) as exc:
            out.append(diag("PROJ-PARSE", Severity.ERROR, cell, subject, f"{path.name}: {exc}"))
            continue
        artifacts[stem] = value
        out.extend(diags)
    return CellContent(tuple(files), artifacts), out


def load_project(root: str | Path) -> Project:
    """Read a project directory. Unparseable artifacts become PROJ-PARSE diagnostics."""
    root = Path(root)
    manifest = root / MANIFEST
    if not manifest.is_file():
        raise ProjectError(f"{root}: no {MANIFEST} found (run 'easinnova init')")
    try:
        name, settings, registry = parse_manifest(json.loads(manifest.read_text(encoding="utf-8")))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError, DocumentError) as exc:
        raise ProjectError(f"{manifest}: {exc}") from exc
    cells = {}
    diagnostics: list[Diagnostic] = []
    for cell in ALL_CELLS:
        cells[cell], diags = _load_cell(root, cell)
        diagnostics += diags
    return Project(name, cells, registry, settings, root, tuple(sort_diagnostics(diagnostics)))


def init_project(name: str, target: str | Path) -> Project:
    if not is_identifier(name):
        raise ProjectError(f"project name {name!r} is not an identifier")
    target = Path(target)
    if (target / MANIFEST).exists():
        raise ProjectError(f"{target}: already initialized")
    try:
        for cell in ALL_CELLS:
            (target / cell.path).mkdir(parents=True, exist_ok=True)
        manifest = {"name": name, "settings": {"gerund_lint": None, "acknowledged": []}, "actors_registry": []}
        (target / MANIFEST).write_text(dumps(manifest), encoding="utf-8")
    except OSError as exc:
        raise ProjectError(f"{target}: cannot write project skeleton: {exc}") from exc
    return load_project(target)


# --- evaluation -------------------------------------------------------------

def _producers(project: Project) -> list[Diagnostic]:
    out = list(project.load_diagnostics)
    for stage in consistency.STAGES:
        lex = project.lexicon(stage)
        if lex is not None:
            used = referenced_names(project.models(stage))
            out += validate_lexicon(lex, project.settings.lint(stage), used_names=used)

    cim_t = CellId(Layer.CIM, Stage.TRANSFORMATION)
    motivations = project.artifact(cim_t, "motivations")
    strategies = project.artifact(cim_t, "strategies")
    solutions = project.artifact(cim_t, "solutions")
    statement = project.artifact(cim_t, "statement")
    if motivations is not None:
        out += analysis.validate_motivations(motivations)
    if motivations is not None or strategies is not None:
        out += analysis.check_strategy_coverage(motivations or [], strategies or [])
    if solutions is not None:
        out += analysis.validate_solutions(solutions)
    if statement is not None:
        out += analysis.validate_statement(statement)

    for stage in consistency.STAGES:
        lex = project.lexicon(stage)
        for model in project.models(stage):
            out += validate_structure(model)
            if lex is not None:
                matrix, _unknown = derive_cruda([model], lex)  # unknown objects are rule R4 findings
                out += check_cruda_completeness(matrix)

    notes = project.notes()
    if notes is not None:
        out += validate_notes(notes)

    inventory = project.artifact(transition.INVENTORY_CELL, "inventory")
    platform = project.artifact(transition.PLAN_CELL, "platform")
    migration = project.artifact(transition.PLAN_CELL, "migration")
    if inventory is not None:
        out += transition.validate_inventory(inventory)
    if platform is not None:
        out += transition.validate_platform(platform)
    if migration is not None:
        out += transition.validate_migration_plan(migration, inventory or [], project.lexicon(Stage.TOBE))

    psm = project.artifact(CellId(Layer.PSM, Stage.TOBE), "process")
    if psm is not None:
        out += check_executable(psm)
    out += consistency.run_rules(project)
    return out


def _gate(cell: CellId, item: str, subject: str, message: str) -> Diagnostic:
    return diag(f"GATE-{cell}-{item}", Severity.ERROR, cell, subject, message)


def _signoff_gates(project: Project, cell: CellId) -> list[Diagnostic]:
    return [
        _gate(cell, "SIGNOFF", f"{MANIFEST}#actors_registry/{a.name}", f"actor '{a.name}' has not signed off")
        for a in project.actors_registry
        if not a.signed_off
    ]


def _gates(project: Project, cell: CellId) -> list[Diagnostic]:
    a = functools.partial(project.artifact, cell)
    out: list[Diagnostic] = []

    def need(stem: str, item: str, message: str, ok: bool | None = None) -> None:
        present = a(stem) is not None if ok is None else ok
        if not present:
            out.append(_gate(cell, item, f"{cell.path}/{stem}", message))

    layer, stage = cell
    if layer is Layer.CIM and stage is not Stage.TRANSFORMATION:
        narrative = a("narrative")
        need("narrative", "NARRATIVE", f"{stage.label} narrative missing or blank",
             narrative is not None and bool(narrative.text.strip()))
        need("lexicon", "LEXICON", f"{stage.label} lexicon missing")
        if stage is Stage.ASIS:
            motivations = project.artifact(analysis.CELL, "motivations")
            if not motivations:
                out.append(_gate(cell, "PROBLEMS", analysis.MOTIVATIONS, "no motivation (problem or desire) recorded"))
        else:
            out += _signoff_gates(project, cell)
    elif cell == analysis.CELL:
        need("statement", "STATEMENT", "innovation statement missing")
        solutions = a("solutions") or []
        if not any(s.pros and s.cons for s in solutions):
            out.append(_gate(cell, "SOLUTIONS", analysis.SOLUTIONS, "no solution lists both pros and cons"))
        if not any(s.selected for s in solutions):
            out.append(_gate(cell, "SELECTION", analysis.SOLUTIONS, "no candidate solution selected"))
    elif cell == CellId(Layer.PIM, Stage.ASIS):
        need("process", "PROCESS", "AsIs process model missing")
    elif cell == NOTES_CELL:
        notes = a("notes")
        need("notes", "GUIDELINES", "no transformation guideline", bool(notes and notes.guidelines))
        need("notes", "ORGUNITS", "no organizational unit", bool(notes and notes.org_units))
    elif cell == CellId(Layer.PIM, Stage.TOBE):
        need("process", "PROCESS", "ToBe process model missing")
        need("classes", "CLASSES", "class skeleton missing (run 'easinnova derive --write')")
        need("usecases", "USECASES", "use cases missing (run 'easinnova derive --write')")
        out += _signoff_gates(project, cell)
    elif cell == transition.INVENTORY_CELL:
        need("inventory", "INVENTORY", "legacy data inventory missing or empty", bool(a("inventory")))
    elif cell == transition.PLAN_CELL:
        need("platform", "PLATFORM", "platform choice missing")
        need("migration", "MIGRATION", "migration plan missing")
    else:
        out += _psm_tobe_gates(project, cell)
    return out


def _psm_tobe_gates(project: Project, cell: CellId) -> list[Diagnostic]:
    model = project.artifact(cell, "process")
    subject = f"{cell.path}/process"
    if model is None or model.maturity is not Maturity.PSM:
        return [_gate(cell, "PROCESS", subject, "ToBe PSM process model missing")]
    out = []
    try:
        document = bpmn_io.export_bpmn(model)
    except bpmn_io.ExportError as exc:
        if not exc.diagnostics:
            out.append(_gate(cell, "EXPORT", subject, f"BPMN export failed: {exc}"))
    else:
        problems = bpmn_io.schema_errors(document)
        if problems:
            out.append(_gate(cell, "EXPORT", subject, f"exported BPMN is not schema-valid: {problems[0]}"))
    if not has_errors(validate_structure(model)):
        try:
            report = explore(model, SimConfig())
        except ValueError as exc:
            out.append(_gate(cell, "SIMULATION", subject, f"simulation not possible: {exc}"))
        else:
            if report.outcome is not Outcome.PROPER_COMPLETION:
                out.append(_gate(cell, "SIMULATION", subject,
                                 f"exhaustive simulation ended in {report.outcome.value}"))
    return out


def _acknowledge(d: Diagnostic, acknowledged: frozenset[tuple[str, str]]) -> Diagnostic:
    if (d.code, d.subject) not in acknowledged or d.severity is Severity.INFO:
        return d
    return Diagnostic(d.code, Severity.WARNING, d.cell, d.subject, f"{d.message} (acknowledged)")


def _evaluate(project: Project) -> dict[CellId, CellStatus]:
    found = set(_producers(project))
    for cell in ALL_CELLS:
        if not project.cells[cell].is_empty:
            found.update(_gates(project, cell))
    ack = project.settings.acknowledged
    by_cell: dict[CellId, list[Diagnostic]] = {cell: [] for cell in ALL_CELLS}
    for d in found:
        by_cell[d.cell].append(_acknowledge(d, ack))
    statuses = {}
    for cell in ALL_CELLS:
        diagnostics = tuple(sort_diagnostics(by_cell[cell]))
        if project.cells[cell].is_empty:
            state = CellState.EMPTY
        elif has_errors(diagnostics):
            state = CellState.DRAFT
        else:
            state = CellState.READY
        statuses[cell] = CellStatus(cell, state, diagnostics)
    return statuses


def cell_status(project: Project, cell: CellId) -> CellStatus:
    return project.statuses[cell]


def validate_project(project: Project) -> list[Diagnostic]:
    """All findings of all cells, in report order."""
    return [d for cell in ALL_CELLS for d in project.statuses[cell].diagnostics]


def next_step(project: Project) -> CellId | _Done:
    """First cell in row-major order that is not Ready. Advisory only."""
    for cell in ALL_CELLS:
        if project.statuses[cell].state is not CellState.READY:
            return cell
    return DONE


def render_matrix(project: Project) -> str:
    header = ["", *(s.label for s in Stage)]
    rows = [[layer.name, *(project.statuses[CellId(layer, s)].state.value for s in Stage)] for layer in Layer]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header, *rows]]
    step = next_step(project)
    lines.append("")
    lines.append(f"next step: {step if step is DONE else step.path}")
    return "\n".join(lines)


def write_artifact(project: Project, cell: CellId, stem: str, data: Any) -> Path:
    if project.root is None:
        raise ProjectError("project has no directory to write into")
    if stem not in LAYOUT[cell]:
        raise ProjectError(f"'{stem}' is not an artifact of cell {cell}")
    path = project.root / cell.path / f"{stem}.json"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(data), encoding="utf-8")
    except OSError as exc:
        raise ProjectError(f"{path}: {exc}") from exc
    return path

