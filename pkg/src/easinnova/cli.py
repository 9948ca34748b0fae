"""``easinnova`` command line.

Exit codes: 0 success (warnings allowed), 1 error-severity findings or a
failed operation, 2 usage error, 3 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import TextIO

from easinnova import bpmn_io, consistency
from easinnova.cells import ALL_CELLS, CellId, Layer, Stage, parse_stage
from easinnova.crud import check_cruda_completeness, derive_cruda
from easinnova.diagnostics import Diagnostic, Severity, at_least, has_errors
from easinnova.jsonio import dumps
from easinnova.opaal import (
    DerivationError,
    derive_class_skeleton,
    derive_use_cases,
    diff_lexicons,
    serialize_class_skeleton,
    serialize_use_cases,
)
from easinnova.project import (
    Project,
    ProjectError,
    cell_status,
    init_project,
    load_project,
    next_step,
    render_matrix,
    validate_project,
    write_artifact,
)
from easinnova.simulate import Outcome, SimConfig, SimulationError, explore, random_trace

ENV_PROJECT = "EASINNOVA_PROJECT"

EXIT_OK, EXIT_ERRORS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _stage(value: str) -> Stage:
    try:
        return parse_stage(value.upper())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _cell(value: str) -> CellId:
    try:
        return CellId.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="easinnova", description="Manage an EasInnova innovation project directory.")
    parser.add_argument("-C", "--project", type=Path,
                        help=f"project directory (default: ${ENV_PROJECT} or the working directory)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def reporting(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--format", choices=("text", "json"), default="text")
        return p

    p = sub.add_parser("init", help="create an empty project skeleton")
    p.add_argument("name")
    p.add_argument("directory", nargs="?", type=Path)

    reporting("status", "show the 3x3 matrix and the suggested next cell")

    p = reporting("validate", "run every gate and rule")
    p.add_argument("--cell", type=_cell, help="only report this cell, e.g. PIM-TOBE")
    p.add_argument("--suggest", action="store_true", help="list names used by models but missing from lexicons")
    p.add_argument("--min-severity", choices=[s.value for s in Severity], default="warning")

    lexicon = sub.add_parser("lexicon", help="lexicon operations")
    lexicon_sub = lexicon.add_subparsers(dest="lexicon_command", required=True, parser_class=_Parser)
    p = lexicon_sub.add_parser("diff", help="per-category AsIs to ToBe term changes")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = reporting("derive", "derive use cases and a class skeleton from a lexicon")
    p.add_argument("--stage", type=_stage, default=Stage.TOBE)
    p.add_argument("--write", action="store_true", help="store the results under pim/<stage>/")
    p.add_argument("--allow-unresolved", action="store_true", help="ignore links with undeclared endpoints")

    p = reporting("crud-matrix", "derive the CRUDA matrix of a process model")
    p.add_argument("--stage", type=_stage, default=Stage.TOBE)
    p.add_argument("--layer", choices=("pim", "psm"), default="pim")

    p = sub.add_parser("export", help="write BPMN 2.0 XML for a PSM model")
    p.add_argument("--stage", type=_stage, default=Stage.TOBE)
    p.add_argument("--vendor", choices=bpmn_io.VENDORS)
    p.add_argument("--output", type=Path, help="default: export/<stage>.bpmn in the project")

    p = reporting("simulate", "token-game simulation")
    p.add_argument("--mode", choices=("exhaustive", "trace"), default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-states", type=_positive, default=SimConfig.max_states)
    p.add_argument("--layer", choices=("pim", "psm"), default="psm")
    p.add_argument("--stage", type=_stage, default=Stage.TOBE)
    return parser


def _project_dir(args: argparse.Namespace) -> Path:
    if args.project is not None:
        return args.project
    return Path(os.environ.get(ENV_PROJECT) or ".")


def _emit_json(data: object, out: TextIO) -> None:
    out.write(dumps(data))


def _print_diagnostics(diagnostics: Sequence[Diagnostic], fmt: str, out: TextIO) -> None:
    if fmt == "json":
        _emit_json([d.to_dict() for d in diagnostics], out)
    else:
        for d in diagnostics:
            print(d.render(), file=out)


def _parse_failed(project: Project) -> bool:
    return any(d.code == "PROJ-PARSE" for d in project.load_diagnostics)


def _cmd_init(args: argparse.Namespace, out: TextIO) -> int:
    target = args.directory if args.directory is not None else _project_dir(args)
    project = init_project(args.name, target)
    print(f"initialized project '{project.name}' in {target}", file=out)
    print(f"next step: {next_step(project).path}", file=out)
    return EXIT_OK


def _cmd_status(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    if args.format == "json":
        step = next_step(project)
        _emit_json({
            "project": project.name,
            "cells": {str(c): cell_status(project, c).state.value for c in ALL_CELLS},
            "next_step": str(step),
        }, out)
    else:
        print(render_matrix(project), file=out)
    return EXIT_IO if _parse_failed(project) else EXIT_OK


def _cmd_validate(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    found = list(cell_status(project, args.cell).diagnostics) if args.cell else validate_project(project)
    shown = at_least(found, Severity(args.min_severity))
    if args.format == "json" and args.suggest:
        _emit_json({"diagnostics": [d.to_dict() for d in shown],
                    "suggestions": consistency.suggest_terms(project)}, out)
    else:
        _print_diagnostics(shown, args.format, out)
        if args.suggest:
            for stage, groups in consistency.suggest_terms(project).items():
                for category, names in groups.items():
                    print(f"SUGGEST {stage} {category}: {', '.join(names)}", file=out)
    if _parse_failed(project):
        return EXIT_IO
    return EXIT_ERRORS if has_errors(found) else EXIT_OK


def _cmd_lexicon_diff(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    asis, tobe = project.lexicon(Stage.ASIS), project.lexicon(Stage.TOBE)
    if asis is None or tobe is None:
        print("error: both cim/asis/lexicon.json and cim/tobe/lexicon.json are needed", file=sys.stderr)
        return EXIT_IO if _parse_failed(project) else EXIT_ERRORS
    diff = diff_lexicons(asis, tobe)
    if args.format == "json":
        _emit_json(diff.to_dict(), out)
        return EXIT_OK
    for category, change in diff.to_dict().items():
        print(f"{category}:", file=out)
        for label in ("added", "removed", "kept"):
            print(f"  {label}: {', '.join(change[label]) or '-'}", file=out)
    return EXIT_OK


def _cmd_derive(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    lex = project.lexicon(args.stage)
    if lex is None:
        print(f"error: no {args.stage.label} lexicon", file=sys.stderr)
        return EXIT_IO if _parse_failed(project) else EXIT_ERRORS
    try:
        use_cases = derive_use_cases(lex, allow_unresolved=args.allow_unresolved)
        skeleton = derive_class_skeleton(lex, allow_unresolved=args.allow_unresolved)
    except DerivationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERRORS
    uc_doc = serialize_use_cases(args.stage, use_cases)
    cls_doc = serialize_class_skeleton(args.stage, skeleton)
    if args.write:
        cell = CellId(Layer.PIM, args.stage)
        write_artifact(project, cell, "usecases", uc_doc)
        write_artifact(project, cell, "classes", cls_doc)
    if args.format == "json":
        _emit_json({"use_cases": uc_doc["use_cases"], "classes": cls_doc["classes"],
                    "associations": cls_doc["associations"]}, out)
    else:
        print("use cases:", file=out)
        for u in use_cases:
            print(f"  {u.actor} -> {u.action}", file=out)
        print("classes:", file=out)
        for c in skeleton.classes:
            attrs = f" [{', '.join(c.attributes)}]" if c.attributes else ""
            print(f"  {c.name}{attrs}", file=out)
        print("associations:", file=out)
        for a in skeleton.associations:
            print(f"  {a.source} -- {a.target}", file=out)
    return EXIT_OK


def _model(project: Project, layer: str, stage: Stage):
    return project.artifact(CellId(Layer[layer.upper()], stage), "process")


def _cmd_crud(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    model, lex = _model(project, args.layer, args.stage), project.lexicon(args.stage)
    if model is None or lex is None:
        print(f"error: need {args.layer}/{args.stage.name.lower()}/process.json and the "
              f"{args.stage.label} lexicon", file=sys.stderr)
        return EXIT_IO if _parse_failed(project) else EXIT_ERRORS
    matrix, unknown = derive_cruda([model], lex)
    found = unknown + check_cruda_completeness(matrix)
    if args.format == "json":
        _emit_json({"matrix": matrix.to_dict(), "diagnostics": [d.to_dict() for d in found]}, out)
    else:
        print(matrix.render(), file=out)
        _print_diagnostics(found, "text", out)
    return EXIT_ERRORS if has_errors(found) else EXIT_OK


def _cmd_export(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    model = _model(project, "psm", args.stage)
    if model is None:
        print(f"error: no psm/{args.stage.name.lower()}/process.json", file=sys.stderr)
        return EXIT_IO if _parse_failed(project) else EXIT_ERRORS
    try:
        document = bpmn_io.export_bpmn(model, vendor=args.vendor)
    except bpmn_io.ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _print_diagnostics(exc.diagnostics, "text", sys.stderr)
        return EXIT_ERRORS
    target = args.output or project.root / "export" / f"{args.stage.name.lower()}.bpmn"
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(document)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {target}", file=out)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace, project: Project, out: TextIO) -> int:
    model = _model(project, args.layer, args.stage)
    if model is None:
        print(f"error: no {args.layer}/{args.stage.name.lower()}/process.json", file=sys.stderr)
        return EXIT_IO if _parse_failed(project) else EXIT_ERRORS
    config = SimConfig(max_states=args.max_states)
    try:
        if args.mode == "trace":
            events = random_trace(model, args.seed, config)
        else:
            report = explore(model, config)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERRORS
    if args.mode == "trace":
        if args.format == "json":
            _emit_json({"seed": args.seed, "events": [e.to_dict() for e in events]}, out)
        else:
            for i, e in enumerate(events, 1):
                print(f"{i}. {e}", file=out)
        return EXIT_OK
    if args.format == "json":
        _emit_json(report.to_dict(), out)
    else:
        print(report.render(), file=out)
    return EXIT_OK if report.outcome is Outcome.PROPER_COMPLETION else EXIT_ERRORS


_COMMANDS = {
    "status": _cmd_status,
    "validate": _cmd_validate,
    "lexicon": _cmd_lexicon_diff,
    "derive": _cmd_derive,
    "crud-matrix": _cmd_crud,
    "export": _cmd_export,
    "simulate": _cmd_simulate,
}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "init":
            return _cmd_init(args, out)
        project = load_project(_project_dir(args))
        return _COMMANDS[args.command](args, project, out)
    except ProjectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


__all__ = ["build_parser", "main"]


if __name__ == "__main__":
    sys.exit(main())
