"""CRUDA matrices: Process terms x Object terms, derived from declared task effects."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from easinnova.cells import CellId, Layer, Stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.opaal import Category, OpaalLexicon
from easinnova.process import CRUDA_OPS, ProcessModel


@dataclass(frozen=True)
class CrudaMatrix:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: Mapping[tuple[str, str], frozenset[str]] = field(default_factory=dict)
    cell: CellId | None = None
    subject: str = ""

    def get(self, row: str, column: str) -> frozenset[str]:
        return self.cells.get((row, column), frozenset())

    def column_ops(self, column: str) -> frozenset[str]:
        return frozenset().union(*(self.get(r, column) for r in self.rows))

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": list(self.rows),
            "columns": list(self.columns),
            "cells": {r: {c: ops_string(self.get(r, c)) for c in self.columns if self.get(r, c)} for r in self.rows},
        }

    def render(self) -> str:
        header = ["Process \\ Object", *self.columns]
        body = [[r, *(ops_string(self.get(r, c)) or "-" for c in self.columns)] for r in self.rows]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header, *body]]
        return "\n".join(lines)


def ops_string(ops: Iterable[str]) -> str:
    present = set(ops)
    return "".join(op for op in CRUDA_OPS if op in present)


def derive_cruda(models: Iterable[ProcessModel], lex: OpaalLexicon) -> tuple[CrudaMatrix, list[Diagnostic]]:
    """Aggregate task effects by task name.

    Rows are the lexicon's Process terms and columns its Object terms, both
    sorted. Effects of tasks whose names are not Process terms are left out
    (rule R3 reports those tasks); effects on undeclared objects are reported
    as CRUD-UNKNOWN-OBJ.
    """
    models = list(models)
    rows = tuple(sorted(lex.names(Category.PROCESS)))
    columns = tuple(sorted(lex.names(Category.OBJECT)))
    row_set, column_set = set(rows), set(columns)
    cell = models[0].cell if models else CellId(Layer.PIM, lex.stage)
    subject = models[0].subject if models else f"{cell.path}/process"
    acc: dict[tuple[str, str], set[str]] = {}
    out = []
    for model in models:
        for pool, node in model.tasks():
            for effect in node.detail.effects:
                if effect.object not in column_set:
                    out.append(diag(
                        "CRUD-UNKNOWN-OBJ", Severity.ERROR, model.cell, f"{model.subject}#{pool.name}/{node.id}",
                        f"task '{node.label}' has effect {effect.op} on '{effect.object}', "
                        f"which is not a {lex.stage.label} Object term",
                    ))
                elif node.label in row_set:
                    acc.setdefault((node.label, effect.object), set()).add(effect.op)
    cells = {key: frozenset(ops) for key, ops in acc.items()}
    return CrudaMatrix(rows, columns, cells, cell, subject), sort_diagnostics(out)


def check_cruda_completeness(m: CrudaMatrix) -> list[Diagnostic]:
    cell = m.cell or CellId(Layer.PIM, Stage.TOBE)
    out = []
    for column in m.columns:
        ops = m.column_ops(column)
        where = f"{m.subject}#objects/{column}"
        if "C" not in ops:
            out.append(diag("CRUD-NO-CREATE", Severity.ERROR, cell, where, f"object '{column}' is never created"))
        elif "R" not in ops:
            out.append(diag("CRUD-NO-READ", Severity.WARNING, cell, where,
                            f"object '{column}' is created but never read"))
        if "D" not in ops and "A" not in ops:
            out.append(diag("CRUD-NO-DA", Severity.WARNING, cell, where,
                            f"object '{column}' is neither deleted nor archived"))
    return sort_diagnostics(out)
