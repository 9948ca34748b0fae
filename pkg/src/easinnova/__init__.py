"""Tooling for EasInnova business-process innovation projects.

The package treats a project as a set of JSON artifacts laid out over a
3x3 matrix (CIM/PIM/PSM layers by AsIs/Transformation/ToBe stages) and
checks, derives, simulates and exports them.
"""

from easinnova.cells import ALL_CELLS, CellId, Layer, Stage
from easinnova.diagnostics import Diagnostic, Severity
from easinnova.project import DONE, CellState, Project, cell_status, init_project, load_project, next_step

__version__ = "0.1.0"

__all__ = [
    "ALL_CELLS",
    "CellId",
    "CellState",
    "DONE",
    "Diagnostic",
    "Layer",
    "Project",
    "Severity",
    "Stage",
    "cell_status",
    "init_project",
    "load_project",
    "next_step",
]
