"""The 3x3 project matrix: model layers crossed with innovation stages."""

from __future__ import annotations

import enum
from typing import NamedTuple


class Layer(enum.IntEnum):
    CIM = 0
    PIM = 1
    PSM = 2


class Stage(enum.IntEnum):
    ASIS = 0
    TRANSFORMATION = 1
    TOBE = 2

    @property
    def label(self) -> str:
        return {Stage.ASIS: "AsIs", Stage.TRANSFORMATION: "Transformation", Stage.TOBE: "ToBe"}[self]


class CellId(NamedTuple):
    """One cell of the matrix.

    Tuple ordering is row-major (layer first, then stage), which is also the
    suggested traversal order.
    """

    layer: Layer
    stage: Stage

    def __str__(self) -> str:
        return f"{self.layer.name}-{self.stage.name}"

    @property
    def path(self) -> str:
        return f"{self.layer.name.lower()}/{self.stage.name.lower()}"

    @classmethod
    def parse(cls, text: str) -> CellId:
        layer, sep, stage = text.strip().upper().replace("/", "-").partition("-")
        if not sep or layer not in Layer.__members__ or stage not in Stage.__members__:
            raise ValueError(f"not a cell id: {text!r} (expected e.g. CIM-ASIS)")
        return cls(Layer[layer], Stage[stage])


ALL_CELLS: tuple[CellId, ...] = tuple(CellId(layer, stage) for layer in Layer for stage in Stage)


def parse_stage(value: object, *, allowed: tuple[Stage, ...] = (Stage.ASIS, Stage.TOBE)) -> Stage:
    if not isinstance(value, str) or value.upper() not in Stage.__members__:
        raise ValueError(f"unknown stage {value!r}")
    stage = Stage[value.upper()]
    if stage not in allowed:
        raise ValueError(f"stage {stage.name} not allowed here")
    return stage
