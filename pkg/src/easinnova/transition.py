"""PSM AsIs/Transformation artifacts: legacy data inventory, platform choice, migration plan."""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Union

from easinnova.cells import CellId, Layer, Stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.jsonio import check_schema, load_document
from easinnova.opaal import Category, OpaalLexicon

INVENTORY_CELL = CellId(Layer.PSM, Stage.ASIS)
PLAN_CELL = CellId(Layer.PSM, Stage.TRANSFORMATION)
INVENTORY = f"{INVENTORY_CELL.path}/inventory"
PLATFORM = f"{PLAN_CELL.path}/platform"
MIGRATION = f"{PLAN_CELL.path}/migration"


@dataclass(frozen=True)
class DataInventoryEntry:
    entity: str
    store: str
    critical: bool = False


@dataclass(frozen=True)
class PlatformChoice:
    platform: str
    rationale: str
    shortlist: tuple[str, ...] = ()


@dataclass(frozen=True)
class MapTo:
    target: str


@dataclass(frozen=True)
class Drop:
    reason: str


@dataclass(frozen=True)
class MigrationMapping:
    legacy_entity: str
    disposition: Union[MapTo, Drop]


def validate_inventory(inventory: Sequence[DataInventoryEntry]) -> list[Diagnostic]:
    return sort_diagnostics(
        diag("INV-DUP", Severity.ERROR, INVENTORY_CELL, f"{INVENTORY}#{name}", f"entity '{name}' listed {n} times")
        for name, n in Counter(e.entity for e in inventory).items()
        if n > 1
    )


def validate_platform(choice: PlatformChoice) -> list[Diagnostic]:
    if choice.platform in choice.shortlist:
        return []
    return [diag("PLAT-SHORTLIST", Severity.ERROR, PLAN_CELL, PLATFORM,
                 f"platform '{choice.platform}' is not on the shortlist")]


def validate_migration_plan(
    plan: Sequence[MigrationMapping],
    inventory: Sequence[DataInventoryEntry],
    tobe_lexicon: OpaalLexicon | None,
) -> list[Diagnostic]:
    """Check a migration plan against the inventory and the ToBe Object terms.

    With no ToBe lexicon at hand, every MapTo target is reported unknown.
    """
    objects = tobe_lexicon.names(Category.OBJECT) if tobe_lexicon is not None else frozenset()
    by_entity = {e.entity: e for e in inventory}
    out = []
    for name, n in Counter(m.legacy_entity for m in plan).items():
        if n > 1:
            out.append(diag("MIG-DUP", Severity.ERROR, PLAN_CELL, f"{MIGRATION}#{name}",
                            f"legacy entity '{name}' mapped {n} times"))
    mapped = {m.legacy_entity for m in plan}
    for entity in by_entity:
        if entity not in mapped:
            out.append(diag("MIG-UNMAPPED", Severity.ERROR, PLAN_CELL, f"{MIGRATION}#{entity}",
                            f"inventory entity '{entity}' has no migration mapping"))
    for m in plan:
        where = f"{MIGRATION}#{m.legacy_entity}"
        entry = by_entity.get(m.legacy_entity)
        if entry is None:
            out.append(diag("MIG-UNKNOWN-ENTITY", Severity.ERROR, PLAN_CELL, where,
                            f"mapping for '{m.legacy_entity}', which is not in the inventory"))
        if isinstance(m.disposition, MapTo):
            if m.disposition.target not in objects:
                out.append(diag("MIG-UNKNOWN-TARGET", Severity.ERROR, PLAN_CELL, where,
                                f"'{m.legacy_entity}' maps to '{m.disposition.target}', "
                                "which is not a ToBe Object term"))
        elif entry is not None and entry.critical:
            out.append(diag("MIG-DROP-CRITICAL", Severity.WARNING, PLAN_CELL, where,
                            f"critical entity '{m.legacy_entity}' is dropped: {m.disposition.reason}"))
    return sort_diagnostics(out)


_INVENTORY_SCHEMA = {
    "type": "object",
    "required": ["entries"],
    "properties": {
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["entity", "store"],
                "properties": {
                    "entity": {"type": "string", "minLength": 1},
                    "store": {"type": "string"},
                    "critical": {"type": "boolean"},
                },
            },
        }
    },
}

_PLATFORM_SCHEMA = {
    "type": "object",
    "required": ["platform", "rationale", "shortlist"],
    "properties": {
        "platform": {"type": "string", "minLength": 1},
        "rationale": {"type": "string"},
        "shortlist": {"type": "array", "items": {"type": "string"}},
    },
}

_MIGRATION_SCHEMA = {
    "type": "object",
    "required": ["mappings"],
    "properties": {
        "mappings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["legacy_entity"],
                "properties": {
                    "legacy_entity": {"type": "string", "minLength": 1},
                    "map_to": {"type": "string", "minLength": 1},
                    "drop": {"type": "string"},
                },
                "oneOf": [{"required": ["map_to"]}, {"required": ["drop"]}],
            },
        }
    },
}


def parse_inventory(document: Any) -> list[DataInventoryEntry]:
    data = load_document(document)
    check_schema(data, _INVENTORY_SCHEMA, "inventory")
    return [DataInventoryEntry(e["entity"], e["store"], e.get("critical", False)) for e in data["entries"]]


def parse_platform(document: Any) -> PlatformChoice:
    data = load_document(document)
    check_schema(data, _PLATFORM_SCHEMA, "platform")
    return PlatformChoice(data["platform"], data["rationale"], tuple(data["shortlist"]))


def parse_migration(document: Any) -> list[MigrationMapping]:
    data = load_document(document)
    check_schema(data, _MIGRATION_SCHEMA, "migration plan")
    return [
        MigrationMapping(m["legacy_entity"], MapTo(m["map_to"]) if "map_to" in m else Drop(m["drop"]))
        for m in data["mappings"]
    ]
