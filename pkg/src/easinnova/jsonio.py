"""JSON artifact plumbing shared by the artifact parsers."""

from __future__ import annotations

import json
import re
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import jsonschema

IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
IDENTIFIER_PATTERN = IDENTIFIER.pattern


class DocumentError(ValueError):
    """An artifact document could not be decoded or breaks its schema."""


def load_document(document: str | bytes | Mapping[str, Any] | Path) -> Any:
    if isinstance(document, Path):
        try:
            document = document.read_bytes()
        except OSError as exc:
            raise DocumentError(f"cannot read {document}: {exc.strerror}") from exc
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DocumentError(f"not UTF-8: {exc}") from exc
    if isinstance(document, str):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"invalid JSON: {exc}") from exc
    return document


def check_schema(instance: Any, schema: Mapping[str, Any], what: str) -> None:
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DocumentError(f"{what}: {where}: {exc.message}") from exc


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def is_identifier(value: object) -> bool:
    return isinstance(value, str) and bool(IDENTIFIER.match(value))
