"""OPAAL lexicons: parsing, linting, diffing and skeleton derivations."""

from __future__ import annotations

import enum
import re
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from easinnova.cells import CellId, Layer, Stage, parse_stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.jsonio import DocumentError, check_schema, load_document


class LexiconError(DocumentError):
    pass


class DerivationError(ValueError):
    pass


class Category(str, enum.Enum):
    OBJECT = "Object"
    PROCESS = "Process"
    ACTOR = "Actor"
    ATTRIBUTE = "Attribute"


# Preference when an endpoint name is declared under several categories.
RESOLUTION_ORDER = (Category.OBJECT, Category.ACTOR, Category.PROCESS, Category.ATTRIBUTE)
CLASS_CATEGORIES = frozenset({Category.OBJECT, Category.ACTOR})


@dataclass(frozen=True)
class Term:
    name: str
    category: Category
    description: str | None = None


@dataclass(frozen=True)
class Link:
    """A relationship between two terms, kept in the direction it was written."""

    source: str
    target: str

    @property
    def key(self) -> frozenset[str]:
        return frozenset((self.source, self.target))

    def __str__(self) -> str:
        return f"{self.source}-{self.target}"


@dataclass(frozen=True)
class OpaalLexicon:
    stage: Stage
    terms: tuple[Term, ...] = ()
    links: tuple[Link, ...] = ()

    @property
    def cell(self) -> CellId:
        return CellId(Layer.CIM, self.stage)

    @property
    def subject(self) -> str:
        return f"{self.cell.path}/lexicon"

    def names(self, category: Category) -> frozenset[str]:
        return frozenset(t.name for t in self.terms if t.category is category)

    def all_names(self) -> frozenset[str]:
        return frozenset(t.name for t in self.terms)

    def categories_of(self, name: str) -> frozenset[Category]:
        return frozenset(t.category for t in self.terms if t.name == name)

    def resolve(self, name: str) -> Category | None:
        cats = self.categories_of(name)
        for cat in RESOLUTION_ORDER:
            if cat in cats:
                return cat
        return None


@dataclass(frozen=True)
class CategoryDiff:
    added: frozenset[str] = frozenset()
    removed: frozenset[str] = frozenset()
    kept: frozenset[str] = frozenset()

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed)


@dataclass(frozen=True)
class LexiconDiff:
    categories: Mapping[Category, CategoryDiff] = field(default_factory=dict)

    def __getitem__(self, category: Category) -> CategoryDiff:
        return self.categories[category]

    @property
    def is_empty(self) -> bool:
        return all(d.is_empty for d in self.categories.values())

    def to_dict(self) -> dict[str, dict[str, list[str]]]:
        return {
            cat.value: {
                "added": sorted(d.added),
                "removed": sorted(d.removed),
                "kept": sorted(d.kept),
            }
            for cat, d in self.categories.items()
        }


@dataclass(frozen=True)
class UseCase:
    actor: str
    action: str


@dataclass(frozen=True)
class ClassSkeleton:
    name: str
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Association:
    source: str
    target: str
    label: str | None = None


@dataclass(frozen=True)
class ClassModelSkeleton:
    classes: tuple[ClassSkeleton, ...] = ()
    associations: tuple[Association, ...] = ()

    def class_names(self) -> frozenset[str]:
        return frozenset(c.name for c in self.classes)


@dataclass(frozen=True)
class LintSettings:
    # None selects the stage default: on for AsIs, off for ToBe.
    gerund_lint: bool | None = None

    def gerund_enabled(self, stage: Stage) -> bool:
        if self.gerund_lint is not None:
            return self.gerund_lint
        return stage is Stage.ASIS


_ENVELOPE = {
    "type": "object",
    "required": ["stage", "terms", "links"],
    "properties": {
        "stage": {"enum": ["ASIS", "TOBE"]},
        "terms": {"type": "array"},
        "links": {"type": "array"},
    },
}


def _valid_name(value: object) -> bool:
    return isinstance(value, str) and bool(value) and not any(ch.isspace() for ch in value)


def parse_lexicon(document: Any) -> tuple[OpaalLexicon, list[Diagnostic]]:
    """Load a lexicon document, skipping malformed entries with Error diagnostics.

    Raises :class:`LexiconError` when the document cannot be read, breaks the
    envelope schema, or uses a category name outside the OPAAL scheme.
    """
    try:
        data = load_document(document)
    except DocumentError as exc:
        raise LexiconError(str(exc)) from exc
    try:
        check_schema(data, _ENVELOPE, "lexicon")
    except DocumentError as exc:
        raise LexiconError(str(exc)) from exc
    stage = parse_stage(data["stage"])
    cell = CellId(Layer.CIM, stage)
    base = f"{cell.path}/lexicon"
    diagnostics: list[Diagnostic] = []

    terms: list[Term] = []
    seen: set[tuple[str, Category]] = set()
    for index, entry in enumerate(data["terms"]):
        if not isinstance(entry, dict):
            diagnostics.append(diag("OPAAL-MALFORMED", Severity.ERROR, cell, f"{base}#terms/{index}",
                                    f"term entry {index} is not an object"))
            continue
        raw_cat = entry.get("category")
        if isinstance(raw_cat, str):
            if raw_cat not in Category._value2member_map_:
                raise LexiconError(f"unknown category {raw_cat!r} in term entry {index}")
        name = entry.get("name")
        description = entry.get("description")
        if (not _valid_name(name) or not isinstance(raw_cat, str)
                or not (description is None or isinstance(description, str))):
            diagnostics.append(diag("OPAAL-MALFORMED", Severity.ERROR, cell, f"{base}#terms/{index}",
                                    f"term entry {index} needs a whitespace-free name and a category"))
            continue
        category = Category(raw_cat)
        if (name, category) in seen:
            diagnostics.append(diag("OPAAL-DUP", Severity.ERROR, cell, f"{base}#terms/{category.value}/{name}",
                                    f"{category.value} term '{name}' declared more than once"))
            continue
        seen.add((name, category))
        terms.append(Term(name, category, description))

    links: list[Link] = []
    seen_links: set[frozenset[str]] = set()
    for index, entry in enumerate(data["links"]):
        if not (isinstance(entry, dict) and _valid_name(entry.get("source")) and _valid_name(entry.get("target"))):
            diagnostics.append(diag("OPAAL-MALFORMED", Severity.ERROR, cell, f"{base}#links/{index}",
                                    f"link entry {index} needs whitespace-free source and target"))
            continue
        link = Link(entry["source"], entry["target"])
        if link.key in seen_links:
            a, b = sorted(link.key) if len(link.key) == 2 else (link.source, link.source)
            diagnostics.append(diag("OPAAL-DUPLINK", Severity.WARNING, cell, f"{base}#links/{a}-{b}",
                                    f"link between '{a}' and '{b}' declared more than once"))
            continue
        seen_links.add(link.key)
        links.append(link)

    return OpaalLexicon(stage, tuple(terms), tuple(links)), sort_diagnostics(diagnostics)


def serialize_lexicon(lex: OpaalLexicon) -> dict[str, Any]:
    terms = []
    for term in lex.terms:
        entry: dict[str, Any] = {"name": term.name, "category": term.category.value}
        if term.description is not None:
            entry["description"] = term.description
        terms.append(entry)
    return {
        "stage": lex.stage.name,
        "terms": terms,
        "links": [{"source": link.source, "target": link.target} for link in lex.links],
    }


def check_link_endpoints(lex: OpaalLexicon) -> list[Diagnostic]:
    """Rule R1: every link endpoint names a declared term."""
    declared = lex.all_names()
    out = []
    for link in lex.links:
        for endpoint in dict.fromkeys((link.source, link.target)):
            if endpoint not in declared:
                out.append(diag(
                    "R1", Severity.ERROR, lex.cell, f"{lex.subject}#links/{link}/{endpoint}",
                    f"link '{link}' endpoint '{endpoint}' is not a declared term",
                ))
    return out


_WORDS = re.compile(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|\d+")


def is_gerund_form(name: str) -> bool:
    """True when some CamelCase word of ``name`` is an -ing form (MakingDough, CustomerPolling)."""
    return any(len(w) > 4 and w.lower().endswith("ing") for w in _WORDS.findall(name))


def validate_lexicon(
    lex: OpaalLexicon,
    settings: LintSettings | None = None,
    *,
    used_names: Iterable[str] = (),
) -> list[Diagnostic]:
    """Lint a lexicon.

    ``used_names`` are names referenced by process models of the same stage;
    terms appearing neither there nor in a link are reported as orphans.
    """
    settings = settings or LintSettings()
    cell, base = lex.cell, lex.subject
    out = check_link_endpoints(lex)

    by_name: dict[str, set[Category]] = defaultdict(set)
    for term in lex.terms:
        by_name[term.name].add(term.category)
    for name, cats in by_name.items():
        if len(cats) > 1:
            listed = ", ".join(c.value for c in RESOLUTION_ORDER if c in cats)
            out.append(diag("OPAAL-XCAT", Severity.WARNING, cell, f"{base}#terms/{name}",
                            f"term '{name}' declared under several categories: {listed}"))

    if settings.gerund_enabled(lex.stage):
        for term in lex.terms:
            if term.category is Category.PROCESS and not is_gerund_form(term.name):
                out.append(diag("OPAAL-GERUND", Severity.WARNING, cell, f"{base}#terms/Process/{term.name}",
                                f"Process term '{term.name}' is not in gerund form"))

    for link in lex.links:
        for endpoint in dict.fromkeys((link.source, link.target)):
            cats = by_name.get(endpoint, set())
            if len(cats) > 1:
                out.append(diag("OPAAL-AMBIG", Severity.INFO, cell, f"{base}#links/{link}/{endpoint}",
                                f"link '{link}' endpoint '{endpoint}' resolved as {lex.resolve(endpoint).value}"))

    used = set(used_names)
    for link in lex.links:
        used.update((link.source, link.target))
    for term in lex.terms:
        if term.name not in used:
            out.append(diag("OPAAL-ORPHAN", Severity.INFO, cell, f"{base}#terms/{term.category.value}/{term.name}",
                            f"{term.category.value} term '{term.name}' is used by no link and no process model"))
    return sort_diagnostics(out)


def diff_lexicons(a: OpaalLexicon, b: OpaalLexicon) -> LexiconDiff:
    categories = {}
    for cat in Category:
        old, new = a.names(cat), b.names(cat)
        categories[cat] = CategoryDiff(added=new - old, removed=old - new, kept=old & new)
    return LexiconDiff(categories)


def _require_resolved(lex: OpaalLexicon, allow_unresolved: bool) -> None:
    if allow_unresolved:
        return
    unresolved = check_link_endpoints(lex)
    if unresolved:
        raise DerivationError(
            f"lexicon has {len(unresolved)} undefined link endpoint(s); fix them or pass allow_unresolved=True"
        )


def derive_use_cases(lex: OpaalLexicon, *, allow_unresolved: bool = False) -> list[UseCase]:
    """One use case per Actor-Process link, in either direction.

    Links with an undeclared endpoint are ignored when ``allow_unresolved`` is
    set; otherwise their presence raises :class:`DerivationError`.
    """
    _require_resolved(lex, allow_unresolved)
    found = set()
    for link in lex.links:
        roles = {lex.resolve(link.source): link.source, lex.resolve(link.target): link.target}
        if set(roles) == {Category.ACTOR, Category.PROCESS}:
            found.add(UseCase(roles[Category.ACTOR], roles[Category.PROCESS]))
    return sorted(found, key=lambda u: (u.actor, u.action))


def derive_class_skeleton(lex: OpaalLexicon, *, allow_unresolved: bool = False) -> ClassModelSkeleton:
    """Classes from Object and Actor terms, attributes and associations from links.

    A link between a class and a name declared as an Attribute attaches that
    attribute to the class, even when the name is also an Object (the
    complex-attribute case such as Home-Address).
    """
    _require_resolved(lex, allow_unresolved)
    class_names = lex.names(Category.OBJECT) | lex.names(Category.ACTOR)
    attribute_names = lex.names(Category.ATTRIBUTE)
    attributes: dict[str, set[str]] = {name: set() for name in class_names}
    associations: set[tuple[str, str]] = set()
    seen_pairs: set[frozenset[str]] = set()
    for link in lex.links:
        s, t = link.source, link.target
        if s in class_names and t in attribute_names:
            attributes[s].add(t)
        elif t in class_names and s in attribute_names:
            attributes[t].add(s)
        elif s in class_names and t in class_names and link.key not in seen_pairs:
            seen_pairs.add(link.key)
            associations.add((s, t))
    return ClassModelSkeleton(
        classes=tuple(ClassSkeleton(name, tuple(sorted(attributes[name]))) for name in sorted(class_names)),
        associations=tuple(Association(s, t) for s, t in sorted(associations)),
    )


# Stored derivation artifacts (pim/<stage>/usecases.json, classes.json).

_USECASES_SCHEMA = {
    "type": "object",
    "required": ["stage", "use_cases"],
    "properties": {
        "stage": {"enum": ["ASIS", "TOBE"]},
        "use_cases": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["actor", "action"],
                "properties": {"actor": {"type": "string"}, "action": {"type": "string"}},
            },
        },
    },
}

_CLASSES_SCHEMA = {
    "type": "object",
    "required": ["stage", "classes"],
    "properties": {
        "stage": {"enum": ["ASIS", "TOBE"]},
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string"},
                    "attributes": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "associations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target"],
                "properties": {
                    "source": {"type": "string"},
                    "target": {"type": "string"},
                    "label": {"type": ["string", "null"]},
                },
            },
        },
    },
}


def parse_use_cases(document: Any) -> tuple[Stage, list[UseCase]]:
    data = load_document(document)
    check_schema(data, _USECASES_SCHEMA, "use cases")
    return parse_stage(data["stage"]), [UseCase(u["actor"], u["action"]) for u in data["use_cases"]]


def serialize_use_cases(stage: Stage, use_cases: Iterable[UseCase]) -> dict[str, Any]:
    return {"stage": stage.name, "use_cases": [{"actor": u.actor, "action": u.action} for u in use_cases]}


def parse_class_skeleton(document: Any) -> tuple[Stage, ClassModelSkeleton]:
    data = load_document(document)
    check_schema(data, _CLASSES_SCHEMA, "class skeleton")
    skeleton = ClassModelSkeleton(
        classes=tuple(ClassSkeleton(c["name"], tuple(c.get("attributes", []))) for c in data["classes"]),
        associations=tuple(
            Association(a["source"], a["target"], a.get("label")) for a in data.get("associations", [])
        ),
    )
    return parse_stage(data["stage"]), skeleton


def serialize_class_skeleton(stage: Stage, skeleton: ClassModelSkeleton) -> dict[str, Any]:
    associations = []
    for a in skeleton.associations:
        entry: dict[str, Any] = {"source": a.source, "target": a.target}
        if a.label is not None:
            entry["label"] = a.label
        associations.append(entry)
    return {
        "stage": stage.name,
        "classes": [{"name": c.name, "attributes": list(c.attributes)} for c in skeleton.classes],
        "associations": associations,
    }
