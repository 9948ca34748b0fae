"""BPMN-subset process models: construction, structural checks, PSM enrichment."""

from __future__ import annotations

import enum
from collections import Counter, defaultdict, deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace
from typing import Any

from easinnova.cells import CellId, Layer, Stage, parse_stage
from easinnova.diagnostics import Diagnostic, Severity, diag, sort_diagnostics
from easinnova.jsonio import IDENTIFIER_PATTERN, DocumentError, check_schema, load_document


class ProcessError(ValueError):
    pass


class NodeKind(str, enum.Enum):
    START_NONE = "StartNone"
    START_MESSAGE = "StartMessage"
    END = "End"
    TASK = "Task"
    XOR = "XorGateway"
    AND = "AndGateway"
    CATCH_MESSAGE = "CatchMessage"
    THROW_MESSAGE = "ThrowMessage"


START_KINDS = frozenset({NodeKind.START_NONE, NodeKind.START_MESSAGE})
GATEWAY_KINDS = frozenset({NodeKind.XOR, NodeKind.AND})
MESSAGE_SOURCE_KINDS = frozenset({NodeKind.THROW_MESSAGE, NodeKind.TASK, NodeKind.END})
MESSAGE_TARGET_KINDS = frozenset({NodeKind.CATCH_MESSAGE, NodeKind.START_MESSAGE, NodeKind.TASK})


class ExecutionKind(str, enum.Enum):
    UNSPECIFIED = "Unspecified"
    USER = "User"
    MANUAL = "ManualPassThrough"
    AUTOMATIC = "Automatic"


class Maturity(str, enum.Enum):
    PIM = "PIM"
    PSM = "PSM"


CRUDA_OPS = "CRUDA"


@dataclass(frozen=True)
class Effect:
    object: str
    op: str

    def __post_init__(self) -> None:
        if self.op not in CRUDA_OPS or len(self.op) != 1:
            raise ValueError(f"effect op must be one of C, R, U, D, A (got {self.op!r})")


@dataclass(frozen=True)
class TaskDetail:
    execution_kind: ExecutionKind = ExecutionKind.UNSPECIFIED
    effects: tuple[Effect, ...] = ()


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    name: str | None = None
    lane: str | None = None
    detail: TaskDetail | None = None

    def __post_init__(self) -> None:
        if self.kind is NodeKind.TASK and self.detail is None:
            object.__setattr__(self, "detail", TaskDetail())
        elif self.kind is not NodeKind.TASK and self.detail is not None:
            raise ValueError(f"node {self.id!r}: only tasks carry execution kind and effects")

    @property
    def label(self) -> str:
        return self.name if self.name is not None else self.id


@dataclass(frozen=True)
class SequenceFlow:
    id: str
    source: str
    target: str
    condition: str | None = None
    default: bool = False


@dataclass(frozen=True)
class Pool:
    name: str
    actor: str | None = None
    lanes: tuple[str, ...] = ()
    nodes: tuple[Node, ...] = ()
    sequence_flows: tuple[SequenceFlow, ...] = ()

    def __post_init__(self) -> None:
        if self.actor is None:
            object.__setattr__(self, "actor", self.name)

    def node(self, node_id: str) -> Node | None:
        for n in self.nodes:
            if n.id == node_id:
                return n
        return None

    def outgoing(self, node_id: str) -> list[SequenceFlow]:
        return [f for f in self.sequence_flows if f.source == node_id]

    def incoming(self, node_id: str) -> list[SequenceFlow]:
        return [f for f in self.sequence_flows if f.target == node_id]

    def tasks(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.TASK]


@dataclass(frozen=True)
class MessageFlow:
    id: str
    source_pool: str
    source: str
    target_pool: str
    target: str
    name: str | None = None


@dataclass(frozen=True)
class ProcessModel:
    stage: Stage
    maturity: Maturity = Maturity.PIM
    pools: tuple[Pool, ...] = ()
    message_flows: tuple[MessageFlow, ...] = ()

    @property
    def cell(self) -> CellId:
        return CellId(Layer.PIM if self.maturity is Maturity.PIM else Layer.PSM, self.stage)

    @property
    def subject(self) -> str:
        return f"{self.cell.path}/process"

    def pool(self, name: str) -> Pool | None:
        for p in self.pools:
            if p.name == name:
                return p
        return None

    def tasks(self) -> list[tuple[Pool, Node]]:
        return [(p, n) for p in self.pools for n in p.tasks()]


# JSON form: pim/<stage>/process.json, psm/<stage>/process.json

_ID = {"type": "string", "pattern": IDENTIFIER_PATTERN}
_ENDPOINT = {"type": "object", "required": ["pool", "node"], "properties": {"pool": _ID, "node": _ID}}
_PROCESS_SCHEMA = {
    "type": "object",
    "required": ["stage", "maturity", "pools"],
    "properties": {
        "stage": {"enum": ["ASIS", "TOBE"]},
        "maturity": {"enum": ["PIM", "PSM"]},
        "pools": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": _ID,
                    "actor": {"type": "string", "minLength": 1},
                    "lanes": {"type": "array", "items": _ID},
                    "nodes": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "kind"],
                            "properties": {
                                "id": _ID,
                                "kind": {"enum": [k.value for k in NodeKind]},
                                "name": {"type": "string"},
                                "lane": _ID,
                                "execution": {"enum": [k.value for k in ExecutionKind]},
                                "effects": {
                                    "type": "array",
                                    "items": {
                                        "type": "object",
                                        "required": ["object", "op"],
                                        "properties": {
                                            "object": {"type": "string", "minLength": 1},
                                            "op": {"enum": list(CRUDA_OPS)},
                                        },
                                    },
                                },
                            },
                        },
                    },
                    "sequence_flows": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "source", "target"],
                            "properties": {
                                "id": _ID,
                                "source": _ID,
                                "target": _ID,
                                "condition": {"type": "string"},
                                "default": {"type": "boolean"},
                            },
                        },
                    },
                },
            },
        },
        "message_flows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "source", "target"],
                "properties": {"id": _ID, "name": {"type": "string"}, "source": _ENDPOINT, "target": _ENDPOINT},
            },
        },
    },
}


def parse_process(document: Any) -> ProcessModel:
    try:
        data = load_document(document)
        check_schema(data, _PROCESS_SCHEMA, "process")
    except DocumentError as exc:
        raise ProcessError(str(exc)) from exc
    pools = []
    for p in data["pools"]:
        nodes = []
        for n in p.get("nodes", []):
            kind = NodeKind(n["kind"])
            if kind is not NodeKind.TASK and ("execution" in n or "effects" in n):
                raise ProcessError(f"node {p['name']}/{n['id']}: only tasks take 'execution' or 'effects'")
            detail = None
            if kind is NodeKind.TASK:
                detail = TaskDetail(
                    ExecutionKind(n.get("execution", ExecutionKind.UNSPECIFIED.value)),
                    tuple(Effect(e["object"], e["op"]) for e in n.get("effects", [])),
                )
            nodes.append(Node(n["id"], kind, n.get("name"), n.get("lane"), detail))
        flows = tuple(
            SequenceFlow(f["id"], f["source"], f["target"], f.get("condition"), f.get("default", False))
            for f in p.get("sequence_flows", [])
        )
        pools.append(Pool(p["name"], p.get("actor"), tuple(p.get("lanes", [])), tuple(nodes), flows))
    messages = tuple(
        MessageFlow(m["id"], m["source"]["pool"], m["source"]["node"], m["target"]["pool"], m["target"]["node"],
                    m.get("name"))
        for m in data.get("message_flows", [])
    )
    return ProcessModel(parse_stage(data["stage"]), Maturity(data["maturity"]), tuple(pools), messages)


def serialize_process(model: ProcessModel) -> dict[str, Any]:
    pools = []
    for p in model.pools:
        nodes = []
        for n in p.nodes:
            entry: dict[str, Any] = {"id": n.id, "kind": n.kind.value}
            if n.name is not None:
                entry["name"] = n.name
            if n.lane is not None:
                entry["lane"] = n.lane
            if n.detail is not None:
                if n.detail.execution_kind is not ExecutionKind.UNSPECIFIED:
                    entry["execution"] = n.detail.execution_kind.value
                if n.detail.effects:
                    entry["effects"] = [{"object": e.object, "op": e.op} for e in n.detail.effects]
            nodes.append(entry)
        flows = []
        for f in p.sequence_flows:
            entry = {"id": f.id, "source": f.source, "target": f.target}
            if f.condition is not None:
                entry["condition"] = f.condition
            if f.default:
                entry["default"] = True
            flows.append(entry)
        pool: dict[str, Any] = {"name": p.name}
        if p.actor != p.name:
            pool["actor"] = p.actor
        if p.lanes:
            pool["lanes"] = list(p.lanes)
        pool["nodes"] = nodes
        pool["sequence_flows"] = flows
        pools.append(pool)
    messages = []
    for m in model.message_flows:
        entry = {"id": m.id}
        if m.name is not None:
            entry["name"] = m.name
        entry["source"] = {"pool": m.source_pool, "node": m.source}
        entry["target"] = {"pool": m.target_pool, "node": m.target}
        messages.append(entry)
    return {"stage": model.stage.name, "maturity": model.maturity.value, "pools": pools, "message_flows": messages}


def validate_structure(model: ProcessModel) -> list[Diagnostic]:
    """Structural well-formedness of every pool and message flow."""
    cell, base = model.cell, model.subject
    out: list[Diagnostic] = []

    def add(code: str, where: str, message: str, severity: Severity = Severity.ERROR) -> None:
        out.append(diag(code, severity, cell, f"{base}#{where}", message))

    for name, n in Counter(p.name for p in model.pools).items():
        if n > 1:
            add("PROC-DUP-POOL", name, f"pool '{name}' declared {n} times")

    owner: dict[str, set[str]] = defaultdict(set)
    for p in model.pools:
        for node in p.nodes:
            owner[node.id].add(p.name)

    for p in model.pools:
        ids = {n.id for n in p.nodes}
        for node_id, n in Counter(n.id for n in p.nodes).items():
            if n > 1:
                add("PROC-DUP-NODE", f"{p.name}/{node_id}", f"node id '{node_id}' used {n} times in pool '{p.name}'")
        for flow_id, n in Counter(f.id for f in p.sequence_flows).items():
            if n > 1:
                add("PROC-DUP-FLOW", f"{p.name}/{flow_id}", f"flow id '{flow_id}' used {n} times in pool '{p.name}'")
        for node in p.nodes:
            if node.lane is not None and node.lane not in p.lanes:
                add("PROC-LANE", f"{p.name}/{node.id}",
                    f"node '{node.id}' assigned to undeclared lane '{node.lane}' of pool '{p.name}'")

        flows = []
        for f in p.sequence_flows:
            missing = [end for end in (f.source, f.target) if end not in ids]
            if not missing:
                flows.append(f)
            elif any(owner.get(end) for end in missing):
                add("PROC-XPOOL-SEQ", f"{p.name}/{f.id}",
                    f"sequence flow '{f.id}' leaves pool '{p.name}' (use a message flow)")
            else:
                add("PROC-FLOW-ENDPOINT", f"{p.name}/{f.id}",
                    f"sequence flow '{f.id}' references unknown node(s): {', '.join(missing)}")

        out_deg: dict[str, list[SequenceFlow]] = defaultdict(list)
        in_deg: dict[str, list[SequenceFlow]] = defaultdict(list)
        for f in flows:
            out_deg[f.source].append(f)
            in_deg[f.target].append(f)

        starts = [n for n in p.nodes if n.kind in START_KINDS]
        if not starts:
            add("PROC-NOSTART", p.name, f"pool '{p.name}' has no start event")
        if not any(n.kind is NodeKind.END for n in p.nodes):
            add("PROC-NOEND", p.name, f"pool '{p.name}' has no end event")

        reached = {n.id for n in starts}
        queue = deque(reached)
        while queue:
            current = queue.popleft()
            for f in out_deg[current]:
                if f.target not in reached:
                    reached.add(f.target)
                    queue.append(f.target)

        for node in p.nodes:
            where = f"{p.name}/{node.id}"
            if node.kind in START_KINDS and in_deg[node.id]:
                add("PROC-START-IN", where, f"start event '{node.id}' has incoming sequence flow")
            if node.kind is NodeKind.END and out_deg[node.id]:
                add("PROC-END-OUT", where, f"end event '{node.id}' has outgoing sequence flow")
            reasons = []
            if node.id not in reached:
                reasons.append("is not reachable from a start")
            if node.kind is not NodeKind.END and not out_deg[node.id]:
                reasons.append("has no outgoing flow and is not an end")
            if reasons:
                add("PROC-DANGLING", where, f"{node.kind.value} '{node.label}' " + " and ".join(reasons))
            if node.kind in GATEWAY_KINDS and len(out_deg[node.id]) < 2 and len(in_deg[node.id]) < 2:
                add("PROC-GW-DEGREE", where, f"gateway '{node.id}' has fewer than two branches on either side")
            if node.kind is NodeKind.XOR and sum(f.default for f in out_deg[node.id]) > 1:
                add("PROC-XOR-DEFAULT", where, f"exclusive gateway '{node.id}' has several default flows")

        for f in flows:
            source = p.node(f.source)
            if (f.condition is not None or f.default) and source.kind is not NodeKind.XOR:
                add("PROC-COND-NONXOR", f"{p.name}/{f.id}",
                    f"flow '{f.id}' carries a condition/default but does not leave an exclusive gateway",
                    Severity.WARNING)

    for flow_id, n in Counter(m.id for m in model.message_flows).items():
        if n > 1:
            add("PROC-DUP-FLOW", f"messages/{flow_id}", f"message flow id '{flow_id}' used {n} times")
    fed: set[tuple[str, str]] = set()
    for m in model.message_flows:
        where = f"messages/{m.id}"
        src_pool, tgt_pool = model.pool(m.source_pool), model.pool(m.target_pool)
        if src_pool is None or tgt_pool is None:
            continue  # undeclared pools are rule R8's business
        fed.add((m.target_pool, m.target))
        src, tgt = src_pool.node(m.source), tgt_pool.node(m.target)
        if src is None or tgt is None:
            missing = [f"{pool}/{node}" for pool, node, found in
                       ((m.source_pool, m.source, src), (m.target_pool, m.target, tgt)) if found is None]
            add("PROC-MSG-ENDPOINT", where, f"message flow '{m.id}' references unknown node(s): {', '.join(missing)}")
            continue
        if m.source_pool == m.target_pool:
            add("PROC-MSG-SAMEPOOL", where, f"message flow '{m.id}' stays inside pool '{m.source_pool}'")
        if src.kind not in MESSAGE_SOURCE_KINDS:
            add("PROC-MSG-KIND", where, f"message flow '{m.id}' cannot be sent by {src.kind.value} '{src.id}'")
        if tgt.kind not in MESSAGE_TARGET_KINDS:
            add("PROC-MSG-KIND", where, f"message flow '{m.id}' cannot be received by {tgt.kind.value} '{tgt.id}'")
    for p in model.pools:
        for node in p.nodes:
            if node.kind in (NodeKind.CATCH_MESSAGE, NodeKind.START_MESSAGE) and (p.name, node.id) not in fed:
                add("PROC-MSG-UNFED", f"{p.name}/{node.id}",
                    f"{node.kind.value} '{node.id}' receives no message flow", Severity.WARNING)
    return sort_diagnostics(out)


def _resolve_annotation_target(model: ProcessModel, key: str) -> tuple[str, str]:
    pool_name, sep, node_id = key.partition("/")
    if sep:
        pool = model.pool(pool_name)
        if pool is None or pool.node(node_id) is None:
            raise ProcessError(f"annotation target {key!r} does not exist")
        return pool_name, node_id
    hits = [(p.name, n.id) for p in model.pools for n in p.nodes if n.id == key]
    if not hits:
        raise ProcessError(f"annotation target {key!r} does not exist")
    if len(hits) > 1:
        raise ProcessError(f"annotation target {key!r} is ambiguous; qualify it as Pool/{key}")
    return hits[0]


def enrich_to_psm(model: ProcessModel, annotations: Mapping[str, ExecutionKind | str]) -> ProcessModel:
    """Return a PSM-maturity copy with task execution kinds applied.

    Keys are node ids, optionally qualified as ``"Pool/node"``. Tasks left out
    of ``annotations`` stay Unspecified. Topology is never touched.
    """
    if model.maturity is not Maturity.PIM:
        raise ProcessError(f"enrich_to_psm expects a PIM model, got {model.maturity.value}")
    targets: dict[tuple[str, str], ExecutionKind] = {}
    for key, kind in annotations.items():
        pool_name, node_id = _resolve_annotation_target(model, key)
        node = model.pool(pool_name).node(node_id)
        if node.kind is not NodeKind.TASK:
            raise ProcessError(f"annotation target {key!r} is a {node.kind.value}, not a Task")
        targets[(pool_name, node_id)] = ExecutionKind(kind)

    pools = []
    for p in model.pools:
        nodes = tuple(
            replace(n, detail=replace(n.detail, execution_kind=targets[(p.name, n.id)]))
            if (p.name, n.id) in targets else n
            for n in p.nodes
        )
        pools.append(replace(p, nodes=nodes))
    return replace(model, maturity=Maturity.PSM, pools=tuple(pools))


def check_executable(model: ProcessModel) -> list[Diagnostic]:
    if model.maturity is not Maturity.PSM:
        raise ProcessError("check_executable needs a PSM-maturity model")
    cell, base = model.cell, model.subject
    out = []
    for p in model.pools:
        for node in p.nodes:
            where = f"{base}#{p.name}/{node.id}"
            if node.kind is NodeKind.TASK and node.detail.execution_kind is ExecutionKind.UNSPECIFIED:
                out.append(diag("PSM-UNTYPED", Severity.ERROR, cell, where,
                                f"task '{node.label}' has no execution kind (User, ManualPassThrough, Automatic)"))
            if node.kind is NodeKind.XOR:
                outgoing = p.outgoing(node.id)
                undecided = [f.id for f in outgoing if not f.default and f.condition is None]
                if len(outgoing) >= 2 and undecided:
                    out.append(diag("PSM-XOR-NOCOND", Severity.ERROR, cell, where,
                                    f"exclusive split '{node.id}' has unconditioned non-default flow(s): "
                                    + ", ".join(undecided)))
    return sort_diagnostics(out)


def referenced_names(models: Iterable[ProcessModel]) -> set[str]:
    """Every lexicon-relevant name a set of models mentions."""
    names: set[str] = set()
    for model in models:
        for p in model.pools:
            names.add(p.actor)
            names.update(p.lanes)
            for n in p.tasks():
                names.add(n.label)
                names.update(e.object for e in n.detail.effects)
    return names
