"""BPMN 2.0 XML export and import for PSM process models.

Element ids are derived from model ids only, so the same model always yields
the same bytes. Identifiers in models contain no ``.`` or ``-``, which keeps
the id families below disjoint:

* node ``<pool>.<node>``
* sequence flow ``Flow-<pool>.<flow>``
* message flow ``MessageFlow-<id>``
* participant/process/lane ``Participant-<pool>``, ``Process-<pool>``, ``Lane-<pool>-<lane>``
"""

from __future__ import annotations

import functools
from importlib import resources

from lxml import etree

from easinnova.cells import Stage
from easinnova.diagnostics import Diagnostic, Severity, diag, has_errors, sort_diagnostics
from easinnova.process import (
    Effect,
    ExecutionKind,
    Maturity,
    MessageFlow,
    Node,
    NodeKind,
    Pool,
    ProcessModel,
    SequenceFlow,
    TaskDetail,
    check_executable,
    validate_structure,
)

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"
EXT_NS = "urn:easinnova:bpmn-extensions"
CAMUNDA_NS = "http://camunda.org/schema/1.0/bpmn"

VENDORS = ("camunda",)


class BpmnError(ValueError):
    """Malformed XML or a document outside the BPMN 2.0 namespace."""


class ExportError(ValueError):
    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


def _q(tag: str, ns: str = BPMN_NS) -> str:
    return f"{{{ns}}}{tag}"


_TASK_TAGS = {
    ExecutionKind.USER: "userTask",
    ExecutionKind.MANUAL: "manualTask",
    ExecutionKind.AUTOMATIC: "serviceTask",
    ExecutionKind.UNSPECIFIED: "task",
}
_TAG_TASKS = {tag: kind for kind, tag in _TASK_TAGS.items()}

_EVENT_TAGS = {
    NodeKind.START_NONE: "startEvent",
    NodeKind.START_MESSAGE: "startEvent",
    NodeKind.END: "endEvent",
    NodeKind.CATCH_MESSAGE: "intermediateCatchEvent",
    NodeKind.THROW_MESSAGE: "intermediateThrowEvent",
    NodeKind.XOR: "exclusiveGateway",
    NodeKind.AND: "parallelGateway",
}
_MESSAGE_EVENTS = frozenset({NodeKind.START_MESSAGE, NodeKind.CATCH_MESSAGE, NodeKind.THROW_MESSAGE})


def node_xml_id(pool: str, node: str) -> str:
    return f"{pool}.{node}"


def flow_xml_id(pool: str, flow: str) -> str:
    return f"Flow-{pool}.{flow}"


def export_bpmn(model: ProcessModel, *, vendor: str | None = None) -> bytes:
    """Serialize a PSM model to BPMN 2.0 XML (UTF-8 bytes).

    Raises :class:`ExportError` if the model is not executable: structural
    errors, PSM-UNTYPED/PSM-XOR-NOCOND findings, or message flows touching
    undeclared pools. ``vendor="camunda"`` adds engine hints to service tasks.
    """
    if vendor is not None and vendor not in VENDORS:
        raise ExportError(f"unknown vendor {vendor!r}; choose from {', '.join(VENDORS)}")
    if model.maturity is not Maturity.PSM:
        raise ExportError("only PSM-maturity models can be exported")
    problems = [d for d in validate_structure(model) + check_executable(model) if d.severity is Severity.ERROR]
    if problems:
        raise ExportError(f"model is not executable ({len(problems)} error(s))", problems)
    for p in model.pools:
        for f in p.sequence_flows:
            if f.default and p.node(f.source).kind is not NodeKind.XOR:
                raise ExportError(f"default flow '{p.name}/{f.id}' does not leave an exclusive gateway")
    for m in model.message_flows:
        if model.pool(m.source_pool) is None or model.pool(m.target_pool) is None:
            raise ExportError(f"message flow '{m.id}' joins an undeclared pool")

    nsmap = {None: BPMN_NS, "xsi": XSI_NS, "ei": EXT_NS}
    if vendor == "camunda":
        nsmap["camunda"] = CAMUNDA_NS
    root = etree.Element(_q("definitions"), nsmap=nsmap)
    root.set("id", "Definitions")
    root.set("targetNamespace", f"urn:easinnova:{model.stage.name.lower()}")
    root.set(_q("stage", EXT_NS), model.stage.name)

    collab = etree.SubElement(root, _q("collaboration"), id="Collaboration")
    for p in model.pools:
        part = etree.SubElement(collab, _q("participant"))
        part.set("id", f"Participant-{p.name}")
        part.set("name", p.name)
        part.set("processRef", f"Process-{p.name}")
        if p.actor != p.name:
            part.set(_q("actor", EXT_NS), p.actor)
    for m in model.message_flows:
        mf = etree.SubElement(collab, _q("messageFlow"))
        mf.set("id", f"MessageFlow-{m.id}")
        if m.name is not None:
            mf.set("name", m.name)
        mf.set("sourceRef", node_xml_id(m.source_pool, m.source))
        mf.set("targetRef", node_xml_id(m.target_pool, m.target))

    for p in model.pools:
        proc = etree.SubElement(root, _q("process"))
        proc.set("id", f"Process-{p.name}")
        proc.set("name", p.name)
        proc.set("isExecutable", "true")
        if p.lanes:
            lane_set = etree.SubElement(proc, _q("laneSet"), id=f"LaneSet-{p.name}")
            for lane in p.lanes:
                lane_el = etree.SubElement(lane_set, _q("lane"), id=f"Lane-{p.name}-{lane}", name=lane)
                for n in p.nodes:
                    if n.lane == lane:
                        etree.SubElement(lane_el, _q("flowNodeRef")).text = node_xml_id(p.name, n.id)
        defaults = {f.source: f.id for f in p.sequence_flows if f.default}
        for n in p.nodes:
            _export_node(proc, p, n, defaults, vendor)
        for f in p.sequence_flows:
            sf = etree.SubElement(proc, _q("sequenceFlow"))
            sf.set("id", flow_xml_id(p.name, f.id))
            sf.set("sourceRef", node_xml_id(p.name, f.source))
            sf.set("targetRef", node_xml_id(p.name, f.target))
            if f.condition is not None:
                cond = etree.SubElement(sf, _q("conditionExpression"))
                cond.set(_q("type", XSI_NS), "tFormalExpression")
                cond.text = f.condition
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)


def _export_node(proc, pool: Pool, n: Node, defaults: dict[str, str], vendor: str | None) -> None:
    xml_id = node_xml_id(pool.name, n.id)
    if n.kind is NodeKind.TASK:
        el = etree.SubElement(proc, _q(_TASK_TAGS[n.detail.execution_kind]))
    else:
        el = etree.SubElement(proc, _q(_EVENT_TAGS[n.kind]))
    el.set("id", xml_id)
    if n.name is not None:
        el.set("name", n.name)
    if n.kind is NodeKind.XOR and n.id in defaults:
        el.set("default", flow_xml_id(pool.name, defaults[n.id]))
    if n.kind is NodeKind.TASK:
        if vendor == "camunda" and n.detail.execution_kind is ExecutionKind.AUTOMATIC:
            el.set(_q("type", CAMUNDA_NS), "external")
            el.set(_q("topic", CAMUNDA_NS), n.label)
        if n.detail.effects:
            ext = etree.SubElement(el, _q("extensionElements"))
            for e in n.detail.effects:
                etree.SubElement(ext, _q("effect", EXT_NS), object=e.object, op=e.op)
    if n.kind in _MESSAGE_EVENTS:
        etree.SubElement(el, _q("messageEventDefinition"), id=f"{xml_id}-message")


@functools.lru_cache(maxsize=1)
def _schema() -> etree.XMLSchema:
    with resources.as_file(resources.files("easinnova.schemas") / "BPMN20.xsd") as path:
        return etree.XMLSchema(etree.parse(str(path)))


def schema_errors(document: bytes) -> list[str]:
    """Validate against the OMG BPMN 2.0 XSD; an empty list means valid."""
    schema = _schema()
    try:
        tree = etree.fromstring(document)
    except etree.XMLSyntaxError as exc:
        return [f"not well-formed: {exc}"]
    if schema.validate(tree):
        return []
    return [f"line {e.line}: {e.message}" for e in schema.error_log]


# --- import -------------------------------------------------------------

_IGNORED = {"documentation", "extensionElements", "incoming", "outgoing"}
_NODE_TAGS = {"startEvent", "endEvent", "intermediateCatchEvent", "intermediateThrowEvent",
              "exclusiveGateway", "parallelGateway", *_TAG_TASKS}


def _local(el) -> str:
    return etree.QName(el).localname


def _strip(value: str, prefix: str) -> str:
    return value[len(prefix):] if value.startswith(prefix) else value


def import_bpmn(document: bytes | str, *, stage: Stage | None = None) -> tuple[ProcessModel, list[Diagnostic]]:
    """Parse BPMN 2.0 XML into a PSM model.

    Elements outside the supported subset are skipped, each with an
    IO-UNSUPPORTED warning. Raises :class:`BpmnError` for malformed XML or a
    root element outside the BPMN model namespace.
    """
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = etree.fromstring(document, parser=etree.XMLParser(resolve_entities=False, no_network=True))
    except etree.XMLSyntaxError as exc:
        raise BpmnError(f"malformed XML: {exc}") from exc
    if etree.QName(root).namespace != BPMN_NS or _local(root) != "definitions":
        raise BpmnError(f"not a BPMN 2.0 document: root is {root.tag}, expected {{{BPMN_NS}}}definitions")

    if stage is None:
        raw = root.get(_q("stage", EXT_NS), "TOBE")
        stage = Stage[raw] if raw in ("ASIS", "TOBE") else Stage.TOBE
    cell_model = ProcessModel(stage, Maturity.PSM)
    diagnostics: list[Diagnostic] = []
    base = f"export/{stage.name.lower()}.bpmn"

    def warn(code: str, element_id: str, message: str) -> None:
        diagnostics.append(diag(code, Severity.WARNING, cell_model.cell, f"{base}#{element_id}", message))

    def unsupported(el, context: str) -> None:
        name = _local(el) if isinstance(el.tag, str) else "comment"
        ident = el.get("id") or context
        warn("IO-UNSUPPORTED", ident, f"unsupported element '{name}' in {context} skipped")

    participants: dict[str, tuple[str, str | None]] = {}
    raw_messages = []
    processes = []
    for child in root:
        if not isinstance(child.tag, str):
            continue
        tag = _local(child) if etree.QName(child).namespace == BPMN_NS else None
        if tag == "collaboration":
            for el in child:
                if not isinstance(el.tag, str):
                    continue
                ctag = _local(el) if etree.QName(el).namespace == BPMN_NS else None
                if ctag == "participant":
                    ref = (el.get("processRef") or "").split(":")[-1]
                    name = el.get("name") or _strip(el.get("id", ref), "Participant-")
                    participants[ref] = (name, el.get(_q("actor", EXT_NS)))
                elif ctag == "messageFlow":
                    raw_messages.append(el)
                elif ctag not in _IGNORED:
                    unsupported(el, "collaboration")
        elif tag == "process":
            processes.append(child)
        elif tag in ("message", "signal", "error", "escalation", "itemDefinition", "dataStore", "category",
                     "interface", "resource", "eventDefinition", "globalTask", "correlationProperty",
                     "partnerRole", "partnerEntity", "endPoint", "choreography", "globalConversation"):
            if tag != "message":
                unsupported(child, "definitions")
        elif tag not in _IGNORED:
            unsupported(child, "definitions")

    pools: list[Pool] = []
    locate: dict[str, tuple[str, str]] = {}
    for proc in processes:
        proc_id = proc.get("id", "")
        pool_name, actor = participants.get(proc_id, (proc.get("name") or _strip(proc_id, "Process-"), None))
        lanes: list[str] = []
        lane_of: dict[str, str] = {}
        nodes: list[Node] = []
        defaults: set[str] = set()
        flow_elements = []
        for el in proc:
            if not isinstance(el.tag, str):
                continue
            tag = _local(el) if etree.QName(el).namespace == BPMN_NS else None
            if tag == "laneSet":
                for lane in el:
                    if isinstance(lane.tag, str) and _local(lane) == "lane":
                        lane_name = lane.get("name") or _strip(lane.get("id", ""), f"Lane-{pool_name}-")
                        lanes.append(lane_name)
                        for ref in lane:
                            if isinstance(ref.tag, str) and _local(ref) == "flowNodeRef" and ref.text:
                                lane_of[ref.text.strip()] = lane_name
                        for nested in lane:
                            if isinstance(nested.tag, str) and _local(nested) == "childLaneSet":
                                unsupported(nested, f"lane {lane_name}")
                    elif isinstance(lane.tag, str):
                        unsupported(lane, "laneSet")
            elif tag == "sequenceFlow":
                flow_elements.append(el)
            elif tag in _NODE_TAGS:
                node = _import_node(el, tag, pool_name, unsupported)
                if node is not None:
                    xml_id = el.get("id", "")
                    nodes.append(node)
                    locate[xml_id] = (pool_name, node.id)
                    if tag == "exclusiveGateway" and el.get("default"):
                        defaults.add(el.get("default"))
            elif tag not in _IGNORED:
                unsupported(el, f"process {pool_name}")
        # lane membership may be declared before or after the nodes
        nodes = [Node(n.id, n.kind, n.name, lane_of.get(node_xml_id(pool_name, n.id), lane_of.get(n.id)), n.detail)
                 for n in nodes]
        known = {n.id for n in nodes}
        flows = []
        for el in flow_elements:
            fid = el.get("id", "")
            src = locate.get(el.get("sourceRef", ""))
            tgt = locate.get(el.get("targetRef", ""))
            if src is None or tgt is None or src[1] not in known or tgt[1] not in known:
                warn("IO-DANGLING-REF", fid, f"sequence flow '{fid}' references a skipped or missing node")
                continue
            condition = None
            for sub in el:
                if isinstance(sub.tag, str) and _local(sub) == "conditionExpression":
                    condition = sub.text or ""
                elif isinstance(sub.tag, str) and _local(sub) not in _IGNORED:
                    unsupported(sub, f"sequence flow {fid}")
            flows.append(SequenceFlow(_strip(fid, f"Flow-{pool_name}."), src[1], tgt[1], condition, fid in defaults))
        pools.append(Pool(pool_name, actor, tuple(lanes), tuple(nodes), tuple(flows)))

    messages = []
    for el in raw_messages:
        mid = el.get("id", "")
        src = locate.get(el.get("sourceRef", "").split(":")[-1])
        tgt = locate.get(el.get("targetRef", "").split(":")[-1])
        if src is None or tgt is None:
            warn("IO-DANGLING-REF", mid, f"message flow '{mid}' references a skipped or missing node")
            continue
        messages.append(MessageFlow(_strip(mid, "MessageFlow-"), src[0], src[1], tgt[0], tgt[1], el.get("name")))

    model = ProcessModel(stage, Maturity.PSM, tuple(pools), tuple(messages))
    return model, sort_diagnostics(diagnostics)


def _import_node(el, tag: str, pool_name: str, unsupported) -> Node | None:
    xml_id = el.get("id", "")
    node_id = _strip(xml_id, f"{pool_name}.")
    name = el.get("name")
    definitions = [sub for sub in el if isinstance(sub.tag, str) and _local(sub).endswith("EventDefinition")]
    message_defs = [d for d in definitions if _local(d) == "messageEventDefinition"]
    for other in definitions:
        if _local(other) != "messageEventDefinition":
            unsupported(other, f"{tag} {xml_id}")
            if tag != "endEvent":
                return None
    if tag in _TAG_TASKS:
        effects = []
        for sub in el:
            if not isinstance(sub.tag, str):
                continue
            if _local(sub) == "extensionElements":
                for ext in sub:
                    if isinstance(ext.tag, str) and etree.QName(ext).namespace == EXT_NS and _local(ext) == "effect":
                        effects.append(Effect(ext.get("object", ""), ext.get("op", "")))
            elif _local(sub) not in _IGNORED:
                unsupported(sub, f"{tag} {xml_id}")
        return Node(node_id, NodeKind.TASK, name, None, TaskDetail(_TAG_TASKS[tag], tuple(effects)))
    if tag == "startEvent":
        kind = NodeKind.START_MESSAGE if message_defs else NodeKind.START_NONE
    elif tag == "endEvent":
        kind = NodeKind.END
        for d in message_defs:
            unsupported(d, f"{tag} {xml_id}")
    elif tag == "intermediateCatchEvent":
        if not message_defs:
            unsupported(el, f"process {pool_name}")
            return None
        kind = NodeKind.CATCH_MESSAGE
    elif tag == "intermediateThrowEvent":
        if not message_defs:
            unsupported(el, f"process {pool_name}")
            return None
        kind = NodeKind.THROW_MESSAGE
    elif tag == "exclusiveGateway":
        kind = NodeKind.XOR
    else:
        kind = NodeKind.AND
    return Node(node_id, kind, name)


def export_is_valid(model: ProcessModel) -> bool:
    try:
        return not schema_errors(export_bpmn(model))
    except ExportError:
        return False


__all__ = [
    "BPMN_NS",
    "BpmnError",
    "ExportError",
    "export_bpmn",
    "has_errors",
    "import_bpmn",
    "schema_errors",
]
