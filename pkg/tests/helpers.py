"""Shared test utilities: fixture access, project mutation, random model strategy."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from hypothesis import strategies as st

from easinnova.cells import Stage
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
)

FIXTURES = Path(__file__).parent / "fixtures"
PIZZALOVE = FIXTURES / "pizzalove"
ASIS_REF = FIXTURES / "lexicons" / "asis_reference.json"
TOBE_REF = FIXTURES / "lexicons" / "tobe_reference.json"


def read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")


def copy_fixture(tmp_path: Path) -> Path:
    target = tmp_path / "pizzalove"
    shutil.copytree(PIZZALOVE, target)
    return target


def edit(root: Path, rel: str, change) -> None:
    """Load ``rel`` under ``root``, let ``change`` mutate it in place, write it back."""
    path = root / rel
    data = read_json(path)
    change(data)
    write_json(path, data)


def pool_of(data: dict, name: str) -> dict:
    return next(p for p in data["pools"] if p["name"] == name)


def node_of(pool: dict, node_id: str) -> dict:
    return next(n for n in pool["nodes"] if n["id"] == node_id)


# --- random supported-subset models ---------------------------------------

IDENT = st.from_regex(r"[A-Z][a-z]{1,6}[0-9]?", fullmatch=True)
# attribute values: no tab/newline (XML attribute normalisation would rewrite them)
LABEL = st.text(alphabet="abcdefgh XYZ_0123456789éß<>&\"'", min_size=0, max_size=12)
CONDITION = st.text(alphabet="abc xyz<>=&'\"0123456789\n", min_size=0, max_size=16)
KINDS = [ExecutionKind.USER, ExecutionKind.MANUAL, ExecutionKind.AUTOMATIC]


class _PoolBuilder:
    def __init__(self, draw, lanes: tuple[str, ...]):
        self.draw = draw
        self.lanes = lanes
        self.nodes: list[Node] = []
        self.flows: list[SequenceFlow] = []

    def _lane(self) -> str | None:
        if not self.lanes:
            return None
        return self.draw(st.sampled_from(self.lanes))

    def node(self, kind: NodeKind) -> str:
        node_id = f"n{len(self.nodes) + 1}"
        detail = None
        if kind is NodeKind.TASK:
            effects = self.draw(st.lists(
                st.builds(Effect, IDENT, st.sampled_from("CRUDA")), max_size=3))
            detail = TaskDetail(self.draw(st.sampled_from(KINDS)), tuple(effects))
        name = self.draw(st.none() | LABEL)
        self.nodes.append(Node(node_id, kind, name, self._lane(), detail))
        return node_id

    def flow(self, source: str, target: str, condition: str | None = None, default: bool = False) -> None:
        self.flows.append(SequenceFlow(f"f{len(self.flows) + 1}", source, target, condition, default))

    def block(self, depth: int) -> tuple[str, str]:
        options = ["leaf"] if depth <= 0 else ["leaf", "seq", "xor", "and"]
        choice = self.draw(st.sampled_from(options))
        if choice == "leaf":
            kind = self.draw(st.sampled_from(
                [NodeKind.TASK, NodeKind.TASK, NodeKind.CATCH_MESSAGE, NodeKind.THROW_MESSAGE]))
            n = self.node(kind)
            return n, n
        if choice == "seq":
            a_in, a_out = self.block(depth - 1)
            b_in, b_out = self.block(depth - 1)
            self.flow(a_out, b_in)
            return a_in, b_out
        gateway = NodeKind.XOR if choice == "xor" else NodeKind.AND
        split = self.node(gateway)
        branches = [self.block(depth - 1) for _ in range(self.draw(st.integers(2, 3)))]
        merge = self.node(gateway)
        default = self.draw(st.none() | st.integers(0, len(branches) - 1)) if gateway is NodeKind.XOR else None
        for i, (entry, exit_) in enumerate(branches):
            if gateway is NodeKind.XOR:
                is_default = i == default
                self.flow(split, entry, None if is_default else self.draw(CONDITION), is_default)
            else:
                self.flow(split, entry)
            self.flow(exit_, merge)
        return split, merge


@st.composite
def process_models(draw, max_pools: int = 3, max_depth: int = 2) -> ProcessModel:
    """Random executable PSM models inside the supported BPMN subset."""
    names = draw(st.lists(IDENT, min_size=1, max_size=max_pools, unique=True))
    pools = []
    for name in names:
        lanes = tuple(draw(st.lists(IDENT, max_size=2, unique=True)))
        b = _PoolBuilder(draw, lanes)
        start = b.node(draw(st.sampled_from([NodeKind.START_NONE, NodeKind.START_MESSAGE])))
        entry, exit_ = b.block(draw(st.integers(0, max_depth)))
        end = b.node(NodeKind.END)
        b.flow(start, entry)
        b.flow(exit_, end)
        actor = draw(st.none() | IDENT)
        pools.append(Pool(name, actor, lanes, tuple(b.nodes), tuple(b.flows)))
    messages = []
    if len(pools) > 1:
        sources = [(p.name, n.id) for p in pools for n in p.nodes
                   if n.kind in (NodeKind.THROW_MESSAGE, NodeKind.TASK, NodeKind.END)]
        targets = [(p.name, n.id) for p in pools for n in p.nodes
                   if n.kind in (NodeKind.CATCH_MESSAGE, NodeKind.START_MESSAGE, NodeKind.TASK)]
        pairs = draw(st.lists(st.tuples(st.sampled_from(sources), st.sampled_from(targets)), max_size=4))
        for i, (src, tgt) in enumerate(p for p in pairs if p[0][0] != p[1][0]):
            messages.append(MessageFlow(f"m{i + 1}", src[0], src[1], tgt[0], tgt[1], draw(st.none() | LABEL)))
    stage = draw(st.sampled_from([Stage.ASIS, Stage.TOBE]))
    return ProcessModel(stage, Maturity.PSM, tuple(pools), tuple(messages))


def chain_model(*kinds: NodeKind, stage: Stage = Stage.TOBE, maturity: Maturity = Maturity.PSM) -> ProcessModel:
    """One pool, nodes n1..nk linked in a line."""
    nodes = []
    for i, kind in enumerate(kinds, 1):
        detail = TaskDetail(ExecutionKind.AUTOMATIC) if kind is NodeKind.TASK else None
        nodes.append(Node(f"n{i}", kind, detail=detail))
    flows = tuple(SequenceFlow(f"f{i}", f"n{i}", f"n{i + 1}") for i in range(1, len(kinds)))
    return ProcessModel(stage, maturity, (Pool("P", nodes=tuple(nodes), sequence_flows=flows),))


# --- one-edit mutations of the clean fixture -------------------------------

def _insert_fryburgers(data: dict) -> None:
    pool = pool_of(data, "DoughMaker")
    pool["nodes"].append({"id": "FryBurgers", "kind": "Task"})
    next(f for f in pool["sequence_flows"] if f["id"] == "f2")["target"] = "FryBurgers"
    pool["sequence_flows"].append({"id": "f3", "source": "FryBurgers", "target": "DoughEnd"})


def _ghost_message(data: dict) -> None:
    data["message_flows"].append({
        "id": "m9",
        "source": {"pool": "PizzaLove", "node": "CustomerPolling"},
        "target": {"pool": "Ghost", "node": "Inbox"},
    })


# code -> (file, in-place edit); each yields exactly one new diagnostic with that code
MUTATIONS = {
    "R1": ("cim/tobe/lexicon.json", lambda d: d["links"].append({"source": "Order", "target": "Invoice"})),
    "R2": ("pim/tobe/process.json", lambda d: pool_of(d, "DoughMaker").__setitem__("actor", "Baker")),
    "R3": ("pim/tobe/process.json", _insert_fryburgers),
    "R4": ("pim/tobe/process.json",
           lambda d: node_of(pool_of(d, "DoughMaker"), "MakeDough")["effects"].append({"object": "Invoice", "op": "C"})),
    "R5": ("pim/tobe/process.json", lambda d: pool_of(d, "PizzaLove")["lanes"].append("Kitchen")),
    "R6": ("pim/tobe/usecases.json", lambda d: d["use_cases"].append({"actor": "Customer", "action": "CookPizzas"})),
    "R7": ("pim/tobe/classes.json", lambda d: d["classes"].append({"name": "Invoice", "attributes": []})),
    "R8": ("pim/tobe/process.json", _ghost_message),
    "CRUD-NO-CREATE": ("pim/tobe/process.json",
                       lambda d: node_of(pool_of(d, "DoughMaker"), "MakeDough").__setitem__("effects", [])),
    "MIG-UNMAPPED": ("psm/transformation/migration.json", lambda d: d["mappings"].pop(0)),
    "PSM-UNTYPED": ("psm/tobe/process.json",
                    lambda d: node_of(pool_of(d, "PizzaLove"), "CustomerPolling").pop("execution")),
}


def mutate(root: Path, code: str) -> None:
    rel, change = MUTATIONS[code]
    edit(root, rel, change)


def diagnostic_keys(diagnostics) -> set[tuple[str, str, str, str]]:
    return {(d.code, d.severity.value, str(d.cell), d.subject) for d in diagnostics}
