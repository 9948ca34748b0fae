"""Token-game simulation over process models.

Token positions are strings:

* ``start:<pool>/<node>`` for the initial token of a none start event
* ``flow:<pool>/<flow>`` for a sequence flow
* ``msg:<message flow id>`` for a message in transit

Firing rules: a task, event or XOR gateway consumes one token from any one
incoming flow; an AND gateway consumes one from every incoming flow. XOR
gateways produce on one outgoing flow (each choice is its own transition),
all other nodes produce on every outgoing flow. A node that is the target of
message flows also consumes one message, and a message start event fires only
while its pool has not been activated. Message events that no message flow
feeds are never enabled. Message sources send on all their outgoing message
flows. End events mark their pool ended.
"""

from __future__ import annotations

import enum
import itertools
import random
from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

from easinnova.diagnostics import Severity
from easinnova.process import NodeKind, ProcessModel, validate_structure


class SimulationError(ValueError):
    """The model fails the structural precondition for simulation."""


class Outcome(str, enum.Enum):
    PROPER_COMPLETION = "ProperCompletion"
    DEADLOCK = "Deadlock"
    BOUND_EXCEEDED = "BoundExceeded"
    UNSAFE_MARKING = "UnsafeMarking"


@dataclass(frozen=True)
class SimConfig:
    max_states: int = 100_000
    bound: int = 1
    max_trace_steps: int = 10_000


@dataclass(frozen=True)
class Marking:
    tokens: frozenset[tuple[str, int]] = frozenset()
    active: frozenset[str] = frozenset()
    ended: frozenset[str] = frozenset()

    def count(self, position: str) -> int:
        return dict(self.tokens).get(position, 0)

    def positions(self) -> list[str]:
        return sorted(p for p, _ in self.tokens)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tokens": {p: n for p, n in sorted(self.tokens)},
            "active": sorted(self.active),
            "ended": sorted(self.ended),
        }


@dataclass(frozen=True)
class Event:
    """One firing. ``via`` names the chosen outgoing flow of an XOR split."""

    pool: str
    node: str
    kind: NodeKind
    via: str | None = None

    def __str__(self) -> str:
        text = f"{self.pool}/{self.node}"
        return f"{text} -> {self.via}" if self.via else text

    def to_dict(self) -> dict[str, Any]:
        out = {"pool": self.pool, "node": self.node, "kind": self.kind.value}
        if self.via is not None:
            out["via"] = self.via
        return out


@dataclass(frozen=True)
class Step:
    event: Event
    target: Marking
    overflow: tuple[str, ...] = ()


@dataclass(frozen=True)
class SimReport:
    outcome: Outcome
    states_explored: int
    reached_nodes: frozenset[str] = frozenset()
    witness: tuple[Event, ...] | None = None
    all_nodes: frozenset[str] = field(default=frozenset(), compare=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome.value,
            "states_explored": self.states_explored,
            "reached_nodes": sorted(self.reached_nodes),
            "unreached_nodes": sorted(self.all_nodes - self.reached_nodes),
            "witness": None if self.witness is None else [str(e) for e in self.witness],
        }

    def render(self) -> str:
        lines = [f"outcome: {self.outcome.value}", f"states explored: {self.states_explored}",
                 f"nodes reached: {len(self.reached_nodes)}/{len(self.all_nodes)}"]
        missing = sorted(self.all_nodes - self.reached_nodes)
        if missing:
            lines.append("unreached: " + ", ".join(missing))
        if self.witness is not None:
            lines.append("witness:")
            lines += [f"  {i}. {e}" for i, e in enumerate(self.witness, 1)]
        return "\n".join(lines)


@dataclass(frozen=True)
class _Transition:
    pool: str
    node: str
    kind: NodeKind
    consume: tuple[str, ...]
    produce: tuple[str, ...]
    via: str | None
    requires_inactive: bool
    ends_pool: bool


class TokenGame:
    """Enabled transitions and successor markings of one model.

    Transitions are enumerated once, in pool/node/flow declaration order, so
    every query answers in a deterministic order.
    """

    def __init__(self, model: ProcessModel, config: SimConfig | None = None):
        errors = [d for d in validate_structure(model) if d.severity is Severity.ERROR]
        if errors:
            raise SimulationError(f"model has {len(errors)} structural error(s); first: {errors[0].message}")
        declared = {p.name for p in model.pools}
        for m in model.message_flows:
            if m.source_pool not in declared or m.target_pool not in declared:
                raise SimulationError(f"message flow '{m.id}' joins an undeclared pool")
        self.model = model
        self.config = config or SimConfig()
        self.all_nodes = frozenset(f"{p.name}/{n.id}" for p in model.pools for n in p.nodes)
        self._transitions = list(self._build())

    def _build(self) -> Iterator[_Transition]:
        sent: dict[tuple[str, str], list[str]] = {}
        received: dict[tuple[str, str], list[str]] = {}
        for m in self.model.message_flows:
            sent.setdefault((m.source_pool, m.source), []).append(f"msg:{m.id}")
            received.setdefault((m.target_pool, m.target), []).append(f"msg:{m.id}")
        for p in self.model.pools:
            for n in p.nodes:
                incoming = [f"flow:{p.name}/{f.id}" for f in p.incoming(n.id)]
                outgoing = p.outgoing(n.id)
                messages_in = received.get((p.name, n.id), [])
                messages_out = tuple(sent.get((p.name, n.id), []))
                if n.kind is NodeKind.START_NONE:
                    token_choices = [(f"start:{p.name}/{n.id}",)]
                elif n.kind is NodeKind.START_MESSAGE:
                    token_choices = [()]
                elif n.kind is NodeKind.AND:
                    token_choices = [tuple(incoming)] if incoming else []
                else:
                    token_choices = [(pos,) for pos in incoming]
                message_choices = [(pos,) for pos in messages_in] if messages_in else [()]
                if n.kind in (NodeKind.START_MESSAGE, NodeKind.CATCH_MESSAGE) and not messages_in:
                    message_choices = []  # waits forever
                if n.kind is NodeKind.XOR:
                    out_choices = [((f"flow:{p.name}/{f.id}",), f.id) for f in outgoing]
                else:
                    out_choices = [(tuple(f"flow:{p.name}/{f.id}" for f in outgoing), None)]
                for tokens, message, (produce, via) in itertools.product(token_choices, message_choices, out_choices):
                    yield _Transition(
                        pool=p.name,
                        node=n.id,
                        kind=n.kind,
                        consume=tokens + message,
                        produce=produce + messages_out,
                        via=via,
                        requires_inactive=n.kind is NodeKind.START_MESSAGE,
                        ends_pool=n.kind is NodeKind.END,
                    )

    def initial(self) -> Marking:
        starts = [(p.name, n.id) for p in self.model.pools for n in p.nodes if n.kind is NodeKind.START_NONE]
        return Marking(
            tokens=frozenset((f"start:{pool}/{node}", 1) for pool, node in starts),
            active=frozenset(pool for pool, _ in starts),
        )

    def successors(self, marking: Marking) -> list[Step]:
        counts = dict(marking.tokens)
        out = []
        for t in self._transitions:
            if t.requires_inactive and t.pool in marking.active:
                continue
            if any(counts.get(pos, 0) < 1 for pos in t.consume):
                continue
            after = dict(counts)
            for pos in t.consume:
                after[pos] -= 1
            overflow = []
            for pos in t.produce:
                after[pos] = after.get(pos, 0) + 1
                if after[pos] > self.config.bound:
                    overflow.append(pos)
            target = Marking(
                tokens=frozenset((pos, n) for pos, n in after.items() if n > 0),
                active=marking.active | {t.pool},
                ended=marking.ended | {t.pool} if t.ends_pool else marking.ended,
            )
            out.append(Step(Event(t.pool, t.node, t.kind, t.via), target, tuple(overflow)))
        return out

    @staticmethod
    def is_proper_terminal(marking: Marking) -> bool:
        """No tokens or messages left, and every activated pool has ended."""
        return not marking.tokens and marking.active <= marking.ended


def _trace(parents: dict[Marking, tuple[Marking, Event] | None], marking: Marking) -> tuple[Event, ...]:
    events = []
    while parents[marking] is not None:
        marking, event = parents[marking]
        events.append(event)
    return tuple(reversed(events))


def explore(model: ProcessModel, config: SimConfig | None = None) -> SimReport:
    """Breadth-first exploration of every reachable marking.

    An unsafe marking stops the search at once. Otherwise the first improper
    terminal marking found (a shortest one, by BFS) becomes the deadlock
    witness, and the search still runs to completion so that
    ``states_explored`` always counts the whole graph.
    """
    game = TokenGame(model, config)
    start = game.initial()
    parents: dict[Marking, tuple[Marking, Event] | None] = {start: None}
    queue = deque([start])
    reached: set[str] = set()
    deadlock: tuple[Event, ...] | None = None
    while queue:
        marking = queue.popleft()
        steps = game.successors(marking)
        if not steps and deadlock is None and not game.is_proper_terminal(marking):
            deadlock = _trace(parents, marking)
        for step in steps:
            reached.add(f"{step.event.pool}/{step.event.node}")
            if step.overflow:
                witness = _trace(parents, marking) + (step.event,)
                return SimReport(Outcome.UNSAFE_MARKING, len(parents), frozenset(reached), witness, game.all_nodes)
            if step.target in parents:
                continue
            if len(parents) >= game.config.max_states:
                if deadlock is not None:
                    return SimReport(Outcome.DEADLOCK, len(parents), frozenset(reached), deadlock, game.all_nodes)
                return SimReport(Outcome.BOUND_EXCEEDED, len(parents), frozenset(reached), None, game.all_nodes)
            parents[step.target] = (marking, step.event)
            queue.append(step.target)
    if deadlock is not None:
        return SimReport(Outcome.DEADLOCK, len(parents), frozenset(reached), deadlock, game.all_nodes)
    return SimReport(Outcome.PROPER_COMPLETION, len(parents), frozenset(reached), None, game.all_nodes)


def random_trace(model: ProcessModel, seed: int, config: SimConfig | None = None) -> list[Event]:
    """One run, choosing uniformly among enabled transitions with ``random.Random(seed)``.

    Stops when nothing is enabled, when a firing would break the token bound
    (that firing is still reported), or after ``max_trace_steps`` events.
    """
    game = TokenGame(model, config)
    rng = random.Random(seed)
    marking = game.initial()
    events: list[Event] = []
    for _ in range(game.config.max_trace_steps):
        steps = game.successors(marking)
        if not steps:
            break
        step = rng.choice(steps)
        events.append(step.event)
        if step.overflow:
            break
        marking = step.target
    return events
