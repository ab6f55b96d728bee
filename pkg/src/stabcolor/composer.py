"""Fair composition of the DAG and coloring layers into one node runtime.

Successive steps of a node alternate between the two layers.  The coloring
layer reads the live ``ord`` vector of the DAG layer and never writes it.

Within a step the active layer first handles what was received, one
envelope at a time in port order, then runs its Do-forever body when at
least one of its input channels was empty at the start of the step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

from . import coloring, dag
from .core import EXHAUSTED, ColorMsg, Envelope, Layer, Query, Reply, is_well_tagged


@dataclass(frozen=True, slots=True)
class NodeRuntime:
    ident: int
    degree: int
    dag: dag.DagState
    color: coloring.ColorState
    next_layer: Layer = Layer.DAG
    field_bits: int = 64
    """Width of the level/position fields on the wire; larger values are undecodable."""

    def to_json(self) -> dict:
        return {
            "id": self.ident,
            "dag": self.dag.to_json(),
            "color": self.color.to_json(),
            "next": int(self.next_layer),
        }


class StepResult(NamedTuple):
    runtime: NodeRuntime
    outbox: list  # list[tuple[int, Envelope]], all tagged with ``layer``
    layer: Layer
    timed_out: bool
    dispatched: int
    dropped: int


def decodable(env: Envelope, field_bits: int) -> bool:
    """Whether an envelope is a well-formed message of the protocol vocabulary.

    Layer tag and payload type must agree, and DAG fields must fit the level
    and position ranges of the identifier space.  Color values are accepted
    whatever they are; the coloring layer copes with any cached value.
    """
    if not is_well_tagged(env):
        return False
    p = env.payload
    if isinstance(p, Query):
        return 1 <= p.ell <= field_bits
    if isinstance(p, Reply):
        return 1 <= p.ell <= field_bits and EXHAUSTED <= p.b <= field_bits
    return isinstance(p, ColorMsg)


def _received(inputs):
    """(port, envelope) pairs in port order; a port may deliver a bundle."""
    for port in sorted(inputs):
        item = inputs[port]
        if isinstance(item, Envelope):
            yield port, item
        else:
            for env in item:
                yield port, env


def _run_dag(rt: NodeRuntime, inputs, empty_ports):
    state, ident, deg = rt.dag, rt.ident, rt.degree
    out, dispatched, dropped = [], 0, 0
    for port, env in _received(inputs):
        if not decodable(env, rt.field_bits) or env.layer != Layer.DAG:
            dropped += 1
            continue
        dispatched += 1
        p = env.payload
        if isinstance(p, Query):
            state, sends = dag.on_query(state, ident, p.ell, port, deg)
        else:
            state, sends = dag.on_reply(state, ident, p.ell, p.b, port, deg)
        out.extend(sends)
    timed_out = False
    if empty_ports:
        state, sends = dag.on_dag_timeout(state, ident, deg, empty_ports)
        out.extend(sends)
        timed_out = True
    return replace(rt, dag=state), out, timed_out, dispatched, dropped


def _run_color(rt: NodeRuntime, inputs, empty_ports):
    state, ordv, deg = rt.color, rt.dag.ord, rt.degree
    out, dispatched, dropped = [], 0, 0
    for port, env in _received(inputs):
        if not decodable(env, rt.field_bits) or env.layer != Layer.COLOR:
            dropped += 1
            continue
        dispatched += 1
        state, sends = coloring.on_color(state, ordv, deg, env.payload.c, port)
        out.extend(sends)
    timed_out = False
    if empty_ports:
        state, sends = coloring.on_color_timeout(state, ordv, deg, empty_ports)
        out.extend(sends)
        timed_out = True
    return replace(rt, color=state), out, timed_out, dispatched, dropped


def coalesce(outbox: list) -> list:
    """Merge one step's sends so each port gets at most one transmission.

    Per port, every Reply is kept in order and only the last Query or Color
    survives (earlier ones carry state the step has already moved past).
    The result is grouped by port, in order of each port's first send.
    """
    per_port: dict = {}
    for port, env in outbox:
        slot = per_port.setdefault(port, [[], None])
        if isinstance(env.payload, Reply):
            slot[0].append(env)
        else:
            slot[1] = env
    merged = []
    for port, (replies, last) in per_port.items():
        merged.extend((port, e) for e in replies)
        if last is not None:
            merged.append((port, last))
    return merged


def node_step(rt: NodeRuntime, inputs: dict, empty_ports, *, merge: bool = True) -> StepResult:
    """One step of the layer whose turn it is.

    ``inputs`` maps port -> what was consumed from that port for the active
    layer (one envelope, or one bundle of envelopes); ``empty_ports`` are
    the active layer's empty input channels.  Envelopes that do not decode
    are counted and dropped.  With ``merge`` the outbox is passed through
    :func:`coalesce`.
    """
    layer = rt.next_layer
    run = _run_dag if layer == Layer.DAG else _run_color
    new, out, timed_out, dispatched, dropped = run(rt, inputs, empty_ports)
    if merge:
        out = coalesce(out)
    nxt = Layer.COLOR if layer == Layer.DAG else Layer.DAG
    return StepResult(replace(new, next_layer=nxt), out, layer, timed_out, dispatched, dropped)
