"""Simulated asynchronous network with FIFO links and corrupted initial state.

One directed link per ordered neighbor pair.  In ``shared`` channel mode a
link is a single FIFO of layer-tagged envelopes and a node only consumes a
head that belongs to the layer whose turn it is.  In ``split`` mode each link
carries one FIFO lane per layer.

A step (a *batch*) is a list of ``(node, ports)``: each listed node consumes
the head of every listed input port, runs one composed step, and all sends
of the batch are enqueued afterwards in batch order.  Sequential schedulers
produce batches of one node; the synchronous scheduler steps every node.

The unit carried by a link is a *transmission*: a tuple of envelopes.  With
the default ``merged`` transport a node sends at most one transmission per
outgoing link per step, holding the step's coalesced sends to that port
(typically a Reply followed by a Query).  The ``literal`` transport sends
every envelope as its own transmission, exactly as the handlers emit them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from collections import deque
from dataclasses import asdict, dataclass, field

from . import coloring, dag
from .composer import NodeRuntime, node_step
from .core import EXHAUSTED, ColorMsg, Envelope, Layer, Query, Reply, Topology, is_well_tagged, reply_bit
from .monitors import PotentialTracker, readout

log = logging.getLogger(__name__)

SHARED = "shared"
SPLIT = "split"
CHANNEL_MODES = (SHARED, SPLIT)
ADVERSARY_MODES = ("domain", "wild")
STOP_CONDITIONS = ("gb", "gdag", "galpha", "steps")
MERGED = "merged"
LITERAL = "literal"
TRANSPORTS = (MERGED, LITERAL)
_STOP_RANK = {"gb": 0, "gdag": 1, "galpha": 2}

MACHINE_MIN = -(2**63)
MACHINE_MAX = 2**63 - 1


# --------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class Configuration:
    """Immutable snapshot of every node runtime and every link's contents."""

    topology: Topology
    nodes: tuple
    lanes: tuple  # ((v, u), (lane0, ...)) per directed link, sorted; a lane is a tuple of transmissions
    mode: str = SHARED
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", dict(self.lanes))

    def queue(self, v: int, u: int):
        """Envelopes in transit from ``v`` to ``u``, head first."""
        for lane in self._index[(v, u)]:
            for tx in lane:
                yield from tx

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "nodes": [rt.to_json() for rt in self.nodes],
            "links": [
                [list(k), [[[e.to_json() for e in tx] for tx in lane] for lane in lanes]] for k, lanes in self.lanes
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class Network:
    """Mutable live configuration used by the simulator.

    Lane entries are ``(uid, transmission)``; uids identify transmissions
    for round accounting and never reach protocol code.
    """

    def __init__(self, topology: Topology, nodes: list, mode: str = SHARED):
        if mode not in CHANNEL_MODES:
            raise ValueError(f"unknown channel mode {mode!r}")
        self.topology = topology
        self.nodes = list(nodes)
        self.mode = mode
        nl = 1 if mode == SHARED else 2
        self.links = {key: [deque() for _ in range(nl)] for key in topology.directed_channels()}
        self.in_links = [[self.links[(u, v)] for u in topology.neighbors[v]] for v in range(topology.n)]
        # Per link, transmissions tagged DAG / COLOR (malformed ones in neither).
        self.layer_count = {key: [0, 0] for key in self.links}
        self.in_counts = [[self.layer_count[(u, v)] for u in topology.neighbors[v]] for v in range(topology.n)]
        self._next_uid = 0
        self.max_occupancy = {key: 0 for key in self.links}

    def lane_for(self, env: Envelope, rng: random.Random | None = None) -> int:
        if self.mode == SHARED:
            return 0
        if env.layer in (Layer.DAG, Layer.COLOR):
            return int(env.layer)
        return rng.randrange(2) if rng is not None else 0

    def push(self, v: int, u: int, tx: tuple, lane: int | None = None) -> int:
        uid = self._next_uid
        self._next_uid += 1
        lanes = self.links[(v, u)]
        lanes[self.lane_for(tx[0]) if lane is None else lane].append((uid, tx))
        if is_well_tagged(tx[0]):
            self.layer_count[(v, u)][int(tx[0].layer)] += 1
        occ = sum(len(q) for q in lanes)
        if occ > self.max_occupancy[(v, u)]:
            self.max_occupancy[(v, u)] = occ
        return uid

    def queue(self, v: int, u: int):
        for lane in self.links[(v, u)]:
            for _, tx in lane:
                yield from tx

    def pop(self, v: int, p: int, lane: int):
        """Dequeue the head of ``v``'s input port ``p``; returns ``(uid, tx)``."""
        uid, tx = self.in_links[v][p][lane].popleft()
        if is_well_tagged(tx[0]):
            self.in_counts[v][p][int(tx[0].layer)] -= 1
        return uid, tx

    def empty_ports(self, v: int, layer: Layer) -> list[int]:
        """Input ports of ``v`` holding nothing of ``layer``.

        Each layer sees its own logical channel: in shared mode envelopes of
        the other layer do not make a channel non-empty.
        """
        li = int(layer)
        return [p for p, counts in enumerate(self.in_counts[v]) if counts[li] == 0]

    def in_transit(self) -> set:
        return {uid for lanes in self.links.values() for lane in lanes for uid, _ in lane}

    def all_inputs_empty(self, v: int) -> bool:
        return all(not lane for lanes in self.in_links[v] for lane in lanes)

    def snapshot(self) -> Configuration:
        lanes = tuple(
            (key, tuple(tuple(tx for _, tx in lane) for lane in self.links[key])) for key in sorted(self.links)
        )
        return Configuration(self.topology, tuple(self.nodes), lanes, self.mode)

    @classmethod
    def from_configuration(cls, config: Configuration) -> "Network":
        net = cls(config.topology, list(config.nodes), config.mode)
        for key, lanes in config.lanes:
            for i, lane in enumerate(lanes):
                for tx in lane:
                    net.push(key[0], key[1], tuple(tx), lane=i)
        return net

    def digest(self) -> str:
        return self.snapshot().digest()


# --------------------------------------------------------------------------
# Adversary


def _garbage(rng: random.Random, mode: str, bits: int, max_degree: int) -> Envelope:
    kind = rng.randrange(3)
    if mode == "domain":
        if kind == 0:
            return Envelope.query(rng.randint(1, bits))
        if kind == 1:
            return Envelope.reply(rng.randint(1, bits), rng.randint(EXHAUSTED, bits))
        return Envelope.color(rng.randint(1, max_degree + 1))

    def wild_int() -> int:
        if rng.random() < 0.5:
            return rng.randint(-3, bits + 3)
        return rng.randint(MACHINE_MIN, MACHINE_MAX)

    r = rng.random()
    if r < 0.4:
        layer = int(Layer.DAG)
    elif r < 0.8:
        layer = int(Layer.COLOR)
    else:
        layer = rng.randint(MACHINE_MIN, MACHINE_MAX)
    payload = (Query(wild_int()), Reply(wild_int(), wild_int()), ColorMsg(wild_int()))[kind]
    return Envelope(layer, payload)


def seed_adversary(
    topology: Topology, k: int, mode: str = "domain", seed=0, channel_mode: str = SHARED
) -> Configuration:
    """Corrupt every node state and fill every link with 0..k garbage envelopes."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if mode not in ADVERSARY_MODES:
        raise ValueError(f"unknown adversary mode {mode!r}")
    rng = random.Random(f"adversary:{seed}")
    bits = topology.id_bits
    big_d = topology.max_degree
    nodes = []
    for v in range(topology.n):
        deg = topology.degree(v)
        ident = topology.ids[v]
        nodes.append(
            NodeRuntime(
                ident=ident,
                degree=deg,
                dag=dag.dag_init(ident, deg, rng=rng),
                color=coloring.color_init(deg, big_d, rng=rng),
                next_layer=Layer(rng.randrange(2)),
                field_bits=bits,
            )
        )
    net = Network(topology, nodes, channel_mode)
    for v, u in topology.directed_channels():
        for _ in range(rng.randint(0, k)):
            env = _garbage(rng, mode, bits, big_d)
            net.push(v, u, (env,), lane=net.lane_for(env, rng))
    return net.snapshot()


def clean_configuration(topology: Topology, channel_mode: str = SHARED, colors=None) -> Configuration:
    """Freshly restarted nodes, correct orientation, empty links."""
    nodes = []
    for v in range(topology.n):
        deg = topology.degree(v)
        ordv = [1 if topology.ids[u] > topology.ids[v] else 0 for u in topology.neighbors[v]]
        c = colors[v] if colors is not None else 1
        nodes.append(
            NodeRuntime(
                topology.ids[v], deg, dag.clean_state(deg, ordv), coloring.ColorState(c, (None,) * deg),
                field_bits=topology.id_bits,
            )
        )
    return Network(topology, nodes, channel_mode).snapshot()


# --------------------------------------------------------------------------
# Schedules


@dataclass(frozen=True)
class Schedule:
    """``sync``, ``random`` (random fair with head-age bound ``fairness``) or ``scripted``."""

    policy: str = "random"
    seed: int = 0
    fairness: int | None = None
    script: tuple = ()
    deliver_p: float = 1.0

    def __post_init__(self):
        if self.policy not in ("sync", "random", "scripted"):
            raise ValueError(f"unknown schedule policy {self.policy!r}")
        if self.fairness is not None and self.fairness < 2:
            raise ValueError("fairness bound must be at least 2")
        if not 0.0 < self.deliver_p <= 1.0:
            raise ValueError("deliver_p must be in (0, 1]")


def _consumable(tx: tuple, layer: Layer, mode: str) -> bool:
    if mode == SPLIT:
        return True
    head = tx[0]
    return head.layer == layer or not is_well_tagged(head)


class Scheduler:
    """Chooses the next batch.  Randomness is private to the scheduler.

    Fairness bookkeeping: an envelope's head age is the number of steps its
    receiver took while the envelope sat at the head of its lane, counting
    the delivering step.  The random policy forces delivery early enough
    that no head age exceeds ``fairness``.
    """

    def __init__(self, net: Network, schedule: Schedule):
        self.net = net
        self.schedule = schedule
        self.rng = random.Random(f"schedule:{schedule.seed}")
        topo = net.topology
        self.fairness = schedule.fairness if schedule.fairness is not None else max(2, 4 * topo.max_degree)
        self.head_wait: dict[int, int] = {}
        self.max_head_age = 0
        self.idle = [0] * topo.n
        self.node_bound = 4 * topo.n
        self._script = list(schedule.script)
        self._cursor = 0

    def _lane_index(self, layer: Layer) -> int:
        return 0 if self.net.mode == SHARED else int(layer)

    def _ready_ports(self, v: int, take_all: bool) -> list[int]:
        net = self.net
        layer = net.nodes[v].next_layer
        li = self._lane_index(layer)
        ports = []
        for p, lanes in enumerate(net.in_links[v]):
            lane = lanes[li]
            if not lane:
                continue
            uid, tx = lane[0]
            if not _consumable(tx, layer, net.mode):
                continue
            if take_all or self.head_wait.get(uid, 0) >= self.fairness - 2 or self.rng.random() < self.schedule.deliver_p:
                ports.append(p)
        return ports

    def account(self, batch) -> None:
        """Age every head seen by the acting nodes; call before the batch runs."""
        net = self.net
        for v, ports in batch:
            li = self._lane_index(net.nodes[v].next_layer)
            taken = set(ports)
            for p, lanes in enumerate(net.in_links[v]):
                for i, lane in enumerate(lanes):
                    if not lane:
                        continue
                    uid = lane[0][0]
                    if i == li and p in taken:
                        age = self.head_wait.pop(uid, 0) + 1
                        if age > self.max_head_age:
                            self.max_head_age = age
                    else:
                        self.head_wait[uid] = self.head_wait.get(uid, 0) + 1

    def next_batch(self):
        net = self.net
        pol = self.schedule.policy
        if pol == "sync":
            return [(v, self._ready_ports(v, True)) for v in range(net.topology.n)]
        if pol == "random":
            n = net.topology.n
            starving = [v for v in range(n) if self.idle[v] >= self.node_bound]
            v = starving[0] if starving else self.rng.randrange(n)
            for w in range(n):
                self.idle[w] += 1
            self.idle[v] = 0
            return [(v, self._ready_ports(v, False))]
        if self._cursor >= len(self._script):
            return None
        batch = [(int(v), list(ports)) for v, ports in self._script[self._cursor]]
        self._cursor += 1
        return batch


# --------------------------------------------------------------------------
# Rounds


class RoundTracker:
    """Splits an execution into rounds.

    A round that starts at configuration ``i`` ends at the first later
    configuration by which (i) every envelope in transit at ``i`` has been
    consumed and (ii) every node whose input links were all empty at ``i``
    has taken a step that fired a timeout or consumed an envelope.
    """

    def __init__(self):
        self.boundaries = [0]
        self.pending_msgs: set = set()
        self.pending_nodes: set = set()

    def begin(self, in_transit: set, idle_nodes) -> None:
        self.pending_msgs = set(in_transit)
        self.pending_nodes = set(idle_nodes)

    def observe(self, index: int, consumed_uids, served_nodes) -> bool:
        """Feed step ``index`` (producing configuration ``index``); True on a boundary."""
        self.pending_msgs.difference_update(consumed_uids)
        self.pending_nodes.difference_update(served_nodes)
        if not self.pending_msgs and not self.pending_nodes:
            self.boundaries.append(index)
            return True
        return False

    @property
    def completed(self) -> int:
        return len(self.boundaries) - 1

    def round_of(self, index: int) -> int:
        """Number of rounds needed to reach configuration ``index``."""
        if index <= 0:
            return 0
        for r, b in enumerate(self.boundaries):
            if b >= index:
                return r
        return len(self.boundaries)


@dataclass(frozen=True)
class StepRecord:
    index: int
    acting: tuple  # ((node, layer, ports, timed_out), ...)
    consumed: tuple  # ((from, to, uid, transmission), ...)
    emitted: tuple  # ((from, to, uid, transmission), ...)
    potentials: tuple  # (Lambda, Phi, A)

    def to_json(self) -> dict:
        return {
            "step": self.index,
            "acting": [[v, int(layer), list(ports), bool(t)] for v, layer, ports, t in self.acting],
            "consumed": [[a, b, uid, [e.to_json() for e in tx]] for a, b, uid, tx in self.consumed],
            "emitted": [[a, b, uid, [e.to_json() for e in tx]] for a, b, uid, tx in self.emitted],
            "lambda": self.potentials[0],
            "phi": self.potentials[1],
            "A": self.potentials[2],
        }


@dataclass
class Trace:
    initial: Configuration
    initial_uids: dict  # (v, u) -> [uid, ...] in FIFO order
    records: list = field(default_factory=list)

    def script(self) -> tuple:
        """The batches of this trace, replayable with ``Schedule("scripted", script=...)``."""
        return tuple(tuple((v, tuple(ports)) for v, _, ports, _ in r.acting) for r in self.records)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n")


def round_boundaries(trace: Trace) -> tuple[list[int], bool]:
    """Round boundaries (configuration indices) computed post hoc from a trace.

    Returns ``(boundaries, partial)`` where ``partial`` flags an unterminated
    last round.
    """
    topo = trace.initial.topology
    occupancy = {key: len(uids) for key, uids in trace.initial_uids.items()}
    transit = {uid for uids in trace.initial_uids.values() for uid in uids}

    def idle_nodes():
        return {v for v in range(topo.n) if all(occupancy[(u, v)] == 0 for u in topo.neighbors[v])}

    tracker = RoundTracker()
    tracker.begin(transit, idle_nodes())
    for rec in trace.records:
        consumed = []
        for a, b, uid, _ in rec.consumed:
            occupancy[(a, b)] -= 1
            transit.discard(uid)
            consumed.append(uid)
        for a, b, uid, _ in rec.emitted:
            occupancy[(a, b)] += 1
            transit.add(uid)
        served = {v for v, _, ports, t in rec.acting if t or ports}
        if tracker.observe(rec.index, consumed, served):
            tracker.begin(transit, idle_nodes())
    last = trace.records[-1].index if trace.records else 0
    return tracker.boundaries, tracker.boundaries[-1] != last


# --------------------------------------------------------------------------
# Execution


def _transmissions(outbox, merged: bool):
    """Group an outbox into ``(port, transmission)`` pairs."""
    if not merged:
        return [(p, (env,)) for p, env in outbox]
    grouped: dict = {}
    for p, env in outbox:
        grouped.setdefault(p, []).append(env)
    return [(p, tuple(envs)) for p, envs in grouped.items()]


class Simulation:
    """Drives one execution from an initial configuration."""

    def __init__(
        self,
        config: Configuration,
        schedule: Schedule,
        *,
        record: bool = False,
        strict: bool = True,
        transport: str = MERGED,
    ):
        if transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {transport!r}")
        self.transport = transport
        self.net = Network.from_configuration(config)
        self.topology = config.topology
        self.scheduler = Scheduler(self.net, schedule)
        self.tracker = PotentialTracker(self.net, strict=strict)
        self.rounds = RoundTracker()
        self.rounds.begin(self.net.in_transit(), self._idle_nodes())
        self.index = 0
        n = self.topology.n
        self.layer_steps = [[0, 0] for _ in range(n)]
        self.delivered = [0, 0]
        self.dropped = 0
        self.emission_violations: list = []
        self.forged_emissions = 0
        # [min, max] of emitted Query/Reply levels, Reply positions, colors
        self.emitted_range = {"level": [None, None], "position": [None, None], "color": [None, None]}
        self._bits = self.topology.id_bits
        self._max_color = self.topology.max_degree + 1
        self.trace = None
        if record:
            uids = {key: [uid for lane in lanes for uid, _ in lane] for key, lanes in self.net.links.items()}
            self.trace = Trace(config, uids)

    def _idle_nodes(self):
        return {v for v in range(self.topology.n) if self.net.all_inputs_empty(v)}

    def _widen(self, key: str, x: int) -> None:
        lo_hi = self.emitted_range[key]
        if lo_hi[0] is None or x < lo_hi[0]:
            lo_hi[0] = x
        if lo_hi[1] is None or x > lo_hi[1]:
            lo_hi[1] = x

    def _check_emission(self, v: int, u: int, env: Envelope) -> None:
        p = env.payload
        bits = self._bits
        ok = True
        if isinstance(p, Query):
            ok = 1 <= p.ell <= bits
            self._widen("level", p.ell)
        elif isinstance(p, Reply):
            ok = 1 <= p.ell <= bits and EXHAUSTED <= p.b <= bits
            self._widen("level", p.ell)
            self._widen("position", p.b)
            if p.b != reply_bit(self.topology.ids[v], p.ell):
                self.forged_emissions += 1
                ok = False
        elif isinstance(p, ColorMsg):
            ok = 1 <= p.c <= self._max_color
            self._widen("color", p.c)
        if not ok and len(self.emission_violations) < 20:
            self.emission_violations.append((self.index, v, u, env.to_json()))

    def step(self) -> bool:
        """Execute one batch.  False when a scripted schedule is exhausted."""
        batch = self.scheduler.next_batch()
        if batch is None:
            return False
        self.scheduler.account(batch)
        net = self.net
        topo = self.topology
        nodes = net.nodes
        tracker = self.tracker
        merged = self.transport == MERGED
        self.index += 1
        consumed = []
        acting = []
        results = []
        for v, ports in batch:
            rt = nodes[v]
            layer = rt.next_layer
            li = 0 if net.mode == SHARED else int(layer)
            in_links = net.in_links[v]
            empty = net.empty_ports(v, layer)
            inputs = {}
            for p in ports:
                uid, tx = net.pop(v, p, li)
                u = topo.neighbors[v][p]
                for env in tx:
                    tracker.dequeue(u, v, env)
                inputs[p] = tx
                consumed.append((u, v, uid, tx))
            res = node_step(rt, inputs, empty, merge=merged)
            results.append((v, res))
            acting.append((v, layer, tuple(ports), res.timed_out))
            self.layer_steps[v][int(layer)] += 1
            self.delivered[int(layer)] += res.dispatched
            self.dropped += res.dropped
        for v, res in results:
            nodes[v] = res.runtime
            tracker.node_changed(v)
        emitted = []
        for v, res in results:
            nb = topo.neighbors[v]
            for p, tx in _transmissions(res.outbox, merged):
                u = nb[p]
                for env in tx:
                    self._check_emission(v, u, env)
                    tracker.enqueue(v, u, env)
                uid = net.push(v, u, tx)
                emitted.append((v, u, uid, tx))
        served = [v for v, res in results if res.timed_out or res.dispatched or res.dropped]
        if self.rounds.observe(self.index, [c[2] for c in consumed], served):
            self.rounds.begin(net.in_transit(), self._idle_nodes())
        if self.trace is not None:
            pots = (tracker.lam, tracker.phi_total, tracker.a_total)
            self.trace.records.append(StepRecord(self.index, tuple(acting), tuple(consumed), tuple(emitted), pots))
        return True

    def snapshot(self) -> Configuration:
        return self.net.snapshot()


def deliver_step(config: Configuration, schedule: Schedule) -> Configuration:
    """One atomic step from ``config``; functional wrapper around :class:`Simulation`."""
    sim = Simulation(config, schedule)
    sim.step()
    return sim.snapshot()


# --------------------------------------------------------------------------
# Trials


@dataclass(frozen=True)
class TrialReport:
    seed: int
    rounds_to_gb: int | None
    rounds_to_gdag: int | None
    rounds_to_galpha: int | None
    steps_to_gb: int | None
    steps_to_gdag: int | None
    steps_to_galpha: int | None
    steps: int
    rounds: int
    delivered_dag: int
    delivered_color: int
    dropped: int
    max_occupancy: int
    initial_max_occupancy: int
    max_head_age: int
    fairness_bound: int
    closure_violations: tuple  # ((predicate, step), ...)
    emission_violations: tuple
    emitted_range: tuple  # ((kind, min, max), ...) over level, position, color
    layer_step_gap: int
    dag_oracle_at_gdag: bool | None
    coloring_oracle_at_galpha: bool | None
    coloring_oracle_final: bool
    reached: bool
    final_digest: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["closure_violations"] = [list(x) for x in self.closure_violations]
        d["emission_violations"] = [list(x) for x in self.emission_violations]
        d["emitted_range"] = [list(x) for x in self.emitted_range]
        return d

    @property
    def passed(self) -> bool:
        return self.reached and not self.closure_violations


def run_trial(
    topology: Topology,
    k: int,
    mode: str = "domain",
    schedule: Schedule | None = None,
    stop: str = "galpha",
    max_steps: int = 1_000_000,
    *,
    seed: int = 0,
    channel_mode: str = SHARED,
    closure_rounds: int | None = None,
    record: bool = False,
    strict: bool = True,
    initial: Configuration | None = None,
    transport: str = MERGED,
):
    """Run one execution from a corrupted configuration and measure it.

    Stops ``closure_rounds`` rounds (default ``10 * n``) after the stop
    predicate and every weaker one have been hit, or after ``max_steps``.
    With ``stop="steps"`` runs exactly ``max_steps`` steps.  Returns the
    report, or ``(report, simulation)`` when ``record`` is set.
    """
    from .monitors import coloring_oracle, dag_oracle

    if stop not in STOP_CONDITIONS:
        raise ValueError(f"unknown stop condition {stop!r}")
    schedule = schedule or Schedule("random", seed=seed)
    config = initial or seed_adversary(topology, k, mode, seed, channel_mode)
    sim = Simulation(config, schedule, record=record, strict=strict, transport=transport)
    n = topology.n
    closure_rounds = 10 * n if closure_rounds is None else closure_rounds
    initial_occ = max((sum(len(q) for q in lanes) for lanes in sim.net.links.values()), default=0)

    hit_step = [None, None, None]
    hit_round = [None, None, None]
    violations = []
    dag_ok = col_ok = None
    seen_colors = [-1, True]
    target = _STOP_RANK.get(stop)

    def check(idx: int) -> None:
        nonlocal dag_ok, col_ok
        flags = sim.tracker.flags()
        for i, f in enumerate(flags):
            if f and hit_step[i] is None:
                hit_step[i] = idx
                hit_round[i] = sim.rounds.completed + (0 if idx == sim.rounds.boundaries[-1] else 1)
                if idx == 0:
                    hit_round[i] = 0
                if i == 1:
                    dag_ok = dag_oracle(sim.net)
                if i == 2:
                    col_ok = coloring_oracle(sim.net)
            elif not f and hit_step[i] is not None:
                violations.append((("gb", "gdag", "galpha")[i], idx))
        if hit_step[2] is not None and flags[2] and len(violations) < 1000:
            # The oracle only reads colors: re-evaluate when one changed.
            if sim.tracker.color_changes != seen_colors[0]:
                seen_colors[0] = sim.tracker.color_changes
                seen_colors[1] = coloring_oracle(sim.net)
            if not seen_colors[1]:
                violations.append(("coloring", idx))

    check(0)
    done_round = None
    while sim.index < max_steps:
        if not sim.step():
            break
        check(sim.index)
        if target is not None:
            if done_round is None and all(h is not None for h in hit_step[: target + 1]):
                # Count whole rounds after the one in which the last predicate was hit.
                done_round = max(hit_round[: target + 1])
            if done_round is not None and sim.rounds.completed - done_round >= closure_rounds:
                break

    reached = target is None or all(h is not None for h in hit_step[: target + 1])
    gaps = [abs(a - b) for a, b in sim.layer_steps]
    report = TrialReport(
        seed=seed,
        rounds_to_gb=hit_round[0],
        rounds_to_gdag=hit_round[1],
        rounds_to_galpha=hit_round[2],
        steps_to_gb=hit_step[0],
        steps_to_gdag=hit_step[1],
        steps_to_galpha=hit_step[2],
        steps=sim.index,
        rounds=sim.rounds.completed,
        delivered_dag=sim.delivered[0],
        delivered_color=sim.delivered[1],
        dropped=sim.dropped,
        max_occupancy=max(sim.net.max_occupancy.values(), default=0),
        initial_max_occupancy=initial_occ,
        max_head_age=sim.scheduler.max_head_age,
        fairness_bound=sim.scheduler.fairness,
        closure_violations=tuple(violations),
        emission_violations=tuple(sim.emission_violations),
        emitted_range=tuple((k, lo, hi) for k, (lo, hi) in sim.emitted_range.items()),
        layer_step_gap=max(gaps, default=0),
        dag_oracle_at_gdag=dag_ok,
        coloring_oracle_at_galpha=col_ok,
        coloring_oracle_final=coloring_oracle(sim.net),
        reached=reached,
        final_digest=sim.net.digest(),
    )
    if record:
        return report, sim
    return report
