"""Potential functions, legitimacy predicates and brute-force oracles.

The functions at module level evaluate a configuration from scratch and are
read-only.  :class:`PotentialTracker` maintains the same totals incrementally
for the simulator; tests cross-check the two on live runs.

A configuration is anything exposing ``topology``, ``nodes`` (one
:class:`~stabcolor.composer.NodeRuntime` per node) and ``queue(v, u)``
(envelopes in transit from ``v`` to ``u``, head first).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from .core import ColorMsg, Layer, Reply, dif, reply_bit

GAMMA_B = "gb"
GAMMA_DAG = "gdag"
GAMMA_ALPHA = "galpha"
PREDICATES = (GAMMA_B, GAMMA_DAG, GAMMA_ALPHA)


def lambda_m(env, sender_id: int) -> int:
    """1 for a DAG Reply whose B is not the sender's true bit at that level."""
    p = env.payload
    if env.layer == Layer.DAG and isinstance(p, Reply):
        return int(p.b != reply_bit(sender_id, p.ell))
    return 0


def lambda_node(config, v: int) -> int:
    ids = config.topology.ids
    return sum(lambda_m(env, ids[u]) for u in config.topology.neighbors[v] for env in config.queue(u, v))


def lambda_total(config) -> int:
    return sum(lambda_node(config, v) for v in range(config.topology.n))


def good_predicate(config, v: int, u: int, *, strict: bool = True) -> bool:
    """Whether v's comparison state towards neighbor u is on track.

    Either v has not passed the deciding level and still holds no verdict, or
    it is at/after that level with the correct verdict and no pending query.

    With ``strict`` (the default) a pending verdict at exactly the deciding
    level additionally requires the port to still be awaited: a state with
    ``cnt == dif``, ``tmp`` undecided and the port absent from ``wait`` steps
    to ``cnt == dif + 1`` with ``tmp`` still undecided, so the loose form is
    not closed.  ``strict=False`` evaluates the loose form.
    """
    topo = config.topology
    id_v, id_u = topo.ids[v], topo.ids[u]
    st = config.nodes[v].dag
    p = topo.port(v, u)
    d = dif(id_u, id_v)
    tmp = st.tmp[p]
    if tmp is None:
        if st.cnt < d:
            return True
        if st.cnt == d:
            return (p in st.wait) or not strict
        return False
    want = 1 if id_u > id_v else 0
    return st.cnt >= d and tmp == want and p not in st.wait


def phi_p(config, u: int, v: int, *, strict: bool = True) -> int:
    """0 when v's ord towards u is correct and Good(v, u) holds, else 1."""
    topo = config.topology
    want = 1 if topo.ids[u] > topo.ids[v] else 0
    ok = config.nodes[v].dag.ord[topo.port(v, u)] == want and good_predicate(config, v, u, strict=strict)
    return 0 if ok else 1


def phi_node(config, v: int, *, strict: bool = True) -> int:
    return sum(phi_p(config, u, v, strict=strict) for u in config.topology.neighbors[v])


def phi_total(config, *, strict: bool = True) -> int:
    return sum(phi_node(config, v, strict=strict) for v in range(config.topology.n))


def alpha_parts(config, v: int) -> tuple[int, int, int]:
    topo = config.topology
    nodes = config.nodes
    cv = nodes[v].color.c
    a1 = a2 = a3 = 0
    for p, u in enumerate(topo.neighbors[v]):
        cu = nodes[u].color.c
        a1 += cu == cv
        a2 += nodes[v].color.cache[p] != cu
        for env in config.queue(u, v):
            if env.layer == Layer.COLOR and isinstance(env.payload, ColorMsg):
                a3 += env.payload.c != cu
    return a1, a2, a3


def color_potentials(config) -> tuple[int, int, int, int]:
    """(alpha1, alpha2, alpha3, A) summed over all nodes."""
    a1 = a2 = a3 = 0
    for v in range(config.topology.n):
        x, y, z = alpha_parts(config, v)
        a1 += x
        a2 += y
        a3 += z
    return a1, a2, a3, a1 + a2 + a3


@dataclass(frozen=True)
class PotentialReadout:
    lambda_total: int
    phi_total: int
    a_total: int
    lam: tuple
    phi: tuple
    alpha1: tuple
    alpha2: tuple
    alpha3: tuple

    @property
    def in_gb(self) -> bool:
        return self.lambda_total == 0

    @property
    def in_gdag(self) -> bool:
        return self.lambda_total == 0 and self.phi_total == 0

    @property
    def in_galpha(self) -> bool:
        return self.a_total == 0


def readout(config, *, strict: bool = True) -> PotentialReadout:
    n = config.topology.n
    lam = tuple(lambda_node(config, v) for v in range(n))
    phi = tuple(phi_node(config, v, strict=strict) for v in range(n))
    parts = [alpha_parts(config, v) for v in range(n)]
    a1 = tuple(x for x, _, _ in parts)
    a2 = tuple(y for _, y, _ in parts)
    a3 = tuple(z for _, _, z in parts)
    return PotentialReadout(sum(lam), sum(phi), sum(a1) + sum(a2) + sum(a3), lam, phi, a1, a2, a3)


def in_predicate(config, predicate: str, *, strict: bool = True) -> bool:
    if predicate == GAMMA_B:
        return lambda_total(config) == 0
    if predicate == GAMMA_DAG:
        # Gamma_DAG is a subset of Gamma_B: evaluate Lambda first.
        return lambda_total(config) == 0 and phi_total(config, strict=strict) == 0
    if predicate == GAMMA_ALPHA:
        return color_potentials(config)[3] == 0
    raise ValueError(f"unknown predicate {predicate!r}")


def dag_oracle(config) -> bool:
    """Direct check of the orientation against identifier order, plus acyclicity."""
    topo = config.topology
    ts = TopologicalSorter()
    for v in range(topo.n):
        ts.add(v)
        for p, u in enumerate(topo.neighbors[v]):
            bit = config.nodes[v].dag.ord[p]
            if bit != (1 if topo.ids[u] > topo.ids[v] else 0):
                return False
            if bit == 1:
                ts.add(u, v)  # edge v -> u
    try:
        tuple(ts.static_order())
    except CycleError:
        return False
    return True


def coloring_oracle(config) -> bool:
    topo = config.topology
    colors = [rt.color.c for rt in config.nodes]
    for v in range(topo.n):
        if not 1 <= colors[v] <= topo.degree(v) + 1:
            return False
        if any(colors[u] == colors[v] for u in topo.neighbors[v]):
            return False
    return True


def closure_watch(trace, predicate: str | None = None) -> list[int]:
    """Indices after the first hit at which the predicate fails again.

    ``trace`` is a sequence of booleans, or of :class:`PotentialReadout`
    when ``predicate`` names which legitimacy set to read.
    """
    if predicate is not None:
        attr = {GAMMA_B: "in_gb", GAMMA_DAG: "in_gdag", GAMMA_ALPHA: "in_galpha"}[predicate]
        flags = [getattr(r, attr) for r in trace]
    else:
        flags = [bool(x) for x in trace]
    try:
        first = flags.index(True)
    except ValueError:
        return []
    return [i for i in range(first + 1, len(flags)) if not flags[i]]


class PotentialTracker:
    """Incremental Lambda, Phi and A over a live network.

    The simulator reports every enqueue, every dequeue and every node whose
    state changed.  Per-envelope Lambda contributions never change (sender
    identifiers are constant); per-channel alpha3 is kept as a color Counter
    so a sender's recolor is an O(1) recount per outgoing channel.
    """

    def __init__(self, config, *, strict: bool = True):
        self.config = config
        self.strict = strict
        topo = config.topology
        self.topo = topo
        n = topo.n
        self._difs = [
            [dif(topo.ids[u], topo.ids[v]) for u in topo.neighbors[v]] for v in range(n)
        ]
        self._want = [[1 if topo.ids[u] > topo.ids[v] else 0 for u in topo.neighbors[v]] for v in range(n)]
        self.lam = 0
        self._colors_in: dict = {}
        self._color_count: dict = {}
        self._a3_chan: dict = {}
        self.a3 = 0
        for v, u in topo.directed_channels():
            cnt = Counter()
            total = 0
            for env in config.queue(v, u):
                self.lam += lambda_m(env, topo.ids[v])
                if env.layer == Layer.COLOR and isinstance(env.payload, ColorMsg):
                    cnt[env.payload.c] += 1
                    total += 1
            self._colors_in[(v, u)] = cnt
            self._color_count[(v, u)] = total
            self._a3_chan[(v, u)] = 0
        self.phi = [0] * n
        self.a12 = [0] * n
        self.color_changes = 0
        self._last_color = [rt.color.c for rt in config.nodes]
        for v in range(n):
            self.phi[v] = self._phi_node(v)
            self.a12[v] = self._a12_node(v)
            self._refresh_a3_out(v)

    # -- per-node recomputation

    def _phi_node(self, v: int) -> int:
        st = self.config.nodes[v].dag
        cnt, wait, tmp, ordv = st.cnt, st.wait, st.tmp, st.ord
        bad = 0
        for p, d in enumerate(self._difs[v]):
            want = self._want[v][p]
            t = tmp[p]
            if ordv[p] != want:
                bad += 1
            elif t is None:
                if cnt > d or (cnt == d and self.strict and p not in wait):
                    bad += 1
            elif not (cnt >= d and t == want and p not in wait):
                bad += 1
        return bad

    def _a12_node(self, v: int) -> int:
        nodes = self.config.nodes
        col = nodes[v].color
        total = 0
        for p, u in enumerate(self.topo.neighbors[v]):
            cu = nodes[u].color.c
            total += (cu == col.c) + (col.cache[p] != cu)
        return total

    def _refresh_a3_out(self, v: int) -> None:
        cv = self.config.nodes[v].color.c
        for u in self.topo.neighbors[v]:
            key = (v, u)
            new = self._color_count[key] - self._colors_in[key][cv]
            self.a3 += new - self._a3_chan[key]
            self._a3_chan[key] = new

    # -- events

    def enqueue(self, v: int, u: int, env) -> None:
        self.lam += lambda_m(env, self.topo.ids[v])
        if env.layer == Layer.COLOR and isinstance(env.payload, ColorMsg):
            key = (v, u)
            self._colors_in[key][env.payload.c] += 1
            self._color_count[key] += 1
            if env.payload.c != self.config.nodes[v].color.c:
                self._a3_chan[key] += 1
                self.a3 += 1

    def dequeue(self, v: int, u: int, env) -> None:
        self.lam -= lambda_m(env, self.topo.ids[v])
        if env.layer == Layer.COLOR and isinstance(env.payload, ColorMsg):
            key = (v, u)
            self._colors_in[key][env.payload.c] -= 1
            self._color_count[key] -= 1
            if env.payload.c != self.config.nodes[v].color.c:
                self._a3_chan[key] -= 1
                self.a3 -= 1

    def node_changed(self, v: int) -> None:
        """Call after node ``v``'s runtime was replaced, before its sends are enqueued."""
        self.phi[v] = self._phi_node(v)
        c = self.config.nodes[v].color.c
        if c != self._last_color[v]:
            self._last_color[v] = c
            self.color_changes += 1
            for u in self.topo.neighbors[v]:
                self.a12[u] = self._a12_node(u)
            self._refresh_a3_out(v)
        self.a12[v] = self._a12_node(v)

    # -- totals

    @property
    def phi_total(self) -> int:
        return sum(self.phi)

    @property
    def a_total(self) -> int:
        return sum(self.a12) + self.a3

    def flags(self) -> tuple[bool, bool, bool]:
        gb = self.lam == 0
        return gb, gb and self.phi_total == 0, self.a_total == 0
