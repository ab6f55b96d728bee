"""Identifiers, bit-serial access, message vocabulary and topologies.

Everything here is a pure function or an immutable value.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Union

import networkx as nx

EXHAUSTED = -1
"""Sentinel returned by :func:`bit_index` once an identifier has no more one-bits."""

DEFAULT_ID_EXPONENT = 3


def bit_length(ident: int) -> int:
    """Number of binary digits of ``ident`` (the counter ceiling of the DAG layer)."""
    return int(ident).bit_length()


def bit_index(ident: int, i: int) -> int:
    """Right-based position of the ``i``-th one-bit of ``ident``, counted from the left.

    Positions start at 1 for the least significant bit.  Returns ``EXHAUSTED``
    (-1) when ``ident`` has fewer than ``i`` one-bits.

    >>> [bit_index(10, i) for i in (1, 2, 3)]
    [4, 2, -1]
    """
    if ident < 1:
        raise ValueError(f"identifier must be positive, got {ident}")
    if i < 1:
        raise ValueError(f"bit index must be >= 1, got {i}")
    pos = ident.bit_length()
    seen = 0
    while pos > 0:
        if (ident >> (pos - 1)) & 1:
            seen += 1
            if seen == i:
                return pos
        pos -= 1
    return EXHAUSTED


def reply_bit(ident: int, ell: int) -> int:
    """The B value a correct node answers to a query for level ``ell``.

    Same as :func:`bit_index` but total: non-positive levels are answered
    with the exhausted sentinel.
    """
    if ell < 1:
        return EXHAUSTED
    return bit_index(ident, ell)


def dif(id_v: int, id_u: int) -> int:
    """First level at which the bit-serial sequences of two identifiers differ."""
    if id_v == id_u:
        raise ValueError(f"dif is undefined for equal identifiers ({id_v})")
    ell = 1
    while True:
        if bit_index(id_v, ell) != bit_index(id_u, ell):
            return ell
        ell += 1


# --------------------------------------------------------------------------
# Message vocabulary


class Layer(enum.IntEnum):
    DAG = 0
    COLOR = 1


@dataclass(frozen=True, slots=True)
class Query:
    ell: int


@dataclass(frozen=True, slots=True)
class Reply:
    ell: int
    b: int


@dataclass(frozen=True, slots=True)
class ColorMsg:
    c: int


Payload = Union[Query, Reply, ColorMsg]


@dataclass(frozen=True, slots=True)
class Envelope:
    """A layer-tagged message.

    ``layer`` is a plain int so that injected garbage can carry a tag that is
    neither DAG nor COLOR; see :func:`is_well_tagged`.
    """

    layer: int
    payload: Payload

    @classmethod
    def query(cls, ell: int) -> "Envelope":
        return cls(Layer.DAG, Query(ell))

    @classmethod
    def reply(cls, ell: int, b: int) -> "Envelope":
        return cls(Layer.DAG, Reply(ell, b))

    @classmethod
    def color(cls, c: int) -> "Envelope":
        return cls(Layer.COLOR, ColorMsg(c))

    def to_json(self) -> list:
        p = self.payload
        if isinstance(p, Query):
            return [int(self.layer), "q", p.ell]
        if isinstance(p, Reply):
            return [int(self.layer), "r", p.ell, p.b]
        return [int(self.layer), "c", p.c]

    @classmethod
    def from_json(cls, rec: list) -> "Envelope":
        layer, kind, *fields = rec
        payload = {"q": Query, "r": Reply, "c": ColorMsg}[kind](*fields)
        return cls(layer, payload)


def is_well_tagged(env: Envelope) -> bool:
    """True when the layer tag is known and matches the payload type."""
    if env.layer == Layer.DAG:
        return isinstance(env.payload, (Query, Reply))
    if env.layer == Layer.COLOR:
        return isinstance(env.payload, ColorMsg)
    return False


# --------------------------------------------------------------------------
# Topologies

TOPOLOGY_KINDS = ("path", "ring", "star", "complete", "gnp")
ID_POLICIES = ("sequential", "random-distinct", "adversarial-permutation")


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """A connected simple graph with identifiers and per-node port numbering.

    ``neighbors[v][p]`` is the node reached through port ``p`` of ``v``;
    ``back_port[v][p]`` is the port that neighbor uses for the same edge.
    """

    ids: tuple[int, ...]
    neighbors: tuple[tuple[int, ...], ...]
    back_port: tuple[tuple[int, ...], ...]
    id_exponent: int = DEFAULT_ID_EXPONENT
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.neighbors), default=0)

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    def port(self, v: int, u: int) -> int:
        """pt(v, u)."""
        return self.neighbors[v].index(u)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(v, u), max(v, u)) for v, nb in enumerate(self.neighbors) for u in nb})

    @property
    def id_bits(self) -> int:
        """Bit width of the identifier space [1, n^c].

        Bounds every bit position and every level a correct node can emit.
        """
        return bit_length(max(self.n, 2) ** self.id_exponent)

    def directed_channels(self) -> list[tuple[int, int]]:
        return [(v, u) for v, nb in enumerate(self.neighbors) for u in nb]


def _graph_for(kind: str, n: int, p: float, rng: random.Random, retries: int) -> nx.Graph:
    if kind == "path":
        return nx.path_graph(n)
    if kind == "ring":
        if n < 3:
            raise TopologyError("ring needs at least 3 nodes")
        return nx.cycle_graph(n)
    if kind == "star":
        return nx.star_graph(n - 1)
    if kind == "complete":
        return nx.complete_graph(n)
    if kind == "gnp":
        for _ in range(retries):
            g = nx.gnp_random_graph(n, p, seed=rng.randrange(2**32))
            if n == 1 or nx.is_connected(g):
                return g
        raise TopologyError(f"gnp({n}, {p}) not connected after {retries} attempts")
    raise TopologyError(f"unknown topology kind {kind!r}")


def assign_ids(n: int, policy: str, rng: random.Random, exponent: int = DEFAULT_ID_EXPONENT) -> list[int]:
    hi = max(n, 2) ** exponent
    if policy == "sequential":
        return list(range(1, n + 1))
    if policy == "random-distinct":
        return rng.sample(range(1, hi + 1), n)
    if policy == "adversarial-permutation":
        # Dense one-bit patterns near the top of the id space share long
        # prefixes, which pushes dif() deep and keeps comparisons running.
        pool = sorted(range(1, hi + 1), key=lambda x: (-bin(x).count("1"), -x))[:n]
        rng.shuffle(pool)
        return pool
    raise TopologyError(f"unknown id policy {policy!r}")


def build_topology(
    kind: str,
    n: int,
    seed: int = 0,
    *,
    p: float = 0.3,
    id_policy: str = "random-distinct",
    id_exponent: int = DEFAULT_ID_EXPONENT,
    retries: int = 200,
) -> Topology:
    if n < 2:
        raise TopologyError("need at least 2 nodes")
    rng = random.Random(f"topology:{seed}")
    g = _graph_for(kind, n, p, rng, retries)
    ids = assign_ids(n, id_policy, rng, id_exponent)
    return from_edges(n, g.edges(), ids, rng, id_exponent=id_exponent, name=f"{kind}({n})")


def from_edges(
    n: int,
    edges,
    ids: list[int],
    rng: random.Random | None = None,
    *,
    id_exponent: int = DEFAULT_ID_EXPONENT,
    name: str = "custom",
) -> Topology:
    """Build a Topology from an edge list; ports are shuffled when ``rng`` is given."""
    if len(ids) != n or len(set(ids)) != n or min(ids) < 1:
        raise TopologyError("identifiers must be n distinct positive integers")
    if max(ids) > max(n, 2) ** id_exponent:
        raise TopologyError(f"identifier {max(ids)} exceeds n^{id_exponent}")
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        if a == b or b in adj[a]:
            raise TopologyError(f"graph must be simple, bad edge ({a}, {b})")
        adj[a].append(b)
        adj[b].append(a)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    if not nx.is_connected(g):
        raise TopologyError("graph is not connected")
    neighbors = []
    for v in range(n):
        nb = sorted(adj[v])
        if rng is not None:
            rng.shuffle(nb)
        neighbors.append(tuple(nb))
    back = tuple(tuple(neighbors[u].index(v) for u in neighbors[v]) for v in range(n))
    return Topology(tuple(ids), tuple(neighbors), back, id_exponent, name)
