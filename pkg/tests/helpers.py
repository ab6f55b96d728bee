"""Hand-built configurations for unit tests."""

from stabcolor.coloring import ColorState
from stabcolor.composer import NodeRuntime
from stabcolor.core import from_edges
from stabcolor.dag import clean_state
from stabcolor.simnet import Configuration


def correct_ord(topo, v):
    return [1 if topo.ids[u] > topo.ids[v] else 0 for u in topo.neighbors[v]]


def make_config(topo, *, dags=None, colors=None, caches=None, queues=None):
    """Clean nodes with correct ord unless overridden; ``queues`` maps (v, u) to envelopes."""
    nodes = []
    for v in range(topo.n):
        deg = topo.degree(v)
        d = dags[v] if dags else clean_state(deg, correct_ord(topo, v))
        c = colors[v] if colors else 1
        cache = caches[v] if caches else (None,) * deg
        nodes.append(NodeRuntime(topo.ids[v], deg, d, ColorState(c, tuple(cache)), field_bits=topo.id_bits))
    queues = queues or {}
    lanes = tuple(
        (key, (tuple((env,) for env in queues.get(key, ())),)) for key in sorted(topo.directed_channels())
    )
    return Configuration(topo, tuple(nodes), lanes)


def path(ids, id_exponent=4):
    return from_edges(len(ids), [(i, i + 1) for i in range(len(ids) - 1)], list(ids), id_exponent=id_exponent)
