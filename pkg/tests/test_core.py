import networkx as nx
import pytest

from stabcolor.core import (
    EXHAUSTED,
    Envelope,
    Layer,
    TopologyError,
    bit_index,
    bit_length,
    build_topology,
    dif,
    from_edges,
    is_well_tagged,
    reply_bit,
)


def scan(ident, i):
    ones = [len(bin(ident)) - 2 - j for j, ch in enumerate(bin(ident)[2:]) if ch == "1"]
    return ones[i - 1] if i <= len(ones) else -1


def test_bit_index_of_ten():
    assert [bit_index(10, i) for i in (1, 2, 3)] == [4, 2, -1]


def test_bit_index_of_one():
    assert bit_index(1, 1) == 1
    assert bit_index(1, 2) == EXHAUSTED


def test_bit_index_of_twelve_second_bit():
    assert bit_index(12, 2) == 3


def test_bit_index_matches_scan():
    for ident in range(1, 1025):
        for i in range(1, bit_length(ident) + 2):
            assert bit_index(ident, i) == scan(ident, i)


@pytest.mark.parametrize("ident,i", [(0, 1), (-3, 1), (5, 0)])
def test_bit_index_rejects_bad_arguments(ident, i):
    with pytest.raises(ValueError):
        bit_index(ident, i)


def test_reply_bit_is_total():
    assert reply_bit(10, 0) == EXHAUSTED
    assert reply_bit(10, -5) == EXHAUSTED
    assert reply_bit(10, 99) == EXHAUSTED
    assert reply_bit(10, 1) == 4


@pytest.mark.parametrize("a,b,want", [(10, 12, 2), (8, 12, 2), (1, 2, 1), (2, 3, 2)])
def test_dif_examples(a, b, want):
    assert dif(a, b) == want
    assert dif(b, a) == want


def test_dif_rejects_equal_ids():
    with pytest.raises(ValueError):
        dif(7, 7)


def test_envelope_json_round_trip():
    for env in (Envelope.query(3), Envelope.reply(2, -1), Envelope.color(4), Envelope(99, Envelope.color(1).payload)):
        assert Envelope.from_json(env.to_json()) == env


def test_tag_discipline():
    assert is_well_tagged(Envelope.query(1))
    assert is_well_tagged(Envelope.color(1))
    assert not is_well_tagged(Envelope(Layer.COLOR, Envelope.query(1).payload))
    assert not is_well_tagged(Envelope(7, Envelope.color(1).payload))


def test_path_of_two():
    topo = from_edges(2, [(0, 1)], [1, 2])
    assert topo.neighbors == ((1,), (0,))
    assert topo.port(0, 1) == 0 and topo.back_port[0][0] == 0
    assert topo.max_degree == 1


def test_complete_four():
    topo = build_topology("complete", 4, seed=1)
    assert len(topo.edges) == 6
    assert topo.max_degree == 3


def test_gnp_is_connected_with_valid_ids():
    topo = build_topology("gnp", 20, seed=7, p=0.3)
    g = nx.Graph(topo.edges)
    assert g.number_of_nodes() == 20 and nx.is_connected(g)
    assert len(set(topo.ids)) == 20
    assert max(topo.ids) <= 20**3


@pytest.mark.parametrize("kind", ["path", "ring", "star", "complete", "gnp"])
def test_back_ports_are_consistent(kind):
    topo = build_topology(kind, 9, seed=3, p=0.4)
    for v in range(topo.n):
        for p, u in enumerate(topo.neighbors[v]):
            q = topo.back_port[v][p]
            assert topo.neighbors[u][q] == v


def test_ports_are_shuffled_somewhere():
    topo = build_topology("complete", 8, seed=0)
    assert any(list(nb) != sorted(nb) for nb in topo.neighbors)


def test_topology_is_deterministic_per_seed():
    assert build_topology("gnp", 15, seed=4) == build_topology("gnp", 15, seed=4)


@pytest.mark.parametrize(
    "n,edges,ids",
    [
        (3, [(0, 1)], [1, 2, 3]),  # disconnected
        (2, [(0, 1)], [4, 4]),  # duplicate ids
        (2, [(0, 0)], [1, 2]),  # self-loop
        (2, [(0, 1)], [1, 9]),  # id beyond n^c
    ],
)
def test_invalid_topologies_rejected(n, edges, ids):
    with pytest.raises(TopologyError):
        from_edges(n, edges, ids)


def test_id_policies():
    for policy in ("sequential", "random-distinct", "adversarial-permutation"):
        topo = build_topology("ring", 10, seed=2, id_policy=policy)
        assert len(set(topo.ids)) == 10
    assert sorted(build_topology("ring", 10, id_policy="sequential").ids) == list(range(1, 11))
    with pytest.raises(TopologyError):
        build_topology("ring", 10, id_policy="nope")
    with pytest.raises(TopologyError):
        build_topology("torus", 10)
