from stabcolor.coloring import ColorState
from stabcolor.composer import NodeRuntime, coalesce, decodable, node_step
from stabcolor.core import ColorMsg, Envelope, Layer, Query
from stabcolor.dag import clean_state


def runtime(layer=Layer.DAG, ident=10, degree=2, c=1, cache=(2, 3)):
    return NodeRuntime(ident, degree, clean_state(degree, (1, 0)), ColorState(c, cache), layer, field_bits=8)


def test_dag_step_handles_query_and_alternates():
    rt = runtime(Layer.DAG)
    res = node_step(rt, {0: Envelope.query(1)}, [], merge=False)
    assert res.layer == Layer.DAG
    assert res.runtime.next_layer == Layer.COLOR
    assert res.outbox[0] == (0, Envelope.reply(1, 4))
    assert res.dispatched == 1 and not res.timed_out


def test_color_timeout_fires_on_empty_channel():
    rt = runtime(Layer.COLOR)
    res = node_step(rt, {}, [1])
    assert res.timed_out
    assert res.outbox == [(1, Envelope.color(1))]
    assert res.runtime.next_layer == Layer.DAG


def test_consecutive_steps_alternate_layers():
    rt = runtime(Layer.DAG)
    layers = []
    for _ in range(6):
        res = node_step(rt, {}, [0, 1])
        layers.append(res.layer)
        rt = res.runtime
    assert all(a != b for a, b in zip(layers, layers[1:]))


def test_layers_are_isolated():
    rt = runtime(Layer.COLOR)
    res = node_step(rt, {0: Envelope.color(1)}, [])
    assert res.runtime.dag == rt.dag
    rt = runtime(Layer.DAG)
    res = node_step(rt, {0: Envelope.query(2)}, [])
    assert res.runtime.color == rt.color


def test_outbox_carries_only_the_active_layer():
    for layer in (Layer.DAG, Layer.COLOR):
        res = node_step(runtime(layer), {}, [0, 1])
        assert all(env.layer == layer for _, env in res.outbox)


def test_malformed_and_foreign_envelopes_are_dropped():
    rt = runtime(Layer.DAG)
    inputs = {
        0: Envelope(Layer.DAG, ColorMsg(1)),  # tag and payload disagree
        1: Envelope.color(2),  # other layer
    }
    res = node_step(rt, inputs, [])
    assert res.dropped == 2 and res.dispatched == 0
    assert res.runtime.dag == rt.dag


def test_decodable_ranges():
    assert decodable(Envelope.query(8), 8)
    assert not decodable(Envelope.query(9), 8)
    assert not decodable(Envelope.query(0), 8)
    assert decodable(Envelope.reply(3, -1), 8)
    assert not decodable(Envelope.reply(3, -2), 8)
    assert decodable(Envelope.color(10**9), 8)
    assert not decodable(Envelope(5, Query(1)), 8)


def test_bundles_are_dispatched_in_order():
    rt = runtime(Layer.DAG)
    bundle = (Envelope.query(1), Envelope.query(2))
    res = node_step(rt, {0: bundle}, [], merge=False)
    replies = [env for p, env in res.outbox if env.payload.__class__.__name__ == "Reply"]
    assert [r.payload.ell for r in replies] == [1, 2]
    assert res.dispatched == 2


def test_coalesce_keeps_replies_and_last_query():
    out = [
        (0, Envelope.reply(1, 4)),
        (0, Envelope.query(1)),
        (1, Envelope.query(1)),
        (0, Envelope.reply(2, 2)),
        (0, Envelope.query(2)),
    ]
    assert coalesce(out) == [
        (0, Envelope.reply(1, 4)),
        (0, Envelope.reply(2, 2)),
        (0, Envelope.query(2)),
        (1, Envelope.query(1)),
    ]


def test_coalesce_keeps_last_color():
    out = [(0, Envelope.color(1)), (1, Envelope.color(1)), (0, Envelope.color(3))]
    assert coalesce(out) == [(0, Envelope.color(3)), (1, Envelope.color(1))]


def test_merged_step_sends_at_most_one_query_per_port():
    rt = runtime(Layer.DAG)
    res = node_step(rt, {0: Envelope.query(1), 1: Envelope.query(1)}, [])
    for p in (0, 1):
        queries = [e for q, e in res.outbox if q == p and isinstance(e.payload, Query)]
        assert len(queries) <= 1
