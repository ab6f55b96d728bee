import random

from helpers import correct_ord, make_config, path

from stabcolor.core import Envelope, build_topology
from stabcolor.dag import DagState, clean_state, dag_step
from stabcolor.monitors import (
    closure_watch,
    color_potentials,
    coloring_oracle,
    dag_oracle,
    good_predicate,
    in_predicate,
    lambda_m,
    lambda_total,
    phi_total,
    readout,
)
from stabcolor.simnet import Schedule, Simulation, seed_adversary


def test_lambda_m_examples():
    assert lambda_m(Envelope.reply(2, 5), 10) == 1
    assert lambda_m(Envelope.reply(1, 4), 10) == 0
    assert lambda_m(Envelope.query(3), 10) == 0
    assert lambda_m(Envelope.color(3), 10) == 0


def test_lambda_total_empty_and_forged():
    topo = path([1, 2, 3])
    assert lambda_total(make_config(topo)) == 0
    forged = {key: [Envelope.reply(1, 7)] for key in topo.directed_channels()}
    assert lambda_total(make_config(topo, queues=forged)) == 4


def test_lambda_stays_zero_from_clean_channels():
    topo = build_topology("ring", 8, seed=2)
    sim = Simulation(seed_adversary(topo, 0, seed=2), Schedule("random", seed=2))
    for _ in range(3000):
        sim.step()
        assert sim.tracker.lam == 0


def test_good_fresh_restart_holds():
    topo = path([5, 6])
    cfg = make_config(topo)
    assert good_predicate(cfg, 0, 1) and good_predicate(cfg, 1, 0)


def test_good_committed_verdict_holds():
    topo = path([10, 12])  # dif = 2, id_u > id_v seen from node 0
    cfg = make_config(topo, dags=[DagState(3, frozenset(), (1,), (1,)), clean_state(1, (0,))])
    assert good_predicate(cfg, 0, 1)


def test_good_fails_past_deciding_level_without_verdict():
    topo = path([10, 12])
    cfg = make_config(topo, dags=[DagState(3, frozenset(), (None,), (1,)), clean_state(1, (0,))])
    assert not good_predicate(cfg, 0, 1)


def test_strict_and_loose_good_differ_at_the_deciding_level():
    topo = path([1, 2])  # dif = 1
    st = DagState(1, frozenset(), (None,), (1,))
    cfg = make_config(topo, dags=[st, clean_state(1, (0,))])
    assert good_predicate(cfg, 0, 1, strict=False)
    assert not good_predicate(cfg, 0, 1, strict=True)


def test_loose_good_is_not_closed():
    # Node 1 (id 2) sits at the deciding level with no verdict and no
    # pending query.  The loose form accepts it; its next Step moves cnt
    # past dif with tmp still undecided.
    topo = path([1, 2])
    st = DagState(1, frozenset(), (None,), (0,))
    cfg = make_config(topo, dags=[clean_state(1, (1,)), st])
    assert phi_total(cfg, strict=False) == 0
    assert phi_total(cfg, strict=True) == 1
    nxt, _ = dag_step(st, 2, 1)
    assert nxt.cnt == 2 and nxt.tmp == (None,)
    cfg2 = make_config(topo, dags=[clean_state(1, (1,)), nxt])
    assert phi_total(cfg2, strict=False) == 1


def test_phi_examples():
    topo = build_topology("gnp", 10, seed=1, p=0.4)
    cfg = make_config(topo)
    assert phi_total(cfg) == 0
    flipped = clean_state(topo.degree(0), [1 - b for b in correct_ord(topo, 0)][:1] + correct_ord(topo, 0)[1:])
    cfg = make_config(topo, dags=[flipped] + [clean_state(topo.degree(v), correct_ord(topo, v)) for v in range(1, 10)])
    assert phi_total(cfg) >= 1
    assert not dag_oracle(cfg)


def test_color_potential_examples():
    topo = path([1, 2, 3])
    proper = make_config(
        topo,
        colors=[1, 2, 1],
        caches=[(2,), (1, 1), (2,)],
        queues={(0, 1): [Envelope.color(1)], (1, 2): [Envelope.color(2)]},
    )
    assert color_potentials(proper) == (0, 0, 0, 0)
    same = make_config(topo, colors=[1, 1, 2], caches=[(1,), (1, 2), (1,)])
    assert color_potentials(same)[0] >= 2
    stale = make_config(topo, colors=[1, 2, 1], caches=[(2,), (1, 1), (2,)], queues={(0, 1): [Envelope.color(3)]})
    assert color_potentials(stale) == (0, 0, 1, 1)


def test_dag_oracle_examples():
    topo = path([1, 2])
    assert dag_oracle(make_config(topo))
    assert not dag_oracle(make_config(topo, dags=[clean_state(1, (0,)), clean_state(1, (0,))]))


def test_coloring_oracle_examples():
    topo = path([1, 2, 3])
    assert coloring_oracle(make_config(topo, colors=[1, 2, 1]))
    assert not coloring_oracle(make_config(topo, colors=[1, 1, 2]))
    assert not coloring_oracle(make_config(topo, colors=[3, 1, 2]))  # end node allows [1, 2]


def test_closure_watch():
    assert closure_watch([False, True, True, True]) == []
    assert closure_watch([False, True, True, False, True]) == [3]
    assert closure_watch([False, False]) == []


def test_clean_start_is_in_gamma_b_from_step_zero():
    topo = build_topology("star", 6, seed=0)
    sim = Simulation(seed_adversary(topo, 0, seed=0), Schedule("sync"), record=True)
    flags = [in_predicate(sim.snapshot(), "gb")]
    for _ in range(50):
        sim.step()
        flags.append(in_predicate(sim.snapshot(), "gb"))
    assert flags[0] and closure_watch(flags) == []


def test_monitors_are_read_only():
    topo = build_topology("gnp", 8, seed=3, p=0.4)
    cfg = seed_adversary(topo, 4, "wild", seed=3)
    before = cfg.digest()
    readout(cfg)
    dag_oracle(cfg)
    coloring_oracle(cfg)
    for pred in ("gb", "gdag", "galpha"):
        in_predicate(cfg, pred)
    assert cfg.digest() == before


def test_tracker_matches_full_recomputation():
    rng = random.Random(0)
    for trial in range(6):
        kind = rng.choice(["ring", "gnp", "star", "complete"])
        topo = build_topology(kind, 7, seed=trial, p=0.4)
        mode = "wild" if trial % 2 else "domain"
        sim = Simulation(seed_adversary(topo, 3, mode, seed=trial), Schedule(rng.choice(["sync", "random"]), seed=trial))
        for i in range(400):
            sim.step()
            if i % 20 == 0:
                full = readout(sim.net)
                assert sim.tracker.lam == full.lambda_total
                assert sim.tracker.phi_total == full.phi_total
                assert sim.tracker.a_total == full.a_total


def test_gamma_dag_implies_gamma_b():
    topo = build_topology("ring", 6, seed=1)
    sim = Simulation(seed_adversary(topo, 3, seed=1), Schedule("random", seed=1))
    for _ in range(2000):
        sim.step()
        r = readout(sim.net)
        assert not r.in_gdag or r.in_gb
