"""Seeded bugs that the checks must catch."""

import pytest

from stabcolor import coloring, dag
from stabcolor.coloring import ColorState
from stabcolor.core import build_topology
from stabcolor.simnet import Schedule, run_trial


def narrow_palette(cache, degree):
    taken = set(cache)
    for c in range(1, degree + 1):
        if c not in taken:
            return c
    raise AssertionError("no free color in [1, degree]")


def test_narrow_palette_is_empty_on_a_clique(monkeypatch):
    monkeypatch.setattr(coloring, "smallest_free", narrow_palette)
    with pytest.raises(AssertionError):
        coloring.conflict(ColorState(1, (1, 2, 3)), (1, 1, 1), 3, 0)


def test_narrow_palette_breaks_clique_runs(monkeypatch):
    monkeypatch.setattr(coloring, "smallest_free", narrow_palette)
    failed = 0
    for seed in range(10):
        topo = build_topology("complete", 5, seed)
        try:
            rep = run_trial(topo, 2, schedule=Schedule("random", seed=seed), seed=seed, closure_rounds=5,
                            max_steps=50_000)
        except AssertionError:
            failed += 1
            continue
        if not (rep.passed and rep.coloring_oracle_final):
            failed += 1
    assert failed > 0


def accept_any_level(state, ident, ell, b, port, degree):
    if port in state.wait:
        mine = dag.bit_index(ident, state.cnt)
        bit = 1 if b > mine else 0 if b < mine else None
        if bit is not None:
            state = dag.DagState(state.cnt, state.wait - {port}, state.tmp[:port] + (bit,) + state.tmp[port + 1:],
                                 state.ord[:port] + (bit,) + state.ord[port + 1:])
        else:
            state = dag.DagState(state.cnt, state.wait - {port}, state.tmp, state.ord)
    return dag.dag_step(state, ident, degree)


def test_accepting_stale_replies_is_caught(monkeypatch):
    monkeypatch.setattr(dag, "on_reply", accept_any_level)
    failed = 0
    for seed in range(10):
        topo = build_topology("gnp", 8, seed, p=0.4)
        rep = run_trial(topo, 4, "wild", Schedule("random", seed=seed), seed=seed, closure_rounds=10,
                        max_steps=50_000)
        if not rep.passed or rep.dag_oracle_at_gdag is False:
            failed += 1
            break
    assert failed > 0
