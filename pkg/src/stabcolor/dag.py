"""Self-stabilizing spanning-DAG orientation by bit-serial identifier comparison.

Each node compares its identifier with every neighbor one one-bit position at
a time.  ``ord[p] == 1`` means the neighbor behind port ``p`` has the greater
identifier.  Handlers are pure: ``(state, event) -> (state, outbox)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import EXHAUSTED, Envelope, bit_index, bit_length, reply_bit

BOTTOM = None

Outbox = list  # list[tuple[int, Envelope]]


@dataclass(frozen=True, slots=True)
class DagState:
    cnt: int
    wait: frozenset
    tmp: tuple  # per port: 0, 1 or BOTTOM
    ord: tuple  # per port: 0 or 1

    def to_json(self) -> dict:
        return {"cnt": self.cnt, "wait": sorted(self.wait), "tmp": list(self.tmp), "ord": list(self.ord)}


def clean_state(degree: int, ord_bits=None) -> DagState:
    """The state Restart leaves behind, with ``ord`` all zero unless given."""
    ord_bits = tuple(ord_bits) if ord_bits is not None else (0,) * degree
    return DagState(1, frozenset(range(degree)), (BOTTOM,) * degree, ord_bits)


def dag_init(ident: int, degree: int, seed=None, rng: random.Random | None = None) -> DagState:
    """An arbitrary state drawn from the variable domains."""
    if rng is None:
        rng = random.Random(f"dag:{seed}")
    ports = range(degree)
    return DagState(
        cnt=rng.randint(1, bit_length(ident)),
        wait=frozenset(p for p in ports if rng.random() < 0.5),
        tmp=tuple(rng.choice((0, 1, BOTTOM)) for _ in ports),
        ord=tuple(rng.randint(0, 1) for _ in ports),
    )


def check_domain(state: DagState, ident: int, degree: int) -> None:
    if not 1 <= state.cnt <= bit_length(ident):
        raise ValueError(f"cnt {state.cnt} outside [1, {bit_length(ident)}]")
    if not state.wait <= frozenset(range(degree)):
        raise ValueError(f"wait {set(state.wait)} not a subset of ports")
    if len(state.tmp) != degree or len(state.ord) != degree:
        raise ValueError("tmp/ord must have one entry per port")
    if any(t not in (0, 1, BOTTOM) for t in state.tmp) or any(o not in (0, 1) for o in state.ord):
        raise ValueError("tmp must be in {0, 1, None} and ord in {0, 1}")


def restart(state: DagState, degree: int) -> DagState:
    return DagState(1, frozenset(range(degree)), (BOTTOM,) * degree, state.ord)


def dag_step(state: DagState, ident: int, degree: int) -> tuple[DagState, Outbox]:
    """Advance the comparison when every awaited answer is in, then (re)query."""
    if not state.wait:
        if state.cnt < bit_length(ident):
            tmp = state.tmp
            wait = frozenset(p for p in range(degree) if tmp[p] is BOTTOM)
            state = DagState(state.cnt + 1, wait, tmp, state.ord)
        else:
            state = restart(state, degree)
    query = Envelope.query(state.cnt)
    return state, [(p, query) for p in sorted(state.wait)]


def on_query(state: DagState, ident: int, ell: int, port: int, degree: int) -> tuple[DagState, Outbox]:
    out = [(port, Envelope.reply(ell, reply_bit(ident, ell)))]
    state, sends = dag_step(state, ident, degree)
    out.extend(sends)
    return state, out


def on_reply(state: DagState, ident: int, ell: int, b: int, port: int, degree: int) -> tuple[DagState, Outbox]:
    if port in state.wait and ell == state.cnt:
        mine = bit_index(ident, state.cnt)
        tmp = state.tmp
        ordv = state.ord
        # EXHAUSTED (-1) sorts below every position, so one three-way
        # comparison covers the "B = empty" branch as well.
        if b > mine:
            tmp = tmp[:port] + (1,) + tmp[port + 1:]
            ordv = ordv[:port] + (1,) + ordv[port + 1:]
        elif b < mine or b == EXHAUSTED:
            tmp = tmp[:port] + (0,) + tmp[port + 1:]
            ordv = ordv[:port] + (0,) + ordv[port + 1:]
        state = DagState(state.cnt, state.wait - {port}, tmp, ordv)
    return dag_step(state, ident, degree)


def on_dag_timeout(state: DagState, ident: int, degree: int, empty_ports) -> tuple[DagState, Outbox]:
    if not empty_ports:
        raise ValueError("timeout requires at least one empty input port")
    return dag_step(state, ident, degree)
