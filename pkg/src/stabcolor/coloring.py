"""Self-stabilizing (Delta+1)-coloring on top of the DAG orientation.

A node only recolors when every cached neighbor color is known and each
neighbor it clashes with has a greater identifier (``ord[w] == 1``), so the
lower-identifier endpoint of a conflict keeps its color.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Envelope

BOTTOM = None


@dataclass(frozen=True, slots=True)
class ColorState:
    c: int
    cache: tuple  # per port: last color heard, or BOTTOM

    def to_json(self) -> dict:
        return {"c": self.c, "cache": list(self.cache)}


def color_init(degree: int, max_degree: int, seed=None, rng: random.Random | None = None) -> ColorState:
    """An arbitrary state: c in [1, degree+1], cache entries in [1, max_degree+1] or BOTTOM."""
    if rng is None:
        rng = random.Random(f"color:{seed}")
    c = rng.randint(1, degree + 1)
    cache = tuple(BOTTOM if rng.random() < 0.25 else rng.randint(1, max_degree + 1) for _ in range(degree))
    return ColorState(c, cache)


def check_domain(state: ColorState, degree: int) -> None:
    if not 1 <= state.c <= degree + 1:
        raise ValueError(f"color {state.c} outside [1, {degree + 1}]")
    if len(state.cache) != degree:
        raise ValueError("cache must have one entry per port")


def smallest_free(cache, degree: int) -> int:
    taken = set(cache)
    for c in range(1, degree + 2):
        if c not in taken:
            return c
    raise AssertionError("palette of degree+1 colors cannot be exhausted by degree neighbors")


def may_recolor(state: ColorState, ord_bits) -> bool:
    c = state.c
    return all(cc is not BOTTOM and (cc != c or o == 1) for cc, o in zip(state.cache, ord_bits))


def conflict(state: ColorState, ord_bits, degree: int, trigger: int):
    if may_recolor(state, ord_bits):
        state = ColorState(smallest_free(state.cache, degree), state.cache)
        msg = Envelope.color(state.c)
        return state, [(w, msg) for w in range(degree)]
    return state, [(trigger, Envelope.color(state.c))]


def on_color(state: ColorState, ord_bits, degree: int, c: int, port: int):
    cache = state.cache[:port] + (c,) + state.cache[port + 1:]
    state = ColorState(state.c, cache)
    if c == state.c:
        return conflict(state, ord_bits, degree, port)
    return state, [(port, Envelope.color(state.c))]


def on_color_timeout(state: ColorState, ord_bits, degree: int, empty_ports):
    if not empty_ports:
        raise ValueError("timeout requires at least one empty input port")
    out = []
    for u in sorted(empty_ports):
        if state.cache[u] == state.c:
            state, sends = conflict(state, ord_bits, degree, u)
            out.extend(sends)
        else:
            out.append((u, Envelope.color(state.c)))
    return state, out
