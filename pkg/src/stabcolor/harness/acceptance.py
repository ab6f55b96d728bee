"""Acceptance battery: each criterion as a function returning a verdict.

``verify_suite("quick")`` runs every criterion at a reduced scale;
``verify_suite("full")`` runs the stated scale.  The test-suite calls the same
functions so the CLI and pytest cannot drift apart.
"""

from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import dataclass, field

from ..composer import NodeRuntime, node_step
from ..coloring import color_init
from ..core import ColorMsg, Envelope, Layer, bit_index, build_topology
from ..dag import dag_init
from ..simnet import SHARED, SPLIT, Schedule, run_trial
from .experiment import loglog_slope


@dataclass(frozen=True)
class Scale:
    sweep_topologies: tuple = (("path", 10), ("ring", 10), ("star", 10), ("complete", 6), ("gnp", 12))
    sweep_p: float = 0.2
    sweep_ks: tuple = (0, 1, 4, 8)
    sweep_adversaries: tuple = ("domain", "wild")
    sweep_schedules: tuple = ("sync", "random")
    sweep_seeds: int = 25
    sweep_closure_rounds: int | None = 5  # None: n rounds after the last first hit
    sweep_max_steps: int = 1_000_000
    sweep_budget_s: float = 600.0
    k_ring: int = 32
    k_values: tuple = (1, 2, 4, 8, 16)
    k_seeds: int = 50
    n_rings: tuple = (8, 16, 32, 64)
    n_k: int = 2
    n_seeds: int = 25
    broadcast_steps: int = 1000
    composition_seeds: int = 10
    determinism_trials: int = 20


FULL = Scale()
QUICK = Scale(
    sweep_topologies=(("path", 6), ("ring", 6), ("star", 6), ("complete", 5), ("gnp", 10)),
    sweep_ks=(0, 4),
    sweep_seeds=2,
    sweep_budget_s=60.0,
    k_ring=16,
    k_values=(1, 4, 16),
    k_seeds=5,
    n_rings=(8, 16, 32),
    n_seeds=5,
    broadcast_steps=200,
    composition_seeds=2,
    determinism_trials=4,
)
SCALES = {"quick": QUICK, "full": FULL}


@dataclass
class Verdict:
    criterion: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"criterion {self.criterion:>2} [{mark}] {self.title}: {self.detail} ({self.seconds:.1f}s)"


@dataclass
class SweepTrial:
    topology: str
    n: int
    k: int
    adversary: str
    schedule: str
    seed: int
    report: object
    field_bound: int  # ceil(log2 n)
    max_degree: int


@dataclass
class Sweep:
    trials: list = field(default_factory=list)
    seconds: float = 0.0


# --------------------------------------------------------------------------
# criterion 1


def brute_bit(ident: int, i: int) -> int:
    """Independent scan of the binary string, left to right."""
    s = bin(ident)[2:]
    ones = [len(s) - j for j, ch in enumerate(s) if ch == "1"]
    return ones[i - 1] if i <= len(ones) else -1


def criterion_1(scale: Scale = FULL) -> Verdict:
    t = time.perf_counter()
    bad = [
        (x, i)
        for x in range(1, 4097)
        for i in range(1, x.bit_length() + 2)
        if bit_index(x, i) != brute_bit(x, i)
    ]
    example = [bit_index(10, i) for i in (1, 2, 3)] == [4, 2, -1]
    dt = time.perf_counter() - t
    ok = not bad and example and dt < 1.0
    return Verdict(1, "Bit oracle over [1, 4096]", ok, f"mismatches={len(bad)} id10={example} t<1s={dt < 1.0}", dt)


# --------------------------------------------------------------------------
# criteria 2, 3, 4, 7 share one sweep


def sweep_topology(kind: str, n: int, seed: int, p: float):
    # Identifiers are a permutation of [1, n] (exponent 1) so that every
    # correct level and position fits in ceil(log2 n) when n is not a power
    # of two.
    return build_topology(kind, n, seed, p=p, id_policy="random-distinct", id_exponent=1)


def run_sweep(scale: Scale = FULL, progress=None) -> Sweep:
    t = time.perf_counter()
    out = Sweep()
    for kind, n in scale.sweep_topologies:
        closure = n if scale.sweep_closure_rounds is None else scale.sweep_closure_rounds
        for k in scale.sweep_ks:
            for adv in scale.sweep_adversaries:
                for pol in scale.sweep_schedules:
                    for seed in range(scale.sweep_seeds):
                        topo = sweep_topology(kind, n, seed, scale.sweep_p)
                        rep = run_trial(
                            topo, k, adv, Schedule(pol, seed=seed), "galpha", scale.sweep_max_steps,
                            seed=seed, closure_rounds=closure,
                        )
                        out.trials.append(
                            SweepTrial(kind, n, k, adv, pol, seed, rep, math.ceil(math.log2(n)), topo.max_degree)
                        )
                        if progress:
                            progress(out.trials[-1])
    out.seconds = time.perf_counter() - t
    return out


def _label(tr: SweepTrial) -> str:
    return f"{tr.topology}({tr.n}) k={tr.k} {tr.adversary} {tr.schedule} seed={tr.seed}"


def criterion_2(sweep: Sweep, scale: Scale = FULL) -> Verdict:
    bad = []
    for tr in sweep.trials:
        r = tr.report
        ok = (
            r.steps_to_gb is not None
            and r.steps_to_gdag is not None
            and r.steps_to_gb <= r.steps_to_gdag <= scale.sweep_max_steps
            and r.dag_oracle_at_gdag is True
        )
        if not ok:
            bad.append(_label(tr))
    in_budget = sweep.seconds <= scale.sweep_budget_s
    detail = f"{len(sweep.trials) - len(bad)}/{len(sweep.trials)} reached Gamma_B then Gamma_DAG with dagOracle"
    detail += f", sweep {sweep.seconds:.0f}s <= {scale.sweep_budget_s:.0f}s: {in_budget}"
    if bad:
        detail += f"; first failures: {bad[:3]}"
    return Verdict(2, "DAG convergence sweep", not bad and in_budget, detail, sweep.seconds)


def criterion_3(sweep: Sweep, scale: Scale = FULL) -> Verdict:
    bad = [
        (_label(tr), v) for tr in sweep.trials for v in tr.report.closure_violations if v[0] in ("gb", "gdag")
    ]
    detail = f"closure violations of Gamma_B/Gamma_DAG: {len(bad)}"
    if bad:
        detail += f"; first: {bad[:3]}"
    return Verdict(3, "DAG closure", not bad, detail)


def criterion_4(sweep: Sweep, scale: Scale = FULL) -> Verdict:
    bad = []
    for tr in sweep.trials:
        r = tr.report
        viol = [v for v in r.closure_violations if v[0] in ("galpha", "coloring")]
        if r.steps_to_galpha is None or r.coloring_oracle_at_galpha is not True or viol or not r.coloring_oracle_final:
            bad.append(_label(tr))
    detail = f"{len(sweep.trials) - len(bad)}/{len(sweep.trials)} reached Gamma_alpha with a proper coloring kept"
    if bad:
        detail += f"; first failures: {bad[:3]}"
    return Verdict(4, "coloring convergence and validity", not bad, detail)


def criterion_7(sweep: Sweep, scale: Scale = FULL) -> Verdict:
    bad = []
    for tr in sweep.trials:
        r = tr.report
        rng = {kind: (lo, hi) for kind, lo, hi in r.emitted_range}
        w = tr.field_bound
        checks = [
            ("level", 1, w),
            ("position", -1, w),
            ("color", 1, tr.max_degree + 1),
        ]
        for kind, lo_ok, hi_ok in checks:
            lo, hi = rng[kind]
            if lo is not None and (lo < lo_ok or hi > hi_ok):
                bad.append((_label(tr), kind, lo, hi))
        if r.emission_violations:
            bad.append((_label(tr), "emission", r.emission_violations[0]))
    detail = f"out-of-vocabulary emissions: {len(bad)}"
    if bad:
        detail += f"; first: {bad[:3]}"
    return Verdict(7, "message-size bound", not bad, detail)


# --------------------------------------------------------------------------
# criteria 5, 6


def criterion_5(scale: Scale = FULL, progress=None) -> Verdict:
    t = time.perf_counter()
    n = scale.k_ring
    medians = []
    missing = 0
    for k in scale.k_values:
        rounds = []
        for seed in range(scale.k_seeds):
            topo = build_topology("ring", n, seed)
            r = run_trial(topo, k, "domain", Schedule("random", seed=seed), "gdag", 1_000_000, seed=seed, closure_rounds=0)
            if r.rounds_to_gdag is None:
                missing += 1
            else:
                rounds.append(r.rounds_to_gdag)
            if progress:
                progress(k, seed, r)
        medians.append(statistics.median(rounds) if rounds else None)
    monotone = all(a is not None and b is not None and a <= b for a, b in zip(medians, medians[1:]))
    slope = loglog_slope(scale.k_values, medians)
    ok = missing == 0 and monotone and slope is not None and 0.5 <= slope <= 1.5
    slope_txt = "n/a" if slope is None else f"{slope:.3f}"
    detail = f"ring({n}) medians by k {dict(zip(scale.k_values, medians))}, monotone={monotone}, "
    detail += f"log-log slope={slope_txt} (band [0.5, 1.5]), unreached={missing}"
    return Verdict(5, "rounds-to-Gamma_DAG linear in k", ok, detail, time.perf_counter() - t)


def criterion_6(scale: Scale = FULL, progress=None) -> Verdict:
    t = time.perf_counter()
    medians = []
    missing = 0
    for n in scale.n_rings:
        rounds = []
        for seed in range(scale.n_seeds):
            topo = build_topology("ring", n, seed)
            r = run_trial(
                topo, scale.n_k, "domain", Schedule("random", seed=seed), "galpha", 1_000_000, seed=seed, closure_rounds=0
            )
            if r.rounds_to_galpha is None:
                missing += 1
            else:
                rounds.append(r.rounds_to_galpha)
            if progress:
                progress(n, seed, r)
        medians.append(statistics.median(rounds) if rounds else None)
    slope = loglog_slope(scale.n_rings, medians)
    ok = missing == 0 and slope is not None and slope <= 1.3
    slope_txt = "n/a" if slope is None else f"{slope:.3f}"
    detail = f"k={scale.n_k} medians by n {dict(zip(scale.n_rings, medians))}, log-log slope={slope_txt} (<= 1.3)"
    detail += f", unreached={missing}"
    return Verdict(6, "rounds-to-Gamma_alpha at most linear in n", ok, detail, time.perf_counter() - t)


# --------------------------------------------------------------------------
# criterion 8


def broadcast_holds(rt: NodeRuntime, inputs: dict, empty_ports, *, merge: bool = True) -> bool:
    """After one coloring step, every port read or timed out carries Color(final c)."""
    res = node_step(rt, inputs, empty_ports, merge=merge)
    c = res.runtime.color.c
    involved = set(inputs) | set(empty_ports)
    sent = {p for p, env in res.outbox if env.layer == Layer.COLOR and env.payload == ColorMsg(c)}
    return involved <= sent


def criterion_8(scale: Scale = FULL) -> Verdict:
    t = time.perf_counter()
    rng = random.Random("broadcast")
    failures = 0
    for i in range(scale.broadcast_steps):
        big_d = rng.randint(1, 6)
        deg = rng.randint(1, big_d)
        ident = rng.randint(1, 4096)
        rt = NodeRuntime(
            ident, deg, dag_init(ident, deg, rng=rng), color_init(deg, big_d, rng=rng), Layer.COLOR, 13
        )
        ports = list(range(deg))
        rng.shuffle(ports)
        cut = rng.randint(0, deg)
        received = ports[:cut]
        rest = ports[cut:]
        empty = [p for p in rest if rng.random() < 0.7]
        if not received and not empty:
            empty = rest[:1]
        inputs = {p: Envelope.color(rng.randint(1, big_d + 1)) for p in received}
        if not broadcast_holds(rt, inputs, empty, merge=bool(i % 2)):
            failures += 1
    dt = time.perf_counter() - t
    return Verdict(8, "every coloring step answers each involved neighbor", failures == 0,
                   f"{scale.broadcast_steps - failures}/{scale.broadcast_steps} steps", dt)


# --------------------------------------------------------------------------
# criteria 9, 10


def criterion_9(scale: Scale = FULL) -> Verdict:
    t = time.perf_counter()
    worst = {SHARED: 0, SPLIT: 0}
    runs = 0
    for mode in (SHARED, SPLIT):
        for kind, n in (("ring", 8), ("star", 6), ("gnp", 10), ("complete", 5)):
            for adv in ("domain", "wild"):
                for pol in ("sync", "random"):
                    for seed in range(scale.composition_seeds):
                        topo = build_topology(kind, n, seed, p=0.3)
                        r = run_trial(topo, 4, adv, Schedule(pol, seed=seed), "galpha", 1_000_000,
                                      seed=seed, channel_mode=mode, closure_rounds=2)
                        worst[mode] = max(worst[mode], r.layer_step_gap)
                        runs += 1
    ok = all(g <= 1 for g in worst.values())
    return Verdict(9, "fair composition under shared and split channels", ok,
                   f"max |DAG steps - COLOR steps| per node: {worst} over {runs} trials", time.perf_counter() - t)


def criterion_10(sweep: Sweep, scale: Scale = FULL) -> Verdict:
    t = time.perf_counter()
    rng = random.Random("determinism")
    picks = rng.sample(sweep.trials, min(scale.determinism_trials, len(sweep.trials)))
    bad = []
    for tr in picks:
        closure = tr.n if scale.sweep_closure_rounds is None else scale.sweep_closure_rounds
        topo = sweep_topology(tr.topology, tr.n, tr.seed, scale.sweep_p)
        again = run_trial(topo, tr.k, tr.adversary, Schedule(tr.schedule, seed=tr.seed), "galpha",
                          scale.sweep_max_steps, seed=tr.seed, closure_rounds=closure)
        if again != tr.report or again.final_digest != tr.report.final_digest:
            bad.append(_label(tr))
    return Verdict(10, "determinism", not bad, f"{len(picks) - len(bad)}/{len(picks)} re-runs identical",
                   time.perf_counter() - t)


def verify_suite(level: str = "quick", report=print) -> list[Verdict]:
    """Run the battery; ``report`` receives one line per criterion."""
    scale = SCALES[level]
    verdicts = [criterion_1(scale)]
    report(verdicts[-1].line())
    sweep = run_sweep(scale)
    for fn in (criterion_2, criterion_3, criterion_4):
        verdicts.append(fn(sweep, scale))
        report(verdicts[-1].line())
    for fn in (criterion_5, criterion_6):
        verdicts.append(fn(scale))
        report(verdicts[-1].line())
    verdicts.append(criterion_7(sweep, scale))
    report(verdicts[-1].line())
    verdicts.append(criterion_8(scale))
    report(verdicts[-1].line())
    verdicts.append(criterion_9(scale))
    report(verdicts[-1].line())
    verdicts.append(criterion_10(sweep, scale))
    report(verdicts[-1].line())
    return verdicts
