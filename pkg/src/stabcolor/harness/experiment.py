"""Multi-seed sweeps, aggregation and report files."""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..core import build_topology
from ..simnet import Schedule, TrialReport, run_trial
from .config import ExperimentConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CLOSURE = 2
EXIT_CONFIG = 3

_METRICS = ("rounds_to_gb", "rounds_to_gdag", "rounds_to_galpha")


def trial_topology(cfg: ExperimentConfig, seed: int):
    return build_topology(cfg.topology, cfg.n, seed, p=cfg.p, id_policy=cfg.id_policy, id_exponent=cfg.id_exponent)


def trial_schedule(cfg: ExperimentConfig, seed: int) -> Schedule:
    return Schedule(cfg.schedule, seed=seed, fairness=cfg.fairness, deliver_p=cfg.deliver_p)


def run_one(cfg: ExperimentConfig, k: int, seed: int) -> TrialReport:
    """One trial of a sweep; writes a trace when ``cfg.trace`` names a directory."""
    topo = trial_topology(cfg, seed)
    kwargs = dict(
        seed=seed,
        channel_mode=cfg.channel_mode,
        closure_rounds=cfg.closure_rounds,
        transport=cfg.transport,
    )
    sched = trial_schedule(cfg, seed)
    if cfg.trace is None:
        return run_trial(topo, k, cfg.adversary, sched, cfg.stop, cfg.max_steps, **kwargs)
    report, sim = run_trial(topo, k, cfg.adversary, sched, cfg.stop, cfg.max_steps, record=True, **kwargs)
    tdir = Path(cfg.trace)
    tdir.mkdir(parents=True, exist_ok=True)
    stem = tdir / f"trace-k{k}-s{seed}"
    sim.trace.write_jsonl(stem.with_suffix(".jsonl"))
    meta = {"config": cfg.to_mapping(), "k": k, "seed": seed, "final_digest": report.final_digest}
    stem.with_suffix(".meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    return report


def _run_task(task):
    cfg, k, seed = task
    return k, seed, run_one(cfg, k, seed)


def loglog_slope(xs, ys) -> float | None:
    """Least-squares slope of log(y) against log(x); None when undefined."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y is not None and y > 0]
    if len({x for x, _ in pts}) < 2:
        return None
    lx, ly = zip(*pts)
    return statistics.linear_regression(lx, ly).slope


def _stats(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return {"median": None, "max": None}
    return {"median": statistics.median(vals), "max": max(vals)}


def aggregate(cfg: ExperimentConfig, rows) -> dict:
    """Deterministic summary of ``(k, seed, report)`` rows, whatever their order."""
    rows = sorted(rows, key=lambda r: (r[0], r[1]))
    per_k = {}
    for k in sorted({r[0] for r in rows}):
        reports = [rep for kk, _, rep in rows if kk == k]
        entry = {"trials": len(reports), "reached": sum(rep.reached for rep in reports)}
        for m in _METRICS:
            entry[m] = _stats(getattr(rep, m) for rep in reports)
        entry["steps"] = _stats(rep.steps for rep in reports)
        entry["delivered_dag"] = _stats(rep.delivered_dag for rep in reports)
        entry["delivered_color"] = _stats(rep.delivered_color for rep in reports)
        entry["max_occupancy"] = max(rep.max_occupancy for rep in reports)
        entry["max_head_age"] = max(rep.max_head_age for rep in reports)
        entry["not_reached"] = [seed for kk, seed, rep in rows if kk == k and not rep.reached]
        entry["closure_violations"] = [seed for kk, seed, rep in rows if kk == k and rep.closure_violations]
        per_k[str(k)] = entry

    ks = [int(k) for k in per_k]
    fits = {}
    for m in _METRICS:
        meds = [per_k[str(k)][m]["median"] for k in ks]
        fits[m] = {"loglog_slope_vs_k": loglog_slope(ks, meds)}
        pts = [(k, y) for k, y in zip(ks, meds) if y is not None]
        if len({k for k, _ in pts}) >= 2:
            fits[m]["linear_slope_vs_k"] = statistics.linear_regression(*zip(*pts)).slope
        worst = max((y for _, y in pts), default=None)
        fits[m]["max_median_per_n"] = None if worst is None else worst / cfg.n

    not_reached = [[k, s] for k, s, rep in rows if not rep.reached]
    closure = [[k, s] for k, s, rep in rows if rep.closure_violations]
    return {
        "config": cfg.to_mapping(),
        "per_k": per_k,
        "fits": fits,
        "not_reached": not_reached,
        "closure_violations": closure,
        "exit_code": exit_code_for(not_reached, closure),
    }


def exit_code_for(not_reached, closure) -> int:
    if not_reached:
        return EXIT_NOT_CONVERGED
    if closure:
        return EXIT_CLOSURE
    return EXIT_OK


@dataclass
class ExperimentResult:
    rows: list  # [(k, seed, TrialReport)] sorted by (k, seed)
    summary: dict
    meta: dict

    @property
    def exit_code(self) -> int:
        return self.summary["exit_code"]


def run_experiment(cfg: ExperimentConfig, *, progress=None) -> ExperimentResult:
    """Run every (k, seed) trial of ``cfg``; write reports when ``cfg.out`` is set."""
    tasks = [(cfg, k, seed) for k in cfg.k for seed in cfg.seeds]
    started = time.time()
    rows = []
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for row in pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for task in tasks:
            row = _run_task(task)
            rows.append(row)
            if progress:
                progress(row)
    rows.sort(key=lambda r: (r[0], r[1]))
    summary = aggregate(cfg, rows)
    meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)), "elapsed_s": time.time() - started}
    result = ExperimentResult(rows, summary, meta)
    if cfg.out is not None:
        write_reports(result, cfg.out)
    return result


def dumps_summary(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=1) + "\n"


def write_reports(result: ExperimentResult, out) -> None:
    """``summary.json`` (reproducible), ``trials.jsonl``, ``meta.json`` (timestamps)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(dumps_summary(result.summary))
    with open(out / "trials.jsonl", "w") as fh:
        for k, seed, rep in result.rows:
            rec = {"k": k, "seed": seed, **rep.to_dict()}
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    (out / "meta.json").write_text(json.dumps(result.meta, sort_keys=True, indent=1) + "\n")
