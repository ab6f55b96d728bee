"""Command-line entry point: ``stabcolor {run,verify,export-dot,replay}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..simnet import Schedule, Simulation, run_trial, seed_adversary
from .config import ConfigError, ExperimentConfig, build_config
from .experiment import (
    EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    dumps_summary,
    run_experiment,
    trial_schedule,
    trial_topology,
)
from .export import export_dot

log = logging.getLogger("stabcolor")

# flag name -> config field
_FLAG_FIELDS = {
    "topology": "topology",
    "n": "n",
    "p": "p",
    "id_policy": "id_policy",
    "id_exponent": "id_exponent",
    "k": "k",
    "adversary": "adversary",
    "schedule": "schedule",
    "fairness": "fairness",
    "deliver_p": "deliver_p",
    "seeds": "seeds",
    "max_steps": "max_steps",
    "stop": "stop",
    "closure_rounds": "closure_rounds",
    "channel_mode": "channel_mode",
    "transport": "transport",
    "trace": "trace",
    "out": "out",
    "workers": "workers",
}


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    # Every default is None so that unset flags never override file or env.
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--topology", help="path, ring, star, complete or gnp")
    p.add_argument("--n", help="number of nodes")
    p.add_argument("--p", help="edge probability for gnp")
    p.add_argument("--id-policy", dest="id_policy", help="sequential, random-distinct or adversarial-permutation")
    p.add_argument("--id-exponent", dest="id_exponent", help="identifiers are drawn from [1, n^c]")
    p.add_argument("--k", help="initial garbage per link, e.g. 2 or 0,2,4,8")
    p.add_argument("--adversary", help="domain or wild")
    p.add_argument("--schedule", help="sync or random")
    p.add_argument("--fairness", help="head-age bound F of the random scheduler (default 4*Delta)")
    p.add_argument("--deliver-p", dest="deliver_p", help="probability the random scheduler delivers a ready head (default 1.0)")
    p.add_argument("--seeds", help="count (25), list (1,5,9) or range (0-24)")
    p.add_argument("--max-steps", dest="max_steps")
    p.add_argument("--stop", help="gb, gdag, galpha or steps")
    p.add_argument("--closure-rounds", dest="closure_rounds", help="rounds to keep watching after the stop predicate")
    p.add_argument("--channel-mode", dest="channel_mode", help="shared or split")
    p.add_argument("--transport", help="merged or literal")
    p.add_argument("--trace", help="directory for per-trial JSONL traces")
    p.add_argument("--out", help="directory for reports")
    p.add_argument("--workers", help="parallel trial workers")


def _config_from(args) -> ExperimentConfig:
    flags = {field: getattr(args, flag) for flag, field in _FLAG_FIELDS.items() if hasattr(args, flag)}
    return build_config(args.config, flags)


def _cmd_run(args) -> int:
    cfg = _config_from(args)

    def progress(row):
        k, seed, rep = row
        log.info("k=%d seed=%d reached=%s rounds(gb/gdag/galpha)=%s/%s/%s steps=%d",
                 k, seed, rep.reached, rep.rounds_to_gb, rep.rounds_to_gdag, rep.rounds_to_galpha, rep.steps)

    result = run_experiment(cfg, progress=progress)
    sys.stdout.write(dumps_summary(result.summary))
    if result.summary["not_reached"]:
        log.error("not converged (k, seed): %s", result.summary["not_reached"])
    if result.summary["closure_violations"]:
        log.error("closure violated (k, seed): %s", result.summary["closure_violations"])
    return result.exit_code


def _cmd_export_dot(args) -> int:
    cfg = _config_from(args)
    k, seed = cfg.k[0], cfg.seeds[0]
    topo = trial_topology(cfg, seed)
    report, sim = run_trial(
        topo, k, cfg.adversary, trial_schedule(cfg, seed), cfg.stop, cfg.max_steps, seed=seed,
        channel_mode=cfg.channel_mode, closure_rounds=cfg.closure_rounds, transport=cfg.transport, record=True,
    )
    target = Path(args.dot) if args.dot else Path(cfg.out or ".") / "orientation.dot"
    target.parent.mkdir(parents=True, exist_ok=True)
    ok = export_dot(sim.snapshot(), target, title=f"{topo.name} k={k} seed={seed}")
    print(f"wrote {target} (orientation correct: {ok})")
    if not ok:
        log.warning("orientation not converged; the file carries a warning annotation")
    return EXIT_OK if report.reached else EXIT_NOT_CONVERGED


def replay_trace(trace_path) -> tuple[bool, str]:
    """Re-execute a recorded trace with a scripted schedule; compare every step."""
    trace_path = Path(trace_path)
    meta_path = trace_path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text())
    cfg = ExperimentConfig.from_mapping(meta["config"])
    k, seed = meta["k"], meta["seed"]
    records = [json.loads(line) for line in trace_path.read_text().splitlines() if line.strip()]
    script = tuple(tuple((v, tuple(ports)) for v, _, ports, _ in rec["acting"]) for rec in records)
    initial = seed_adversary(trial_topology(cfg, seed), k, cfg.adversary, seed, cfg.channel_mode)
    sim = Simulation(initial, Schedule("scripted", script=script), record=True, transport=cfg.transport)
    while sim.step():
        pass
    again = [json.loads(json.dumps(r.to_json(), sort_keys=True)) for r in sim.trace.records]
    if again != records:
        first = next((i for i, (a, b) in enumerate(zip(again, records)) if a != b), min(len(again), len(records)))
        return False, f"trace diverges at record {first}"
    digest = sim.net.digest()
    if digest != meta["final_digest"]:
        return False, f"final digest {digest} != recorded {meta['final_digest']}"
    return True, f"{len(records)} steps replayed bit-exactly; digest {digest[:16]}"


def _cmd_replay(args) -> int:
    ok, msg = replay_trace(args.trace)
    print(msg)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def _cmd_verify(args) -> int:
    from .acceptance import verify_suite

    verdicts = verify_suite(args.level, report=lambda line: print(line, flush=True))
    failed = [v.criterion for v in verdicts if not v.passed]
    if failed:
        print(f"failed criteria: {failed}")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabcolor", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep")
    _add_experiment_flags(run)
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run the acceptance battery")
    ver.add_argument("--level", choices=("quick", "full"), default="quick")
    ver.set_defaults(func=_cmd_verify)

    dot = sub.add_parser("export-dot", help="run one trial and export its final orientation")
    _add_experiment_flags(dot)
    dot.add_argument("--dot", help="output .dot file (default: <out>/orientation.dot)")
    dot.set_defaults(func=_cmd_export_dot)

    rep = sub.add_parser("replay", help="replay a recorded trace and check it bit-exactly")
    rep.add_argument("--trace", required=True, help="trace .jsonl written by run --trace")
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
