"""Command-line entry point: ``lighttrail <command> ...``.

Exit status is 0 on success, 1 when a produced schedule fails validation or
an invariant breaks, and 2 on bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .adversaries import (gen_allclass_killer, gen_class_ladder, gen_hierarchical,
                          run_adaptive_adversary)
from .core import LightTrailError, validate_schedule
from .harness import (ExperimentConfig, aggregate, brute_force_opt, rows_csv, run_experiment,
                      summary_csv)
from .io import format_instance, format_schedule, format_trace, read_instance, read_trace
from .online import POLICIES, TOPOLOGIES, run_online
from .stationary import MODES, pack_hierarchical_opt, schedule_stationary
from .traffic import DESTINATIONS, LoadParams, gen_workload

log = logging.getLogger("lighttrail")


class ValidationFailed(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _check(instance, schedule, mode) -> None:
    report = validate_schedule(instance, schedule, mode)
    if not report.ok:
        for v in report.violations:
            log.error(v)
        raise ValidationFailed(f"{len(report.violations)} schedule violations")


def cmd_stationary(args) -> None:
    n, instance = read_instance(args.instance)
    schedule = schedule_stationary(instance, n, args.mode)
    _check(instance, schedule, args.mode)
    _emit(format_schedule(schedule, instance, args.mode), args.out)


def cmd_oracle(args) -> None:
    n, instance = read_instance(args.instance)
    res = brute_force_opt(instance, n, args.max_wavelengths)
    _check(instance, res.schedule, "nonsplittable")
    _emit(format_schedule(res.schedule, instance), args.out)


def cmd_online(args) -> None:
    seq = read_trace(args.trace, args.n)
    res = run_online(seq, args.policy, args.topology, record=args.audit)
    lines = ["policy,n,topology,peak_wavelengths,total_allocated,congestion_ppm", res.line()]
    if args.audit:
        lines += ["# time,event,id,fiber,wavelength,trail,extent"]
        lines += [f"{t},{e},{tid},{f},{w},{u},{ext[0]}-{ext[1]}" for t, e, tid, f, w, u, ext in res.trace]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_adversary(args) -> None:
    kind = args.kind
    if kind == "hierarchical":
        instance = gen_hierarchical(args.n, args.extra)
        text = format_instance(args.n + 1, instance)
        if args.opt:
            schedule = pack_hierarchical_opt(instance)
            _check(instance, schedule, "nonsplittable")
            text = format_schedule(schedule, instance)
        _emit(text, args.out)
        return
    if kind == "ladder":
        _emit(format_trace(gen_class_ladder(args.k)), args.out)
        return
    if kind == "killer":
        ks = gen_allclass_killer(args.n)
        _emit(format_trace(ks.events), args.out)
        if args.stages:
            lines = ["stage,index,q,k,unit,base_wavelength"]
            lines += [f"stage,{s.index},{s.q},{s.k},{s.unit},{s.base}" for s in ks.stages]
            Path(args.stages).write_text("\n".join(lines) + "\n")
        return
    run = run_adaptive_adversary(args.policy, args.n)
    problems = run.opt.validate()
    for p in problems:
        log.error(p)
    _emit(format_trace(run.events), args.out)
    if args.stages:
        lines = ["stage,i,kept_ids,departed_ids"]
        lines += [f"stage,{s.index},{' '.join(map(str, s.kept))},{' '.join(map(str, s.departed))}"
                  for s in run.stages]
        lines.append(f"summary,alg_final={run.alg_final},alg_peak={run.alg_peak},opt_peak={run.opt.peak}")
        Path(args.stages).write_text("\n".join(lines) + "\n")
    if problems:
        raise ValidationFailed("reference schedule failed validation")


def cmd_traffic(args) -> None:
    params = LoadParams(args.lam, args.dest, args.rmin, args.alpha, args.horizon, args.seed)
    _emit(format_trace(gen_workload(args.n, params)), args.out)


def cmd_simulate(args) -> None:
    if args.grid == "full":
        config = ExperimentConfig(seed=args.seed, timing=args.timing)
    else:
        config = ExperimentConfig(ns=(5, 8, 12), repetitions=5, seed=args.seed, timing=args.timing)
    if args.reps:
        config.repetitions = args.reps
    if args.ns:
        config.ns = tuple(args.ns)
    rows = run_experiment(config, lambda n, d, r: log.info("done n=%d dest=%s r_min=%s", n, d, r))
    _emit(rows_csv(rows, args.timing), args.out)
    if args.summary:
        Path(args.summary).write_text(summary_csv(aggregate(rows)))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=MODES, default="nonsplittable")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the main output here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lighttrail", description="Light-trail scheduling toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stationary", parents=[common], help="schedule a stationary instance")
    p.add_argument("instance")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("oracle", parents=[common], help="exact optimum of a small instance")
    p.add_argument("instance")
    p.add_argument("--max-wavelengths", type=int, default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("online", parents=[common], help="replay an event trace through a policy")
    p.add_argument("trace")
    p.add_argument("--policy", choices=POLICIES, default="separate")
    p.add_argument("--topology", choices=TOPOLOGIES, default="array")
    p.add_argument("--n", type=int, default=None, help="node count (default: from the trace)")
    p.add_argument("--audit", action="store_true", help="append the full assignment trace")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("adversary", parents=[common], help="generate a lower-bound construction")
    p.add_argument("kind", choices=("hierarchical", "ladder", "killer", "adaptive"))
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--k", type=int, default=4, help="ladder height")
    p.add_argument("--extra", type=int, default=0, help="full-span unit transmissions to add")
    p.add_argument("--opt", action="store_true", help="emit the reference packing instead")
    p.add_argument("--policy", choices=POLICIES, default="separate")
    p.add_argument("--stages", help="write stage records here")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("traffic", parents=[common], help="generate a random ring workload")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--dest", choices=DESTINATIONS, default="uniform")
    p.add_argument("--rmin", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--horizon", type=int, default=100)
    p.set_defaults(func=cmd_traffic)

    p = sub.add_parser("simulate", parents=[common], help="run the ring simulation study")
    p.add_argument("--grid", choices=("full", "small"), default="small")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--ns", type=int, nargs="+", default=None)
    p.add_argument("--summary", help="write per-cell means here")
    p.add_argument("--timing", action="store_true", help="include wall-clock runtimes (not reproducible)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except ValidationFailed as exc:
        log.error("%s", exc)
        return 1
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    except LightTrailError as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
