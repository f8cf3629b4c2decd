"""Command-line surface: generate instances, solve, run schedulers, estimate.

Exit codes: 0 for success (including VACUOUS verdicts), 1 for a failed
statistical check, 2 for usage errors (argparse's default).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import Instance, Order
from .generators import (
    GeneratedInstance,
    gen_adversarial,
    gen_contest_reduction,
    gen_proper,
    gen_uniform,
)
from .harness import (
    FAIL,
    csv_emit,
    estimate_rom,
    greedy_adversarial_test,
    partition_phase_stats,
    sampling_band_test,
)
from .optimal import classify, opt_exact
from .schedulers import greedy_schedule, sample_partition_schedule
from .talent import (
    MarkAll,
    MarkNever,
    QuantileStrategy,
    binomial_guess_game,
    estimate_points,
    points_upper_bound,
    ratio_lower_bound,
)

STRATEGIES = {
    "never": MarkNever,
    "all": MarkAll,
    "quantile": QuantileStrategy,
}


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _load_instance(path: str) -> Instance:
    return Instance.from_json(Path(path).read_text())


def _load_generated(instance_path: str, meta_path: str | None) -> Instance | GeneratedInstance:
    instance = _load_instance(instance_path)
    if meta_path is None:
        return instance
    meta = json.loads(Path(meta_path).read_text())
    known_opt = meta.get("known_opt")
    hint = None
    if known_opt is not None and not meta.get("log_domain"):
        hint = classify(instance, float(known_opt))
    return GeneratedInstance(
        instance=instance,
        family=meta.get("family", "unknown"),
        params=meta.get("params", {}),
        known_opt=known_opt,
        taxonomy_hint=hint,
        log_domain=bool(meta.get("log_domain", False)),
    )


def _cmd_gen(args) -> int:
    if args.family == "adversarial":
        gen = gen_adversarial(args.m)
    elif args.family == "proper":
        gen = gen_proper(args.m, args.degree, args.n, seed=args.seed, scale=args.scale)
    elif args.family == "reduction":
        gen = gen_contest_reduction(
            args.target_rank, args.arrivals, args.steepness, seed=args.seed,
            extra_candidates=args.extra_candidates,
        )
    else:
        gen = gen_uniform(args.n, args.m, seed=args.seed)

    instance_json = gen.instance.to_json()
    sidecar = gen.sidecar()
    if args.out:
        Path(args.out).write_text(instance_json + "\n")
        meta_path = Path(args.out).with_suffix(Path(args.out).suffix + ".meta.json")
        meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        _emit({"written": str(args.out), "meta": str(meta_path)})
    else:
        _emit({"instance": json.loads(instance_json), "meta": sidecar})
    return 0


def _cmd_opt(args) -> int:
    instance = _load_instance(args.instance)
    result = opt_exact(instance, node_budget=args.budget)
    _emit({"opt": result.value, "method": result.method, "nodes": result.nodes})
    return 0


def _cmd_run(args) -> int:
    instance = _load_instance(args.instance)
    rng = np.random.default_rng(args.seed)
    if args.order == "given":
        order = Order.identity(instance.n)
    else:
        order = Order.uniform(instance.n, rng, seed=args.seed)

    if args.algo == "greedy":
        schedule = greedy_schedule(instance, order)
        _emit({"min_load": schedule.min_load, "report": {"algo": "greedy"}})
    else:
        schedule, report = sample_partition_schedule(
            instance, order, rng, forced_degree=args.force_degree
        )
        _emit(
            {
                "min_load": schedule.min_load,
                "report": {
                    "algo": "partition",
                    "degree_guess": report.degree_guess,
                    "degree": report.degree,
                    "padded_n": report.padded_n,
                    "sample_cutoff": report.sample_cutoff,
                    "threshold_final": report.threshold_final,
                    "threshold_updates": report.threshold_updates,
                },
            }
        )
    return 0


def _cmd_estimate(args) -> int:
    target = _load_generated(args.instance, args.meta)
    report = estimate_rom(
        target,
        algo=args.algo,
        trials=args.trials,
        seed=args.seed,
        forced_degree=args.force_degree,
        workers=args.workers,
        with_events=args.meta is not None,
    )
    if args.out:
        csv_emit([report], args.out)
    _emit(report.to_row())
    return 0


def _cmd_threshold_test(args) -> int:
    report = sampling_band_test(args.m, args.degree, args.n, args.trials, args.seed)
    rate = report.event_rates["band_event"]
    required = 1.0 / 3.0 - 0.05
    verdict = "PASS" if rate.value >= required else FAIL
    _emit(
        {
            "band_frequency": rate.value,
            "wilson": [rate.lo, rate.hi],
            "required": required,
            "verdict": verdict,
        }
    )
    return 0 if verdict != FAIL else 1


def _cmd_greedy_test(args) -> int:
    report, verdict = greedy_adversarial_test(args.m, args.trials, args.seed)
    _emit(
        {
            "mean_min_load": report.mean_min_load,
            "ci95": report.ci95,
            "floor": report.params["floor"],
            "empirical_ratio": report.empirical_ratio,
            "verdict": verdict,
        }
    )
    return 0 if verdict != FAIL else 1


def _cmd_partition_stats(args) -> int:
    target = _load_generated(args.instance, args.meta)
    if not isinstance(target, GeneratedInstance):
        raise SystemExit("partition-stats requires --meta with a known optimum")
    report = partition_phase_stats(target, trials=args.trials, seed=args.seed, degree=args.degree)
    if args.out:
        csv_emit([report], args.out)
    _emit(report.to_row())
    return 0


def _cmd_talent(args) -> int:
    factory = STRATEGIES[args.strategy]
    mean, ci95 = estimate_points(
        args.target_rank, args.arrivals, args.n, factory, args.trials, args.seed
    )
    payload = {"mean": mean, "ci95": ci95}
    if args.arrivals >= 3:
        payload["points_bound"] = points_upper_bound(args.target_rank, args.arrivals)
    _emit(payload)
    return 0


def _cmd_bounds(args) -> int:
    _emit({"ratio_lower_bound": ratio_lower_bound(args.m)})
    return 0


def _cmd_guessgame(args) -> int:
    rng = np.random.default_rng(args.seed)
    wins = sum(
        binomial_guess_game(args.threshold, args.guess, args.samples, args.range, rng)
        for _ in range(args.trials)
    )
    _emit({"win_rate": wins / args.trials, "wins": wins, "trials": args.trials})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocover",
        description="Random-order machine covering: generators, solvers, schedulers, statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance with a sidecar of known facts")
    p.add_argument("--family", choices=["adversarial", "proper", "reduction", "uniform"], required=True)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--target-rank", type=int, default=3)
    p.add_argument("--arrivals", type=int, default=2)
    p.add_argument("--steepness", type=float, default=10.0)
    p.add_argument("--extra-candidates", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("opt", help="exact offline optimum of an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--budget", type=int, default=5_000_000)
    p.set_defaults(func=_cmd_opt)

    p = sub.add_parser("run", help="run one scheduler on one order")
    p.add_argument("--algo", choices=["greedy", "partition"], required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--order", choices=["random", "given"], default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force-degree", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("estimate", help="Monte Carlo random-order estimate")
    p.add_argument("--instance", required=True)
    p.add_argument("--meta", default=None, help="sidecar JSON with known_opt/family")
    p.add_argument("--algo", choices=["greedy", "partition"], default="greedy")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force-degree", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="also append a CSV row here")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("threshold-test", help="sampling-band event frequency on a proper instance")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_threshold_test)

    p = sub.add_parser("greedy-test", help="greedy floor check on the adversarial family")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_greedy_test)

    p = sub.add_parser("partition-stats", help="routing-event statistics, events only")
    p.add_argument("--instance", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_partition_stats)

    p = sub.add_parser("talent", help="Monte Carlo points of a marking strategy")
    p.add_argument("--target-rank", type=int, required=True)
    p.add_argument("--arrivals", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", choices=sorted(STRATEGIES), default="quantile")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_talent)

    p = sub.add_parser("bounds", help="competitive-ratio lower bound for m machines")
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("guessgame", help="empirical win rate of the binomial guessing game")
    p.add_argument("--threshold", type=float, required=True, help="cut point s")
    p.add_argument("--guess", type=int, required=True, help="target count g")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--range", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_guessgame)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
