"""Command-line entry point: ``phasesched <simulate|sweep|bounds|verify|oracle>``.

Data goes to ``--out`` or standard output; progress and summaries go to
standard error. Exit codes: 0 success, 1 invalid input, 2 runtime failure
(including a verification check that does not pass).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .analysis.bounds import find_beta, lcfs_bound, pa_equi_bound, pa_equi_constants
from .analysis.oracle import brute_force_opt, empirical_ratio, opt_lower_bound
from .analysis.potential import verify_drifts_lcfs, verify_drifts_pa_equi, verify_jumps
from .core import SpeedupFunction
from .engine import LivelockError, run
from .experiment import (
    ConfigError,
    ExperimentConfig,
    PolicySpec,
    emit,
    load_config,
    run_experiment,
    sweep,
)
from .schedulers import PolicyKind, PolicyParams
from .workload import ProfileConfig, StochasticConfig, load_workload, small_random_workload

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class CheckFailed(RuntimeError):
    pass


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 10) == 0:
        print(f"  {done}/{total} replications", file=sys.stderr)


def _write_rows(rows: list[dict], columns: Sequence[str], fmt: str, out: Optional[str]) -> None:
    if fmt == "json":
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()} for r in rows]
        text = json.dumps({"columns": list(columns), "rows": clean}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
        text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _policy_specs(args) -> tuple[PolicySpec, ...]:
    names = args.policy or ["flcfs"]
    return tuple(
        PolicySpec(PolicyKind.parse(n), PolicyParams(args.beta, args.theta, args.delta)) for n in names
    )


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        if args.profile:
            wl = ProfileConfig(tuple(args.profile), args.arrival_rate, args.horizon, args.first_phase)
        elif args.workload:
            wl = args.workload
        else:
            wl = StochasticConfig(args.arrival_rate, args.horizon, args.mean_phases, args.mean_size, args.first_phase)
        cfg = ExperimentConfig(_policy_specs(args), wl, args.servers, args.alpha)
    updates = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.replications is not None:
        updates["replications"] = args.replications
    return replace(cfg, **updates) if updates else cfg


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    print(f"simulate: {len(cfg.policies)} policies x {cfg.replications} replications", file=sys.stderr)
    res = run_experiment(cfg, _progress)
    emit(res, args.format, args.out or cfg.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    print(f"sweep over {args.dimension}: {args.values}", file=sys.stderr)
    res = sweep(cfg, args.dimension, args.values, _progress)
    emit(res, args.format, args.out or cfg.output)
    return EXIT_OK


BOUND_COLUMNS = ("bound", "alpha", "beta", "theta", "gamma", "delta", "c1", "c2", "kappa", "feasible", "violated")


def cmd_bounds(args) -> int:
    nan = math.nan
    rows = []
    beta, theta, gamma = args.beta, args.theta, args.gamma
    if args.find_beta:
        beta, theta, gamma = find_beta(args.alpha)
    b = lcfs_bound(args.alpha, beta, theta, gamma)
    rows.append({
        "bound": "fractional-lcfs", "alpha": args.alpha, "beta": beta, "theta": theta, "gamma": gamma,
        "delta": nan, "c1": b.c1 if b.c1 is not None else nan, "c2": b.c2 if b.c2 is not None else nan,
        "kappa": b.kappa if b.kappa is not None else nan, "feasible": b.feasible,
        "violated": ";".join(b.violated_conditions),
    })
    try:
        mu = pa_equi_bound(args.alpha, args.delta)
        c1, c2 = pa_equi_constants(args.alpha, args.delta)
        ok, why = True, ""
    except ValueError as exc:
        mu = c1 = c2 = nan
        ok, why = False, str(exc)
    rows.append({
        "bound": "pa-equi", "alpha": args.alpha, "beta": nan, "theta": nan, "gamma": nan, "delta": args.delta,
        "c1": c1, "c2": c2, "kappa": mu, "feasible": ok, "violated": why,
    })
    _write_rows(rows, BOUND_COLUMNS, args.format, args.out)
    return EXIT_OK


def _verify_workload(args, time_zero: bool):
    if args.workload:
        return load_workload(args.workload)
    seed = 0 if args.seed is None else args.seed
    return small_random_workload(seed, args.jobs, time_zero=time_zero)


def cmd_verify(args) -> int:
    f = SpeedupFunction(args.alpha)
    policy = PolicyKind.parse(args.policy)
    comparison = PolicyKind.parse(args.comparison)
    if policy is PolicyKind.FRACTIONAL_LCFS:
        if args.gamma is None:
            beta, theta, gamma = find_beta(args.alpha)
        else:
            beta, theta, gamma = args.beta, args.theta, args.gamma
        params = PolicyParams(beta, theta, args.delta)
        b = lcfs_bound(args.alpha, beta, theta, gamma)
        if not b.feasible:
            raise ValueError(f"parameters violate {', '.join(b.violated_conditions)}")
        jobs = _verify_workload(args, time_zero=False)
        ta = run(jobs, policy, params, f, args.servers)
        tc = run(jobs, comparison, params, f, args.servers)
        jumps = verify_jumps(ta, tc, b.c1, b.c2, f)
        drifts = verify_drifts_lcfs(ta, tc, params, gamma, f)
    elif policy is PolicyKind.PA_EQUI:
        params = PolicyParams(delta=args.delta)
        c1, c2 = pa_equi_constants(args.alpha, args.delta)
        jobs = _verify_workload(args, time_zero=True)
        ta = run(jobs, policy, params, f, args.servers)
        tc = run(jobs, comparison, params, f, args.servers)
        jumps = verify_jumps(ta, tc, c1, c2, f, time_zero=True)
        drifts = verify_drifts_pa_equi(ta, tc, params, f)
    else:
        raise ValueError("verify supports --policy flcfs or pa-equi")
    cols = ("interval_start", "interval_end", "side", "drift", "bound", "margin", "applicable")
    rows = [{c: getattr(r, c) for c in cols} for r in drifts.rows]
    _write_rows(rows, cols, args.format, args.out)
    print(
        f"verify: {len(jobs)} jobs, {jumps.checked} jump points (max jump {jumps.max_jump:.3g}), "
        f"{drifts.applicable_rows} applicable drift rows, worst margin {drifts.worst_margin:.3g}",
        file=sys.stderr,
    )
    if not (jumps.passed and drifts.passed):
        raise CheckFailed(f"jumps passed={jumps.passed}, drifts passed={drifts.passed}")
    return EXIT_OK


ORACLE_COLUMNS = ("jobs", "servers", "grid", "dt", "coarse", "refined", "slack", "relative_change",
                  "lower_bound", "policy", "flow_time", "ratio")


def cmd_oracle(args) -> int:
    f = SpeedupFunction(args.alpha)
    if not args.workload:
        raise ValueError("oracle needs --workload <file> with at most 3 jobs")
    jobs = load_workload(args.workload)
    res = brute_force_opt(jobs, args.servers, f, args.grid, args.dt)
    row = {
        "jobs": len(jobs), "servers": args.servers, "grid": args.grid, "dt": args.dt,
        "coarse": res.coarse, "refined": res.refined, "slack": res.slack,
        "relative_change": res.relative_change, "lower_bound": opt_lower_bound(jobs, args.servers, f),
        "policy": "", "flow_time": math.nan, "ratio": math.nan,
    }
    if args.policy:
        kind = PolicyKind.parse(args.policy[0])
        tr = run(jobs, kind, PolicyParams(args.beta, args.theta, args.delta), f, args.servers)
        row.update(policy=kind.value, flow_time=tr.flow_time, ratio=empirical_ratio(tr.flow_time, jobs, args.servers, f, res))
    _write_rows([row], ORACLE_COLUMNS, args.format, args.out)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, servers: float = 10.0, beta: float = 1.0, theta: float = 0.25) -> None:
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--servers", type=float, default=servers)
    p.add_argument("--policy", action="append", help="policy name; repeat for several")
    p.add_argument("--beta", type=float, default=beta)
    p.add_argument("--theta", type=float, default=theta)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--workload", help="workload JSON file")


def _add_experiment(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arrival-rate", type=float, default=5.0)
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--mean-phases", type=float, default=7.0)
    p.add_argument("--mean-size", type=float, default=5.0)
    p.add_argument("--first-phase", choices=("random", "elastic", "inelastic"), default="random")
    p.add_argument("--profile", type=_floats, help="fixed phase sizes, e.g. 1,10,1,10")
    p.add_argument("--replications", type=int, help="default 200, or the config's value")
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasesched", description="Scheduling simulator for jobs with elastic and in-elastic phases.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run replicated experiments")
    _add_common(s)
    _add_experiment(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run one experiment per parameter value")
    _add_common(s)
    _add_experiment(s)
    s.add_argument("--dimension", choices=("arrival_rate", "beta", "servers"), required=True)
    s.add_argument("--values", type=_floats, required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("bounds", help="competitive-ratio constants")
    _add_common(s, beta=1 / 6, theta=1 / 72)
    s.add_argument("--gamma", type=float, default=1 / 72)
    s.add_argument("--find-beta", action="store_true", help="search beta, theta, gamma for --alpha")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("verify", help="check potential jumps and drifts on a trace pair")
    _add_common(s, servers=2.0)
    s.add_argument("--comparison", default="pa-fcfs")
    s.add_argument("--jobs", type=int, default=8, help="size of the generated workload")
    s.add_argument("--gamma", type=float, help="with --beta and --theta; default: found by search")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("oracle", help="brute-force optimum on a tiny workload")
    _add_common(s, servers=2.0)
    s.add_argument("--grid", type=float, default=0.25)
    s.add_argument("--dt", type=float, default=0.125)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.command == "verify":
        args.policy = (args.policy or ["flcfs"])[0]
    try:
        return args.func(args)
    except (LivelockError, CheckFailed, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
