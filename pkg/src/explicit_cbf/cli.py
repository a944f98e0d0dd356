"""Command-line entry point: ``explicit-cbf {bench,simulate,regions,check}``.

Exit codes: 0 success, 1 validation failure, 2 infeasible, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .affine import affine_problem_from, enumerate_regions, lipschitz_constant, write_region_table
from .bench import BenchDisagreement, format_summary, run_bench, summarize, write_bench_csv
from .frontend import assemble, check_barrier
from .oracle import BudgetExceeded
from .qp_core import RankDeficient, WeightMatrix
from .runtime import InfeasibleError, NonFiniteState, simulate
from .scenarios import BUILTINS, Scenario, ScenarioError, parse_scenario, read_scenario_data

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    # usage errors are validation failures, not exit status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def load(source: str, dt: float | None = None, horizon: float | None = None,
         failures: list | None = None) -> Scenario:
    """Load a scenario file, or a builtin by name, applying ``dt``/``horizon`` overrides."""
    if Path(source).exists():
        data = read_scenario_data(source)
    elif source in BUILTINS:
        data = {"schema_version": 1, "kind": "builtin", "builtin": source}
    else:
        raise ScenarioError(f"{source}: no such file or builtin scenario")
    if isinstance(data, dict):
        data = dict(data)
        if dt is not None:
            data["dt"] = dt
        if horizon is not None:
            data["horizon"] = horizon
    return parse_scenario(data, failures)


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_bench(args) -> int:
    if args.trials < 1:
        _err("--trials must be >= 1")
        return EXIT_VALIDATION
    if any(v < 1 for v in args.m) or any(v < 0 for v in args.p):
        _err("need m >= 1 and p >= 0")
        return EXIT_VALIDATION
    try:
        records = run_bench(args.m, args.p, args.trials, args.seed)
    except BenchDisagreement as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    if args.out:
        write_bench_csv(args.out, records, args.seed)
    print(format_summary(summarize(records)))
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load(args.scenario, args.dt, args.horizon)
    traj = simulate(sc.problem, sc.x0, sc.horizon, sc.dt, theta=args.theta)
    if args.out:
        traj.to_csv(args.out)
    hmin = float(traj.barrier_values.min()) if traj.barrier_values.size else float("inf")
    print(f"scenario        {sc.name}")
    print(f"min_h           {hmin:.6g}")
    print(f"theta_calls     {traj.theta_calls}")
    print(f"total_steps     {len(traj)}")
    print(f"mean_eval_us    {1e6 * float(np.mean(traj.eval_seconds)):.1f}")
    for label, fun in sc.separation_checks:
        worst = min(fun(x) for x in traj.states)
        print(f"min_margin[{label}] {worst:.6g}")
    return EXIT_OK


def cmd_regions(args) -> int:
    sc = load(args.scenario, args.dt, args.horizon)
    if not sc.affine:
        _err(f"scenario {sc.name!r} is not affine; regions need constant-b data")
        return EXIT_VALIDATION
    try:
        aff = affine_problem_from(sc.problem)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    laws = enumerate_regions(aff)
    nonempty = [law for law in laws if not law.empty]
    L = lipschitz_constant(laws) if nonempty else None
    if args.out:
        write_region_table(args.out, laws, aff.n, aff.m, aff.p, L, meta={"scenario": sc.name})
    print(f"regions         {len(laws)}")
    print(f"nonempty        {len(nonempty)}")
    print(f"lipschitz       {L:.6g}" if L is not None else "lipschitz       n/a")
    for law in laws:
        flag = "empty" if law.empty else "nonempty"
        print(f"  {{{','.join(map(str, law.index_set))}}} {flag}")
    return EXIT_OK


def check_scenario(sc: Scenario, failures: list, n_states: int = 5, seed: int = 0) -> list:
    """Registration self-checks; appends failure messages to ``failures``."""
    prob = sc.problem
    sys_, n, m = prob.system, prob.system.n, prob.system.m
    try:
        WeightMatrix(prob.weight.R)
    except ValueError as exc:
        failures.append(f"weight: {exc}")
    if np.asarray(sc.x0).shape != (n,):
        failures.append(f"x0: expected shape ({n},), got {np.asarray(sc.x0).shape}")
        return failures
    rng = np.random.default_rng(seed)
    states = np.vstack([sc.x0, sc.x0 + 0.1 * rng.standard_normal((n_states - 1, n))])
    for bar in prob.barriers:
        failures.extend(check_barrier(bar, sys_, states))
    try:
        k = np.asarray(prob.nominal(sc.x0, 0.0), dtype=float)
        if k.shape != (m,):
            failures.append(f"nominal: returns shape {k.shape}, expected ({m},)")
        f = np.asarray(sys_.drift(sc.x0, 0.0), dtype=float)
        g = np.asarray(sys_.input_matrix(sc.x0), dtype=float)
        if f.shape != (n,):
            failures.append(f"drift: returns shape {f.shape}, expected ({n},)")
        if g.shape != (n, m):
            failures.append(f"input matrix: shape {g.shape}, expected ({n}, {m})")
        cs, kk, W = assemble(prob, sc.x0, 0.0)
        if cs.p != prob.n_rows or cs.m != prob.decision_dim or W.m != prob.decision_dim:
            failures.append("assembled QP dimensions disagree with the problem")
    except (ValueError, RankDeficient) as exc:
        failures.append(f"dimensions: {exc}")
    return failures


def cmd_check(args) -> int:
    failures: list = []
    sc = load(args.scenario, args.dt, args.horizon, failures)
    check_scenario(sc, failures, seed=args.seed)
    if failures:
        for msg in failures:
            print(f"FAIL {msg}")
        return EXIT_VALIDATION
    print(f"OK {sc.name}: {len(sc.problem.barriers)} barriers, n={sc.problem.system.n}, "
          f"m={sc.problem.system.m}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="explicit-cbf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("scenario", help="scenario file or builtin name "
                           f"({', '.join(sorted(BUILTINS))})")
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--theta", choices=("enumerate", "activeset"), default="activeset")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--horizon", type=float, default=None)

    b = sub.add_parser("bench", help="time the oracle realizations on random QPs")
    common(b, scenario=False)
    b.add_argument("--m", type=_int_list, default=[2, 4, 6, 8, 10], help="e.g. 2,4,10")
    b.add_argument("--p", type=_int_list, default=[1, 2, 4, 8], help="e.g. 1,2,4,8")
    b.add_argument("--trials", type=int, default=500)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("simulate", help="closed-loop sample-and-hold simulation")
    common(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("regions", help="export the explicit region table")
    common(r)
    r.set_defaults(func=cmd_regions)

    c = sub.add_parser("check", help="validate a scenario without simulating")
    common(c)
    c.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        _err(f"{exc} (step {exc.step})")
        return EXIT_INFEASIBLE
    except BudgetExceeded as exc:
        _err(str(exc))
        return EXIT_BUDGET
    except NonFiniteState as exc:
        _err(str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
