"""Command-line front end: ``ogm plan | sample | run | estimate | bench``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, estimator, plan as plan_mod, records as rec, sampler, simulator
from .errors import DimensionError, OGMError, ParseError, PlanError, SolverError
from .observable import load_observable

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
PLAN_SCHEMES = ("l1", "ldf", "cs", "lbcs", "ogm-v1", "ogm-v2")


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _budgets(s):
    return [_positive_int(t) for t in s.split(",") if t.strip()]


def load_state_spec(spec: str, obs=None, n=None):
    """``ground``, ``ghz``, ``random:SEED``, ``zero`` or a state file path."""
    n = obs.n if obs is not None else n
    if spec == "ground":
        if obs is None:
            raise PlanError("--state ground needs --ham")
        return simulator.ground_state(obs)[0]
    if spec in ("ghz", "zero") or spec.startswith("random:"):
        if n is None:
            raise PlanError(f"--state {spec} needs a qubit count (pass --ham)")
        if spec == "ghz":
            return simulator.ghz_state(n)
        if spec == "zero":
            return simulator.basis_state(n, 0)
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"bad random state seed in {spec!r}") from None
        return simulator.random_real_state(n, seed)
    state = simulator.load_state(spec)
    if n is not None and state.n != n:
        raise DimensionError(f"state file has {state.n} qubits, observable has {n}")
    return state


def cmd_plan(args):
    obs = load_observable(args.ham)
    p = bench.build_plan(args.scheme, obs, T=args.budget, seed=args.seed, restarts=args.restarts,
                         prune=not args.no_prune)
    _emit(plan_mod.dumps(plan_mod.plan_to_dict(p)), args.out)


def cmd_sample(args):
    p = plan_mod.load_plan(args.plan)
    if args.mode == "iid":
        mlist = sampler.draw_iid(p, args.budget, args.seed)
    else:
        mlist = sampler.partial_derandomize(p, args.budget, args.seed, residual=args.residual)
    _emit(json.dumps(sampler.list_to_dict(mlist), indent=2) + "\n", args.out)


def cmd_run(args):
    obs = load_observable(args.ham) if args.ham else None
    mlist = sampler.load_list(args.list)
    if args.plan:
        p = plan_mod.load_plan(args.plan)
        if p.n != mlist.n:
            raise DimensionError(f"plan acts on {p.n} qubits, list on {mlist.n}")
    if obs is not None and obs.n != mlist.n:
        raise DimensionError(f"observable acts on {obs.n} qubits, list on {mlist.n}")
    state = load_state_spec(args.state, obs, mlist.n)
    records = rec.simulate_list(state, mlist, args.seed)
    _emit(json.dumps(rec.records_to_dict(records, mlist.n), indent=2) + "\n", args.out)


def cmd_estimate(args):
    obs = load_observable(args.ham)
    records = rec.load_records(args.records)
    if args.estimator == "unified":
        if not args.plan:
            raise PlanError("--estimator unified needs --plan")
        p = plan_mod.load_plan(args.plan)
        if p.n != obs.n:
            raise DimensionError(f"plan acts on {p.n} qubits, observable on {obs.n}")
        report = estimator.unified_estimate(records, obs, p)
    else:
        report = estimator.fixed_list_estimate(records, obs)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(estimator.report_json(report, obs, estimator=args.estimator), args.out)


def cmd_bench(args):
    obs = load_observable(args.ham)
    state = load_state_spec(args.state, obs)
    external = sampler.load_list(args.external_list) if args.external_list else None
    schemes = [s for s in args.schemes.split(",") if s]
    report = bench.run_benchmark(obs, state, schemes=schemes, budgets=args.budgets, reps=args.reps,
                                 seed=args.seed, mode=args.mode, external=external, timings=args.timings,
                                 plan_budget=args.plan_budget, restarts=args.restarts)
    if args.json:
        Path(args.json).write_text(report.to_json())
    _emit(report.to_json() if args.format == "json" else report.to_text(), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ogm", description="Plan, sample, simulate and estimate Pauli observables.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="build a measurement plan from a .ham file")
    p.add_argument("--scheme", choices=PLAN_SCHEMES, required=True)
    p.add_argument("--ham", required=True)
    p.add_argument("--budget", type=_positive_int, default=1000, help="sample budget T for the pruning penalty")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample", help="turn a plan into a list of bases with shot counts")
    p.add_argument("--plan", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)
    p.add_argument("--mode", choices=("iid", "derand"), default="iid")
    p.add_argument("--residual", choices=sampler.RESIDUAL_RULES, default="systematic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="simulate a measurement list on a state")
    p.add_argument("--ham")
    p.add_argument("--plan")
    p.add_argument("--list", required=True)
    p.add_argument("--state", default="ground", help="ground | ghz | zero | random:SEED | state file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("estimate", help="estimate the observable from measurement records")
    p.add_argument("--records", required=True)
    p.add_argument("--ham", required=True)
    p.add_argument("--plan")
    p.add_argument("--estimator", choices=("unified", "fixed-list"), default="unified")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="compare schemes by exact variance and RMSE")
    p.add_argument("--ham", required=True)
    p.add_argument("--state", default="ground")
    p.add_argument("--schemes", default="ldf,lbcs,ogm-v1")
    p.add_argument("--budgets", type=_budgets, default=[100, 1000, 10000])
    p.add_argument("--reps", type=_positive_int, default=bench.DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("iid", "derand"), default="iid")
    p.add_argument("--external-list", help="fixed list of bases reported as the 'external' row")
    p.add_argument("--plan-budget", type=_positive_int, default=1000)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte-reproducibility)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--json", help="also write the JSON report here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except FileNotFoundError as e:
        print(f"ogm: error: file not found: {e.filename}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as e:
        print(f"ogm: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OGMError, ValueError) as e:
        print(f"ogm: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError) as e:
        print(f"ogm: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
