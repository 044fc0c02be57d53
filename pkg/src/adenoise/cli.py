"""Command-line entry point: ``adenoise {generate,denoise,bench,certify}``."""
import argparse
import math
import sys

import numpy as np

from .convolution import build_operator
from .errors import ConfigError, DivergedError, InvalidArgument
from .estimators import KINDS, EstimatorConfig, build_problem, solve
from .experiment import load_config, run_experiment
from .scenarios import SCENARIO_KINDS, Scenario
from .signal_io import fmt, read_signal, read_solution, write_signal, write_solution
from .signals import ComplexSignal, complex_norm
from .solvers import SaddleProblem

BENCH_EPILOG = """\
Any configuration key can be overridden as --section.key=value (values are
parsed as YAML), e.g. --estimator.max_iter=500 --snr=[4,16] --trials=20.
"""


def _parser():
    p = argparse.ArgumentParser(prog="adenoise", description="Adaptive convolution-type denoising.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic signal (and optionally its noisy version)")
    g.add_argument("--scenario", choices=SCENARIO_KINDS, default="ransin")
    g.add_argument("--s", type=int, default=4, help="number of frequencies (pairs for cohsin)")
    g.add_argument("--m", type=int, default=0, help="polynomial degree (modsin)")
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--snr", type=float, default=16.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--output", required=True, help="clean signal CSV (tau,re,im)")
    g.add_argument("--noisy", help="also write the noisy observations here")

    d = sub.add_parser("denoise", help="fit a filter to observations on [-n, n]")
    d.add_argument("--input", required=True, help="observations CSV (tau,re,im), tau = -n..n")
    d.add_argument("--kind", choices=KINDS, default="con-uf")
    d.add_argument("--r-bar", type=float)
    d.add_argument("--lam", help="penalty weight or 'auto'")
    d.add_argument("--sigma", type=float)
    d.add_argument("--delta", type=float, default=0.05)
    d.add_argument("--setup-u", choices=("l1", "l2"), default="l1")
    d.add_argument("--setup-v", choices=("l1", "l2"))
    d.add_argument("--stopping", choices=("budget", "certificate", "statistical"), default="budget")
    d.add_argument("--max-iter", type=int, default=1000)
    d.add_argument("--tolerance", type=float)
    d.add_argument("--adaptive", action="store_true", help="backtracking stepsize (saddle-point kinds)")
    d.add_argument("--output", required=True, help="denoised signal CSV on [0, n]")
    d.add_argument("--filter", help="write the time-domain filter on [0, n] here")
    d.add_argument("--solution", help="write spectral iterates and certificate claims (JSON) here")

    b = sub.add_parser("bench", help="run a multi-trial experiment", epilog=BENCH_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    b.add_argument("config", nargs="?", help="YAML experiment file (defaults are used when omitted)")
    b.add_argument("--out-dir", help="directory for result files (overrides output.dir)")
    b.add_argument("--workers", type=int, help="worker processes (overrides workers)")

    c = sub.add_parser("certify", help="re-check the certificate stored in a solution file")
    c.add_argument("--input", required=True, help="the observations the solution was computed from")
    c.add_argument("--solution", required=True)
    c.add_argument("--slack", type=float, default=1e-10)
    return p


def _lam(value):
    if value is None or value == "auto":
        return value
    return float(value)


def cmd_generate(args):
    scenario = Scenario(args.scenario, args.s, args.n, args.snr, args.m)
    x, y = scenario.draw(args.seed, args.trial)
    write_signal(args.output, x)
    if args.noisy:
        write_signal(args.noisy, y)
    print(f"{scenario.name}: n={scenario.n} sigma={fmt(scenario.sigma)} dim(S)={scenario.subspace_dim}")
    return 0


def cmd_denoise(args):
    y = read_signal(args.input)
    cfg = EstimatorConfig(
        kind=args.kind, r_bar=args.r_bar, lam=_lam(args.lam), sigma=args.sigma, delta=args.delta,
        setup_u=args.setup_u, setup_v=args.setup_v, stopping=args.stopping, max_iter=args.max_iter,
        tolerance=args.tolerance, adaptive=args.adaptive,
    )
    sol = solve(y, cfg)
    write_signal(args.output, ComplexSignal.one_sided(sol.denoised))
    if args.filter:
        write_signal(args.filter, sol.filter_time)
    tr = sol.trace
    if args.solution:
        payload = {
            "kind": cfg.kind, "r_bar": cfg.r_bar, "lam": sol.lam, "setup_u": cfg.setup_u,
            "setup_v": cfg.dual_setup, "iterations": tr.stop_iteration, "stop_reason": tr.stop_reason,
            "objective": tr.objective[-1] if tr.objective else None,
            "certificate": tr.certificate[-1] if tr.certificate else None,
            "u": sol.filter_spectral,
        }
        if tr.averaged is not None:
            payload["v"] = tr.averaged[sol.filter_spectral.size:]
        write_solution(args.solution, payload)
    print(f"{cfg.kind}: iterations={tr.stop_iteration} stop={tr.stop_reason} "
          f"objective={fmt(tr.objective[-1])} bound={fmt(tr.certificate[-1]) if tr.certificate else 'n/a'} "
          f"r={fmt(sol.r_realized)}")
    return 0


def cmd_bench(args, overrides):
    config = load_config(args.config, overrides)
    if args.workers is not None:
        config["workers"] = args.workers
    result = run_experiment(config, out_dir=args.out_dir)
    for entry in result.summary:
        fails = len(entry["failures"])
        print(f"{entry['scenario']} {entry['estimator']}/{entry['setup']}: "
              f"median l2 loss={entry['median_l2_loss']} mean stop={entry['mean_stop_iter']}"
              + (f" failures={fails}" if fails else ""))
    for name, path in result.files.items():
        print(f"wrote {name}: {path}")
    return 0


def cmd_certify(args):
    y = read_signal(args.input)
    data = read_solution(args.solution)
    if "v" not in data:
        print("no dual iterate stored: certificates exist for saddle-point kinds only")
        return 1
    op = build_operator(y)
    constrained = data["kind"].startswith("con-")
    cfg = EstimatorConfig(kind=data["kind"], r_bar=data["r_bar"] if constrained else None,
                          lam=None if constrained else data["lam"], setup_u=data["setup_u"], setup_v=data["setup_v"])
    problem = build_problem(op, cfg)
    if not isinstance(problem, SaddleProblem):
        print("not a saddle-point kind")
        return 1
    u = np.asarray(data["u"], dtype=float)
    v = np.asarray(data["v"], dtype=float)
    slack = args.slack
    ok = True
    if not math.isinf(problem.radius) and complex_norm(u, 1) > problem.radius * (1 + slack) + slack:
        print(f"primal iterate outside the ball: {complex_norm(u, 1)} > {problem.radius}")
        ok = False
    if complex_norm(v, problem.dual_q) > 1 + slack:
        print(f"dual iterate outside the unit ball: {complex_norm(v, problem.dual_q)}")
        ok = False
    gap = problem.primal_value(u) - problem.dual_value(v)
    claim = data.get("certificate")
    claim = math.inf if claim is None else float(claim)
    print(f"primal={fmt(problem.primal_value(u))} dual={fmt(problem.dual_value(v))} gap={fmt(gap)} claimed={fmt(claim)}")
    if not gap <= claim + slack * max(1.0, abs(claim)):
        print("certificate violated")
        ok = False
    print("verified" if ok else "FAILED")
    return 0 if ok else 1


def main(argv=None):
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    overrides = []
    if extra:
        if args.command != "bench" or any(not (e.startswith("--") and "=" in e) for e in extra):
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        overrides = [e[2:] for e in extra]
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "denoise":
            return cmd_denoise(args)
        if args.command == "bench":
            return cmd_bench(args, overrides)
        return cmd_certify(args)
    except (ConfigError, InvalidArgument, DivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
