"""Command-line front end.

    hnep solve --seed 1 --algo compare --out runs/seed1
    hnep solve --instance game.json --algo hsdm --out runs/file
    hnep check --seed 1 --out runs/check
    hnep generate --seed 1 --players 6 --dim 3 --out game.json

Exit codes: 0 success/convergence, 1 invalid input, 2 iteration budget
exhausted, 3 a verification check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional

from . import aggregative
from .aggregative import AggregativeGame, build_game_spec, load_instance, random_instance
from .errors import HnepError
from .game import GameSpec
from .operator import OperatorConfig
from .oracle import run_property_suite
from .solver import SolveResult, SolverConfig, StepsizeSchedule, random_start, run_fbf, run_hsdm

log = logging.getLogger("hnep")

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_CHECK = 0, 1, 2, 3


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace(path: Path, result: SolveResult, m: int) -> None:
    header = ["n", "residual", "lambda"] + [f"fu_{i + 1}" for i in range(m)]
    lines = [",".join(header)]
    for rec in result.trace:
        costs = rec.upper_costs or [math.nan] * m
        lines.append(",".join([str(rec.n), _fmt(rec.residual), _fmt(rec.lam)] + [_fmt(c) for c in costs]))
    path.write_text("\n".join(lines) + "\n")


def _summarize(spec: GameSpec, result: SolveResult) -> dict:
    x = result.final.x
    costs = [float(spec.upper_cost(i, x)) for i in range(spec.m)] if spec.upper_cost else []
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "final_residual": result.residual,
        "upper_costs": costs,
        "upper_cost_sum": math.fsum(costs),
        "x": [b.tolist() for b in x.blocks],
        "u": result.final.u.tolist(),
    }


def _load_game(args) -> AggregativeGame:
    if args.instance is not None:
        path = Path(args.instance)
        if not path.is_file():
            raise HnepError(f"instance file not found: {path}")
        return load_instance(path)
    if args.small is not None:
        return aggregative.SMALL_INSTANCES[args.small]()
    return random_instance(args.seed, args.players, args.dim)


def _source(args) -> dict:
    if args.instance is not None:
        return {"file": str(args.instance)}
    if args.small is not None:
        return {"builtin": args.small}
    return {"seed": args.seed, "players": args.players, "dim": args.dim}


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        operator=OperatorConfig(args.gamma, args.alpha, args.radius),
        schedule=StepsizeSchedule(args.lambda_scale, args.lambda_offset),
        max_iters=args.max_iters,
        residual_tol=args.tol,
        trace_every=args.trace_every,
    )


def cmd_solve(args) -> int:
    game = _load_game(args)
    spec = build_game_spec(game)
    cfg = _solver_config(args)
    cfg.operator.check(spec)
    start_seed = game.seed if game.seed is not None else args.seed
    xi0 = random_start(spec, start_seed)

    algos = ["fbf", "hsdm"] if args.algo == "compare" else [args.algo]
    runners = {"fbf": run_fbf, "hsdm": run_hsdm}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    summary = {
        "parameters": {
            "instance": _source(args),
            "start_seed": start_seed,
            "algo": args.algo,
            "gamma": args.gamma,
            "alpha": args.alpha,
            "radius": args.radius,
            "lambda_scale": args.lambda_scale,
            "lambda_offset": args.lambda_offset,
            "max_iters": args.max_iters,
            "tol": args.tol,
            "trace_every": args.trace_every,
            "start_distribution": "uniform[0,1]",
        },
        "instance": game.to_dict(),
        "constants": {"kappa_G": spec.kappa_G, "L_norm": spec.L_norm},
        "results": {},
    }
    all_converged = True
    for algo in algos:
        log.info("running %s on %s", algo, spec.name)
        result = runners[algo](spec, cfg, xi0)
        write_trace(out / f"trace_{algo}.csv", result, spec.m)
        summary["results"][algo] = _summarize(spec, result)
        all_converged &= result.converged
        log.info("%s: %d iterations, residual %.3e, converged=%s",
                 algo, result.iterations, result.residual, result.converged)
    if args.algo == "compare":
        fb, hs = summary["results"]["fbf"], summary["results"]["hsdm"]
        summary["comparison"] = {
            "hsdm_le_fbf_per_player": [h <= f for h, f in zip(hs["upper_costs"], fb["upper_costs"])],
            "hsdm_le_fbf_all_players": all(h <= f for h, f in zip(hs["upper_costs"], fb["upper_costs"])),
            "upper_cost_sum_difference": hs["upper_cost_sum"] - fb["upper_cost_sum"],
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if all_converged else EXIT_BUDGET


def cmd_check(args) -> int:
    game = _load_game(args)
    spec = build_game_spec(game)
    cfg = OperatorConfig(args.gamma, args.alpha, args.radius)
    reports = run_property_suite(spec, cfg, seed=args.check_seed)
    doc = {
        "instance": _source(args),
        "constants": {"kappa_G": spec.kappa_G, "L_norm": spec.L_norm},
        "all_passed": all(r.passed for r in reports),
        "checks": [r.to_dict() for r in reports],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "check.json").write_text(text)
    else:
        sys.stdout.write(text)
    for r in reports:
        log.info("%-22s %s  worst=%.3e  tol=%.1e", r.name, "PASS" if r.passed else "FAIL",
                 r.worst_violation, r.tolerance)
    failed = [r for r in reports if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.worst_violation - r.tolerance)
        print(f"check failed: {worst.name} (worst violation {worst.worst_violation:.6e}, "
              f"tolerance {worst.tolerance:.1e})", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_generate(args) -> int:
    game = _load_game(args)
    aggregative.save_instance(game, args.out)
    return EXIT_OK


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--instance", metavar="PATH", help="instance JSON document")
    src.add_argument("--small", choices=sorted(aggregative.SMALL_INSTANCES),
                     help="built-in small instance")
    p.add_argument("--seed", type=int, default=1, help="generator seed (default 1)")
    p.add_argument("--players", type=int, default=6, help="number of players m")
    p.add_argument("--dim", type=int, default=3, help="strategy dimension M")


def _add_operator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--radius", type=float, default=1e15)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hnep", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run FBF, HSDM, or both")
    _add_instance_args(solve)
    _add_operator_args(solve)
    solve.add_argument("--algo", choices=["fbf", "hsdm", "compare"], default="compare")
    solve.add_argument("--lambda-scale", type=float, default=1.0)
    solve.add_argument("--lambda-offset", type=float, default=3.0)
    solve.add_argument("--max-iters", type=int, default=100_000)
    solve.add_argument("--tol", type=float, default=1e-8)
    solve.add_argument("--trace-every", type=int, default=10)
    solve.add_argument("--out", required=True, metavar="DIR")
    solve.set_defaults(func=cmd_solve)

    check = sub.add_parser("check", help="run the verification suite on an instance")
    _add_instance_args(check)
    _add_operator_args(check)
    check.add_argument("--check-seed", type=int, default=0, help="seed for random test points")
    check.add_argument("--out", metavar="DIR", help="write check.json here instead of stdout")
    check.set_defaults(func=cmd_check)

    gen = sub.add_parser("generate", help="write an instance document")
    _add_instance_args(gen)
    gen.add_argument("--out", required=True, metavar="PATH")
    gen.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except HnepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
