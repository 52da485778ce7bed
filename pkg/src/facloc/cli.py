"""Command-line entry point.

Options resolve as: command-line flag, else the ``--config`` JSON file, else
the built-in default. Exit status is 0 on success, 1 on a computation error,
2 on a usage error and 3 when ``verify`` finds a failing invariant.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import experiments as ex
from .geometry import EmptyInputError, PointFormatError, read_points_csv, uniform_sample, write_points_csv
from .radii import all_radii
from .solvers import ConvergenceError, SizeLimitError, exact_cost, grid_cost, mp_greedy, restricted_exact

DEFAULTS = {
    "gen": {"n": 100, "seed": 0, "out": None},
    "radii": {"seed": 0, "in": None, "out": None},
    "solve": {"seed": 0, "in": None, "out": None, "solver": "greedy", "gamma": 2.0, "k": None},
    "experiment": {
        "seed": 0,
        "n": [2**k for k in range(10, 18)],
        "trials": 30,
        "statistic": "cost_greedy",
        "gamma": 2.0,
        "out": None,
        "workers": None,
        "csv": None,
        "plot_dir": None,
        "n_max": 2**16,
        "m_min": 256,
    },
    "verify": {
        "seed": 0,
        "instances": 1000,
        "exact_instances": 200,
        "increment_instances": 100,
        "max_n": 200,
        "gamma": 2.0,
        "groups": ["radii", "solvers"],
        "report": None,
        "inject_fault": False,
    },
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--seed", type=int, help="random seed (default 0)")

    p = argparse.ArgumentParser(prog="facloc", description="Radius geometry and solvers for random facility location.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="sample uniform points to CSV")
    g.add_argument("--n", type=int)
    g.add_argument("--out")

    r = sub.add_parser("radii", parents=[common], help="per-point radii of a point CSV")
    r.add_argument("--in", dest="in_")
    r.add_argument("--out")

    s = sub.add_parser("solve", parents=[common], help="solve facility location on a point CSV")
    s.add_argument("--solver", choices=["exact", "restricted", "greedy", "grid"])
    s.add_argument("--in", dest="in_")
    s.add_argument("--gamma", type=float)
    s.add_argument("--k", type=int)
    s.add_argument("--out")

    e = sub.add_parser("experiment", parents=[common], help="Monte-Carlo scaling experiments")
    e.add_argument("kind", choices=["scaling", "concentration", "increment"])
    e.add_argument("--statistic", choices=list(ex.STATISTICS))
    e.add_argument("--n", type=_int_list, help="comma-separated n values")
    e.add_argument("--trials", type=int)
    e.add_argument("--gamma", type=float)
    e.add_argument("--workers", type=int)
    e.add_argument("--out")
    e.add_argument("--csv", help="also write trial records as CSV")
    e.add_argument("--plot-dir", help="directory for log_n,log_value series files")
    e.add_argument("--n-max", type=int, help="largest prefix size (increment)")
    e.add_argument("--m-min", type=int, help="smallest prefix size (increment)")

    v = sub.add_parser("verify", parents=[common], help="check radius and solver invariants")
    v.add_argument("--instances", type=int)
    v.add_argument("--exact-instances", type=int)
    v.add_argument("--increment-instances", type=int)
    v.add_argument("--max-n", type=int)
    v.add_argument("--gamma", type=float)
    v.add_argument("--groups", type=_str_list, help="radii,solvers")
    v.add_argument("--report", help="write the JSON report here")
    v.add_argument("--inject-fault", action="store_true", default=None, help="self-test: corrupt one radius")
    return p


def resolve(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[args.command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise UsageError(f"cannot read config {args.config}: {err}") from None
        unknown = set(loaded) - set(opts)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        opts.update(loaded)
    for key, value in vars(args).items():
        key = "in" if key == "in_" else key
        if key in opts and value is not None:
            opts[key] = value
    return opts


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(o: dict) -> int:
    X = uniform_sample(o["n"], o["seed"])
    _emit(write_points_csv(None, X), o["out"])
    return 0


def _load(o: dict):
    if not o["in"]:
        raise UsageError("--in is required")
    return read_points_csv(o["in"])


def cmd_radii(o: dict) -> int:
    X = _load(o)
    prof = all_radii(X)
    rows = ["index,x,y,r"] + [f"{i},{x!r},{y!r},{r!r}" for i, ((x, y), r) in enumerate(zip(X.coords.tolist(), prof.radii.tolist()))]
    summary = json.dumps(prof.summary())
    # the CSV goes to --out or stdout; the summary goes to whichever stream is left
    if o["out"]:
        Path(o["out"]).write_text("\n".join(rows) + "\n")
        print(summary)
    else:
        sys.stdout.write("\n".join(rows) + "\n")
        print(summary, file=sys.stderr)
    return 0


def cmd_solve(o: dict) -> int:
    X = _load(o)
    solver = o["solver"]
    if solver == "exact":
        sol = exact_cost(X)
    elif solver == "restricted":
        sol = restricted_exact(X)
    elif solver == "greedy":
        sol = mp_greedy(X, all_radii(X), o["gamma"])
    elif solver == "grid":
        sol = grid_cost(X, o["k"])
    else:
        raise UsageError(f"unknown solver {solver!r}")
    _emit(json.dumps(sol.to_json(solver)) + "\n", o["out"])
    return 0


def cmd_experiment(o: dict, kind: str) -> int:
    workers = o["workers"] or ex.default_workers()
    start = time.perf_counter()
    if kind == "increment":
        result = ex.run_increment_profile(o["n_max"], o["trials"], o["seed"], m_min=o["m_min"], workers=workers)
        payload = result.to_json()
        print(
            f"mean_r exponent {result.fit.exponent:.4f} +/- {result.fit.stderr_exponent:.4f}; "
            f"partial-sum exponent {result.partial_fit.exponent:.4f}",
            file=sys.stderr,
        )
    else:
        try:
            cfg = ex.ExperimentConfig(
                n_list=o["n"],
                trials=o["trials"],
                master_seed=o["seed"],
                statistic=o["statistic"],
                gamma=o["gamma"],
                output_path=o["out"],
                workers=workers,
            )
        except ValueError as err:
            raise UsageError(str(err)) from None
        result = ex.run_scaling(cfg) if kind == "scaling" else ex.run_concentration(cfg)
        payload = result.to_json()
        stat = cfg.statistic
        fit = result.fits[stat]
        msg = f"{stat}: mean exponent {fit.exponent:.4f} +/- {fit.stderr_exponent:.4f}"
        if kind == "concentration" and f"{stat}.std" in result.fits:
            sf = result.fits[f"{stat}.std"]
            msg += f"; std exponent {sf.exponent:.4f} +/- {sf.stderr_exponent:.4f} (1/6 = {1 / 6:.4f})"
            if result.low_confidence:
                msg += " [low confidence]"
        print(msg, file=sys.stderr)
        if o["csv"]:
            ex.write_records_csv(o["csv"], result.records)
    timing = {"seconds": time.perf_counter() - start, "workers": workers}
    if o["out"]:
        ex.save_results(o["out"], payload, timing)
    else:
        sys.stdout.write(ex.dumps_results(payload))
    if o["plot_dir"]:
        ex.write_plot_data(o["plot_dir"], result.plot_series())
    return 0


def cmd_verify(o: dict) -> int:
    try:
        cfg = ex.VerifyConfig(
            instances=o["instances"],
            max_n=o["max_n"],
            exact_instances=o["exact_instances"],
            increment_instances=o["increment_instances"],
            seed=o["seed"],
            gamma=o["gamma"],
            groups=tuple(o["groups"]),
            inject_fault=bool(o["inject_fault"]),
        )
    except ValueError as err:
        raise UsageError(str(err)) from None
    report = ex.verify_properties(cfg)
    for line in report.lines():
        print(line)
    for key, value in report.measurements.items():
        print(f"measured {key}: {value}", file=sys.stderr)
    for c in report.failures:
        print(f"counterexample for {c.name}:\n{c.counterexample}", end="")
    if o["report"]:
        Path(o["report"]).write_text(json.dumps(report.to_json(), indent=1) + "\n")
    return 0 if report.passed else 3


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    try:
        o = resolve(args)
        print(f"seed: {o['seed']}", file=sys.stderr)
        if args.command == "gen":
            return cmd_gen(o)
        if args.command == "radii":
            return cmd_radii(o)
        if args.command == "solve":
            return cmd_solve(o)
        if args.command == "experiment":
            return cmd_experiment(o, args.kind)
        return cmd_verify(o)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (SizeLimitError, ConvergenceError, EmptyInputError, PointFormatError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
