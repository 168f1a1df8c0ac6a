"""Command line entry point: ``mdpde {simulate,fit,experiment,infer}``.

Exit status is 0 on success, 1 on usage or input errors and 2 on
numerical failures.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .estimator import MdpdeConfig, fit
from .exceptions import (
    DomainError,
    InitializationError,
    NumericalFailure,
    SimulationDiverged,
    SingularMatrixError,
)
from .experiment import ExperimentConfig, run_experiment
from .inference import inference_report, wald_test
from .simulate import ContaminationSpec, SamplePath, contaminate, simulate_path, step_size

NUMERICAL_ERRORS = (
    DomainError,
    InitializationError,
    NumericalFailure,
    SimulationDiverged,
    SingularMatrixError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser():
    parser = _Parser(prog="mdpde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("simulate", help="simulate one (optionally contaminated) path to CSV")
    p.add_argument("--config", help="TOML/JSON file with model parameters (B_true, b_true, ...)")
    p.add_argument("--n", type=int, default=1000, help="number of increments")
    p.add_argument("--h", type=float, help="step size (default n ** -0.55)")
    p.add_argument("--eps", type=float, default=0.0, help="contaminated fraction")
    p.add_argument("--kappa", type=float, help="contamination magnitude (default 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")

    p = sub.add_parser("fit", help="fit a path CSV; print fit and inference JSON")
    p.add_argument("path", help="CSV with columns t, x1, ..., xd")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--multistart", action="store_true")
    p.add_argument("--beta-null", type=float, nargs="+", help="null drift (default zeros)")
    p.add_argument("--out", help="output JSON (default stdout)")

    p = sub.add_parser("experiment", help="run the contamination study grid")
    p.add_argument("--config", help="TOML/JSON file mirroring ExperimentConfig fields")
    p.add_argument("--n", type=int, nargs="+", help="sample sizes")
    p.add_argument("--eps", type=float, nargs="+", help="contamination fractions")
    p.add_argument("--alpha", type=float, nargs="+", help="tuning parameters")
    p.add_argument("--kappa", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("infer", help="Wald test of a fitted drift against a null value")
    p.add_argument("fit_json", help="JSON written by the fit subcommand")
    p.add_argument("--beta-null", type=float, nargs="+", required=True)
    p.add_argument("--out", help="output JSON (default stdout)")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _experiment_config(args):
    overrides = {
        "n_grid": args.n,
        "eps_grid": args.eps,
        "alpha_grid": args.alpha,
        "kappa": getattr(args, "kappa", None),
        "reps": getattr(args, "reps", None),
        "base_seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out", None),
    }
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_simulate(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    kappa = cfg.kappa if args.kappa is None else args.kappa
    h = step_size(args.n) if args.h is None else args.h
    seeds = np.random.SeedSequence(args.seed).spawn(2)
    path = simulate_path(cfg.drift(), np.asarray(cfg.sigma_true, float),
                         np.asarray(cfg.x0, float), args.n, h, seed=seeds[0])
    path = contaminate(path, ContaminationSpec(args.eps, kappa, seeds[1]))
    path.to_csv(args.out or sys.stdout)
    return 0


def _cmd_fit(args):
    path = SamplePath.from_csv(args.path)
    cfg = MdpdeConfig(alpha=args.alpha, max_iters=args.max_iters, multistart=args.multistart)
    res = fit(path, cfg)
    report = inference_report(path, res.params, args.alpha, args.beta_null)
    payload = {
        "alpha": args.alpha,
        "n": path.n,
        "h": path.h,
        "converged": res.converged,
        "iterations": res.iterations,
        "objective": res.objective,
        "grad_norm": res.grad_norm,
        "B": res.params.B.tolist(),
        "b": res.params.b.tolist(),
        "sigma": res.params.sigma.tolist(),
        "beta": res.params.beta.tolist(),
        "inference": report.to_dict(),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _cmd_experiment(args):
    written = run_experiment(_experiment_config(args))
    for p in written:
        print(p)
    return 0


def _cmd_infer(args):
    with open(args.fit_json) as fh:
        data = json.load(fh)
    try:
        beta = np.asarray(data["beta"], float)
        cov = np.asarray(data["inference"]["sigma_beta"], float)
        n, h = int(data["n"]), float(data["h"])
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{args.fit_json}: not a fit result ({exc})") from None
    if len(args.beta_null) != beta.size:
        raise UsageError(f"--beta-null needs {beta.size} values, got {len(args.beta_null)}")
    stat, pval = wald_test(beta, args.beta_null, cov, n, h)
    out = {"wald_stat": stat, "wald_df": int(beta.size), "wald_pvalue": pval,
           "beta_null": list(args.beta_null)}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "experiment": _cmd_experiment,
    "infer": _cmd_infer,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"mdpde: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"mdpde: error: {exc}", file=sys.stderr)
        return 1
