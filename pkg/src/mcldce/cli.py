"""Command-line entry point: ``mcldce {gen,corrupt,train,experiment}``.

Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.
A one-line JSON summary, always carrying the seed, goes to stdout;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .centroid import CorrectionMode, correct_centroid, empirical_centroid
from .data import Provenance, gen_gaussian_mixture, load_csv, mixture_spec, save_csv
from .errors import ConfigError
from .evaluation import ExperimentConfig, accuracy, emit_report, run_experiment
from .noise import (estimate_priors, inject_noise, load_transition_csv, noisy_label_frequencies,
                    pairflip_T, save_matrix_csv, symmetric_T)
from .risk import RiskConfig, naive_mse_risk, objective, save_model_csv, train

MODES = {"paper-m": CorrectionMode.PAPER_M, "direct-t": CorrectionMode.DIRECT_T, "none": CorrectionMode.NONE}
SOLVERS = {"closed": "closed_form", "iterative": "iterative"}


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {s}")
    return v


def _summary(**fields):
    print(json.dumps(fields, sort_keys=True))


def cmd_gen(args, parser):
    if args.sigma <= 0:
        parser.error("--sigma must be positive")
    spec = mixture_spec(args.classes, args.dim, args.sigma, args.seed, args.separation, args.weights)
    ds = gen_gaussian_mixture(spec, args.n)
    save_csv(ds, args.out)
    _summary(command="gen", seed=args.seed, n=ds.n, d=ds.d, c=ds.c, out=args.out)


def cmd_corrupt(args, parser):
    upper = 0.5 if args.noise == "pairflip" else 1.0
    if not 0 <= args.rate < upper:
        parser.error(f"--rate must lie in [0, {upper}) for {args.noise} noise")
    ds = load_csv(args.inp, args.classes)
    T = (symmetric_T if args.noise == "symmetric" else pairflip_T)(ds.c, args.rate)
    noisy = inject_noise(ds, T, args.seed)
    save_csv(noisy, args.out)
    save_matrix_csv(T, args.t_out)
    flipped = int(np.sum(noisy.classes != ds.classes))
    _summary(command="corrupt", seed=args.seed, n=ds.n, c=ds.c, flipped=flipped,
             out=args.out, t_out=args.t_out)


def cmd_train(args, parser):
    mode = MODES[args.mode]
    if mode is not CorrectionMode.NONE and args.t is None:
        parser.error(f"--t is required with --mode {args.mode}")
    T = load_transition_csv(args.t) if args.t else None
    c = T.shape[0] if T is not None else args.classes
    ds = load_csv(args.train, c, Provenance.NOISY)
    if T is not None and T.shape[0] != ds.c:
        raise ValueError(f"transition matrix is {T.shape[0]}x{T.shape[0]} but data has {ds.c} classes")

    config = RiskConfig(lam=args.lam, mode=mode, trainer=SOLVERS[args.solver], step_size=args.step_size,
                        smoothing=args.smoothing, epochs=args.epochs, batch_size=args.batch_size,
                        decay_start=args.decay_start, optimizer=args.optimizer, seed=args.seed)
    mu = empirical_centroid(ds)
    priors = None
    if T is not None:
        priors = estimate_priors(T, noisy_label_frequencies(ds))
        mu = correct_centroid(mu, T, priors, mode)
    model = train(ds.features, mu, config)
    save_model_csv(model, args.out_model)

    metrics = {
        "seed": args.seed,
        "mode": mode.value,
        "solver": config.trainer.value,
        "lambda": args.lam,
        "n": ds.n,
        "d": ds.d,
        "c": ds.c,
        "priors": None if priors is None else priors.tolist(),
        "objective": objective(model, ds.features, mu, args.lam),
        "noisy_label_mse": naive_mse_risk(model, ds),
    }
    if args.test:
        test = load_csv(args.test, ds.c)
        metrics["test_accuracy"] = accuracy(model, test)
    with open(args.out_metrics, "w") as f:
        json.dump(metrics, f, indent=2, sort_keys=True)
        f.write("\n")
    _summary(command="train", **{k: metrics[k] for k in ("seed", "mode", "solver", "objective")},
             test_accuracy=metrics.get("test_accuracy"))


def cmd_experiment(args, parser):
    overrides = {k: v for k, v in (("trials", args.trials), ("seed", args.seed), ("workers", args.workers))
                 if v is not None}
    config = ExperimentConfig.from_file(args.config, overrides)
    report = run_experiment(config)
    emit_report(report, "json", args.out_json)
    emit_report(report, "csv", args.out_csv)
    _summary(command="experiment", seed=config.seed, trials=config.trials,
             means={a: report.mean(a) for a in report.arms},
             stds={a: report.std(a) for a in report.arms},
             out_json=args.out_json, out_csv=args.out_csv)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcldce", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a Gaussian-mixture dataset as CSV")
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--dim", type=_positive_int, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--sigma", type=float, required=True)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--separation", type=float, default=3.0, help="norm of every class mean")
    g.add_argument("--weights", type=float, nargs="+", help="class sampling weights (default uniform)")
    g.set_defaults(func=cmd_gen, subparser=g)

    c = sub.add_parser("corrupt", help="inject synthetic label noise")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--noise", choices=["symmetric", "pairflip"], required=True)
    c.add_argument("--rate", type=float, required=True)
    c.add_argument("--seed", type=_seed, required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--t-out", required=True)
    c.add_argument("--classes", type=int, help="class count (default: max label + 1)")
    c.set_defaults(func=cmd_corrupt, subparser=c)

    t = sub.add_parser("train", help="fit a noise-corrected linear classifier")
    t.add_argument("--train", required=True)
    t.add_argument("--t", help="transition matrix CSV")
    t.add_argument("--mode", choices=list(MODES), default="paper-m")
    t.add_argument("--solver", choices=list(SOLVERS), default="closed")
    t.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    t.add_argument("--out-model", required=True)
    t.add_argument("--out-metrics", required=True)
    t.add_argument("--test", help="clean test CSV for immediate evaluation")
    t.add_argument("--classes", type=int, help="class count when no --t is given")
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--optimizer", choices=["adam", "momentum"], default="adam")
    t.add_argument("--step-size", type=float, default=0.001)
    t.add_argument("--smoothing", type=float, default=0.9)
    t.add_argument("--epochs", type=_positive_int, default=200)
    t.add_argument("--batch-size", type=_positive_int, default=128)
    t.add_argument("--decay-start", type=int, default=80)
    t.set_defaults(func=cmd_train, subparser=t)

    e = sub.add_parser("experiment", help="run the multi-arm, multi-seed experiment")
    e.add_argument("--config", required=True, help="flat YAML key-value config")
    e.add_argument("--out-json", default="report.json")
    e.add_argument("--out-csv", default="report.csv")
    e.add_argument("--trials", type=_positive_int)
    e.add_argument("--seed", type=_seed)
    e.add_argument("--workers", type=_positive_int)
    e.set_defaults(func=cmd_experiment, subparser=e)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, args.subparser)
    except ConfigError as e:
        keys = f" (offending keys: {', '.join(e.keys)})" if e.keys else ""
        print(f"mcldce {args.command}: config error: {e}{keys}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, OSError, RuntimeError, IndexError) as e:
        print(f"mcldce {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
