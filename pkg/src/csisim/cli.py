"""Command-line interface: ``csisim <command> [options]``.

Commands: train, predict, eval, synth, convergence, sweep. Every command
that writes files also writes a JSON run manifest next to its output.
"""
import argparse
import os
import sys
import warnings

import numpy as np

from . import __version__
from .atoms import (
    GraphLowRankProjector,
    GroupProjector,
    LowRankProjector,
    SparseProjector,
    build_graph_factors,
    read_groups,
    read_laplacian,
)
from .data import CLASSIFICATION, REGRESSION, standardize
from .io import RunManifest, load_dataset, save_dense_csv, split
from .links import get_link
from .metrics import METRICS, EvalResult, evaluate
from .model import load_file, save_file
from .solver import TrainConfig, csi_fit
from .synth import DEFAULT_D_LIST, DEFAULT_ETAS, GENERATOR_NAME, SynthSpec, convergence_experiment, generate, write_trace_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _shape(text):
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like RxC, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_data_args(p):
    p.add_argument("data", help="data file (CSV with response first, or sparse 'label idx:val' text)")
    p.add_argument("--format", choices=["auto", "csv", "sparse"], default="auto")
    p.add_argument("--dims", type=int, help="feature dimension for sparse files (default: max index)")
    p.add_argument("--kind", choices=["auto", "classification", "regression"], default="auto")


def _add_structure_args(p):
    p.add_argument("--atoms", choices=["sparse", "group", "lowrank", "graph"], default="sparse")
    p.add_argument("--groups", help="group file: one line per group, zero-based indices")
    p.add_argument("--shape", type=_shape, help="matrix shape RxC for lowrank/graph atoms")
    p.add_argument("--row-laplacian", help="row graph Laplacian (dense CSV)")
    p.add_argument("--col-laplacian", help="column graph Laplacian (dense CSV)")
    p.add_argument("--epsilon", type=float, default=1e-3, help="Laplacian regularization (graph atoms)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="ridge weight")
    p.add_argument("--iters", type=int, default=50, help="iterations T")
    p.add_argument("--link", choices=["learn", "linear", "logistic"], default="learn",
                   help="learn the link (default) or hold a known link fixed")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized projections / splits")
    p.add_argument("--standardize", action="store_true", help="center and scale features")


def build_parser():
    parser = _Parser(prog="csisim", description="Calibrated single index models.")
    parser.add_argument("--version", action="version", version=f"csisim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model")
    _add_data_args(p)
    _add_structure_args(p)
    p.add_argument("--s", type=int, required=True, help="atom budget")
    p.add_argument("--eta", type=float, default=1.0, help="step size")
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("predict", help="score a data file")
    p.add_argument("model")
    _add_data_args(p)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out", required=True, help="scores CSV (row,score,pred)")

    p = sub.add_parser("eval", help="evaluate a model")
    p.add_argument("model")
    _add_data_args(p)
    p.add_argument("--metric", choices=sorted(METRICS), action="append")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out", help="CSV with metric,value,n")

    p = sub.add_parser("synth", help="generate a synthetic data set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--link", choices=["logistic", "linear"], default="logistic")
    p.add_argument("--noise", choices=["bernoulli", "none"], default="bernoulli")
    p.add_argument("--feature-std", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("convergence", help="distance-to-truth traces on synthetic data")
    p.add_argument("--d-list", type=_int_list, default=list(DEFAULT_D_LIST))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--etas", type=_float_list, default=list(DEFAULT_ETAS))
    p.add_argument("--out", required=True, help="trace CSV (d,t,distance)")

    p = sub.add_parser("sweep", help="grid search over s (and eta) on a 50-25-25 split")
    _add_data_args(p)
    _add_structure_args(p)
    p.add_argument("--s-grid", type=_int_list, help="atom budgets (default d/4, d/8, ..., d/1024)")
    p.add_argument("--etas", type=_float_list, default=[1.0])
    p.add_argument("--metric", choices=sorted(METRICS), help="selection metric (default: auc or mse by task)")
    p.add_argument("--fractions", type=_float_list, default=[0.5, 0.25, 0.25])
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load(args):
    kind = {"auto": None, "classification": CLASSIFICATION, "regression": REGRESSION}[args.kind]
    if args.format == "csv" and args.dims is not None:
        raise UsageError("--dims applies to sparse files only")
    return load_dataset(args.data, fmt=args.format, dims=args.dims, kind=kind)


def build_projector(args, d, s):
    """Projector for the structure flags; raises UsageError on inconsistent flags."""
    if args.atoms == "sparse":
        return SparseProjector(d, s)
    if args.atoms == "group":
        if not args.groups:
            raise UsageError("--atoms group requires --groups FILE")
        try:
            return GroupProjector(read_groups(args.groups), s, d=d)
        except ValueError as exc:
            raise UsageError(f"bad --groups: {exc}") from None
    if args.shape is None:
        raise UsageError(f"--atoms {args.atoms} requires --shape RxC")
    rows, cols = args.shape
    if rows * cols != d:
        raise UsageError(f"--shape {rows}x{cols} does not match feature dimension {d}")
    if args.atoms == "lowrank":
        return LowRankProjector(rows, cols, s, seed=args.seed)
    if not (args.row_laplacian and args.col_laplacian):
        raise UsageError("--atoms graph requires --row-laplacian and --col-laplacian")
    factors = build_graph_factors(read_laplacian(args.row_laplacian), read_laplacian(args.col_laplacian), args.epsilon)
    return GraphLowRankProjector(rows, cols, s, factors, seed=args.seed)


def _structure_inputs(args):
    return [args.groups, args.row_laplacian, args.col_laplacian]


def _manifest_path(out):
    return os.path.join(out, "manifest.json") if os.path.isdir(out) else out + ".manifest.json"


def _config(args):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items())}


def _fit(args, ds, s, eta):
    means = scales = None
    if args.standardize:
        ds, means, scales = standardize(ds)
    proj = build_projector(args, ds.d, s)
    link = None if args.link == "learn" else get_link(args.link)
    cfg = TrainConfig(projector=proj, eta=eta, lam=args.lam, T=args.iters, link=link)
    report = csi_fit(ds, cfg)
    model = report.model
    if means is not None:
        model = model.with_preprocessing(means, scales)
    if args.atoms in ("lowrank", "graph"):
        model = type(model)(model.weights, model.link, model.means, model.scales, args.shape)
    return model, report


def cmd_train(args, argv):
    ds = _load(args)
    if args.s < 1:
        raise UsageError("--s must be >= 1")
    model, report = _fit(args, ds, args.s, args.eta)
    save_file(model, args.model_out)
    RunManifest.for_inputs("train", argv, _config(args), args.seed, [args.data, *_structure_inputs(args)]).write(
        _manifest_path(args.model_out)
    )
    print(f"trained on n={ds.n}, d={ds.d}: {report.iterations_run} iterations, "
          f"final objective {report.objective_trace[-1]:.6g}, nnz={np.count_nonzero(model.weights)}")
    return 0


def cmd_predict(args, argv):
    model = load_file(args.model)
    ds = _load(args)
    scores = model.predict(ds.features)
    preds = np.where(scores >= args.threshold, 1, -1)
    with open(args.out, "w", newline="\n") as fh:
        fh.write("row,score,pred\n")
        for i, (sc, pr) in enumerate(zip(scores, preds)):
            fh.write(f"{i},{float(sc)!r},{int(pr)}\n")
    RunManifest.for_inputs("predict", argv, _config(args), None, [args.model, args.data]).write(_manifest_path(args.out))
    return 0


def cmd_eval(args, argv):
    model = load_file(args.model)
    ds = _load(args)
    metrics = args.metric or ["auc" if ds.kind == CLASSIFICATION else "mse"]
    results = [evaluate(model, ds, m, threshold=args.threshold) for m in metrics]
    print(f"{'metric':<8}{'value':>14}{'n':>8}")
    for r in results:
        print(f"{r.metric:<8}{r.value:>14.6f}{r.n_evaluated:>8d}")
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("metric,value,n\n")
            for r in results:
                fh.write(r.as_row() + "\n")
        RunManifest.for_inputs("eval", argv, _config(args), None, [args.model, args.data]).write(_manifest_path(args.out))
    return 0


def cmd_synth(args, argv):
    spec = SynthSpec(n=args.n, d=args.d, k=args.k, seed=args.seed, link=args.link,
                     noise=args.noise, feature_std=args.feature_std)
    ds, w_star, _ = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    save_dense_csv(ds, os.path.join(args.out, "data.csv"))
    with open(os.path.join(args.out, "w_star.csv"), "w", newline="\n") as fh:
        for v in w_star:
            fh.write(f"{float(v)!r}\n")
    config = _config(args)
    config["generator"] = GENERATOR_NAME
    RunManifest("synth", list(argv), config, args.seed).write(_manifest_path(args.out))
    print(f"wrote n={ds.n}, d={ds.d}, k={args.k} ({ds.kind}) to {args.out}")
    return 0


def cmd_convergence(args, argv):
    results = convergence_experiment(args.d_list, seed=args.seed, n=args.n, lam=args.lam, T=args.iters, etas=args.etas)
    with open(args.out, "w", newline="\n") as fh:
        write_trace_csv(results, fh)
    config = _config(args)
    config["generator"] = GENERATOR_NAME
    config["selected_eta"] = {str(r.d): r.eta for r in results}
    RunManifest("convergence", list(argv), config, args.seed).write(_manifest_path(args.out))
    print(f"{'d':>6}{'k':>5}{'s':>6}{'eta':>7}{'initial':>12}{'final':>12}")
    for r in results:
        print(f"{r.d:>6}{r.k:>5}{r.s:>6}{r.eta:>7g}{r.initial_distance:>12.4f}{r.final_distance:>12.4f}")
    return 0


def default_s_grid(d):
    """d/4, d/8, ..., d/1024 rounded to the nearest integer, deduplicated, >= 1."""
    grid = []
    for k in range(2, 11):
        s = max(1, int(round(d / 2 ** k)))
        if s not in grid:
            grid.append(s)
    return grid


def cmd_sweep(args, argv):
    ds = _load(args)
    train, val, test = split(ds, args.fractions, seed=args.seed)
    metric = args.metric or ("auc" if ds.kind == CLASSIFICATION else "mse")
    lower_is_better = metric == "mse"
    s_grid = args.s_grid or default_s_grid(ds.d)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    best = None
    point = 0
    for s in s_grid:
        for eta in args.etas:
            point_dir = os.path.join(args.out, f"point_{point:03d}")
            os.makedirs(point_dir, exist_ok=True)
            model, _ = _fit(args, train, s, eta)
            save_file(model, os.path.join(point_dir, "model.json"))
            val_score = evaluate(model, val, metric).value
            rows.append((point, s, eta, val_score))
            key = val_score if lower_is_better else -val_score
            if best is None or key < best[0]:
                best = (key, point, s, eta, model)
            point += 1
    _, bpoint, bs, beta, bmodel = best
    test_result = evaluate(bmodel, test, metric)
    with open(os.path.join(args.out, "results.csv"), "w", newline="\n") as fh:
        fh.write(f"point,s,eta,val_{metric}\n")
        for pt, s, eta, v in rows:
            fh.write(f"{pt},{s},{eta!r},{v!r}\n")
    with open(os.path.join(args.out, "best.csv"), "w", newline="\n") as fh:
        fh.write(f"point,s,eta,test_{metric},n_test\n")
        fh.write(f"{bpoint},{bs},{beta!r},{test_result.value!r},{test_result.n_evaluated}\n")
    save_file(bmodel, os.path.join(args.out, "best_model.json"))
    RunManifest.for_inputs("sweep", argv, _config(args), args.seed, [args.data, *_structure_inputs(args)]).write(
        _manifest_path(args.out)
    )
    print(f"best point {bpoint}: s={bs}, eta={beta:g}; test {metric} = {test_result.value:.6f}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "convergence": cmd_convergence,
    "sweep": cmd_sweep,
}


def cli_main(argv=None):
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"csisim: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"csisim: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())
