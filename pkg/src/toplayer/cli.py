"""Command-line front end.

Every command writes its outputs and a ``manifest.json`` into ``--out-dir``.
Outputs are CSV (or JSON with ``--format json``) meant for plotting with any
external tool.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .complex import DegenerateInputError, build_freudenthal_grid
from .diagram import parse_objective
from .filtration import lower_star, rips_filtration, weak_alpha_filtration
from .io import (
    InputError,
    read_image,
    read_points,
    write_diagram,
    write_json,
    write_points,
    write_table,
)
from .persistence import compute_persistence

CLUSTER_RECIPE = ["--generate", "uniform-points", "--loss", "E(2,0,2;PD0)", "--lr", "0.2", "--steps", "100"]


class RunError(Exception):
    """A failure to report on stderr with a nonzero exit."""


def _loss_arg(text: str):
    try:
        return parse_objective(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


class Run:
    """Collects outputs and writes the manifest for one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out_dir)
        self.ext = "json" if args.format == "json" else "csv"
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.extra: dict = {}
        self.start = time.perf_counter()

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def finish(self) -> None:
        cfg = {k: v for k, v in vars(self.args).items() if k != "handler"}
        if "loss" in cfg and cfg["loss"] is not None:
            cfg["loss"] = " ".join(str(t) for t in cfg["loss"])
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "config": cfg,
            "seed": self.args.seed,
            "version": __version__,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_s": time.perf_counter() - self.start,
            **self.extra,
        }
        write_json(self.out / "manifest.json", manifest)


# --- commands -------------------------------------------------------------


def _diagram_for(args, run: Run):
    run.inputs.append(str(args.input))
    if args.filtration == "lower-star":
        img = read_image(args.input)
        filt = lower_star(build_freudenthal_grid(*img.shape), img.ravel(), args.direction, args.tie_break, args.seed)
    else:
        pts = read_points(args.input)
        if args.filtration == "rips":
            filt = rips_filtration(pts, args.max_dim, args.threshold, args.tie_break, args.seed)
        else:
            filt = weak_alpha_filtration(pts, args.tie_break, args.seed)
    return compute_persistence(filt, args.max_dim)


def cmd_persistence(args, run: Run) -> None:
    dgm = _diagram_for(args, run)
    write_diagram(run.path(f"diagram.{run.ext}"), dgm, args.format, args.include_zero)
    run.extra["counts"] = {str(k): len(dgm.indexed(k, args.include_zero)) for k in range(args.max_dim + 1)}


def _optimize_input(args, run: Run):
    rng = np.random.default_rng(args.seed)
    if args.input is not None:
        run.inputs.append(str(args.input))
        return read_image(args.input) if args.filtration == "lower-star" else read_points(args.input)
    if args.generate == "uniform-points":
        return rng.random((args.n_points, 2))
    if args.generate == "bump-image":
        from .experiments.synth import bump_image
        return bump_image(args.size, seed=args.seed)
    raise RunError("optimize needs an input file or --generate")


def cmd_optimize(args, run: Run) -> None:
    from .experiments.optimize import OptimizationConfig, OptimizationError, optimize_point_cloud, optimize_scalar_field

    if args.generate == "bump-image" and args.filtration != "lower-star":
        args.filtration = "lower-star"
    x0 = _optimize_input(args, run)
    cfg = OptimizationConfig(args.loss, args.filtration, args.direction, args.threshold, args.lr, args.steps,
                             args.seed, args.tie_break, args.backtracking, args.snapshot_every)
    try:
        if args.filtration == "lower-star":
            res = optimize_scalar_field(x0, cfg)
        else:
            res = optimize_point_cloud(x0, cfg)
    except OptimizationError as exc:
        raise RunError(f"optimisation failed at {exc}") from exc
    write_table(run.path(f"loss_curve.{run.ext}"), ["step", "loss"],
                [[i, float(v)] for i, v in enumerate(res.losses)], args.format)
    writer = _write_grid if args.filtration == "lower-star" else write_points
    writer(run.path("initial.csv"), x0)
    for step, snap in sorted(res.snapshots.items()):
        writer(run.path(f"snapshots/step_{step:05d}.csv"), snap)
    writer(run.path("final.csv"), res.final)
    run.extra["resolved"] = cfg.to_dict()


def _write_grid(path, img):
    # same serialisation as point clouds: one row of the grid per line
    return write_points(path, img)


def _regress_one(job):
    from .experiments.regression import simulate

    beta_kind, n, pen, seed, iterations, folds = job
    res = simulate(beta_kind, n, pen, seed, iterations, folds)
    return job, res.mse, res.lam


def cmd_regress(args, run: Run) -> None:
    from .experiments.regression import PENALTIES

    pens = args.penalty.split(",")
    for p in pens:
        if p not in PENALTIES or p == "top-image":
            raise RunError(f"unknown penalty {p!r}; choose from {', '.join(x for x in PENALTIES if x != 'top-image')}")
    jobs = [(args.beta, n, p, args.seed + s, args.iterations, args.folds)
            for n in args.n for p in pens for s in range(args.seeds)]
    if args.threads > 1:
        with ProcessPoolExecutor(args.threads) as ex:
            results = list(ex.map(_regress_one, jobs))
    else:
        results = [_regress_one(j) for j in jobs]
    runs = [[beta, n, p, seed, mse, lam] for (beta, n, p, seed, _, _), mse, lam in results]
    write_table(run.path(f"mse_runs.{run.ext}"), ["beta", "n", "penalty", "seed", "mse", "lambda"], runs, args.format)
    rows = []
    for n in args.n:
        for p in pens:
            m = np.array([r[4] for r in runs if r[1] == n and r[2] == p])
            rows.append([n, p, float(m.mean()), float(m.std()), len(m)])
    write_table(run.path(f"mse_table.{run.ext}"), ["n", "penalty", "mean_mse", "std_mse", "seeds"], rows, args.format)


def cmd_features(args, run: Run) -> None:
    from .experiments.features import feature_names, topo_features

    rows = []
    for path in args.input:
        run.inputs.append(str(path))
        rows.append([str(path)] + [float(v) for v in topo_features(read_image(path))])
    write_table(run.path(f"features.{run.ext}"), ["image"] + feature_names(), rows, args.format)


def cmd_attack(args, run: Run) -> None:
    from .experiments.features import LinearClassifier, gradient_attack
    from .experiments.synth import SHAPES, shape_dataset

    Xtr, ytr = shape_dataset(args.train_per_class, args.size, seed=args.seed)
    Xte, yte = shape_dataset(args.test_per_class, args.size, seed=args.seed + 1)
    clf = LinearClassifier.train(Xtr, ytr, seed=args.seed)
    acc = clf.score(Xte, yte)
    if args.input is not None:
        run.inputs.append(str(args.input))
        img = read_image(args.input)
        if img.shape != (args.size, args.size):
            raise RunError(f"{args.input}: expected a {args.size}x{args.size} image, got {img.shape}")
        images, labels = img[None], np.array([-1])
    else:
        images, labels = Xte[: args.n_attacks], yte[: args.n_attacks]
    rng = np.random.default_rng(args.seed)
    rows = []
    for i, (img, lab) in enumerate(zip(images, labels)):
        pred = int(clf.predict(img[None])[0])
        if args.target == "random":
            target = int(rng.choice([c for c in range(len(SHAPES)) if c != pred]))
        elif args.target == "same-as-prediction":
            target = pred
        else:
            target = int(args.target)
            if target not in range(len(SHAPES)):
                raise RunError(f"target must be 0..{len(SHAPES) - 1}, 'random' or 'same-as-prediction'")
        res = gradient_attack(clf, img, target, args.step_size, args.steps)
        pert = float(np.abs(res.image - img).max())
        rows.append([i, int(lab), pred, target, str(res.success).lower(), res.steps_taken, pert, res.losses[-1]])
        if args.input is not None:
            write_points(run.path("attacked.csv"), res.image)
    write_table(run.path(f"attack.{run.ext}"),
                ["index", "label", "prediction", "target", "success", "steps", "linf_perturbation", "final_loss"],
                rows, args.format)
    rate = float(np.mean([r[4] == "true" for r in rows]))
    run.extra["summary"] = {"test_accuracy": acc, "success_rate": rate, "attacks": len(rows)}
    print(f"test accuracy {acc:.3f}; attack success rate {rate:.3f} over {len(rows)} attacks")


def cmd_selftest(args, run: Run) -> None:
    from .checks import run_all

    results = run_all(args.seed, quick=args.quick)
    for r in results:
        print(r.line())
    write_table(run.path(f"selftest.{run.ext}"), ["check", "passed", "detail"],
                [[r.name, str(r.passed).lower(), r.detail] for r in results], args.format)
    if not all(r.passed for r in results):
        run.extra["failed"] = [r.name for r in results if not r.passed]
        raise RunError("selftest failed: " + ", ".join(run.extra["failed"]))


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def global_flags(p, suppress):
        # subcommands accept the global flags too; SUPPRESS keeps them from
        # overwriting values given before the subcommand name
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
        p.add_argument("--out-dir", default=d("out"), help="directory for outputs (default ./out)")
        p.add_argument("--format", choices=("csv", "json"), default=d("csv"), help="table format")
        p.add_argument("--threads", type=int, default=d(1), help="worker processes for independent runs")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)

    parser = argparse.ArgumentParser(prog="toplayer", description=__doc__.splitlines()[0])
    global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def filt_flags(p, default="weak-alpha"):
        p.add_argument("--filtration", choices=("lower-star", "rips", "weak-alpha"), default=default)
        p.add_argument("--direction", choices=("sublevel", "superlevel"), default="superlevel",
                       help="lower-star direction (default superlevel)")
        p.add_argument("--threshold", type=float, default=None, help="Rips edge length cutoff")
        p.add_argument("--tie-break", choices=("deterministic", "random"), default="deterministic")

    p = sub.add_parser("persistence", parents=[common], help="compute a persistence diagram")
    p.add_argument("input", type=Path, help="points CSV, or image (PGM/CSV) for lower-star")
    filt_flags(p)
    p.add_argument("--max-dim", type=int, default=1)
    p.add_argument("--include-zero", action="store_true", help="keep zero-persistence pairs")
    p.set_defaults(handler=cmd_persistence)

    p = sub.add_parser("optimize", parents=[common], help="gradient descent on a diagram loss",
                       epilog="clustering recipe: optimize " + " ".join(
                           f"'{a}'" if "(" in a else a for a in CLUSTER_RECIPE))
    p.add_argument("input", type=Path, nargs="?", help="points CSV or image (PGM/CSV)")
    p.add_argument("--generate", choices=("uniform-points", "bump-image"),
                   help="synthesise the input instead of reading it")
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--size", type=int, default=28)
    p.add_argument("--loss", type=_loss_arg, required=True,
                   help="objective to minimise, e.g. \"-E(2,1,1;PD1)+E(2,0,2;PD0)*0.5\"")
    filt_flags(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--lr", type=float, default=None, help="step size (default 0.01 points, 0.1 images)")
    p.add_argument("--backtracking", action="store_true")
    p.add_argument("--snapshot-every", type=int, default=10)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("regress", parents=[common], help="penalised regression comparison")
    p.add_argument("--beta", choices=("three-values", "sawtooth", "boxcar"), default="three-values")
    p.add_argument("--penalty", default="l1,l2,top1,top2", help="comma-separated penalties")
    p.add_argument("--n", type=int, nargs="+", default=[60], help="sample sizes")
    p.add_argument("--seeds", type=int, default=20, help="number of repetitions")
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--folds", type=int, default=5)
    p.set_defaults(handler=cmd_regress)

    p = sub.add_parser("features", parents=[common], help="400 directional persistence features")
    p.add_argument("input", type=Path, nargs="+", help="images (PGM/CSV)")
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("attack", parents=[common], help="gradient attack on a feature classifier")
    p.add_argument("input", type=Path, nargs="?", help="image to attack (default: synthetic test set)")
    p.add_argument("--target", default="random", help="class index, 'random' or 'same-as-prediction'")
    p.add_argument("--step-size", type=float, default=0.02)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--n-attacks", type=int, default=50)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--train-per-class", type=int, default=40)
    p.add_argument("--test-per-class", type=int, default=20)
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("selftest", parents=[common], help="run the oracle suites")
    p.add_argument("--quick", action="store_true", help="fewer random trials")
    p.set_defaults(handler=cmd_selftest)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "lr", "unset") is None:
        args.lr = 0.1 if (args.filtration == "lower-star" or args.generate == "bump-image") else 0.01
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if getattr(args, "steps", 1) < 0:
        parser.error("--steps must be >= 0")
    run = Run(args, argv)
    try:
        args.handler(args, run)
    except (InputError, RunError, DegenerateInputError, ValueError) as exc:
        print(f"toplayer {args.command}: error: {exc}", file=sys.stderr)
        try:
            run.extra["error"] = str(exc)
            run.finish()
        except OSError:
            pass
        return 1
    run.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
