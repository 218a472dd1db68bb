"""Command-line front end.

Subcommands: ``synth``, ``extract``, ``train``, ``eval``, ``sweep`` and
``reproduce`` (the whole chain in one go).  Every command accepts
``--config FILE`` with flat ``key=value`` lines naming the same options as
the flags (``ar-order = 4``); explicit flags win.

Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.
Machine-readable output goes to stdout or files, logs go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ImuGestError
from .evaluation import (DEFAULT_FEATURE_GRID, DEFAULT_ITERATION_GRID, evaluate,
                         split_stratified, sweep_features, sweep_iterations, write_curve)
from .features import DEFAULT_AR_ORDER, FeatureMatrix, extract_features, load_matrix, save_matrix
from .pipeline import ClassifierConfig, dump_json, fit_pipeline, load_pipeline, save_pipeline
from .signal_io import (DEFAULT_SAMPLE_RATE, Protocol, load_labels, load_recording,
                        save_labels, save_recording, segment_recording)
from .synth import SynthSpec, generate_recording

log = logging.getLogger("imugest")

MODALITY_FLAGS = {"accel": "accelerometer", "gyro": "gyroscope", "both": "both"}
DEFAULT_SEED = 42
DEFAULT_LAMBDA = {"dnn": 0.0, "svm": 1e-3, "knn": 0.0}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# argument types --------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0 <= v < 1:
        raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1), got {text}")
    return v


def _int_list(text):
    try:
        values = [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError(f"expected non-negative integers, got {text}")
    return values


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    conf = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        conf[key.lstrip("-").replace("-", "_")] = value
    return conf


# parser ----------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key=value file providing defaults for these options")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_protocol(p):
    p.add_argument("--sample-rate", type=_positive_float, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--stimulus", type=_nonneg_float, default=3.0, help="seconds")
    p.add_argument("--rest", type=_nonneg_float, default=5.0, help="seconds")
    p.add_argument("--delay", type=_nonneg_float, default=0.5, help="hardware delay, seconds")


def _add_synth(p):
    p.add_argument("--subjects", type=_positive_int, default=1)
    p.add_argument("--classes", type=_positive_int, default=6)
    p.add_argument("--repetitions", type=_positive_int, default=20)
    p.add_argument("--noise", type=_nonneg_float, default=0.3,
                   help="noise sigma relative to motif RMS")
    p.add_argument("--jitter", type=_nonneg_float, default=0.1)


def _add_model(p, model_choice=True):
    if model_choice:
        p.add_argument("--model", choices=("dnn", "knn", "svm"), default="dnn")
    p.add_argument("--pca", type=_positive_int, default=10, help="retained components l")
    p.add_argument("--no-standardize", action="store_true",
                   help="fit PCA on raw rather than z-scored features")
    p.add_argument("--iterations", type=_nonneg_int, default=150)
    p.add_argument("--alpha", type=_positive_float, default=1.0, help="DNN learning rate")
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=None,
                   help="L2 weight (DNN, default 0) or SVM regularisation (default 1e-3)")
    p.add_argument("--hidden", type=_int_list, default=list(ClassifierConfig().hidden),
                   help="hidden layer widths, comma separated")
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--weighting", choices=("uniform", "inverse-distance"), default="uniform")
    p.add_argument("--epochs", type=_positive_int, default=200, help="SVM passes")
    p.add_argument("--test-fraction", type=_fraction, default=0.2)


def build_parser():
    parser = _Parser(prog="imugest", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic recordings + label files")
    _add_common(p)
    _add_protocol(p)
    _add_synth(p)

    p = sub.add_parser("extract", help="segment recordings and compute the feature matrix")
    _add_common(p)
    _add_protocol(p)
    p.add_argument("--recording", action="append", required=True)
    p.add_argument("--labels", action="append", required=True)
    p.add_argument("--modality", choices=tuple(MODALITY_FLAGS), default="accel")
    p.add_argument("--ar-order", type=_positive_int, default=DEFAULT_AR_ORDER)
    p.add_argument("--output", help="matrix CSV path (default <out>/features_<modality>.csv)")

    p = sub.add_parser("train", help="fit PCA + classifier on a feature matrix")
    _add_common(p)
    _add_model(p)
    p.add_argument("matrix")

    p = sub.add_parser("eval", help="evaluate a saved model on a feature matrix")
    _add_common(p)
    p.add_argument("model")
    p.add_argument("matrix")
    p.add_argument("--report", help="report path (default <out>/report_<model kind>.json)")

    p = sub.add_parser("sweep", help="DNN accuracy versus iterations or retained components")
    _add_common(p)
    _add_model(p, model_choice=False)
    p.add_argument("matrix")
    p.add_argument("--grid", choices=("iterations", "features"), default="iterations")
    p.add_argument("--values", type=_int_list, default=None,
                   help="grid values, comma separated")

    p = sub.add_parser("reproduce", help="synth -> extract -> train -> eval -> sweeps")
    _add_common(p)
    _add_protocol(p)
    _add_synth(p)
    _add_model(p, model_choice=False)
    p.add_argument("--ar-order", type=_positive_int, default=DEFAULT_AR_ORDER)
    p.add_argument("--iteration-grid", type=_int_list, default=list(DEFAULT_ITERATION_GRID))
    p.add_argument("--feature-grid", type=_int_list, default=list(DEFAULT_FEATURE_GRID))
    return parser, sub


def parse_args(argv=None):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
        cmd = sub.choices[args.command]
        known = {a.dest for a in cmd._actions}
        unknown = sorted(set(conf) - known - {"config"})
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        conf.pop("config", None)
        for action in cmd._actions:
            if action.dest in conf and action.nargs == 0:
                conf[action.dest] = conf[action.dest].lower() in ("1", "true", "yes", "on")
        cmd.set_defaults(**conf)
        args = parser.parse_args(argv)
    return args


# helpers ---------------------------------------------------------------------

def _protocol(args, repetitions=20):
    return Protocol(args.stimulus, args.rest, args.delay, repetitions)


def _classifier_config(args, kind):
    lam = args.lam if args.lam is not None else DEFAULT_LAMBDA[kind]
    return ClassifierConfig(
        kind=kind, l=args.pca, standardize=not args.no_standardize, hidden=tuple(args.hidden),
        learning_rate=args.alpha, iterations=args.iterations,
        l2=lam if kind == "dnn" else 0.0, k=args.k, weighting=args.weighting,
        svm_lambda=lam if kind == "svm" and lam > 0 else DEFAULT_LAMBDA["svm"],
        svm_epochs=args.epochs, seed=args.seed)


def _check_pca(l, fm: FeatureMatrix, n_train):
    limit = min(fm.n_columns, n_train - 1)
    if not 1 <= l <= limit:
        raise ImuGestError(f"--pca {l} outside [1, {limit}] for this matrix")


def _write_trace(trace, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "cost"])
        for i, j in enumerate(trace.cost_per_iteration, start=1):
            writer.writerow([i, repr(float(j))])


def _emit(doc):
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _synthesize(args, out):
    spec = SynthSpec(n_classes=args.classes,
                     protocol=_protocol(args, args.repetitions),
                     sample_rate=args.sample_rate, noise_sigma=args.noise,
                     subject_jitter=args.jitter, seed=args.seed)
    written = []
    for s in range(1, args.subjects + 1):
        subject = f"subject{s}"
        rec, labels = generate_recording(spec, subject)
        rec_path = out / f"{subject}_recording.csv"
        lab_path = out / f"{subject}_labels.csv"
        save_recording(rec, rec_path)
        save_labels(labels, lab_path)
        written.append({"subject": subject, "recording": rec_path.name, "labels": lab_path.name,
                        "n_samples": rec.n_samples, "n_channels": rec.n_channels,
                        "n_labels": len(labels)})
        log.info("wrote %s (%d samples) and %d labels", rec_path, rec.n_samples, len(labels))
    return written


def _extract(recordings, label_files, args, modality):
    proto = _protocol(args)
    parts = []
    for rec_path, lab_path in zip(recordings, label_files):
        try:
            labels = load_labels(lab_path)
            rec = load_recording(rec_path, sample_rate=args.sample_rate).select(modality)
            segments = segment_recording(rec, proto, labels)
            parts.append(extract_features(segments, args.ar_order))
        except ImuGestError as exc:
            raise ImuGestError(f"{rec_path}: {exc}") from exc
    return FeatureMatrix.concat(parts)


# commands --------------------------------------------------------------------

def cmd_synth(args, out):
    written = _synthesize(args, out)
    _emit({"recordings": len(written), "labels": sum(w["n_labels"] for w in written),
           "files": written})


def cmd_extract(args, out):
    if len(args.recording) != len(args.labels):
        raise UsageError("--recording and --labels must be given the same number of times")
    modality = MODALITY_FLAGS[args.modality]
    fm = _extract(args.recording, args.labels, args, modality)
    path = Path(args.output) if args.output else out / f"features_{args.modality}.csv"
    save_matrix(fm, path)
    _emit({"matrix": str(path), "rows": fm.n_rows, "columns": fm.n_columns})


def cmd_train(args, out):
    fm = load_matrix(args.matrix)
    if args.test_fraction > 0:
        train, test = split_stratified(fm, args.test_fraction, args.seed)
        save_matrix(train, out / "train_matrix.csv")
        save_matrix(test, out / "test_matrix.csv")
    else:
        train = fm
    _check_pca(args.pca, fm, train.n_rows)
    cfg = _classifier_config(args, args.model)
    pipe, trace = fit_pipeline(train, cfg, int(fm.labels.max()) + 1)
    model_path = out / f"model_{args.model}.json"
    save_pipeline(pipe, model_path)
    summary = {"model": str(model_path), "train_rows": train.n_rows}
    if trace is not None:
        trace_path = out / f"trace_{args.model}.csv"
        _write_trace(trace, trace_path)
        summary.update(trace=str(trace_path), initial_cost=trace.initial_cost,
                       final_cost=(trace.cost_per_iteration or [trace.initial_cost])[-1])
    _emit(summary)


def cmd_eval(args, out):
    pipe = load_pipeline(args.model)
    fm = load_matrix(args.matrix)
    if fm.n_rows == 0:
        raise ImuGestError(f"{args.matrix}: no rows to evaluate")
    report = evaluate(pipe.predict, fm, pipe.n_classes).to_dict()
    report["model"] = pipe.kind
    path = Path(args.report) if args.report else out / f"report_{pipe.kind}.json"
    dump_json(report, path)
    _emit(report)


def cmd_sweep(args, out):
    fm = load_matrix(args.matrix)
    if not args.test_fraction > 0:
        raise UsageError("sweep needs --test-fraction > 0")
    dataset = split_stratified(fm, args.test_fraction, args.seed)
    cfg = _classifier_config(args, "dnn")
    if args.grid == "iterations":
        _check_pca(args.pca, fm, dataset[0].n_rows)
        curve = sweep_iterations(dataset, args.values or DEFAULT_ITERATION_GRID,
                                 args.pca, args.seed, cfg)
    else:
        curve = sweep_features(dataset, args.values or DEFAULT_FEATURE_GRID,
                               args.iterations, args.seed, cfg)
    path = out / f"curve_{args.grid}.csv"
    write_curve(curve, path)
    _emit({"curve": str(path), "points": [[p, a] for p, a in curve]})


def _strictly_decreasing(trace, n):
    costs = [trace.initial_cost] + trace.cost_per_iteration[:n]
    return len(costs) == n + 1 and all(b < a for a, b in zip(costs, costs[1:]))


def run_reproduce(args, out):
    """Full synthetic experiment; returns the consolidated report dict."""
    if 150 not in args.iteration_grid or 300 not in args.iteration_grid:
        raise UsageError("--iteration-grid must contain 150 and 300")
    if 1 not in args.feature_grid or args.pca not in args.feature_grid:
        raise UsageError(f"--feature-grid must contain 1 and {args.pca}")
    written = _synthesize(args, out)
    report = {"config": {"seed": args.seed, "subjects": args.subjects, "classes": args.classes,
                         "repetitions": args.repetitions, "noise": args.noise,
                         "jitter": args.jitter, "sample_rate": args.sample_rate,
                         "ar_order": args.ar_order, "pca": args.pca,
                         "iterations": args.iterations, "alpha": args.alpha,
                         "test_fraction": args.test_fraction},
              "subjects": {}}
    for entry in written:
        subject = entry["subject"]
        report["subjects"][subject] = {}
        for flag in ("accel", "gyro"):
            t0 = time.perf_counter()
            mod_dir = out / subject / flag
            mod_dir.mkdir(parents=True, exist_ok=True)
            fm = _extract([out / entry["recording"]], [out / entry["labels"]], args,
                          MODALITY_FLAGS[flag])
            save_matrix(fm, mod_dir / "features.csv")
            train, test = split_stratified(fm, args.test_fraction, args.seed)
            save_matrix(train, mod_dir / "train_matrix.csv")
            save_matrix(test, mod_dir / "test_matrix.csv")
            _check_pca(args.pca, fm, train.n_rows)
            n_classes = int(fm.labels.max()) + 1
            result = {"n_features": fm.n_columns, "n_train": train.n_rows,
                      "n_test": test.n_rows}
            for kind in ("dnn", "knn", "svm"):
                pipe, trace = fit_pipeline(train, _classifier_config(args, kind), n_classes)
                save_pipeline(pipe, mod_dir / f"model_{kind}.json")
                rep = evaluate(pipe.predict, test, n_classes)
                train_rep = evaluate(pipe.predict, train, n_classes)
                dump_json(rep.to_dict(), mod_dir / f"report_{kind}.json")
                result[kind] = {"test_accuracy": rep.accuracy,
                                "train_accuracy": train_rep.accuracy}
                if trace is not None:
                    _write_trace(trace, mod_dir / f"trace_{kind}.csv")
                    result[kind]["cost_strictly_decreasing_20"] = _strictly_decreasing(trace, 20)
                    result[kind]["initial_cost"] = trace.initial_cost
                    result[kind]["final_cost"] = (trace.cost_per_iteration
                                                  or [trace.initial_cost])[-1]
            dnn_cfg = _classifier_config(args, "dnn")
            it_curve = sweep_iterations((train, test), args.iteration_grid, args.pca,
                                        args.seed, dnn_cfg)
            ft_curve = sweep_features((train, test), args.feature_grid, args.iterations,
                                      args.seed, dnn_cfg)
            write_curve(it_curve, mod_dir / "curve_iterations.csv")
            write_curve(ft_curve, mod_dir / "curve_features.csv")
            it_acc, ft_acc = dict(it_curve), dict(ft_curve)
            result["curve_iterations"] = [[p, a] for p, a in it_curve]
            result["curve_features"] = [[p, a] for p, a in ft_curve]
            result["checks"] = {
                "dnn_accuracy_at_least_0.90": result["dnn"]["test_accuracy"] >= 0.90,
                "dnn_within_0.02_of_knn":
                    result["dnn"]["test_accuracy"] >= result["knn"]["test_accuracy"] - 0.02,
                "cost_strictly_decreasing_20": result["dnn"]["cost_strictly_decreasing_20"],
                "iteration_plateau_300_vs_150": it_acc[300] - it_acc[150] <= 0.05,
                "features_l_vs_1": ft_acc[args.pca] >= ft_acc[1],
            }
            report["subjects"][subject][flag] = result
            log.info("%s/%s done in %.1fs: dnn %.3f knn %.3f svm %.3f", subject, flag,
                     time.perf_counter() - t0, result["dnn"]["test_accuracy"],
                     result["knn"]["test_accuracy"], result["svm"]["test_accuracy"])
    report["all_checks_pass"] = all(
        all(mod["checks"].values())
        for subj in report["subjects"].values() for mod in subj.values())
    dump_json(report, out / "report.json")
    return report


def cmd_reproduce(args, out):
    if not args.test_fraction > 0:
        raise UsageError("reproduce needs --test-fraction > 0")
    report = run_reproduce(args, out)
    _emit(report)


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "train": cmd_train,
            "eval": cmd_eval, "sweep": cmd_sweep, "reproduce": cmd_reproduce}


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"imugest {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (ImuGestError, OSError, ValueError) as exc:
        print(f"imugest {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
