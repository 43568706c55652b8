"""Command-line entry point: ``melanfis <command> [options]``.

Commands
  extract         manifest -> features.csv (+ errors.csv)
  train           features.csv -> model.json, convergence.csv, train_report.csv
  evaluate        features.csv + (model | methods) -> report.csv, summary.txt, SVGs
  convergence     features.csv -> grid CSVs + SVGs
  demo-synthetic  write the synthetic benchmark images and manifest
"""

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import anfis, charts, evaluation
from .config import load_config
from .errors import ImageFormatError, TrainingDivergedError
from .features import FeatureCsvError, read_feature_csv, to_matrix, write_feature_csv
from .pipeline import ManifestError, extract_manifest, read_manifest, write_errors_csv
from .synthetic import generate_dataset
from .training import METHODS, method_name

log = logging.getLogger("melanfis")


class CommandError(Exception):
    """Fatal, user-facing error; printed without a traceback."""


def parse_int_list(text):
    """``"0-9"``, ``"1,2,5"`` or a mix such as ``"0-2,7"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("expected at least one integer")
    return out


def _int_list(text):
    try:
        return parse_int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def _methods(text):
    names = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name = method_name(part)
        if name not in METHODS.values():
            raise argparse.ArgumentTypeError(f"unknown method {part!r}; choose from ica, gd, aco")
        names.append(name)
    return names


# ------------------------------------------------------------------ helpers

def _config(args):
    overrides = {}
    if getattr(args, "optimizer", None):
        overrides["optimizer"] = args.optimizer
    try:
        cfg = load_config(args.config, **overrides)
    except (OSError, json.JSONDecodeError) as exc:
        raise CommandError(f"cannot read config {args.config}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CommandError(f"invalid config: {exc}") from exc
    median = getattr(args, "median_window", None)
    if median is not None:
        cfg.median_window = median
    if args.seeds is not None:
        cfg.seeds = list(args.seeds)
    elif args.seed is not None:
        cfg.seeds = [args.seed]
    cfg.__post_init__()
    return cfg


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_features(path):
    try:
        vectors = read_feature_csv(path)
    except FeatureCsvError as exc:
        raise CommandError(str(exc)) from exc
    except OSError as exc:
        raise CommandError(f"cannot read feature CSV {path}: {exc}") from exc
    if any(v.label is None for v in vectors):
        raise CommandError(f"{path}: every row needs a label (1 or 2)")
    labels = {v.label for v in vectors}
    if labels != {1, 2}:
        raise CommandError(f"{path}: need at least one sample of each class, found classes {sorted(labels)}")
    return vectors


def _write_timings(path, reports):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "seed", "subset_size", "iterations", "wall_seconds"])
        for r in reports:
            w.writerow([r.method, r.seed, "" if r.subset_size is None else r.subset_size,
                        "" if r.iterations is None else r.iterations, f"{r.wall_seconds:.3f}"])


# ----------------------------------------------------------------- commands

def cmd_extract(args):
    cfg = _config(args)
    try:
        manifest = read_manifest(args.manifest)
    except ManifestError as exc:
        raise CommandError(str(exc)) from exc
    if not len(manifest):
        raise CommandError(f"{args.manifest}: manifest has no entries")
    out = _out_dir(args)
    t0 = time.perf_counter()
    res = extract_manifest(manifest, cfg, jobs=args.jobs)
    root = Path(args.manifest).parent
    write_errors_csv(out / "errors.csv", res.errors, root=root)
    log.info("extracted %d/%d images in %.1f s", len(res.vectors), len(manifest), time.perf_counter() - t0)
    if not res.vectors:
        raise CommandError(f"all {len(manifest)} images failed; see {out / 'errors.csv'}")
    write_feature_csv(out / args.features_name, res.vectors)
    if res.errors:
        log.warning("%d image(s) failed; see %s", len(res.errors), out / "errors.csv")
    return 0


def cmd_train(args):
    cfg = _config(args)
    vectors = _load_features(args.features)
    out = _out_dir(args)
    seed = cfg.seeds[0]
    _, y = to_matrix(vectors)
    try:
        tr, te = evaluation.split(y, cfg.train_fraction, seed)
    except ValueError as exc:
        raise CommandError(str(exc)) from exc
    method = method_name(cfg.optimizer)
    report, outcome, st = evaluation.fit_and_evaluate(method, vectors, tr, te, cfg, seed)
    training = {
        "method": method,
        "seed": seed,
        "train_fraction": cfg.train_fraction,
        "n_train": int(len(tr)),
        "n_test": int(len(te)),
        "test_accuracy": report.test_accuracy,
        "test_sensitivity": report.test_sensitivity,
        "config": cfg.to_dict(),
    }
    anfis.save_model(out / args.model_name, outcome.model, st, extra=training)
    evaluation.write_history_csv(out / "convergence.csv", outcome.history)
    evaluation.write_report_csv(out / "train_report.csv", [report], record_timing=args.timing)
    _write_timings(out / "timings.csv", [report])
    print(evaluation.format_summary([report]), end="")
    return 0


def _evaluate_model(args, cfg, vectors):
    try:
        model, st, doc = anfis.load_model(args.model)
    except (OSError, ValueError) as exc:
        raise CommandError(f"cannot load model {args.model}: {exc}") from exc
    x, y = to_matrix(vectors)
    if model.n_inputs != x.shape[1]:
        raise CommandError(f"model expects {model.n_inputs} features but {args.features} has {x.shape[1]}")
    training = doc.get("training") or {}
    # default to the split the model was trained on
    seed = training.get("seed", cfg.seeds[0]) if args.seed is None and args.seeds is None else cfg.seeds[0]
    fraction = training.get("train_fraction", cfg.train_fraction)
    tr, te = evaluation.split(y, fraction, seed)
    if st is not None:
        x = st.transform(x)
    y = np.asarray(y)
    report = evaluation.RunReport(
        method=training.get("method", "model"),
        seed=seed,
        train_cm=evaluation.confusion(anfis.predict(model, x[tr]), y[tr]),
        test_cm=evaluation.confusion(anfis.predict(model, x[te]), y[te]),
        config=cfg.to_dict(),
    )
    return [report]


def cmd_evaluate(args):
    cfg = _config(args)
    vectors = _load_features(args.features)
    out = _out_dir(args)
    if args.model:
        reports = _evaluate_model(args, cfg, vectors)
    else:
        reports = evaluation.compare_methods(vectors, methods=args.methods, seeds=cfg.seeds, cfg=cfg)
    evaluation.write_report_csv(out / "report.csv", reports, record_timing=args.timing)
    _write_timings(out / "timings.csv", reports)
    summary = evaluation.format_summary(reports)
    (out / "summary.txt").write_text(summary)
    charts.comparison_charts(reports, out)
    print(summary, end="")
    return 0


def cmd_convergence(args):
    cfg = _config(args)
    vectors = _load_features(args.features)
    if max(args.sizes) > len(vectors):
        raise CommandError(f"largest subset ({max(args.sizes)}) exceeds the {len(vectors)} rows in {args.features}")
    out = _out_dir(args)
    method = args.methods[0] if args.methods else method_name(cfg.optimizer)
    reports = evaluation.convergence_sweep(vectors, args.sizes, args.iterations, cfg.seeds, cfg, method)
    evaluation.write_grid_csv(out / "convergence_grid.csv", reports)
    evaluation.write_report_csv(out / "convergence_runs.csv", reports, record_timing=args.timing)
    _write_timings(out / "timings.csv", reports)
    charts.convergence_charts(reports, out)
    print((out / "convergence_grid.csv").read_text(), end="")
    return 0


def cmd_demo_synthetic(args):
    out = _out_dir(args)
    seed = 0 if args.seed is None else args.seed
    manifest = generate_dataset(out, n_benign=args.n_benign, n_melanoma=args.n_melanoma,
                                size=args.size, seed=seed)
    print(manifest)
    return 0


# ------------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config")
    common.add_argument("--seed", type=int, help="run seed (overrides the config's seeds)")
    common.add_argument("--seeds", type=_int_list, help="seed list, e.g. 0-9 or 1,2,3")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for image extraction")
    common.add_argument("--timing", action="store_true",
                        help="write measured wall_seconds into report CSVs (breaks byte-identical reruns)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="melanfis", description="Melanoma lesion classification with ICA-trained ANFIS.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("extract", parents=[common], help="images -> feature CSV")
    e.add_argument("manifest", help="CSV with columns path,label")
    e.add_argument("--features-name", default="features.csv")
    e.add_argument("--median-window", type=int)
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", parents=[common], help="feature CSV -> model JSON")
    t.add_argument("features")
    t.add_argument("--optimizer", choices=sorted(METHODS))
    t.add_argument("--model-name", default="model.json")
    t.set_defaults(func=cmd_train)

    ev = sub.add_parser("evaluate", parents=[common], help="compare methods or score a saved model")
    ev.add_argument("features")
    ev.add_argument("--model", help="score this model instead of training")
    ev.add_argument("--methods", type=_methods, default=list(METHODS.values()),
                    help="comma list from ica,gd,aco (default: all three)")
    ev.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("convergence", parents=[common], help="subset size x iteration sweep")
    c.add_argument("features")
    c.add_argument("--sizes", type=_int_list, default=[50, 100, 200, 300, 400])
    c.add_argument("--iterations", type=_int_list, default=[50, 100, 200])
    c.add_argument("--methods", type=_methods, help="method to sweep (default: the config's optimizer)")
    c.add_argument("--optimizer", choices=sorted(METHODS))
    c.set_defaults(func=cmd_convergence)

    d = sub.add_parser("demo-synthetic", parents=[common], help="write the synthetic benchmark dataset")
    d.add_argument("--n-benign", type=int, default=280)
    d.add_argument("--n-melanoma", type=int, default=280)
    d.add_argument("--size", type=int, default=320, help="image side in pixels")
    d.set_defaults(func=cmd_demo_synthetic)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CommandError, ImageFormatError, TrainingDivergedError, ValueError) as exc:
        print(f"melanfis {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
