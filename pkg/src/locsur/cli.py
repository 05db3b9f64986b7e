"""``locsur`` command line.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure
(including explainers that could not produce a surrogate).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as _rng
from . import benchmark as bench
from .blackbox import RandomForest, RandomForestParams, train_random_forest
from .data import (
    as_vector,
    feature_stats,
    generate_half_moons,
    load_csv,
    max_distance,
    numeric_columns_only,
    save_csv,
    train_test_split,
)
from .errors import InvalidArgumentError, LocsurError, NumericalError
from .fidelity import (
    FidelityConfig,
    auc,
    explain_set,
    radius_sweep,
    score_explanations,
    write_heatmap,
)
from .surrogate import ExplainerConfig, explain

log = logging.getLogger("locsur")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
METHOD_NAMES = {"lime": "lime", "lime-k": "lime_k", "ls": "ls"}
DEFAULT_LIME_K_WIDTH = 0.5


def _default_seed() -> int:
    return int(os.environ.get("LOCSUR_SEED", "0"))


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return v


def _fraction_list(text: str) -> list[float]:
    try:
        vals = [_fraction(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated fractions, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _dump_json(obj, path) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def write_manifest(path, command: str, params: dict, outputs: list[str], started: float) -> None:
    manifest = {
        "command": command,
        "params": params,
        "outputs": outputs,
        "version": __version__,
        "duration_s": round(time.time() - started, 3),
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _manifest_path(out) -> str:
    return f"{out}.manifest.json"


# ------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    t0 = time.time()
    data = generate_half_moons(args.n, args.noise, args.seed)
    save_csv(data, args.out)
    write_manifest(_manifest_path(args.out), "generate", vars(args), [args.out], t0)
    print(f"wrote {data.n} rows to {args.out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    t0 = time.time()
    dropped = numeric_columns_only(args.input, args.out, args.target)
    write_manifest(_manifest_path(args.out), "preprocess", vars(args), [args.out], t0)
    print(f"wrote {args.out}; dropped non-numeric columns: {', '.join(dropped) or 'none'}")
    return EXIT_OK


def cmd_train(args) -> int:
    t0 = time.time()
    data = load_csv(args.data, args.target)
    train, test = train_test_split(data, args.test_fraction, args.seed)
    params = RandomForestParams(args.trees, args.max_depth, args.min_samples_leaf, seed=args.seed)
    model = train_random_forest(train, params)
    model.metadata.update(
        split={"test_fraction": args.test_fraction, "seed": args.seed},
        target=args.target, feature_names=list(data.feature_names),
    )
    model.save(args.out)
    test_auc = auc(model.score_batch(test.X), test.y) if test.has_both_classes() else float("nan")
    write_manifest(_manifest_path(args.out), "train", vars(args), [args.out], t0)
    print(f"test_auc={test_auc:.4f} train={train.n} test={test.n} trees={args.trees}")
    return EXIT_OK


def _load_model_and_split(args):
    model = RandomForest.load(args.model)
    target = args.target or model.metadata.get("target", "label")
    data = load_csv(args.data, target)
    if data.dimension != model.dimension:
        raise InvalidArgumentError(f"data has {data.dimension} features, model expects {model.dimension}")
    split = model.metadata.get("split", {})
    test_fraction = args.test_fraction if args.test_fraction is not None else split.get("test_fraction", 0.2)
    seed = args.split_seed if args.split_seed is not None else split.get("seed", 0)
    train, test = train_test_split(data, test_fraction, seed)
    return model, train, test


def _explainer_config(args) -> ExplainerConfig:
    method = METHOD_NAMES[args.method]
    width = args.kernel_width
    if method == "lime_k" and width is None:
        width = DEFAULT_LIME_K_WIDTH
    return ExplainerConfig(
        method, args.n_samples, width, args.r_sx, args.ridge_lambda, args.seed,
        args.gs_n_per_step, args.gs_step, args.gs_max_radius,
    )


def cmd_explain(args) -> int:
    t0 = time.time()
    model, train, test = _load_model_and_split(args)
    if args.point is not None:
        x = as_vector([float(t) for t in args.point.split(",")], model.dimension)
    else:
        if not 0 <= args.index < test.n:
            raise InvalidArgumentError(f"--index must lie in [0, {test.n})")
        x = test.X[args.index]
    cfg = _explainer_config(args)
    try:
        e = explain(model, x, cfg, feature_stats(train), max_distance(train, x))
        payload, code = e.to_dict(), EXIT_OK
    except NumericalError as exc:
        payload = {"method": cfg.method, "query": [float(v) for v in x],
                   "error": type(exc).__name__, "message": str(exc)}
        code = EXIT_NUMERICAL
    _dump_json(payload, args.out)
    if args.out:
        write_manifest(_manifest_path(args.out), "explain", vars(args), [args.out], t0)
    return code


def cmd_fidelity(args) -> int:
    t0 = time.time()
    model, train, test = _load_model_and_split(args)
    idx = bench.select_eval_indices(test.n, args.max_eval_instances, args.seed)
    eval_set = test.subset(idx)
    cfg = _explainer_config(args)
    fid = FidelityConfig(args.r_fid, args.n_eval, args.seed, args.metric)
    exps = explain_set(model, cfg, eval_set, train, idx)
    report = score_explanations(model, exps, eval_set, train, fid, cfg.method, idx)
    payload = report.to_dict()
    if args.sweep:
        series = []
        for row, i, e in zip(eval_set.X, idx, exps):
            if isinstance(e, str):
                series.append({"index": int(i), "scores": None, "reason": e})
                continue
            cfg_i = replace(fid, seed=_rng.derive_seed(fid.seed, _rng.EVALUATE, int(i)))
            pts = radius_sweep(model, e.surrogate, row, train, args.sweep, cfg_i)
            series.append({"index": int(i), "scores": [("skip" if s is None else s) for _, s in pts]})
        means = []
        for k in range(len(args.sweep)):
            vals = [s["scores"][k] for s in series if s["scores"] is not None and s["scores"][k] != "skip"]
            means.append(float(np.mean(vals)) if vals else None)
        payload["sweep"] = {"fractions": args.sweep, "mean": means, "per_instance": series}
    outputs = []
    if args.heatmap:
        write_heatmap(report, eval_set, args.heatmap)
        outputs.append(args.heatmap)
    _dump_json(payload, args.out)
    if args.out:
        outputs.insert(0, args.out)
        write_manifest(_manifest_path(args.out), "fidelity", vars(args), outputs, t0)
    print(f"mean={payload['mean']} std={payload['std']} skipped={payload['n_skipped']}", file=sys.stderr)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    t0 = time.time()
    if not args.dataset:
        raise InvalidArgumentError("at least one --dataset is required")
    widths = {}
    for spec in args.lime_k_width or []:
        name, sep, val = spec.partition("=")
        if not sep:
            raise InvalidArgumentError(f"--lime-k-width expects NAME=WIDTH, got {spec!r}")
        widths[name] = _positive_float(val)
    sources = []
    for text in args.dataset:
        try:
            src = bench.DatasetSource.parse(text)
        except ValueError as exc:
            raise InvalidArgumentError(str(exc)) from None
        if src.name in widths:
            src = bench.DatasetSource(src.name, src.path, src.target, widths[src.name])
        sources.append(src)
    cfg = bench.BenchmarkConfig(
        r_fid=tuple(args.r_fid), r_sx=args.r_sx, n_samples=args.n_samples, n_eval=args.n_eval,
        max_eval_instances=args.max_eval_instances, test_fraction=args.test_fraction,
        n_trees=args.trees, seed=args.seed, moons_n=args.moons_n, moons_noise=args.moons_noise,
        width_grid=tuple(args.width_grid), tuning_instances=args.tuning_instances,
        gs_n_per_step=args.gs_n_per_step, gs_step=args.gs_step, gs_max_radius=args.gs_max_radius,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = bench.run_benchmark(sources, cfg)
    csv_path, json_path = out / "table.csv", out / "table.json"
    bench.write_results(results, cfg, csv_path, json_path)
    write_manifest(out / "manifest.json", "benchmark", vars(args), [str(csv_path), str(json_path)], t0)
    for r_fid in cfg.r_fid:
        print(bench.table(results, r_fid))
    return EXIT_NUMERICAL if all(r.error for r in results) else EXIT_OK


def cmd_replay(args) -> int:
    """Re-run a recorded command from its manifest, optionally redirecting outputs."""
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InvalidArgumentError(f"no such manifest: {args.manifest}") from None
    params = dict(manifest["params"])
    if args.redirect:
        key = "out_dir" if "out_dir" in params else "out"
        params[key] = args.redirect
        if params.get("heatmap") and key == "out":
            params["heatmap"] = f"{args.redirect}.heatmap.csv"
    command = manifest["command"]
    if command not in COMMANDS or command == "replay":
        raise InvalidArgumentError(f"cannot replay command {command!r}")
    return COMMANDS[command](argparse.Namespace(**params))


COMMANDS = {
    "generate": cmd_generate,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "explain": cmd_explain,
    "fidelity": cmd_fidelity,
    "benchmark": cmd_benchmark,
    "replay": cmd_replay,
}


# ------------------------------------------------------------- parser


def _add_explainer_flags(p) -> None:
    p.add_argument("--method", choices=sorted(METHOD_NAMES), required=True)
    p.add_argument("--kernel-width", type=_positive_float, default=None,
                   help="RBF width (lime default 0.75*sqrt(d); lime-k default 0.5)")
    p.add_argument("--r-sx", type=_fraction, default=0.3,
                   help="LS sampling radius as a fraction of the query's max distance to the data")
    p.add_argument("--n-samples", type=_positive_int, default=5000)
    p.add_argument("--ridge-lambda", type=float, default=None)
    _add_gs_flags(p)


def _add_gs_flags(p) -> None:
    p.add_argument("--gs-n-per-step", type=_positive_int, default=1000)
    p.add_argument("--gs-step", type=_positive_float, default=0.01,
                   help="boundary search radius increment, as a fraction of the data scale")
    p.add_argument("--gs-max-radius", type=_positive_float, default=2.0,
                   help="boundary search cap, as a multiple of the data scale")


def _add_model_flags(p) -> None:
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", default=None)
    p.add_argument("--test-fraction", type=float, default=None, help="defaults to the model's training split")
    p.add_argument("--split-seed", type=int, default=None, help="defaults to the model's training split")
    p.add_argument("--seed", type=int, default=_default_seed())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locsur", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a half-moons CSV")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)

    p = sub.add_parser("preprocess", help="keep the numeric attributes of a raw CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the random forest black box")
    p.add_argument("--data", required=True)
    p.add_argument("--target", default="label")
    p.add_argument("--trees", type=_positive_int, default=200)
    p.add_argument("--max-depth", type=_positive_int, default=None)
    p.add_argument("--min-samples-leaf", type=_positive_int, default=1)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)

    p = sub.add_parser("explain", help="explain one prediction")
    _add_model_flags(p)
    _add_explainer_flags(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--index", type=int, help="row of the test split")
    g.add_argument("--point", help="comma-separated feature values")
    p.add_argument("--out", default=None, help="JSON path (stdout when omitted)")

    p = sub.add_parser("fidelity", help="Local Fidelity over the test split")
    _add_model_flags(p)
    _add_explainer_flags(p)
    p.add_argument("--r-fid", type=_fraction, default=0.05)
    p.add_argument("--n-eval", type=_positive_int, default=1000)
    p.add_argument("--metric", choices=("auc", "accuracy"), default="auc")
    p.add_argument("--max-eval-instances", type=int, default=0, help="0 evaluates the whole test split")
    p.add_argument("--sweep", type=_fraction_list, default=None, help="e.g. 0.05,0.1,0.2,0.4,0.8")
    p.add_argument("--heatmap", default=None, help="per-instance CSV path")
    p.add_argument("--out", default=None, help="JSON path (stdout when omitted)")

    p = sub.add_parser("benchmark", help="LIME / LIME-K / LS comparison table")
    p.add_argument("--dataset", action="append", default=[],
                   help=f"'{bench.HALF_MOONS}' or NAME=PATH[:TARGET]; repeatable")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--r-fid", type=_fraction_list, default=[0.05, 0.2])
    p.add_argument("--r-sx", type=_fraction, default=0.3)
    p.add_argument("--n-samples", type=_positive_int, default=5000)
    p.add_argument("--n-eval", type=_positive_int, default=1000)
    p.add_argument("--max-eval-instances", type=int, default=200)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--trees", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--moons-n", type=_positive_int, default=1000)
    p.add_argument("--moons-noise", type=float, default=0.3)
    p.add_argument("--lime-k-width", action="append", default=None, metavar="NAME=WIDTH")
    p.add_argument("--width-grid", type=lambda t: [_positive_float(v) for v in t.split(",")],
                   default=list(bench.DEFAULT_WIDTH_GRID), help="LIME-K width multiples of sqrt(d)")
    p.add_argument("--tuning-instances", type=_positive_int, default=30)
    _add_gs_flags(p)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--redirect", default=None, help="write outputs here instead")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    params = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    try:
        return COMMANDS[command](argparse.Namespace(**params))
    except LocsurError as exc:
        print(f"locsur {command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"locsur {command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
