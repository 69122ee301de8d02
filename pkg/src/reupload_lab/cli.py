"""``reupload-lab`` command line.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime or numeric
error.  Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import data, experiments, measures, model, plot, rng
from .model import CircuitSpec, TrainConfig

log = logging.getLogger("reupload_lab")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
MODEL_FORMAT = "reupload-lab-model"
KIND_ALIASES = {"gaussian": "gaussian_means", "regression": "regression_tanh", "correlated": "correlated_gaussian",
                "idx": "idx_images"}


class UsageError(Exception):
    """Bad flags, config or input files."""


# -- config handling ------------------------------------------------------------------------

CIRCUIT_KEYS = {f.name for f in fields(CircuitSpec)}
TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
TRAIN_FILE_SCHEMA = {"circuit": CIRCUIT_KEYS, "train": TRAIN_KEYS, "task": None}


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"{path}: top level must be an object")
    return obj


def check_schema(obj: dict, schema: dict, path: str = "$") -> None:
    """Reject keys not named in ``schema``; nested sets list allowed sub-keys."""
    for key, val in obj.items():
        if key not in schema:
            raise UsageError(f"unknown key at {path}.{key}")
        sub = schema[key]
        if isinstance(sub, set):
            if not isinstance(val, dict):
                raise UsageError(f"{path}.{key} must be an object")
            for k in val:
                if k not in sub:
                    raise UsageError(f"unknown key at {path}.{key}.{k}")


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(obj: dict, overrides: list[str]) -> dict:
    """Apply ``a.b=value`` overrides; values are parsed as JSON when possible."""
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.split(".")
        node = obj
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise UsageError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = _parse_value(raw)
    return obj


def _seed(args) -> int:
    return args.seed if args.seed is not None else rng.default_seed()


# -- model files ----------------------------------------------------------------------------


def model_to_json(h: model.Hypothesis, extra: dict | None = None) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "task": h.task,
        "spec": h.spec.to_dict(),
        "theta_shape": list(h.theta.shape),
        "theta": [float(v) for v in h.theta.ravel()],
    }
    doc.update(extra or {})
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(path: str) -> model.Hypothesis:
    doc = _load_json(path)
    if doc.get("format") != MODEL_FORMAT:
        raise UsageError(f"{path}: not a model file (format field)")
    for key in ("task", "spec", "theta_shape", "theta"):
        if key not in doc:
            raise UsageError(f"{path}: missing field {key!r}")
    spec_raw = doc["spec"]
    bad = set(spec_raw) - CIRCUIT_KEYS
    if bad:
        raise UsageError(f"{path}: unknown key at $.spec.{sorted(bad)[0]}")
    try:
        spec = CircuitSpec(**spec_raw)
        theta = np.asarray(doc["theta"], dtype=float).reshape(doc["theta_shape"])
        return model.Hypothesis(spec, theta, doc["task"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


# -- subcommands ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = _seed(args)
    args.kind = KIND_ALIASES.get(args.kind, args.kind)
    if args.kind == "idx_images":
        if not (args.images and args.labels):
            raise UsageError("idx_images needs --images and --labels")
        ds = data.load_idx_images(args.images, args.labels, args.downsample_to, args.angle_scale)
    else:
        if args.dim is None or args.size is None:
            raise UsageError("--dim and --size are required")
        try:
            spec = data.DatasetSpec(args.kind, args.dim, args.size, seed, args.sigma2, args.margin)
            ds = data.generate(spec, args.purpose)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    text = data.dataset_to_csv(ds)
    if args.out:
        Path(args.out).write_bytes(text.encode("utf-8"))
        out = sys.stdout
    else:
        sys.stdout.write(text)
        out = sys.stderr
    if ds.task == "classification":
        c0, c1 = ds.class_counts()
        print(f"rows={len(ds)} class0={c0} class1={c1}", file=out)
    else:
        print(f"rows={len(ds)}", file=out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.eps is None and args.l is None:
        raise UsageError("give --eps (layer threshold) and/or --l (divergence bound)")
    print(f"N\t{args.n}")
    print(f"sigma2\t{args.sigma2!r}")
    if args.l is not None:
        b = measures.divergence_bound(args.n, args.l, args.sigma2)
        print(f"L\t{args.l}")
        print(f"bound\t{b!r}")
        print(f"td_bound\t{measures.td_from_d2_bound(b)!r}")
    if args.eps is not None:
        print(f"eps\t{args.eps!r}")
        print(f"layer_threshold\t{measures.layer_threshold(args.n, args.sigma2, args.eps)}")
    return EXIT_OK


def _read_data(path: str, task: str | None) -> data.Dataset:
    try:
        return data.read_dataset(path, task)
    except FileNotFoundError:
        raise UsageError(f"dataset {path} does not exist") from None
    except data.DataFormatError as exc:
        raise UsageError(str(exc)) from None


def _train_settings(args) -> tuple[CircuitSpec, TrainConfig, str]:
    cfg: dict = {"circuit": {}, "train": {}}
    if args.config:
        cfg = _load_json(args.config)
        check_schema(cfg, TRAIN_FILE_SCHEMA)
        cfg.setdefault("circuit", {})
        cfg.setdefault("train", {})
    flags = {
        "circuit": {"n_qubits": args.n, "encoding_layers": args.l, "total_layers": args.l_max,
                    "repetitions": args.p, "entangler": args.entangler},
        "train": {"epochs": args.epochs, "learning_rate": args.lr, "batch_size": args.batch_size,
                  "loss": args.loss, "gradient_method": args.gradient},
    }
    for section, vals in flags.items():
        for k, v in vals.items():
            if v is not None:
                cfg[section][k] = v
    if args.seed is not None or "seed" not in cfg["train"]:
        cfg["train"]["seed"] = _seed(args)
    apply_overrides(cfg, args.set)
    check_schema(cfg, TRAIN_FILE_SCHEMA)
    task = args.task or cfg.get("task") or "classification"
    if task not in ("classification", "regression"):
        raise UsageError(f"unknown task {task!r}")
    if task == "regression" and "loss" not in cfg["train"]:
        cfg["train"]["loss"] = "mse"
    try:
        spec = CircuitSpec(**cfg["circuit"])
        tc = TrainConfig(**cfg["train"])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid settings: {exc}") from None
    return spec, tc, task


def _print_metrics(prefix: str, m: model.Metrics, file=None) -> None:
    print(f"{prefix}error\t{m.error!r}", file=file)
    if m.accuracy is not None:
        print(f"{prefix}accuracy\t{m.accuracy!r}", file=file)
    print(f"{prefix}h_gap\t{m.h_gap!r}", file=file)
    print(f"{prefix}mean_h\t{m.mean_h!r}", file=file)


def cmd_train(args) -> int:
    spec, tc, task = _train_settings(args)
    ds = _read_data(args.data, task)
    if ds.dim != spec.data_dim:
        raise UsageError(f"dataset has {ds.dim} features but the circuit encodes 3*N*L = {spec.data_dim}")
    result = model.train(ds.features, ds.labels, spec, tc, task)
    m = model.evaluate(result.hypothesis, ds.features, ds.labels)
    extra = {"train_error": m.error, "best_epoch": result.best_epoch, "train_config": asdict(tc)}
    text = model_to_json(result.hypothesis, extra)
    out = sys.stdout
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        out = sys.stderr
    _print_metrics("train_", m, out)
    print(f"best_epoch\t{result.best_epoch}", file=out)
    return EXIT_OK


def cmd_eval(args) -> int:
    h = model_from_json(args.model)
    ds = _read_data(args.data, h.task)
    xs = ds.features
    if args.truncate and xs.shape[1] > h.spec.data_dim:
        xs = xs[:, : h.spec.data_dim]
    if xs.shape[1] != h.spec.data_dim:
        raise UsageError(f"dataset has {xs.shape[1]} features but the model encodes {h.spec.data_dim}")
    if len(xs) == 0:
        raise UsageError("dataset is empty")
    _print_metrics("", model.evaluate(h, xs, ds.labels))
    return EXIT_OK


def _experiment_config(args) -> experiments.ExperimentConfig:
    if args.config:
        raw = _load_json(args.config)
        raw.setdefault("id", args.id)
        if raw["id"] != args.id:
            raise UsageError(f"config id {raw['id']!r} differs from --id {args.id!r}")
    else:
        raw = experiments.profile_config(args.id, args.profile).to_dict()
    if args.seeds:
        raw["seeds"] = [int(s) for s in args.seeds.split(",")]
    apply_overrides(raw, args.set)
    try:
        return experiments.ExperimentConfig.from_dict(raw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    out_dir = args.out or cfg.output_dir or "results"
    log.info("running %s with %d grid points x %d seeds", cfg.id, len(cfg.grid), len(cfg.seeds))
    result = experiments.run_experiment(cfg, jobs=args.jobs)
    csv_path, json_path = experiments.write_output(result, out_dir)
    print(f"csv\t{csv_path}")
    print(f"summary\t{json_path}")
    for name, ok in result.summary["checks"].items():
        print(f"check\t{name}\t{'pass' if ok else 'FAIL'}")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        rows, _ = experiments.read_results(args.results)
    except FileNotFoundError:
        raise UsageError(f"results file {args.results} does not exist") from None
    group_by = [g for g in args.group_by.split(",") if g] if args.group_by else []
    try:
        svg = plot.render_svg(rows, args.metric, args.x, group_by, args.log_y,
                              False if args.no_bound else None, args.title)
    except plot.PlotError as exc:
        raise UsageError(str(exc)) from None
    out = args.out or str(Path(args.results).with_suffix(".svg"))
    Path(out).write_bytes(svg.encode("utf-8"))
    print(f"svg\t{out}")
    return EXIT_OK


def cmd_approx_check(args) -> int:
    n, layers, reps = args.n, args.l, args.p
    if args.delta is not None:
        print(f"q_needed\t{data.approx_qubits_needed(n, layers, reps, args.delta)}")
    qs = [args.q] if args.q is not None else [2, 4, 8, 12]
    spec = CircuitSpec(n, layers, layers, reps, args.entangler)
    seed = _seed(args)
    theta = rng.uniform(rng.stream(seed, "theta"), spec.theta_shape, 0.0, 2 * math.pi)
    xs = rng.uniform(rng.stream(seed, "data"), (args.samples, spec.data_dim), 0.0, 2 * math.pi)
    h = model.class_probabilities(spec, xs, theta)[:, 0]
    print("q\tmeasured\tbound")
    worst = 0.0
    for q in qs:
        hq = model.class_probabilities(spec, data.quantize(xs, q)[0], theta)[:, 0]
        measured = float(np.max(np.abs(h - hq)))
        bound = data.approx_error_bound(n, layers, reps, q)
        worst = max(worst, measured / bound)
        print(f"{q}\t{measured!r}\t{bound!r}")
    print(f"worst_ratio\t{worst!r}")
    return EXIT_OK if worst <= 1 else EXIT_RUNTIME


# -- parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reupload-lab", description="Data re-uploading circuit lab.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset CSV")
    g.add_argument("--kind", required=True, choices=data.KINDS + tuple(KIND_ALIASES))
    g.add_argument("--dim", type=int)
    g.add_argument("--size", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--sigma2", type=float, default=0.8)
    g.add_argument("--margin", type=float, default=0.3)
    g.add_argument("--purpose", default="data", help="random stream name; use 'test' for held-out draws")
    g.add_argument("--images")
    g.add_argument("--labels")
    g.add_argument("--downsample-to", type=int, default=12)
    g.add_argument("--angle-scale", type=float, default=math.pi)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bounds", help="divergence bound and layer threshold")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--sigma2", type=float, required=True)
    b.add_argument("--eps", type=float)
    b.add_argument("--l", type=int)
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("train", help="train a model on a dataset CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--config")
    t.add_argument("--n", type=int)
    t.add_argument("--l", type=int)
    t.add_argument("--l-max", type=int)
    t.add_argument("--p", type=int)
    t.add_argument("--entangler", choices=("ring_cnot", "none"))
    t.add_argument("--task", choices=("classification", "regression"))
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--loss", choices=("cross_entropy", "mse"))
    t.add_argument("--gradient", choices=("adjoint", "shift"))
    t.add_argument("--seed", type=int)
    t.add_argument("--set", action="append", metavar="KEY=VALUE")
    t.add_argument("--out", "-o")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--truncate", action="store_true", help="use only the first 3*N*L features")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("experiment", help="run an experiment and write CSV + JSON")
    x.add_argument("--id", required=True, choices=experiments.EXPERIMENT_IDS)
    x.add_argument("--profile", choices=experiments.PROFILES, default="desk")
    x.add_argument("--config")
    x.add_argument("--seeds", help="comma-separated seed list")
    x.add_argument("--set", action="append", metavar="KEY=VALUE")
    x.add_argument("--jobs", type=int, default=1)
    x.add_argument("--out", "-o", help="output directory")
    x.set_defaults(func=cmd_experiment)

    pl = sub.add_parser("plot", help="render a result CSV as SVG")
    pl.add_argument("--results", required=True)
    pl.add_argument("--metric", required=True)
    pl.add_argument("--x", default="L")
    pl.add_argument("--group-by", default="P")
    pl.add_argument("--log-y", action="store_true")
    pl.add_argument("--no-bound", action="store_true")
    pl.add_argument("--title")
    pl.add_argument("--out", "-o")
    pl.set_defaults(func=cmd_plot)

    a = sub.add_parser("approx-check", help="input quantisation error against its bound")
    a.add_argument("--n", type=int, default=1)
    a.add_argument("--l", type=int, default=1)
    a.add_argument("--p", type=int, default=1)
    a.add_argument("--delta", type=float)
    a.add_argument("--q", type=int)
    a.add_argument("--samples", type=int, default=256)
    a.add_argument("--entangler", choices=("ring_cnot", "none"), default="ring_cnot")
    a.add_argument("--seed", type=int)
    a.set_defaults(func=cmd_approx_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"reupload-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, OSError, RuntimeError) as exc:
        print(f"reupload-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
