"""Command-line interface: ``chebds generate|embed|fit|rollout|eval|tune``.

Every subcommand accepts ``--config FILE``, a JSON object whose keys are the
option names (dashes or underscores); options given on the command line take
precedence.  Output files go to ``--output-dir`` (default: the
``CHEBDS_OUTPUT_DIR`` environment variable, else the working directory)
unless an explicit path is given.

Exit codes: 0 success, 1 unexpected failure, 2 bad input, 3 numerical failure.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import demos, diffeo, dynamics, spectral, tuning
from .estimators import ChebyshevDS
from .exceptions import InputError, NumericalError
from .metrics import DEFAULT_RADIUS, fast_dtw

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
OUTPUT_ENV = "CHEBDS_OUTPUT_DIR"

DEFAULTS = {
    "c": 1.0,
    "n": 500,
    "copies": None,
    "mu": 0.9,
    "beta": 0.5,
    "max_layers": 175,
    "mse_stop": diffeo.DEFAULT_MSE_STOP,
    "dt": dynamics.DEFAULT_DT,
    "t_max": None,
    "eps": dynamics.DEFAULT_EPS,
    "rate": dynamics.DEFAULT_RATE,
    "radius": DEFAULT_RADIUS,
    "seed": 0,
    "jobs": 1,
    "threshold": tuning.DEFAULT_THRESHOLD,
    "mus": [0.6, 0.7, 0.8, 0.9],
    "betas": [0.3, 0.5, 0.7, 0.9],
    "layers": [50, 75, 100, 175],
}


def _floats(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    values = _floats(text)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in values]


def _resolve(args, key):
    """Flag value, else config value, else built-in default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    config = getattr(args, "_config", {})
    if key in config:
        return config[key]
    return DEFAULTS.get(key)


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("config must be a JSON object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _output_dir(args):
    out = args.output_dir or _resolve(args, "output_dir") or os.environ.get(OUTPUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _out_path(args, explicit, default_name):
    if explicit:
        parent = os.path.dirname(explicit)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return explicit
    return os.path.join(_output_dir(args), default_name)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# --- commands ---------------------------------------------------------------


def cmd_generate(args):
    kind = args.kind
    n = int(_resolve(args, "n"))
    c = float(_resolve(args, "c"))
    if kind == "unstable-spiral":
        demo = demos.unstable_spiral(c, n)
    elif kind == "stable-spiral":
        demo = demos.stable_spiral(c)
        if args.n is not None:
            demo = demos.resample_demo(demo, n)
    elif kind == "archimedean":
        demo = demos.archimedean_spiral(n)
    else:
        raise InputError(f"unknown generator {kind!r}")
    path = _out_path(args, args.out, f"{demo.label}.csv")
    demos.save_csv(demo, path)
    print(f"N={demo.n_points} n={demo.n_dims} label={demo.label} -> {path}")
    return EXIT_OK


def cmd_embed(args):
    demo = demos.load_csv(args.demo)
    spec = spectral.GraphSpec(demo.n_points, demo.n_dims, _resolve(args, "copies"))
    emb = spectral.build_embedding(spec)
    aligned = spectral.align_to_demo(emb, demo)
    path = _out_path(args, args.out, "embedding.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n = demo.n_dims
        writer.writerow([f"x_{d + 1}" for d in range(n)] + [f"a_{d + 1}" for d in range(n)])
        for raw, al in zip(emb.points, aligned):
            writer.writerow([repr(float(v)) for v in raw] + [repr(float(v)) for v in al])
    info = {
        "format": "chebds.embedding",
        "version": 1,
        "n_points": emb.n_points,
        "n_dims": emb.n_dims,
        "n_copies": emb.selection.n_copies,
        "eigenvalues": list(emb.selection.eigenvalues),
        "multiplicities": list(emb.selection.multiplicities),
        "bound": emb.selection.bound,
        "a": emb.a.tolist(),
        "b": emb.b.tolist(),
        "gamma": emb.gamma.tolist(),
        "start": emb.start.tolist(),
        "attractor": emb.attractor.tolist(),
    }
    _write_json(os.path.splitext(path)[0] + ".json", info)
    print(f"embedding N={emb.n_points} n={emb.n_dims} K={emb.selection.n_copies} -> {path}")
    return EXIT_OK


def cmd_fit(args):
    demo = demos.load_csv(args.demo)
    est = ChebyshevDS(
        n_copies=_resolve(args, "copies"),
        mu=float(_resolve(args, "mu")),
        beta=float(_resolve(args, "beta")),
        max_layers=int(_resolve(args, "max_layers")),
        mse_stop=float(_resolve(args, "mse_stop")),
    ).fit(demo.points, label=demo.label)
    model = est.model_
    path = _out_path(args, args.out, "model.json")
    model.save(path)
    report = {
        "format": "chebds.fit-report",
        "version": 1,
        "label": demo.label,
        "n_points": demo.n_points,
        "n_dims": demo.n_dims,
        "n_copies": est.embedding_.selection.n_copies,
        "mu": model.mu,
        "beta": model.beta,
        "max_layers": int(_resolve(args, "max_layers")),
        "layers": model.n_layers,
        "normalized_mse": model.normalized_mse,
    }
    report_path = args.report or os.path.splitext(path)[0] + "_report.json"
    _write_json(report_path, report)
    print(f"layers={model.n_layers} normalized_mse={model.normalized_mse:.3e} -> {path}")
    return EXIT_OK


def _rollout_one(task):
    model, rate, y0, dt, t_max, eps = task
    est = ChebyshevDS.from_model(model, rate=rate)
    return est.rollout(y0, dt=dt, t_max=t_max, eps=eps)


def cmd_rollout(args):
    model = diffeo.DiffeoModel.load(args.model)
    rate = float(_resolve(args, "rate"))
    dt = float(_resolve(args, "dt"))
    t_max = _resolve(args, "t_max")
    t_max = float(t_max) if t_max is not None else None
    eps = float(_resolve(args, "eps"))
    default_start = model.target_meta.get("start")
    if args.start is not None:
        starts = [np.asarray(args.start)]
    elif args.perturb is not None:
        radius, count, seed = args.perturb
        if default_start is None:
            raise InputError("model has no demonstration start; pass --start")
        starts = demos.perturb_starts(np.asarray(default_start), float(radius), int(count), int(seed))
    else:
        if default_start is None:
            raise InputError("model has no demonstration start; pass --start")
        starts = [np.asarray(default_start)]
    for y0 in starts:
        if len(y0) != model.n_dims:
            raise InputError(f"start has {len(y0)} coordinates, model expects {model.n_dims}")
    ChebyshevDS.from_model(model, rate=rate)  # validates the model before fanning out
    tasks = [(model, rate, y0, dt, t_max, eps) for y0 in starts]
    jobs = int(_resolve(args, "jobs"))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_rollout_one, tasks))
    else:
        traces = [_rollout_one(t) for t in tasks]
    out_dir = args.out or _output_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for k, (y0, trace) in enumerate(zip(starts, traces)):
        name = f"trace_{k:03d}.csv"
        trace.save_csv(os.path.join(out_dir, name))
        entry = trace.summary()
        entry.update({"file": name, "start": [float(v) for v in y0]})
        entries.append(entry)
    summary = {
        "format": "chebds.rollout-summary",
        "version": 1,
        "rate": rate,
        "dt": dt,
        "eps": eps,
        "all_converged": all(e["converged"] for e in entries),
        "traces": entries,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    converged = sum(e["converged"] for e in entries)
    print(f"{converged}/{len(entries)} traces converged -> {out_dir}")
    return EXIT_OK


def cmd_eval(args):
    demo = demos.load_csv(args.demo)
    trace = demos.load_csv(args.trace)
    score = fast_dtw(demo.points, trace.points, radius=int(_resolve(args, "radius")))
    doc = {"format": "chebds.dtw-score", "version": 1}
    doc.update(score.to_dict())
    if args.out:
        _write_json(_out_path(args, args.out, "score.json"), doc)
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_tune(args):
    demo = demos.load_csv(args.demo)
    spec = spectral.GraphSpec(demo.n_points, demo.n_dims, _resolve(args, "copies"))
    aligned = spectral.align_to_demo(spectral.build_embedding(spec), demo)
    report = tuning.grid_search(
        demo, aligned,
        mus=_resolve(args, "mus"),
        betas=_resolve(args, "betas"),
        layer_budgets=_resolve(args, "layers"),
        threshold=float(_resolve(args, "threshold")),
        jobs=int(_resolve(args, "jobs")),
    )
    out_dir = args.out or _output_dir(args)
    os.makedirs(out_dir, exist_ok=True)
    report.save_json(os.path.join(out_dir, "tuning.json"))
    report.save_heatmaps(out_dir)
    best = report.best
    print(
        f"selected mu={best.mu} beta={best.beta} layers={best.layers} "
        f"mse={best.mse:.3e} rule={report.selection_rule} -> {out_dir}"
    )
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--seed", type=int, help="seed for any randomness")

    parser = argparse.ArgumentParser(prog="chebds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write an analytic demonstration CSV")
    p.add_argument("kind", choices=["unstable-spiral", "stable-spiral", "archimedean"])
    p.add_argument("--c", type=float, help="spiral complexity")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", parents=[common], help="build the latent embedding of a demo")
    p.add_argument("--demo", required=True)
    p.add_argument("--copies", type=int, help="graph copies K (default n+1)")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("fit", parents=[common], help="fit a model to a demonstration")
    p.add_argument("--demo", required=True)
    p.add_argument("--copies", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--max-layers", dest="max_layers", type=int)
    p.add_argument("--mse-stop", dest="mse_stop", type=float)
    p.add_argument("--out", help="model JSON path")
    p.add_argument("--report", help="fit report JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rollout", parents=[common], help="integrate a fitted model")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--start", type=_floats, help="comma-separated start point")
    group.add_argument("--perturb", nargs=3, metavar=("RADIUS", "COUNT", "SEED"),
                       help="random starts around the demonstration start")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="output directory for traces")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("eval", parents=[common], help="FastDTW score of a trace against a demo")
    p.add_argument("--demo", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--radius", type=int)
    p.add_argument("--out", help="score JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", parents=[common], help="grid search over mu, beta, layers")
    p.add_argument("--demo", required=True)
    p.add_argument("--copies", type=int)
    p.add_argument("--mus", type=_floats)
    p.add_argument("--betas", type=_floats)
    p.add_argument("--layers", type=_ints)
    p.add_argument("--threshold", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = _load_config(args.config)
        if args.command == "rollout" and args.perturb is not None:
            try:
                r, cnt, sd = args.perturb
                args.perturb = (float(r), int(cnt), int(sd))
            except ValueError as exc:
                raise InputError(f"bad --perturb values: {exc}") from exc
        elif args.command == "rollout" and args.start is None and "perturb" in args._config:
            r, cnt, sd = args._config["perturb"]
            args.perturb = (float(r), int(cnt), int(sd) if args.seed is None else args.seed)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
