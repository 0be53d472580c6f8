"""Command-line front end.

Subcommands: ``generate``, ``identify``, ``predict``, ``evaluate``,
``spectrum`` and ``experiment``. Exit codes: 0 success, 2 usage or
configuration error, 3 data or file-format error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import benchmark
from .config import build_config, kernel_for
from .data import Dataset, load_dataset, save_dataset
from .errors import ConfigError, FormatError, ScldmdError
from .gram import assemble
from .model import identify, load_model, predict, save_model
from .signals import load_sampled_signal, parse_expression


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_matrix(path: Path, mat) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(mat):
            w.writerow([_fmt(v) for v in row])


def _floats(text: str, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from exc


def _parse_grid(text: str, n: int):
    """``low:high:count`` for every coordinate, or one such triple per coordinate."""
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise ConfigError(f"--grid: {len(parts)} coordinate ranges for a {n}-dimensional model")
    lows, highs, counts = [], [], []
    for p in parts:
        try:
            lo, hi, c = p.split(":")
            lows.append(float(lo))
            highs.append(float(hi))
            counts.append(int(c))
        except ValueError as exc:
            raise ConfigError(f"--grid: bad range {p!r}; expected low:high:count") from exc
        if lows[-1] > highs[-1]:
            raise ConfigError(f"--grid: low exceeds high in {p!r}")
        if counts[-1] < 1:
            raise ConfigError(f"--grid: count must be positive in {p!r}")
    return benchmark.grid_points(lows, highs, counts)


def _config(args):
    return build_config(args.config, seed=args.seed, rel_tol=args.tol)


def cmd_generate(args) -> int:
    cfg = _config(args)
    ds = benchmark.generate_dataset(cfg)
    out = Path(args.out or "dataset.csv")
    save_dataset(ds, out)
    print(f"wrote {len(ds)} trajectories ({sum(len(t) for t in ds)} rows) to {out}")
    return 0


def cmd_identify(args) -> int:
    cfg = _config(args)
    ds = load_dataset(args.dataset)
    kernel = kernel_for(cfg, ds.m)
    gram = assemble(ds, kernel)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        model = identify(ds, kernel, cfg.rel_tol, cfg.n_modes, gram=gram)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = Path(args.out or "model.json")
    save_model(model, out)
    if args.dump_gram:
        dump = Path(args.dump_gram)
        dump.mkdir(parents=True, exist_ok=True)
        _write_matrix(dump / "g_beta.csv", gram.g_beta)
        _write_matrix(dump / "g_d.csv", gram.g_d)
        _write_matrix(dump / "d_matrix.csv", gram.d_matrix)
    top = ", ".join(f"{s:.6g}" for s in model.factors.sigma[: min(5, model.rank)])
    print(f"rank {model.rank} of {len(ds)}")
    print(f"top singular values: {top}")
    print(f"wrote model to {out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    cfg = _config(args)
    if args.input_csv:
        signal = load_sampled_signal(args.input_csv)
    else:
        signal = parse_expression(args.input or cfg.prediction_input)
    if signal.m != model.m:
        raise ConfigError(f"input has {signal.m} channels but the model has {model.m}")
    x0 = _floats(args.x0, "--x0") if args.x0 else cfg.x0
    if len(x0) != model.n:
        raise ConfigError(f"--x0 has {len(x0)} entries but the model state has {model.n}")
    horizon = args.horizon if args.horizon is not None else cfg.horizon
    dt = args.dt if args.dt is not None else cfg.prediction_dt
    traj = predict(model, x0, signal, horizon, dt)
    out = Path(args.out or "prediction.csv")
    save_dataset(Dataset((traj,), ("prediction",)), out)
    print(f"wrote {len(traj)} samples to {out}")
    return 0


def _truth(name: str):
    if name in benchmark.SYSTEMS:
        return benchmark.SYSTEMS[name].vector_field, benchmark.SYSTEMS[name].n
    other = load_model(name)
    return other.vector_field, other.n


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    truth, n_truth = _truth(args.truth)
    if n_truth != model.n:
        raise FormatError(f"truth has state dimension {n_truth}, model has {model.n}")
    if args.grid:
        points = _parse_grid(args.grid, model.n)
    else:
        cfg = _config(args)
        if len(cfg.eval_low) != model.n:
            raise ConfigError(f"configured evaluation grid is {len(cfg.eval_low)}-dimensional; pass --grid")
        points = cfg.eval_points()
    err_f, err_g = benchmark.vector_field_errors(model.vector_field, truth, points)
    out = Path(args.out or "evaluation")
    out.mkdir(parents=True, exist_ok=True)
    benchmark.write_error_surface(out / "vf_error_f.csv", points, err_f)
    benchmark.write_error_surface(out / "vf_error_g.csv", points, err_g)
    metrics = {
        "points": len(points),
        "max_vf_error_f": float(err_f.max()),
        "max_vf_error_g": float(err_g.max()),
        "mean_vf_error_f": float(err_f.mean()),
        "mean_vf_error_g": float(err_g.mean()),
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    print(f"max |f - f_hat| = {metrics['max_vf_error_f']:.3e}, max |g - g_hat| = {metrics['max_vf_error_g']:.3e}")
    return 0


def cmd_spectrum(args) -> int:
    model = load_model(args.model)
    out = Path(args.out or "spectrum.csv")
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "sigma"])
        for j, s in enumerate(model.factors.sigma):
            w.writerow([j, _fmt(s)])
    print(f"rank {model.rank}; wrote {len(model.factors.sigma)} singular values to {out}")
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report = benchmark.run_experiment(cfg)
    out = benchmark.write_report(report, args.out or "report")
    m = report.metrics
    errs = ", ".join(f"{e:.3e}" for e in m["max_trajectory_error"])
    print(f"rank {m['rank']} of {m['trajectories']}; max trajectory error per state: {errs}")
    print(f"max |f - f_hat| = {m['max_vf_error_f']:.3e}, max |g - g_hat| = {m['max_vf_error_g']:.3e}")
    print(f"wrote report to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="TOML run configuration")
    shared.add_argument("--seed", type=int, help="random seed (overrides the config)")
    shared.add_argument("--out", metavar="PATH", help="output file or directory")
    shared.add_argument("--tol", type=float, help="relative eigenvalue cutoff of the pseudoinverse")

    parser = argparse.ArgumentParser(prog="scldmd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[shared], help="simulate a training dataset")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("identify", parents=[shared], help="identify a model from a dataset CSV")
    p.add_argument("dataset")
    p.add_argument("--dump-gram", metavar="DIR", help="also write G_beta, G_d and D as CSV")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("predict", parents=[shared], help="simulate an identified model")
    p.add_argument("model")
    p.add_argument("--x0", help="initial state, comma separated")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", help="sinusoid sum, e.g. 'sin:1:1,cos:1:2'")
    group.add_argument("--input-csv", metavar="PATH", help="sampled input signal 't,u1,...'")
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[shared], help="vector-field error surfaces")
    p.add_argument("model")
    p.add_argument("--truth", required=True, help=f"{' | '.join(benchmark.SYSTEMS)} | model file")
    p.add_argument("--grid", help="low:high:count (all coordinates) or one triple per coordinate; write --grid=-2:2:9 when low is negative")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("spectrum", parents=[shared], help="singular values of a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("experiment", parents=[shared], help="run a full synthetic experiment")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScldmdError as exc:
        print(f"scldmd {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"scldmd {args.command}: error: {exc}", file=sys.stderr)
        return FormatError.exit_code


if __name__ == "__main__":
    sys.exit(main())
