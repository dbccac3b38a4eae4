"""Command-line entry point: solve, bounds, lil, simulate.

Exit codes: 0 success, 2 config/input error, 3 mathematical precondition
failure.  All outputs are written atomically (temp file + rename) and carry
the package version and a config hash in their header.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from . import bounds as bnd
from .errors import ConfigError, GflError, PreconditionError
from .lil import LilEnvelope, verify_paths
from .losses import NoiseModel, make_loss
from .signal import PiecewiseConstantSignal
from .simulate import ExperimentSpec, run_experiment
from .solver import FusedLassoProblem, solve


def _hash_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict, config_hash: str) -> None:
    payload = {"version": __version__, "config_hash": config_hash} | payload
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: str, header: str, rows, config_hash: str) -> None:
    lines = [f"# version={__version__} config_hash={config_hash}", header]
    lines.extend(rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_values(path: str) -> np.ndarray:
    # one decimal value per line, no header
    try:
        with open(path) as fh:
            vals = [float(line.strip()) for line in fh if line.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read input file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"non-numeric line in {path}: {exc}") from exc
    if not vals:
        raise ConfigError(f"input file {path} is empty")
    return np.asarray(vals)


def _fmt(x) -> str:
    return repr(float(x))


def _cmd_solve(args) -> int:
    y = _read_values(args.input)
    loss = make_loss(args.loss, args.tau)
    cfg_hash = _hash_obj(
        {"cmd": "solve", "lambda": args.lam, "loss": args.loss, "tau": args.tau, "n": int(y.size)}
    )
    sol = solve(FusedLassoProblem(y=y, lam=args.lam, loss=loss))
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for i in range(y.size):
        z = _fmt(sol.dual_z[i]) if i < y.size - 1 else ""
        rows.append(f"{i + 1},{_fmt(y[i])},{_fmt(sol.theta_hat[i])},{z}")
    _write_csv(os.path.join(args.out_dir, "solution.csv"), "i,y,theta_hat,z", rows, cfg_hash)
    _write_json(
        os.path.join(args.out_dir, "solution.json"),
        {
            "objective": sol.objective_value,
            "kkt_residual": sol.kkt_residual,
            "lambda": args.lam,
            "loss": args.loss,
            "tau": args.tau,
            "n": int(y.size),
        },
        cfg_hash,
    )
    return 0


def _parse_signal(args) -> PiecewiseConstantSignal:
    try:
        values = [float(v) for v in args.signal_values.split(",")]
        lengths = [int(v) for v in args.signal_lengths.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad signal specification: {exc}") from exc
    return PiecewiseConstantSignal(values, lengths)


def _cmd_bounds(args) -> int:
    signal = _parse_signal(args)
    geom = signal.geometry()
    params = bnd.BoundParams(
        sigma=args.sigma, delta=args.delta, lam=args.lam, growth_L=args.growth_L
    )
    cfg = {
        "cmd": "bounds",
        "signal": signal.to_record(),
        "sigma": args.sigma,
        "delta": args.delta,
        "lambda": args.lam,
        "growth_L": args.growth_L,
    }
    cfg_hash = _hash_obj(cfg)
    report = bnd.bound_report(geom, params)
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for i in range(1, geom.n + 1):
        j = i - 1
        rows.append(
            f"{i},{geom.k_of[j]},{geom.d[j]},{_fmt(report.B[j])},"
            f"{_fmt(report.B_improved[j])},{_fmt(report.B_quantile[j])},"
            f"{int(report.applicable[j])}"
        )
    _write_csv(
        os.path.join(args.out_dir, "bounds.csv"),
        "i,k,d,B,B_improved,B_quantile,applicable",
        rows,
        cfg_hash,
    )
    payload = {
        "inputs": cfg,
        "n": geom.n,
        "K": geom.K,
        "signal_admissible": report.signal_admissible,
        "pointwise_probability": report.pointwise_probability,
        "pointwise_probability_raw": report.pointwise_probability_raw,
        "B_max": float(report.B.max()),
        "B_min": float(report.B.min()),
    }
    _write_json(os.path.join(args.out_dir, "bounds.json"), payload, cfg_hash)
    return 0


def _cmd_lil(args) -> int:
    env = LilEnvelope(sigma=args.sigma, delta=args.delta)
    noise = NoiseModel(kind="gaussian", scale=args.sigma)
    cfg = {
        "cmd": "lil",
        "sigma": args.sigma,
        "delta": args.delta,
        "horizon": args.horizon,
        "paths": args.paths,
        "seed": args.seed,
    }
    cfg_hash = _hash_obj(cfg)
    t_grid = sorted(set(min(args.horizon, 2**e) for e in range(0, 64) if 2**e <= args.horizon))
    res = verify_paths(noise, args.horizon, args.paths, env, seed=args.seed, t_grid=t_grid)
    os.makedirs(args.out_dir, exist_ok=True)
    rq = res.pop("ratio_quantiles")
    rows = [
        f"{t}," + ",".join(_fmt(v) for v in vals)
        for t, vals in zip(rq["t"], rq["values"])
    ]
    header = "t," + ",".join(f"ratio_q{int(q * 100)}" for q in rq["q"])
    _write_csv(os.path.join(args.out_dir, "lil.csv"), header, rows, cfg_hash)
    _write_json(os.path.join(args.out_dir, "lil.json"), {"inputs": cfg} | res, cfg_hash)
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        cfg["seed"] = args.seed
    spec = ExperimentSpec.from_config(cfg)
    result = run_experiment(spec)
    cfg_hash = spec.config_hash()
    os.makedirs(args.out_dir, exist_ok=True)
    _write_json(os.path.join(args.out_dir, "summary.json"), result, cfg_hash)

    per_index = result.get("per_index")
    if per_index:
        cols = list(per_index[0].keys())
        rows = [
            ",".join(_fmt(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols)
            for r in per_index
        ]
        _write_csv(os.path.join(args.out_dir, "per_index.csv"), ",".join(cols), rows, cfg_hash)
    if "sse_samples" in result:
        rows = [f"{i},{_fmt(v)}" for i, v in enumerate(result["sse_samples"])]
        _write_csv(os.path.join(args.out_dir, "sse.csv"), "replication,sse", rows, cfg_hash)
    if "d_sweep" in result:
        ds = result["d_sweep"]
        rows = [f"{d},{_fmt(m)}" for d, m in zip(ds["d"], ds["median_err"])]
        _write_csv(os.path.join(args.out_dir, "plotdata_d_sweep.csv"), "d,median_err", rows, cfg_hash)
    if "n_sweep" in result:
        rows = [
            f"{r['n']},{_fmt(r['lambda'])},{_fmt(r['median_err_change_point'])},{_fmt(r['median_err_interior'])}"
            for r in result["n_sweep"]["rows"]
        ]
        _write_csv(
            os.path.join(args.out_dir, "plotdata_n_sweep.csv"),
            "n,lambda,median_err_change_point,median_err_interior",
            rows,
            cfg_hash,
        )
    if result.get("experiment") == "lambda_sweep":
        rows = [
            f"{_fmt(lam)},{_fmt(s)}," + ("" if b is None else _fmt(b))
            for lam, s, b in zip(result["lambda_grid"], result["mean_sse"], result["bound"])
        ]
        _write_csv(
            os.path.join(args.out_dir, "plotdata_lambda_sweep.csv"),
            "lambda,mean_sse,bound",
            rows,
            cfg_hash,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gfl", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="fit the fused-lasso estimator to a CSV of values")
    ps.add_argument("--input", required=True, help="CSV, one value per line")
    ps.add_argument("--lambda", dest="lam", type=float, required=True)
    ps.add_argument("--loss", choices=("square", "quantile"), default="square")
    ps.add_argument("--tau", type=float, default=None)
    ps.add_argument("--out-dir", default="out")
    ps.set_defaults(func=_cmd_solve)

    pb = sub.add_parser("bounds", help="evaluate the per-index error bounds for a signal")
    pb.add_argument("--signal-values", required=True, help="comma-separated segment values")
    pb.add_argument("--signal-lengths", required=True, help="comma-separated segment lengths")
    pb.add_argument("--sigma", type=float, default=0.5)
    pb.add_argument("--delta", type=float, required=True)
    pb.add_argument("--lambda", dest="lam", type=float, required=True)
    pb.add_argument("--growth-L", dest="growth_L", type=float, default=None)
    pb.add_argument("--out-dir", default="out")
    pb.set_defaults(func=_cmd_bounds)

    pl = sub.add_parser("lil", help="Monte Carlo check of the iterated-logarithm envelope")
    pl.add_argument("--sigma", type=float, default=1.0)
    pl.add_argument("--delta", type=float, required=True)
    pl.add_argument("--horizon", type=int, default=10_000)
    pl.add_argument("--paths", type=int, default=10_000)
    pl.add_argument("--seed", type=int, required=True)
    pl.add_argument("--out-dir", default="out")
    pl.set_defaults(func=_cmd_lil)

    pm = sub.add_parser("simulate", help="run a configured experiment")
    pm.add_argument("--config", required=True, help="JSON experiment config")
    pm.add_argument("--seed", type=int, default=None, help="override the config seed")
    pm.add_argument("--out-dir", default="out")
    pm.set_defaults(func=_cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        for f in exc.failures:
            print(f"  {f}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GflError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
