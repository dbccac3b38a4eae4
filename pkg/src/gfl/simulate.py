"""Seeded Monte Carlo experiments: generate data, solve, compare to bounds.

Every experiment is described by an ExperimentSpec (parsed from a JSON config)
and returns a plain-dict result that serializes byte-identically given the
same (spec, seed).  Replication seeds are derived from the base seed with a
splitmix64 mix so replications are independent and order-insensitive.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import bounds as bnd
from .errors import ConfigError, PreconditionError
from .losses import NoiseModel, make_loss
from .signal import PiecewiseConstantSignal
from .solver import FusedLassoProblem, solve

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; used to derive per-replication seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derived_seed(base_seed: int, index: int) -> int:
    return splitmix64((base_seed & _MASK) ^ splitmix64(index & _MASK))


_LAMBDA_RULES = ("fixed", "sqrt_n_over_k", "log_sqrt_n_over_k")
_MONITOR_NAMES = ("all", "interior", "change_points")
_EXPERIMENTS = ("pointwise", "elementwise_quantile", "sse", "rate_sweep", "lambda_sweep")

_ALLOWED_KEYS = {
    "experiment",
    "signal",
    "noise",
    "loss",
    "lambda",
    "delta",
    "replications",
    "seed",
    "monitor",
    "growth_L",
    "n_sweep",
    "d_grid",
    "lambda_grid",
    "improved",
}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    signal: PiecewiseConstantSignal
    noise: NoiseModel
    loss: object
    lambda_rule: str
    lambda_value: float | None
    delta: float
    replications: int
    seed: int
    monitor: object = "interior"
    growth_L: float | None = None
    n_sweep: tuple = ()
    d_grid: tuple = ()
    lambda_grid: tuple = ()
    improved: bool = False

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.lambda_rule not in _LAMBDA_RULES:
            raise ConfigError(f"unknown lambda rule {self.lambda_rule!r}")
        if self.lambda_rule == "fixed" and (
            self.lambda_value is None or not self.lambda_value >= 0
        ):
            raise ConfigError("fixed lambda rule requires a nonnegative value")
        if isinstance(self.monitor, str):
            if self.monitor not in _MONITOR_NAMES:
                raise ConfigError(f"unknown monitor set {self.monitor!r}")
        else:
            object.__setattr__(self, "monitor", tuple(int(i) for i in self.monitor))

    @classmethod
    def from_config(cls, cfg: dict) -> "ExperimentSpec":
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(cfg) - _ALLOWED_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("experiment", "signal", "noise", "loss", "delta", "seed"):
            if key not in cfg:
                raise ConfigError(f"config missing required key {key!r}")
        loss_cfg = dict(cfg["loss"])
        kind = loss_cfg.pop("kind", None)
        tau = loss_cfg.pop("tau", None)
        if loss_cfg:
            raise ConfigError(f"unknown loss keys: {sorted(loss_cfg)}")
        lam_cfg = dict(cfg.get("lambda", {"rule": "sqrt_n_over_k"}))
        rule = lam_cfg.pop("rule", "fixed")
        value = lam_cfg.pop("value", None)
        if lam_cfg:
            raise ConfigError(f"unknown lambda keys: {sorted(lam_cfg)}")
        growth_L = cfg.get("growth_L")
        noise = NoiseModel.from_record(cfg["noise"])
        if growth_L == "auto":
            growth_L = noise.growth_constant()
        return cls(
            experiment=cfg["experiment"],
            signal=PiecewiseConstantSignal.from_record(cfg["signal"]),
            noise=noise,
            loss=make_loss(kind, tau),
            lambda_rule=rule,
            lambda_value=value,
            delta=float(cfg["delta"]),
            replications=int(cfg.get("replications", 100)),
            seed=int(cfg["seed"]),
            monitor=cfg.get("monitor", "interior"),
            growth_L=None if growth_L is None else float(growth_L),
            n_sweep=tuple(int(x) for x in cfg.get("n_sweep", ())),
            d_grid=tuple(int(x) for x in cfg.get("d_grid", ())),
            lambda_grid=tuple(float(x) for x in cfg.get("lambda_grid", ())),
            improved=bool(cfg.get("improved", False)),
        )

    def to_config(self) -> dict:
        cfg = {
            "experiment": self.experiment,
            "signal": self.signal.to_record(),
            "noise": self.noise.to_record(),
            "loss": {"kind": self.loss.kind}
            | ({"tau": self.loss.tau} if self.loss.kind == "quantile" else {}),
            "lambda": {"rule": self.lambda_rule, "value": self.lambda_value},
            "delta": self.delta,
            "replications": self.replications,
            "seed": self.seed,
            "monitor": list(self.monitor) if not isinstance(self.monitor, str) else self.monitor,
            "growth_L": self.growth_L,
            "improved": self.improved,
        }
        if self.n_sweep:
            cfg["n_sweep"] = list(self.n_sweep)
        if self.d_grid:
            cfg["d_grid"] = list(self.d_grid)
        if self.lambda_grid:
            cfg["lambda_grid"] = list(self.lambda_grid)
        return cfg

    def config_hash(self) -> str:
        blob = json.dumps(self.to_config(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def resolve_lambda(rule: str, value: float | None, n: int, K: int) -> float:
    if rule == "fixed":
        return float(value)
    if rule == "sqrt_n_over_k":
        return math.sqrt(n / K)
    if rule == "log_sqrt_n_over_k":
        return math.log(n) * math.sqrt(n / K)
    raise ConfigError(f"unknown lambda rule {rule!r}")


def monitored_indices(geometry, monitor) -> np.ndarray:
    """Resolve a monitor set to sorted 1-based indices."""
    if isinstance(monitor, str):
        if monitor == "all":
            return np.arange(1, geometry.n + 1)
        if monitor == "interior":
            floor = max(3, geometry.m_min // 4)
            return np.flatnonzero(geometry.d >= floor) + 1
        if monitor == "change_points":
            return np.flatnonzero(geometry.d == 1) + 1
        raise ConfigError(f"unknown monitor set {monitor!r}")
    idx = np.asarray(sorted(set(monitor)), dtype=np.int64)
    if idx.size == 0 or idx[0] < 1 or idx[-1] > geometry.n:
        raise ConfigError("monitored indices out of range")
    return idx


def _binomial_slack(freq: float, r: int) -> float:
    return 3.0 * math.sqrt(freq * (1.0 - freq) / r)


def _provenance(spec: ExperimentSpec) -> dict:
    from . import __version__

    return {
        "config_hash": spec.config_hash(),
        "seed": spec.seed,
        "version": __version__,
    }


def _sample_y(spec: ExperimentSpec, theta_star, r: int) -> np.ndarray:
    rng = np.random.default_rng(derived_seed(spec.seed, r))
    return theta_star + spec.noise.sample_rng(theta_star.size, rng)


def _pop_loss_values(spec: ExperimentSpec, err: np.ndarray):
    """L+(err) and L-(err) elementwise; identical for continuous noise."""
    if spec.loss.kind == "square":
        return -err, -err
    lp = spec.loss.tau - spec.noise.cdf(err)
    lm = spec.loss.tau - spec.noise.cdf_left(err)
    return lp, lm


def run_pointwise(spec: ExperimentSpec) -> dict:
    """Frequencies of the two pointwise bound events at each monitored index.

    Events: {L+(err_i) <= -B_i} and {L-(err_i) >= B_i}, each guaranteed to
    have probability at most prob_const() * delta^2.
    """
    geom = spec.signal.geometry()
    theta_star = spec.signal.expand()
    lam = resolve_lambda(spec.lambda_rule, spec.lambda_value, geom.n, geom.K)
    sigma = spec.noise.sigma_for(spec.loss)
    params = bnd.BoundParams(sigma=sigma, delta=spec.delta, lam=lam)
    idx = monitored_indices(geom, spec.monitor)
    B = np.array([bnd.compute_B(int(i), geom, params) for i in idx])

    R = spec.replications
    lower_hits = np.zeros(idx.size, dtype=np.int64)
    upper_hits = np.zeros(idx.size, dtype=np.int64)
    abs_err_sum = np.zeros(idx.size)
    cross_check_ok = True
    for r in range(R):
        y = _sample_y(spec, theta_star, r)
        theta = solve(FusedLassoProblem(y=y, lam=lam, loss=spec.loss)).theta_hat
        err = theta[idx - 1] - theta_star[idx - 1]
        lp, lm = _pop_loss_values(spec, err)
        ev_lo = lp <= -B
        ev_hi = lm >= B
        lower_hits += ev_lo
        upper_hits += ev_hi
        abs_err_sum += np.abs(err)
        if spec.loss.kind == "square":
            # for the square loss L(t) = -t, so the event is just err >= B
            if not (np.array_equal(ev_lo, err >= B) and np.array_equal(ev_hi, err <= -B)):
                cross_check_ok = False

    p_bound = bnd.prob_const() * spec.delta**2
    rows = []
    worst = 0.0
    for j, i in enumerate(idx):
        f_lo = lower_hits[j] / R
        f_hi = upper_hits[j] / R
        worst = max(worst, f_lo, f_hi)
        rows.append(
            {
                "i": int(i),
                "k": int(geom.k_of[i - 1]),
                "d": int(geom.d[i - 1]),
                "B": B[j],
                "freq_lower": f_lo,
                "freq_upper": f_hi,
                "mean_abs_err": abs_err_sum[j] / R,
            }
        )
    slack = _binomial_slack(worst, R)
    return {
        "experiment": "pointwise",
        "lambda": lam,
        "sigma": sigma,
        "delta": spec.delta,
        "replications": R,
        "probability_bound": min(p_bound, 1.0),
        "probability_bound_raw": p_bound,
        "vacuous": p_bound >= 1.0,
        "binomial_slack": slack,
        "max_frequency": worst,
        "passed": worst <= min(p_bound, 1.0) + slack,
        "event_form_cross_check": cross_check_ok,
        "per_index": rows,
        "provenance": _provenance(spec),
    }


def run_elementwise_quantile(spec: ExperimentSpec) -> dict:
    """Frequency of {|err_i| > B_quantile/L} at admissible monitored indices."""
    if spec.growth_L is None:
        raise ConfigError("elementwise_quantile requires growth_L")
    if spec.loss.kind != "quantile":
        raise ConfigError("elementwise_quantile requires the quantile loss")
    geom = spec.signal.geometry()
    theta_star = spec.signal.expand()
    lam = resolve_lambda(spec.lambda_rule, spec.lambda_value, geom.n, geom.K)
    L = spec.growth_L
    idx_all = monitored_indices(geom, spec.monitor)
    kept, excluded, ratio = [], [], []
    for i in idx_all:
        pb = bnd.elementwise_quantile_bound(int(i), geom, spec.delta, lam, L)
        if pb.applicable:
            kept.append(int(i))
            ratio.append(pb.value)
        else:
            excluded.append(int(i))
    idx = np.asarray(kept, dtype=np.int64)
    bound_vals = np.asarray(ratio)

    R = spec.replications
    hits = np.zeros(idx.size, dtype=np.int64)
    for r in range(R):
        y = _sample_y(spec, theta_star, r)
        theta = solve(FusedLassoProblem(y=y, lam=lam, loss=spec.loss)).theta_hat
        if idx.size:
            hits += np.abs(theta[idx - 1] - theta_star[idx - 1]) > bound_vals
    p_bound = 2.0 * bnd.prob_const() * spec.delta**2
    worst = float(hits.max() / R) if idx.size else 0.0
    slack = _binomial_slack(worst, R)
    return {
        "experiment": "elementwise_quantile",
        "lambda": lam,
        "delta": spec.delta,
        "growth_L": L,
        "replications": R,
        "monitored": idx.tolist(),
        "excluded_not_admissible": excluded,
        "probability_bound": min(p_bound, 1.0),
        "probability_bound_raw": p_bound,
        "binomial_slack": slack,
        "max_frequency": worst,
        "passed": worst <= min(p_bound, 1.0) + slack,
        "per_index": [
            {"i": int(i), "bound": float(b), "freq": int(h) / R}
            for i, b, h in zip(idx, bound_vals, hits)
        ],
        "provenance": _provenance(spec),
    }


def run_sse(spec: ExperimentSpec) -> dict:
    """Frequency of {sum of squared errors > bound}, original and improved.

    Also checks the crude uniform range-containment event (quantile only):
    every fitted value within B_uniform/L of the truth's range.
    """
    geom = spec.signal.geometry()
    theta_star = spec.signal.expand()
    lam = resolve_lambda(spec.lambda_rule, spec.lambda_value, geom.n, geom.K)
    quantile = spec.loss.kind == "quantile"
    if quantile:
        if spec.growth_L is None:
            raise ConfigError("quantile sse experiment requires growth_L")
        # strict=False: evaluate the formula even when the lambda window
        # fails, and surface the failures in the result instead of refusing
        sse_orig = bnd.sse_bound_quantile(
            geom, spec.delta, lam, spec.growth_L, improved=False, strict=False
        )
        sse_impr = bnd.sse_bound_quantile(
            geom, spec.delta, lam, spec.growth_L, improved=True, strict=False
        )
        uni = bnd.uniform_quantile_bound(geom.n, math.sqrt(spec.delta), lam, spec.growth_L)
    else:
        sigma = spec.noise.sigma_for(spec.loss)
        sse_orig = bnd.sse_bound_mean(geom, spec.delta, lam, sigma, improved=False)
        sse_impr = bnd.sse_bound_mean(geom, spec.delta, lam, sigma, improved=True)
        uni = None

    R = spec.replications
    sse_samples = np.empty(R)
    range_violations = 0
    lo_star = theta_star.min()
    hi_star = theta_star.max()
    for r in range(R):
        y = _sample_y(spec, theta_star, r)
        theta = solve(FusedLassoProblem(y=y, lam=lam, loss=spec.loss)).theta_hat
        sse_samples[r] = float(np.sum((theta - theta_star) ** 2))
        if uni is not None and uni.applicable:
            if theta.min() < lo_star - uni.value or theta.max() > hi_star + uni.value:
                range_violations += 1

    p_bound = 4.0 * bnd.prob_const() * spec.delta
    f_orig = float(np.mean(sse_samples > sse_orig.bound))
    f_impr = float(np.mean(sse_samples > sse_impr.bound))
    worst = max(f_orig, f_impr)
    slack = _binomial_slack(worst, R)
    out = {
        "experiment": "sse",
        "lambda": lam,
        "delta": spec.delta,
        "replications": R,
        "bound_original": sse_orig.bound,
        "bound_improved": sse_impr.bound,
        "preconditions_hold": not sse_orig.precondition_failures,
        "precondition_failures": list(sse_orig.precondition_failures),
        "terms_original": sse_orig.terms,
        "terms_improved": sse_impr.terms,
        "probability_bound": min(p_bound, 1.0),
        "probability_bound_raw": p_bound,
        "freq_exceed_original": f_orig,
        "freq_exceed_improved": f_impr,
        "binomial_slack": slack,
        "passed": worst <= min(p_bound, 1.0) + slack,
        "sse_median": float(np.median(sse_samples)),
        "sse_max": float(np.max(sse_samples)),
        "ratio_median_original": float(np.median(sse_samples) / sse_orig.bound),
        "sse_samples": sse_samples.tolist(),
        "provenance": _provenance(spec),
    }
    if uni is not None:
        uni_p = 2.0 * bnd.prob_const() * spec.delta  # delta here is sqrt(config delta)^2
        out["uniform_range"] = {
            "applicable": bool(uni.applicable),
            "half_width": uni.value,
            "freq_violation": range_violations / R,
            "probability_bound": min(uni_p, 1.0),
        }
    return out


def _median_abs_err_at(spec, signal, lam, indices, R, seed_offset=0) -> np.ndarray:
    theta_star = signal.expand()
    idx = np.asarray(indices, dtype=np.int64)
    errs = np.empty((R, idx.size))
    for r in range(R):
        rng = np.random.default_rng(derived_seed(spec.seed, seed_offset + r))
        y = theta_star + spec.noise.sample_rng(theta_star.size, rng)
        theta = solve(FusedLassoProblem(y=y, lam=lam, loss=spec.loss)).theta_hat
        errs[r] = np.abs(theta[idx - 1] - theta_star[idx - 1])
    return np.median(errs, axis=0)


def run_rate_sweep(spec: ExperimentSpec) -> dict:
    """Two rate diagnostics.

    (a) d-sweep: median |err_i| against the distance d_i to the change point,
        on the configured signal; reports the log-log least-squares slope.
    (b) n-sweep: a single mid change point at each n; the change-point median
        error should stay flat (max/min ratio) while the interior error
        shrinks.
    """
    out = {"experiment": "rate_sweep", "provenance": _provenance(spec)}
    R = spec.replications

    if spec.d_grid:
        geom = spec.signal.geometry()
        lam = resolve_lambda(spec.lambda_rule, spec.lambda_value, geom.n, geom.K)
        cp = geom.change_points[1]  # first change point (start of segment 2)
        indices = []
        for dd in spec.d_grid:
            i = cp - dd  # inside segment 1, at distance exactly dd
            if not (1 <= i <= geom.n and geom.d[i - 1] == dd):
                raise ConfigError(f"d={dd} not realizable on this signal")
            indices.append(i)
        med = _median_abs_err_at(spec, spec.signal, lam, indices, R)
        x = np.log(np.asarray(spec.d_grid, dtype=float))
        yv = np.log(med)
        slope = float(np.polyfit(x, yv, 1)[0])
        out["d_sweep"] = {
            "lambda": lam,
            "d": list(spec.d_grid),
            "median_err": med.tolist(),
            "slope": slope,
        }

    if spec.n_sweep:
        jump = abs(spec.signal.values[-1] - spec.signal.values[0]) or 1.0
        rows = []
        for j, n in enumerate(spec.n_sweep):
            half = n // 2
            sig = PiecewiseConstantSignal([0.0, jump], [half, n - half])
            lam = resolve_lambda(spec.lambda_rule, spec.lambda_value, n, 2)
            cp_i = half  # last index of segment 1: d = 1
            int_i = half // 2  # deep interior: d = about n/4
            med = _median_abs_err_at(
                spec, sig, lam, [cp_i, int_i], R, seed_offset=1000 * (j + 1)
            )
            rows.append(
                {
                    "n": int(n),
                    "lambda": lam,
                    "median_err_change_point": float(med[0]),
                    "median_err_interior": float(med[1]),
                }
            )
        cps = [r["median_err_change_point"] for r in rows]
        ints = [r["median_err_interior"] for r in rows]
        out["n_sweep"] = {
            "rows": rows,
            "change_point_ratio": max(cps) / min(cps),
            "interior_shrink_factor": max(ints) / min(ints),
        }
    return out


def run_lambda_sweep(spec: ExperimentSpec) -> dict:
    """Empirical SSE and the SSE bound across a lambda grid.

    One data draw per replication is reused for every lambda, so the grid
    comparison is paired.  Reports the empirical-argmin lambda, the
    bound-argmin lambda (where the bound's preconditions hold), and whether
    both fall in a x8 window of sqrt(n/K).
    """
    geom = spec.signal.geometry()
    theta_star = spec.signal.expand()
    ref = math.sqrt(geom.n / geom.K)
    grid = list(spec.lambda_grid) or [ref * 2.0**e for e in range(-4, 5)]
    quantile = spec.loss.kind == "quantile"
    R = spec.replications

    sse = np.zeros((R, len(grid)))
    for r in range(R):
        y = _sample_y(spec, theta_star, r)
        for j, lam in enumerate(grid):
            theta = solve(FusedLassoProblem(y=y, lam=lam, loss=spec.loss)).theta_hat
            sse[r, j] = float(np.sum((theta - theta_star) ** 2))
    mean_sse = sse.mean(axis=0)

    bound_vals = []
    for lam in grid:
        try:
            if quantile:
                b = bnd.sse_bound_quantile(geom, spec.delta, lam, spec.growth_L, improved=spec.improved)
            else:
                b = bnd.sse_bound_mean(
                    geom, spec.delta, lam, spec.noise.sigma_for(spec.loss), improved=spec.improved
                )
            bound_vals.append(b.bound)
        except PreconditionError:
            bound_vals.append(None)

    emp_arg = grid[int(np.argmin(mean_sse))]
    valid = [(v, lam) for v, lam in zip(bound_vals, grid) if v is not None]
    bound_arg = min(valid)[1] if valid else None
    in_window = lambda lam: lam is not None and ref / 8.0 <= lam <= ref * 8.0
    return {
        "experiment": "lambda_sweep",
        "lambda_grid": grid,
        "mean_sse": mean_sse.tolist(),
        "bound": bound_vals,
        "replications": R,
        "reference_lambda": ref,
        "empirical_argmin": emp_arg,
        "bound_argmin": bound_arg,
        "empirical_in_window": in_window(emp_arg),
        "bound_in_window": in_window(bound_arg),
        "provenance": _provenance(spec),
    }


_RUNNERS = {
    "pointwise": run_pointwise,
    "elementwise_quantile": run_elementwise_quantile,
    "sse": run_sse,
    "rate_sweep": run_rate_sweep,
    "lambda_sweep": run_lambda_sweep,
}


def run_experiment(spec: ExperimentSpec) -> dict:
    return _RUNNERS[spec.experiment](spec)


__all__ = [
    "ExperimentSpec",
    "splitmix64",
    "derived_seed",
    "resolve_lambda",
    "monitored_indices",
    "run_pointwise",
    "run_elementwise_quantile",
    "run_sse",
    "run_rate_sweep",
    "run_lambda_sweep",
    "run_experiment",
]
