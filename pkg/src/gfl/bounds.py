"""Nonasymptotic error bounds for the fused-lasso estimator.

All formulas are explicit finite-sample expressions in the signal geometry
(d_i, m_k, eta_k), the tuning parameter lambda, the confidence parameter
delta, and either the sub-Gaussian scale sigma (mean regression) or the CDF
growth constant L (quantile regression).  Logarithms are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PreconditionError
from .signal import SignalGeometry

LOG2 = math.log(2.0)
DELTA_MAX = LOG2 / math.e  # 0.25498...


def prob_const() -> float:
    """The constant multiplying delta^2 in the pointwise failure probabilities."""
    return 1.0 + 24.0 / (LOG2 * LOG2)


def _check_delta(delta: float, upper: float = DELTA_MAX) -> None:
    if not (0.0 < delta < upper):
        raise PreconditionError(
            f"delta must lie in (0, {upper:.6g}); got {delta}",
            failures=[{"condition": f"0 < delta < {upper:.6g}", "value": delta}],
        )


@dataclass(frozen=True)
class BoundParams:
    sigma: float
    delta: float
    lam: float
    growth_L: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError("sigma must be positive")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError("lambda must be positive")
        _check_delta(self.delta)
        if self.growth_L is not None and not self.growth_L > 0:
            raise ConfigError("growth_L must be positive")


def compute_B(i: int, geometry: SignalGeometry, params: BoundParams) -> float:
    """Three-term elementwise bound at 1-based index i.

    term 1: local iterated-logarithm scale 4*sigma*(sqrt(lnln(2 max(3,d))/max(3,d))
            + sqrt(ln(1/delta)/d))
    term 2: 4*sigma^2*(lnln(2m) + ln(1/delta)) / lambda
    term 3: (2*sqrt(m*sigma^2*ln(1/delta)) + 2*lambda) / m
    """
    return _B_terms(i, geometry, params, improved=False).sum()


def compute_B_improved(i: int, geometry: SignalGeometry, params: BoundParams) -> float:
    """compute_B with the 2*lambda/m part of term 3 replaced by
    2*(lambda/m_left + lambda/m_right); the sqrt part keeps m."""
    return _B_terms(i, geometry, params, improved=True).sum()


def _B_terms(i, geometry, params, improved: bool) -> np.ndarray:
    sigma, delta, lam = params.sigma, params.delta, params.lam
    j = i - 1
    d = float(geometry.d[j])
    m = float(geometry.seg_length(i))
    l1d = math.log(1.0 / delta)
    d3 = max(3.0, d)
    t1 = 4.0 * sigma * (math.sqrt(math.log(math.log(2.0 * d3)) / d3) + math.sqrt(l1d / d))
    t2 = 4.0 * sigma * sigma * (math.log(math.log(2.0 * m)) + l1d) / lam
    if improved:
        ml = float(geometry.m_left[j])
        mr = float(geometry.m_right[j])
        lam_part = 2.0 * (lam / ml + lam / mr)
    else:
        lam_part = 2.0 * lam / m
    t3 = 2.0 * math.sqrt(m * sigma * sigma * l1d) / m + lam_part
    return np.array([t1, t2, t3])


def compute_B_quantile(i: int, geometry: SignalGeometry, delta: float, lam: float) -> float:
    """The assumptionless quantile bound: compute_B with sigma = 1/2."""
    return compute_B(i, geometry, BoundParams(sigma=0.5, delta=delta, lam=lam))


@dataclass(frozen=True)
class PointwiseBound:
    value: float
    applicable: bool
    probability_raw: float
    probability: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "probability", min(max(self.probability_raw, 0.0), 1.0))


def elementwise_quantile_bound(
    i: int, geometry: SignalGeometry, delta: float, lam: float, L: float
) -> PointwiseBound:
    """B_quantile / L when B_quantile <= L; otherwise flagged not applicable.

    The guarantee level is 1 - 2 * prob_const() * delta^2.
    """
    if not L > 0:
        raise ConfigError("growth constant L must be positive")
    B = compute_B_quantile(i, geometry, delta, lam)
    return PointwiseBound(
        value=B / L,
        applicable=B <= L,
        probability_raw=1.0 - 2.0 * prob_const() * delta * delta,
    )


def admissibility(geometry: SignalGeometry, delta: float, lam: float, L: float):
    """Sufficient conditions under which B_quantile <= L.

    Signal level: m_min >= (36/L^2) ln(1/delta) and
    6*(lnln(2 m_min) + ln(1/delta))/L <= lambda <= (L/12)*m_min.
    Per index: d_i >= max(3, 12^4/L^4, (12^2/L^2) ln(1/delta)).
    Returns (signal_level_ok, per_index_ok, details).
    """
    if not L > 0:
        raise ConfigError("growth constant L must be positive")
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    l1d = math.log(1.0 / delta)
    m_min = geometry.m_min
    mmin_floor = 36.0 / (L * L) * l1d
    lam_lo = 6.0 * (math.log(math.log(2.0 * m_min)) + l1d) / L
    lam_hi = L / 12.0 * m_min
    checks = {
        "m_min >= 36 ln(1/delta) / L^2": (m_min, mmin_floor, m_min >= mmin_floor),
        "lambda >= 6 (lnln(2 m_min) + ln(1/delta)) / L": (lam, lam_lo, lam >= lam_lo),
        "lambda <= L m_min / 12": (lam, lam_hi, lam <= lam_hi),
    }
    signal_ok = all(ok for (_, _, ok) in checks.values())
    d_floor = max(3.0, 12.0**4 / L**4, 144.0 / (L * L) * l1d)
    per_index = geometry.d >= d_floor
    details = {
        "signal_conditions": {k: {"value": v, "threshold": t, "ok": ok} for k, (v, t, ok) in checks.items()},
        "index_distance_threshold": d_floor,
    }
    return signal_ok, per_index, details


def uniform_quantile_bound(n: int, delta: float, lam: float, L: float) -> PointwiseBound:
    """Crude uniform bound B_uniform = (lnln(2n) + ln(1/delta))/lambda
    + sqrt(ln(1/delta)/n); when B_uniform <= L every fitted value lies within
    B_uniform/L of the truth's range, at level 1 - 2 * prob_const() * delta^2."""
    if not L > 0:
        raise ConfigError("growth constant L must be positive")
    _check_delta(delta)
    l1d = math.log(1.0 / delta)
    B = (math.log(math.log(2.0 * n)) + l1d) / lam + math.sqrt(l1d / n)
    return PointwiseBound(
        value=B / L,
        applicable=B <= L,
        probability_raw=1.0 - 2.0 * prob_const() * delta * delta,
    )


def uniform_bound_sufficient(n: int, delta: float, lam: float, L: float) -> bool:
    """Sufficient condition for uniform_quantile_bound applicability:
    n >= (4/L^2) ln(1/delta) and lambda >= (2/L)(lnln(2n) + ln(1/delta))."""
    l1d = math.log(1.0 / delta)
    return n >= 4.0 / (L * L) * l1d and lam >= 2.0 / L * (
        math.log(math.log(2.0 * n)) + l1d
    )


@dataclass(frozen=True)
class SseBound:
    bound: float
    probability_raw: float
    terms: dict
    precondition_failures: tuple = ()
    probability: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "probability", min(max(self.probability_raw, 0.0), 1.0))

    def __iter__(self):
        return iter((self.bound, self.probability))


def _improved_lambda_sum(geometry: SignalGeometry) -> float:
    # sum over segments whose two neighboring jumps disagree in direction
    # (sentinels eta_0 = eta_K = 0 make the first and last segments count
    # whenever K >= 2)
    eta = geometry.eta
    m = geometry.segment_lengths
    return float(
        sum(1.0 / m[k - 1] for k in range(1, geometry.K + 1) if eta[k - 1] != eta[k])
    )


def sse_bound_quantile(
    geometry: SignalGeometry,
    delta: float,
    lam: float,
    L: float,
    V: float | None = None,
    improved: bool = False,
    strict: bool = True,
) -> SseBound:
    """Sum-of-squared-errors bound for quantile regression, at level
    1 - 4 * prob_const() * delta.  Raises PreconditionError with a structured
    diagnosis when the m_min / lambda window does not hold; with
    ``strict=False`` the formula is still evaluated and the failures are
    attached to the result (the probability guarantee then does not apply)."""
    if not L > 0:
        raise ConfigError("growth constant L must be positive")
    _check_delta(delta, upper=DELTA_MAX * DELTA_MAX)
    n, K = geometry.n, geometry.K
    m = geometry.segment_lengths
    if V is None:
        V = geometry.V
    lnd = math.log(n / delta)
    lln = math.log(math.log(2.0 * n))
    m_min = geometry.m_min

    failures = []
    mmin_floor = 18.0 / (L * L) * lnd
    if not m_min >= mmin_floor:
        failures.append(
            {"condition": "m_min >= 18 ln(n/delta) / L^2", "value": m_min, "threshold": mmin_floor}
        )
    lam_lo = 3.0 * (2.0 * lln + lnd) / L
    if not lam >= lam_lo:
        failures.append(
            {"condition": "lambda >= 3 (2 lnln(2n) + ln(n/delta)) / L", "value": lam, "threshold": lam_lo}
        )
    lam_hi = L / 12.0 * m_min
    if not lam <= lam_hi:
        failures.append(
            {"condition": "lambda <= L m_min / 12", "value": lam, "threshold": lam_hi}
        )
    if failures and strict:
        raise PreconditionError("sum-of-squares bound preconditions failed", failures)

    seg_log = K + sum(math.log(mk / 2.0) for mk in m)
    L2 = L * L
    t1 = 24.0 / L2 * (2.0 * lln + lnd) * seg_log
    t2 = 3.0 * n / L2 * 4.0 * (lln * lln + lnd * lnd) / (lam * lam)
    t3 = 6.0 * K / L2 * lnd
    if improved:
        t4 = 144.0 * lam * lam / L2 * _improved_lambda_sum(geometry)
    else:
        t4 = 24.0 * lam * lam / L2 * sum(1.0 / mk for mk in m)
    t5 = 2.0 * K * max(3.0, 12.0**4 / L2**2, 144.0 / (2.0 * L2) * lnd) * V * V
    terms = {"lil": t1, "inv_lambda_sq": t2, "segment_count": t3, "lambda_sq": t4, "range": t5}
    return SseBound(
        bound=t1 + t2 + t3 + t4 + t5,
        probability_raw=1.0 - 4.0 * prob_const() * delta,
        terms=terms,
        precondition_failures=tuple(failures),
    )


def sse_bound_mean(
    geometry: SignalGeometry,
    delta: float,
    lam: float,
    sigma: float,
    improved: bool = False,
) -> SseBound:
    """Sum-of-squared-errors bound for mean regression under sub-Gaussian
    noise with parameter sigma, at level 1 - 4 * prob_const() * delta."""
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    n, K = geometry.n, geometry.K
    _check_delta(delta, upper=n * DELTA_MAX * DELTA_MAX)
    m = geometry.segment_lengths
    lnd = math.log(n / delta)
    lln = math.log(math.log(2.0 * n))
    s2 = sigma * sigma
    seg_log = K + sum(math.log(mk / 2.0) for mk in m)
    t1 = 192.0 * s2 * (lln + 0.5 * lnd) * seg_log
    t2 = 24.0 * n * s2 * s2 * (lln * lln + 0.25 * lnd * lnd) / (lam * lam)
    t3 = 12.0 * K * s2 * lnd
    if improved:
        t4 = 144.0 * lam * lam * _improved_lambda_sum(geometry)
    else:
        t4 = 24.0 * lam * lam * sum(1.0 / mk for mk in m)
    terms = {"lil": t1, "inv_lambda_sq": t2, "segment_count": t3, "lambda_sq": t4}
    return SseBound(
        bound=t1 + t2 + t3 + t4,
        probability_raw=1.0 - 4.0 * prob_const() * delta,
        terms=terms,
    )


def iterative_sum_check(m_list) -> tuple[float, float]:
    """lhs = sum_j m_j / (m_j + ... + m_K)^2 and rhs = 3/m_K; lhs <= rhs."""
    m = [float(x) for x in m_list]
    if not m or any(x <= 0 for x in m):
        raise ConfigError("all segment lengths must be positive")
    lhs = 0.0
    tail = sum(m)
    for x in m:
        lhs += x / (tail * tail)
        tail -= x
    return lhs, 3.0 / m[-1]


@dataclass(frozen=True)
class BoundReport:
    """Per-index bound values for a signal, with echoed inputs.

    Probabilities are the raw closed forms; ``probability`` clamps to [0, 1]
    so vacuous regimes stay visible through ``probability_raw``.
    """

    n: int
    params: BoundParams
    B: np.ndarray
    B_improved: np.ndarray
    B_quantile: np.ndarray
    applicable: np.ndarray
    signal_admissible: bool | None
    pointwise_probability_raw: float
    pointwise_probability: float


def bound_report(geometry: SignalGeometry, params: BoundParams) -> BoundReport:
    n = geometry.n
    B = np.empty(n)
    Bi = np.empty(n)
    Bq = np.empty(n)
    for i in range(1, n + 1):
        B[i - 1] = compute_B(i, geometry, params)
        Bi[i - 1] = compute_B_improved(i, geometry, params)
        Bq[i - 1] = compute_B_quantile(i, geometry, params.delta, params.lam)
    if params.growth_L is not None:
        signal_ok, per_index, _ = admissibility(
            geometry, params.delta, params.lam, params.growth_L
        )
        applicable = per_index & (Bq <= params.growth_L)
    else:
        signal_ok = None
        applicable = np.zeros(n, dtype=bool)
    p_raw = 1.0 - prob_const() * params.delta**2
    return BoundReport(
        n=n,
        params=params,
        B=B,
        B_improved=Bi,
        B_quantile=Bq,
        applicable=applicable,
        signal_admissible=signal_ok,
        pointwise_probability_raw=p_raw,
        pointwise_probability=min(max(p_raw, 0.0), 1.0),
    )


__all__ = [
    "prob_const",
    "BoundParams",
    "BoundReport",
    "PointwiseBound",
    "SseBound",
    "compute_B",
    "compute_B_improved",
    "compute_B_quantile",
    "elementwise_quantile_bound",
    "admissibility",
    "uniform_quantile_bound",
    "uniform_bound_sufficient",
    "sse_bound_quantile",
    "sse_bound_mean",
    "iterative_sum_check",
    "bound_report",
    "DELTA_MAX",
]
