"""Convex losses with one-sided derivatives, and the noise models they pair with.

The population losses L+(t) = E rho'_+(eps - t) and L-(t) = E rho'_-(eps - t)
are the scale on which the elementwise bounds live.  For the square loss both
equal -t; for the quantile loss with a continuous noise CDF F centered so that
F(0) = tau, both equal tau - F(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, GflError, UnsupportedModelError

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SquareLoss:
    """rho(x) = x^2 / 2, so rho'_+(x) = rho'_-(x) = x."""

    kind: str = "square"

    def rho(self, x):
        return 0.5 * np.square(x)

    def rho_plus(self, x):
        return np.asarray(x, dtype=float) + 0.0

    def rho_minus(self, x):
        return np.asarray(x, dtype=float) + 0.0


@dataclass(frozen=True)
class QuantileLoss:
    """The tau-th check loss: rho(x) = tau*x for x >= 0, (tau-1)*x for x < 0."""

    tau: float
    kind: str = "quantile"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("quantile level tau must lie in (0, 1)")

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.tau * x, (self.tau - 1.0) * x)

    def rho_plus(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.tau, self.tau - 1.0)

    def rho_minus(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, self.tau, self.tau - 1.0)


def make_loss(kind: str, tau: float | None = None):
    if kind == "square":
        return SquareLoss()
    if kind == "quantile":
        if tau is None:
            raise ConfigError("quantile loss requires tau")
        return QuantileLoss(tau=tau)
    raise ConfigError(f"unknown loss kind {kind!r}")


# Base distributions are symmetric about 0 with a single scale parameter.
_KINDS = ("gaussian", "uniform", "laplace", "cauchy")


@dataclass(frozen=True)
class NoiseModel:
    """An error distribution plus the centering convention.

    With ``center_tau`` unset the distribution is symmetric about 0 (mean
    regression convention).  With ``center_tau = tau`` the base distribution is
    shifted so that its tau-th quantile sits at 0 exactly, using the base
    closed-form quantile function.
    """

    kind: str
    scale: float
    center_tau: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ConfigError("noise scale must be positive and finite")
        if self.center_tau is not None and not 0.0 < self.center_tau < 1.0:
            raise ConfigError("center_tau must lie in (0, 1)")

    # --- base distribution (symmetric about 0), closed forms ---

    def _base_cdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == "gaussian":
            return ndtr(x / s)
        if self.kind == "uniform":
            return np.clip((x + s) / (2.0 * s), 0.0, 1.0)
        if self.kind == "laplace":
            return np.where(x < 0, 0.5 * np.exp(x / s), 1.0 - 0.5 * np.exp(-x / s))
        return 0.5 + np.arctan(x / s) / math.pi  # cauchy

    def _base_pdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == "gaussian":
            return np.exp(-0.5 * (x / s) ** 2) / (s * _SQRT2PI)
        if self.kind == "uniform":
            return np.where(np.abs(x) <= s, 1.0 / (2.0 * s), 0.0)
        if self.kind == "laplace":
            return np.exp(-np.abs(x) / s) / (2.0 * s)
        return s / (math.pi * (s * s + x * x))  # cauchy

    def _base_quantile(self, p: float) -> float:
        s = self.scale
        if self.kind == "gaussian":
            return s * float(ndtri(p))
        if self.kind == "uniform":
            return s * (2.0 * p - 1.0)
        if self.kind == "laplace":
            return s * math.log(2.0 * p) if p < 0.5 else -s * math.log(2.0 * (1.0 - p))
        return s * math.tan(math.pi * (p - 0.5))  # cauchy

    @property
    def shift(self) -> float:
        """Offset q such that eps = X_base - q; q = Q_base(tau) under tau-centering."""
        if self.center_tau is None:
            return 0.0
        return self._base_quantile(self.center_tau)

    # --- shifted distribution ---

    def cdf(self, x):
        return self._base_cdf(np.asarray(x, dtype=float) + self.shift)

    def cdf_left(self, x):
        # All supported distributions are continuous, so F^- == F.
        return self.cdf(x)

    def pdf(self, x):
        return self._base_pdf(np.asarray(x, dtype=float) + self.shift)

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n i.i.d. draws, deterministic given the seed."""
        if n < 1:
            raise ConfigError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        return self.sample_rng(n, rng)

    def sample_rng(self, n: int, rng: np.random.Generator) -> np.ndarray:
        s = self.scale
        if self.kind == "gaussian":
            x = rng.standard_normal(n) * s
        elif self.kind == "uniform":
            x = rng.uniform(-s, s, size=n)
        elif self.kind == "laplace":
            x = rng.laplace(0.0, s, size=n)
        else:
            x = rng.standard_cauchy(n) * s
        return x - self.shift

    def sigma_for(self, loss) -> float:
        """Sub-Gaussian parameter of rho'_{+/-}(eps - t), uniform in t."""
        if loss.kind == "quantile":
            # rho'_{+/-} take values in an interval of length 1.
            return 0.5
        if loss.kind != "square":
            raise UnsupportedModelError(f"no sigma rule for loss {loss.kind!r}")
        if self.center_tau is not None:
            raise UnsupportedModelError("square loss requires mean-centered noise")
        if self.kind == "gaussian":
            return self.scale
        if self.kind == "uniform":
            # bounded in [-scale, scale]: parameter (b - a) / 2
            return self.scale
        raise UnsupportedModelError(
            f"{self.kind} noise is not sub-Gaussian; mean regression is unsupported"
        )

    def growth_constant(self) -> float:
        """The Q2 constant L: minimum density on [-1, 1] around the centered quantile.

        Guarantees |F(x) - F(0)| >= L |x| for x in [-1, 1].
        """
        q = abs(self.shift)
        if self.kind == "uniform":
            if self.scale < q + 1.0:
                raise UnsupportedModelError(
                    "uniform noise has zero density somewhere on [-1, 1]"
                )
            return 1.0 / (2.0 * self.scale)
        # Symmetric unimodal: the density minimum sits at the far endpoint.
        return float(self._base_pdf(q + 1.0))

    def to_record(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "center_tau": self.center_tau}

    @classmethod
    def from_record(cls, record: dict) -> "NoiseModel":
        try:
            return cls(
                kind=record["kind"],
                scale=float(record["scale"]),
                center_tau=record.get("center_tau"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad noise record: {exc}") from exc


def _check_pairing(loss, noise: NoiseModel) -> None:
    if loss.kind == "square" and noise.center_tau is not None:
        raise UnsupportedModelError("square loss pairs with mean-centered noise only")
    if loss.kind == "quantile" and noise.center_tau is None:
        raise UnsupportedModelError("quantile loss requires tau-centered noise")
    if loss.kind == "quantile" and noise.center_tau != loss.tau:
        raise UnsupportedModelError("noise centering tau must match the loss tau")


def L_plus(loss, noise: NoiseModel, t: float) -> float:
    """E rho'_+(eps - t).  Closed form: -t (square) or tau - F(t) (quantile)."""
    _check_pairing(loss, noise)
    if loss.kind == "square":
        return -float(t)
    return loss.tau - float(noise.cdf(t))


def L_minus(loss, noise: NoiseModel, t: float) -> float:
    """E rho'_-(eps - t); coincides with L_plus for continuous noise."""
    _check_pairing(loss, noise)
    if loss.kind == "square":
        return -float(t)
    return loss.tau - float(noise.cdf_left(t))


def _invert(fn, v: float, tol: float = 1e-10) -> float:
    """Bisection inverse of a nonincreasing fn near 0; bracket grows geometrically."""
    if fn(0.0) == v:
        return 0.0
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if fn(lo) >= v >= fn(hi):
            break
        lo *= 2.0
        hi *= 2.0
        if hi > 1e18:
            raise GflError(f"value {v} outside the attainable range of the loss")
    else:  # pragma: no cover
        raise GflError("bracketing failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            break
        if fn(mid) >= v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_L_plus(loss, noise: NoiseModel, v: float) -> float:
    """Local inverse of L_plus near 0, to absolute tolerance 1e-10."""
    return _invert(lambda t: L_plus(loss, noise, t), v)


def invert_L_minus(loss, noise: NoiseModel, v: float) -> float:
    return _invert(lambda t: L_minus(loss, noise, t), v)
