"""Weibull waiting-time laws for infection and recovery.

Both processes use the survival form ``S(t) = exp(-(mu * t) ** alpha)``.
Experiments are specified by mean and variance, so the main job here is
inverting those two moments into ``(alpha, mu)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

__all__ = [
    "WeibullParams",
    "MomentSpec",
    "weibull_from_moments",
    "weibull_moments",
    "survival",
    "log_survival",
    "density",
    "log_density",
    "hazard",
]

_LOG_ALPHA_BRACKET = (-10.0, 10.0)
_MAX_BISECTION = 200


@dataclass(frozen=True)
class WeibullParams:
    """Weibull law with shape ``alpha`` and rate ``mu`` (1/months)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"shape must be positive and finite, got {self.shape}")
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    @property
    def mean(self) -> float:
        return weibull_moments(self)[0]

    @property
    def variance(self) -> float:
        return weibull_moments(self)[1]


@dataclass(frozen=True)
class MomentSpec:
    """Mean (months) and variance (months^2) of a waiting time."""

    mean: float
    variance: float

    def __post_init__(self):
        for name in ("mean", "variance"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def _cv2(alpha):
    # squared coefficient of variation, Gamma(1+2/a)/Gamma(1+1/a)^2 - 1
    return np.expm1(gammaln(1.0 + 2.0 / alpha) - 2.0 * gammaln(1.0 + 1.0 / alpha))


def weibull_moments(p: WeibullParams) -> tuple[float, float]:
    """Return ``(mean, variance)`` of ``p``."""
    g1 = gammaln(1.0 + 1.0 / p.shape)
    mean = np.exp(g1) / p.rate
    var = mean**2 * _cv2(p.shape)
    return float(mean), float(var)


def weibull_from_moments(spec: MomentSpec) -> WeibullParams:
    """Find the Weibull law with the requested mean and variance.

    The squared coefficient of variation is strictly decreasing in the shape,
    so the shape is located by bisection on ``log(alpha)``; the rate then
    follows from the mean.
    """
    target = spec.variance / spec.mean**2
    lo, hi = _LOG_ALPHA_BRACKET
    # cv2 decreases in alpha: cv2(lo) is huge, cv2(hi) tiny
    for _ in range(_MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        if _cv2(np.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    # pick whichever endpoint reproduces the target better
    a_lo, a_hi = np.exp(lo), np.exp(hi)
    alpha = a_lo if abs(_cv2(a_lo) - target) <= abs(_cv2(a_hi) - target) else a_hi
    rate = np.exp(gammaln(1.0 + 1.0 / alpha)) / spec.mean
    return WeibullParams(float(alpha), float(rate))


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("waiting times must be nonnegative")
    return tau


def log_survival(p: WeibullParams, tau):
    """``-(mu * tau) ** alpha``, computed without an exp/log round trip."""
    tau = _check_tau(tau)
    return -((p.rate * tau) ** p.shape)


def survival(p: WeibullParams, tau):
    return np.exp(log_survival(p, tau))


def log_density(p: WeibullParams, tau):
    tau = _check_tau(tau)
    x = p.rate * tau
    with np.errstate(divide="ignore"):
        return np.log(p.shape * p.rate) + xlogy(p.shape - 1.0, x) - x**p.shape


def density(p: WeibullParams, tau):
    return np.exp(log_density(p, tau))


def hazard(p: WeibullParams, tau):
    """``alpha * mu * (mu * tau) ** (alpha - 1)``; infinite at 0 when alpha < 1."""
    tau = _check_tau(tau)
    with np.errstate(divide="ignore"):
        return p.shape * p.rate * (p.rate * tau) ** (p.shape - 1.0)
