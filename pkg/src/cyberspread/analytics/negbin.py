"""Count regression: Poisson and negative binomial (NB2) with a log link."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats
from scipy.special import gammaln, polygamma, psi, xlogy

from .formula import ModelFormula, design_matrix
from .linear import RankDeficientError

__all__ = [
    "ConvergenceError",
    "CountFit",
    "NegBinFit",
    "fit_poisson",
    "fit_negbin",
    "fit_negbin_fixed",
    "negbin_loglik",
    "negbin_deviance",
    "overdispersion_test",
    "fit_negbin_model",
]

_THETA_MAX = 1e8


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CountFit:
    """Log-link count model. ``theta = inf`` is the Poisson model."""

    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    theta: float = float("inf")
    theta_se: float = float("nan")
    loglik: float = float("nan")
    deviance: float = float("nan")
    nobs: int = 0
    cov: np.ndarray | None = None
    formula: ModelFormula | None = None
    iterations: int = 0
    deviance_trace: tuple[float, ...] = ()

    def zvalues(self) -> np.ndarray:
        return self.coef / self.se

    def pvalues(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.zvalues()))

    def coefficient(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


NegBinFit = CountFit


def negbin_loglik(y, mu, theta):
    y = np.asarray(y, dtype=float)
    if not np.isfinite(theta):
        return float(np.sum(xlogy(y, mu) - mu - gammaln(y + 1.0)))
    return float(np.sum(
        gammaln(y + theta) - gammaln(theta) - gammaln(y + 1.0)
        + theta * (np.log(theta) - np.log(theta + mu))
        + xlogy(y, mu) - xlogy(y, theta + mu)
    ))


def negbin_deviance(y, mu, theta):
    y = np.asarray(y, dtype=float)
    if not np.isfinite(theta):
        return float(2.0 * np.sum(xlogy(y, y / mu) - (y - mu)))
    return float(2.0 * np.sum(
        xlogy(y, y / mu) - (y + theta) * np.log((y + theta) / (mu + theta))
    ))


def _irls(X, y, theta, beta, tol, max_iter):
    """IRLS for the log-link mean at fixed ``theta`` with step halving."""
    eta = X @ beta
    mu = np.exp(eta)
    dev = negbin_deviance(y, mu, theta)
    trace = [dev]
    for it in range(1, max_iter + 1):
        var_factor = 1.0 if not np.isfinite(theta) else 1.0 + mu / theta
        w = mu / var_factor
        z = eta + (y - mu) / mu
        sw = np.sqrt(w)
        new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        step = new - beta
        for _ in range(40):
            cand = beta + step
            eta_c = X @ cand
            if np.all(eta_c < 700):
                mu_c = np.exp(eta_c)
                dev_c = negbin_deviance(y, mu_c, theta)
                if np.isfinite(dev_c) and dev_c <= dev * (1 + 1e-12) + 1e-12:
                    break
            step = step / 2.0
        else:
            return beta, mu, dev, trace, it
        beta, eta, mu = cand, eta_c, mu_c
        rel = abs(dev - dev_c) / (abs(dev_c) + 0.1)
        dev = dev_c
        trace.append(dev)
        if rel < tol:
            return beta, mu, dev, trace, it
    raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations")


def _theta_score(log_theta, y, mu):
    th = np.exp(log_theta)
    return float(np.sum(psi(y + th) - psi(th) + np.log(th) + 1.0
                        - np.log(mu + th) - (y + th) / (mu + th)))


def _theta_ml(y, mu):
    """Maximum-likelihood dispersion given means; capped at a large value."""
    lo, hi = np.log(1e-8), np.log(_THETA_MAX)
    s_lo, s_hi = _theta_score(lo, y, mu), _theta_score(hi, y, mu)
    if s_hi > 0:
        return _THETA_MAX
    if s_lo < 0:
        return float(np.exp(lo))
    return float(np.exp(optimize.brentq(_theta_score, lo, hi, args=(y, mu), xtol=1e-12)))


def _theta_se(y, mu, theta):
    info = -np.sum(polygamma(1, y + theta) - polygamma(1, theta) + 1.0 / theta
                   - 2.0 / (mu + theta) + (y + theta) / (mu + theta) ** 2)
    return float(1.0 / np.sqrt(info)) if info > 0 else float("nan")


def _start(X, y):
    beta = np.zeros(X.shape[1])
    beta[0] = np.log(max(y.mean(), 1e-8))
    return beta


def _finish(X, y, beta, mu, theta, names, formula, it, trace):
    var_factor = 1.0 if not np.isfinite(theta) else 1.0 + mu / theta
    w = mu / var_factor
    XtWX = X.T @ (X * w[:, None])
    cov = np.linalg.inv(XtWX)
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    return CountFit(
        names, beta, np.sqrt(np.diag(cov)), theta,
        _theta_se(y, mu, theta) if np.isfinite(theta) else float("nan"),
        negbin_loglik(y, mu, theta), negbin_deviance(y, mu, theta), len(y), cov,
        formula, it, tuple(trace),
    )


def _check(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise ValueError("count response must be nonnegative integers")
    if not np.any(y > 0):
        raise ValueError("all-zero response")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankDeficientError("design matrix is rank deficient")
    return X, y


def fit_poisson(X, y, names=None, *, tol=1e-10, max_iter=100, formula=None) -> CountFit:
    X, y = _check(X, y)
    beta, mu, _, trace, it = _irls(X, y, np.inf, _start(X, y), tol, max_iter)
    return _finish(X, y, beta, mu, np.inf, names, formula, it, trace)


def fit_negbin(X, y, names=None, *, tol=1e-8, max_iter=100, formula=None) -> CountFit:
    """Negative binomial regression.

    Alternates IRLS for the coefficients at fixed ``theta`` with a maximum
    likelihood update of ``theta``; stops when the relative change of the
    deviance between rounds drops below ``tol``.
    """
    X, y = _check(X, y)
    beta, mu, _, _, it = _irls(X, y, np.inf, _start(X, y), 1e-10, max_iter)
    theta = _theta_ml(y, mu)
    dev_prev = np.inf
    total = it
    for _ in range(max_iter):
        beta, mu, dev, _, it = _irls(X, y, theta, beta, 1e-10, max_iter)
        total += it
        theta = _theta_ml(y, mu)
        dev = negbin_deviance(y, mu, theta)
        if abs(dev - dev_prev) <= tol * (abs(dev) + 0.1):
            break
        dev_prev = dev
    else:
        raise ConvergenceError(f"dispersion iteration did not converge in {max_iter} rounds")
    beta, mu, _, trace, it = _irls(X, y, theta, beta, 1e-12, max_iter)
    return _finish(X, y, beta, mu, theta, names, formula, total + it, trace)


def fit_negbin_fixed(X, y, theta: float, names=None, *, tol=1e-10, max_iter=100,
                     formula=None) -> CountFit:
    """Coefficients at a given dispersion; ``deviance_trace`` records each IRLS step."""
    X, y = _check(X, y)
    beta, mu, _, trace, it = _irls(X, y, float(theta), _start(X, y), tol, max_iter)
    return _finish(X, y, beta, mu, float(theta), names, formula, it, trace)


def overdispersion_test(X, y) -> tuple[float, float]:
    """Auxiliary-regression test of Poisson equidispersion against NB2.

    Regresses ``((y - mu)^2 - y) / mu`` on ``mu`` without intercept under the
    Poisson fit; returns the t statistic of the slope and its one-sided
    p-value (large values indicate overdispersion).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) == 0:
        raise ValueError("constant response: overdispersion test is degenerate")
    mu = np.exp(X @ fit_poisson(X, y).coef)
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
        raise ValueError("degenerate fitted means")
    aux = ((y - mu) ** 2 - y) / mu
    alpha = float(aux @ mu / (mu @ mu))
    resid = aux - alpha * mu
    s2 = float(resid @ resid) / (len(y) - 1)
    t = alpha / np.sqrt(s2 / float(mu @ mu))
    return float(t), float(stats.t.sf(t, len(y) - 1))


def fit_negbin_model(data, formula: ModelFormula, **kw) -> CountFit:
    X, y = design_matrix(data, formula)
    return fit_negbin(X, y, formula.column_names, formula=formula, **kw)
