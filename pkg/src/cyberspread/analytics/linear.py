"""Least squares with a Box-Cox transformed response."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .formula import ModelFormula, design_matrix

__all__ = [
    "RankDeficientError",
    "LinearFit",
    "fit_ols",
    "boxcox",
    "boxcox_inverse",
    "boxcox_profile",
    "boxcox_lambda",
    "DEFAULT_LAMBDA_GRID",
    "fit_boxcox_model",
]

#: -2 to 2 in steps of 1/22
DEFAULT_LAMBDA_GRID = np.arange(-44, 45) / 22.0


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LinearFit:
    """Ordinary least squares on ``boxcox(y, lam)``.

    ``cov`` is the coefficient covariance; it is None for fits loaded from a
    coefficient file that carried only standard errors.
    """

    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    sigma2: float = float("nan")
    df_resid: int = 0
    rss: float = float("nan")
    lam: float = 0.0
    cov: np.ndarray | None = None
    formula: ModelFormula | None = None

    @property
    def nobs(self) -> int:
        return self.df_resid + len(self.coef)

    def tvalues(self) -> np.ndarray:
        return self.coef / self.se

    def pvalues(self) -> np.ndarray:
        return 2.0 * stats.t.sf(np.abs(self.tvalues()), self.df_resid)

    def coefficient(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


def fit_ols(X, y, names=None, *, lam: float = 0.0, formula=None) -> LinearFit:
    """Least squares through a QR factorization."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise RankDeficientError(f"need more rows than columns, got {n} x {p}")
    Q, R = np.linalg.qr(X)
    d = np.abs(np.diag(R))
    if d.min() <= 1e-10 * max(d.max(), 1.0):
        raise RankDeficientError("design matrix is rank deficient")
    beta = solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - p
    sigma2 = rss / df
    Rinv = solve_triangular(R, np.eye(p))
    cov = sigma2 * (Rinv @ Rinv.T)
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(p))
    return LinearFit(names, beta, np.sqrt(np.diag(cov)), sigma2, df, rss, lam, cov, formula)


def boxcox(y, lam: float):
    y = np.asarray(y, dtype=float)
    if lam == 0.0:
        return np.log(y)
    return np.expm1(lam * np.log(y)) / lam


def boxcox_inverse(z, lam: float):
    """Inverse Box-Cox transform; raises where ``lam z + 1 <= 0``."""
    z = np.asarray(z, dtype=float)
    if lam == 0.0:
        return np.exp(z)
    base = lam * z + 1.0
    if np.any(base <= 0.0):
        raise ValueError(f"Box-Cox inverse undefined: lam*z + 1 = {base.min():.6g} <= 0")
    return np.exp(np.log(base) / lam)


def boxcox_profile(X, y, grid=DEFAULT_LAMBDA_GRID) -> np.ndarray:
    """Profile log-likelihood of the Box-Cox parameter over ``grid``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("Box-Cox needs a strictly positive response")
    n = len(y)
    Q, _ = np.linalg.qr(X)
    sum_log = np.log(y).sum()
    out = np.empty(len(grid))
    for i, lam in enumerate(np.asarray(grid, dtype=float)):
        z = boxcox(y, lam)
        r = z - Q @ (Q.T @ z)
        out[i] = -0.5 * n * np.log(r @ r / n) + (lam - 1.0) * sum_log
    return out


def boxcox_lambda(X, y, grid=DEFAULT_LAMBDA_GRID) -> float:
    """Grid maximizer of the profile likelihood; ties go to the value nearest 0."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    ll = boxcox_profile(X, y, grid)
    best = ll.max()
    tied = np.flatnonzero(ll >= best - 1e-10 * max(1.0, abs(best)))
    return float(grid[tied[np.argmin(np.abs(grid[tied]))]])


def fit_boxcox_model(data, formula: ModelFormula, *, lam: float | None = None,
                     grid=DEFAULT_LAMBDA_GRID) -> LinearFit:
    """Choose (or take) the Box-Cox parameter, then fit OLS on the transformed response."""
    X, y = design_matrix(data, formula)
    if lam is None:
        lam = boxcox_lambda(X, y, grid)
    return fit_ols(X, boxcox(y, lam), formula.column_names, lam=lam, formula=formula)
