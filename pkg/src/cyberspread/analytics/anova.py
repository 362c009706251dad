"""Single-term deletion tables for fitted models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .formula import design_matrix
from .linear import LinearFit, boxcox, fit_ols
from .negbin import CountFit, fit_negbin

__all__ = ["DropRow", "drop_one"]


@dataclass(frozen=True)
class DropRow:
    """One deleted term.

    For a linear fit ``change`` is the increase in residual sum of squares
    and ``statistic`` an F value; for a count fit ``change`` is the drop in
    log-likelihood and ``statistic`` the likelihood-ratio chi-square.
    """

    term: str
    df: int
    change: float
    criterion: float
    statistic: float
    pvalue: float


def _aic_linear(rss, n, p):
    return n * np.log(rss / n) + 2 * p


def drop_one(fit: LinearFit | CountFit, data) -> list[DropRow]:
    """Refit without each term (the categorical as one block) and test the loss."""
    f = fit.formula
    if f is None:
        raise ValueError("fit has no formula attached; refit from data to get a drop-one table")
    X, y = design_matrix(data, f)
    blocks = f.blocks()
    rows = []
    if isinstance(fit, LinearFit):
        z = boxcox(y, fit.lam)
        n, p = X.shape
        rows.append(DropRow("<none>", 0, 0.0, fit.rss, _aic_linear(fit.rss, n, p), np.nan))
        for term, cols in blocks.items():
            keep = [i for i in range(p) if i not in cols]
            try:
                sub = fit_ols(X[:, keep], z)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError(f"refit without {term} failed: {exc}") from exc
            df = len(cols)
            ss = sub.rss - fit.rss
            F = (ss / df) / (fit.rss / fit.df_resid)
            rows.append(DropRow(term, df, ss, sub.rss, F, float(stats.f.sf(F, df, fit.df_resid))))
        # criterion column holds AIC for the reduced models
        return [rows[0]] + [
            DropRow(r.term, r.df, r.change, _aic_linear(r.criterion, n, p - r.df),
                    r.statistic, r.pvalue) for r in rows[1:]
        ]
    if isinstance(fit, CountFit):
        p = X.shape[1]
        k_theta = 1 if np.isfinite(fit.theta) else 0
        rows.append(DropRow("<none>", 0, 0.0, -2 * fit.loglik + 2 * (p + k_theta),
                            np.nan, np.nan))
        for term, cols in blocks.items():
            keep = [i for i in range(p) if i not in cols]
            try:
                sub = fit_negbin(X[:, keep], y)
            except (np.linalg.LinAlgError, RuntimeError) as exc:
                raise RuntimeError(f"refit without {term} failed: {exc}") from exc
            df = len(cols)
            lr = max(2.0 * (fit.loglik - sub.loglik), 0.0)
            aic = -2 * sub.loglik + 2 * (p - df + k_theta)
            rows.append(DropRow(term, df, fit.loglik - sub.loglik, aic, lr,
                                float(stats.chi2.sf(lr, df))))
        return rows
    raise TypeError(f"unsupported fit type {type(fit).__name__}")
