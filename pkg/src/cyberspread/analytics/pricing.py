"""Predictions from fitted frequency models and the aggregate-loss quote."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..engine import SimConfig, run_many
from ..experiment import SweepConfig, run_sweep
from .formula import ModelFormula, design_matrix
from .linear import LinearFit, boxcox_inverse
from .negbin import CountFit

__all__ = [
    "PriceQuote",
    "LossEstimate",
    "predict_tinf",
    "predict_nrec",
    "price",
    "quote",
    "mc_expected_loss",
]


def _formula(fit) -> ModelFormula:
    if fit.formula is not None:
        return fit.formula
    return ModelFormula.from_columns("y", fit.names)


def _linear_predictor(fit, scenario):
    X, _ = design_matrix(scenario, _formula(fit), with_response=False)
    z = X @ fit.coef
    var = None
    if fit.cov is not None:
        var = np.einsum("ij,jk,ik->i", X, fit.cov, X)
    return z, var


def predict_tinf(fit: LinearFit, scenario, *, return_se: bool = False):
    """Back-transformed linear prediction ``(lam z + 1)^(1/lam)`` (``exp z`` at 0).

    No retransformation bias correction is applied. With ``return_se`` a
    delta-method standard error is returned too (NaN without a covariance).
    """
    z, var = _linear_predictor(fit, scenario)
    pred = boxcox_inverse(z, fit.lam)
    if not return_se:
        return pred
    if var is None:
        return pred, np.full_like(pred, np.nan)
    # d/dz (lam z + 1)^(1/lam) = pred^(1 - lam)
    deriv = pred ** (1.0 - fit.lam)
    return pred, deriv * np.sqrt(var)


def predict_nrec(fit: CountFit, scenario, *, return_se: bool = False):
    """Log-link mean ``exp(x'beta)``, optionally with a delta-method standard error."""
    z, var = _linear_predictor(fit, scenario)
    pred = np.exp(z)
    if not return_se:
        return pred
    if var is None:
        return pred, np.full_like(pred, np.nan)
    return pred, pred * np.sqrt(var)


@dataclass(frozen=True)
class PriceQuote:
    """Expected aggregate loss ``omega Tinf + eta Nrec`` with its s.e. bound.

    ``se_bound`` is ``omega se_tinf + eta se_nrec``, an upper bound on the
    standard error whatever the correlation of the two predictions.
    """

    tinf_hat: float
    se_tinf: float
    nrec_hat: float
    se_nrec: float
    omega: float
    eta: float
    s_hat: float
    se_bound: float
    scenario: dict | None = None


def price(tinf_hat, se_tinf, nrec_hat, se_nrec, omega, eta, scenario=None) -> PriceQuote:
    vals = np.array([tinf_hat, se_tinf, nrec_hat, se_nrec], dtype=float)
    if np.any(vals < 0):
        raise ValueError("predictions and standard errors must be nonnegative")
    if omega < 0 or eta < 0:
        raise ValueError(f"costs must be nonnegative, got omega={omega}, eta={eta}")
    s = omega * tinf_hat + eta * nrec_hat
    bound = omega * se_tinf + eta * se_nrec
    return PriceQuote(float(tinf_hat), float(se_tinf), float(nrec_hat), float(se_nrec),
                      float(omega), float(eta), float(s), float(bound), scenario)


def quote(tinf_fit: LinearFit, nrec_fit: CountFit, scenarios, omega: float, eta: float,
          se_tinf=None, se_nrec=None) -> list[PriceQuote]:
    """Quotes for a table of scenarios (mapping of equal-length columns).

    Standard errors come from the fits' covariances when available; explicit
    ``se_tinf`` / ``se_nrec`` arrays override them.
    """
    tinf, s1 = predict_tinf(tinf_fit, scenarios, return_se=True)
    nrec, s2 = predict_nrec(nrec_fit, scenarios, return_se=True)
    if se_tinf is not None:
        s1 = np.asarray(se_tinf, dtype=float)
    if se_nrec is not None:
        s2 = np.asarray(se_nrec, dtype=float)
    if np.any(np.isnan(s1)) or np.any(np.isnan(s2)):
        raise ValueError("standard errors unavailable: fits carry no covariance and none were given")
    cols = {k: np.atleast_1d(np.asarray(v)) for k, v in scenarios.items()}
    out = []
    for i in range(len(tinf)):
        scen = {k: v[i].item() for k, v in cols.items()}
        out.append(price(tinf[i], s1[i], nrec[i], s2[i], omega, eta, scen))
    return out


@dataclass(frozen=True)
class LossEstimate:
    estimate: float
    se: float
    runs: int
    losses: np.ndarray


def mc_expected_loss(config, runs: int, omega: float, eta: float, *, seed: int = 0,
                     threads: int = 1) -> LossEstimate:
    """Monte Carlo mean of ``omega Tinf + eta Nrec`` over independent samples.

    ``config`` is either a :class:`~cyberspread.experiment.SweepConfig`
    (each sample draws covariates and a graph) or a
    :class:`~cyberspread.engine.SimConfig` (fixed graph, fresh trajectory).
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if isinstance(config, SimConfig):
        res = run_many(config, runs, seed, threads=threads)
        tinf = np.array([r.tinf for r in res])
        nrec = np.array([r.nrec for r in res], dtype=float)
    elif isinstance(config, SweepConfig):
        data = run_sweep(replace(config, sample_size=runs, replications=1, seed=seed),
                         threads=threads)
        tinf, nrec = data.column("Tinf"), data.column("Nrec").astype(float)
    else:
        raise TypeError("config must be a SweepConfig or SimConfig")
    losses = omega * tinf + eta * nrec
    se = float(losses.std(ddof=1) / np.sqrt(runs)) if runs > 1 else float("nan")
    return LossEstimate(float(losses.mean()), se, runs, losses)
