"""Frequency models fitted to sweep datasets, and pricing from them."""

from .anova import DropRow, drop_one
from .formula import (FULL_FORMULA, INTERCEPT, PRICING_FORMULA, DomainError, ModelFormula,
                      Term, design_matrix)
from .io import (QUOTE_HEADER, CoefficientFileError, covariance_path, read_coefficients,
                 read_scenarios, write_coefficients, write_quotes)
from .linear import (DEFAULT_LAMBDA_GRID, LinearFit, RankDeficientError, boxcox,
                     boxcox_inverse, boxcox_lambda, boxcox_profile, fit_boxcox_model, fit_ols)
from .negbin import (ConvergenceError, CountFit, NegBinFit, fit_negbin, fit_negbin_fixed,
                     fit_negbin_model, fit_poisson, negbin_deviance, negbin_loglik,
                     overdispersion_test)
from .pricing import (LossEstimate, PriceQuote, mc_expected_loss, predict_nrec, predict_tinf,
                      price, quote)

__all__ = [
    "DropRow", "drop_one",
    "FULL_FORMULA", "INTERCEPT", "PRICING_FORMULA", "DomainError", "ModelFormula", "Term",
    "design_matrix",
    "QUOTE_HEADER", "CoefficientFileError", "covariance_path", "read_coefficients",
    "read_scenarios", "write_coefficients", "write_quotes",
    "DEFAULT_LAMBDA_GRID", "LinearFit", "RankDeficientError", "boxcox", "boxcox_inverse",
    "boxcox_lambda", "boxcox_profile", "fit_boxcox_model", "fit_ols",
    "ConvergenceError", "CountFit", "NegBinFit", "fit_negbin", "fit_negbin_fixed",
    "fit_negbin_model", "fit_poisson", "negbin_deviance", "negbin_loglik",
    "overdispersion_test",
    "LossEstimate", "PriceQuote", "mc_expected_loss", "predict_nrec", "predict_tinf", "price",
    "quote",
]
