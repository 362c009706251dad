"""Model formulas and design matrices for the sweep covariates."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Term",
    "ModelFormula",
    "DomainError",
    "INTERCEPT",
    "FULL_FORMULA",
    "PRICING_FORMULA",
    "design_matrix",
]

INTERCEPT = "(Intercept)"

_TRANSFORMS = {
    "ln": (np.log, lambda x: x > 0, "positive"),
    "logit": (lambda x: np.log(x) - np.log1p(-x), lambda x: (x > 0) & (x < 1), "in (0, 1)"),
    "logit2": (lambda x: np.log(x - 2.0) - np.log(3.0 - x),
               lambda x: (x > 2) & (x < 3), "in (2, 3)"),
    "identity": (lambda x: x, lambda x: np.isfinite(x), "finite"),
}
_LABEL = {"ln": "ln({})", "logit": "logit({})", "logit2": "logit({}-2)", "identity": "{}"}
_PARSE = [
    (re.compile(r"^logit\((\w+)-2\)$"), "logit2"),
    (re.compile(r"^logit\((\w+)\)$"), "logit"),
    (re.compile(r"^ln\((\w+)\)$"), "ln"),
    (re.compile(r"^log\((\w+)\)$"), "ln"),
    (re.compile(r"^(\w+)$"), "identity"),
]


class DomainError(ValueError):
    """A covariate value lies outside the domain of its transform."""


@dataclass(frozen=True)
class Term:
    covariate: str
    transform: str = "identity"

    def __post_init__(self):
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")

    @property
    def label(self) -> str:
        return _LABEL[self.transform].format(self.covariate)

    def apply(self, x: np.ndarray) -> np.ndarray:
        f, ok, what = _TRANSFORMS[self.transform]
        x = np.asarray(x, dtype=float)
        bad = ~ok(x)
        if bad.any():
            rows = np.flatnonzero(bad)
            raise DomainError(
                f"{self.label}: {self.covariate} must be {what}; offending rows "
                f"{rows[:10].tolist()} (values {x[rows[:10]].tolist()})"
            )
        return f(x)


@dataclass(frozen=True)
class ModelFormula:
    """``response ~ terms + categorical`` with an intercept.

    The categorical covariate (if any) enters as indicators for every level
    except ``reference``; the columns are named ``<name><level>``.
    """

    response: str
    terms: tuple[Term, ...]
    categorical: str | None = "Ninf0"
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)
    reference: int = 1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if self.categorical is not None and self.reference not in self.levels:
            raise ValueError("reference level must be one of the levels")

    @property
    def dummy_labels(self) -> tuple[str, ...]:
        if self.categorical is None:
            return ()
        return tuple(f"{self.categorical}{v}" for v in self.levels if v != self.reference)

    @property
    def column_names(self) -> tuple[str, ...]:
        return (INTERCEPT,) + tuple(t.label for t in self.terms) + self.dummy_labels

    @property
    def covariates(self) -> tuple[str, ...]:
        names = [t.covariate for t in self.terms]
        if self.categorical is not None:
            names.append(self.categorical)
        return tuple(names)

    def blocks(self) -> dict[str, list[int]]:
        """Column indices of each droppable term (the categorical is one block)."""
        out = {t.label: [i + 1] for i, t in enumerate(self.terms)}
        if self.categorical is not None:
            k = 1 + len(self.terms)
            out[self.categorical] = list(range(k, k + len(self.dummy_labels)))
        return out

    def without(self, label: str) -> "ModelFormula":
        if self.categorical is not None and label == self.categorical:
            return ModelFormula(self.response, self.terms, None)
        keep = tuple(t for t in self.terms if t.label != label)
        if len(keep) == len(self.terms):
            raise KeyError(label)
        return ModelFormula(self.response, keep, self.categorical, self.levels, self.reference)

    def __str__(self):
        rhs = [t.label for t in self.terms]
        if self.categorical is not None:
            rhs.append(self.categorical)
        return f"{self.response} ~ {' + '.join(rhs) if rhs else '1'}"

    @classmethod
    def from_columns(cls, response: str, names) -> "ModelFormula":
        """Rebuild a formula from design column names (as in a coefficient file)."""
        names = list(names)
        if not names or names[0] != INTERCEPT:
            raise ValueError(f"first term must be {INTERCEPT}")
        terms, dummies = [], []
        for name in names[1:]:
            m = re.fullmatch(r"Ninf0(\d+)", name)
            if m:
                dummies.append(int(m.group(1)))
                continue
            for pat, tr in _PARSE:
                hit = pat.fullmatch(name)
                if hit:
                    terms.append(Term(hit.group(1), tr))
                    break
            else:
                raise ValueError(f"cannot parse term {name!r}")
        if not dummies:
            return cls(response, tuple(terms), None)
        levels = tuple(sorted({1, *dummies}))
        f = cls(response, tuple(terms), "Ninf0", levels, 1)
        if f.column_names != tuple(names):
            raise ValueError("indicator columns must follow the other terms in level order")
        return f


def _full(response):
    return ModelFormula(response, (
        Term("par_cop", "logit"), Term("mean_rec", "ln"), Term("mean_inf", "ln"),
        Term("var_rec", "ln"), Term("var_inf", "ln"), Term("Nnode", "ln"),
        Term("Nedge", "ln"), Term("Gam", "logit2"),
    ))


def _pricing(response):
    return ModelFormula(response, (
        Term("mean_rec", "ln"), Term("mean_inf", "ln"),
        Term("var_rec", "ln"), Term("var_inf", "ln"),
    ))


#: all nine covariates, as used for the effects study
FULL_FORMULA = {"Tinf": _full("Tinf"), "Nrec": _full("Nrec")}
#: reduced model used for pricing large networks
PRICING_FORMULA = {"Tinf": _pricing("Tinf"), "Nrec": _pricing("Nrec")}


def design_matrix(data, formula: ModelFormula, *, with_response: bool = True):
    """Build ``(X, y)`` from a mapping of column arrays (or a Dataset).

    ``y`` is None when ``with_response`` is False.
    """
    if hasattr(data, "columns") and callable(data.columns):
        data = data.columns()
    cols = {k: np.atleast_1d(np.asarray(v)) for k, v in data.items()}
    missing = [c for c in formula.covariates if c not in cols]
    if missing:
        raise KeyError(f"missing covariates: {missing}")
    n = len(cols[formula.covariates[0]]) if formula.covariates else len(next(iter(cols.values())))
    parts = [np.ones(n)]
    for t in formula.terms:
        parts.append(t.apply(cols[t.covariate]))
    if formula.categorical is not None:
        lev = np.asarray(cols[formula.categorical])
        if np.any(lev != np.round(lev)) or not np.isin(lev, formula.levels).all():
            bad = np.flatnonzero(~np.isin(lev, formula.levels))
            raise DomainError(f"{formula.categorical} outside levels {formula.levels}: rows {bad[:10].tolist()}")
        for v in formula.levels:
            if v != formula.reference:
                parts.append((lev == v).astype(float))
    X = np.column_stack(parts)
    y = None
    if with_response:
        y = np.asarray(cols[formula.response], dtype=float)
    return X, y
