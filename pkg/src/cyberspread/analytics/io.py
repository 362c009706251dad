"""Coefficient, scenario and quote files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .formula import ModelFormula
from .linear import LinearFit
from .negbin import CountFit

__all__ = [
    "CoefficientFileError",
    "write_coefficients",
    "read_coefficients",
    "covariance_path",
    "read_scenarios",
    "write_quotes",
    "QUOTE_HEADER",
]

QUOTE_HEADER = ("mean_rec", "mean_inf", "var_rec", "var_inf", "Ninf0",
                "tinf_hat", "se", "nrec_hat", "se", "s_hat", "se")


class CoefficientFileError(ValueError):
    pass


def covariance_path(path) -> Path:
    """Sidecar file holding the coefficient covariance of ``path``."""
    path = Path(path)
    return path.with_name(path.stem + ".cov" + path.suffix)


def _num(x: float) -> str:
    return repr(float(x))


def write_coefficients(fit: LinearFit | CountFit, path, *, response: str | None = None) -> None:
    """Write ``term,estimate,se`` with a metadata line; covariance goes to a sidecar."""
    if isinstance(fit, LinearFit):
        meta = f"lambda={_num(fit.lam)}"
    elif isinstance(fit, CountFit):
        meta = f"theta={_num(fit.theta)}"
    else:
        raise TypeError(f"unsupported fit type {type(fit).__name__}")
    if response is None and fit.formula is not None:
        response = fit.formula.response
    if response:
        meta += f" response={response}"
    with open(path, "w", newline="") as fh:
        fh.write(f"# {meta}\n")
        fh.write("term,estimate,se\n")
        for name, b, s in zip(fit.names, fit.coef, fit.se):
            fh.write(f"{name},{_num(b)},{_num(s)}\n")
    if fit.cov is not None:
        with open(covariance_path(path), "w", newline="") as fh:
            fh.write("term," + ",".join(fit.names) + "\n")
            for name, row in zip(fit.names, fit.cov):
                fh.write(name + "," + ",".join(_num(v) for v in row) + "\n")


def _parse_meta(line: str, path) -> dict:
    if not line.startswith("#"):
        raise CoefficientFileError(f"{path}: first line must be a '# lambda=...' or '# theta=...' line")
    meta = {}
    for tok in line[1:].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise CoefficientFileError(f"{path}: malformed metadata token {tok!r}")
        meta[key] = val
    if ("lambda" in meta) == ("theta" in meta):
        raise CoefficientFileError(f"{path}: metadata needs exactly one of lambda or theta")
    return meta


def read_coefficients(path) -> LinearFit | CountFit:
    """Load a coefficient file (and its covariance sidecar, if present)."""
    path = Path(path)
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CoefficientFileError(f"{path}: empty file")
    meta = _parse_meta(lines[0], path)
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != ["term", "estimate", "se"]:
        raise CoefficientFileError(f"{path}: expected header 'term,estimate,se'")
    names, coef, se = [], [], []
    for rec in rows[1:]:
        if not rec:
            continue
        if len(rec) != 3:
            raise CoefficientFileError(f"{path}: bad row {rec}")
        names.append(rec[0])
        try:
            coef.append(float(rec[1]))
            se.append(float(rec[2]))
        except ValueError as exc:
            raise CoefficientFileError(f"{path}: {exc}") from None
    names = tuple(names)
    response = meta.get("response", "y")
    try:
        formula = ModelFormula.from_columns(response, names)
    except ValueError as exc:
        raise CoefficientFileError(f"{path}: {exc}") from None
    cov = None
    cpath = covariance_path(path)
    if cpath.exists():
        with open(cpath, newline="") as fh:
            crow = list(csv.reader(fh))
        if tuple(crow[0][1:]) != names or [r[0] for r in crow[1:]] != list(names):
            raise CoefficientFileError(f"{cpath}: terms do not match {path}")
        cov = np.array([[float(v) for v in r[1:]] for r in crow[1:]])
    coef, se = np.array(coef), np.array(se)
    if "lambda" in meta:
        return LinearFit(names, coef, se, lam=float(meta["lambda"]), cov=cov, formula=formula)
    return CountFit(names, coef, se, theta=float(meta["theta"]), cov=cov, formula=formula)


def read_scenarios(path) -> dict[str, np.ndarray]:
    """Read a CSV of scenarios into numeric columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty scenario file") from None
        data = [r for r in reader if r]
    if len(set(header)) != len(header):
        raise ValueError(f"{path}: duplicate column names")
    cols = {}
    for j, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[j]) for r in data])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: column {name}: {exc}") from None
    return cols


def write_quotes(quotes, path, *, decimals: int = 6) -> None:
    """Write quotes in the fixed column order of :data:`QUOTE_HEADER`."""
    fmt = f"{{:.{decimals}f}}"
    with open(path, "w", newline="") as fh:
        fh.write(",".join(QUOTE_HEADER) + "\n")
        for q in quotes:
            s = q.scenario or {}
            lead = []
            for key in QUOTE_HEADER[:5]:
                v = s.get(key, float("nan"))
                lead.append(str(int(v)) if key == "Ninf0" and np.isfinite(v) else _num(v))
            vals = [q.tinf_hat, q.se_tinf, q.nrec_hat, q.se_nrec, q.s_hat, q.se_bound]
            fh.write(",".join(lead + [fmt.format(v) for v in vals]) + "\n")
