"""Exchangeable Gaussian copula.

With a single pairwise correlation ``rho`` the d-dimensional normal CDF
collapses to a one-dimensional integral over a common factor ``S``::

    P[Z_i <= z_i for all i] = E_S[ prod_i Phi((z_i - sqrt(rho) S) / sqrt(1 - rho)) ]

Everything here is built on that reduction. The integrand is log-concave, so
it is integrated with Gauss-Hermite nodes centred on its mode and scaled by
its curvature. For ``rho > 1/2`` the factor integrand develops a sharp edge;
there we integrate by parts and integrate ``Phi(m)`` against the density of
``min_i (z_i - sqrt(1-rho) E_i) / sqrt(rho)``, which is narrow instead.

The public functions cross-check two node counts and fall back to adaptive
quadrature when they disagree. The ``*_grouped`` functions evaluate many
independent copulas in one compiled pass and are what the event engine
calls on its hot path.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

from . import _kernels

__all__ = [
    "mvn_equicorr_cdf",
    "log_mvn_equicorr_cdf",
    "copula_cdf",
    "log_copula_cdf",
    "copula_cond",
    "log_copula_cond",
    "log_equicorr_grouped",
    "log_copula_grouped",
    "log_cond_grouped",
    "grouped_with_slope",
    "CopulaSpec",
]

DEFAULT_NODES = 32
_CHECK_NODES = 48
_REFINE_TOL = 1e-10
_MAX_DIM_HERMITE = 200
_LOG_2PI_HALF = 0.5 * np.log(2.0 * np.pi)
# floor on log-margins; keeps quantiles finite (about -1414 sd)
_LOG_U_FLOOR = -1e6


class CopulaSpec:
    """Common correlation of an exchangeable Gaussian copula, ``0 <= rho < 1``."""

    __slots__ = ("rho",)

    def __init__(self, rho: float):
        self.rho = _check_rho(rho)

    def __repr__(self):
        return f"CopulaSpec(rho={self.rho!r})"

    def correlation_matrix(self, d: int) -> np.ndarray:
        return (1.0 - self.rho) * np.eye(d) + self.rho * np.ones((d, d))

    def conditional(self, z_k: float) -> tuple[float, float, float]:
        """Mean, variance and correlation of the other coordinates given ``Z_k = z_k``."""
        r = self.rho
        return r * z_k, 1.0 - r * r, r / (1.0 + r)


def _check_rho(rho):
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    return rho


@lru_cache(maxsize=None)
def _hermite(n):
    x, w = np.polynomial.hermite.hermgauss(n)
    # log weight including the exp(x^2) undo factor
    return x, np.log(w) + x * x


def _logpdf(x):
    return -0.5 * x * x - _LOG_2PI_HALF


def _mills(w):
    # phi(w) / Phi(w), stable in both tails
    return np.exp(_logpdf(w) - log_ndtr(w))


def _group_ids(starts, total):
    sizes = np.diff(np.append(starts, total))
    return np.repeat(np.arange(len(starts)), sizes), sizes


def _ends(starts, total):
    return np.append(starts[1:], total).astype(np.int64)


def grouped_with_slope(log_u, dlog_u, starts, rho, n=DEFAULT_NODES, modes=None):
    """Grouped log copula values and their derivatives along a direction.

    ``dlog_u`` is the derivative of each log-margin along the direction of
    interest; the second output is the matching derivative of each group's
    log copula value. If given, ``modes`` receives the integrand mode of
    each group.
    """
    log_u = np.maximum(np.asarray(log_u, dtype=float), _LOG_U_FLOOR)
    dlog_u = np.asarray(dlog_u, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    G = len(starts)
    val = np.zeros(G)
    slope = np.zeros(G)
    if G == 0:
        return val, slope
    z = np.full(len(log_u), np.inf)
    inside = log_u < 0.0
    z[inside] = ndtri_exp(log_u[inside])
    dz = np.zeros(len(log_u))
    # dz/dlog_u = u / phi(z)
    dz[inside] = dlog_u[inside] * np.exp(log_u[inside] - _logpdf(z[inside]))
    if modes is None:
        modes = np.full(G, np.nan)
    x, lw = _hermite(n)
    _kernels.grouped_log_cdf(z, dz, log_u, dlog_u, starts, _ends(starts, len(z)),
                             float(rho), x, lw, modes, True, val, slope)
    return val, slope


def log_equicorr_grouped(z, starts, rho, n=DEFAULT_NODES):
    """Log equicorrelated normal CDFs for several groups at once.

    ``z`` holds finite points laid out group after group; ``starts`` are the
    offsets at which each (nonempty) group begins.
    """
    z = np.asarray(z, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    out = np.zeros(len(starts))
    if len(starts) == 0:
        return out
    x, lw = _hermite(n)
    _kernels.grouped_log_cdf(z, np.zeros(len(z)), log_ndtr(z), np.zeros(len(z)), starts,
                             _ends(starts, len(z)), float(rho), x, lw,
                             np.full(len(starts), np.nan), False, out, np.zeros(len(starts)))
    return out


def log_copula_grouped(log_u, starts, rho, n=DEFAULT_NODES):
    """Log copula values for groups of log-margins.

    Margins equal to one (``log_u == 0``) drop out of their group; a group
    left empty has copula value 1, and a group with one margin left returns
    that margin exactly.
    """
    log_u = np.asarray(log_u, dtype=float)
    return grouped_with_slope(log_u, np.zeros(len(log_u)), starts, rho, n)[0]


def log_cond_grouped(log_u, starts, rho, n=DEFAULT_NODES):
    """Per-coordinate log partial derivatives ``log dC/du_k`` for grouped copulas.

    Uses the conditional law given ``Z_k = z_k``: the remaining coordinates
    are normal with mean ``rho z_k``, variance ``1 - rho^2`` and common
    correlation ``rho / (1 + rho)``. All margins must lie strictly inside (0, 1).
    """
    log_u = np.maximum(np.asarray(log_u, dtype=float), _LOG_U_FLOOR)
    starts = np.asarray(starts, dtype=np.int64)
    L = len(log_u)
    out = np.zeros(L)
    if L == 0:
        return out
    if rho == 0.0:
        # product copula: dC/du_k = prod_{i != k} u_i
        owner, _ = _group_ids(starts, L)
        return np.add.reduceat(log_u, starts)[owner] - log_u
    x, lw = _hermite(n)
    _kernels.grouped_log_cond(ndtri_exp(log_u), starts, _ends(starts, L), float(rho),
                              x, lw, out)
    return out


def _log_factor_integrand(s, z, a, b):
    return _logpdf(s) + np.sum(log_ndtr((z - a * s) / b))


def _log_quad(z, rho):
    """Adaptive-quadrature reference for the log equicorrelated CDF."""
    a, b = np.sqrt(rho), np.sqrt(1.0 - rho)
    # mode of the log-concave factor integrand
    c = a / b
    s = min(0.0, a * z.min())
    for _ in range(200):
        w = (z - a * s) / b
        h = _mills(w)
        q = np.clip(h * (w + h), 0.0, 1.0)
        step = np.clip((-s - c * h.sum()) / (-1.0 - c * c * q.sum()), -2.0, 2.0)
        s -= step
        if abs(step) < 1e-12:
            break
    peak = _log_factor_integrand(s, z, a, b)

    def f(t):
        return np.exp(_log_factor_integrand(t, z, a, b) - peak)

    edges = np.sort(np.clip(z / a, s - 40.0, s + 40.0))
    pts = np.unique(np.concatenate(([s], edges[:: max(1, len(edges) // 20)])))
    val, _ = integrate.quad(f, s - 40.0, s + 40.0, points=pts, epsabs=0.0,
                            epsrel=1e-12, limit=1000)
    return peak + np.log(val)


def _prep_points(z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1:
        raise ValueError("z must be a vector")
    if np.any(np.isnan(z)):
        raise ValueError("z contains NaN")
    return z


def log_mvn_equicorr_cdf(z, rho: float) -> float:
    """Log of ``P[Z_i <= z_i for all i]`` for equicorrelated standard normals."""
    rho = _check_rho(rho)
    z = _prep_points(z)
    if np.any(z == -np.inf):
        return -np.inf
    z = z[np.isfinite(z)]
    d = len(z)
    if d == 0:
        return 0.0
    if rho == 0.0 or d == 1:
        return float(np.sum(log_ndtr(z)))
    if d > _MAX_DIM_HERMITE:
        return float(_log_quad(z, rho))
    starts = np.array([0])
    v1 = log_equicorr_grouped(z, starts, rho, DEFAULT_NODES)[0]
    v2 = log_equicorr_grouped(z, starts, rho, _CHECK_NODES)[0]
    if np.isfinite(v2) and abs(np.exp(v1) - np.exp(v2)) <= _REFINE_TOL \
            and abs(v1 - v2) <= 1e-6:
        return float(v2)
    return float(_log_quad(z, rho))


def mvn_equicorr_cdf(z, rho: float) -> float:
    """``P[Z_i <= z_i for all i]``; entries of ``z`` may be infinite."""
    rho = _check_rho(rho)
    z = _prep_points(z)
    if rho == 0.0:
        return float(np.prod(ndtr(z)))
    return float(np.exp(log_mvn_equicorr_cdf(z, rho)))


def _prep_u(u):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1 or np.any(np.isnan(u)) or np.any((u < 0) | (u > 1)):
        raise ValueError("copula arguments must be probabilities in [0, 1]")
    return u


def log_copula_cdf(u, rho: float) -> float:
    u = _prep_u(u)
    rho = _check_rho(rho)
    if np.any(u == 0.0):
        return -np.inf
    u = u[u < 1.0]
    if len(u) == 0:
        return 0.0
    if len(u) == 1 or rho == 0.0:
        return float(np.sum(np.log(u)))
    return log_mvn_equicorr_cdf(ndtri(u), rho)


def copula_cdf(u, rho: float) -> float:
    """Gaussian copula ``C(u_1, ..., u_d)`` with common correlation ``rho``."""
    u = _prep_u(u)
    if len(u) == 1:
        return float(u[0])
    if _check_rho(rho) == 0.0:
        return float(np.prod(u))
    return float(np.exp(log_copula_cdf(u, rho)))


def log_copula_cond(u, k: int, rho: float) -> float:
    u = _prep_u(u)
    rho = _check_rho(rho)
    if not 0 <= k < len(u):
        raise IndexError(f"coordinate {k} out of range for dimension {len(u)}")
    if not 0.0 < u[k] < 1.0:
        raise ValueError("conditioning margin must lie strictly inside (0, 1)")
    rest = np.delete(u, k)
    if np.any(rest == 0.0):
        return -np.inf
    rest = rest[rest < 1.0]
    if len(rest) == 0:
        return 0.0
    if rho == 0.0:
        return float(np.sum(np.log(rest)))
    mean, var, r_cond = CopulaSpec(rho).conditional(ndtri(u[k]))
    y = (ndtri(rest) - mean) / np.sqrt(var)
    return log_mvn_equicorr_cdf(y, r_cond)


def copula_cond(u, k: int, rho: float) -> float:
    """Partial derivative ``dC/du_k`` (0-based ``k``), i.e. ``P[U_j <= u_j, j != k | U_k = u_k]``."""
    return float(np.exp(log_copula_cond(u, k, rho)))
