"""Compiled inner loops for grouped equicorrelated-normal integrals.

Each group is one exchangeable Gaussian copula evaluated at its own points.
The log integrand is maximized by Newton's method and then integrated with
Gauss-Hermite nodes centred at the mode and scaled by the curvature there.
"""

import math

import numpy as np
from numba import njit

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_SQRT1_2 = math.sqrt(0.5)


@njit(cache=True)
def log_ndtr(x):
    if x > 0.0:
        return math.log1p(-0.5 * math.erfc(x * _SQRT1_2))
    if x > -20.0:
        return math.log(0.5 * math.erfc(-x * _SQRT1_2))
    # asymptotic series for the far lower tail
    x2 = 1.0 / (x * x)
    s = 1.0 - x2 * (1.0 - 3.0 * x2 * (1.0 - 5.0 * x2 * (1.0 - 7.0 * x2 * (
        1.0 - 9.0 * x2 * (1.0 - 11.0 * x2)))))
    return -0.5 * x * x - math.log(-x) - _LOG_SQRT_2PI + math.log(s)


@njit(cache=True)
def log_phi(x):
    return -0.5 * x * x - _LOG_SQRT_2PI


@njit(cache=True)
def mills(x):
    # phi(x) / Phi(x)
    return math.exp(log_phi(x) - log_ndtr(x))


@njit(cache=True)
def _factor_mode(z, idx, cnt, a, b, s0):
    c = a / b
    s = s0
    hess = -1.0
    for _ in range(100):
        g = -s
        hess = -1.0
        for p in range(cnt):
            w = (z[idx[p]] - a * s) / b
            h = mills(w)
            q = h * (w + h)
            if q < 0.0:
                q = 0.0
            elif q > 1.0:
                q = 1.0
            g -= c * h
            hess -= c * c * q
        step = g / hess
        if step > 2.0:
            step = 2.0
        elif step < -2.0:
            step = -2.0
        s -= step
        if abs(step) < 1e-10:
            break
    return s, hess


@njit(cache=True)
def _factor_log_integral(z, dz, idx, cnt, a, b, xs, lws, s0, want_grad):
    s, hess = _factor_mode(z, idx, cnt, a, b, s0)
    sigma = 1.0 / math.sqrt(-hess)
    n = xs.shape[0]
    L = np.empty(n)
    G = np.zeros(n)
    lmax = -np.inf
    for j in range(n):
        S = s + _SQRT2 * sigma * xs[j]
        acc = log_phi(S) + lws[j]
        gsum = 0.0
        for p in range(cnt):
            w = (z[idx[p]] - a * S) / b
            lp = log_ndtr(w)
            acc += lp
            if want_grad:
                gsum += math.exp(log_phi(w) - lp) * dz[idx[p]]
        L[j] = acc
        G[j] = gsum / b
        if acc > lmax:
            lmax = acc
    tot = 0.0
    gtot = 0.0
    for j in range(n):
        e = math.exp(L[j] - lmax)
        tot += e
        gtot += e * G[j]
    return lmax + math.log(tot) + math.log(_SQRT2 * sigma), gtot / tot, s


@njit(cache=True)
def _min_terms(m, z, idx, cnt, a, b):
    """log integrand, d/dm, d2/dm2 of Phi(m) * density of the minimum at m."""
    c = a / b
    lhmax = -np.inf
    sum_lp = 0.0
    sum_h = 0.0
    sum_q = 0.0
    for p in range(cnt):
        w = (z[idx[p]] - a * m) / b
        lp = log_ndtr(w)
        sum_lp += lp
        lh = log_phi(w) - lp
        if lh > lhmax:
            lhmax = lh
    B = 0.0
    AB = 0.0
    dqB = 0.0
    for p in range(cnt):
        w = (z[idx[p]] - a * m) / b
        lp = log_ndtr(w)
        lh = log_phi(w) - lp
        h = math.exp(lh)
        e = math.exp(lh - lhmax)
        wh = w + h
        q = h * wh
        if q < 0.0:
            q = 0.0
        elif q > 1.0:
            q = 1.0
        sum_h += h
        sum_q += q
        B += e
        AB += e * wh
        dqB += e * (1.0 - wh * (w + 2.0 * h))
    AB /= B
    dqB /= B
    hm = mills(m)
    qm = hm * (m + hm)
    if qm < 0.0:
        qm = 0.0
    elif qm > 1.0:
        qm = 1.0
    logf = log_ndtr(m) + sum_lp + math.log(c) + lhmax + math.log(B)
    grad = hm - c * sum_h + c * AB
    hess = -qm - c * c * sum_q - c * c * (dqB + AB * AB)
    return logf, grad, hess


@njit(cache=True)
def _min_log_integral(z, dz, idx, cnt, a, b, xs, lws, m0, want_grad):
    c = a / b
    fallback = -c * c
    m = m0
    hess = fallback
    for _ in range(100):
        _, grad, hess = _min_terms(m, z, idx, cnt, a, b)
        if not hess < -1e-12:
            hess = fallback
        step = grad / hess
        lim = 2.0 / c
        if step > lim:
            step = lim
        elif step < -lim:
            step = -lim
        m -= step
        if abs(step) < 1e-10 / c:
            break
    _, _, hess = _min_terms(m, z, idx, cnt, a, b)
    if not hess < -1e-12:
        hess = fallback
    sigma = 1.0 / math.sqrt(-hess)
    n = xs.shape[0]
    L = np.empty(n)
    G = np.zeros(n)
    lmax = -np.inf
    for j in range(n):
        M = m + _SQRT2 * sigma * xs[j]
        lf, _, _ = _min_terms(M, z, idx, cnt, a, b)
        L[j] = lf + lws[j]
        if want_grad:
            # d logf / d z_i = (h_i - (w_i + h_i) h_i / sum h) / b, with the
            # ratio h_i / sum h taken from normalized log weights
            lhmax = -np.inf
            for p in range(cnt):
                w = (z[idx[p]] - a * M) / b
                lh = log_phi(w) - log_ndtr(w)
                if lh > lhmax:
                    lhmax = lh
            B = 0.0
            for p in range(cnt):
                w = (z[idx[p]] - a * M) / b
                B += math.exp(log_phi(w) - log_ndtr(w) - lhmax)
            gs = 0.0
            for p in range(cnt):
                w = (z[idx[p]] - a * M) / b
                lh = log_phi(w) - log_ndtr(w)
                h = math.exp(lh)
                gs += (h - (w + h) * math.exp(lh - lhmax) / B) * dz[idx[p]]
            G[j] = gs / b
        if L[j] > lmax:
            lmax = L[j]
    tot = 0.0
    gtot = 0.0
    for j in range(n):
        e = math.exp(L[j] - lmax)
        tot += e
        gtot += e * G[j]
    return lmax + math.log(tot) + math.log(_SQRT2 * sigma), gtot / tot, m


@njit(cache=True)
def grouped_log_cdf(z, dz, logu, dlogu, starts, ends, rho, xs, lws, modes, want_grad,
                    out_val, out_grad):
    """Log equicorrelated CDF (and its derivative along ``dz``) per group.

    Points with ``z = +inf`` drop out. A group with a single finite point
    returns ``logu`` / ``dlogu`` for that point directly. ``modes`` carries
    warm starts between calls and is updated in place (NaN = cold start).
    """
    a = math.sqrt(rho)
    b = math.sqrt(1.0 - rho)
    use_min = rho > 0.5
    G = starts.shape[0]
    idx = np.empty(z.shape[0], dtype=np.int64)
    for g in range(G):
        cnt = 0
        zmin = np.inf
        for i in range(starts[g], ends[g]):
            if z[i] < np.inf:
                idx[cnt] = i
                cnt += 1
                if z[i] < zmin:
                    zmin = z[i]
        if cnt == 0:
            out_val[g] = 0.0
            out_grad[g] = 0.0
            continue
        if cnt == 1 or rho == 0.0:
            v = 0.0
            d = 0.0
            for p in range(cnt):
                v += logu[idx[p]]
                d += dlogu[idx[p]]
            out_val[g] = v
            out_grad[g] = d
            continue
        if use_min:
            m0 = zmin / a
            v, d, mode = _min_log_integral(z, dz, idx, cnt, a, b, xs, lws, m0, want_grad)
        else:
            s0 = min(0.0, a * zmin)
            v, d, mode = _factor_log_integral(z, dz, idx, cnt, a, b, xs, lws, s0, want_grad)
        modes[g] = mode
        out_val[g] = v
        out_grad[g] = d


@njit(cache=True)
def grouped_log_cond(z, starts, ends, rho, xs, lws, out):
    """``log dC/du_k`` for every point via the conditional equicorrelated CDF."""
    r2 = rho / (1.0 + rho)
    a = math.sqrt(r2)
    b = math.sqrt(1.0 - r2)
    sd = math.sqrt(1.0 - rho * rho)
    dummy = np.zeros(1)
    G = starts.shape[0]
    for g in range(G):
        k0 = starts[g]
        K = ends[g] - k0
        if K <= 1:
            for i in range(k0, ends[g]):
                out[i] = 0.0
            continue
        y = np.empty(K - 1)
        idx = np.arange(K - 1)
        for k in range(K):
            zk = z[k0 + k]
            p = 0
            ymin = np.inf
            for i in range(K):
                if i != k:
                    y[p] = (z[k0 + i] - rho * zk) / sd
                    if y[p] < ymin:
                        ymin = y[p]
                    p += 1
            if K - 1 == 1 or r2 == 0.0:
                v = 0.0
                for q in range(K - 1):
                    v += log_ndtr(y[q])
                out[k0 + k] = v
                continue
            v, _, _ = _factor_log_integral(y, dummy, idx, K - 1, a, b, xs, lws,
                                           min(0.0, a * ymin), False)
            out[k0 + k] = v


_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_LOG_P_LOW = math.log(0.02425)
_LOG_P_HIGH = math.log1p(-0.02425)


@njit(cache=True)
def _tail_guess(q):
    # q = sqrt(-2 log p) for a lower-tail probability p
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


@njit(cache=True)
def ndtri_exp(y):
    """Inverse of ``log_ndtr``: rational starting guess, then Newton steps."""
    if y >= 0.0:
        return np.inf
    if y < _LOG_P_LOW:
        z = _tail_guess(math.sqrt(-2.0 * y))
    elif y > _LOG_P_HIGH:
        z = -_tail_guess(math.sqrt(-2.0 * math.log(-math.expm1(y))))
    else:
        q = math.exp(y) - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z = num / den
    for _ in range(60):
        step = (log_ndtr(z) - y) / mills(z)
        z -= step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


_U_FLOOR = -1e6


@njit(cache=True)
def log_phi_slope(tau, r, t, starts, ends, inf_shape, inf_rate, rec_shape, rec_rate,
                  rho, xs, lws, want_grad):
    """Log no-event probability over ``tau`` (unnormalized) and its tau-derivative.

    ``r`` are recovery clocks, ``t`` infection-link clocks grouped by
    ``starts``/``ends``; both laws are Weibull ``exp(-(rate x)^shape)``.
    """
    val = 0.0
    slope = 0.0
    for i in range(r.shape[0]):
        x = rec_rate * (r[i] + tau)
        val -= x ** rec_shape
        if want_grad:
            slope -= rec_shape * rec_rate * x ** (rec_shape - 1.0)
    L = t.shape[0]
    if L == 0:
        return val, slope
    z = np.empty(L)
    dz = np.zeros(L)
    lu = np.empty(L)
    dlu = np.zeros(L)
    for i in range(L):
        x = inf_rate * (t[i] + tau)
        lu[i] = max(-(x ** inf_shape), _U_FLOOR)
        if lu[i] < 0.0:
            z[i] = ndtri_exp(lu[i])
            if want_grad:
                dlu[i] = -inf_shape * inf_rate * x ** (inf_shape - 1.0)
                dz[i] = dlu[i] * math.exp(lu[i] - log_phi(z[i]))
        else:
            z[i] = np.inf
    G = starts.shape[0]
    out = np.empty(G)
    grad = np.empty(G)
    modes = np.empty(G)
    grouped_log_cdf(z, dz, lu, dlu, starts, ends, rho, xs, lws, modes, want_grad, out, grad)
    for g in range(G):
        val += out[g]
        slope += grad[g]
    return val, slope


@njit(cache=True)
def solve_log_tau(log_u, tmax, base, r, t, starts, ends, inf_shape, inf_rate,
                  rec_shape, rec_rate, rho, xs, lws, growth, max_step, xtol, max_iter):
    """Solve ``log_phi(tau) - base = log_u`` by safeguarded Newton in ``log tau``.

    Returns ``(tau, status)``: status 0 = root found, 1 = root beyond
    ``tmax``, 2 = no convergence, 3 = NaN encountered.
    """
    lo = -np.inf
    hi = np.inf
    if tmax < np.inf:
        v, _ = log_phi_slope(tmax, r, t, starts, ends, inf_shape, inf_rate, rec_shape,
                             rec_rate, rho, xs, lws, False)
        v = min(v - base, 0.0)
        if math.isnan(v):
            return tmax, 3
        if v >= log_u:
            return tmax, 1
        hi = math.log(tmax)
    rate = r.shape[0] * rec_rate / math.gamma(1.0 + 1.0 / rec_shape) \
        + t.shape[0] * inf_rate / math.gamma(1.0 + 1.0 / inf_shape)
    x = min(-math.log(rate), hi - growth)
    for _ in range(max_iter):
        tau = math.exp(x)
        v, slope = log_phi_slope(tau, r, t, starts, ends, inf_shape, inf_rate, rec_shape,
                                 rec_rate, rho, xs, lws, True)
        v = min(v - base, 0.0)
        if math.isnan(v) or math.isnan(slope):
            return tau, 3
        g = max(v, -1e100) - log_u
        if g == 0.0:
            return tau, 0
        if g > 0.0:
            lo = x
        else:
            hi = x
        dg = tau * slope
        xn = np.nan
        if dg < 0.0 and dg > -np.inf:
            step = -g / dg
            xn = x + max(-max_step, min(max_step, step))
        if not (lo < xn < hi):
            if lo > -np.inf and hi < np.inf:
                xn = 0.5 * (lo + hi)
            elif g > 0.0:
                xn = x + growth
            else:
                xn = x - growth
        if abs(xn - x) < xtol or hi - lo < xtol:
            return math.exp(xn), 0
        x = xn
    return math.exp(x), 2
