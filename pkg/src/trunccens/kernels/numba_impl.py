"""Numba-compiled likelihood kernels.

Same contracts as :mod:`trunccens.kernels.numpy_impl`, written as scalar
loops. The normal log-CDF is built from ``math.erfc`` with an asymptotic
Mills-ratio expansion below the erfc underflow point, matching scipy's
``log_ndtr`` to around 1e-15 over the ranges the fits visit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _log_ndtr(x):
    if x >= 0.0:
        # upper half: log1p of the (fully accurate) survival probability
        return math.log1p(-0.5 * math.erfc(x / _SQRT2))
    if x > -36.0:
        return math.log(0.5 * math.erfc(-x / _SQRT2))
    # erfc underflows past here; Mills-ratio series in 1/x^2
    t = 1.0 / (x * x)
    series = 1.0 - t * (1.0 - 3.0 * t * (1.0 - 5.0 * t * (1.0 - 7.0 * t * (1.0 - 9.0 * t))))
    return -0.5 * x * x - math.log(-x) - _LOG_SQRT_2PI + math.log(series)


@njit(cache=True)
def _norm_logpdf(z):
    return -0.5 * z * z - _LOG_SQRT_2PI


@njit(cache=True)
def _log_interval(log_hi, log_lo):
    diff = log_lo - log_hi
    if diff >= 0.0:
        return -np.inf
    return log_hi + math.log1p(-math.exp(diff))


@njit(cache=True)
def loglik(y, cens, X, gidx, beta, log_sigma, left, dl):
    n, p1 = X.shape
    has_trunc = np.isfinite(left)
    total = 0.0
    for i in range(n):
        j = gidx[i]
        ls = log_sigma[j]
        sig = math.exp(ls)
        m = 0.0
        for k in range(p1):
            m += X[i, k] * beta[k]
        if has_trunc:
            astar = (left - m) / sig
            total -= _log_ndtr(-astar)
        if cens[i]:
            nustar = (dl - m) / sig
            log_hi = _log_ndtr(nustar)
            if has_trunc:
                log_lo = _log_ndtr((left - m) / sig)
            else:
                log_lo = -np.inf
            total += _log_interval(log_hi, log_lo)
        else:
            z = (y[i] - m) / sig
            total += _norm_logpdf(z) - ls
    return total


@njit(cache=True)
def gradient(y, cens, X, gidx, beta, log_sigma, left, dl):
    n, p1 = X.shape
    J = log_sigma.shape[0]
    has_trunc = np.isfinite(left)
    out = np.zeros(p1 + J)
    for i in range(n):
        j = gidx[i]
        sig = math.exp(log_sigma[j])
        m = 0.0
        for k in range(p1):
            m += X[i, k] * beta[k]
        coef = 0.0
        sterm = 0.0
        if has_trunc:
            astar = (left - m) / sig
            haz = math.exp(_norm_logpdf(astar) - _log_ndtr(-astar))
            coef -= haz / sig
            sterm -= astar * haz
        if cens[i]:
            nustar = (dl - m) / sig
            log_hi = _log_ndtr(nustar)
            if has_trunc:
                astar = (left - m) / sig
                log_lo = _log_ndtr(astar)
            else:
                astar = 0.0
                log_lo = -np.inf
            logD = _log_interval(log_hi, log_lo)
            e1 = math.exp(_norm_logpdf(nustar) - logD)
            nd = e1
            md = nustar * e1
            if has_trunc:
                e0 = math.exp(_norm_logpdf(astar) - logD)
                nd -= e0
                md -= astar * e0
            coef -= nd / sig
            sterm -= md
        else:
            z = (y[i] - m) / sig
            coef += z / sig
            sterm += z * z - 1.0
        for k in range(p1):
            out[k] += coef * X[i, k]
        out[p1 + j] += sterm
    return out


@njit(cache=True)
def hessian(y, cens, X, gidx, beta, log_sigma, left, dl):
    n, p1 = X.shape
    J = log_sigma.shape[0]
    has_trunc = np.isfinite(left)
    H = np.zeros((p1 + J, p1 + J))
    for i in range(n):
        j = gidx[i]
        sig = math.exp(log_sigma[j])
        m = 0.0
        for k in range(p1):
            m += X[i, k] * beta[k]
        wbb = 0.0
        wbs = 0.0
        wss = 0.0
        if has_trunc:
            astar = (left - m) / sig
            haz = math.exp(_norm_logpdf(astar) - _log_ndtr(-astar))
            wbb -= (astar * haz - haz * haz) / (sig * sig)
            wbs += (haz * (1.0 - astar * astar) + astar * haz * haz) / sig
            wss += astar * haz * (1.0 - astar * astar) + (astar * haz) ** 2
        if cens[i]:
            nustar = (dl - m) / sig
            log_hi = _log_ndtr(nustar)
            if has_trunc:
                astar = (left - m) / sig
                log_lo = _log_ndtr(astar)
            else:
                astar = 0.0
                log_lo = -np.inf
            logD = _log_interval(log_hi, log_lo)
            e1 = math.exp(_norm_logpdf(nustar) - logD)
            nd = e1
            md = nustar * e1
            pd = (1.0 - nustar * nustar) * e1
            qd = (nustar**3 - nustar) * e1
            if has_trunc:
                e0 = math.exp(_norm_logpdf(astar) - logD)
                nd -= e0
                md -= astar * e0
                pd -= (1.0 - astar * astar) * e0
                qd -= (astar**3 - astar) * e0
            wbb -= (md + nd * nd) / (sig * sig)
            wbs += (pd - nd * md) / sig
            wss -= qd + md * md
        else:
            z = (y[i] - m) / sig
            wbb -= 1.0 / (sig * sig)
            wbs -= 2.0 * z / sig
            wss -= 2.0 * z * z
        for k in range(p1):
            xk = X[i, k]
            for l in range(k, p1):
                H[k, l] += wbb * xk * X[i, l]
            H[k, p1 + j] += wbs * xk
        H[p1 + j, p1 + j] += wss
    for k in range(p1 + J):
        for l in range(k + 1, p1 + J):
            H[l, k] = H[k, l]
    return H
