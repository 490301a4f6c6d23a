"""Pure numpy/scipy likelihood kernels.

Tail quantities are kept in log space throughout: the censored-interval
mass ``Phi(v*) - Phi(a*)`` is evaluated as
``logPhi(v*) + log1p(-exp(logPhi(a*) - logPhi(v*)))`` and hazard-type
ratios as ``exp(logpdf - logcdf)``, so deep-tail parameter points
degrade to -inf log-likelihood instead of overflowing.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _norm_logpdf(z):
    return -0.5 * z * z - _LOG_SQRT_2PI


def _log_interval(log_hi, log_lo):
    """log(exp(log_hi) - exp(log_lo)) elementwise, -inf when it underflows."""
    diff = log_lo - log_hi
    with np.errstate(divide="ignore", invalid="ignore"):
        out = log_hi + np.log1p(-np.exp(diff))
    return np.where(diff < 0.0, out, -np.inf)


def loglik(y, cens, X, gidx, beta, log_sigma, left, dl):
    sig = np.exp(log_sigma)[gidx]
    m = X @ beta
    total = 0.0
    if np.isfinite(left):
        astar = (left - m) / sig
        total -= np.sum(log_ndtr(-astar))
    unc = ~cens
    z = (y[unc] - m[unc]) / sig[unc]
    total += np.sum(_norm_logpdf(z)) - np.sum(log_sigma[gidx[unc]])
    if cens.any():
        nustar = (dl - m[cens]) / sig[cens]
        log_hi = log_ndtr(nustar)
        if np.isfinite(left):
            log_lo = log_ndtr((left - m[cens]) / sig[cens])
        else:
            log_lo = np.full_like(log_hi, -np.inf)
        total += np.sum(_log_interval(log_hi, log_lo))
    return float(total)


def _censored_pieces(m_c, sig_c, left, dl, order):
    """Ratios N/D, M/D, P/D, Q/D for the censored set, scaled via logs.

    With v* and a* the standardized detection limit and truncation bound
    and D = Phi(v*) - Phi(a*):
        N = pdf(v*) - pdf(a*)
        M = v* pdf(v*) - a* pdf(a*)
        P = pdf(v*)(1 - v*^2) - pdf(a*)(1 - a*^2)
        Q = pdf(v*)(v*^3 - v*) - pdf(a*)(a*^3 - a*)
    ``order`` 1 returns (nd, md); 2 additionally (pd, qd).
    """
    nustar = (dl - m_c) / sig_c
    log_hi = log_ndtr(nustar)
    if np.isfinite(left):
        astar = (left - m_c) / sig_c
        log_lo = log_ndtr(astar)
    else:
        astar = None
        log_lo = np.full_like(log_hi, -np.inf)
    logD = _log_interval(log_hi, log_lo)
    e1 = np.exp(_norm_logpdf(nustar) - logD)
    nd = e1.copy()
    md = nustar * e1
    if astar is not None:
        e0 = np.exp(_norm_logpdf(astar) - logD)
        nd = nd - e0
        md = md - astar * e0
    if order == 1:
        return nustar, astar, nd, md, None, None
    pd = (1.0 - nustar**2) * e1
    qd = (nustar**3 - nustar) * e1
    if astar is not None:
        pd = pd - (1.0 - astar**2) * e0
        qd = qd - (astar**3 - astar) * e0
    return nustar, astar, nd, md, pd, qd


def gradient(y, cens, X, gidx, beta, log_sigma, left, dl):
    n, p1 = X.shape
    J = log_sigma.shape[0]
    sig = np.exp(log_sigma)[gidx]
    m = X @ beta
    coef = np.zeros(n)  # per-row multiplier of x_i in the beta block
    svec = np.zeros(n)  # per-row term for the row's log-sigma entry
    if np.isfinite(left):
        astar = (left - m) / sig
        haz = np.exp(_norm_logpdf(astar) - log_ndtr(-astar))
        coef -= haz / sig
        svec -= astar * haz
    unc = ~cens
    z = (y[unc] - m[unc]) / sig[unc]
    coef[unc] += z / sig[unc]
    svec[unc] += z * z - 1.0
    if cens.any():
        sig_c = sig[cens]
        _, _, nd, md, _, _ = _censored_pieces(m[cens], sig_c, left, dl, order=1)
        coef[cens] -= nd / sig_c
        svec[cens] -= md
    out = np.empty(p1 + J)
    out[:p1] = X.T @ coef
    out[p1:] = np.bincount(gidx, weights=svec, minlength=J)
    return out


def hessian(y, cens, X, gidx, beta, log_sigma, left, dl):
    n, p1 = X.shape
    J = log_sigma.shape[0]
    sig = np.exp(log_sigma)[gidx]
    m = X @ beta
    wbb = np.zeros(n)  # weight of x_i x_i^T in the beta block
    wbs = np.zeros(n)  # weight of x_i in the beta x log-sigma cross block
    wss = np.zeros(n)  # log-sigma diagonal term
    if np.isfinite(left):
        astar = (left - m) / sig
        haz = np.exp(_norm_logpdf(astar) - log_ndtr(-astar))
        wbb -= (astar * haz - haz * haz) / sig**2
        wbs += (haz * (1.0 - astar**2) + astar * haz * haz) / sig
        wss += astar * haz * (1.0 - astar**2) + (astar * haz) ** 2
    unc = ~cens
    z = (y[unc] - m[unc]) / sig[unc]
    wbb[unc] -= 1.0 / sig[unc] ** 2
    wbs[unc] -= 2.0 * z / sig[unc]
    wss[unc] -= 2.0 * z * z
    if cens.any():
        sig_c = sig[cens]
        _, _, nd, md, pd, qd = _censored_pieces(m[cens], sig_c, left, dl, order=2)
        wbb[cens] -= (md + nd * nd) / sig_c**2
        wbs[cens] += (pd - nd * md) / sig_c
        wss[cens] -= qd + md * md
    H = np.zeros((p1 + J, p1 + J))
    H[:p1, :p1] = X.T @ (wbb[:, None] * X)
    for k in range(p1):
        col = np.bincount(gidx, weights=wbs * X[:, k], minlength=J)
        H[k, p1:] = col
        H[p1:, k] = col
    H[p1:, p1:][np.diag_indices(J)] = np.bincount(gidx, weights=wss, minlength=J)
    return H
