"""Pure-Python match replay loops.

Reference implementation of the compiled kernels in ``_kernels.pyx``; both
expose the same functions with the same semantics. Inputs are integer-coded
matches in chronological order; every function returns the pre-match win
probability of the eventual winner for each match plus the final states.
"""

import math

import numpy as np


def _logistic(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def replay_elo(winner, loser, n_players, K, mu0, b, mu_init=None):
    mu = [float(mu0)] * n_players if mu_init is None else [float(x) for x in mu_init]
    out = [0.0] * len(winner)
    for t, (w, l) in enumerate(zip(winner.tolist(), loser.tolist())):
        p = _logistic(b * (mu[w] - mu[l]))
        out[t] = p
        d = K * (1.0 - p)
        mu[w] += d
        mu[l] -= d
    return np.array(out), np.array(mu)


def replay_velo(winner, loser, n_players, mu0, sigma2_0, mode, mode_param, B2, b,
                mu_init=None, var_init=None):
    """vElo replay; ``mode`` 0/1/2 selects ``1 - A L`` / ``1 - L + alpha`` / ``1 - L`` plus eta^2."""
    mu = [float(mu0)] * n_players if mu_init is None else [float(x) for x in mu_init]
    var = [float(sigma2_0)] * n_players if var_init is None else [float(x) for x in var_init]
    out = [0.0] * len(winner)
    bb = b * b
    for t, (w, l) in enumerate(zip(winner.tolist(), loser.tolist())):
        vw, vl = var[w], var[l]
        p = _logistic(b * (mu[w] - mu[l]))
        out[t] = p
        q = 1.0 - p
        C = 1.0 / (1.0 + bb * p * q * (vw + vl))
        mw = mu[w] + b * vw * C * q
        ml = mu[l] - b * vl * C * q
        mu[w] = mw
        mu[l] = ml
        pn = _logistic(b * (mw - ml))
        pq = pn * (1.0 - pn)
        Cn = 1.0 / (1.0 + bb * pq * (vw + vl))
        Lw = pq * vw * bb * Cn
        Ll = pq * vl * bb * Cn
        if mode == 0:
            nw = vw * (1.0 - mode_param * Lw)
            nl = vl * (1.0 - mode_param * Ll)
        elif mode == 1:
            nw = vw * (1.0 - Lw + mode_param)
            nl = vl * (1.0 - Ll + mode_param)
        else:
            nw = vw * (1.0 - Lw) + mode_param
            nl = vl * (1.0 - Ll) + mode_param
        var[w] = nw if nw > B2 else B2
        var[l] = nl if nl > B2 else B2
    return np.array(out), np.array(mu), np.array(var)


def replay_surface(winner, loser, surface, n_players, mu0, sigma2_0, rho, A, B2, b,
                   mu_init=None, var_init=None):
    """vGenElo Surface replay; ``A = B2 = 0`` gives GenElo Surface."""
    ns = len(sigma2_0)
    rho = [list(map(float, r)) for r in np.asarray(rho)]
    if mu_init is None:
        mu = [[float(mu0)] * ns for _ in range(n_players)]
    else:
        mu = np.asarray(mu_init, dtype=float).tolist()
    if var_init is None:
        var = [[float(v) for v in sigma2_0] for _ in range(n_players)]
    else:
        var = np.asarray(var_init, dtype=float).tolist()
    out = [0.0] * len(winner)
    bb = b * b
    for t, (w, l, m) in enumerate(zip(winner.tolist(), loser.tolist(), surface.tolist())):
        muw, mul, vw, vl = mu[w], mu[l], var[w], var[l]
        rm = rho[m]
        p = _logistic(b * (muw[m] - mul[m]))
        out[t] = p
        q = 1.0 - p
        vm = vw[m] + vl[m]
        C = 1.0 / (1.0 + bb * p * q * vm)
        sw = math.sqrt(vw[m])
        sl = math.sqrt(vl[m])
        for k in range(ns):
            muw[k] += math.sqrt(vw[k]) * sw * rm[k] * b * C * q
            mul[k] -= math.sqrt(vl[k]) * sl * rm[k] * b * C * q
        if A == 0.0 and B2 == 0.0:
            continue
        pn = _logistic(b * (muw[m] - mul[m]))
        pq = pn * (1.0 - pn)
        Cn = 1.0 / (1.0 + bb * pq * vm)
        gw = pq * vw[m] * bb * Cn
        gl = pq * vl[m] * bb * Cn
        for k in range(ns):
            r2 = rm[k] * rm[k]
            nw = vw[k] * (1.0 - A * gw * r2)
            nl = vl[k] * (1.0 - A * gl * r2)
            vw[k] = nw if nw > B2 else B2
            vl[k] = nl if nl > B2 else B2
    return np.array(out), np.array(mu), np.array(var)
