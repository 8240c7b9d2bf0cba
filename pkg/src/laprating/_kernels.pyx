# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled match replay loops; see ``_kernels_py.py`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


cdef inline double _logistic(double x) noexcept nogil:
    cdef double z
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    z = exp(x)
    return z / (1.0 + z)


def _init_vec(init, Py_ssize_t n, double fill):
    if init is None:
        return np.full(n, fill)
    return np.array(init, dtype=np.float64, copy=True)


def replay_elo(const cnp.int64_t[::1] winner, const cnp.int64_t[::1] loser, Py_ssize_t n_players,
               double K, double mu0, double b, mu_init=None):
    cdef Py_ssize_t T = winner.shape[0], t, w, l
    cdef double p, d
    out_arr = np.empty(T)
    mu_arr = _init_vec(mu_init, n_players, mu0)
    cdef double[::1] out = out_arr
    cdef double[::1] mu = mu_arr
    with nogil:
        for t in range(T):
            w = winner[t]
            l = loser[t]
            p = _logistic(b * (mu[w] - mu[l]))
            out[t] = p
            d = K * (1.0 - p)
            mu[w] += d
            mu[l] -= d
    return out_arr, mu_arr


def replay_velo(const cnp.int64_t[::1] winner, const cnp.int64_t[::1] loser, Py_ssize_t n_players,
                double mu0, double sigma2_0, int mode, double mode_param, double B2, double b,
                mu_init=None, var_init=None):
    cdef Py_ssize_t T = winner.shape[0], t, w, l
    cdef double vw, vl, p, q, C, mw, ml, pn, pq, Cn, Lw, Ll, nw, nl
    cdef double bb = b * b
    out_arr = np.empty(T)
    mu_arr = _init_vec(mu_init, n_players, mu0)
    var_arr = _init_vec(var_init, n_players, sigma2_0)
    cdef double[::1] out = out_arr
    cdef double[::1] mu = mu_arr
    cdef double[::1] var = var_arr
    with nogil:
        for t in range(T):
            w = winner[t]
            l = loser[t]
            vw = var[w]
            vl = var[l]
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
    return out_arr, mu_arr, var_arr


def replay_surface(const cnp.int64_t[::1] winner, const cnp.int64_t[::1] loser,
                   const cnp.int64_t[::1] surface, Py_ssize_t n_players, double mu0,
                   sigma2_0, rho, double A, double B2, double b, mu_init=None, var_init=None):
    cdef Py_ssize_t T = winner.shape[0], t, w, l, m, k
    cdef Py_ssize_t ns = len(sigma2_0)
    cdef double p, q, vm, C, sw, sl, pn, pq, Cn, gw, gl, r2, nw, nl, rmk
    cdef double bb = b * b
    cdef bint update_var = not (A == 0.0 and B2 == 0.0)
    rho_arr = np.ascontiguousarray(rho, dtype=np.float64)
    out_arr = np.empty(T)
    if mu_init is None:
        mu_arr = np.full((n_players, ns), mu0)
    else:
        mu_arr = np.array(mu_init, dtype=np.float64, order="C", copy=True)
    if var_init is None:
        var_arr = np.tile(np.asarray(sigma2_0, dtype=np.float64), (n_players, 1))
    else:
        var_arr = np.array(var_init, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] R = rho_arr
    cdef double[::1] out = out_arr
    cdef double[:, ::1] mu = mu_arr
    cdef double[:, ::1] var = var_arr
    with nogil:
        for t in range(T):
            w = winner[t]
            l = loser[t]
            m = surface[t]
            p = _logistic(b * (mu[w, m] - mu[l, m]))
            out[t] = p
            q = 1.0 - p
            vm = var[w, m] + var[l, m]
            C = 1.0 / (1.0 + bb * p * q * vm)
            sw = sqrt(var[w, m])
            sl = sqrt(var[l, m])
            for k in range(ns):
                rmk = R[m, k]
                mu[w, k] += sqrt(var[w, k]) * sw * rmk * b * C * q
                mu[l, k] -= sqrt(var[l, k]) * sl * rmk * b * C * q
            if not update_var:
                continue
            pn = _logistic(b * (mu[w, m] - mu[l, m]))
            pq = pn * (1.0 - pn)
            Cn = 1.0 / (1.0 + bb * pq * vm)
            gw = pq * var[w, m] * bb * Cn
            gl = pq * var[l, m] * bb * Cn
            for k in range(ns):
                r2 = R[m, k] * R[m, k]
                nw = var[w, k] * (1.0 - A * gw * r2)
                nl = var[l, k] * (1.0 - A * gl * r2)
                var[w, k] = nw if nw > B2 else B2
                var[l, k] = nl if nl > B2 else B2
    return out_arr, mu_arr, var_arr
