# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same API as ``_kernels_py``."""

import numpy as np

from libc.math cimport fabs, pow, isfinite

cdef double OVERFLOW_GUARD = 1e300
cdef double PIVOT_FLOOR = 1e-300


def shoot_power(double u1, double h, Py_ssize_t n, double p, double q):
    cdef double h2 = h * h
    u_arr = np.empty(n)
    up_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] up = up_arr
    du_arr = np.empty(n - 1)
    dup_arr = np.empty(n - 1)
    cdef double[::1] dus = du_arr
    cdef double[::1] dups = dup_arr
    cdef double x = u1, xp = 1.0
    cdef double d, dp, g2n, num, dnum, a, a_prime
    cdef Py_ssize_t k
    u[0] = x
    up[0] = xp
    d = 0.5 * h2 * pow(x, p)
    dp = 0.5 * h2 * p * pow(x, p - 1.0)
    for k in range(1, n):
        dus[k - 1] = d
        dups[k - 1] = dp
        x += d
        xp += dp
        if not (x <= OVERFLOW_GUARD and xp <= OVERFLOW_GUARD):
            raise OverflowError(f"shooting trajectory exceeded 1e300 at node {k + 1}")
        u[k] = x
        up[k] = xp
        if k < n - 1:
            d += h2 * pow(x, p)
            dp += h2 * p * pow(x, p - 1.0) * xp
    g2n = pow(x, q)
    num = d / h + 0.5 * h * pow(x, p)
    a = num / g2n
    dnum = dp / h + 0.5 * h * p * pow(x, p - 1.0) * xp
    a_prime = (dnum - a * q * pow(x, q - 1.0) * xp) / g2n
    return u_arr, up_arr, du_arr, dup_arr, a, a_prime


cdef int _solve(double[::1] d, double[::1] b, double[::1] du, double[::1] du2,
                double[::1] x) noexcept nogil:
    """Factor and solve in place; returns the 1-based row of a bad pivot or 0."""
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef double fact, tmp, tb
    for i in range(n):
        du[i] = -1.0
        du2[i] = 0.0
    for i in range(n - 1):
        if fabs(d[i]) >= 1.0:
            if fabs(d[i]) < PIVOT_FLOOR:
                return <int>(i + 1)
            fact = -1.0 / d[i]
            d[i + 1] -= fact * du[i]
            b[i + 1] -= fact * b[i]
        else:
            fact = -d[i]
            d[i] = -1.0
            tmp = d[i + 1]
            d[i + 1] = du[i] - fact * tmp
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du2[i]
            du[i] = tmp
            tb = b[i]
            b[i] = b[i + 1]
            b[i + 1] = tb - fact * b[i + 1]
    if fabs(d[n - 1]) < PIVOT_FLOOR:
        return <int>n
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return 0


def tridiag_solve(gamma, rhs):
    cdef double[::1] d = np.array(gamma, dtype=np.float64)
    cdef double[::1] b = np.array(rhs, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    if b.shape[0] != n:
        raise ValueError("rhs length does not match matrix dimension")
    x_arr = np.empty(n)
    cdef double[::1] du = np.empty(n)
    cdef double[::1] du2 = np.empty(n)
    cdef int bad = _solve(d, b, du, du2, x_arr)
    if bad:
        raise ZeroDivisionError(f"singular pivot at row {bad}")
    return x_arr


def leading_minors(gamma):
    cdef double[::1] g = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double prev2 = 0.0, prev = 1.0, cur
    cdef Py_ssize_t k
    for k in range(n):
        cur = g[k] * prev - prev2
        if not fabs(cur) <= OVERFLOW_GUARD:
            raise OverflowError(f"principal minor {k + 1} exceeded 1e300")
        out[k] = cur
        prev2 = prev
        prev = cur
    return out_arr


cdef inline double _pw(double x, double e) noexcept nogil:
    # exact multiplications for the common small integer exponents
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    return pow(x, e)


cdef void _residual_gamma(double[::1] u, double h, double p, double q, double alpha,
                          double[::1] f, double[::1] gam) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t k
    cdef double h2 = h * h
    cdef double un = u[n - 1]
    cdef double w  # u_k**(p - 1)
    w = _pw(u[0], p - 1.0)
    f[0] = -(u[1] - u[0]) + 0.5 * h2 * w * u[0]
    gam[0] = 1.0 + 0.5 * h2 * p * w
    for k in range(1, n - 1):
        w = _pw(u[k], p - 1.0)
        f[k] = -(u[k + 1] - 2.0 * u[k] + u[k - 1]) + h2 * w * u[k]
        gam[k] = 2.0 + h2 * p * w
    w = _pw(un, p - 1.0)
    f[n - 1] = -(u[n - 2] - un) + 0.5 * h2 * w * un - h * alpha * pow(un, q)
    gam[n - 1] = 1.0 + 0.5 * h2 * p * w - h * alpha * q * pow(un, q - 1.0)


def residual_power(u, double h, double p, double q, double alpha):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    f_arr = np.empty(n)
    cdef double[::1] gam = np.empty(n)
    _residual_gamma(uv, h, p, q, alpha, f_arr, gam)
    return f_arr


def gamma_power(u, double h, double p, double q, double alpha):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    gam_arr = np.empty(n)
    cdef double[::1] f = np.empty(n)
    _residual_gamma(uv, h, p, q, alpha, f, gam_arr)
    return gam_arr


cdef int _newton_step(double[::1] u, double h, double p, double q, double alpha,
                      double[::1] f, double[::1] gam, double[::1] du, double[::1] du2,
                      double[::1] s, double* res, double* step) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t k
    cdef double r = 0.0, m = 0.0
    _residual_gamma(u, h, p, q, alpha, f, gam)
    for k in range(n):
        if fabs(f[k]) > r or not isfinite(f[k]):
            r = fabs(f[k])
    # _solve overwrites f with the eliminated right-hand side
    cdef int bad = _solve(gam, f, du, du2, s)
    if bad:
        return bad
    for k in range(n):
        u[k] -= s[k]
        if fabs(s[k]) > m or not isfinite(s[k]):
            m = fabs(s[k])
    res[0] = r
    step[0] = m
    return 0


def newton_step_power(double[::1] u, double h, double p, double q, double alpha):
    cdef Py_ssize_t n = u.shape[0]
    cdef double[::1] f = np.empty(n)
    cdef double[::1] gam = np.empty(n)
    cdef double[::1] du = np.empty(n)
    cdef double[::1] du2 = np.empty(n)
    cdef double[::1] s = np.empty(n)
    cdef double res = 0.0, step = 0.0
    cdef int bad = _newton_step(u, h, p, q, alpha, f, gam, du, du2, s, &res, &step)
    if bad:
        raise ZeroDivisionError(f"singular pivot at row {bad}")
    return res, step


def sweep_power(double[::1] u, double h, double p, double q,
                double beta0, double dbeta, Py_ssize_t count):
    cdef Py_ssize_t n = u.shape[0]
    cdef double[::1] f = np.empty(n)
    cdef double[::1] gam = np.empty(n)
    cdef double[::1] du = np.empty(n)
    cdef double[::1] du2 = np.empty(n)
    cdef double[::1] s = np.empty(n)
    cdef double res = 0.0, step = 0.0, umin
    cdef Py_ssize_t k, i
    cdef int bad = 0
    cdef Py_ssize_t failed = -1
    with nogil:
        for k in range(count):
            bad = _newton_step(u, h, p, q, 1.0 / (beta0 + k * dbeta),
                               f, gam, du, du2, s, &res, &step)
            if bad:
                failed = k
                break
            umin = u[0]
            for i in range(1, n):
                if u[i] < umin:
                    umin = u[i]
            if not (umin > 0.0 and isfinite(step)):
                failed = k
                break
    if failed >= 0:
        if bad:
            raise ZeroDivisionError(f"singular pivot at row {bad} (sweep node {failed})")
        raise ArithmeticError(f"iterate left the positive orthant at sweep node {failed}")
    return res, step
