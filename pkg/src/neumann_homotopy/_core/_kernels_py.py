"""Pure-Python reference kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and semantics; ``neumann_homotopy._core`` picks one at import.
The tridiagonal matrices handled here all have constant off-diagonals equal
to -1, so only the main diagonal ``gamma`` is passed around.
"""

import math

import numpy as np

OVERFLOW_GUARD = 1e300
PIVOT_FLOOR = 1e-300


def shoot_power(u1, h, n, p, q):
    """Run the shooting recursion for g1 = x**p, g2 = x**q.

    Returns ``(u, u_prime, du, du_prime, a, a_prime)`` with ``du[k-1]`` the
    carried difference U_{k+1} - U_k.  The recursion is carried in difference
    form, which is algebraically identical to the three-term form but loses
    less to cancellation.
    """
    h2 = h * h
    u = np.empty(n)
    up = np.empty(n)
    dus = np.empty(n - 1)
    dups = np.empty(n - 1)
    x = float(u1)
    xp = 1.0
    u[0] = x
    up[0] = xp
    d = 0.5 * h2 * x**p
    dp = 0.5 * h2 * p * x ** (p - 1.0)
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
            d += h2 * x**p
            dp += h2 * p * x ** (p - 1.0) * xp
    g2n = x**q
    num = d / h + 0.5 * h * x**p
    a = num / g2n
    dnum = dp / h + 0.5 * h * p * x ** (p - 1.0) * xp
    a_prime = (dnum - a * q * x ** (q - 1.0) * xp) / g2n
    return u, up, dus, dups, a, a_prime


def tridiag_solve(gamma, rhs):
    """Solve J x = rhs, J = tridiag(-1, gamma, -1), by LU with partial pivoting.

    Row interchanges only ever involve adjacent rows, so the factorisation
    keeps a second superdiagonal ``du2`` and the cost stays O(n).
    """
    n = len(gamma)
    d = [float(g) for g in gamma]
    b = [float(r) for r in rhs]
    if len(b) != n:
        raise ValueError("rhs length does not match matrix dimension")
    du = [-1.0] * n
    du2 = [0.0] * n
    dl = [-1.0] * n
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if abs(d[i]) < PIVOT_FLOOR:
                raise ZeroDivisionError(f"singular pivot at row {i + 1}")
            fact = dl[i] / d[i]
            d[i + 1] -= fact * du[i]
            b[i + 1] -= fact * b[i]
        else:
            fact = d[i] / dl[i]
            d[i] = dl[i]
            tmp = d[i + 1]
            d[i + 1] = du[i] - fact * tmp
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du2[i]
            du[i] = tmp
            tb = b[i]
            b[i] = b[i + 1]
            b[i + 1] = tb - fact * b[i + 1]
    if abs(d[n - 1]) < PIVOT_FLOOR:
        raise ZeroDivisionError(f"singular pivot at row {n}")
    x = np.empty(n)
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


def leading_minors(gamma):
    """Leading principal minors D_1..D_n of tridiag(-1, gamma, -1)."""
    gamma = [float(g) for g in gamma]  # python floats overflow to inf silently
    n = len(gamma)
    out = np.empty(n)
    prev2 = 0.0
    prev = 1.0
    for k in range(n):
        cur = gamma[k] * prev - prev2
        if not abs(cur) <= OVERFLOW_GUARD:
            raise OverflowError(f"principal minor {k + 1} exceeded 1e300")
        out[k] = cur
        prev2 = prev
        prev = cur
    return out


def residual_power(u, h, p, q, alpha):
    """Scaled stationary residual F(alpha, u) for the power-law pair."""
    u = np.asarray(u, dtype=float)
    h2 = h * h
    f = np.empty_like(u)
    g1 = u**p
    f[0] = -(u[1] - u[0]) + 0.5 * h2 * g1[0]
    f[1:-1] = -(u[2:] - 2.0 * u[1:-1] + u[:-2]) + h2 * g1[1:-1]
    f[-1] = -(u[-2] - u[-1]) + 0.5 * h2 * g1[-1] - h * alpha * u[-1] ** q
    return f


def gamma_power(u, h, p, q, alpha):
    """Diagonal of the Jacobian of ``residual_power`` with respect to u."""
    u = np.asarray(u, dtype=float)
    h2 = h * h
    gam = 2.0 + h2 * p * u ** (p - 1.0)
    gam[0] = 1.0 + 0.5 * h2 * p * u[0] ** (p - 1.0)
    gam[-1] = 1.0 + 0.5 * h2 * p * u[-1] ** (p - 1.0) - h * alpha * q * u[-1] ** (q - 1.0)
    return gam


def newton_step_power(u, h, p, q, alpha):
    """One in-place Newton step; returns (|F(u_old)|_inf, |step|_inf)."""
    f = residual_power(u, h, p, q, alpha)
    step = tridiag_solve(gamma_power(u, h, p, q, alpha), f)
    u -= step
    return float(np.max(np.abs(f))), float(np.max(np.abs(step)))


def sweep_power(u, h, p, q, beta0, dbeta, count):
    """``count`` single Newton steps at beta0, beta0 + dbeta, ... (in place).

    Returns the residual and step norms of the last step.  Raises
    ``ArithmeticError`` as soon as an iterate leaves the positive orthant.
    """
    res = step = 0.0
    for k in range(count):
        beta = beta0 + k * dbeta
        res, step = newton_step_power(u, h, p, q, 1.0 / beta)
        if not (np.min(u) > 0.0 and math.isfinite(step)):
            raise ArithmeticError(f"iterate left the positive orthant at sweep node {k}")
    return res, step
