"""Shooting parametrization of the stationary system.

Given u1 > 0 the first n - 1 stationary equations determine U_2, ..., U_n
recursively, and the last equation then fixes the boundary coefficient A(u1).
Positive stationary solutions at parameter alpha are exactly the roots of
A(u1) = alpha, and A is strictly decreasing, so a safeguarded scalar solve
recovers the whole solution.  This module doubles as the independent oracle
for the Newton continuation in :mod:`neumann_homotopy.homotopy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._core import kernels
from .errors import BracketError, ConvergenceError, DomainError, TrajectoryOverflowError
from .nonlinearity import NonlinearityPair, PowerLawPair

OVERFLOW_GUARD = 1e300
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh of ``n >= 2`` nodes on [0, 1]; ``h = 1/(n-1)``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"mesh needs an integer n >= 2, got {self.n!r}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)


@dataclass(frozen=True)
class ShootingTrajectory:
    """U_1..U_n, U_1'..U_n' and A, A' at ``u1``.

    ``du`` and ``du_prime`` hold the carried differences U_{k+1} - U_k and
    U_{k+1}' - U_k' exactly as the recursion produced them; they are more
    accurate than ``np.diff(u)`` when the steps are small against U.
    """

    u1: float
    u: np.ndarray
    u_prime: np.ndarray
    a: float
    a_prime: float
    du: Optional[np.ndarray] = None
    du_prime: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SolutionBounds:
    """a priori box for the solution at ``alpha``; independent of the mesh."""

    alpha: float
    u1_lower: float
    un_upper: float
    growth: float

    def contains(self, u, rtol=0.0) -> bool:
        u = np.asarray(u)
        return bool(
            u[0] > self.u1_lower * (1 - rtol)
            and u[-1] < self.un_upper * (1 + rtol)
            and u[-1] < math.exp(self.growth) * u[0] * (1 + rtol)
        )


def _shoot_generic(pair, h, n, u1):
    h2 = h * h
    u = np.empty(n)
    up = np.empty(n)
    dus = np.empty(n - 1)
    dups = np.empty(n - 1)
    x, xp = float(u1), 1.0
    u[0], up[0] = x, xp
    d = 0.5 * h2 * float(pair.g1(x, 0))
    dp = 0.5 * h2 * float(pair.g1(x, 1))
    with np.errstate(over="raise", invalid="raise"):
        try:
            for k in range(1, n):
                dus[k - 1], dups[k - 1] = d, dp
                x += d
                xp += dp
                if not (x <= OVERFLOW_GUARD and xp <= OVERFLOW_GUARD):
                    raise OverflowError(f"shooting trajectory exceeded 1e300 at node {k + 1}")
                u[k], up[k] = x, xp
                if k < n - 1:
                    d += h2 * float(pair.g1(x, 0))
                    dp += h2 * float(pair.g1(x, 1)) * xp
            g2n = float(pair.g2(x, 0))
            a = (d / h + 0.5 * h * float(pair.g1(x, 0))) / g2n
            dnum = dp / h + 0.5 * h * float(pair.g1(x, 1)) * xp
            a_prime = (dnum - a * float(pair.g2(x, 1)) * xp) / g2n
        except FloatingPointError as exc:
            raise OverflowError(str(exc)) from None
    return u, up, dus, dups, a, a_prime


def shoot(pair: NonlinearityPair, mesh: Mesh, u1: float) -> ShootingTrajectory:
    """Trajectory U_1..U_n, its u1-derivative and A(u1), A'(u1).

    Raises ``TrajectoryOverflowError`` once any U_k passes 1e300, which
    happens when u1 is far above the admissible range.
    """
    u1 = float(u1)
    if not u1 > 0:
        raise DomainError(f"u1 must be positive, got {u1!r}")
    try:
        if isinstance(pair, PowerLawPair):
            out = kernels.shoot_power(u1, mesh.h, mesh.n, pair.p, pair.q)
        else:
            out = _shoot_generic(pair, mesh.h, mesh.n, u1)
    except OverflowError as exc:
        raise TrajectoryOverflowError(f"u1={u1!r}: {exc}") from None
    u, up, du, dup, a, ap = out
    return ShootingTrajectory(u1, u, up, float(a), float(ap), du, dup)


def minimal_equation(pair: NonlinearityPair, mesh: Mesh, alpha: float, u1: float) -> float:
    """P(alpha, u1) = (U_{n-1} - U_n)/h - (h/2) g1(U_n) + alpha g2(U_n)."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    tr = shoot(pair, mesh, u1)
    h = mesh.h
    un = tr.u[-1]
    return float((tr.u[-2] - un) / h - 0.5 * h * pair.g1(un, 0) + alpha * pair.g2(un, 0))


def _log_g_end(pair, mesh, u1):
    """log g(U_n(u1)); overflow maps to a huge negative sentinel (g -> 0)."""
    try:
        un = shoot(pair, mesh, u1).u[-1]
    except TrajectoryOverflowError:
        return -1e300
    with np.errstate(over="ignore"):
        g2 = float(pair.g2(un, 0))
    if not math.isfinite(g2):
        return -1e300
    return math.log(pair.g1(un, 0)) - math.log(g2)


def _solve_g_end(pair, mesh, target):
    """u1 with g(U_n(u1)) = target; g o U_n is strictly decreasing."""
    log_t = math.log(target)
    hi = pair.g_inverse(target)  # U_n >= u1, so g(U_n(hi)) <= target
    f_hi = _log_g_end(pair, mesh, hi) - log_t
    if f_hi == 0.0:
        return hi
    lo = hi
    for _ in range(MAX_DOUBLINGS):
        lo *= 0.5
        f_lo = _log_g_end(pair, mesh, lo) - log_t
        if f_lo > 0:
            break
        hi, f_hi = lo, f_lo
    else:
        raise BracketError(f"no u1 with g(U_n(u1)) = {target!r} after {MAX_DOUBLINGS} halvings")
    t = brentq(
        lambda s: _log_g_end(pair, mesh, math.exp(s)) - log_t,
        math.log(lo),
        math.log(hi),
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
    )
    return math.exp(t)


def bracket_u1(pair: NonlinearityPair, mesh: Mesh, alpha: float) -> tuple[float, float]:
    """(u1*, u1**) with g(U_n(u1*)) = alpha and g(U_n(u1**)) = 2 alpha / h.

    P(alpha, u1*) >= 0 >= P(alpha, u1**), so the positive root of P lies in
    [u1**, u1*].
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    return _solve_g_end(pair, mesh, alpha), _solve_g_end(pair, mesh, 2.0 * alpha / mesh.h)


def solve_u1_oracle(pair: NonlinearityPair, mesh: Mesh, alpha: float, tol: float = 1e-13,
                    max_iter: int = 200) -> float:
    """The unique positive root u1 of A(u1) = alpha.

    Newton on A(u1) - alpha, safeguarded by the bracket [u1**, u1*]; a
    Newton iterate that leaves the bracket is replaced by its geometric
    midpoint.  Stops when |A(u1) - alpha| <= tol * alpha, or when the bracket
    has shrunk to a few ulps (the root is then pinned to machine precision).
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    hi, lo = bracket_u1(pair, mesh, alpha)
    x = math.sqrt(lo * hi)
    for _ in range(max_iter):
        try:
            tr = shoot(pair, mesh, x)
        except TrajectoryOverflowError:
            hi = x
            x = math.sqrt(lo * hi)
            continue
        f = tr.a - alpha
        if abs(f) <= tol * alpha:
            return x
        if f > 0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            return x
        x_new = x - f / tr.a_prime if tr.a_prime < 0 else math.nan
        if not lo < x_new < hi:
            x_new = math.sqrt(lo * hi)
        x = x_new
    raise ConvergenceError(
        f"oracle did not converge for alpha={alpha!r}, n={mesh.n} in {max_iter} iterations"
    )


def oracle_solution(pair: NonlinearityPair, mesh: Mesh, alpha: float, tol: float = 1e-13) -> ShootingTrajectory:
    """Trajectory reconstructed from the oracle root u1(alpha)."""
    return shoot(pair, mesh, solve_u1_oracle(pair, mesh, alpha, tol))


def solution_bounds(pair: NonlinearityPair, alpha: float) -> SolutionBounds:
    """g^{-1}(alpha C(alpha)) < u1 <= u_n < min(g^{-1}(alpha), e^M u1)."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    return SolutionBounds(
        alpha=float(alpha),
        u1_lower=pair.g_inverse(alpha * pair.c_alpha(alpha)),
        un_upper=pair.g_inverse(alpha),
        growth=pair.growth_constant(alpha),
    )


def flux_balance_residual(pair: NonlinearityPair, mesh: Mesh, alpha: float, u) -> float:
    """Relative defect of alpha g2(u_n) = h (g1(u_1)/2 + ... + g1(u_n)/2)."""
    u = np.asarray(u, dtype=float)
    g1 = pair.g1(u, 0)
    total = mesh.h * (g1.sum() - 0.5 * (g1[0] + g1[-1]))
    lhs = alpha * float(pair.g2(u[-1], 0))
    return abs(lhs - total) / abs(lhs)


@dataclass
class MonotonicityReport:
    """Pass flags per property, indexed by node k = 2..n (position k - 2)."""

    checks: dict[str, np.ndarray]

    @property
    def ok(self) -> bool:
        return all(bool(np.all(v)) for v in self.checks.values())

    def failed(self) -> list[str]:
        return [name for name, v in self.checks.items() if not np.all(v)]


def ratio_monotonicity_probe(pair: NonlinearityPair, mesh: Mesh, u1_grid) -> MonotonicityReport:
    """Empirical check of the growth-ratio monotonicities along the u1 axis.

    For consecutive grid points and each node k >= 2:

    * (U_k - U_{k-1}) / g1(U_k) decreases,
    * (U_k - U_1) / g1(U_k) decreases,
    * (U_k - U_{k-1}) / (U_k - U_1) does not decrease,
    * g1(U_k) / g1(U_1) increases,
    * every divided difference (g1(U_k) - g1(U_i)) / (U_k - U_i), i < k, increases.
    """
    grid = np.asarray(u1_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("u1_grid must be strictly increasing and positive")
    n = mesh.n
    names = ("step/g1 decreasing", "rise/g1 decreasing", "step/rise nondecreasing",
             "g1 ratio increasing", "divided differences increasing")
    checks = {name: np.ones(n - 1, dtype=bool) for name in names}
    prev = None
    for u1 in grid:
        u = shoot(pair, mesh, u1).u
        g1 = pair.g1(u, 0)
        step = u[1:] - u[:-1]
        rise = u[1:] - u[0]
        du = u[:, None] - u[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            dd = (g1[:, None] - g1[None, :]) / du
        cur = (step / g1[1:], rise / g1[1:], step / rise, g1[1:] / g1[0], dd)
        if prev is not None:
            checks[names[0]] &= cur[0] < prev[0]
            checks[names[1]] &= cur[1] < prev[1]
            checks[names[2]] &= cur[2] >= prev[2] * (1 - 1e-12)
            checks[names[3]] &= cur[3] > prev[3]
            lower = np.tril(np.ones((n, n), dtype=bool), -1)
            grew = np.where(lower, cur[4] > prev[4], True)
            checks[names[4]] &= grew[1:].all(axis=1)
        prev = cur
    return MonotonicityReport(checks)
