"""The tridiagonal Jacobian of the stationary system.

With the scaled residual

    F_1 = -(u_2 - u_1) + (h^2/2) g1(u_1)
    F_k = -(u_{k+1} - 2 u_k + u_{k-1}) + h^2 g1(u_k)
    F_n = -(u_{n-1} - u_n) + (h^2/2) g1(u_n) - h alpha g2(u_n)

the Jacobian is J = tridiag(-1, Gamma, -1).  Its leading minors are the
u1-derivatives of the shooting trajectory at a solution, which gives an
explicit O(n) factorisation of the inverse and a closed form for the
condition number of the solution map alpha -> u(alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import kernels
from .errors import DomainError, SingularMatrixError
from .nonlinearity import NonlinearityPair, PowerLawPair
from .shooting import Mesh, solve_u1_oracle, shoot

FORMS = ("alpha", "beta")


def _alpha_of(param, form):
    if form not in FORMS:
        raise ValueError(f"form must be 'alpha' or 'beta', got {form!r}")
    param = float(param)
    if not param > 0:
        raise DomainError(f"{form} must be positive, got {param!r}")
    return param if form == "alpha" else 1.0 / param


def _positive_state(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise DomainError("state must be a 1-d array with at least two nodes")
    if not np.all(u > 0):
        raise DomainError("state must be strictly positive")
    return u


@dataclass(frozen=True)
class TridiagonalMatrix:
    """tridiag(-1, gamma, -1); the off-diagonals are implicit."""

    gamma: np.ndarray

    @property
    def n(self) -> int:
        return len(self.gamma)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.gamma * x
        y[:-1] -= x[1:]
        y[1:] -= x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        n = self.n
        return np.diag(self.gamma) - np.eye(n, k=1) - np.eye(n, k=-1)

    def norm_inf(self) -> float:
        off = np.full(self.n, 2.0)
        off[[0, -1]] = 1.0
        return float(np.max(np.abs(self.gamma) + off))


def residual(pair: NonlinearityPair, mesh: Mesh, param: float, u, form: str = "alpha") -> np.ndarray:
    """Scaled stationary residual F(alpha, u)."""
    alpha = _alpha_of(param, form)
    u = np.asarray(u, dtype=float)
    if isinstance(pair, PowerLawPair):
        return kernels.residual_power(u, mesh.h, pair.p, pair.q, alpha)
    h = mesh.h
    g1 = pair.g1(u, 0)
    f = np.empty_like(u)
    f[0] = -(u[1] - u[0]) + 0.5 * h * h * g1[0]
    f[1:-1] = -(u[2:] - 2.0 * u[1:-1] + u[:-2]) + h * h * g1[1:-1]
    f[-1] = -(u[-2] - u[-1]) + 0.5 * h * h * g1[-1] - h * alpha * pair.g2(u[-1], 0)
    return f


def _gamma(pair, h, alpha, u):
    if isinstance(pair, PowerLawPair):
        return kernels.gamma_power(u, h, pair.p, pair.q, alpha)
    g1p = pair.g1(u, 1)
    gam = 2.0 + h * h * g1p
    gam[0] = 1.0 + 0.5 * h * h * g1p[0]
    gam[-1] = 1.0 + 0.5 * h * h * g1p[-1] - h * alpha * pair.g2(u[-1], 1)
    return gam


def assemble(pair: NonlinearityPair, mesh: Mesh, param: float, u, form: str = "alpha") -> TridiagonalMatrix:
    """Jacobian of :func:`residual` at ``u``.

    ``form='beta'`` reads ``param`` as beta = 1/alpha.
    """
    alpha = _alpha_of(param, form)
    u = _positive_state(u)
    if u.size != mesh.n:
        raise DomainError(f"state has {u.size} nodes, mesh has {mesh.n}")
    return TridiagonalMatrix(np.asarray(_gamma(pair, mesh.h, alpha, u), dtype=float))


def solve_tridiagonal(J: TridiagonalMatrix, rhs) -> np.ndarray:
    """x with J x = rhs, by LU with adjacent-row partial pivoting in O(n)."""
    try:
        return kernels.tridiag_solve(J.gamma, rhs)
    except ZeroDivisionError as exc:
        raise SingularMatrixError(str(exc)) from None


def leading_minors(J: TridiagonalMatrix) -> np.ndarray:
    """D_1..D_n from D_k = Gamma_k D_{k-1} - D_{k-2}, D_0 = 1, D_{-1} = 0.

    Raises ``OverflowError`` if a minor exceeds 1e300 in magnitude; scale the
    problem (or work with ratios D_k / D_{k-1}) in that case.
    """
    return kernels.leading_minors(J.gamma)


def determinant(J: TridiagonalMatrix) -> float:
    return float(leading_minors(J)[-1])


class FactorizedInverse:
    """J^{-1} from the shooting derivatives at a solution.

    With u' = (U_1', ..., U_n') and d = det J,

        (J^{-1})_ij = sum_{k=max(i,j)}^{n-1} U_i' U_j' / (U_k' U_{k+1}')
                      + U_i' U_j' / (U_n' d).

    ``apply`` evaluates J^{-1} x as an upper-times-lower product in O(n).
    """

    def __init__(self, u_prime, det_j: float):
        up = np.asarray(u_prime, dtype=float)
        if np.any(up == 0.0):
            raise ZeroDivisionError("u_prime has a zero entry")
        if det_j == 0.0:
            raise ZeroDivisionError("det J is zero")
        self.u_prime = up
        self.det_j = float(det_j)
        # weights[k] = 1/(U_k' U_{k+1}') for k < n, 1/(U_n' d) for k = n
        w = np.empty_like(up)
        w[:-1] = 1.0 / (up[:-1] * up[1:])
        w[-1] = 1.0 / (up[-1] * self.det_j)
        self._tail = np.cumsum(w[::-1])[::-1]  # tail[m] = sum_{k>=m} w[k]

    @property
    def n(self) -> int:
        return len(self.u_prime)

    def entry(self, i: int, j: int) -> float:
        """(J^{-1})_ij with 1-based indices."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"entry ({i}, {j}) outside a {self.n}x{self.n} matrix")
        up = self.u_prime
        return float(up[i - 1] * up[j - 1] * self._tail[max(i, j) - 1])

    def apply(self, x) -> np.ndarray:
        """J^{-1} x in O(n)."""
        x = np.asarray(x, dtype=float)
        up = self.u_prime
        # lower factor: y_k = (sum_{j<=k} U_j' x_j) / U_{k+1}', last row over d
        y = np.cumsum(up * x)
        y[:-1] /= up[1:]
        y[-1] /= self.det_j
        # upper factor: z_i = U_i' sum_{k>=i} y_k / U_k'
        return up * np.cumsum((y / up)[::-1])[::-1]

    def dense(self) -> np.ndarray:
        up = self.u_prime
        idx = np.maximum.outer(np.arange(self.n), np.arange(self.n))
        return np.outer(up, up) * self._tail[idx]


def inverse_factorized(u_prime, det_j: float) -> FactorizedInverse:
    return FactorizedInverse(u_prime, det_j)


@dataclass(frozen=True)
class ConditionSample:
    """Sensitivity of the solution map at ``alpha``.

    ``phi_prime_inf_norm`` is |du/dalpha|_inf = U_n'/|A'|; ``phi_prime_beta``
    is |du/dbeta|_inf = alpha^2 |du/dalpha|_inf for beta = 1/alpha.
    """

    alpha: float
    phi_prime_inf_norm: float
    u1: float

    @property
    def beta(self) -> float:
        return 1.0 / self.alpha

    @property
    def phi_prime_beta(self) -> float:
        return self.alpha**2 * self.phi_prime_inf_norm


def condition_phi_prime(pair: NonlinearityPair, mesh: Mesh, alpha: float, tol: float = 1e-13) -> ConditionSample:
    """|phi'(alpha)|_inf = U_n'(u1(alpha)) / |A'(u1(alpha))|.

    Since u(alpha) = U(u1(alpha)) with A(u1(alpha)) = alpha, the derivative is
    U'(u1) / A'(u1), and U' is increasing so the max-norm sits at node n.
    """
    u1 = solve_u1_oracle(pair, mesh, alpha, tol)
    tr = shoot(pair, mesh, u1)
    return ConditionSample(float(alpha), float(tr.u_prime[-1] / abs(tr.a_prime)), u1)


def chebyshev_grid(lo: float, hi: float, count: int = 33) -> np.ndarray:
    """Chebyshev-Lobatto points on [min(lo, hi), max(lo, hi)], ascending."""
    a, b = min(lo, hi), max(lo, hi)
    if count < 2:
        return np.array([0.5 * (a + b)])
    t = np.cos(np.pi * np.arange(count)[::-1] / (count - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def condition_sweep(pair: NonlinearityPair, mesh: Mesh, alpha_lo: float, alpha_hi: float,
                    count: int = 33) -> list[ConditionSample]:
    """``condition_phi_prime`` on a Chebyshev grid; the max estimates kappa."""
    return [condition_phi_prime(pair, mesh, a) for a in chebyshev_grid(alpha_lo, alpha_hi, count)]


@dataclass(frozen=True)
class CramerReport:
    """Relative residuals of the Cramer identities at a state.

    ``det_identity``: h g2(U_n) A'(u1) = det J.
    ``minor_identity``: max_k |det J U_k' - h g2(U_n) A' D_{k-1}| (relative).
    """

    det_identity: float
    minor_identity: float
    tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return self.det_identity <= self.tol and self.minor_identity <= self.tol


def cramer_identity_check(pair: NonlinearityPair, mesh: Mesh, alpha: float, u=None,
                          tol: float = 1e-9) -> CramerReport:
    """Verify the Cramer identities at the solution for ``alpha``.

    Pass ``u`` to test a different state; the shooting data are then taken
    from u1 = u[0], and the identities fail unless ``u`` solves the system.
    """
    if u is None:
        u = shoot(pair, mesh, solve_u1_oracle(pair, mesh, alpha)).u
    u = _positive_state(u)
    tr = shoot(pair, mesh, u[0])
    J = assemble(pair, mesh, alpha, u)
    minors = leading_minors(J)
    det_j = minors[-1]
    lhs = mesh.h * float(pair.g2(u[-1], 0)) * tr.a_prime
    det_res = abs(lhs - det_j) / abs(det_j)
    d_prev = np.concatenate(([1.0], minors[:-1]))  # D_{k-1}, k = 1..n
    left = det_j * tr.u_prime
    right = lhs * d_prev
    minor_res = float(np.max(np.abs(left - right) / np.abs(left)))
    return CramerReport(float(det_res), minor_res, tol)
