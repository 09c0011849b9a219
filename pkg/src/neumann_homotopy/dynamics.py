"""Time integration of the semi-discrete parabolic problem.

    u_1'  = (2/h^2)(u_2 - u_1) - g1(u_1)
    u_k'  = (1/h^2)(u_{k+1} - 2 u_k + u_{k-1}) - g1(u_k)
    u_n'  = (2/h^2)(u_{n-1} - u_n) - g1(u_n) + (2 alpha / h) g2(u_n)

The right-hand side equals -W F(alpha, u) with W = diag(2, 1, ..., 1, 2)/h^2
and F the scaled stationary residual, so an implicit Euler step solves

    W^{-1}(v - u)/dt + F(alpha, v) = 0,

whose Jacobian is tridiag(-1, Gamma + h^2 w / dt, -1), w = (1/2, 1, ..., 1, 1/2).

The positive stationary state is a saddle of this flow: its Jacobian has
exactly one unstable direction (det J < 0 while the leading minors are
positive).  Data below it decay to zero, data above it and close enough
return to it.  Implicit Euler with dt * lambda_+ > 2 maps the unstable
direction to a contraction, so the integrator still settles on the
stationary state from the admissible region above it; the default step is
chosen that way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ._core import kernels
from .errors import BlowUpError, ConvergenceError, DomainError, SingularMatrixError
from .jacobian import _gamma, residual
from .nonlinearity import NonlinearityPair
from .shooting import Mesh, solution_bounds

Initial = Union[float, Callable[[np.ndarray], np.ndarray], np.ndarray]

MAX_DT_HALVINGS = 80


@dataclass
class DynamicsConfig:
    """Settings for :func:`integrate_to_steady`.

    ``initial`` is a constant, an array of nodal values, or a function of the
    node abscissae.  ``dt=None`` picks 40 / M with M = g1'(g^{-1}(alpha)).
    """

    alpha: float
    initial: Initial
    dt: Optional[float] = None
    tol: float = 1e-10
    t_max: float = 1e6
    max_steps: int = 100_000
    newton_tol: float = 1e-14
    max_newton_iter: int = 30
    blowup_factor: float = 1e6

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if self.dt is not None and not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol!r}")


@dataclass
class DynamicsResult:
    u: np.ndarray
    t: float
    converged: bool
    steps: int
    rhs_norm: float
    newton_iterations: int
    reason: str = "steady"
    history: list[tuple[float, float]] = field(default_factory=list)


def _weights(n):
    w = np.ones(n)
    w[[0, -1]] = 0.5
    return w


def rhs(pair: NonlinearityPair, mesh: Mesh, alpha: float, u) -> np.ndarray:
    """Right-hand side of the semi-discrete system."""
    u = np.asarray(u, dtype=float)
    if not np.all(u > 0):
        raise DomainError("state must be strictly positive")
    h = mesh.h
    return -residual(pair, mesh, alpha, u) / (h * h * _weights(u.size))


def _initial_state(cfg, mesh):
    init = cfg.initial
    if callable(init):
        u0 = np.asarray(init(mesh.x), dtype=float)
    else:
        u0 = np.asarray(init, dtype=float)
        if u0.ndim == 0:
            u0 = np.full(mesh.n, float(u0))
    if u0.shape != (mesh.n,) or not np.all(u0 > 0):
        raise DomainError("initial condition must be positive at every node")
    return u0


def default_dt(pair: NonlinearityPair, alpha: float) -> float:
    return 40.0 / pair.growth_constant(alpha)


def _implicit_step(pair, mesh, alpha, u, dt, cfg):
    """Damped Newton for one implicit Euler step; returns (v, iterations).

    Full steps are halved while they leave the positive orthant or increase
    the step residual, which keeps the iterate on the positive branch.
    """
    h2 = mesh.h**2
    shift = h2 * _weights(mesh.n) / dt

    def g_of(v):
        return residual(pair, mesh, alpha, v) + shift * (v - u)

    v = u.copy()
    g = g_of(v)
    gn = float(np.max(np.abs(g)))
    for it in range(1, cfg.max_newton_iter + 1):
        try:
            s = kernels.tridiag_solve(_gamma(pair, mesh.h, alpha, v) + shift, g)
        except ZeroDivisionError as exc:
            raise SingularMatrixError(str(exc)) from None
        lam = 1.0
        for _ in range(40):
            trial = v - lam * s
            if np.all(trial > 0):
                g_trial = g_of(trial)
                gn_trial = float(np.max(np.abs(g_trial)))
                if gn_trial <= gn or lam * np.max(np.abs(s)) <= cfg.newton_tol * (1.0 + np.max(trial)):
                    break
            lam *= 0.5
        else:
            raise ConvergenceError("implicit Euler Newton could not keep the iterate positive")
        v, g, gn = trial, g_trial, gn_trial
        if lam * np.max(np.abs(s)) <= cfg.newton_tol * (1.0 + np.max(np.abs(v))):
            return v, it
    raise ConvergenceError(f"implicit Euler Newton did not converge in {cfg.max_newton_iter} iterations")


def integrate_to_steady(pair: NonlinearityPair, mesh: Mesh, config: DynamicsConfig) -> DynamicsResult:
    """Implicit Euler until |du/dt|_inf <= tol or the horizon is reached.

    ``converged`` is True only for the positive stationary state.  The run
    stops early with ``reason='decayed'`` once every node has fallen below
    the a priori lower bound g^{-1}(alpha C(alpha)) of that state: the flow is
    then heading to zero.  ``reason='horizon'`` means ``t_max`` or
    ``max_steps`` ran out.  Raises ``BlowUpError`` if |u|_inf exceeds
    ``blowup_factor * g^{-1}(alpha)``.

    A step whose implicit equation has no positive solution (as happens
    close to a blow-up) is retried with dt halved, up to ``MAX_DT_HALVINGS``
    times; the step then grows back towards the configured dt.
    """
    alpha = config.alpha
    dt_full = config.dt or default_dt(pair, alpha)
    dt = dt_full
    bounds = solution_bounds(pair, alpha)
    guard = config.blowup_factor * bounds.un_upper
    u = _initial_state(config, mesh)
    t = 0.0
    newton = 0
    r = float(np.max(np.abs(rhs(pair, mesh, alpha, u))))
    history = [(t, r)]
    step = 0
    while True:
        if np.max(u) < bounds.u1_lower:
            return DynamicsResult(u, t, False, step, r, newton, "decayed", history)
        if r <= config.tol:
            return DynamicsResult(u, t, True, step, r, newton, "steady", history)
        if step >= config.max_steps or t >= config.t_max:
            return DynamicsResult(u, t, False, step, r, newton, "horizon", history)
        for _ in range(MAX_DT_HALVINGS):
            try:
                u_new, its = _implicit_step(pair, mesh, alpha, u, dt, config)
                break
            except (ConvergenceError, SingularMatrixError):
                dt *= 0.5
        else:
            raise ConvergenceError(f"implicit Euler step failed down to dt={dt:.3g} at t={t:.6g}")
        u = u_new
        newton += its
        step += 1
        t += dt
        if np.max(u) > guard:
            raise BlowUpError(f"|u| exceeded {guard:.3g} at t={t:.6g}; initial data outside the basin")
        dt = min(2.0 * dt, dt_full)
        r = float(np.max(np.abs(rhs(pair, mesh, alpha, u))))
        history.append((t, r))
