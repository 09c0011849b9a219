"""Newton homotopy in beta = 1/alpha.

The positive solution path beta -> phi(beta) starts, as beta -> 0+, inside a
hypercube that shrinks faster than its own size, so its midpoint is an
arbitrarily good starting point.  Phase 1 tracks the path from a small beta_*
to the target beta*, phase 2 runs plain Newton at beta*.

Two schedules are available:

* ``adaptive`` (default): Newton to a loose tolerance at each node, with the
  beta step halved when Newton stops contracting and doubled after two easy
  nodes;
* ``theoretical``: a uniform partition with the certified node count N and
  exactly one Newton step per node, followed by exactly k0 phase-2 steps.
  The certified N is very conservative, so this mode is practical only when
  beta* is small (alpha* large).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from ._core import kernels
from .errors import (
    ConvergenceError,
    DivergenceError,
    DomainError,
    ScheduleError,
    SingularMatrixError,
    TrajectoryOverflowError,
    BracketError,
)
from .jacobian import assemble, chebyshev_grid, condition_phi_prime, residual, solve_tridiagonal
from .nonlinearity import NonlinearityPair, PowerLawPair
from .shooting import Mesh, flux_balance_residual, shoot, solution_bounds

MODES = ("adaptive", "theoretical")
EPS = float(np.finfo(float).eps)
# smallest g1' at the adaptive start; see select_beta_lower
SLOPE_FLOOR = 1e-6


@dataclass
class ContinuationConfig:
    """Parameters of a continuation run.

    ``beta_star_lo`` may be left as ``None``; it is then chosen by halving
    from beta*/2 until the starting hypercube is narrower than delta.
    ``one_step_per_node`` defaults to True in theoretical mode and False in
    adaptive mode.
    """

    beta_star_hi: float
    epsilon: float = 1e-12
    beta_star_lo: Optional[float] = None
    mode: str = "adaptive"
    max_newton_iter: int = 50
    residual_tol: Optional[float] = None
    node_tol: float = 1e-8
    one_step_per_node: Optional[bool] = None
    contraction_threshold: float = 0.5
    max_theoretical_nodes: int = 10_000_000
    max_halvings: int = 200

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.beta_star_hi > 0:
            raise DomainError(f"beta* must be positive, got {self.beta_star_hi!r}")
        if self.beta_star_lo is not None and not 0 < self.beta_star_lo < self.beta_star_hi:
            raise DomainError("need 0 < beta_* < beta*")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_newton_iter < 1:
            raise DomainError("max_newton_iter must be at least 1")
        if self.one_step_per_node is None:
            self.one_step_per_node = self.mode == "theoretical"

    @classmethod
    def from_alpha(cls, alpha_star: float, **kwargs) -> "ContinuationConfig":
        if not alpha_star > 0:
            raise DomainError(f"alpha* must be positive, got {alpha_star!r}")
        return cls(beta_star_hi=1.0 / alpha_star, **kwargs)

    @property
    def alpha_star(self) -> float:
        return 1.0 / self.beta_star_hi

    @property
    def tol(self) -> float:
        return self.epsilon if self.residual_tol is None else self.residual_tol

    def to_dict(self) -> dict:
        return asdict(self)


# -- constants of the certified schedule -------------------------------------


def _rho_star(pair, beta_hi):
    return pair.rho_sup(pair.g_inverse(1.0 / beta_hi))


def _c_beta(pair, beta):
    return pair.c_alpha(1.0 / beta)


def eta_beta(pair: NonlinearityPair, beta: float) -> float:
    """2 max{g1''(2x), g2''(2x)/beta} with x = g^{-1}(1/beta)."""
    x2 = 2.0 * pair.g_inverse(1.0 / beta)
    return 2.0 * max(float(pair.g1(x2, 2)), float(pair.g2(x2, 2)) / beta)


def eta_star(p: float, q: float) -> float:
    """max{p(p-1)2^{p-2}, q(q-1)2^{q-2}}; for power laws eta_beta = 2 eta* x^{p-2}."""
    return max(p * (p - 1) * 2 ** (p - 2), q * (q - 1) * 2 ** (q - 2))


def delta_beta(pair: NonlinearityPair, beta: float, beta_hi: float, rho=None) -> float:
    """Radius of the Newton attraction ball around phi(beta).

    min{g1'(g^{-1}(C/beta)) (1 - rho*) / (8 eta_beta (theta* + 1) C), g^{-1}(1/beta)}
    with C = C(beta) and theta* = (1 - rho*) g1'(g^{-1}(1/beta*)).
    """
    if not 0 < beta <= beta_hi * (1 + 1e-12):
        raise DomainError(f"beta={beta!r} outside (0, beta*]")
    rho = _rho_star(pair, beta_hi) if rho is None else rho
    theta = (1.0 - rho) * float(pair.g1(pair.g_inverse(1.0 / beta_hi), 1))
    c = _c_beta(pair, beta)
    num = float(pair.g1(pair.g_inverse(c / beta), 1)) * (1.0 - rho)
    return min(num / (8.0 * eta_beta(pair, beta) * (theta + 1.0) * c), pair.g_inverse(1.0 / beta))


def delta_min(pair: NonlinearityPair, beta_lo: float, beta_hi: float, samples: int = 64) -> float:
    """min of delta_beta over a log grid on [beta_lo, beta_hi]."""
    rho = _rho_star(pair, beta_hi)
    grid = np.geomspace(beta_lo, beta_hi, samples)
    return min(delta_beta(pair, float(b), beta_hi, rho) for b in grid)


def hypercube(pair: NonlinearityPair, beta_lo: float) -> tuple[float, float]:
    """[g^{-1}(C(beta)/beta), g^{-1}(1/beta)], which contains phi(beta)."""
    return pair.g_inverse(_c_beta(pair, beta_lo) / beta_lo), pair.g_inverse(1.0 / beta_lo)


def select_beta_lower(pair: NonlinearityPair, beta_hi: float, max_halvings: int = 200,
                      slope_floor: Optional[float] = None) -> tuple[float, float, bool]:
    """Halve beta_* from beta*/2 until the hypercube is narrower than delta.

    Returns ``(beta_lo, delta, certified)``.  With ``slope_floor`` set, the
    halving also stops before g1'(g^{-1}(1/beta_*)) drops below it: for such
    small states the nonlinear terms of the Jacobian sink under the rounding
    error of the diffusion part and Newton loses its quadratic rate.  The
    start is then not certified (``certified`` is False) and the caller
    relies on step control instead.
    """
    beta = 0.5 * beta_hi
    for _ in range(max_halvings):
        lo, hi = hypercube(pair, beta)
        delta = delta_min(pair, beta, beta_hi)
        if hi - lo < delta:
            return beta, delta, True
        if slope_floor is not None:
            nxt = pair.g_inverse(2.0 / beta)
            if float(pair.g1(nxt, 1)) < slope_floor:
                return beta, delta, False
        beta *= 0.5
    raise ScheduleError(f"no admissible beta_* after {max_halvings} halvings from beta*={beta_hi!r}")


def initial_point(pair: NonlinearityPair, mesh: Mesh, beta_star_lo: float, delta: Optional[float] = None,
                  beta_star_hi: Optional[float] = None) -> np.ndarray:
    """Constant vector at the midpoint of the starting hypercube.

    If ``delta`` is not given it is computed on [beta_*, beta_star_hi]
    (default: beta_* itself).  Raises ``ScheduleError`` when the hypercube is
    not narrower than delta; decrease beta_* in that case.
    """
    if not beta_star_lo > 0:
        raise DomainError(f"beta_* must be positive, got {beta_star_lo!r}")
    lo, hi = hypercube(pair, beta_star_lo)
    if delta is None:
        delta = delta_min(pair, beta_star_lo, beta_star_hi or beta_star_lo)
    if not hi - lo < delta:
        raise ScheduleError(
            f"hypercube width {hi - lo:.3e} at beta_*={beta_star_lo!r} is not below delta={delta:.3e}; "
            "decrease beta_*"
        )
    return np.full(mesh.n, 0.5 * (lo + hi))


@dataclass(frozen=True)
class TheoreticalConstants:
    rho_star: float
    theta_star: float
    eta_star: float
    eta_beta_star: float
    c_beta_star: float
    delta: float
    kappa1: float
    beta_star_lo: float
    beta_star_hi: float
    N: int
    c: float
    c_hat: float
    k0: int

    def C(self, pair: NonlinearityPair, beta: float) -> float:
        return _c_beta(pair, beta)

    def delta_beta(self, pair: NonlinearityPair, beta: float) -> float:
        return delta_beta(pair, beta, self.beta_star_hi, self.rho_star)

    def to_dict(self) -> dict:
        return asdict(self)


def phase2_iterations(c: float, epsilon: float) -> int:
    """k0 = ceil(log2 log3(3/(4 c epsilon))), and 0 once 3/(4 c eps) <= 3."""
    arg = 3.0 / (4.0 * c * epsilon)
    if arg <= 3.0:
        return 0
    return max(0, math.ceil(math.log2(math.log(arg, 3))))


def theoretical_schedule(pair: PowerLawPair, mesh: Mesh, config: ContinuationConfig,
                         kappa_samples: int = 33) -> TheoreticalConstants:
    """Certified constants (delta, N, c, k0) for a power-law pair.

    kappa1 is 1.1 times the largest |dphi/dbeta|_inf sampled on a Chebyshev
    grid of [beta_*, beta*] on ``mesh``.
    """
    if not isinstance(pair, PowerLawPair):
        raise DomainError("the theoretical schedule needs a power-law pair")
    b_hi = config.beta_star_hi
    if config.beta_star_lo is None:
        b_lo, delta, _ = select_beta_lower(pair, b_hi, config.max_halvings)
    else:
        b_lo = config.beta_star_lo
        delta = delta_min(pair, b_lo, b_hi)
    rho = pair.p / pair.q
    x_hi = pair.g_inverse(1.0 / b_hi)
    theta = (1.0 - rho) * float(pair.g1(x_hi, 1))
    c_hi = _c_beta(pair, b_hi)
    eta_hi = eta_beta(pair, b_hi)
    samples = [condition_phi_prime(pair, mesh, 1.0 / b) for b in chebyshev_grid(b_lo, b_hi, kappa_samples)]
    kappa1 = 1.1 * max(s.phi_prime_beta for s in samples)
    n_nodes = math.ceil(3.0 * b_hi * kappa1 / delta) + 1
    c = 2.0 * eta_hi * (theta + 1.0) * c_hi / (
        float(pair.g1(pair.g_inverse(c_hi / b_hi), 1)) * (1.0 - rho)
    )
    return TheoreticalConstants(
        rho_star=rho,
        theta_star=theta,
        eta_star=eta_star(pair.p, pair.q),
        eta_beta_star=eta_hi,
        c_beta_star=c_hi,
        delta=delta,
        kappa1=kappa1,
        beta_star_lo=b_lo,
        beta_star_hi=b_hi,
        N=int(n_nodes),
        c=c,
        c_hat=3.0 / (4.0 * c),
        k0=phase2_iterations(c, config.epsilon),
    )


# -- Newton ---------------------------------------------------------------------


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: int
    residuals: list[float]
    steps: list[float]
    converged: bool

    @property
    def contractions(self) -> list[float]:
        s = self.steps
        return [s[k] / s[k - 1] for k in range(1, len(s)) if s[k - 1] > 0]


def _newton_step(pair, mesh, alpha, u):
    """In-place step; returns (|F(u_old)|, |step|)."""
    if isinstance(pair, PowerLawPair):
        try:
            return kernels.newton_step_power(u, mesh.h, pair.p, pair.q, alpha)
        except ZeroDivisionError as exc:
            raise SingularMatrixError(str(exc)) from None
    f = residual(pair, mesh, alpha, u)
    s = solve_tridiagonal(assemble(pair, mesh, alpha, u), f)
    u -= s
    return float(np.max(np.abs(f))), float(np.max(np.abs(s)))


def _residual_floor(u):
    return 64.0 * EPS * float(np.max(np.abs(u)))


def newton_solve(pair: NonlinearityPair, mesh: Mesh, beta: float, u0, tol: float = 1e-12,
                 max_iter: int = 50, *, max_steps: Optional[int] = None,
                 contraction_threshold: Optional[float] = None) -> NewtonResult:
    """Newton on the beta-form system F(1/beta, u) = 0.

    Stops when |F(u)|_inf <= max(tol, 64 eps |u|_inf) and the error is
    below tol (1 + |u|_inf).  The error is bounded by the last step s_k, or,
    once the iteration contracts (theta = s_k / s_{k-1} <= 1/2), by the
    estimate s_k theta / (1 - theta), which saves the final confirming solve.

    ``max_steps`` caps the steps without raising (the result then reports
    ``converged=False``); with ``contraction_threshold`` set, any step with
    s_k / s_{k-1} above it raises ``DivergenceError``.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    u = np.array(u0, dtype=float)
    if u.shape != (mesh.n,) or not np.all(u > 0):
        raise DomainError("u0 must be a strictly positive vector with one entry per node")
    alpha = 1.0 / beta
    residuals: list[float] = []
    steps: list[float] = []
    r = float(np.max(np.abs(residual(pair, mesh, alpha, u))))
    limit = max_iter if max_steps is None else min(max_iter, max_steps)
    growth = 0
    for k in range(limit):
        r_old, s = _newton_step(pair, mesh, alpha, u)
        residuals.append(r_old)
        steps.append(s)
        if not (np.all(u > 0) and math.isfinite(s)):
            raise DivergenceError(f"Newton iterate left the positive orthant at beta={beta!r}")
        if contraction_threshold is not None and k >= 1 and s > contraction_threshold * steps[-2]:
            raise DivergenceError(f"Newton not contracting at beta={beta!r} (ratio {s / steps[-2]:.3g})")
        r = float(np.max(np.abs(residual(pair, mesh, alpha, u))))
        growth = growth + 1 if r > r_old else 0
        if growth >= 3:
            raise DivergenceError(f"Newton residual grew 3 steps in a row at beta={beta!r}")
        scale = 1.0 + float(np.max(np.abs(u)))
        err = s
        if k >= 1 and s <= 0.5 * steps[-2]:
            theta = s / steps[-2]
            err = s * theta / (1.0 - theta)
        if r <= max(tol, _residual_floor(u)) and err <= tol * scale:
            residuals.append(r)
            return NewtonResult(u, k + 1, residuals, steps, True)
    residuals.append(r)
    if max_steps is not None and limit == max_steps:
        return NewtonResult(u, limit, residuals, steps, False)
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations at beta={beta!r}")


# -- continuation ---------------------------------------------------------------


@dataclass
class SolveReport:
    u: np.ndarray
    residual: float
    phase1_nodes: int
    phase2_iterations: int
    total_solves: int
    contraction_factors: list[float]
    phase2_steps: list[float]
    bounds_ok: bool
    flux_residual: float
    elapsed: float
    beta_star_lo: float
    mode: str
    rejected_steps: int = 0
    constants: Optional[TheoreticalConstants] = None
    node_betas: list[float] = field(default_factory=list)
    certified_start: bool = True

    @property
    def u1(self) -> float:
        return float(self.u[0])


def _attach_beta(exc, beta):
    msg = f"{exc} (beta={beta!r})" if "beta=" not in str(exc) else str(exc)
    return type(exc)(msg)


def _adaptive_run(pair, mesh, config, b_lo, u):
    """Phase 1 with step control, then phase 2 at beta* as the last node.

    Each trial node starts from the secant prediction through the last two
    accepted nodes (the plain previous iterate at the first node).  A trial
    is rejected, and the beta step halved, when Newton stops contracting,
    diverges or exhausts its budget; the step doubles after two nodes that
    converged in at most three steps.  A rejected phase-2 attempt at beta*
    sends the run back to phase 1 with a halved step.
    """
    b_hi = config.beta_star_hi
    solves = 0
    rejected = 0
    contractions: list[float] = []
    betas: list[float] = []
    one_step = config.one_step_per_node

    def attempt(beta, start, final):
        if final:
            return newton_solve(pair, mesh, beta, start, config.epsilon, config.max_newton_iter,
                                contraction_threshold=config.contraction_threshold)
        # node tolerance is relative to the size of the state
        tol = config.node_tol * float(np.max(start))
        if one_step:
            return newton_solve(pair, mesh, beta, start, tol, 1, max_steps=1)
        return newton_solve(pair, mesh, beta, start, tol, config.max_newton_iter,
                            contraction_threshold=config.contraction_threshold)

    res = attempt(b_lo, u, False)
    solves += res.iterations
    u = res.u
    betas.append(b_lo)
    contractions.extend(res.contractions)
    beta, step = b_lo, b_lo
    prev_u, prev_beta = None, None
    easy = 0
    while True:
        trial = min(beta + step, b_hi)
        final = trial >= b_hi
        start = u
        if prev_u is not None:
            guess = u + (trial - beta) / (beta - prev_beta) * (u - prev_u)
            if np.all(guess > 0):
                start = guess
        last_error = "Newton budget exhausted"
        try:
            res = attempt(trial, start, final)
            ok = res.converged or (one_step and not final)
        except (DivergenceError, SingularMatrixError, ConvergenceError) as exc:
            ok = False
            last_error = exc
        if not ok:
            rejected += 1
            step = 0.5 * min(step, trial - beta)
            easy = 0
            if step < 1e-12 * beta:
                raise ScheduleError(f"beta step underflowed below 1e-12 beta at beta={beta!r}: {last_error}")
            continue
        solves += res.iterations
        if final:
            return res, solves, rejected, contractions, betas
        contractions.extend(res.contractions)
        prev_u, prev_beta = u, beta
        u, beta = res.u, trial
        betas.append(beta)
        easy = easy + 1 if res.iterations <= 3 else 0
        if easy >= 2:
            step *= 2.0
            easy = 0


def _theoretical_phase1(pair, mesh, consts, u, on_node, chunk):
    b_lo, b_hi, N = consts.beta_star_lo, consts.beta_star_hi, consts.N
    dbeta = (b_hi - b_lo) / N
    done = 0
    while done < N:
        count = min(chunk, N - done)
        try:
            kernels.sweep_power(u, mesh.h, pair.p, pair.q, b_lo + done * dbeta, dbeta, count)
        except ZeroDivisionError as exc:
            raise SingularMatrixError(f"{exc} near beta={b_lo + done * dbeta!r}") from None
        except ArithmeticError as exc:
            raise DivergenceError(f"{exc} near beta={b_lo + done * dbeta!r}") from None
        done += count
        if on_node is not None:
            on_node(done, b_lo + done * dbeta, u)
    return u


def continuation_solve(pair: NonlinearityPair, mesh: Mesh, config: ContinuationConfig, *,
                       on_node: Optional[Callable[[int, float, np.ndarray], None]] = None,
                       chunk: int = 4096) -> SolveReport:
    """Track the positive solution from beta_* to beta* and polish it there.

    In theoretical mode ``on_node(k, beta_k, u)`` is called every ``chunk``
    nodes (and after the last), with ``u`` the current iterate u(k), which
    should lie within delta of phi(beta_k).
    """
    t0 = time.perf_counter()
    b_hi = config.beta_star_hi
    consts = None
    certified = True
    rejected = 0
    contractions: list[float] = []
    betas: list[float] = []
    if config.mode == "theoretical":
        if not isinstance(pair, PowerLawPair):
            raise DomainError("theoretical mode needs a power-law pair")
        consts = theoretical_schedule(pair, mesh, config)
        if consts.N > config.max_theoretical_nodes:
            raise ScheduleError(
                f"certified schedule on beta in [{consts.beta_star_lo!r}, {b_hi!r}] needs N={consts.N} nodes "
                f"(limit {config.max_theoretical_nodes}); "
                "use adaptive mode or a larger alpha*"
            )
        b_lo = consts.beta_star_lo
        u = initial_point(pair, mesh, b_lo, consts.delta)
        if on_node is not None:
            on_node(0, b_lo, u)
        u = _theoretical_phase1(pair, mesh, consts, u, on_node, chunk)
        phase1 = consts.N
        solves = consts.N
        steps = []
        for _ in range(consts.k0):
            _, s = _newton_step(pair, mesh, 1.0 / b_hi, u)
            steps.append(s)
        if not np.all(u > 0):
            raise DivergenceError(f"phase 2 left the positive orthant at beta={b_hi!r}")
        phase2 = consts.k0
        solves += phase2
    else:
        if config.beta_star_lo is None:
            b_lo, delta, certified = select_beta_lower(pair, b_hi, config.max_halvings, SLOPE_FLOOR)
            if not certified:
                delta = math.inf
        else:
            b_lo, delta = config.beta_star_lo, None
        u = initial_point(pair, mesh, b_lo, delta, b_hi)
        res, solves, rejected, contractions, betas = _adaptive_run(pair, mesh, config, b_lo, u)
        phase1 = len(betas)
        u = res.u
        steps = res.steps
        phase2 = res.iterations
    betas.append(b_hi)
    alpha = 1.0 / b_hi
    r = float(np.max(np.abs(residual(pair, mesh, alpha, u))))
    bounds = solution_bounds(pair, alpha)
    return SolveReport(
        u=u,
        residual=r,
        phase1_nodes=phase1,
        phase2_iterations=phase2,
        total_solves=solves,
        contraction_factors=contractions,
        phase2_steps=list(steps),
        bounds_ok=bounds.contains(u),
        flux_residual=flux_balance_residual(pair, mesh, alpha, u),
        elapsed=time.perf_counter() - t0,
        beta_star_lo=b_lo,
        mode=config.mode,
        rejected_steps=rejected,
        constants=consts,
        node_betas=betas,
        certified_start=certified,
    )


@dataclass(frozen=True)
class PathPoint:
    beta: float
    u1: float
    phi_prime_beta: float
    residual: float
    ok: bool
    error: str = ""

    @property
    def alpha(self) -> float:
        return 1.0 / self.beta


def path_trace(pair: NonlinearityPair, mesh: Mesh, config: ContinuationConfig, samples: int,
               beta_lo: Optional[float] = None) -> list[PathPoint]:
    """Oracle solutions at ``samples`` evenly spaced beta in [beta_lo, beta*].

    ``beta_lo`` defaults to ``config.beta_star_lo`` (or beta*/10).  A failing
    sample is kept with ``ok=False`` and the error message.
    """
    if samples < 2:
        raise DomainError("path_trace needs at least two samples")
    b_hi = config.beta_star_hi
    b_lo = beta_lo or config.beta_star_lo or 0.1 * b_hi
    out = []
    for beta in np.linspace(min(b_lo, b_hi), max(b_lo, b_hi), samples):
        beta = float(beta)
        try:
            cs = condition_phi_prime(pair, mesh, 1.0 / beta)
            u = shoot(pair, mesh, cs.u1).u
            r = float(np.max(np.abs(residual(pair, mesh, beta, u, form="beta"))))
            out.append(PathPoint(beta, cs.u1, cs.phi_prime_beta, r, True))
        except (ConvergenceError, BracketError, TrajectoryOverflowError, DomainError) as exc:
            out.append(PathPoint(beta, math.nan, math.nan, math.nan, False, str(exc)))
    return out
