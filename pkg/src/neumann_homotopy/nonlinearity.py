"""Absorption/flux nonlinearity pairs (g1, g2).

A pair is admissible when, for x > 0,

* g1(0) = g2(0) = 0 and g_i', g_i'' > 0, g_i''' >= 0, and
* the ratio g = g1 / g2 is strictly decreasing and maps (0, inf) onto
  (0, inf), so that g has an inverse.

The power-law family g1 = x**p, g2 = x**q with 2 <= p < q is built in and has
closed forms for everything below.  Other pairs are built from two callables
``f(x, order)`` and may be registered by name for use from configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConvergenceError, DomainError

Evaluator = Callable[[np.ndarray | float, int], np.ndarray | float]

_WHICH = ("g1", "g2")
# c_alpha for general pairs: sampled supremum inflated by this factor
C_ALPHA_SAFETY = 1.05


def _check_positive(x, what="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"{what} must be positive, got {x!r}")
    return arr


def _check_order(order):
    if order not in (0, 1, 2, 3):
        raise ValueError(f"unsupported derivative order {order!r}; expected 0..3")


def _as_output(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


class NonlinearityPair:
    """A pair (g1, g2) given by derivative-aware evaluators.

    Parameters
    ----------
    name : str
        Label used in reports.
    g1, g2 : callable
        ``f(x, order)`` returning the ``order``-th derivative (0..3) at
        positive ``x``; must accept numpy arrays.
    p, q : float, optional
        Vanishing orders of g1 and g2 at 0, when known.  ``q`` is used as the
        exponent k in lim g2(e^M x)/g2(x) = e^{kM}.
    """

    def __init__(self, name: str, g1: Evaluator, g2: Evaluator, *, p=None, q=None):
        self.name = name
        self._g1 = g1
        self._g2 = g2
        self.p = p
        self.q = q

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r})"

    # raw vectorised access, no domain checks; used by the solvers
    def g1(self, x, order=0):
        return self._g1(x, order)

    def g2(self, x, order=0):
        return self._g2(x, order)

    def evaluate(self, which: str, order: int, x):
        """Derivative ``order`` of ``which`` ('g1' or 'g2') at positive x."""
        if which not in _WHICH:
            raise ValueError(f"which must be 'g1' or 'g2', got {which!r}")
        _check_order(order)
        _check_positive(x)
        f = self._g1 if which == "g1" else self._g2
        return _as_output(f(np.asarray(x, dtype=float), order), x)

    def g(self, x):
        """The ratio g1(x) / g2(x)."""
        arr = _check_positive(x)
        return _as_output(self._g1(arr, 0) / self._g2(arr, 0), x)

    def g_prime(self, x):
        arr = _check_positive(x)
        g1, g1p = self._g1(arr, 0), self._g1(arr, 1)
        g2, g2p = self._g2(arr, 0), self._g2(arr, 1)
        return _as_output((g1p * g2 - g1 * g2p) / (g2 * g2), x)

    def g_inverse(self, y, rel_tol=1e-12):
        """x > 0 with g(x) = y.

        The bracket is grown geometrically from x = 1 across [1e-12, 1e12],
        solved in log-log coordinates, then polished with Newton steps.
        """
        y = float(y)
        if not y > 0:
            raise DomainError(f"g_inverse needs y > 0, got {y!r}")
        log_y = math.log(y)

        def resid(t):
            x = math.exp(t)
            return math.log(self._g1(x, 0)) - math.log(self._g2(x, 0)) - log_y

        lo = hi = 0.0
        r0 = resid(0.0)
        step = math.log(2.0)
        limit = math.log(1e12)
        if r0 > 0:  # g(1) > y: root lies to the right
            while resid(hi) > 0:
                lo = hi
                hi += step
                if hi > limit:
                    raise BracketError(f"no x <= 1e12 with g(x) = {y!r}; g may not be surjective")
        elif r0 < 0:
            while resid(lo) < 0:
                hi = lo
                lo -= step
                if lo < -limit:
                    raise BracketError(f"no x >= 1e-12 with g(x) = {y!r}; g may not be surjective")
        else:
            return 1.0
        x = math.exp(brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        for _ in range(3):
            err = self.g(x) - y
            if abs(err) <= 0.25 * rel_tol * y:
                break
            x_new = x - err / self.g_prime(x)
            if not x_new > 0:
                break
            x = x_new
        if not abs(self.g(x) - y) <= rel_tol * y:
            raise ConvergenceError(f"g_inverse({y!r}) missed rel_tol={rel_tol!r}")
        return x

    def growth_constant(self, alpha):
        """M = g1'(g^{-1}(alpha)), the exponent in u_n < e^M u_1."""
        return float(self._g1(self.g_inverse(alpha), 1))

    def c_alpha(self, alpha):
        """A constant C >= 1 bounding g2(e^M x)/g2(x) on 0 < x <= g^{-1}(alpha).

        Sampled on a logarithmic grid and inflated by ``C_ALPHA_SAFETY``.
        """
        x_max = self.g_inverse(alpha)
        growth = math.exp(float(self._g1(x_max, 1)))
        xs = x_max * np.logspace(-12.0, 0.0, 241)
        ratio = self._g2(growth * xs, 0) / self._g2(xs, 0)
        return max(1.0, C_ALPHA_SAFETY * float(np.max(ratio)))

    def rho_sup(self, x_max, samples=241):
        """sup of g1' g2 / (g1 g2') over (0, x_max], sampled."""
        xs = x_max * np.logspace(-12.0, 0.0, samples)
        ratio = self._g1(xs, 1) * self._g2(xs, 0) / (self._g1(xs, 0) * self._g2(xs, 1))
        return float(np.max(ratio))

    def to_config(self) -> dict:
        return {"kind": self.name}


def _power_derivative(x, e, order):
    coeff = 1.0
    for j in range(order):
        coeff *= e - j
    if coeff == 0.0:
        return np.zeros_like(x) if np.ndim(x) else 0.0
    return coeff * np.power(x, e - order)


class PowerLawPair(NonlinearityPair):
    """g1 = x**p, g2 = x**q.  Admissible when 2 <= p < q."""

    def __init__(self, p: float, q: float):
        p, q = float(p), float(q)
        if not (p > 0 and q > 0):
            raise DomainError(f"exponents must be positive, got p={p!r}, q={q!r}")
        super().__init__(
            f"power-law(p={p:g}, q={q:g})",
            lambda x, k: _power_derivative(x, p, k),
            lambda x, k: _power_derivative(x, q, k),
            p=p,
            q=q,
        )

    @property
    def admissible(self):
        return 2.0 <= self.p < self.q

    def g_inverse(self, y, rel_tol=1e-12):
        y = float(y)
        if not y > 0:
            raise DomainError(f"g_inverse needs y > 0, got {y!r}")
        if self.p == self.q:
            raise BracketError("g is constant when p == q; it has no inverse")
        return y ** (1.0 / (self.p - self.q))

    def c_alpha(self, alpha):
        # g2(e^M x)/g2(x) = e^{qM} exactly; inf once that leaves binary64
        t = self.q * self.growth_constant(alpha)
        return math.exp(t) if t < 709.0 else math.inf

    def rho_sup(self, x_max, samples=241):
        return self.p / self.q

    def to_config(self):
        return {"kind": "power-law", "p": self.p, "q": self.q}


# -- module-level API ------------------------------------------------------


def evaluate(pair: NonlinearityPair, which: str, order: int, x):
    """Derivative of g1 or g2; raises ``DomainError`` for x <= 0."""
    return pair.evaluate(which, order, x)


def eval_g(pair: NonlinearityPair, x):
    return pair.g(x)


def g_inverse(pair: NonlinearityPair, y, rel_tol=1e-12):
    return pair.g_inverse(y, rel_tol)


def growth_constant(pair: NonlinearityPair, alpha):
    return pair.growth_constant(alpha)


def c_alpha(pair: NonlinearityPair, alpha):
    return pair.c_alpha(alpha)


@dataclass
class ValidationReport:
    """Per-hypothesis pass/fail flags over a sample grid."""

    pair_name: str
    grid: np.ndarray
    checks: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(bool(np.all(v)) for v in self.checks.values())

    def failed(self) -> list[str]:
        return [name for name, v in self.checks.items() if not np.all(v)]


def validate_pair(pair: NonlinearityPair, sample_grid) -> ValidationReport:
    """Check the sign hypotheses and the decrease of g on ``sample_grid``.

    Failures are reported, never raised.  The decrease of g is tested both
    pointwise (g' < 0) and between consecutive sorted grid points.
    """
    grid = np.sort(np.asarray(sample_grid, dtype=float).ravel())
    if grid.size == 0 or not np.all(grid > 0):
        raise DomainError("sample_grid must be a nonempty set of positive abscissae")
    report = ValidationReport(pair.name, grid)
    tiny = np.array([1e-14])
    with np.errstate(all="ignore"):
        for which, f in (("g1", pair.g1), ("g2", pair.g2)):
            report.checks[f"{which}(0)=0"] = np.abs(f(tiny, 0)) <= 1e-12
            report.checks[f"{which}'>0"] = f(grid, 1) > 0
            report.checks[f"{which}''>0"] = f(grid, 2) > 0
            report.checks[f"{which}'''>=0"] = f(grid, 3) >= 0
        g1, g2 = pair.g1(grid, 0), pair.g2(grid, 0)
        dg = pair.g1(grid, 1) * g2 - g1 * pair.g2(grid, 1)
        report.checks["g'<0"] = dg < 0
        gv = g1 / g2
        report.checks["g decreasing"] = gv[1:] < gv[:-1]
    return report


# -- registry of named pairs ------------------------------------------------

PAIR_REGISTRY: dict[str, Callable[..., NonlinearityPair]] = {}


def register_pair(name: str):
    """Decorator registering a factory ``f(**params) -> NonlinearityPair``."""

    def deco(factory):
        PAIR_REGISTRY[name] = factory
        return factory

    return deco


def _cubic_exp_g2(x, order):
    x = np.asarray(x, dtype=float)
    poly = {
        0: x**3,
        1: x**3 + 3 * x**2,
        2: x**3 + 6 * x**2 + 6 * x,
        3: x**3 + 9 * x**2 + 18 * x + 6,
    }[order]
    out = poly * np.exp(x)
    return out if out.ndim else float(out)


@register_pair("cubic-exp")
def cubic_exp_pair(**_params) -> NonlinearityPair:
    """g1 = x^2, g2 = x^3 e^x; g = e^{-x}/x is decreasing and onto (0, inf)."""
    return NonlinearityPair(
        "cubic-exp",
        lambda x, k: _power_derivative(x, 2.0, k),
        _cubic_exp_g2,
        p=2.0,
        q=3.0,
    )


def pair_from_config(cfg: Mapping) -> NonlinearityPair:
    """Build a pair from ``{"kind": "power-law", "p": .., "q": ..}`` or a registered name."""
    kind = cfg.get("kind", "power-law")
    if kind == "power-law":
        try:
            return PowerLawPair(float(cfg["p"]), float(cfg["q"]))
        except KeyError as exc:
            raise ValueError(f"power-law pair needs key {exc.args[0]!r}") from None
    if kind in PAIR_REGISTRY:
        params = {k: v for k, v in cfg.items() if k != "kind"}
        return PAIR_REGISTRY[kind](**params)
    raise ValueError(f"unknown pair kind {kind!r}; known: power-law, {', '.join(sorted(PAIR_REGISTRY))}")
