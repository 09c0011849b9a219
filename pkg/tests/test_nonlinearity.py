import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from neumann_homotopy import (
    DomainError,
    NonlinearityPair,
    PowerLawPair,
    c_alpha,
    eval_g,
    evaluate,
    g_inverse,
    growth_constant,
    pair_from_config,
    validate_pair,
)
from neumann_homotopy.nonlinearity import PAIR_REGISTRY


def monomial(e):
    def f(x, k):
        x = np.asarray(x, dtype=float)
        c = math.prod(e - j for j in range(k))
        out = c * x ** (e - k) if c != 0 else np.zeros_like(x)
        return out if out.ndim else float(out)
    return f


class TestEvaluate:
    def test_values(self, pair23):
        assert evaluate(pair23, "g1", 0, 1.5) == 2.25
        assert evaluate(pair23, "g2", 1, 1.0) == 3.0
        assert evaluate(pair23, "g1", 3, 7.0) == 0.0

    def test_array_input(self, pair23):
        np.testing.assert_allclose(evaluate(pair23, "g2", 2, np.array([1.0, 2.0])), [6.0, 12.0])

    def test_domain(self, pair23):
        with pytest.raises(DomainError):
            evaluate(pair23, "g1", 0, 0.0)
        with pytest.raises(DomainError):
            eval_g(pair23, -1.0)

    def test_order(self, pair23):
        with pytest.raises(ValueError):
            evaluate(pair23, "g1", 4, 1.0)

    def test_eval_g(self):
        assert eval_g(PowerLawPair(2, 3), 2.0) == 0.5
        assert eval_g(PowerLawPair(2, 3), 1.0) == 1.0
        assert eval_g(PowerLawPair(3, 5), 2.0) == 0.25

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(0.05, 5.0), order=st.integers(0, 2))
    def test_derivatives_match_finite_differences(self, x, order):
        pair = PAIR_REGISTRY["cubic-exp"]()
        h = 1e-6 * x
        fd = (pair.g2(x + h, order) - pair.g2(x - h, order)) / (2 * h)
        assert pair.g2(x, order + 1) == pytest.approx(fd, rel=1e-6)


class TestInverse:
    @pytest.mark.parametrize("p,q,y,x", [(2, 3, 2, 0.5), (2, 3, 1, 1.0), (2, 4, 4, 0.5)])
    def test_examples(self, p, q, y, x):
        assert g_inverse(PowerLawPair(p, q), y) == pytest.approx(x, rel=1e-14)

    def test_against_bisection_oracle(self):
        pair = PowerLawPair(2, 4)
        ref = brentq(lambda x: x**-2.0 - 4.0, 0.01, 10.0, xtol=1e-15)
        assert g_inverse(pair, 4.0) == pytest.approx(ref, rel=1e-12)

    def test_round_trip(self):
        for p, q in [(2, 3), (2, 5), (3, 4), (2, 2.5)]:
            pair = PowerLawPair(p, q)
            xs = np.geomspace(1e-3, 1e3, 25)
            back = np.array([g_inverse(pair, eval_g(pair, x)) for x in xs])
            np.testing.assert_allclose(back, xs, rtol=1e-12)

    def test_general_pair(self):
        pair = PAIR_REGISTRY["cubic-exp"]()
        for y in (1e-6, 0.3, 1.0, 50.0, 1e6):
            x = g_inverse(pair, y, rel_tol=1e-12)
            assert abs(pair.g(x) - y) <= 1e-12 * y

    def test_domain(self, pair23):
        with pytest.raises(DomainError):
            g_inverse(pair23, 0.0)


class TestGrowth:
    @pytest.mark.parametrize("p,q,alpha,m", [(2, 3, 1, 2.0), (2, 3, 2, 1.0), (3, 4, 1, 3.0)])
    def test_growth_constant(self, p, q, alpha, m):
        assert growth_constant(PowerLawPair(p, q), alpha) == pytest.approx(m, rel=1e-14)

    def test_c_alpha_examples(self, pair23):
        assert c_alpha(pair23, 2.0) == pytest.approx(math.exp(3), rel=1e-14)
        assert c_alpha(pair23, 100.0) == pytest.approx(math.exp(0.06), rel=1e-12)
        assert c_alpha(PowerLawPair(2, 2.5), 1.0) == pytest.approx(math.exp(5), rel=1e-14)

    def test_c_alpha_is_the_exact_ratio(self, pair23):
        m = growth_constant(pair23, 2.0)
        for x in (1e-3, 0.1, 0.5):
            assert c_alpha(pair23, 2.0) == pytest.approx(pair23.g2(math.exp(m) * x) / pair23.g2(x), rel=1e-13)

    def test_monotone_in_alpha(self):
        alphas = np.geomspace(0.5, 1e3, 40)
        for p, q in [(2, 3), (3, 4)]:
            pair = PowerLawPair(p, q)
            m = np.array([growth_constant(pair, a) for a in alphas])
            c = np.array([c_alpha(pair, a) for a in alphas])
            assert np.all(np.diff(m) < 0)
            assert np.all(c >= 1) and np.all(np.diff(c) < 0)
            assert c[-1] < 1.01

    def test_c_alpha_overflow_is_inf(self):
        assert c_alpha(PowerLawPair(3, 4), 0.01) == math.inf

    def test_general_pair_bounds_the_ratio(self):
        pair = PAIR_REGISTRY["cubic-exp"]()
        alpha = 1.0
        m = growth_constant(pair, alpha)
        xs = np.geomspace(1e-6, pair.g_inverse(alpha), 200)
        ratio = pair.g2(math.exp(m) * xs) / pair.g2(xs)
        assert c_alpha(pair, alpha) >= np.max(ratio)


class TestValidation:
    def test_power_law_passes(self, pair23):
        assert validate_pair(pair23, [0.1, 1, 10]).ok

    def test_swapped_exponents_fail(self):
        rep = validate_pair(PowerLawPair(3, 2), [1, 2])
        assert "g decreasing" in rep.failed()

    def test_equal_functions_fail(self):
        f = monomial(2.0)
        rep = validate_pair(NonlinearityPair("same", f, f), [1.0])
        assert "g'<0" in rep.failed()

    def test_low_exponent_fails_third_derivative(self):
        rep = validate_pair(PowerLawPair(1.5, 3), np.geomspace(0.1, 10, 5))
        assert "g1'''>=0" in rep.failed()

    def test_general_pair_passes(self):
        assert validate_pair(PAIR_REGISTRY["cubic-exp"](), np.geomspace(1e-3, 1e2, 50)).ok

    @settings(max_examples=40, deadline=None)
    @given(p=st.floats(2.0, 6.0), dq=st.floats(0.05, 4.0))
    def test_admissible_power_laws(self, p, dq):
        grid = np.geomspace(1e-2, 1e2, 13)
        assert validate_pair(PowerLawPair(p, p + dq), grid).ok
        assert not validate_pair(PowerLawPair(p + dq, p), grid).ok

    def test_empty_grid(self, pair23):
        with pytest.raises(DomainError):
            validate_pair(pair23, [])


class TestConfig:
    def test_power_law(self):
        pair = pair_from_config({"p": 2, "q": 5})
        assert isinstance(pair, PowerLawPair) and (pair.p, pair.q) == (2.0, 5.0)

    def test_registered(self):
        assert pair_from_config({"kind": "cubic-exp"}).name == "cubic-exp"

    def test_unknown(self):
        with pytest.raises(ValueError):
            pair_from_config({"kind": "nope"})
        with pytest.raises(ValueError):
            pair_from_config({"p": 2})
