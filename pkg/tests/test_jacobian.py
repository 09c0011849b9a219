import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import PAIRS
from neumann_homotopy import (
    DomainError,
    Mesh,
    PowerLawPair,
    SingularMatrixError,
    TridiagonalMatrix,
    assemble,
    condition_phi_prime,
    condition_sweep,
    cramer_identity_check,
    determinant,
    inverse_factorized,
    leading_minors,
    oracle_solution,
    residual,
    shoot,
    solve_tridiagonal,
)
from neumann_homotopy.jacobian import chebyshev_grid
from neumann_homotopy.nonlinearity import PAIR_REGISTRY

U2 = np.array([1.0, 1.5])
ALPHA2 = 13 / 27


@pytest.fixture
def j2(pair23, mesh2):
    return assemble(pair23, mesh2, ALPHA2, U2)


def solved(pq, n, alpha):
    pair, mesh = PowerLawPair(*pq), Mesh(n)
    tr = oracle_solution(pair, mesh, alpha)
    return pair, mesh, tr, assemble(pair, mesh, alpha, tr.u)


class TestAssemble:
    def test_two_nodes(self, j2):
        np.testing.assert_allclose(j2.gamma, [2.0, -0.75], rtol=1e-14)
        np.testing.assert_allclose(j2.to_dense(), [[2.0, -1.0], [-1.0, -0.75]], rtol=1e-14)

    def test_beta_form(self, pair23):
        mesh, u = Mesh(9), np.linspace(0.3, 0.7, 9)
        a = assemble(pair23, mesh, 1.7, u)
        b = assemble(pair23, mesh, 1 / 1.7, u, form="beta")
        np.testing.assert_allclose(a.gamma, b.gamma, rtol=1e-15)

    def test_small_state_limit(self, pair23):
        mesh = Mesh(12)
        g = assemble(pair23, mesh, 1.0, np.full(12, 1e-12)).gamma
        np.testing.assert_allclose(g[1:-1], 2.0, rtol=1e-12)
        assert np.all(g[1:-1] > 2.0)

    def test_domain(self, pair23, mesh2):
        with pytest.raises(DomainError):
            assemble(pair23, mesh2, 1.0, [1.0, -0.1])
        with pytest.raises(DomainError):
            assemble(pair23, mesh2, 0.0, U2)
        with pytest.raises(ValueError):
            assemble(pair23, mesh2, 1.0, U2, form="gamma")

    @pytest.mark.parametrize("pair", [PowerLawPair(2, 3), PowerLawPair(3, 4), PAIR_REGISTRY["cubic-exp"]()],
                             ids=["p2q3", "p3q4", "cubic-exp"])
    def test_matches_finite_difference_jacobian(self, pair):
        mesh = Mesh(7)
        u = np.linspace(0.4, 0.9, 7)
        J = assemble(pair, mesh, 1.3, u).to_dense()
        fd = np.empty_like(J)
        for k in range(7):
            e = np.zeros(7)
            e[k] = 1e-6
            fd[:, k] = (residual(pair, mesh, 1.3, u + e) - residual(pair, mesh, 1.3, u - e)) / 2e-6
        np.testing.assert_allclose(J, fd, atol=1e-9)

    def test_norm_and_matvec(self, j2):
        assert j2.norm_inf() == 3.0
        x = np.array([0.3, -2.0])
        np.testing.assert_allclose(j2.matvec(x), j2.to_dense() @ x)


class TestSolve:
    def test_two_nodes(self, j2):
        # column 2 of the inverse of [[2, -1], [-1, -0.75]], det = -2.5
        x = solve_tridiagonal(j2, [0.0, 1.0])
        np.testing.assert_allclose(x, [-0.4, -0.8], rtol=1e-14)
        np.testing.assert_allclose(x, np.linalg.solve(j2.to_dense(), [0.0, 1.0]), rtol=1e-14)

    def test_zero_rhs(self, j2):
        assert np.all(solve_tridiagonal(j2, np.zeros(2)) == 0)

    def test_round_trip(self):
        pair, mesh, tr, J = solved((2, 3), 50, 1.0)
        x = solve_tridiagonal(J, J.matvec(np.ones(50)))
        np.testing.assert_allclose(x, 1.0, atol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            solve_tridiagonal(TridiagonalMatrix(np.array([1.0, 1.0])), [1.0, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 64), seed=st.integers(0, 2**32 - 1))
    def test_random_against_dense(self, n, seed):
        rng = np.random.default_rng(seed)
        gamma = 2.0 + rng.uniform(0, 0.5, n)
        gamma[0] = 1.0 + rng.uniform(0, 0.5)
        gamma[-1] = rng.uniform(-2, 1)  # negative last pivot, as at solutions
        J = TridiagonalMatrix(gamma)
        b = rng.normal(size=n)
        dense = J.to_dense()
        if np.linalg.cond(dense) > 1e8:
            return
        x = solve_tridiagonal(J, b)
        ref = np.linalg.solve(dense, b)
        np.testing.assert_allclose(x, ref, rtol=1e-10, atol=1e-10 * np.max(np.abs(ref)))
        res = np.max(np.abs(J.matvec(x) - b))
        assert res <= 1e-12 * (np.max(np.abs(b)) + np.max(np.abs(x)) * J.norm_inf())


class TestDeterminant:
    def test_two_nodes(self, j2):
        assert determinant(j2) == pytest.approx(-2.5, rel=1e-14)
        np.testing.assert_allclose(leading_minors(j2), [2.0, -2.5])

    @pytest.mark.parametrize("pq", PAIRS)
    @pytest.mark.parametrize("n", [2, 5, 17, 32])
    def test_at_solutions(self, pq, n):
        pair, mesh, tr, J = solved(pq, n, 1.0)
        minors = leading_minors(J)
        assert minors[-1] < 0
        assert np.all(minors[:-1] > 0)
        np.testing.assert_allclose(minors[:-1], tr.u_prime[1:], rtol=1e-9)
        assert np.linalg.det(J.to_dense()) == pytest.approx(minors[-1], rel=1e-9)


class TestFactorizedInverse:
    def test_two_nodes(self, j2):
        inv = inverse_factorized([1.0, 2.0], -2.5)
        assert inv.entry(1, 1) == pytest.approx(0.3, rel=1e-14)
        np.testing.assert_allclose(inv.dense(), np.linalg.inv(j2.to_dense()), rtol=1e-14)

    def test_symmetric(self):
        _, _, tr, J = solved((2, 3), 12, 1.0)
        inv = inverse_factorized(tr.u_prime, determinant(J))
        for i in range(1, 13):
            for j in range(1, 13):
                assert inv.entry(i, j) == inv.entry(j, i)

    @pytest.mark.parametrize("pq", PAIRS)
    @pytest.mark.parametrize("n", [2, 10, 32])
    def test_against_dense_inverse(self, pq, n):
        _, _, tr, J = solved(pq, n, 1.0)
        inv = inverse_factorized(tr.u_prime, determinant(J))
        ref = np.linalg.inv(J.to_dense())
        np.testing.assert_allclose(inv.dense(), ref, rtol=1e-10, atol=1e-10 * np.max(np.abs(ref)))

    def test_apply(self, rng):
        _, _, tr, J = solved((2, 3), 10, 1.0)
        inv = inverse_factorized(tr.u_prime, determinant(J))
        for _ in range(5):
            x = rng.normal(size=10)
            ref = np.linalg.solve(J.to_dense(), x)
            np.testing.assert_allclose(inv.apply(x), ref, rtol=1e-10, atol=1e-12 * np.max(np.abs(ref)))

    def test_apply_large(self, rng):
        _, _, tr, J = solved((2, 5), 2000, 1.0)
        inv = inverse_factorized(tr.u_prime, determinant(J))
        x = rng.normal(size=2000)
        np.testing.assert_allclose(inv.apply(x), solve_tridiagonal(J, x), rtol=1e-9, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ZeroDivisionError):
            inverse_factorized([1.0, 0.0], -1.0)
        with pytest.raises(ZeroDivisionError):
            inverse_factorized([1.0, 2.0], 0.0)
        with pytest.raises(IndexError):
            inverse_factorized([1.0, 2.0], -2.5).entry(3, 1)


class TestCondition:
    def test_two_nodes(self, pair23, mesh2):
        cs = condition_phi_prime(pair23, mesh2, ALPHA2)
        assert cs.u1 == pytest.approx(1.0, rel=1e-12)
        d = 1e-6
        fd = (shoot(pair23, mesh2, 1 + d).a - shoot(pair23, mesh2, 1 - d).a) / (2 * d)
        assert cs.phi_prime_inf_norm == pytest.approx(2.0 / abs(fd), rel=1e-7)
        assert cs.phi_prime_inf_norm == pytest.approx(2.7, rel=1e-12)

    def test_against_finite_difference_of_solution_map(self, pair23):
        mesh, alpha, d = Mesh(20), 1.0, 1e-6
        up = oracle_solution(pair23, mesh, alpha + d).u
        dn = oracle_solution(pair23, mesh, alpha - d).u
        fd = np.max(np.abs(up - dn)) / (2 * d)
        assert condition_phi_prime(pair23, mesh, alpha).phi_prime_inf_norm == pytest.approx(fd, rel=1e-5)

    def test_beta_form(self, pair23):
        cs = condition_phi_prime(pair23, Mesh(20), 2.0)
        assert cs.beta == 0.5
        assert cs.phi_prime_beta == pytest.approx(4.0 * cs.phi_prime_inf_norm)

    def test_bounded_independently_of_n(self, pair23):
        peaks = [max(s.phi_prime_inf_norm for s in condition_sweep(pair23, Mesh(n), 0.5, 2.0)) for n in (10, 100, 1000)]
        assert max(peaks) / min(peaks) < 1.05

    def test_grid(self):
        g = chebyshev_grid(2.0, 0.5, 33)
        assert g[0] == pytest.approx(0.5) and g[-1] == pytest.approx(2.0)
        assert np.all(np.diff(g) > 0) and len(g) == 33


class TestCramer:
    def test_two_nodes(self, pair23, mesh2):
        rep = cramer_identity_check(pair23, mesh2, ALPHA2)
        assert rep.det_identity < 1e-12 and rep.minor_identity < 1e-12

    @pytest.mark.parametrize("pq", PAIRS)
    def test_fifty_nodes(self, pq):
        assert cramer_identity_check(PowerLawPair(*pq), Mesh(50), 1.0).ok

    def test_non_solution_flagged(self, pair23):
        mesh = Mesh(50)
        u = 2 * oracle_solution(pair23, mesh, 1.0).u
        rep = cramer_identity_check(pair23, mesh, 1.0, u)
        assert not rep.ok and rep.det_identity > 1e-3
