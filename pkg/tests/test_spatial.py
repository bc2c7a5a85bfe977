import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracstep import SolverFault
from fracstep.spatial import (
    Boundary,
    SpaceGrid,
    TridiagonalSystem,
    assemble_system,
    discrete_l2,
    laplacian_apply,
    thomas_solve,
)


def random_dominant(rng, n):
    lower = rng.uniform(-1, 1, n)
    upper = rng.uniform(-1, 1, n)
    lower[0] = 0.0
    upper[-1] = 0.0
    sign = rng.choice([-1.0, 1.0], n)
    diag = sign * (np.abs(lower) + np.abs(upper) + rng.uniform(0.1, 2.0, n))
    return TridiagonalSystem(lower, diag, upper)


class TestGrid:
    def test_nodes(self):
        g = SpaceGrid(4)
        np.testing.assert_allclose(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])
        assert g.h == 0.25 and g.size == 5

    def test_min_size(self):
        with pytest.raises(ValueError):
            SpaceGrid(1)

    def test_boundary_coerce(self):
        assert Boundary.coerce("Neumann") is Boundary.NEUMANN
        with pytest.raises(ValueError):
            Boundary.coerce("robin")


class TestLaplacian:
    def test_constant_neumann(self):
        g = SpaceGrid(10)
        np.testing.assert_allclose(laplacian_apply(np.full(11, 2.5), g, "neumann"), 0.0, atol=1e-12)

    def test_quadratic_interior(self):
        g = SpaceGrid(8)
        out = laplacian_apply(g.nodes**2, g, "dirichlet")
        np.testing.assert_allclose(out[1:-1], 2.0, rtol=1e-12)
        assert out[0] == 0.0 and out[-1] == 0.0

    def test_random_against_loop(self):
        rng = np.random.default_rng(0)
        g = SpaceGrid(12)
        u = rng.normal(size=13)
        out = laplacian_apply(u, g, "neumann")
        h2 = g.h**2
        for i in range(1, 12):
            assert out[i] == pytest.approx((u[i + 1] - 2 * u[i] + u[i - 1]) / h2, rel=1e-12)
        assert out[0] == pytest.approx(2 * (u[1] - u[0]) / h2)
        assert out[12] == pytest.approx(2 * (u[11] - u[12]) / h2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            laplacian_apply(np.zeros(4), SpaceGrid(4), "dirichlet")

    def test_symmetric_on_dirichlet_fields(self):
        rng = np.random.default_rng(1)
        g = SpaceGrid(20)
        u, v = rng.normal(size=(2, 21))
        u[[0, -1]] = v[[0, -1]] = 0.0
        lu = laplacian_apply(u, g, "dirichlet")
        lv = laplacian_apply(v, g, "dirichlet")
        assert np.dot(lu, v) == pytest.approx(np.dot(u, lv), rel=1e-12)


class TestAssemble:
    def test_zero_c_is_identity(self):
        for bc in Boundary:
            A = assemble_system(SpaceGrid(6), 0.0, bc).to_dense()
            np.testing.assert_array_equal(A, np.eye(A.shape[0]))

    def test_dirichlet_m4(self):
        g = SpaceGrid(4)
        s = assemble_system(g, g.h**2, "dirichlet")
        np.testing.assert_allclose(s.to_dense(), [[3, -1, 0], [-1, 3, -1], [0, -1, 3]])

    def test_neumann_m2(self):
        g = SpaceGrid(2)
        c = 0.3
        r = c / g.h**2
        expected = [[1 + 2 * r, -2 * r, 0], [-r, 1 + 2 * r, -r], [0, -2 * r, 1 + 2 * r]]
        np.testing.assert_allclose(assemble_system(g, c, "neumann").to_dense(), expected)

    def test_neumann_rows_match_ghost_laplacian(self):
        g = SpaceGrid(7)
        u = np.random.default_rng(5).normal(size=8)
        A = assemble_system(g, 0.4, "neumann")
        np.testing.assert_allclose(A.matvec(u), u - 0.4 * laplacian_apply(u, g, "neumann"), rtol=1e-12)

    @given(st.floats(0, 1e6), st.sampled_from(list(Boundary)), st.integers(2, 40))
    def test_dominant(self, c, bc, M):
        assert assemble_system(SpaceGrid(M), c, bc).is_diagonally_dominant()

    def test_negative_c(self):
        with pytest.raises(ValueError):
            assemble_system(SpaceGrid(4), -1.0, "dirichlet")


class TestThomas:
    def test_identity(self):
        rhs = np.array([1.0, -2.0, 3.5])
        s = TridiagonalSystem(np.zeros(3), np.ones(3), np.zeros(3))
        np.testing.assert_array_equal(thomas_solve(s, rhs), rhs)

    def test_3x3_against_dense(self):
        rng = np.random.default_rng(7)
        s = random_dominant(rng, 3)
        rhs = rng.normal(size=3)
        np.testing.assert_allclose(thomas_solve(s, rhs), np.linalg.solve(s.to_dense(), rhs), rtol=1e-13)

    def test_round_trip_assembled(self):
        g = SpaceGrid(50)
        for bc in Boundary:
            s = assemble_system(g, 0.01, bc)
            v = np.random.default_rng(2).normal(size=s.size)
            np.testing.assert_allclose(thomas_solve(s, s.matvec(v)), v, rtol=0, atol=1e-12 * np.abs(v).max())

    def test_size_one(self):
        s = TridiagonalSystem([0.0], [4.0], [0.0])
        np.testing.assert_allclose(thomas_solve(s, [2.0]), [0.5])

    def test_length_mismatch(self):
        s = TridiagonalSystem(np.zeros(3), np.ones(3), np.zeros(3))
        with pytest.raises(ValueError):
            thomas_solve(s, np.ones(4))

    def test_zero_pivot(self):
        s = TridiagonalSystem([0.0, 1.0], [0.0, 1.0], [1.0, 0.0])
        with pytest.raises(SolverFault):
            thomas_solve(s, [1.0, 1.0])

    @settings(max_examples=40)
    @given(st.integers(1, 300), st.integers(0, 2**31 - 1))
    def test_residual(self, n, seed):
        rng = np.random.default_rng(seed)
        s = random_dominant(rng, n)
        rhs = rng.normal(size=n) * 10
        x = thomas_solve(s, rhs)
        assert np.max(np.abs(s.matvec(x) - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_discrete_l2_constant():
    assert discrete_l2(np.full(11, 2.0), 0.1) == pytest.approx(2.0 * np.sqrt(1.1))
