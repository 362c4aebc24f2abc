"""
Tests for the stencil assembly and the red-black SOR kernel
"""
import numpy as np
import pytest

from src.errors import ConvergenceError
from src.geometry import Disk, Rectangle, build_mask
from src.utils.sor import optimal_omega, red_black_sor
from src.utils.stencil import assemble


@pytest.fixture(scope="module")
def disk_mask():
    return build_mask(Disk(radius=1.0), 1 / 16)


class TestAssemble:
    """Tests for the Shortley-Weller / upwind operator"""

    def test_m_matrix_signs(self, disk_mask):
        """Off-diagonals are nonnegative and the diagonal dominates their sum"""
        rng = np.random.default_rng(3)
        bx = rng.uniform(-2.0, 2.0, disk_mask.shape)
        by = rng.uniform(-2.0, 2.0, disk_mask.shape)
        st = assemble(disk_mask, bx, by)
        sel = disk_mask.interior
        offs = st.a_e + st.a_w + st.a_n + st.a_s
        for a in (st.a_e, st.a_w, st.a_n, st.a_s):
            assert np.all(a[sel] >= 0)
        assert np.all(st.diag[sel] >= offs[sel])

    def test_couplings_across_cuts_vanish(self, disk_mask):
        """A node whose east neighbour is exterior has no east coupling"""
        st = assemble(disk_mask)
        cut = disk_mask.interior & ~disk_mask.neighbor_interior("e")
        assert np.all(st.a_e[cut] == 0.0)

    def test_quadratic_reproduced(self, disk_mask):
        """The operator is exact on the disk torsion (1 - x^2 - y^2) / 4"""
        X, Y = disk_mask.coords
        u = np.where(disk_mask.interior, (1.0 - X ** 2 - Y ** 2) / 4.0, 0.0)
        residual = assemble(disk_mask).residual(u, 1.0)
        assert np.max(np.abs(residual)) < 1e-11

    def test_upwind_direction(self):
        """A positive x-drift couples to the west neighbour, a negative one to the east"""
        mask = build_mask(Rectangle(width=1.0, height=1.0), 0.1)
        plain = assemble(mask)
        sel = mask.interior & mask.neighbor_interior("e") & mask.neighbor_interior("w")
        east = assemble(mask, np.full(mask.shape, 1.0), None)
        west = assemble(mask, np.full(mask.shape, -1.0), None)
        np.testing.assert_allclose(east.a_w[sel] - plain.a_w[sel], 1.0 / mask.h)
        np.testing.assert_allclose(east.a_e[sel], plain.a_e[sel])
        np.testing.assert_allclose(west.a_e[sel] - plain.a_e[sel], 1.0 / mask.h)


class TestRedBlackSor:
    """Tests for red_black_sor"""

    def test_optimal_omega_range(self):
        """Relaxation lies in [1, 2) and grows as the grid is refined"""
        coarse = optimal_omega(0.1, 2.0, 2.0)
        fine = optimal_omega(0.01, 2.0, 2.0)
        assert 1.0 <= coarse < fine < 2.0

    def test_converges_to_tolerance(self, disk_mask):
        """The returned residual is at most tol and matches the field"""
        st = assemble(disk_mask)
        omega = optimal_omega(disk_mask.h, *disk_mask.bounding_extent())
        result = red_black_sor(st, rhs=1.0, tol=1e-10, omega=omega)
        assert result.residual <= 1e-10
        assert np.max(np.abs(st.residual(result.u, 1.0))) == pytest.approx(result.residual)
        assert np.all(result.u[~disk_mask.interior] == 0.0)

    def test_omega_does_not_change_answer(self, disk_mask):
        """Gauss-Seidel and over-relaxation agree to the tolerance"""
        st = assemble(disk_mask)
        gs = red_black_sor(st, tol=1e-11, omega=1.0)
        sor = red_black_sor(st, tol=1e-11, omega=1.8)
        assert sor.iterations < gs.iterations
        assert np.max(np.abs(gs.u - sor.u)) < 1e-10

    def test_budget_exhausted(self, disk_mask):
        """Too few iterations raise ConvergenceError with the last residual"""
        st = assemble(disk_mask)
        with pytest.raises(ConvergenceError) as exc:
            red_black_sor(st, tol=1e-12, omega=1.0, max_iter=20)
        assert exc.value.iterations == 20
        assert exc.value.residual > 1e-12

    def test_warm_start(self, disk_mask):
        """Starting from the solution needs no iterations"""
        st = assemble(disk_mask)
        first = red_black_sor(st, tol=1e-10, omega=1.5)
        second = red_black_sor(st, tol=1e-10, omega=1.5, u0=first.u)
        assert second.iterations == 0

    def test_transient_keeps_optimal_omega(self):
        """The early residual bump at near-optimal omega does not reduce the relaxation"""
        mask = build_mask(Disk(radius=1.0), 1 / 64)
        omega = optimal_omega(mask.h, *mask.bounding_extent())
        result = red_black_sor(assemble(mask), tol=1e-8, omega=omega)
        assert result.omega == omega
        assert result.iterations < 800

    def test_diverging_omega_backs_off(self, disk_mask):
        """omega above 2 blows up; sustained growth pulls it back below 2 and the solve finishes"""
        st = assemble(disk_mask)
        result = red_black_sor(st, tol=1e-6, omega=2.2)
        assert 1.0 < result.omega < 2.0
        assert result.residual <= 1e-6
