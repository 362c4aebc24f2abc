"""
Tests for the Euler-Maruyama exit-time simulation
"""
import numpy as np
import pytest

from src.errors import SimulationError
from src.geometry import Disk, Rectangle, build_mask
from src.montecarlo import BLOCK_SIZE, DriftPolicy, block_generator, default_max_time, simulate_exit
from src.pde2d import ScalarField, optimal_drift_of, solve_nonlinear
from src.radial import solve_radial

DISK = Disk(radius=1.0)


class TestDriftPolicy:
    """Tests for DriftPolicy"""

    def test_zero(self):
        bx, by = DriftPolicy.zero().beta(np.array([0.3, -0.2]), np.array([0.1, 0.0]))
        assert np.all(bx == 0.0) and np.all(by == 0.0)

    def test_radial_inward(self):
        """beta = -cap x / |x|, zero at the origin"""
        policy = DriftPolicy.radial_inward(2.0)
        bx, by = policy.beta(np.array([0.5, 0.0, 0.0]), np.array([0.0, -0.25, 0.0]))
        np.testing.assert_allclose(bx, [-2.0, 0.0, 0.0])
        np.testing.assert_allclose(by, [0.0, 2.0, 0.0])

    def test_interpolated_sign_flip(self):
        """An optimal PDE drift becomes an inward physical drift"""
        mask = build_mask(DISK, 1 / 16)
        X, Y = mask.coords
        u = ScalarField(mask, np.where(mask.interior, (1.0 - X ** 2 - Y ** 2) / 4.0, 0.0))
        field = optimal_drift_of(u, 1.0)
        bx, by = DriftPolicy.interpolated(field).beta(np.array([0.5]), np.array([0.0]))
        assert bx[0] == pytest.approx(-1.0, abs=1e-9)
        assert by[0] == pytest.approx(0.0, abs=1e-9)
        flipped, _ = DriftPolicy.interpolated(field, sign_flip=False).beta(np.array([0.5]), np.array([0.0]))
        assert flipped[0] == pytest.approx(1.0, abs=1e-9)

    def test_check_cap(self):
        """The sampled peak stays at or below the cap"""
        assert DriftPolicy.radial_inward(1.5).check_cap(DISK) == pytest.approx(1.5)
        assert DriftPolicy.zero().check_cap(DISK) == 0.0

    def test_negative_cap(self):
        with pytest.raises(ValueError):
            DriftPolicy.radial_inward(-1.0)


class TestBlockGenerator:
    """Tests for block_generator"""

    def test_reproducible(self):
        a = block_generator(7, 3).standard_normal(5)
        b = block_generator(7, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_blocks_independent(self):
        a = block_generator(7, 0).standard_normal(5)
        b = block_generator(7, 1).standard_normal(5)
        assert not np.array_equal(a, b)


class TestSimulateExit:
    """Tests for simulate_exit"""

    def test_brownian_disk(self):
        """Zero drift from the centre: E tau = R^2 / 4"""
        est = simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-3, n_paths=4000, seed=1)
        assert est.n_paths == 4000
        assert est.stderr > 0
        assert abs(est.mean - 0.25) < 3 * est.stderr + 0.03

    def test_deterministic(self):
        """Same seed, same estimate; another seed differs"""
        first = simulate_exit(DISK, DriftPolicy.zero(), (0.2, 0.1), dt=1e-3, n_paths=500, seed=42)
        again = simulate_exit(DISK, DriftPolicy.zero(), (0.2, 0.1), dt=1e-3, n_paths=500, seed=42)
        other = simulate_exit(DISK, DriftPolicy.zero(), (0.2, 0.1), dt=1e-3, n_paths=500, seed=43)
        assert first.mean == again.mean
        assert first.stderr == again.stderr
        assert other.mean != first.mean

    def test_trapping_drift_lengthens_exit(self):
        """Inward drift of magnitude 1 keeps paths inside longer, by far more than the noise"""
        free = simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-3, n_paths=2000, seed=5)
        trapped = simulate_exit(DISK, DriftPolicy.radial_inward(1.0), (0.0, 0.0), dt=1e-3,
                                n_paths=2000, seed=5)
        assert trapped.mean - free.mean > 5 * np.hypot(free.stderr, trapped.stderr)
        assert trapped.policy == "radial-inward"

    def test_bias_shrinks_with_step(self):
        """Exit detection at step ends overestimates tau, less so for smaller steps"""
        coarse = simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-2, n_paths=4000, seed=11)
        fine = simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-3, n_paths=4000, seed=11)
        assert coarse.mean > fine.mean
        assert coarse.mean > 0.25

    def test_workers_do_not_change_result(self):
        """Two worker processes give the same estimate as one"""
        n = BLOCK_SIZE + 100
        policy = DriftPolicy.radial_inward(1.0)
        serial = simulate_exit(DISK, policy, (0.0, 0.0), dt=1e-2, n_paths=n, seed=9, workers=1)
        parallel = simulate_exit(DISK, policy, (0.0, 0.0), dt=1e-2, n_paths=n, seed=9, workers=2)
        assert serial.mean == parallel.mean
        assert serial.stderr == parallel.stderr

    @pytest.mark.parametrize("x0", [(1.0, 0.0), (0.0, -1.0), (2.0, 2.0)])
    def test_start_not_inside(self, x0):
        with pytest.raises(SimulationError, match="strictly inside"):
            simulate_exit(DISK, DriftPolicy.zero(), x0, dt=1e-3, n_paths=100, seed=0)

    def test_too_few_paths(self):
        with pytest.raises(SimulationError, match="at least 100"):
            simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-3, n_paths=99, seed=0)

    @pytest.mark.parametrize("dt", [0.0, -1e-3])
    def test_bad_step(self, dt):
        with pytest.raises(SimulationError):
            simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=dt, n_paths=100, seed=0)

    def test_time_budget(self):
        """Paths still inside after max_time raise SimulationError"""
        with pytest.raises(SimulationError, match="max_time"):
            simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-3, n_paths=100, seed=0, max_time=1e-2)

    def test_default_budget_scales_with_domain(self):
        """20 per unit squared inradius, stretched by exp(cap * inradius)"""
        assert default_max_time(DISK, DriftPolicy.zero()) == pytest.approx(20.0)
        assert default_max_time(Disk(radius=5.0), DriftPolicy.zero()) == pytest.approx(500.0)
        assert default_max_time(DISK, DriftPolicy.radial_inward(1.0)) == pytest.approx(20.0 * np.e)

    def test_large_disk(self):
        """Radius 5, zero drift: E tau = 25 / 4 with no explicit budget"""
        est = simulate_exit(Disk(radius=5.0), DriftPolicy.zero(), (0.0, 0.0), dt=1e-2, n_paths=2000, seed=3)
        assert abs(est.mean - 6.25) < 3 * est.stderr + 0.4


@pytest.mark.slow
class TestAcceptanceScale:
    """Monte Carlo against the grid and radial solutions, 10^5 paths"""

    def test_brownian_disk_fine(self):
        """disk(R=1), zero drift, dt=1e-5: within 3 sigma + 0.01 of R^2 / 4"""
        est = simulate_exit(DISK, DriftPolicy.zero(), (0.0, 0.0), dt=1e-5, n_paths=100_000, seed=42, workers=4)
        assert abs(est.mean - 0.25) < 3 * est.stderr + 0.01

    def test_disk_against_radial(self):
        """disk(R=1), cap=1, from the origin: within 3 sigma + 0.01 of u(0)"""
        est = simulate_exit(DISK, DriftPolicy.radial_inward(1.0), (0.0, 0.0), dt=1e-5,
                            n_paths=100_000, seed=42, workers=4)
        exact = solve_radial(2, 1.0, 1.0).u0
        assert abs(est.mean - exact) < 3 * est.stderr + 0.01

    def test_square_against_grid(self):
        """Square of area pi, cap=1: the interpolated optimal drift reproduces the grid centre value"""
        square = Rectangle(width=np.sqrt(np.pi), height=np.sqrt(np.pi))
        mask = build_mask(square, 1 / 64)
        u, _ = solve_nonlinear(mask, 1.0, tol=1e-8)
        policy = DriftPolicy.interpolated(optimal_drift_of(u, 1.0))
        est = simulate_exit(square, policy, (0.0, 0.0), dt=1e-4, n_paths=100_000, seed=7, workers=4)
        assert abs(est.mean - u.node_value(0.0, 0.0)) < 3 * est.stderr + 0.01
