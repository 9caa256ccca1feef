import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from boltzmann.spectral.dynamics import (
    CollisionOperator,
    FastOperator,
    ZeroOperator,
    bkw_exact,
    bkw_field,
    bkw_time_derivative,
    default_cadence,
    gaussian_mixture,
    maxwellian_values,
    moments,
    relative_l2,
    solve,
    step_count,
    step_euler,
    step_rk3,
)
from boltzmann.spectral.exceptions import ContractError, NumericalError
from boltzmann.spectral.grid import SpectralField, VelocityGrid, analyze, reflect_modes
from boltzmann.spectral.kernel import KernelSpec, QuadratureRule, build_separable_quadrature, q_fast
from boltzmann.spectral.validation import random_band_limited


class BrokenOperator(CollisionOperator):
    name = "broken"

    def evaluate(self, f):
        return SpectralField(f.grid, np.full(f.grid.shape, np.nan, dtype=complex))


class MomentsTest(SimpleTestCase):
    def setUp(self):
        self.grid = VelocityGrid(d=2, N=32, S=3.0)

    def test_maxwellian_moments(self):
        values = maxwellian_values(self.grid, 2.0, [0.3, -0.2], 0.8)
        m = moments(analyze(values, self.grid))
        self.assertAlmostEqual(m.rho, 2.0, places=7)
        assert_allclose(m.u, [0.3, -0.2], atol=1e-7)
        self.assertAlmostEqual(m.temp, 0.8, places=7)
        self.assertTrue(m.valid)
        self.assertEqual(list(m.as_row()), ["rho", "u1", "u2", "temp", "ke", "entropy"])

    def test_mixture_is_normalized(self):
        values = gaussian_mixture(self.grid, [[0.0, -1.0], [0.0, 1.0]], [0.8, 1.1])
        self.assertAlmostEqual(np.sum(values) * self.grid.cell_volume, 1.0, places=12)
        with self.assertRaises(ContractError):
            gaussian_mixture(self.grid, [[0.0, 0.0, 0.0]], [1.0])

    def test_non_positive_temperature(self):
        with self.assertRaises(ContractError):
            maxwellian_values(self.grid, 1.0, [0.0, 0.0], 0.0)


class BKWTest(SimpleTestCase):
    def setUp(self):
        self.grid = VelocityGrid(d=2, N=64, S=3.0)

    def test_unit_mass_and_temperature(self):
        for t in (0.0, 1.0, 5.0):
            m = moments(bkw_field(t, self.grid))
            self.assertAlmostEqual(m.rho, 1.0, places=8)
            self.assertAlmostEqual(m.temp, 1.0, places=7)

    def test_time_derivative(self):
        v = self.grid.points
        h = 1e-5
        fd = (bkw_exact(1.0 + h, v) - bkw_exact(1.0 - h, v)) / (2 * h)
        assert_allclose(bkw_time_derivative(1.0, v), fd, atol=1e-8)

    def test_rejects_negative_time_and_3d(self):
        with self.assertRaises(ContractError):
            bkw_exact(-1.0, self.grid.points)
        with self.assertRaises(ContractError):
            bkw_exact(0.0, np.zeros((3, 4)))


class SolveTest(SimpleTestCase):
    def setUp(self):
        self.grid = VelocityGrid(d=2, N=16, S=3.0)
        self.f0 = analyze(gaussian_mixture(self.grid, [[0.0, -0.8], [0.0, 0.8]], [1.0, 1.0]), self.grid)

    def test_zero_operator_records_at_cadence(self):
        traj = solve(self.f0, ZeroOperator(), 0.01, 0.1, cadence=3, scheme="euler", reference=lambda t: self.f0)
        self.assertEqual(traj.steps, [0, 3, 6, 9, 12])
        assert_allclose(traj.times, [0.0, 0.03, 0.06, 0.09, 0.12])
        self.assertEqual(traj.errors, [0.0] * 5)
        np.testing.assert_array_equal(traj.final_state.coeffs, self.f0.coeffs)
        frame = traj.to_frame()
        self.assertEqual(
            list(frame.columns),
            ["step", "t", "rho", "u1", "u2", "temp", "ke", "entropy", "err_vs_reference"],
        )

    def test_fast_operator_conserves_mass(self):
        rule = QuadratureRule.build(2, 3.0, n_r=8, n_sigma=8)
        for e in (1.0, 0.5):
            kernel = build_separable_quadrature(KernelSpec(d=2, e=e), self.grid, rule)
            traj = solve(self.f0, FastOperator(kernel), 0.01, 0.1, track_q_norm=True)
            masses = [m.rho for m in traj.moments]
            self.assertLess(max(abs(rho - masses[0]) for rho in masses), 1e-12)
            self.assertEqual(len(traj.q_norms), len(traj))

    def test_breakdown_returns_partial_trajectory(self):
        with self.assertRaises(NumericalError) as ctx:
            solve(self.f0, BrokenOperator(), 0.01, 0.1, scheme="euler")
        partial = ctx.exception.partial
        self.assertEqual(len(partial), 1)
        self.assertIn("step 1", str(ctx.exception))

    def test_invalid_arguments(self):
        with self.assertRaises(ContractError):
            solve(self.f0, ZeroOperator(), 0.01, 0.0)
        with self.assertRaises(ContractError):
            solve(self.f0, ZeroOperator(), -0.01, 1.0)
        with self.assertRaises(ContractError):
            solve(self.f0, ZeroOperator(), 0.01, 1.0, scheme="rk4")

    def test_snapshots(self):
        traj = solve(self.f0, ZeroOperator(), 0.05, 0.1)
        names = [name for name, _ in traj.snapshot_documents("demo")]
        self.assertEqual(names, ["demo_0.json", "demo_1.json", "demo_2.json"])

    def test_off_cadence_end_is_rounded_up(self):
        traj = solve(self.f0, ZeroOperator(), 0.01, 0.07, cadence=3, scheme="euler")
        self.assertEqual(traj.steps, [0, 3, 6, 9])
        assert_allclose(np.diff(traj.times), [0.03] * 3)
        self.assertEqual(step_count(0.01, 0.07, 3), 9)
        self.assertEqual(step_count(0.01, 0.09, 3), 9)
        self.assertEqual(step_count(0.01, 0.1), 10)

    def test_non_positive_cadence(self):
        with self.assertRaises(ContractError):
            solve(self.f0, ZeroOperator(), 0.01, 0.1, cadence=-1)

    def test_default_cadence(self):
        self.assertEqual(default_cadence(64), 1)
        self.assertEqual(default_cadence(128), 10)

    def test_relative_l2(self):
        self.assertAlmostEqual(relative_l2(self.f0 * 1.1, self.f0), 0.1, places=12)


class StepperOrderTest(SimpleTestCase):
    def test_euler_and_rk3_differ_at_second_order(self):
        grid = VelocityGrid(d=2, N=16, S=3.0)
        rule = QuadratureRule.build(2, 3.0, n_r=8, n_sigma=8)
        operator = FastOperator(build_separable_quadrature(KernelSpec(d=2), grid, rule))
        f = analyze(gaussian_mixture(grid, [[0.0, -0.8], [0.0, 0.8]], [1.0, 1.0]), grid)

        gaps = [(step_euler(f, operator, dt) - step_rk3(f, operator, dt)).norm() for dt in (0.02, 0.01, 0.005)]
        orders = np.log2(np.array(gaps[:-1]) / np.array(gaps[1:]))
        self.assertTrue(np.all(orders >= 1.8), orders)


def fast_operator(spec, grid, n_sigma=16):
    rule = QuadratureRule.build(grid.d, grid.S, n_r=grid.N, n_sigma=n_sigma)
    return FastOperator(build_separable_quadrature(spec, grid, rule))


def conservation_errors(traj):
    """Largest momentum and relative kinetic-energy drift along a trajectory"""
    momentum = np.array([m.rho * m.u for m in traj.moments])
    ke = np.array([m.ke for m in traj.moments])
    return float(np.max(np.abs(momentum - momentum[0]))), float(np.max(np.abs(ke - ke[0])) / ke[0])


class SymmetryTest(SimpleTestCase):
    def test_real_input_gives_conjugate_symmetric_spectrum(self):
        grid = VelocityGrid(d=2, N=16, S=3.0)
        f = random_band_limited(grid, seed=4)
        for e in (1.0, 0.5):
            operator = fast_operator(KernelSpec(d=2, e=e), grid, n_sigma=8)
            raw = q_fast(f, operator.kernel).coeffs
            scale = np.max(np.abs(raw))
            self.assertLessEqual(np.max(np.abs(raw - np.conj(reflect_modes(raw, 2)))), 1e-10 * scale)

            q = operator(f).coeffs
            self.assertLessEqual(np.max(np.abs(q - np.conj(reflect_modes(q, 2)))), 1e-14 * scale)
            self.assertLessEqual(np.max(np.abs(q - raw)), 1e-10 * scale)


class ConservationTest(SimpleTestCase):
    def test_inelastic_kinetic_energy_decays(self):
        grid = VelocityGrid(d=2, N=16, S=3.0)
        f0 = analyze(gaussian_mixture(grid, [[0.0, -1.5], [0.0, 0.8]], [0.7, 1.0]), grid)
        traj = solve(f0, fast_operator(KernelSpec(d=2, alpha=0.0, e=0.5), grid), 0.01, 0.5, keep_states=False)

        self.assertEqual(traj.steps[-1], 50)
        ke = np.array([m.ke for m in traj.moments])
        self.assertTrue(np.all(np.diff(ke) < 0), np.diff(ke))
        masses = np.array([m.rho for m in traj.moments])
        self.assertLessEqual(np.max(np.abs(masses - masses[0])), 1e-12)

    def test_truncation_errors_shrink_with_resolution(self):
        spec = KernelSpec(d=2, alpha=0.0, e=1.0)
        momentum, energy = [], []
        for N in (8, 16, 32):
            grid = VelocityGrid(d=2, N=N, S=3.0)
            traj = solve(bkw_field(0.0, grid), fast_operator(spec, grid, n_sigma=8), 0.01, 0.2, keep_states=False)
            dp, de = conservation_errors(traj)
            momentum.append(dp)
            energy.append(de)
        for errors in (momentum, energy):
            for coarse, fine in zip(errors, errors[1:]):
                self.assertLessEqual(fine, max(coarse, 1e-12), errors)
