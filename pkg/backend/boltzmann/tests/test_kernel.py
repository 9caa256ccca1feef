import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from boltzmann.spectral.exceptions import ContractError, FormatError
from boltzmann.spectral.grid import SpectralField, VelocityGrid, analyze
from boltzmann.spectral.kernel import (
    KernelSpec,
    QuadratureRule,
    bessel_j0,
    build_separable_quadrature,
    g_hat_closed_form,
    g_hat_integral,
    kernel_document,
    load_kernel,
    q_direct,
    q_fast,
    sinc,
)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0.5, 1.5, grid.shape) * np.exp(-grid.speed_squared / 2)
    return analyze(values, grid)


class KernelSpecTest(SimpleTestCase):
    def test_default_constant_is_inverse_sphere_area(self):
        self.assertAlmostEqual(KernelSpec(d=2).C, 1 / (2 * np.pi))
        self.assertAlmostEqual(KernelSpec(d=3).C, 1 / (4 * np.pi))

    def test_rejects_out_of_range_parameters(self):
        with self.assertRaises(ContractError):
            KernelSpec(d=2, alpha=-1.0)
        with self.assertRaises(ContractError):
            KernelSpec(d=2, e=1.5)
        with self.assertRaises(ContractError):
            KernelSpec(d=2, C=0.0)
        with self.assertRaises(ContractError):
            KernelSpec(d=1)


class SpecialFunctionTest(SimpleTestCase):
    def test_bessel_j0(self):
        self.assertAlmostEqual(bessel_j0(0.0), 1.0)
        self.assertAlmostEqual(bessel_j0(2.404825557695773), 0.0, places=12)
        self.assertAlmostEqual(bessel_j0(1.0), 0.7651976865579666, places=14)
        with self.assertRaises(ContractError):
            bessel_j0(np.nan)

    def test_sinc(self):
        assert_allclose(sinc([0.0, np.pi, np.pi / 2]), [1.0, 0.0, 2 / np.pi], atol=1e-15)


class ClosedFormTest(SimpleTestCase):
    def test_zero_modes(self):
        # G(0, 0) = C |S|^2 R^(d+alpha) / (d + alpha)
        grid = VelocityGrid(d=2, N=8, S=3.0)
        spec = KernelSpec(d=2, alpha=0.5)
        expected = spec.C * (2 * np.pi) ** 2 * grid.R**2.5 / 2.5
        value = g_hat_closed_form(np.zeros(2), np.zeros(2), spec, grid)
        self.assertAlmostEqual(value.real, expected, places=8)
        self.assertEqual(value.imag, 0.0)

    def test_matches_nested_quadrature(self):
        grid = VelocityGrid(d=2, N=8, S=3.0)
        spec = KernelSpec(d=2, alpha=0.0, e=0.5)
        l, m = np.array([1.0, 0.0]), np.array([0.0, -1.0])
        closed = g_hat_closed_form(l, m, spec, grid)
        oracle = g_hat_integral(l, m, spec, grid, tol=1e-8)
        self.assertLess(abs(closed - oracle), 1e-6 * abs(closed))

    def test_batched_evaluation(self):
        grid = VelocityGrid(d=3, N=4, S=1.0)
        spec = KernelSpec(d=3)
        l = np.array([[0, 0, 0], [1, 0, 0], [1, -1, 1]], dtype=float)
        m = np.array([[0, 0, 0], [0, 1, 0], [-1, 0, 0]], dtype=float)
        batch = g_hat_closed_form(l, m, spec, grid)
        self.assertEqual(batch.shape, (3,))
        self.assertAlmostEqual(batch[1], g_hat_closed_form(l[1], m[1], spec, grid))

    def test_mismatched_mode_arrays(self):
        grid = VelocityGrid(d=2, N=8, S=3.0)
        with self.assertRaises(ContractError):
            g_hat_closed_form(np.zeros(3), np.zeros(3), KernelSpec(d=2), grid)


class QuadratureKernelTest(SimpleTestCase):
    def setUp(self):
        self.grid = VelocityGrid(d=2, N=8, S=3.0)
        self.spec = KernelSpec(d=2, alpha=0.0, e=1.0)
        self.rule = QuadratureRule.build(2, 3.0, n_r=8, n_sigma=8)
        self.kernel = build_separable_quadrature(self.spec, self.grid, self.rule)

    def test_term_count_includes_loss_fold(self):
        self.assertEqual(self.kernel.M_total, 8 * 8 + 1)
        self.assertEqual(self.kernel.n_gain_terms, 64)
        self.assertTrue(self.kernel.folded)

    def test_fast_path_matches_cyclic_double_sum(self):
        f = random_field(self.grid)
        fast = q_fast(f, self.kernel)
        direct = q_direct(f, self.spec, kernel=self.kernel, wrap=True)
        scale = np.max(np.abs(fast.coeffs))
        self.assertLess(np.max(np.abs(fast.coeffs - direct.coeffs)), 1e-10 * scale)

    def test_mass_is_conserved(self):
        for e in (1.0, 0.3):
            spec = KernelSpec(d=2, alpha=0.0, e=e)
            kernel = build_separable_quadrature(spec, self.grid, self.rule)
            q = q_fast(random_field(self.grid, seed=4), kernel)
            self.assertLess(abs(q.coeffs.flat[0]), 1e-12 * np.max(np.abs(q.coeffs)))

    def test_fine_rule_approaches_closed_form(self):
        rule = QuadratureRule.build(2, 3.0, n_r=32, n_sigma=32)
        kernel = build_separable_quadrature(self.spec, self.grid, rule)
        fast = kernel.g_fast([1, 0], [0, 1])[0]
        exact = g_hat_closed_form(np.array([1.0, 0.0]), np.array([0.0, 1.0]), self.spec, self.grid)
        self.assertLess(abs(fast - exact), 1e-8 * abs(exact))

    def test_cached_and_streamed_blocks_agree(self):
        streamed = build_separable_quadrature(self.spec, self.grid, self.rule, cache_bytes=0)
        f = random_field(self.grid, seed=2)
        assert_allclose(q_fast(f, streamed).coeffs, q_fast(f, self.kernel).coeffs, atol=1e-12)

    def test_kernel_document_reloads(self):
        restored = load_kernel(kernel_document(self.kernel, encoding="hex"))
        self.assertEqual(restored.M_total, self.kernel.M_total)
        f = random_field(self.grid, seed=5)
        np.testing.assert_array_equal(q_fast(f, restored).coeffs, q_fast(f, self.kernel.materialized()).coeffs)

    def test_kernel_document_with_wrong_term_count(self):
        document = kernel_document(self.kernel)
        document["M_total"] = 3
        with self.assertRaises(FormatError):
            load_kernel(document)

    def test_rule_dimension_must_match(self):
        rule = QuadratureRule.build(3, 3.0, n_r=4, n_sigma=4)
        with self.assertRaises(ContractError):
            build_separable_quadrature(self.spec, self.grid, rule)


class DirectOperatorTest(SimpleTestCase):
    def test_size_limit(self):
        grid = VelocityGrid(d=2, N=128, S=3.0)
        f = SpectralField.zeros(grid)
        with self.assertRaises(ContractError):
            q_direct(f, KernelSpec(d=2))

    def test_galerkin_sum_conserves_mass(self):
        grid = VelocityGrid(d=2, N=8, S=3.0)
        q = q_direct(random_field(grid, seed=1), KernelSpec(d=2, alpha=1.0))
        self.assertLess(abs(q.coeffs.flat[0]), 1e-10 * np.max(np.abs(q.coeffs)))
